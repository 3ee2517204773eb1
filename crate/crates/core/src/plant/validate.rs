use crate::scalar::{lit, Real};

use super::{exact_discrete_step, PlantModel, PlantState};

/// Box-shaped operating set sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatingBox<T> {
    pub x_max: T,
    pub w_max: T,
    pub points_per_axis: usize,
    /// Horizon (s) for the zero-dynamics decay check.
    pub horizon: T,
}

impl<T: Real> Default for OperatingBox<T> {
    fn default() -> Self {
        Self {
            x_max: lit(2.0),
            w_max: lit(2.0),
            points_per_axis: 5,
            horizon: lit(10.0),
        }
    }
}

impl<T: Real> OperatingBox<T> {
    fn axis(&self, half_width: T) -> Vec<T> {
        let n = self.points_per_axis.max(2);
        (0..n)
            .map(|i| -half_width + half_width * lit::<T>(2.0 * i as f64 / (n - 1) as f64))
            .collect()
    }

    fn grid(&self, dims: &[T]) -> Vec<Vec<T>> {
        let mut pts = vec![Vec::new()];
        for &hw in dims {
            let axis = self.axis(hw);
            pts = pts
                .into_iter()
                .flat_map(|p| {
                    axis.iter().map(move |&v| {
                        let mut q = p.clone();
                        q.push(v);
                        q
                    })
                })
                .collect();
        }
        pts
    }
}

/// Outcome of [`validate_plant`]. Failures are reported, not raised.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantValidation<T> {
    pub min_abs_b: T,
    pub max_abs_b: T,
    pub b_bounded_away_from_zero: bool,
    /// `None` when the plant declares no bound.
    pub b_bound_respected: Option<bool>,
    pub zero_dynamics_decays: bool,
    pub verdicts: Vec<String>,
}

impl<T: Real> PlantValidation<T> {
    pub fn ok(&self) -> bool {
        self.b_bounded_away_from_zero && self.b_bound_respected != Some(false) && self.zero_dynamics_decays
    }
}

/// Pins `x = 0` so that integrating the plant runs `ẇ = f0(w, 0)` only.
struct ZeroDynamics<'a, T, P: ?Sized> {
    plant: &'a P,
    _t: std::marker::PhantomData<T>,
}

impl<T: Real, P: PlantModel<T> + ?Sized> PlantModel<T> for ZeroDynamics<'_, T, P> {
    fn internal_dim(&self) -> usize {
        self.plant.internal_dim()
    }
    fn f0(&self, w: &[T], _x: &[T; 2], out: &mut [T]) {
        self.plant.f0(w, &[T::zero(), T::zero()], out);
    }
    fn a(&self, _w: &[T], _x: &[T; 2]) -> T {
        T::zero()
    }
    fn b(&self, _w: &[T], _x: &[T; 2]) -> T {
        T::zero()
    }
}

/// Checks the standing assumptions on a grid over `grid`: `b` bounded away
/// from zero, the declared bound on `|b|`, and decay of the zero dynamics.
pub fn validate_plant<T: Real, P: PlantModel<T> + ?Sized>(plant: &P, grid: &OperatingBox<T>) -> PlantValidation<T> {
    let l = plant.internal_dim();
    let mut dims = vec![grid.w_max; l];
    dims.extend([grid.x_max, grid.x_max]);

    let mut min_b = T::infinity();
    let mut max_b = T::zero();
    let mut saw_pos = false;
    let mut saw_neg = false;
    for p in grid.grid(&dims) {
        let x = [p[l], p[l + 1]];
        let b = plant.b(&p[..l], &x);
        saw_pos |= b > T::zero();
        saw_neg |= b < T::zero();
        min_b = min_b.min(b.abs());
        max_b = max_b.max(b.abs());
    }

    let mut verdicts = Vec::new();
    let bounded_away = min_b > lit(1e-9) && !(saw_pos && saw_neg);
    if !bounded_away {
        verdicts.push("b not bounded away from zero".to_string());
    }
    let b_bound_respected = plant.b_upper_bound().map(|bb| max_b <= bb * (T::one() + lit(1e-12)));
    if b_bound_respected == Some(false) {
        verdicts.push("declared bound on |b| exceeded".to_string());
    }

    let zero_dynamics_decays = if l == 0 {
        verdicts.push("no internal dynamics".to_string());
        true
    } else {
        let zd = ZeroDynamics {
            plant,
            _t: std::marker::PhantomData,
        };
        let dt = lit::<T>(0.01);
        let steps = (grid.horizon / dt).ceil().to_usize().unwrap_or(1000).max(1);
        let starts = grid.grid(&vec![T::one(); l]);
        let decays = starts.iter().all(|w0| {
            let n0 = w0.iter().fold(T::zero(), |m, v| m.max(v.abs()));
            if n0 == T::zero() {
                return true;
            }
            let mut s = PlantState::new(w0.clone(), [T::zero(), T::zero()]);
            for _ in 0..steps {
                match exact_discrete_step(&zd, &s, T::zero(), dt, 4) {
                    Ok(next) => s = next,
                    Err(_) => return false,
                }
            }
            let n1 = s.w.iter().fold(T::zero(), |m, v| m.max(v.abs()));
            n1 <= lit::<T>(0.1) * n0
        });
        if !decays {
            verdicts.push("zero dynamics do not decay".to_string());
        }
        decays
    };

    PlantValidation {
        min_abs_b: min_b,
        max_abs_b: max_b,
        b_bounded_away_from_zero: bounded_away,
        b_bound_respected,
        zero_dynamics_decays,
        verdicts,
    }
}
