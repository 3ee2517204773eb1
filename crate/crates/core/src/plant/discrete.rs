use crate::error::{Error, Result};
use crate::scalar::{lit, to_f64, Real};

use super::{flat_derivative, PlantModel, PlantState};

/// RK4 substeps per sample used when nothing else is configured.
pub const DEFAULT_SUBSTEPS: usize = 10;

/// Advances the plant over one sample of length `t_s` with `u` held constant
/// (zero-order hold), using classical RK4 with `substeps` equal substeps.
///
/// This is the reference ("exact") sampled-data map. `u` is read once and
/// never re-evaluated inside the sample.
pub fn exact_discrete_step<T: Real, P: PlantModel<T> + ?Sized>(
    plant: &P,
    s: &PlantState<T>,
    u: T,
    t_s: T,
    substeps: usize,
) -> Result<PlantState<T>> {
    zoh_rk4(plant, s, u, t_s, substeps, 0.0)
}

pub(crate) fn zoh_rk4<T: Real, P: PlantModel<T> + ?Sized>(
    plant: &P,
    s: &PlantState<T>,
    u: T,
    t_s: T,
    substeps: usize,
    t0: f64,
) -> Result<PlantState<T>> {
    if !(t_s > T::zero()) {
        return Err(Error::Config(format!("sampling time must be positive, got {t_s}")));
    }
    if substeps == 0 {
        return Err(Error::Config("substeps must be at least 1".into()));
    }
    let l = plant.internal_dim();
    if s.w.len() != l {
        return Err(Error::Config(format!(
            "state has {} internal components, plant expects {l}",
            s.w.len()
        )));
    }
    let n = l + 2;
    let h = t_s / lit::<T>(substeps as f64);
    let half = lit::<T>(0.5);
    let sixth = lit::<T>(1.0 / 6.0);
    let two = lit::<T>(2.0);

    let mut y = s.to_flat();
    let mut k1 = vec![T::zero(); n];
    let mut k2 = vec![T::zero(); n];
    let mut k3 = vec![T::zero(); n];
    let mut k4 = vec![T::zero(); n];
    let mut tmp = vec![T::zero(); n];

    for step in 0..substeps {
        flat_derivative(plant, &y, u, &mut k1);
        for i in 0..n {
            tmp[i] = y[i] + half * h * k1[i];
        }
        flat_derivative(plant, &tmp, u, &mut k2);
        for i in 0..n {
            tmp[i] = y[i] + half * h * k2[i];
        }
        flat_derivative(plant, &tmp, u, &mut k3);
        for i in 0..n {
            tmp[i] = y[i] + h * k3[i];
        }
        flat_derivative(plant, &tmp, u, &mut k4);
        for i in 0..n {
            y[i] = y[i] + sixth * h * (k1[i] + two * k2[i] + two * k3[i] + k4[i]);
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence {
                time: t0 + to_f64(h) * (step + 1) as f64,
            });
        }
    }
    Ok(PlantState::from_flat(&y, l))
}

/// Second-order Taylor map of the output chain with the extended state held
/// constant over the sample. Sample length is `eps * alpha`.
///
/// Returns only `(x1, x2)`.
pub fn taylor_discrete_step<T: Real, P: PlantModel<T> + ?Sized>(
    plant: &P,
    s: &PlantState<T>,
    u: T,
    eps: T,
    alpha: T,
) -> Result<[T; 2]> {
    if !(eps > T::zero()) {
        return Err(Error::Config(format!("eps must be positive, got {eps}")));
    }
    if !(alpha > T::zero() && alpha <= T::one()) {
        return Err(Error::Config(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    let t = eps * alpha;
    let x3 = plant.a(&s.w, &s.x) + plant.b(&s.w, &s.x) * u;
    let x1 = s.x[0] + t * s.x[1] + t * t * lit::<T>(0.5) * x3;
    let x2 = s.x[1] + t * x3;
    if !(x1.is_finite() && x2.is_finite()) {
        return Err(Error::Input("non-finite Taylor step".into()));
    }
    Ok([x1, x2])
}
