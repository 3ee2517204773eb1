//! Outer pole-placement loop with integral action and the model-free
//! dynamic input update `u(k+1) = u(k) + γ (v - x̂3)`.
//!
//! `outer_loop_v`, `integrator_step` and `dynamic_update` never see the
//! plant. `ideal_fl_control` does, and exists only as a test oracle.

use crate::error::{Error, Result};
use crate::linalg::{solve_continuous_lyapunov, Mat};
use crate::plant::{PlantModel, PlantState};
use crate::scalar::{lit, Real};

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerConfig<T> {
    pub k1: T,
    pub k2: T,
    pub ki: T,
    pub gamma: T,
    /// `(u_min, u_max)` clamp on the held input.
    pub u_limits: Option<(T, T)>,
    /// Clamp on `|σ|`; off when `None`.
    pub anti_windup: Option<T>,
    pub u0: T,
}

impl<T: Real> ControllerConfig<T> {
    /// k1 = 2, k2 = 4, Ki = 0.001, γ = 0.0003, no clamps, u(0) = 0.
    pub fn paper_defaults() -> Self {
        Self {
            k1: lit(2.0),
            k2: lit(4.0),
            ki: lit(0.001),
            gamma: lit(0.0003),
            u_limits: None,
            anti_windup: None,
            u0: T::zero(),
        }
    }

    /// Checks `γ > 0` and, when `b_bar` is known, `γ < 1 / b_bar`.
    pub fn validate(&self, b_bar: Option<T>) -> Result<()> {
        if !(self.gamma > T::zero()) {
            return Err(Error::Config(format!("gamma must be positive, got {}", self.gamma)));
        }
        if let Some(bb) = b_bar {
            if !validate_gamma(self.gamma, bb) {
                return Err(Error::Config(format!(
                    "gamma = {} violates gamma < 1/b_bar = {}",
                    self.gamma,
                    T::one() / bb
                )));
            }
        }
        if let Some((lo, hi)) = self.u_limits {
            if !(lo < hi) {
                return Err(Error::Config("u_min must be below u_max".into()));
            }
        }
        if let Some(b) = self.anti_windup {
            if !(b > T::zero()) {
                return Err(Error::Config("anti-windup bound must be positive".into()));
            }
        }
        Ok(())
    }

    fn clamp_u(&self, u: T) -> T {
        match self.u_limits {
            Some((lo, hi)) => u.max(lo).min(hi),
            None => u,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerState<T> {
    /// Input currently held by the zero-order hold.
    pub u: T,
    /// Integrator accumulator.
    pub sigma: T,
    /// Last controller error `v - x̂3`.
    pub e_u: T,
}

impl<T: Real> ControllerState<T> {
    pub fn new(cfg: &ControllerConfig<T>) -> Self {
        Self {
            u: cfg.clamp_u(cfg.u0),
            sigma: T::zero(),
            e_u: T::zero(),
        }
    }
}

/// `v = -k1 (x̂1 - r) - k2 x̂2 + Ki σ`.
pub fn outer_loop_v<T: Real>(xhat: (T, T), r: T, sigma: T, cfg: &ControllerConfig<T>) -> T {
    -cfg.k1 * (xhat.0 - r) - cfg.k2 * xhat.1 + cfg.ki * sigma
}

/// Forward-Euler integrator `σ⁺ = σ + T (r - x̂1)`, optionally clamped.
pub fn integrator_step<T: Real>(sigma: T, r: T, x1_hat: T, t_s: T, anti_windup: Option<T>) -> T {
    let next = sigma + t_s * (r - x1_hat);
    match anti_windup {
        Some(b) => next.max(-b).min(b),
        None => next,
    }
}

/// `e_u = v - x̂3`, `u⁺ = clamp(u + γ e_u)`. The integrator is untouched.
pub fn dynamic_update<T: Real>(
    state: ControllerState<T>,
    v: T,
    x3_hat: T,
    cfg: &ControllerConfig<T>,
) -> ControllerState<T> {
    let e_u = v - x3_hat;
    ControllerState {
        u: cfg.clamp_u(state.u + cfg.gamma * e_u),
        sigma: state.sigma,
        e_u,
    }
}

/// Exact linearizing input `u = (v - a) / b`. Needs the plant model.
pub fn ideal_fl_control<T: Real, P: PlantModel<T> + ?Sized>(plant: &P, s: &PlantState<T>, v: T) -> Result<T> {
    let b = plant.b(&s.w, &s.x);
    if !(b.abs() >= lit(1e-9)) {
        return Err(Error::SingularPlant {
            b_abs: b.abs().to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok((v - plant.a(&s.w, &s.x)) / b)
}

/// True iff `0 < γ < 1 / b_bar`.
pub fn validate_gamma<T: Real>(gamma: T, b_bar: T) -> bool {
    gamma > T::zero() && b_bar > T::zero() && gamma < T::one() / b_bar
}

/// Closed-loop matrix of the double integrator under `K = [-k1, -k2]`.
pub fn closed_loop_matrix<T: Real>(k1: T, k2: T) -> Mat<T> {
    Mat::from_rows(&[&[T::zero(), T::one()], &[-k1, -k2]])
}

/// Solves `(A + BK)ᵀ P + P (A + BK) = -I` for the double integrator.
pub fn lyapunov_design<T: Real>(k1: T, k2: T) -> Result<Mat<T>> {
    if !(k1 > T::zero() && k2 > T::zero()) {
        return Err(Error::Design(format!(
            "closed loop not Hurwitz for k1 = {k1}, k2 = {k2}"
        )));
    }
    let a = closed_loop_matrix(k1, k2);
    let p = solve_continuous_lyapunov(&a, &Mat::identity(2))?;
    // Symmetrize away round-off.
    let off = (p[(0, 1)] + p[(1, 0)]) * lit(0.5);
    Ok(Mat::from_rows(&[&[p[(0, 0)], off], &[off, p[(1, 1)]]]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::ReferencePlant;

    fn cfg() -> ControllerConfig<f64> {
        ControllerConfig::paper_defaults()
    }

    #[test]
    fn outer_loop_examples() {
        let c = ControllerConfig { ki: 0.0, ..cfg() };
        assert!((outer_loop_v((0.3, 0.0), 0.0, 0.0, &c) + 0.6).abs() < 1e-15);
        assert_eq!(outer_loop_v((0.3, 0.0), 0.3, 0.0, &c), 0.0);
    }

    #[test]
    fn integrator_examples() {
        assert_eq!(integrator_step(0.7, 0.2, 0.2, 1e-3, None), 0.7);
        assert!((integrator_step::<f64>(0.0, 0.3, 0.0, 1e-3, None) - 3e-4).abs() < 1e-18);
        assert_eq!(integrator_step(0.99, 10.0, 0.0, 1.0, Some(1.0)), 1.0);
    }

    #[test]
    fn dynamic_update_examples() {
        let c = ControllerConfig { gamma: 0.0003, ..cfg() };
        let s = ControllerState::new(&c);
        let next = dynamic_update(s, 10.0, 0.0, &c);
        assert!((next.u - 0.003).abs() < 1e-15);
        assert_eq!(next.e_u, 10.0);

        let frozen = ControllerConfig { gamma: 0.0, ..cfg() };
        let s = ControllerState {
            u: 1.25,
            sigma: 0.0,
            e_u: 0.0,
        };
        assert_eq!(dynamic_update(s, 3.0, -2.0, &frozen).u, 1.25);
    }

    #[test]
    fn input_clamp() {
        let c = ControllerConfig {
            gamma: 1.0,
            u_limits: Some((-0.5, 0.5)),
            ..cfg()
        };
        let s = ControllerState::new(&c);
        assert_eq!(dynamic_update(s, 10.0, 0.0, &c).u, 0.5);
        assert_eq!(dynamic_update(s, -10.0, 0.0, &c).u, -0.5);
    }

    #[test]
    fn ideal_fl_examples() {
        let s = PlantState::zeros(0);
        assert_eq!(
            ideal_fl_control(&ReferencePlant::LtiTest { a: 0.0, b: 1.0 }, &s, 5.0).unwrap(),
            5.0
        );
        assert_eq!(
            ideal_fl_control(&ReferencePlant::LtiTest { a: 2.0, b: 0.5 }, &s, 0.0).unwrap(),
            -4.0
        );
        assert!(matches!(
            ideal_fl_control(&ReferencePlant::LtiTest { a: 2.0, b: 1e-12 }, &s, 0.0),
            Err(Error::SingularPlant { .. })
        ));
    }

    #[test]
    fn gamma_rule() {
        assert!(validate_gamma(0.0003, 1.5));
        assert!(!validate_gamma(1.0, 1.5));
        assert!(!validate_gamma(1.0 / 1.5, 1.5));
        assert!(!validate_gamma(0.0, 1.5));
        assert!(cfg().validate(Some(1.5)).is_ok());
        assert!(ControllerConfig { gamma: 1.0, ..cfg() }.validate(Some(1.5)).is_err());
    }

    #[test]
    fn lyapunov_design_properties() {
        let p = lyapunov_design(2.0, 4.0).unwrap();
        let a = closed_loop_matrix(2.0, 4.0);
        let res = a.transpose().matmul(&p).add(&p.matmul(&a)).add(&Mat::identity(2));
        assert!(res.max_abs() <= 1e-10);
        assert_eq!(p[(0, 1)], p[(1, 0)]);
        assert!(p[(0, 0)] > 0.0 && p[(0, 0)] * p[(1, 1)] - p[(0, 1)] * p[(0, 1)] > 0.0);
        assert!(matches!(lyapunov_design(-1.0, 4.0), Err(Error::Design(_))));
        assert!(lyapunov_design(2.0, 0.0).is_err());
    }
}
