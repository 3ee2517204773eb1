//! Normal-form plants with relative degree two.
//!
//! A plant is described by internal dynamics `ẇ = f0(w, x)` and an output
//! chain `ẋ1 = x2`, `ẋ2 = a(w, x) + b(w, x) u` with output `y = x1`.

mod catalog;
pub(crate) mod discrete;
mod validate;

pub use catalog::ReferencePlant;
pub use discrete::{exact_discrete_step, taylor_discrete_step, DEFAULT_SUBSTEPS};
pub use validate::{validate_plant, OperatingBox, PlantValidation};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Internal states `w` and output-chain states `x = (x1, x2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantState<T> {
    pub w: Vec<T>,
    pub x: [T; 2],
}

impl<T: Real> PlantState<T> {
    pub fn new(w: Vec<T>, x: [T; 2]) -> Self {
        Self { w, x }
    }

    pub fn zeros(internal_dim: usize) -> Self {
        Self {
            w: vec![T::zero(); internal_dim],
            x: [T::zero(); 2],
        }
    }

    pub fn output(&self) -> T {
        self.x[0]
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(self.w.iter()).all(|v| v.is_finite())
    }

    /// Largest absolute entry over `w` and `x`.
    pub fn max_abs(&self) -> T {
        self.x
            .iter()
            .chain(self.w.iter())
            .fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub(crate) fn to_flat(&self) -> Vec<T> {
        let mut v = self.w.clone();
        v.extend_from_slice(&self.x);
        v
    }

    pub(crate) fn from_flat(flat: &[T], internal_dim: usize) -> Self {
        Self {
            w: flat[..internal_dim].to_vec(),
            x: [flat[internal_dim], flat[internal_dim + 1]],
        }
    }
}

/// Behavioral interface of a normal-form plant. Implementations are pure.
pub trait PlantModel<T: Real>: Send + Sync {
    fn internal_dim(&self) -> usize;

    /// Internal drift `f0(w, x)`, written into `out` (length `internal_dim`).
    fn f0(&self, w: &[T], x: &[T; 2], out: &mut [T]);

    fn a(&self, w: &[T], x: &[T; 2]) -> T;

    fn b(&self, w: &[T], x: &[T; 2]) -> T;

    /// Known upper bound on `|b|`, if declared.
    fn b_upper_bound(&self) -> Option<T> {
        None
    }

    /// Extended state `x3 = a + b u`.
    fn extended_state(&self, s: &PlantState<T>, u: T) -> T {
        self.a(&s.w, &s.x) + self.b(&s.w, &s.x) * u
    }
}

/// Time derivative of the plant state under input `u`.
pub fn derivative<T: Real, P: PlantModel<T> + ?Sized>(plant: &P, s: &PlantState<T>, u: T) -> Result<PlantState<T>> {
    if s.w.len() != plant.internal_dim() {
        return Err(Error::Config(format!(
            "state has {} internal components, plant expects {}",
            s.w.len(),
            plant.internal_dim()
        )));
    }
    let mut dw = vec![T::zero(); s.w.len()];
    plant.f0(&s.w, &s.x, &mut dw);
    let dx2 = plant.a(&s.w, &s.x) + plant.b(&s.w, &s.x) * u;
    Ok(PlantState {
        w: dw,
        x: [s.x[1], dx2],
    })
}

/// Flat-vector derivative used by the integrators; `flat = [w, x1, x2]`.
pub(crate) fn flat_derivative<T: Real, P: PlantModel<T> + ?Sized>(plant: &P, flat: &[T], u: T, out: &mut [T]) {
    let l = plant.internal_dim();
    let w = &flat[..l];
    let x = [flat[l], flat[l + 1]];
    plant.f0(w, &x, &mut out[..l]);
    out[l] = x[1];
    out[l + 1] = plant.a(w, &x) + plant.b(w, &x) * u;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lti_equilibrium_has_zero_derivative() {
        let p = ReferencePlant::LtiTest { a: 0.0, b: 1.0 };
        let d = derivative(&p, &PlantState::zeros(0), 0.0).unwrap();
        assert_eq!(d.x, [0.0, 0.0]);
        assert!(d.w.is_empty());
    }

    #[test]
    fn lti_derivative_arithmetic() {
        let p = ReferencePlant::LtiTest { a: 2.0, b: 0.5 };
        let d = derivative(&p, &PlantState::new(vec![], [1.0, 3.0]), 4.0).unwrap();
        assert_eq!(d.x, [3.0, 4.0]);
    }

    #[test]
    fn synthetic_matches_closed_forms() {
        let p = ReferencePlant::<f64>::synthetic();
        for &(w, x1, x2, u) in &[
            (0.0, 0.0, 0.0, 0.0),
            (0.3, -1.2, 0.7, 2.0),
            (-1.5, 1.9, -0.4, -0.3),
            (2.0, 0.5, 2.0, 1.0),
        ] {
            let d = derivative(&p, &PlantState::new(vec![w], [x1, x2]), u).unwrap();
            let f0 = -w + 0.5 * x1;
            let a = 0.1 * w - f64::sin(x1) - 0.5 * x2;
            let b = 1.0 + 0.5 * f64::sin(x1).powi(2);
            assert!((d.w[0] - f0).abs() < 1e-15);
            assert_eq!(d.x[0], x2);
            assert!((d.x[1] - (a + b * u)).abs() < 1e-14);
        }
    }

    #[test]
    fn dimension_mismatch_is_config_error() {
        let p = ReferencePlant::<f64>::synthetic();
        let err = derivative(&p, &PlantState::zeros(0), 0.0).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }
}
