use crate::scalar::{lit, Real};

use super::PlantModel;

/// Reference plants shipped with the toolkit.
///
/// - `LtiTest`: `ẍ1 = a + b u` with constant `a`, `b`; no internal states.
/// - `SyntheticNormalForm`: one internal state, `f0 = -w + x1/2`,
///   `a = 0.1 w - sin(x1) - x2/2`, `b = 1 + sin²(x1)/2` (so `1 ≤ b ≤ 1.5`).
/// - `TwinRotorSurrogate`: yaw-like axis, `ẍ1 = -c1 x2 - c2 x2|x2| + b0 u`.
///   Not identified from hardware; only a qualitative stand-in.
#[derive(Debug, Clone, PartialEq)]
pub enum ReferencePlant<T> {
    LtiTest { a: T, b: T },
    SyntheticNormalForm,
    TwinRotorSurrogate { c1: T, c2: T, b0: T },
}

impl<T: Real> ReferencePlant<T> {
    pub fn synthetic() -> Self {
        Self::SyntheticNormalForm
    }

    pub fn twin_rotor() -> Self {
        Self::TwinRotorSurrogate {
            c1: T::one(),
            c2: lit(0.5),
            b0: lit(2.0),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::LtiTest { .. } => "lti_test",
            Self::SyntheticNormalForm => "synthetic_normal_form",
            Self::TwinRotorSurrogate { .. } => "twin_rotor_surrogate",
        }
    }
}

impl<T: Real> PlantModel<T> for ReferencePlant<T> {
    fn internal_dim(&self) -> usize {
        match self {
            Self::SyntheticNormalForm => 1,
            _ => 0,
        }
    }

    fn f0(&self, w: &[T], x: &[T; 2], out: &mut [T]) {
        if let Self::SyntheticNormalForm = self {
            out[0] = -w[0] + lit::<T>(0.5) * x[0];
        }
    }

    fn a(&self, w: &[T], x: &[T; 2]) -> T {
        match *self {
            Self::LtiTest { a, .. } => a,
            Self::SyntheticNormalForm => lit::<T>(0.1) * w[0] - x[0].sin() - lit::<T>(0.5) * x[1],
            Self::TwinRotorSurrogate { c1, c2, .. } => -c1 * x[1] - c2 * x[1] * x[1].abs(),
        }
    }

    fn b(&self, _w: &[T], x: &[T; 2]) -> T {
        match *self {
            Self::LtiTest { b, .. } => b,
            Self::SyntheticNormalForm => {
                let s = x[0].sin();
                T::one() + lit::<T>(0.5) * s * s
            }
            Self::TwinRotorSurrogate { b0, .. } => b0,
        }
    }

    fn b_upper_bound(&self) -> Option<T> {
        Some(match *self {
            Self::LtiTest { b, .. } => b.abs(),
            Self::SyntheticNormalForm => lit(1.5),
            Self::TwinRotorSurrogate { b0, .. } => b0.abs(),
        })
    }
}
