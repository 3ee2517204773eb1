use crate::linalg::Mat;
use crate::scalar::{to_f64, Real};

use super::trace::Trace;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovOptions {
    /// Steps with ‖x - (r, 0)‖ below this radius are not judged.
    pub exclude_radius: f64,
    /// Steps before this time (observer transient) are not judged.
    pub start_time: f64,
    /// Fraction of decreasing steps required to pass.
    pub required_fraction: f64,
}

impl Default for LyapunovOptions {
    fn default() -> Self {
        Self {
            exclude_radius: 0.01,
            start_time: 0.5,
            required_fraction: 0.99,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovReport {
    pub steps_considered: usize,
    pub steps_decreasing: usize,
    pub fraction_decreasing: f64,
    /// Largest single-step increase of V̄ among the judged steps.
    pub max_increase: f64,
    pub diverged: bool,
    /// Diverged, or decrease fraction below the required level.
    pub flagged: bool,
}

/// Per-step change of `V̄ = x̃ᵀ P x̃ + e_u²/2` along a trace, with
/// `x̃ = (x1 - r, x2)` and `e_u` taken on the true states.
pub fn lyapunov_diagnostic<T: Real>(trace: &Trace<T>, p: &Mat<T>, opts: &LyapunovOptions) -> LyapunovReport {
    let p = [
        [to_f64(p[(0, 0)]), to_f64(p[(0, 1)])],
        [to_f64(p[(1, 0)]), to_f64(p[(1, 1)])],
    ];
    let state = |i: usize| {
        let rec = &trace.records[i];
        let e = [to_f64(rec.x1) - to_f64(rec.r), to_f64(rec.x2)];
        let vx = e[0] * (p[0][0] * e[0] + p[0][1] * e[1]) + e[1] * (p[1][0] * e[0] + p[1][1] * e[1]);
        let eu = to_f64(rec.e_u_true);
        (vx + 0.5 * eu * eu, (e[0] * e[0] + e[1] * e[1]).sqrt(), to_f64(rec.t))
    };

    let mut considered = 0;
    let mut decreasing = 0;
    let mut max_increase = f64::NEG_INFINITY;
    for i in 0..trace.records.len().saturating_sub(1) {
        let (v0, norm, t) = state(i);
        if t < opts.start_time || norm < opts.exclude_radius {
            continue;
        }
        let (v1, _, _) = state(i + 1);
        let dv = v1 - v0;
        considered += 1;
        if dv <= 0.0 {
            decreasing += 1;
        }
        max_increase = max_increase.max(dv);
    }
    let fraction = if considered == 0 {
        1.0
    } else {
        decreasing as f64 / considered as f64
    };
    let diverged = trace.diverged();
    LyapunovReport {
        steps_considered: considered,
        steps_decreasing: decreasing,
        fraction_decreasing: fraction,
        max_increase: if considered == 0 { 0.0 } else { max_increase },
        diverged,
        flagged: diverged || fraction < opts.required_fraction,
    }
}
