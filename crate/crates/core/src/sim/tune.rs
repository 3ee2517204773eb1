use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::plant::PlantModel;
use crate::scalar::{lit, to_f64, Real};

use super::metrics::{compute_metrics_with, Metrics};
use super::sweep::SweepParam;
use super::trace::Trace;
use super::{run_closed_loop, SimConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TuneParam {
    Epsilon,
    Gamma,
}

impl TuneParam {
    fn as_sweep(self) -> SweepParam {
        match self {
            Self::Epsilon => SweepParam::Epsilon,
            Self::Gamma => SweepParam::Gamma,
        }
    }

    pub fn name(self) -> &'static str {
        self.as_sweep().name()
    }
}

impl std::str::FromStr for TuneParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "epsilon" => Ok(Self::Epsilon),
            "gamma" => Ok(Self::Gamma),
            other => Err(Error::Config(format!(
                "cannot tune '{other}' (expected epsilon or gamma)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TuneAttempt {
    pub value: f64,
    pub accepted: bool,
    pub diverged: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneOutcome<T> {
    pub param: TuneParam,
    pub accepted: Option<T>,
    pub audit: Vec<TuneAttempt>,
}

impl<T: Real> TuneOutcome<T> {
    /// The accepted value, or `NoStableValue` when every attempt failed.
    pub fn value(&self) -> Result<T> {
        self.accepted.ok_or(Error::NoStableValue {
            attempts: self.audit.len(),
        })
    }
}

/// Thresholds used by [`default_stability_predicate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityCriteria {
    /// Bound on |x1|, |x2|, |w| over the whole run.
    pub state_bound: f64,
    /// Required shrink factor of mean |e_u| and of the tracking error
    /// between the first and last tenth of the run.
    pub decay_ratio: f64,
    /// Values below this count as converged regardless of the ratio.
    pub abs_floor: f64,
}

impl Default for StabilityCriteria {
    fn default() -> Self {
        Self {
            state_bound: 100.0,
            decay_ratio: 0.5,
            abs_floor: 1e-3,
        }
    }
}

/// Bounded run whose controller error and tracking error both decay.
pub fn default_stability_predicate<T: Real>(criteria: StabilityCriteria) -> impl Fn(&Trace<T>, &Metrics) -> bool {
    move |trace, _metrics| stability_verdict(trace, &criteria).is_ok()
}

fn stability_verdict<T: Real>(trace: &Trace<T>, c: &StabilityCriteria) -> std::result::Result<(), String> {
    if trace.diverged() {
        return Err("diverged".into());
    }
    let recs = &trace.records;
    let peak = recs
        .iter()
        .map(|r| to_f64(r.x1).abs().max(to_f64(r.x2).abs()).max(to_f64(r.w).abs()))
        .fold(0.0, f64::max);
    if !(peak <= c.state_bound) {
        return Err(format!("state peak {peak} exceeds {}", c.state_bound));
    }
    let ready: Vec<_> = recs.iter().filter(|r| r.estimator_ready).collect();
    if ready.len() < 20 {
        return Err("too few samples to judge".into());
    }
    let tenth = ready.len() / 10;
    let mean = |it: &[&super::trace::TraceRecord<T>], f: &dyn Fn(&super::trace::TraceRecord<T>) -> f64| {
        it.iter().map(|r| f(r)).sum::<f64>() / it.len() as f64
    };
    let head = &ready[..tenth];
    let tail = &ready[ready.len() - tenth..];
    let eu = |r: &super::trace::TraceRecord<T>| to_f64(r.e_u).abs();
    let (eu0, eu1) = (mean(head, &eu), mean(tail, &eu));
    if !(eu1 <= c.decay_ratio * eu0 || eu1 <= c.abs_floor) {
        return Err(format!("controller error not decaying ({eu0:.3e} -> {eu1:.3e})"));
    }
    let r_final = to_f64(recs[recs.len() - 1].r);
    let err0 = (to_f64(recs[0].x1) - r_final).abs();
    let err = |r: &super::trace::TraceRecord<T>| (to_f64(r.x1) - r_final).abs();
    let err1 = mean(tail, &err);
    if !(err1 <= c.decay_ratio * err0 || err1 <= c.abs_floor) {
        return Err(format!("tracking error not decaying ({err0:.3e} -> {err1:.3e})"));
    }
    Ok(())
}

/// Starting at `start`, divides the parameter by 10 until a run satisfies
/// `accept` (at most `max_reductions` reductions). Every attempt is logged.
pub fn tune_parameter<T, P, F>(
    cfg: &SimConfig<T, P>,
    param: TuneParam,
    start: T,
    max_reductions: usize,
    accept: F,
) -> Result<TuneOutcome<T>>
where
    T: Real,
    P: PlantModel<T> + Clone,
    F: Fn(&Trace<T>, &Metrics) -> bool,
    StandardNormal: Distribution<T>,
{
    if !(start > T::zero()) || !start.is_finite() {
        return Err(Error::Config(format!("tuning start must be positive, got {start}")));
    }
    let mut audit = Vec::new();
    let mut value = start;
    for _ in 0..=max_reductions {
        let attempt = param.as_sweep().apply(cfg, value).and_then(|c| {
            let trace = run_closed_loop(&c)?;
            let m = compute_metrics_with(&trace, c.reference.amplitude, &c.metrics)?;
            Ok((trace, m))
        });
        match attempt {
            Ok((trace, m)) => {
                let ok = accept(&trace, &m);
                let detail = if ok {
                    "accepted".to_string()
                } else {
                    stability_verdict(&trace, &StabilityCriteria::default())
                        .err()
                        .unwrap_or_else(|| "rejected by predicate".into())
                };
                audit.push(TuneAttempt {
                    value: to_f64(value),
                    accepted: ok,
                    diverged: trace.diverged(),
                    detail,
                });
                if ok {
                    return Ok(TuneOutcome {
                        param,
                        accepted: Some(value),
                        audit,
                    });
                }
            }
            Err(e) => audit.push(TuneAttempt {
                value: to_f64(value),
                accepted: false,
                diverged: false,
                detail: e.to_string(),
            }),
        }
        value = value / lit(10.0);
    }
    Ok(TuneOutcome {
        param,
        accepted: None,
        audit,
    })
}
