use std::fmt;
use std::str::FromStr;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::plant::PlantModel;
use crate::scalar::{to_f64, Real};

use super::metrics::{compute_metrics_with, Metrics};
use super::noise::derive_seed;
use super::{run_closed_loop, EstimatorKind, SimConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepParam {
    Epsilon,
    Gamma,
    DdSamples,
    NoiseVariance,
    SamplingTime,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            Self::Epsilon => "epsilon",
            Self::Gamma => "gamma",
            Self::DdSamples => "dd_samples",
            Self::NoiseVariance => "noise_variance",
            Self::SamplingTime => "T",
        }
    }

    /// Applies `value` to a copy of `cfg`.
    pub fn apply<T: Real, P: Clone>(self, cfg: &SimConfig<T, P>, value: T) -> Result<SimConfig<T, P>> {
        let mut c = cfg.clone();
        match self {
            Self::Epsilon => match &mut c.estimator {
                EstimatorKind::Hgo(h) => h.epsilon = value,
                other => {
                    return Err(Error::Config(format!(
                        "cannot sweep epsilon with estimator '{}'",
                        other.id()
                    )))
                }
            },
            Self::Gamma => c.controller.gamma = value,
            Self::DdSamples => {
                let n = value
                    .to_usize()
                    .filter(|&n| T::from_usize(n) == Some(value))
                    .ok_or_else(|| Error::Config(format!("dd_samples must be an integer, got {value}")))?;
                match &mut c.estimator {
                    EstimatorKind::DataDriven { n_samples } => *n_samples = n,
                    other => {
                        return Err(Error::Config(format!(
                            "cannot sweep dd_samples with estimator '{}'",
                            other.id()
                        )))
                    }
                }
            }
            Self::NoiseVariance => {
                c.noise.enabled = true;
                c.noise.variance = value;
            }
            Self::SamplingTime => c.sampling_time = value,
        }
        Ok(c)
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "epsilon" => Self::Epsilon,
            "gamma" => Self::Gamma,
            "dd_samples" => Self::DdSamples,
            "noise_variance" => Self::NoiseVariance,
            "T" | "sampling_time" => Self::SamplingTime,
            other => {
                return Err(Error::Config(format!(
                    "unknown sweep parameter '{other}' (expected epsilon, gamma, dd_samples, noise_variance, T)"
                )))
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SeedPolicy {
    /// Every run uses the configured seed.
    Shared,
    /// Run `i` uses `derive_seed(seed, i)`.
    #[default]
    PerRun,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SweepOptions {
    pub seed_policy: SeedPolicy,
    /// Worker cap; `None` uses rayon's default.
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub seed: u64,
    pub metrics: Metrics,
}

/// One independent run per value; rows come back in `values` order.
pub fn sweep<T, P>(cfg: &SimConfig<T, P>, param: SweepParam, values: &[T], opts: &SweepOptions) -> Result<Vec<SweepRow>>
where
    T: Real,
    P: PlantModel<T> + Clone,
    StandardNormal: Distribution<T>,
{
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    let mut runs = Vec::with_capacity(values.len());
    for (i, &v) in values.iter().enumerate() {
        let mut c = param.apply(cfg, v)?;
        if opts.seed_policy == SeedPolicy::PerRun {
            c.noise.seed = derive_seed(cfg.noise.seed, i as u64);
        }
        c.validate()?;
        runs.push((v, c));
    }
    let work = || -> Result<Vec<SweepRow>> {
        runs.par_iter()
            .map(|(v, c)| {
                let trace = run_closed_loop(c)?;
                Ok(SweepRow {
                    value: to_f64(*v),
                    seed: c.noise.seed,
                    metrics: compute_metrics_with(&trace, c.reference.amplitude, &c.metrics)?,
                })
            })
            .collect()
    };
    match opts.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    }
}
