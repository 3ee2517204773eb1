//! Sampled-data closed loop: continuous plant under zero-order hold, discrete
//! estimator and controller, noise injection, metrics and experiment drivers.

mod lyapunov;
mod metrics;
mod noise;
mod ops;
mod sweep;
mod trace;
mod tune;

pub use lyapunov::{lyapunov_diagnostic, LyapunovOptions, LyapunovReport};
pub use metrics::{
    compute_metrics, compute_metrics_with, write_metrics_csv, Metrics, MetricsConfig, METRICS_CSV_HEADER,
};
pub use noise::{derive_seed, inject_noise, NoiseSource};
pub use ops::op_count;
pub use sweep::{sweep, SeedPolicy, SweepOptions, SweepParam, SweepRow};
pub use trace::{DivergenceEvent, Trace, TraceRecord, TRACE_CSV_HEADER};
pub use tune::{default_stability_predicate, tune_parameter, StabilityCriteria, TuneAttempt, TuneOutcome, TuneParam};

use rand_distr::{Distribution, StandardNormal};

use crate::controller::{
    dynamic_update, ideal_fl_control, integrator_step, outer_loop_v, ControllerConfig, ControllerState,
};
use crate::dd_estimator::{DdConfig, SampleWindow};
use crate::error::{Error, Result};
use crate::observer::{saturate_estimates, HgoConfig, HgoDiscrete};
use crate::plant::{discrete::zoh_rk4, PlantModel, PlantState, ReferencePlant, DEFAULT_SUBSTEPS};
use crate::scalar::{lit, to_f64, Real};

/// High-gain observer settings inside a loop; `alpha = T / epsilon` is
/// derived from the loop's sampling time.
#[derive(Debug, Clone, PartialEq)]
pub struct HgoSettings<T> {
    pub epsilon: T,
    pub gains: Vec<T>,
    pub initial_xi: Option<Vec<T>>,
}

impl<T: Real> HgoSettings<T> {
    pub fn paper_defaults() -> Self {
        Self {
            epsilon: lit(0.05),
            gains: vec![lit(6.0), lit(11.0), lit(6.0)],
            initial_xi: None,
        }
    }

    pub fn to_config(&self, sampling_time: T) -> HgoConfig<T> {
        HgoConfig {
            epsilon: self.epsilon,
            alpha: sampling_time / self.epsilon,
            gains: self.gains.clone(),
            initial_xi: self.initial_xi.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EstimatorKind<T> {
    Hgo(HgoSettings<T>),
    DataDriven {
        n_samples: usize,
    },
    /// Exact states and extended state read from the plant (oracle).
    TrueState,
}

impl<T: Real> EstimatorKind<T> {
    pub fn id(&self) -> &'static str {
        match self {
            Self::Hgo(_) => "hgo",
            Self::DataDriven { .. } => "dd",
            Self::TrueState => "true-state",
        }
    }
}

/// How the input is produced from the estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControlMode {
    /// Model-free update `u(k+1) = u(k) + γ (v - x̂3)`.
    Dynamic,
    /// Exact linearizing input computed from the plant model (oracle).
    IdealFeedbackLinearizing,
}

/// Step reference `r(t) = amplitude` for `t ≥ start_time`, else 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReference<T> {
    pub amplitude: T,
    pub start_time: T,
}

impl<T: Real> StepReference<T> {
    pub fn at(&self, t: T) -> T {
        if t >= self.start_time {
            self.amplitude
        } else {
            T::zero()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseConfig<T> {
    pub enabled: bool,
    pub variance: T,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig<T, P = ReferencePlant<T>> {
    pub sampling_time: T,
    pub duration: T,
    /// RK4 substeps per sample for the plant.
    pub substeps: usize,
    pub plant: P,
    pub initial_state: PlantState<T>,
    pub estimator: EstimatorKind<T>,
    /// Per-estimate clamps applied to every estimator's output.
    pub saturation: Vec<Option<T>>,
    pub controller: ControllerConfig<T>,
    pub control_mode: ControlMode,
    pub reference: StepReference<T>,
    pub noise: NoiseConfig<T>,
    pub log_stride: usize,
    /// Any state, estimate or input magnitude above this ends the run.
    pub divergence_threshold: T,
    pub metrics: MetricsConfig,
}

impl<T: Real> SimConfig<T, ReferencePlant<T>> {
    /// T = 1e-3, ε = 0.05, gains (6, 11, 6), γ = 3e-4, k1 = 2, k2 = 4,
    /// Ki = 1e-3, ±0.05 on x̂2, starting from rest.
    pub fn paper_defaults(plant: ReferencePlant<T>, amplitude: T, duration: T) -> Self {
        let l = plant.internal_dim();
        Self {
            sampling_time: lit(1e-3),
            duration,
            substeps: DEFAULT_SUBSTEPS,
            plant,
            initial_state: PlantState::zeros(l),
            estimator: EstimatorKind::Hgo(HgoSettings::paper_defaults()),
            saturation: vec![None, Some(lit(0.05)), None],
            controller: ControllerConfig::paper_defaults(),
            control_mode: ControlMode::Dynamic,
            reference: StepReference {
                amplitude,
                start_time: T::zero(),
            },
            noise: NoiseConfig {
                enabled: false,
                variance: lit(1e-3),
                seed: 0,
            },
            log_stride: 1,
            divergence_threshold: lit(1e6),
            metrics: MetricsConfig::default(),
        }
    }
}

impl<T: Real, P: PlantModel<T>> SimConfig<T, P> {
    pub fn n_steps(&self) -> usize {
        (self.duration / self.sampling_time).round().to_usize().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sampling_time > T::zero()) || !self.sampling_time.is_finite() {
            return Err(Error::Config(format!(
                "sampling_time must be positive, got {}",
                self.sampling_time
            )));
        }
        if !(self.duration > self.sampling_time) {
            return Err(Error::Config(format!(
                "duration ({}) must exceed sampling_time ({})",
                self.duration, self.sampling_time
            )));
        }
        if self.substeps == 0 {
            return Err(Error::Config("substeps must be at least 1".into()));
        }
        if self.log_stride == 0 {
            return Err(Error::Config("log_stride must be at least 1".into()));
        }
        if self.initial_state.w.len() != self.plant.internal_dim() {
            return Err(Error::Config(format!(
                "initial_w has {} entries, plant expects {}",
                self.initial_state.w.len(),
                self.plant.internal_dim()
            )));
        }
        if !self.initial_state.is_finite() {
            return Err(Error::Config("initial state must be finite".into()));
        }
        if self.noise.enabled && !(self.noise.variance >= T::zero()) {
            return Err(Error::Config("noise variance must be non-negative".into()));
        }
        if self
            .saturation
            .iter()
            .flatten()
            .any(|b| !(*b >= T::zero()) || !b.is_finite())
        {
            return Err(Error::Config(
                "saturation bounds must be finite and non-negative".into(),
            ));
        }
        match &self.estimator {
            EstimatorKind::Hgo(h) => {
                let cfg = h.to_config(self.sampling_time);
                cfg.validate()?;
                if cfg.gains.len() != 3 {
                    return Err(Error::Config(format!(
                        "relative degree 2 needs 3 observer gains, got {}",
                        cfg.gains.len()
                    )));
                }
                // Closed-loop analysis needs T ≤ ε.
                if cfg.alpha > T::one() {
                    return Err(Error::Config(format!(
                        "alpha = T/epsilon = {} exceeds 1 in closed loop",
                        cfg.alpha
                    )));
                }
            }
            EstimatorKind::DataDriven { n_samples } => DdConfig {
                n_samples: *n_samples,
                sampling_time: self.sampling_time,
            }
            .validate()?,
            EstimatorKind::TrueState => {}
        }
        if self.control_mode == ControlMode::Dynamic && self.controller.gamma < T::zero() {
            return Err(Error::Config("gamma must be non-negative".into()));
        }
        if let Some((lo, hi)) = self.controller.u_limits {
            if !(lo < hi) {
                return Err(Error::Config("u_min must be below u_max".into()));
            }
        }
        if !(self.divergence_threshold > T::zero()) {
            return Err(Error::Config("divergence_threshold must be positive".into()));
        }
        self.metrics.validate()
    }
}

enum Estimator<T> {
    Hgo(HgoDiscrete<T>),
    Dd(SampleWindow<T>),
    True,
}

/// Runs the closed loop for `cfg.duration` seconds.
///
/// Per sample: read `y` (plus noise), estimate, saturate, compute `v`, update
/// the controller, and integrate the plant over one sample with the input
/// held. A divergence ends the run early with the event recorded; it is not
/// an error.
pub fn run_closed_loop<T, P>(cfg: &SimConfig<T, P>) -> Result<Trace<T>>
where
    T: Real,
    P: PlantModel<T>,
    StandardNormal: Distribution<T>,
{
    cfg.validate()?;
    let t_s = cfg.sampling_time;
    let n_steps = cfg.n_steps();
    let threshold = cfg.divergence_threshold;

    let mut estimator = match &cfg.estimator {
        EstimatorKind::Hgo(h) => Estimator::Hgo(HgoDiscrete::new(&h.to_config(t_s))?),
        EstimatorKind::DataDriven { n_samples } => Estimator::Dd(SampleWindow::new(&DdConfig {
            n_samples: *n_samples,
            sampling_time: t_s,
        })?),
        EstimatorKind::TrueState => Estimator::True,
    };
    let mut noise = cfg
        .noise
        .enabled
        .then(|| NoiseSource::new(cfg.noise.seed, cfg.noise.variance));

    let mut state = cfg.initial_state.clone();
    let mut ctrl = ControllerState::new(&cfg.controller);
    let mut records = Vec::with_capacity(n_steps / cfg.log_stride + 1);
    let mut divergence = None;

    for k in 0..n_steps {
        let t = lit::<T>(k as f64) * t_s;
        let r = cfg.reference.at(t);
        let y = state.output();
        let y_noisy = match noise.as_mut() {
            Some(src) => src.corrupt(y),
            None => y,
        };

        let (raw, est_ops) = match &mut estimator {
            Estimator::Hgo(obs) => {
                let xh = obs.step(y_noisy)?;
                (Some([xh[0], xh[1], xh[2]]), obs.last_ops())
            }
            Estimator::Dd(win) => {
                let est = win.push_and_estimate(y_noisy)?;
                (est, win.last_ops())
            }
            Estimator::True => {
                let x3 = cfg.plant.extended_state(&state, ctrl.u);
                (Some([state.x[0], state.x[1], x3]), 0)
            }
        };
        let xhat = raw.map(|e| {
            let s = saturate_estimates(&e, &cfg.saturation);
            [s[0], s[1], s[2]]
        });

        let applied_u;
        let (v, e_u);
        let mut next_ctrl = ctrl;
        match (cfg.control_mode, xhat) {
            (ControlMode::Dynamic, Some(xh)) => {
                v = outer_loop_v((xh[0], xh[1]), r, ctrl.sigma, &cfg.controller);
                applied_u = ctrl.u;
                next_ctrl = dynamic_update(ctrl, v, xh[2], &cfg.controller);
                e_u = next_ctrl.e_u;
                next_ctrl.sigma = integrator_step(ctrl.sigma, r, xh[0], t_s, cfg.controller.anti_windup);
            }
            (ControlMode::IdealFeedbackLinearizing, Some(xh)) => {
                v = outer_loop_v((xh[0], xh[1]), r, ctrl.sigma, &cfg.controller);
                applied_u = ideal_fl_control(&cfg.plant, &state, v)?;
                e_u = v - cfg.plant.extended_state(&state, applied_u);
                next_ctrl.u = applied_u;
                next_ctrl.e_u = e_u;
                next_ctrl.sigma = integrator_step(ctrl.sigma, r, xh[0], t_s, cfg.controller.anti_windup);
            }
            (_, None) => {
                // Warm-up: hold the initial input.
                v = T::zero();
                e_u = T::zero();
                applied_u = ctrl.u;
            }
        }

        let x3 = cfg.plant.extended_state(&state, applied_u);
        let v_true = outer_loop_v((state.x[0], state.x[1]), r, ctrl.sigma, &cfg.controller);

        if k % cfg.log_stride == 0 {
            records.push(TraceRecord {
                k: k as u64,
                t,
                r,
                y,
                y_noisy,
                w: state.w.first().copied().unwrap_or_else(T::zero),
                x1: state.x[0],
                x2: state.x[1],
                xhat: xhat.unwrap_or([T::zero(); 3]),
                v,
                e_u,
                u: applied_u,
                est_ops,
                x3,
                e_u_true: v_true - x3,
                sigma: ctrl.sigma,
                estimator_ready: xhat.is_some(),
            });
        }

        let runaway = |v: T| !v.is_finite() || v.abs() > threshold;
        let next_time = to_f64(t + t_s);
        if runaway(applied_u) || runaway(next_ctrl.u) || xhat.is_some_and(|xh| xh.iter().any(|&v| runaway(v))) {
            divergence = Some(DivergenceEvent {
                time: to_f64(t),
                step: k as u64,
            });
            break;
        }
        match zoh_rk4(&cfg.plant, &state, applied_u, t_s, cfg.substeps, to_f64(t)) {
            Ok(next) => state = next,
            Err(Error::Divergence { time }) => {
                divergence = Some(DivergenceEvent { time, step: k as u64 });
                break;
            }
            Err(e) => return Err(e),
        }
        if state.max_abs() > threshold || !state.is_finite() {
            divergence = Some(DivergenceEvent {
                time: next_time,
                step: k as u64 + 1,
            });
            break;
        }
        ctrl = next_ctrl;
    }

    Ok(Trace {
        sampling_time: t_s,
        log_stride: cfg.log_stride,
        records,
        divergence,
    })
}

/// Convenience: run and compute metrics against the configured step amplitude.
pub fn run_with_metrics<T, P>(cfg: &SimConfig<T, P>) -> Result<(Trace<T>, Metrics)>
where
    T: Real,
    P: PlantModel<T>,
    StandardNormal: Distribution<T>,
{
    let trace = run_closed_loop(cfg)?;
    let m = compute_metrics_with(&trace, cfg.reference.amplitude, &cfg.metrics)?;
    Ok((trace, m))
}
