use std::io::{self, Write};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{to_f64, Real};

use super::trace::Trace;

/// Knobs for [`compute_metrics_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricsConfig {
    /// Settling band as a fraction of |r| (of 1 when r = 0).
    pub settling_band: f64,
    /// Trailing fraction of the trace used for noise RMS.
    pub window_fraction: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            settling_band: 0.02,
            window_fraction: 0.25,
        }
    }
}

impl MetricsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.settling_band > 0.0) {
            return Err(Error::Config("settling_band must be positive".into()));
        }
        if !(self.window_fraction > 0.0 && self.window_fraction <= 1.0) {
            return Err(Error::Config("metrics window must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

/// Step-response and estimator quality summary of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub overshoot_pct: f64,
    /// `None` when the output never stays inside the band.
    pub settling_time_s: Option<f64>,
    /// `|y(end) - r|`.
    pub steady_state_err: f64,
    /// RMS of the linearly detrended x̂1, x̂2, x̂3 over the trailing window.
    pub rms_est_noise: [f64; 3],
    pub peak_abs: [f64; 3],
    pub ops_per_step: usize,
    pub diverged: bool,
    pub final_time_s: f64,
}

/// [`compute_metrics_with`] using the default band (2 %) and window (25 %).
pub fn compute_metrics<T: Real>(trace: &Trace<T>, r: T) -> Result<Metrics> {
    compute_metrics_with(trace, r, &MetricsConfig::default())
}

/// Computes step-response metrics against reference `r`.
///
/// Overshoot and the settling band are relative to `|r|`; for `r = 0` they
/// fall back to the absolute scale (normalized by 1).
pub fn compute_metrics_with<T: Real>(trace: &Trace<T>, r: T, cfg: &MetricsConfig) -> Result<Metrics> {
    cfg.validate()?;
    let recs = &trace.records;
    let last = recs
        .last()
        .ok_or_else(|| Error::Input("cannot compute metrics of an empty trace".into()))?;
    let r = to_f64(r);
    let scale = if r == 0.0 { 1.0 } else { r.abs() };
    let dir = if r < 0.0 { -1.0 } else { 1.0 };

    let peak_excess = recs
        .iter()
        .map(|rec| dir * (to_f64(rec.y) - r))
        .fold(f64::NEG_INFINITY, f64::max);
    let overshoot_pct = (peak_excess / scale * 100.0).max(0.0);

    let band = cfg.settling_band * scale;
    let settling_time_s = match recs.iter().rposition(|rec| (to_f64(rec.y) - r).abs() > band) {
        None => Some(to_f64(recs[0].t)),
        Some(i) if i + 1 < recs.len() && !trace.diverged() => Some(to_f64(recs[i + 1].t)),
        Some(_) => None,
    };

    let steady_state_err = (to_f64(last.y) - r).abs();

    let ready: Vec<_> = recs.iter().filter(|rec| rec.estimator_ready).collect();
    let take = ((ready.len() as f64) * cfg.window_fraction).ceil() as usize;
    let window = &ready[ready.len() - take.min(ready.len())..];
    let mut rms_est_noise = [0.0; 3];
    let mut peak_abs = [0.0; 3];
    for i in 0..3 {
        let t: Vec<f64> = window.iter().map(|rec| to_f64(rec.t)).collect();
        let v: Vec<f64> = window.iter().map(|rec| to_f64(rec.xhat[i])).collect();
        rms_est_noise[i] = detrended_rms(&t, &v);
        peak_abs[i] = ready.iter().map(|rec| to_f64(rec.xhat[i]).abs()).fold(0.0, f64::max);
    }

    Ok(Metrics {
        overshoot_pct,
        settling_time_s,
        steady_state_err,
        rms_est_noise,
        peak_abs,
        ops_per_step: recs.iter().map(|rec| rec.est_ops).max().unwrap_or(0),
        diverged: trace.diverged(),
        final_time_s: to_f64(last.t),
    })
}

/// RMS of the residual after a least-squares line fit.
fn detrended_rms(t: &[f64], v: &[f64]) -> f64 {
    let n = v.len();
    if n == 0 {
        return 0.0;
    }
    if n == 1 {
        return 0.0;
    }
    let nf = n as f64;
    let tm = t.iter().sum::<f64>() / nf;
    let vm = v.iter().sum::<f64>() / nf;
    let stt: f64 = t.iter().map(|x| (x - tm) * (x - tm)).sum();
    let stv: f64 = t.iter().zip(v).map(|(x, y)| (x - tm) * (y - vm)).sum();
    let slope = if stt > 0.0 { stv / stt } else { 0.0 };
    let ss: f64 = t
        .iter()
        .zip(v)
        .map(|(x, y)| {
            let e = y - vm - slope * (x - tm);
            e * e
        })
        .sum();
    (ss / nf).sqrt()
}

pub const METRICS_CSV_HEADER: &str = "label,overshoot_pct,settling_time_s,steady_state_err,rms_x1hat,rms_x2hat,rms_x3hat,peak_x1hat,peak_x2hat,peak_x3hat,ops_per_step,diverged";

/// Writes a metrics table, one labelled row per run.
pub fn write_metrics_csv<W: Write>(rows: &[(String, Metrics)], mut out: W) -> io::Result<()> {
    writeln!(out, "{METRICS_CSV_HEADER}")?;
    for (label, m) in rows {
        let settle = m.settling_time_s.map(|s| s.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            label,
            m.overshoot_pct,
            settle,
            m.steady_state_err,
            m.rms_est_noise[0],
            m.rms_est_noise[1],
            m.rms_est_noise[2],
            m.peak_abs[0],
            m.peak_abs[1],
            m.peak_abs[2],
            m.ops_per_step,
            m.diverged
        )?;
    }
    Ok(())
}
