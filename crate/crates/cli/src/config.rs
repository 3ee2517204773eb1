//! JSON run configuration: sections `plant`, `observer`, `estimator`,
//! `controller` and `sim`. Every field has a default, so `{}` is the paper's
//! twin-rotor step experiment.

use std::fmt;
use std::path::Path;

use hgo_mfc::controller::ControllerConfig;
use hgo_mfc::plant::{PlantModel, PlantState, ReferencePlant};
use hgo_mfc::sim::{ControlMode, EstimatorKind, HgoSettings, MetricsConfig, NoiseConfig, SimConfig, StepReference};
use serde::{Deserialize, Serialize};

use crate::manifest::{Manifest, ManifestArgs};

/// A configuration problem, with the line it was found on when known.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub source: String,
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, "{}:{l}:{c}: {}", self.source, self.message),
            (Some(l), None) => write!(f, "{}:{l}: {}", self.source, self.message),
            _ => write!(f, "{}: {}", self.source, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub plant: PlantSection,
    pub observer: ObserverSection,
    pub estimator: EstimatorSection,
    pub controller: ControllerSection,
    pub sim: SimSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlantKind {
    #[serde(alias = "lti")]
    LtiTest,
    #[serde(alias = "synthetic")]
    SyntheticNormalForm,
    #[serde(alias = "twin_rotor")]
    TwinRotorSurrogate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantSection {
    pub kind: PlantKind,
    /// LTI drift term.
    pub a: f64,
    /// LTI input gain.
    pub b: f64,
    pub c1: f64,
    pub c2: f64,
    pub b0: f64,
    pub initial_x: [f64; 2],
    /// Defaults to zeros of the plant's internal dimension.
    pub initial_w: Option<Vec<f64>>,
}

impl Default for PlantSection {
    fn default() -> Self {
        Self {
            kind: PlantKind::TwinRotorSurrogate,
            a: 0.0,
            b: 1.0,
            c1: 1.0,
            c2: 0.5,
            b0: 2.0,
            initial_x: [0.0, 0.0],
            initial_w: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObserverSection {
    pub epsilon: f64,
    pub gains: Vec<f64>,
    pub initial_xi: Option<Vec<f64>>,
    /// Symmetric clamps on (x̂1, x̂2, x̂3); `null` leaves a component free.
    /// Applied to whichever estimator runs.
    pub saturation: [Option<f64>; 3],
}

impl Default for ObserverSection {
    fn default() -> Self {
        Self {
            epsilon: 0.05,
            gains: vec![6.0, 11.0, 6.0],
            initial_xi: None,
            saturation: [None, Some(0.05), None],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorSection {
    /// `hgo`, `dd`, `dd:N`, `dd(N)` or `true-state`.
    pub kind: String,
    pub dd_samples: usize,
}

impl Default for EstimatorSection {
    fn default() -> Self {
        Self {
            kind: "hgo".into(),
            dd_samples: 9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    Dynamic,
    IdealFeedbackLinearizing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerSection {
    pub k1: f64,
    pub k2: f64,
    pub ki: f64,
    pub gamma: f64,
    pub u_limits: Option<[f64; 2]>,
    pub anti_windup: Option<f64>,
    pub u0: f64,
    pub mode: ModeName,
}

impl Default for ControllerSection {
    fn default() -> Self {
        Self {
            k1: 2.0,
            k2: 4.0,
            ki: 1e-3,
            gamma: 3e-4,
            u_limits: None,
            anti_windup: None,
            u0: 0.0,
            mode: ModeName::Dynamic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    pub sampling_time: f64,
    pub duration: f64,
    pub substeps: usize,
    pub reference_amplitude: f64,
    pub reference_start: f64,
    pub noise_enabled: bool,
    pub noise_variance: f64,
    pub seed: u64,
    pub log_stride: usize,
    pub divergence_threshold: f64,
    pub settling_band: f64,
    pub metrics_window: f64,
    /// Divide-by-10 attempts allowed by `tune`.
    pub max_reductions: usize,
}

impl Default for SimSection {
    fn default() -> Self {
        Self {
            sampling_time: 1e-3,
            duration: 40.0,
            substeps: 10,
            reference_amplitude: 0.3,
            reference_start: 0.0,
            noise_enabled: false,
            noise_variance: 1e-3,
            seed: 0,
            log_stride: 1,
            divergence_threshold: 1e6,
            settling_band: 0.02,
            metrics_window: 0.25,
            max_reductions: 8,
        }
    }
}

/// Parsed configuration plus, when read from a manifest, the arguments
/// that produced it.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub file: ConfigFile,
    pub text: Option<String>,
    pub source: String,
    pub manifest_args: Option<ManifestArgs>,
}

impl Loaded {
    pub fn defaults() -> Self {
        Self {
            file: ConfigFile::default(),
            text: None,
            source: "<defaults>".into(),
            manifest_args: None,
        }
    }

    /// Error located at `section.key` in the source text.
    pub fn error_at(&self, section: &str, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError {
            source: self.source.clone(),
            line: self.text.as_deref().and_then(|t| key_line(t, section, key)),
            column: None,
            message: format!("{section}.{key}: {}", message.into()),
        }
    }

    pub fn error(&self, message: impl Into<String>) -> ConfigError {
        ConfigError {
            source: self.source.clone(),
            line: None,
            column: None,
            message: message.into(),
        }
    }
}

/// Reads a config file or a run manifest (whose `config` member is used).
pub fn load(path: &Path) -> Result<Loaded, ConfigError> {
    let source = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
        source: source.clone(),
        line: None,
        column: None,
        message: format!("cannot read: {e}"),
    })?;
    parse(&text, &source)
}

pub fn parse(text: &str, source: &str) -> Result<Loaded, ConfigError> {
    let located = |e: serde_json::Error| ConfigError {
        source: source.to_string(),
        line: Some(e.line()),
        column: Some(e.column()),
        message: e.to_string().split(" at line ").next().unwrap_or_default().to_string(),
    };
    let value: serde_json::Value = serde_json::from_str(text).map_err(located)?;
    if value.get("tool").is_some() && value.get("config").is_some() {
        let manifest: Manifest = serde_json::from_value(value).map_err(|e| ConfigError {
            source: source.to_string(),
            line: None,
            column: None,
            message: format!("manifest: {e}"),
        })?;
        return Ok(Loaded {
            file: manifest.config,
            text: None,
            source: source.to_string(),
            manifest_args: Some(manifest.args),
        });
    }
    let file: ConfigFile = serde_json::from_str(text).map_err(located)?;
    Ok(Loaded {
        file,
        text: Some(text.to_string()),
        source: source.to_string(),
        manifest_args: None,
    })
}

/// 1-based line of `"key"` inside the `"section"` object, if present.
fn key_line(text: &str, section: &str, key: &str) -> Option<usize> {
    let start = text.find(&format!("\"{section}\""))?;
    let offset = text[start..].find(&format!("\"{key}\""))? + start;
    Some(text[..offset].matches('\n').count() + 1)
}

/// Resolves an estimator id: `hgo`, `dd`, `dd:N`, `dd(N)`, `dd(N=N)` or
/// `true-state`. Returns a display label and the kind.
pub fn parse_estimator(id: &str, cfg: &ConfigFile) -> Result<(String, EstimatorKind<f64>), String> {
    let id = id.trim();
    let dd = |n: usize| (format!("dd({n})"), EstimatorKind::DataDriven { n_samples: n });
    match id {
        "hgo" => Ok((
            "hgo".into(),
            EstimatorKind::Hgo(HgoSettings {
                epsilon: cfg.observer.epsilon,
                gains: cfg.observer.gains.clone(),
                initial_xi: cfg.observer.initial_xi.clone(),
            }),
        )),
        "dd" => Ok(dd(cfg.estimator.dd_samples)),
        "true-state" | "true_state" => Ok(("true-state".into(), EstimatorKind::TrueState)),
        _ => {
            let n = id
                .strip_prefix("dd:")
                .or_else(|| id.strip_prefix("dd(").and_then(|r| r.strip_suffix(')')))
                .map(|r| r.trim_start_matches("N=").trim_start_matches("n="))
                .ok_or_else(|| format!("unknown estimator '{id}' (expected hgo, dd, dd:N or true-state)"))?;
            n.parse::<usize>()
                .map(dd)
                .map_err(|_| format!("bad window size in estimator '{id}'"))
        }
    }
}

impl Loaded {
    pub fn plant(&self) -> ReferencePlant<f64> {
        let p = &self.file.plant;
        match p.kind {
            PlantKind::LtiTest => ReferencePlant::LtiTest { a: p.a, b: p.b },
            PlantKind::SyntheticNormalForm => ReferencePlant::SyntheticNormalForm,
            PlantKind::TwinRotorSurrogate => ReferencePlant::TwinRotorSurrogate {
                c1: p.c1,
                c2: p.c2,
                b0: p.b0,
            },
        }
    }

    /// Builds and validates the simulation config; errors name the key.
    pub fn sim_config(&self, estimator: EstimatorKind<f64>) -> Result<SimConfig<f64>, ConfigError> {
        let f = &self.file;
        let s = &f.sim;
        let positive = |section: &str, key: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(self.error_at(section, key, format!("must be positive, got {v}")))
            }
        };
        positive("sim", "sampling_time", s.sampling_time)?;
        positive("sim", "duration", s.duration)?;
        positive("sim", "divergence_threshold", s.divergence_threshold)?;
        if s.duration <= s.sampling_time {
            return Err(self.error_at("sim", "duration", "must exceed sampling_time"));
        }
        if s.substeps == 0 {
            return Err(self.error_at("sim", "substeps", "must be at least 1"));
        }
        if s.log_stride == 0 {
            return Err(self.error_at("sim", "log_stride", "must be at least 1"));
        }
        if s.noise_variance < 0.0 || !s.noise_variance.is_finite() {
            return Err(self.error_at("sim", "noise_variance", "must be non-negative"));
        }
        if let EstimatorKind::Hgo(h) = &estimator {
            positive("observer", "epsilon", h.epsilon)?;
            if h.gains.len() != 3 || h.gains.iter().any(|g| !(*g > 0.0)) {
                return Err(self.error_at("observer", "gains", "need three positive gains"));
            }
            if s.sampling_time > h.epsilon {
                return Err(self.error_at(
                    "sim",
                    "sampling_time",
                    format!("alpha = T/epsilon = {} exceeds 1", s.sampling_time / h.epsilon),
                ));
            }
        }
        if let EstimatorKind::DataDriven { n_samples } = estimator {
            if n_samples < 3 {
                return Err(self.error_at("estimator", "dd_samples", "must be at least 3"));
            }
        }
        if f.controller.gamma < 0.0 {
            return Err(self.error_at("controller", "gamma", "must be non-negative"));
        }
        if let Some([lo, hi]) = f.controller.u_limits {
            if !(lo < hi) {
                return Err(self.error_at("controller", "u_limits", "lower limit must be below upper"));
            }
        }
        if f.observer.saturation.iter().flatten().any(|b| !(*b >= 0.0)) {
            return Err(self.error_at("observer", "saturation", "bounds must be non-negative"));
        }

        let plant = self.plant();
        let l = plant.internal_dim();
        let w = f.plant.initial_w.clone().unwrap_or_else(|| vec![0.0; l]);
        if w.len() != l {
            return Err(self.error_at(
                "plant",
                "initial_w",
                format!("has {} entries, plant expects {l}", w.len()),
            ));
        }
        let c = &f.controller;
        let cfg = SimConfig {
            sampling_time: s.sampling_time,
            duration: s.duration,
            substeps: s.substeps,
            plant,
            initial_state: PlantState::new(w, f.plant.initial_x),
            estimator,
            saturation: f.observer.saturation.to_vec(),
            controller: ControllerConfig {
                k1: c.k1,
                k2: c.k2,
                ki: c.ki,
                gamma: c.gamma,
                u_limits: c.u_limits.map(|[lo, hi]| (lo, hi)),
                anti_windup: c.anti_windup,
                u0: c.u0,
            },
            control_mode: match c.mode {
                ModeName::Dynamic => ControlMode::Dynamic,
                ModeName::IdealFeedbackLinearizing => ControlMode::IdealFeedbackLinearizing,
            },
            reference: StepReference {
                amplitude: s.reference_amplitude,
                start_time: s.reference_start,
            },
            noise: NoiseConfig {
                enabled: s.noise_enabled,
                variance: s.noise_variance,
                seed: s.seed,
            },
            log_stride: s.log_stride,
            divergence_threshold: s.divergence_threshold,
            metrics: MetricsConfig {
                settling_band: s.settling_band,
                window_fraction: s.metrics_window,
            },
        };
        cfg.validate().map_err(|e| self.error(e.to_string()))?;
        Ok(cfg)
    }

    /// The estimator named by `estimator.kind`.
    pub fn configured_estimator(&self) -> Result<(String, EstimatorKind<f64>), ConfigError> {
        parse_estimator(&self.file.estimator.kind, &self.file).map_err(|m| self.error_at("estimator", "kind", m))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_is_paper_experiment() {
        let l = parse("{}", "t").unwrap();
        let (_, est) = l.configured_estimator().unwrap();
        let cfg = l.sim_config(est).unwrap();
        assert_eq!(cfg.sampling_time, 1e-3);
        assert_eq!(cfg.reference.amplitude, 0.3);
        assert_eq!(cfg.saturation, vec![None, Some(0.05), None]);
        assert!(matches!(cfg.plant, ReferencePlant::TwinRotorSurrogate { .. }));
    }

    #[test]
    fn unknown_key_reports_line() {
        let text = "{\n  \"sim\": {\n    \"duraton\": 3\n  }\n}";
        let e = parse(text, "c.json").unwrap_err();
        assert_eq!(e.line, Some(3));
        assert!(e.message.contains("duraton"), "{e}");
    }

    #[test]
    fn semantic_error_reports_key_line() {
        let text = "{\n  \"controller\": {\n    \"k1\": 2,\n    \"gamma\": -1\n  }\n}";
        let l = parse(text, "c.json").unwrap();
        let e = l.sim_config(l.configured_estimator().unwrap().1).unwrap_err();
        assert_eq!(e.line, Some(4));
        assert!(e.to_string().starts_with("c.json:4: controller.gamma"), "{e}");
    }

    #[test]
    fn estimator_ids() {
        let f = ConfigFile::default();
        for (id, label) in [
            ("hgo", "hgo"),
            ("dd", "dd(9)"),
            ("dd:26", "dd(26)"),
            ("dd(12)", "dd(12)"),
            ("dd(N=5)", "dd(5)"),
        ] {
            assert_eq!(parse_estimator(id, &f).unwrap().0, label);
        }
        assert!(parse_estimator("kalman", &f).is_err());
        assert!(parse_estimator("dd:x", &f).is_err());
    }

    #[test]
    fn wrong_internal_dimension() {
        let l = parse(r#"{"plant": {"kind": "synthetic", "initial_w": [0, 1]}}"#, "c").unwrap();
        let e = l.sim_config(l.configured_estimator().unwrap().1).unwrap_err();
        assert!(e.message.contains("initial_w"));
    }
}
