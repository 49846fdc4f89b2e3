//! Run configuration: flat `key = value` files overlaid by command-line flags.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::str::FromStr;

use pdd_core::{Design, DgpSpec, KernelKind, KernelSpec, NoiseScales, VarianceMode};

use crate::data::Bindings;
use crate::mc::EstimatorSettings;

/// Keys accepted in a config file; each matches the long flag of the same name.
pub const KEYS: &[&str] = &[
    "data",
    "cutoff",
    "running",
    "outcome",
    "treatment",
    "placebo-outcomes",
    "placebo-treatments",
    "kernel",
    "bandwidth",
    "bias-bandwidth",
    "alpha",
    "design",
    "variance-mode",
    "seed",
    "reps",
    "out",
    "n",
    "tau",
    "kappa",
    "window",
    "lambda",
    "rho",
    "compliance",
    "curvature",
    "noise-z",
    "noise-d",
    "noise-w",
    "noise-y",
];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("config line {line}: {detail}")]
    Syntax { line: usize, detail: String },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("invalid value for `{key}`: {detail}")]
    Invalid { key: String, detail: String },
    #[error("missing required setting `{0}`")]
    Missing(String),
}

fn invalid(key: &str, detail: impl Display) -> ConfigError {
    ConfigError::Invalid { key: key.into(), detail: detail.to_string() }
}

/// String-valued settings keyed by flag name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings(BTreeMap<String, String>);

impl Settings {
    /// Parses `key = value` lines. Blank lines and lines starting with `#`
    /// are skipped; underscores in keys are read as dashes.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::Syntax { line: i + 1, detail: format!("expected `key = value`, got `{line}`") })?;
            let key = key.trim().replace('_', "-");
            if !KEYS.contains(&key.as_str()) {
                return Err(ConfigError::UnknownKey(key));
            }
            let value = value.trim().trim_matches('"').to_string();
            if map.insert(key.clone(), value).is_some() {
                return Err(ConfigError::Syntax { line: i + 1, detail: format!("duplicate key `{key}`") });
            }
        }
        Ok(Settings(map))
    }

    /// Sets `key` when `value` is present, replacing what the file said.
    pub fn overlay(&mut self, key: &str, value: Option<String>) {
        debug_assert!(KEYS.contains(&key), "{key}");
        if let Some(v) = value {
            self.0.insert(key.into(), v);
        }
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    pub fn get<T>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.raw(key).map(|v| v.parse::<T>().map_err(|e| invalid(key, format!("`{v}`: {e}")))).transpose()
    }

    fn list(&self, key: &str) -> Option<Vec<String>> {
        self.raw(key).map(|v| v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect())
    }

    fn require<T>(&self, key: &str) -> Result<T, ConfigError>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.get(key)?.ok_or_else(|| ConfigError::Missing(key.into()))
    }
}

/// Everything `estimate` and `rdd` need besides the data.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub cutoff: f64,
    pub kernel: KernelKind,
    pub bandwidth: Option<f64>,
    pub bias_bandwidth: Option<f64>,
    pub alpha: f64,
    pub design: Design,
    pub bindings: Bindings,
    pub variance_mode: VarianceMode,
}

impl RunConfig {
    pub fn new(cutoff: f64) -> Self {
        Self {
            cutoff,
            kernel: KernelKind::Triangle,
            bandwidth: None,
            bias_bandwidth: None,
            alpha: 0.05,
            design: Design::Sharp,
            bindings: Bindings::default(),
            variance_mode: VarianceMode::Paper,
        }
    }

    pub fn from_settings(s: &Settings) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::new(s.require("cutoff")?);
        if let Some(k) = s.get("kernel")? {
            cfg.kernel = k;
        }
        cfg.bandwidth = s.get("bandwidth")?;
        cfg.bias_bandwidth = s.get("bias-bandwidth")?;
        if let Some(a) = s.get("alpha")? {
            cfg.alpha = a;
        }
        if let Some(d) = s.get("design")? {
            cfg.design = d;
        }
        if let Some(m) = s.get("variance-mode")? {
            cfg.variance_mode = m;
        }
        let b = &mut cfg.bindings;
        if let Some(v) = s.raw("running") {
            b.running = v.into();
        }
        if let Some(v) = s.raw("outcome") {
            b.outcome = v.into();
        }
        b.treatment = s.raw("treatment").map(Into::into);
        if cfg.design == Design::FuzzyHomogeneous && b.treatment.is_none() {
            b.treatment = Some("a".into());
        }
        if let Some(v) = s.list("placebo-outcomes") {
            b.placebo_outcomes = v;
        }
        if let Some(v) = s.list("placebo-treatments") {
            b.placebo_treatments = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !self.cutoff.is_finite() {
            return Err(invalid("cutoff", "must be finite"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(invalid("alpha", "must lie strictly between 0 and 1"));
        }
        for (key, v) in [("bandwidth", self.bandwidth), ("bias-bandwidth", self.bias_bandwidth)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(invalid(key, "must be positive and finite"));
                }
            }
        }
        if let (Some(h), Some(b)) = (self.bandwidth, self.bias_bandwidth) {
            if b < h / 10.0 {
                return Err(invalid("bias-bandwidth", format!("{b} is below a tenth of the bandwidth {h}")));
            }
        }
        let b = &self.bindings;
        match (self.design, &b.treatment) {
            (Design::FuzzyHomogeneous, None) => return Err(ConfigError::Missing("treatment".into())),
            (Design::Sharp, Some(_)) => return Err(invalid("treatment", "only used with --design fuzzy")),
            _ => {}
        }
        if b.placebo_outcomes.len() != b.placebo_treatments.len() {
            return Err(invalid(
                "placebo-treatments",
                format!("{} placebo outcomes but {} placebo treatments", b.placebo_outcomes.len(), b.placebo_treatments.len()),
            ));
        }
        Ok(())
    }

    pub fn kernel_spec(&self) -> KernelSpec {
        match self.kernel {
            KernelKind::Window => KernelSpec::window(),
            KernelKind::Triangle => KernelSpec::triangle(),
            KernelKind::Gaussian => KernelSpec::gaussian(1.0).expect("unit scale is valid"),
        }
    }

    pub fn estimator_settings(&self) -> EstimatorSettings {
        EstimatorSettings {
            kernel: self.kernel_spec(),
            bandwidth: self.bandwidth,
            bias_bandwidth: self.bias_bandwidth,
            alpha: self.alpha,
            variance_mode: self.variance_mode,
        }
    }
}

/// Builds a simulation spec starting from the calibration design.
pub fn dgp_spec(s: &Settings) -> Result<DgpSpec, ConfigError> {
    let base = DgpSpec::calibration();
    let noise = NoiseScales {
        z: s.get("noise-z")?.unwrap_or(base.noise.z),
        d: s.get("noise-d")?.unwrap_or(base.noise.d),
        w: s.get("noise-w")?.unwrap_or(base.noise.w),
        y: s.get("noise-y")?.unwrap_or(base.noise.y),
    };
    let spec = DgpSpec {
        n: s.get("n")?.unwrap_or(base.n),
        seed: s.get("seed")?.unwrap_or(base.seed),
        tau: s.get("tau")?.unwrap_or(base.tau),
        cutoff: s.get("cutoff")?.unwrap_or(base.cutoff),
        kappa: s.get("kappa")?.unwrap_or(base.kappa),
        window: s.get("window")?.unwrap_or(base.window),
        lambda: s.get("lambda")?.unwrap_or(base.lambda),
        rho: s.get("rho")?.unwrap_or(base.rho),
        noise,
        design: s.get("design")?.unwrap_or(base.design),
        compliance: s.get("compliance")?.unwrap_or(base.compliance),
        curvature: s.get("curvature")?.unwrap_or(base.curvature),
    };
    spec.validate().map_err(|e| invalid("dgp", e))?;
    Ok(spec)
}
