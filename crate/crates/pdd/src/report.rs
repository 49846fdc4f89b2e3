//! JSON result documents for the `estimate` and `rdd` subcommands.

use std::io;

use pdd_core::{
    bias_corrected_estimate, estimate_fuzzy, rdd_robust, rule_of_thumb_bandwidth, sided_weights, Design, Error,
    InferenceConfig, IvFit, KernelSpec, Sample, Side,
};
use serde::Serialize;

use crate::config::RunConfig;
use crate::data::Loaded;

/// Placebo instruments whose normalized Schur diagnostic falls below this
/// trigger a warning.
pub const WEAK_INSTRUMENT_WARNING: f64 = 0.1;
/// Kish effective sample size per side below which a warning is issued.
pub const MIN_EFFECTIVE_SAMPLE: f64 = 30.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateDocument {
    pub estimate: f64,
    pub estimate_bc: Option<f64>,
    pub se: Option<f64>,
    pub ci_lower: Option<f64>,
    pub ci_upper: Option<f64>,
    pub alpha: f64,
    pub tau_rdd_y: f64,
    pub tau_rdd_w: Vec<f64>,
    pub gamma_minus: Vec<f64>,
    pub gamma_plus: Vec<f64>,
    pub h: f64,
    pub b: f64,
    pub kernel: &'static str,
    pub n_left: usize,
    pub n_right: usize,
    pub design: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_stage: Option<f64>,
    pub warnings: Vec<String>,
    pub dropped_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RddDocument {
    pub estimate: f64,
    pub estimate_bc: f64,
    pub se: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    pub alpha: f64,
    pub h: f64,
    pub b: f64,
    pub kernel: &'static str,
    pub n_left: usize,
    pub n_right: usize,
    pub warnings: Vec<String>,
    pub dropped_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorDocument {
    pub error: &'static str,
    pub detail: String,
}

impl From<&Error> for ErrorDocument {
    fn from(e: &Error) -> Self {
        Self { error: e.code(), detail: e.to_string() }
    }
}

/// Resolves bandwidths and records the defaulting in `warnings`.
fn inference_config(cfg: &RunConfig, sample: &Sample, warnings: &mut Vec<String>) -> Result<InferenceConfig, Error> {
    let h = match cfg.bandwidth {
        Some(h) => h,
        None => {
            let h = rule_of_thumb_bandwidth(&sample.running)?;
            warnings.push(format!("default bandwidth used: rule-of-thumb h = {h:.6}"));
            h
        }
    };
    let mut ic = InferenceConfig::new(cfg.cutoff, h);
    ic.b = match cfg.bias_bandwidth {
        Some(b) => b,
        None => {
            if cfg.bandwidth.is_some() {
                warnings.push("default bias bandwidth used: b = h".into());
            }
            h
        }
    };
    if ic.b < ic.h / 10.0 {
        return Err(Error::InvalidInput(format!("bias bandwidth {} is below a tenth of the bandwidth {}", ic.b, ic.h)));
    }
    ic.kernel = cfg.kernel_spec();
    ic.alpha = cfg.alpha;
    ic.variance_mode = cfg.variance_mode;
    Ok(ic)
}

/// `(Σw)² / Σw²` over the kernel weights on one side.
fn effective_sample(d: &[f64], cutoff: f64, h: f64, side: Side, kernel: &KernelSpec) -> Result<f64, Error> {
    let w = sided_weights(d, cutoff, h, side, kernel)?;
    let (s1, s2) = w.weights.iter().fold((0.0, 0.0), |(a, b), &x| (a + x, b + x * x));
    Ok(if s2 > 0.0 { s1 * s1 / s2 } else { 0.0 })
}

fn support_warnings(d: &[f64], ic: &InferenceConfig, warnings: &mut Vec<String>) -> Result<(), Error> {
    for side in [Side::Left, Side::Right] {
        let n_eff = effective_sample(d, ic.cutoff, ic.h, side, &ic.kernel)?;
        if n_eff < MIN_EFFECTIVE_SAMPLE {
            warnings.push(format!("effective sample on the {side} side is {n_eff:.1}, below {MIN_EFFECTIVE_SAMPLE}"));
        }
    }
    Ok(())
}

fn instrument_warnings(fits: [&IvFit; 2], warnings: &mut Vec<String>) {
    for fit in fits {
        if fit.schur_rcond < WEAK_INSTRUMENT_WARNING {
            warnings.push(format!(
                "weak placebo instrument on the {} side: normalized condition {:.3e}",
                fit.side, fit.schur_rcond
            ));
        }
    }
}

/// Placebo-adjusted estimate with robust bias-corrected inference.
pub fn run_estimate(cfg: &RunConfig, loaded: &Loaded) -> Result<EstimateDocument, Error> {
    let sample = &loaded.sample;
    sample.check_shape()?;
    sample.require_placebos()?;
    sample.check_support(cfg.cutoff)?;
    let mut warnings = Vec::new();
    let ic = inference_config(cfg, sample, &mut warnings)?;
    support_warnings(&sample.running, &ic, &mut warnings)?;

    let (estimate, estimate_bc, se, ci, first_stage, point) = match cfg.design {
        Design::Sharp => {
            let (point, robust) = bias_corrected_estimate(sample, &ic)?;
            if robust.degenerate {
                warnings.push("estimated variance is zero; the confidence interval is a point".into());
            }
            (point.tau_pdd, Some(robust.estimate_bc), Some(robust.se), Some((robust.ci_lower, robust.ci_upper)), None, point)
        }
        Design::FuzzyHomogeneous => {
            // Point estimate only: no bias correction or variance is defined for the ratio.
            let point = estimate_fuzzy(sample, ic.cutoff, ic.h, &ic.kernel)?;
            warnings.push("fuzzy design: point estimate only; estimate_bc, se and confidence interval are null".into());
            let ratio = point.fuzzy.expect("fuzzy estimate carries its ratio");
            (ratio, None, None, None, point.tau_rdd_a, point)
        }
    };
    instrument_warnings([&point.iv_left, &point.iv_right], &mut warnings);

    Ok(EstimateDocument {
        estimate,
        estimate_bc,
        se,
        ci_lower: ci.map(|c| c.0),
        ci_upper: ci.map(|c| c.1),
        alpha: ic.alpha,
        tau_rdd_y: point.tau_rdd_y,
        tau_rdd_w: point.tau_rdd_w,
        gamma_minus: point.gamma_minus,
        gamma_plus: point.gamma_plus,
        h: ic.h,
        b: ic.b,
        kernel: cfg.kernel.name(),
        n_left: point.n_left,
        n_right: point.n_right,
        design: cfg.design.name(),
        first_stage,
        warnings,
        dropped_rows: loaded.dropped_rows,
    })
}

/// Plain local linear discontinuity in the outcome.
pub fn run_rdd(cfg: &RunConfig, loaded: &Loaded) -> Result<RddDocument, Error> {
    let sample = &loaded.sample;
    sample.check_shape()?;
    sample.check_support(cfg.cutoff)?;
    let mut warnings = Vec::new();
    let ic = inference_config(cfg, sample, &mut warnings)?;
    support_warnings(&sample.running, &ic, &mut warnings)?;
    let robust = rdd_robust(&sample.running, &sample.outcome, &ic)?;
    if robust.degenerate {
        warnings.push("estimated variance is zero; the confidence interval is a point".into());
    }
    let count = |side| sided_weights(&sample.running, ic.cutoff, ic.h, side, &ic.kernel).map(|w| w.n_positive);
    Ok(RddDocument {
        estimate: robust.estimate,
        estimate_bc: robust.estimate_bc,
        se: robust.se,
        ci_lower: robust.ci_lower,
        ci_upper: robust.ci_upper,
        alpha: ic.alpha,
        h: ic.h,
        b: ic.b,
        kernel: cfg.kernel.name(),
        n_left: count(Side::Left)?,
        n_right: count(Side::Right)?,
        warnings,
        dropped_rows: loaded.dropped_rows,
    })
}

/// Writes floats with 17 significant digits so every value reads back exactly.
struct ExactFloats;

impl serde_json::ser::Formatter for ExactFloats {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

/// Serializes `value` as a single-line JSON object. Non-finite floats become `null`.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, ExactFloats);
    value.serialize(&mut ser).expect("in-memory serialization cannot fail");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}
