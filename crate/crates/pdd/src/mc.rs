//! Monte Carlo replication of the estimators on simulated samples.

use pdd_core::{
    bias_corrected_estimate, bias_corrected_fuzzy, rdd_robust, rule_of_thumb_bandwidth, simulate, truth, Design,
    DgpSpec, Error, InferenceConfig, KernelSpec, VarianceMode,
};
use rayon::prelude::*;
use serde::Serialize;

/// Estimator settings shared by every replication.
#[derive(Debug, Clone, Copy)]
pub struct EstimatorSettings {
    pub kernel: KernelSpec,
    /// Main bandwidth; the rule of thumb is computed per replication when absent.
    pub bandwidth: Option<f64>,
    /// Pilot bandwidth; defaults to the main bandwidth.
    pub bias_bandwidth: Option<f64>,
    pub alpha: f64,
    pub variance_mode: VarianceMode,
}

impl Default for EstimatorSettings {
    fn default() -> Self {
        Self {
            kernel: KernelSpec::triangle(),
            bandwidth: None,
            bias_bandwidth: None,
            alpha: 0.05,
            variance_mode: VarianceMode::Paper,
        }
    }
}

impl EstimatorSettings {
    fn config(&self, cutoff: f64, running: &[f64]) -> Result<InferenceConfig, Error> {
        let h = match self.bandwidth {
            Some(h) => h,
            None => rule_of_thumb_bandwidth(running)?,
        };
        let mut cfg = InferenceConfig::new(cutoff, h);
        cfg.b = self.bias_bandwidth.unwrap_or(h);
        cfg.kernel = self.kernel;
        cfg.alpha = self.alpha;
        cfg.variance_mode = self.variance_mode;
        Ok(cfg)
    }
}

/// Everything recorded from one simulated sample.
#[derive(Debug, Clone, Serialize)]
pub struct Replication {
    pub seed: u64,
    pub h: f64,
    pub tau_pdd: f64,
    pub tau_pdd_bc: f64,
    pub se: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    pub tau_rdd_y: f64,
    pub tau_rdd_y_bc: f64,
    pub rdd_se: f64,
    pub rdd_ci_lower: f64,
    pub rdd_ci_upper: f64,
    pub gamma_minus: f64,
    pub first_stage: Option<f64>,
    pub fuzzy: Option<f64>,
}

/// Runs both estimators on one sample drawn with the given seed.
pub fn replicate(spec: &DgpSpec, settings: &EstimatorSettings, seed: u64) -> Result<Replication, Error> {
    let spec = spec.with_seed(seed);
    let sample = simulate(&spec)?;
    let cfg = settings.config(spec.cutoff, &sample.running)?;
    let (point, robust) = match spec.design {
        Design::Sharp => bias_corrected_estimate(&sample, &cfg)?,
        Design::FuzzyHomogeneous => bias_corrected_fuzzy(&sample, &cfg)?,
    };
    let naive = rdd_robust(&sample.running, &sample.outcome, &cfg)?;
    Ok(Replication {
        seed,
        h: cfg.h,
        tau_pdd: point.tau_pdd,
        tau_pdd_bc: robust.estimate_bc,
        se: robust.se,
        ci_lower: robust.ci_lower,
        ci_upper: robust.ci_upper,
        tau_rdd_y: point.tau_rdd_y,
        tau_rdd_y_bc: naive.estimate_bc,
        rdd_se: naive.se,
        rdd_ci_lower: naive.ci_lower,
        rdd_ci_upper: naive.ci_upper,
        gamma_minus: point.gamma_minus[0],
        first_stage: point.tau_rdd_a,
        fuzzy: point.fuzzy,
    })
}

/// Summary of one estimator across replications.
#[derive(Debug, Clone, Serialize)]
pub struct RowSummary {
    pub mean: f64,
    pub bias: f64,
    pub rmse: f64,
    pub empirical_sd: f64,
    /// Standard error of `mean`, i.e. `empirical_sd / sqrt(reps)`.
    pub mc_se: f64,
    pub mean_se: Option<f64>,
    pub coverage: Option<f64>,
}

impl RowSummary {
    /// Summarizes `values` against `target`. Sums run in input order.
    pub fn new(values: &[f64], target: f64) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let mse = values.iter().map(|v| (v - target).powi(2)).sum::<f64>() / n;
        let sd = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { mean, bias: mean - target, rmse: mse.sqrt(), empirical_sd: sd, mc_se: sd / n.sqrt(), mean_se: None, coverage: None }
    }

    fn with_intervals(mut self, se: &[f64], intervals: &[(f64, f64)], target: f64) -> Self {
        let n = intervals.len() as f64;
        self.mean_se = Some(se.iter().sum::<f64>() / se.len() as f64);
        self.coverage = Some(intervals.iter().filter(|(lo, hi)| *lo <= target && target <= *hi).count() as f64 / n);
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct McTruth {
    pub tau: f64,
    pub gamma_minus: f64,
    pub confounding_jump: f64,
    pub first_stage: f64,
}

/// Aggregate Monte Carlo report.
#[derive(Debug, Clone, Serialize)]
pub struct McReport {
    pub design: &'static str,
    pub n: usize,
    pub reps: usize,
    pub base_seed: u64,
    pub failures: usize,
    pub failure_rate: f64,
    pub failure_codes: Vec<String>,
    pub truth: McTruth,
    pub mean_h: f64,
    pub mean_gamma_minus: f64,
    /// Placebo-adjusted point estimate (sharp design) or fuzzy ratio.
    pub pdd: RowSummary,
    /// Bias-corrected placebo-adjusted estimate with its intervals (sharp design only).
    pub pdd_bc: Option<RowSummary>,
    /// Naive local linear discontinuity in the outcome.
    pub naive: RowSummary,
    pub naive_bc: RowSummary,
    pub first_stage: Option<RowSummary>,
}

/// Runs `reps` replications with seeds `base_seed + r` and aggregates them.
pub fn monte_carlo(spec: &DgpSpec, settings: &EstimatorSettings, reps: usize, base_seed: u64) -> Result<McReport, Error> {
    if reps == 0 {
        return Err(Error::InvalidInput("reps must be at least 1".into()));
    }
    spec.validate()?;
    let outcomes = run_replications(spec, settings, reps, base_seed);
    summarize(spec, reps, base_seed, &outcomes)
}

/// Replications in index order; failures are kept rather than propagated.
pub fn run_replications(
    spec: &DgpSpec,
    settings: &EstimatorSettings,
    reps: usize,
    base_seed: u64,
) -> Vec<Result<Replication, Error>> {
    (0..reps as u64)
        .into_par_iter()
        .map(|r| replicate(spec, settings, base_seed.wrapping_add(r)))
        .collect()
}

fn summarize(
    spec: &DgpSpec,
    reps: usize,
    base_seed: u64,
    outcomes: &[Result<Replication, Error>],
) -> Result<McReport, Error> {
    let truth = truth(spec)?;
    let ok: Vec<&Replication> = outcomes.iter().filter_map(|o| o.as_ref().ok()).collect();
    let mut failure_codes: Vec<String> = outcomes
        .iter()
        .filter_map(|o| o.as_ref().err().map(|e| e.code().to_string()))
        .collect();
    failure_codes.sort();
    failure_codes.dedup();
    let failures = reps - ok.len();
    if ok.is_empty() {
        return Err(Error::InvalidInput(format!("all {reps} replications failed ({})", failure_codes.join(", "))));
    }
    let col = |f: fn(&Replication) -> f64| ok.iter().map(|r| f(r)).collect::<Vec<_>>();
    let tau = truth.tau;
    let naive_bc = RowSummary::new(&col(|r| r.tau_rdd_y_bc), tau).with_intervals(
        &col(|r| r.rdd_se),
        &ok.iter().map(|r| (r.rdd_ci_lower, r.rdd_ci_upper)).collect::<Vec<_>>(),
        tau,
    );
    let (pdd, pdd_bc, first_stage) = match spec.design {
        Design::Sharp => {
            let bc = RowSummary::new(&col(|r| r.tau_pdd_bc), tau).with_intervals(
                &col(|r| r.se),
                &ok.iter().map(|r| (r.ci_lower, r.ci_upper)).collect::<Vec<_>>(),
                tau,
            );
            (RowSummary::new(&col(|r| r.tau_pdd), tau), Some(bc), None)
        }
        Design::FuzzyHomogeneous => (
            RowSummary::new(&col(|r| r.fuzzy.unwrap_or(f64::NAN)), tau),
            None,
            Some(RowSummary::new(&col(|r| r.first_stage.unwrap_or(f64::NAN)), truth.first_stage)),
        ),
    };
    let mean = |v: Vec<f64>| v.iter().sum::<f64>() / v.len() as f64;
    Ok(McReport {
        design: spec.design.name(),
        n: spec.n,
        reps,
        base_seed,
        failures,
        failure_rate: failures as f64 / reps as f64,
        failure_codes,
        truth: McTruth {
            tau,
            gamma_minus: truth.gamma_minus,
            confounding_jump: truth.confounding_jump,
            first_stage: truth.first_stage,
        },
        mean_h: mean(col(|r| r.h)),
        mean_gamma_minus: mean(col(|r| r.gamma_minus)),
        pdd,
        pdd_bc,
        naive: RowSummary::new(&col(|r| r.tau_rdd_y), tau),
        naive_bc,
        first_stage,
    })
}
