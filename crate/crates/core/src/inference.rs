//! Robust bias correction, variance estimation and Wald intervals.
//!
//! For each side and each stacked outcome `s ∈ {y, w_1, .., w_q}` the local
//! linear intercept carries a leading bias `½ h² (e₀ᵀ Γ₁⁻¹ Λ) μ_s''(0)`. The
//! curvature `μ_s''(0)` is estimated by a local quadratic fit at the bias
//! bandwidth `b` and subtracted. The corrected discontinuities are combined
//! through `ŝ = (1, −γ̂₋ᵀ)ᵀ ⊗ e₀`, and the variance is the heteroskedastic
//! sandwich of the combined linear operator
//!
//! ```text
//! P_bc = Γ₁⁻¹ R₁ᵀ K − (h/b)³ Γ₁⁻¹ Λ e₂ᵀ Γ₂⁻¹ R₂ᵀ K_b
//! ```
//!
//! with a diagonal residual covariance that ignores within-observation
//! covariance between the stacked outcomes.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::estimator::{agree, estimate_fuzzy, estimate_sharp, DiscontinuityEstimate, EQUIVALENCE_TOL};
use crate::fit::LocalProjector;
use crate::kernel::{sided_weights, KernelSpec, ScaledBasis, Side, SidedWeights};
use crate::sample::Sample;

/// Multiplier of the rule-of-thumb bandwidth `c · sd(D) · n^{-1/5}`.
pub const RULE_OF_THUMB_CONSTANT: f64 = 1.84;

/// How residual variances in the diagonal covariance are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VarianceMode {
    /// `(S_i − bias-corrected intercept)²`
    #[default]
    Paper,
    /// `(S_i − local linear fitted value at D_i)²`
    Fitted,
}

impl VarianceMode {
    pub fn name(self) -> &'static str {
        match self {
            VarianceMode::Paper => "paper",
            VarianceMode::Fitted => "fitted",
        }
    }
}

impl core::str::FromStr for VarianceMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "paper" => Ok(VarianceMode::Paper),
            "fitted" => Ok(VarianceMode::Fitted),
            other => Err(Error::invalid(alloc::format!("unknown variance mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InferenceConfig {
    pub cutoff: f64,
    pub h: f64,
    pub b: f64,
    pub kernel: KernelSpec,
    pub alpha: f64,
    pub variance_mode: VarianceMode,
}

impl InferenceConfig {
    /// Bias bandwidth equal to the main bandwidth, triangle kernel, 95%.
    pub fn new(cutoff: f64, h: f64) -> Self {
        InferenceConfig {
            cutoff,
            h,
            b: h,
            kernel: KernelSpec::triangle(),
            alpha: 0.05,
            variance_mode: VarianceMode::Paper,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite() && self.b > 0.0 && self.b.is_finite()) {
            return Err(Error::invalid("bandwidths must be positive and finite"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid("alpha must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// `2 / b² ×` the scaled quadratic coefficient of a local quadratic fit.
pub fn second_derivative(s: &[f64], weights: &SidedWeights, basis: &ScaledBasis) -> Result<f64> {
    if basis.degree != 2 {
        return Err(Error::invalid("curvature estimation uses the local quadratic basis"));
    }
    let proj = LocalProjector::new(weights, basis)?;
    if s.len() != weights.len() {
        return Err(Error::invalid("outcome length does not match the running variable"));
    }
    Ok(2.0 * proj.coefficients(s)[2] / (basis.bandwidth * basis.bandwidth))
}

/// Bias ingredients for one side.
#[derive(Debug, Clone, PartialEq)]
pub struct SideBias {
    pub side: Side,
    /// `Γ̂₁ = (1/(nh)) R₁ᵀ K R₁`
    pub gamma1: DMatrix<f64>,
    /// `Γ̂₂ = (1/(nb)) R₂ᵀ K_b R₂`
    pub gamma2: DMatrix<f64>,
    /// `Λ̂ = (1/(nh)) R₁ᵀ K ((D − d*)/h)²`
    pub lambda: [f64; 2],
    /// `e₀ᵀ Γ̂₁⁻¹ Λ̂`
    pub bias_constant: f64,
    /// `μ̂_s''(0)` per stacked outcome.
    pub second_derivatives: Vec<f64>,
    /// `½ h² (e₀ᵀ Γ̂₁⁻¹ Λ̂) μ̂_s''(0)` per stacked outcome.
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiasCorrection {
    pub right: SideBias,
    pub left: SideBias,
}

/// Everything the variance needs from one side.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectedSide {
    pub bias: SideBias,
    /// Row `e₀ᵀ P_{±,bc}` over all observations (zero off-side).
    pub p_row: Vec<f64>,
    /// Uncorrected scaled local linear coefficients per stacked outcome.
    pub linear_coefficients: Vec<[f64; 2]>,
    /// Bias-corrected intercepts per stacked outcome.
    pub corrected_intercepts: Vec<f64>,
    /// `(D_i − d*)/h`, for fitted-value residuals.
    scaled: Vec<f64>,
}

impl CorrectedSide {
    pub fn build<C: AsRef<[f64]>>(
        d: &[f64],
        outcomes: &[C],
        side: Side,
        cutoff: f64,
        h: f64,
        b: f64,
        kernel: &KernelSpec,
    ) -> Result<Self> {
        let n = d.len();
        let nf = n as f64;
        let wh = sided_weights(d, cutoff, h, side, kernel)?;
        let bh = ScaledBasis::new(d, cutoff, h, 1)?;
        let lin = LocalProjector::new(&wh, &bh)?;
        let wb = sided_weights(d, cutoff, b, side, kernel)?;
        let bb = ScaledBasis::new(d, cutoff, b, 2)?;
        let quad = LocalProjector::new(&wb, &bb)?;

        let mut lambda = [0.0; 2];
        for (i, &om) in wh.weights.iter().enumerate() {
            if om == 0.0 {
                continue;
            }
            let u = bh.scaled_distance(i);
            lambda[0] += om * u * u;
            lambda[1] += om * u * u * u;
        }
        lambda[0] /= nf;
        lambda[1] /= nf;
        let g1inv = lin.gram_inverse();
        let bias_constant = g1inv[(0, 0)] * lambda[0] + g1inv[(0, 1)] * lambda[1];

        let mut second_derivatives = Vec::with_capacity(outcomes.len());
        let mut bias = Vec::with_capacity(outcomes.len());
        let mut linear_coefficients = Vec::with_capacity(outcomes.len());
        let mut corrected_intercepts = Vec::with_capacity(outcomes.len());
        for s in outcomes {
            let s = s.as_ref();
            if s.len() != n {
                return Err(Error::invalid("outcome length does not match the running variable"));
            }
            let c = lin.coefficients(s);
            let mu2 = 2.0 * quad.coefficients(s)[2] / (b * b);
            let bk = 0.5 * h * h * bias_constant * mu2;
            second_derivatives.push(mu2);
            bias.push(bk);
            linear_coefficients.push([c[0], c[1]]);
            corrected_intercepts.push(c[0] - bk);
        }

        // e₀ᵀ P_bc, with K = diag(h ω) and K_b = diag(b ω_b).
        let g2inv = quad.gram_inverse();
        let ratio3 = (h / b) * (h / b) * (h / b);
        let p_row = (0..n)
            .map(|i| {
                let mut v = 0.0;
                if wh.weights[i] > 0.0 {
                    let r = bh.row(i);
                    v += (g1inv[(0, 0)] * r[0] + g1inv[(0, 1)] * r[1]) * h * wh.weights[i];
                }
                if wb.weights[i] > 0.0 {
                    let r = bb.row(i);
                    let e2 = g2inv[(2, 0)] * r[0] + g2inv[(2, 1)] * r[1] + g2inv[(2, 2)] * r[2];
                    v -= ratio3 * bias_constant * e2 * b * wb.weights[i];
                }
                v
            })
            .collect();

        Ok(CorrectedSide {
            bias: SideBias {
                side,
                gamma1: lin.gram().clone(),
                gamma2: quad.gram().clone(),
                lambda,
                bias_constant,
                second_derivatives,
                bias,
            },
            p_row,
            linear_coefficients,
            corrected_intercepts,
            scaled: (0..n).map(|i| bh.scaled_distance(i)).collect(),
        })
    }

    /// `(1/(nh)) Σ_i P_i s_i`: the bias-corrected intercept via the single
    /// matrix expression.
    pub fn apply(&self, s: &[f64], h: f64) -> f64 {
        let nh = self.p_row.len() as f64 * h;
        self.p_row.iter().zip(s).map(|(p, v)| p * v).sum::<f64>() / nh
    }

    fn residual(&self, k: usize, i: usize, value: f64, mode: VarianceMode) -> f64 {
        match mode {
            VarianceMode::Paper => value - self.corrected_intercepts[k],
            VarianceMode::Fitted => {
                let c = self.linear_coefficients[k];
                value - c[0] - c[1] * self.scaled[i]
            }
        }
    }
}

/// `V̂_bc = (1/(nh)) Σ_± ŝᵀ (I ⊗ P_±) Σ̂_± (I ⊗ P_±)ᵀ ŝ` evaluated per side.
/// The diagonal `Σ̂` collapses each quadratic form to
/// `Σ_k ŝ_k² Σ_i P_i² σ̂²_{k,i}`.
pub fn variance<C: AsRef<[f64]>>(
    right: &CorrectedSide,
    left: &CorrectedSide,
    outcomes: &[C],
    s_hat: &[f64],
    h: f64,
    mode: VarianceMode,
) -> f64 {
    let n = right.p_row.len();
    let mut total = 0.0;
    for side in [right, left] {
        for (k, s) in outcomes.iter().enumerate() {
            let s = s.as_ref();
            let mut acc = 0.0;
            for i in 0..n {
                let p = side.p_row[i];
                if p == 0.0 {
                    continue;
                }
                let e = side.residual(k, i, s[i], mode);
                acc += p * p * e * e;
            }
            total += s_hat[k] * s_hat[k] * acc;
        }
    }
    total / (n as f64 * h)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustEstimate {
    /// Uncorrected combined discontinuity `ŝᵀ vec(τ̂^s)`.
    pub estimate: f64,
    /// Bias-corrected combined discontinuity, componentwise route.
    pub estimate_bc: f64,
    /// Bias-corrected combined discontinuity, single-operator route.
    pub estimate_bc_operator: f64,
    /// Bias-corrected discontinuity of each stacked outcome.
    pub tau_bc: Vec<f64>,
    pub v_bc: f64,
    /// `sqrt(V̂_bc / (nh))`
    pub se: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    /// Set when `V̂_bc = 0` and the interval collapses to a point.
    pub degenerate: bool,
    pub alpha: f64,
    pub h: f64,
    pub b: f64,
    pub n: usize,
    pub s_hat: Vec<f64>,
    pub bias: BiasCorrection,
}

/// Robust bias-corrected inference for the combination `ŝᵀ` of the
/// discontinuities of the stacked outcomes.
pub fn robust_discontinuity<C: AsRef<[f64]>>(
    d: &[f64],
    outcomes: &[C],
    s_hat: &[f64],
    cfg: &InferenceConfig,
) -> Result<RobustEstimate> {
    cfg.validate()?;
    if outcomes.is_empty() || outcomes.len() != s_hat.len() {
        return Err(Error::invalid("combination weights must match the stacked outcomes"));
    }
    let right = CorrectedSide::build(d, outcomes, Side::Right, cfg.cutoff, cfg.h, cfg.b, &cfg.kernel)?;
    let left = CorrectedSide::build(d, outcomes, Side::Left, cfg.cutoff, cfg.h, cfg.b, &cfg.kernel)?;

    let q1 = outcomes.len();
    let mut estimate = 0.0;
    let mut estimate_bc = 0.0;
    let mut estimate_bc_operator = 0.0;
    let mut tau_bc = Vec::with_capacity(q1);
    let mut scale = 0.0_f64;
    for k in 0..q1 {
        let raw = right.linear_coefficients[k][0] - left.linear_coefficients[k][0];
        let bc = raw - (right.bias.bias[k] - left.bias.bias[k]);
        let op = right.apply(outcomes[k].as_ref(), cfg.h) - left.apply(outcomes[k].as_ref(), cfg.h);
        estimate += s_hat[k] * raw;
        estimate_bc += s_hat[k] * bc;
        estimate_bc_operator += s_hat[k] * op;
        scale = scale
            .max((s_hat[k] * right.corrected_intercepts[k]).abs())
            .max((s_hat[k] * left.corrected_intercepts[k]).abs())
            .max((s_hat[k] * bc).abs());
        tau_bc.push(bc);
    }
    if !agree(estimate_bc, estimate_bc_operator, scale, EQUIVALENCE_TOL) {
        return Err(Error::EquivalenceBreach { what: "tau_bc", left: estimate_bc, right: estimate_bc_operator });
    }

    let v_bc = variance(&right, &left, outcomes, s_hat, cfg.h, cfg.variance_mode);
    let n = d.len();
    let se = libm::sqrt(v_bc / (n as f64 * cfg.h));
    let (ci_lower, ci_upper, degenerate) = match confidence_interval(estimate_bc, se, cfg.alpha) {
        Ok((lo, hi)) => (lo, hi, false),
        Err(Error::DegenerateVariance) => (estimate_bc, estimate_bc, true),
        Err(e) => return Err(e),
    };
    Ok(RobustEstimate {
        estimate,
        estimate_bc,
        estimate_bc_operator,
        tau_bc,
        v_bc,
        se,
        ci_lower,
        ci_upper,
        degenerate,
        alpha: cfg.alpha,
        h: cfg.h,
        b: cfg.b,
        n,
        s_hat: s_hat.to_vec(),
        bias: BiasCorrection { right: right.bias, left: left.bias },
    })
}

/// Placebo-adjusted point estimate together with its robust bias-corrected
/// inference. `ŝ = (1, −γ̂₋ᵀ)`.
pub fn bias_corrected_estimate(sample: &Sample, cfg: &InferenceConfig) -> Result<(DiscontinuityEstimate, RobustEstimate)> {
    cfg.validate()?;
    let est = estimate_sharp(sample, cfg.cutoff, cfg.h, &cfg.kernel)?;
    let robust = robust_for(sample, &est, cfg)?;
    Ok((est, robust))
}

/// Fuzzy variant: the robust fields refer to the placebo-adjusted numerator.
pub fn bias_corrected_fuzzy(sample: &Sample, cfg: &InferenceConfig) -> Result<(DiscontinuityEstimate, RobustEstimate)> {
    cfg.validate()?;
    let est = estimate_fuzzy(sample, cfg.cutoff, cfg.h, &cfg.kernel)?;
    let robust = robust_for(sample, &est, cfg)?;
    Ok((est, robust))
}

fn robust_for(sample: &Sample, est: &DiscontinuityEstimate, cfg: &InferenceConfig) -> Result<RobustEstimate> {
    let mut outcomes: Vec<&[f64]> = vec![&sample.outcome];
    outcomes.extend(sample.placebo_outcomes.iter().map(Vec::as_slice));
    let mut s_hat = vec![1.0];
    s_hat.extend(est.gamma_minus.iter().map(|g| -g));
    let robust = robust_discontinuity(&sample.running, &outcomes, &s_hat, cfg)?;
    let scale = est.tau_rdd_y.abs().max(est.tau_pdd.abs());
    if !agree(robust.estimate, est.tau_pdd, scale, EQUIVALENCE_TOL) {
        return Err(Error::EquivalenceBreach { what: "tau_pdd (stacked)", left: robust.estimate, right: est.tau_pdd });
    }
    Ok(robust)
}

/// Plain local linear RDD with robust bias-corrected inference (`ŝ = e₀`).
pub fn rdd_robust(d: &[f64], y: &[f64], cfg: &InferenceConfig) -> Result<RobustEstimate> {
    robust_discontinuity(d, &[y], &[1.0], cfg)
}

/// `estimate ± z_{1−α/2} · se`
pub fn confidence_interval(estimate: f64, se: f64, alpha: f64) -> Result<(f64, f64)> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid("alpha must lie in (0, 1)"));
    }
    if !se.is_finite() || se < 0.0 {
        return Err(Error::invalid("standard error must be finite and nonnegative"));
    }
    if se == 0.0 {
        return Err(Error::DegenerateVariance);
    }
    let z = normal_quantile(1.0 - alpha / 2.0);
    Ok((estimate - z * se, estimate + z * se))
}

/// Inverse of the standard normal CDF.
///
/// Acklam's rational approximation followed by one Halley step against
/// `erfc`, which brings the error to the level of double rounding.
pub fn normal_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383_577_518_672_69e2,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00, 3.754408661907416e+00];
    const P_LOW: f64 = 0.02425;

    if p.is_nan() || !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    let x = if p < P_LOW {
        let q = libm::sqrt(-2.0 * libm::log(p));
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = libm::sqrt(-2.0 * libm::log(1.0 - p));
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let e = 0.5 * libm::erfc(-x / core::f64::consts::SQRT_2) - p;
    let u = e * libm::sqrt(2.0 * core::f64::consts::PI) * libm::exp(x * x / 2.0);
    x - u / (1.0 + x * u / 2.0)
}

/// `1.84 · sd(D) · n^{-1/5}` with the unbiased sample standard deviation.
pub fn rule_of_thumb_bandwidth(d: &[f64]) -> Result<f64> {
    let n = d.len();
    if n < 2 {
        return Err(Error::invalid("rule-of-thumb bandwidth needs at least two observations"));
    }
    let nf = n as f64;
    let mean = d.iter().sum::<f64>() / nf;
    let var = d.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (nf - 1.0);
    let sd = libm::sqrt(var);
    if !(sd > 0.0 && sd.is_finite()) {
        return Err(Error::invalid("running variable has no spread"));
    }
    Ok(RULE_OF_THUMB_CONSTANT * sd * libm::pow(nf, -0.2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, lo: f64, hi: f64) -> Vec<f64> {
        (0..n).map(|i| lo + (hi - lo) * (i as f64 + 0.5) / n as f64).collect()
    }

    #[test]
    fn quantiles() {
        assert!((normal_quantile(0.975) - 1.959_963_984_540_054).abs() < 1e-12);
        assert!((normal_quantile(0.5)).abs() < 1e-15);
        assert!((normal_quantile(0.84) - 0.994_457_883_209_753_1).abs() < 1e-12);
        assert!((normal_quantile(0.001) + 3.090_232_306_167_813_5).abs() < 1e-11);
        assert!((normal_quantile(1e-10) + 6.361_340_902_404_056).abs() < 1e-9);
        assert!(normal_quantile(-0.1).is_nan());
    }

    #[test]
    fn unit_interval() {
        let (lo, hi) = confidence_interval(0.0, 1.0, 0.05).unwrap();
        assert!((lo + 1.959964).abs() < 1e-6 && (hi - 1.959964).abs() < 1e-6);
        let (lo, hi) = confidence_interval(0.0, 1.0, 0.32).unwrap();
        assert!((hi - 0.994_457_883_209_753_1).abs() < 1e-10 && lo < 0.0);
        assert!(matches!(confidence_interval(1.0, 0.0, 0.05), Err(Error::DegenerateVariance)));
        assert!(confidence_interval(1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn curvature_of_quadratic() {
        let d = grid(30, 0.0, 1.0);
        let s: Vec<f64> = d.iter().map(|x| 1.0 + x + 4.0 * x * x).collect();
        let w = sided_weights(&d, 0.0, 0.8, Side::Right, &KernelSpec::triangle()).unwrap();
        let b = ScaledBasis::new(&d, 0.0, 0.8, 2).unwrap();
        assert!((second_derivative(&s, &w, &b).unwrap() - 8.0).abs() < 1e-9);
        let lin: Vec<f64> = d.iter().map(|x| 3.0 - 2.0 * x).collect();
        assert!(second_derivative(&lin, &w, &b).unwrap().abs() < 1e-10);
    }

    // Right-side grid u = 0.1, 0.2, .., 1.0 (window, b = 1, equal weights),
    // s = u³. Normal equations Σ r rᵀ c = Σ r s with
    //   Σ1 = 10, Σu = 5.5, Σu² = 3.85, Σu³ = 3.025, Σu⁴ = 2.5333, Σu⁵ = 2.20825
    // give a quadratic coefficient c₂ = 1.65 (exactly 33/20), so μ'' = 3.3.
    #[test]
    fn curvature_of_cubic_matches_normal_equations() {
        let d: Vec<f64> = (1..=10).map(|i| i as f64 / 10.0).collect();
        let s: Vec<f64> = d.iter().map(|x| x * x * x).collect();
        let w = sided_weights(&d, 0.0, 1.0, Side::Right, &KernelSpec::window()).unwrap();
        let b = ScaledBasis::new(&d, 0.0, 1.0, 2).unwrap();
        assert!((second_derivative(&s, &w, &b).unwrap() - 3.3).abs() < 1e-10);
    }

    #[test]
    fn quadratic_means_are_corrected_exactly() {
        let d = grid(80, -1.0, 1.0);
        let y: Vec<f64> = d.iter().map(|&x| 0.9 * f64::from(u8::from(x >= 0.0)) + x * x).collect();
        let cfg = InferenceConfig::new(0.0, 0.7);
        let r = rdd_robust(&d, &y, &cfg).unwrap();
        assert!((r.estimate_bc - 0.9).abs() < 1e-10);
        assert!((r.estimate_bc_operator - 0.9).abs() < 1e-10);

        // different curvature on each side, so the uncorrected biases do not cancel
        let y: Vec<f64> = d.iter().map(|&x| if x >= 0.0 { 0.9 + x * x } else { -2.0 * x * x + 0.5 * x }).collect();
        let r = rdd_robust(&d, &y, &cfg).unwrap();
        assert!((r.estimate - 0.9).abs() > 1e-2);
        assert!((r.estimate_bc - 0.9).abs() < 1e-10);
    }

    #[test]
    fn linear_means_need_no_correction() {
        let d = grid(60, -1.0, 1.0);
        let y: Vec<f64> = d.iter().map(|&x| 2.0 * f64::from(u8::from(x >= 0.0)) + 0.5 * x).collect();
        let r = rdd_robust(&d, &y, &InferenceConfig::new(0.0, 0.5)).unwrap();
        assert!((r.estimate_bc - r.estimate).abs() < 1e-12);
        // noiseless and linear: paper residuals around the intercept are not
        // zero, fitted residuals are
        let mut cfg = InferenceConfig::new(0.0, 0.5);
        cfg.variance_mode = VarianceMode::Fitted;
        let r = rdd_robust(&d, &y, &cfg).unwrap();
        assert!(r.v_bc < 1e-20);
    }

    #[test]
    fn constant_outcomes_have_zero_variance() {
        let d = grid(60, -1.0, 1.0);
        let y = vec![3.0; 60];
        let r = rdd_robust(&d, &y, &InferenceConfig::new(0.0, 0.5)).unwrap();
        assert!(r.v_bc < 1e-25);
        assert!((r.estimate_bc).abs() < 1e-12);
    }

    #[test]
    fn rule_of_thumb() {
        let d = [1.0, 2.0, 3.0, 4.0];
        let sd = (5.0_f64 / 3.0).sqrt();
        let h = rule_of_thumb_bandwidth(&d).unwrap();
        assert!((h - 1.84 * sd * 4.0_f64.powf(-0.2)).abs() < 1e-14);
        assert!(rule_of_thumb_bandwidth(&[1.0, 1.0]).is_err());
    }

    #[test]
    fn variance_mode_names() {
        assert_eq!("paper".parse::<VarianceMode>().unwrap(), VarianceMode::Paper);
        assert_eq!("FITTED".parse::<VarianceMode>().unwrap(), VarianceMode::Fitted);
        assert!("hc3".parse::<VarianceMode>().is_err());
    }
}
