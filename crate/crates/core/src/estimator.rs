//! Placebo-adjusted discontinuity estimators for sharp and fuzzy designs.
//!
//! The point estimate is
//!
//! ```text
//! τ̂_pdd = τ̂_rdd^y − (τ̂_rdd^w)ᵀ γ̂₋
//! ```
//!
//! where `τ̂_rdd^s` are local linear intercept differences at the cutoff and
//! `γ̂₋` is the left-side local IV coefficient of `Y` on `W` instrumented by
//! `Z`. It is computed twice, once in this decomposed form and once from the
//! local IV intercepts anchored on the right-limit placebo mean, and the two
//! must agree.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fit::{local_iv_fit, IvFit, LocalProjector};
use crate::kernel::{sided_weights, KernelSpec, ScaledBasis, Side};
use crate::sample::Sample;

/// Relative tolerance for agreement between the two τ̂_pdd routes.
pub const EQUIVALENCE_TOL: f64 = 1e-8;
/// First-stage discontinuities at or below this magnitude are rejected.
pub const FIRST_STAGE_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct DiscontinuityEstimate {
    pub tau_rdd_y: f64,
    pub tau_rdd_w: Vec<f64>,
    /// Treatment discontinuity (fuzzy designs only).
    pub tau_rdd_a: Option<f64>,
    pub gamma_minus: Vec<f64>,
    pub gamma_plus: Vec<f64>,
    pub tau_pdd: f64,
    /// Same quantity from the local IV intercepts.
    pub tau_pdd_iv_form: f64,
    /// Two-adjustment alternative anchored on the unconditional mean of `W`.
    /// Reported without inference.
    pub tau_tilde: f64,
    /// `τ̂_pdd / τ̂_rdd^a` (fuzzy designs only).
    pub fuzzy: Option<f64>,
    pub beta_y_plus: f64,
    pub beta_y_minus: f64,
    pub beta_w_plus: Vec<f64>,
    pub beta_w_minus: Vec<f64>,
    pub alpha_plus: f64,
    pub alpha_minus: f64,
    pub iv_right: IvFit,
    pub iv_left: IvFit,
    /// Positive-weight counts per side.
    pub n_left: usize,
    pub n_right: usize,
}

impl DiscontinuityEstimate {
    /// The headline number: the fuzzy ratio when available, otherwise τ̂_pdd.
    pub fn point(&self) -> f64 {
        self.fuzzy.unwrap_or(self.tau_pdd)
    }
}

pub(crate) fn agree(a: f64, b: f64, scale: f64, tol: f64) -> bool {
    let scale = scale.max(a.abs()).max(b.abs());
    (a - b).abs() <= tol * scale || (a - b).abs() <= f64::MIN_POSITIVE
}

/// Difference of right and left local linear intercepts of `s` at the cutoff.
pub fn rdd_discontinuity(s: &[f64], d: &[f64], cutoff: f64, h: f64, k: &KernelSpec) -> Result<f64> {
    if s.len() != d.len() {
        return Err(Error::invalid("outcome length does not match the running variable"));
    }
    let basis = ScaledBasis::new(d, cutoff, h, 1)?;
    let mut intercepts = [0.0; 2];
    for (slot, side) in intercepts.iter_mut().zip([Side::Right, Side::Left]) {
        let w = sided_weights(d, cutoff, h, side, k)?;
        *slot = LocalProjector::new(&w, &basis)?.coefficients(s)[0];
    }
    Ok(intercepts[0] - intercepts[1])
}

struct SideResult {
    beta_y: f64,
    beta_w: Vec<f64>,
    iv: IvFit,
    n_positive: usize,
}

fn fit_side(sample: &Sample, cutoff: f64, h: f64, k: &KernelSpec, side: Side, basis: &ScaledBasis) -> Result<SideResult> {
    let w = sided_weights(&sample.running, cutoff, h, side, k)?;
    let proj = LocalProjector::new(&w, basis)?;
    let beta_y = proj.coefficients(&sample.outcome)[0];
    let beta_w = sample.placebo_outcomes.iter().map(|c| proj.coefficients(c)[0]).collect();
    let iv = local_iv_fit(&sample.outcome, &sample.placebo_outcomes, &sample.placebo_treatments, &w, basis)?;
    Ok(SideResult { beta_y, beta_w, iv, n_positive: w.n_positive })
}

pub fn estimate_sharp(sample: &Sample, cutoff: f64, h: f64, k: &KernelSpec) -> Result<DiscontinuityEstimate> {
    sample.check_shape()?;
    sample.require_placebos()?;
    let basis = ScaledBasis::new(&sample.running, cutoff, h, 1)?;
    let right = fit_side(sample, cutoff, h, k, Side::Right, &basis)?;
    let left = fit_side(sample, cutoff, h, k, Side::Left, &basis)?;

    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let gamma_minus = left.iv.gamma.clone();
    let gamma_plus = right.iv.gamma.clone();
    let tau_rdd_y = right.beta_y - left.beta_y;
    let tau_rdd_w: Vec<f64> = right.beta_w.iter().zip(&left.beta_w).map(|(p, m)| p - m).collect();
    let adjustment = dot(&tau_rdd_w, &gamma_minus);
    let tau_pdd = tau_rdd_y - adjustment;

    let right_anchor_plus = dot(&right.beta_w, &gamma_plus);
    let right_anchor_minus = dot(&right.beta_w, &gamma_minus);
    let tau_pdd_iv_form = right.iv.intercept + right_anchor_plus - left.iv.intercept - right_anchor_minus;

    let scale = [tau_rdd_y, adjustment, right.iv.intercept, left.iv.intercept, right_anchor_plus, right_anchor_minus]
        .iter()
        .fold(0.0_f64, |acc, v| acc.max(v.abs()));
    if !agree(tau_pdd, tau_pdd_iv_form, scale, EQUIVALENCE_TOL) {
        return Err(Error::EquivalenceBreach { what: "tau_pdd", left: tau_pdd, right: tau_pdd_iv_form });
    }

    let n = sample.n() as f64;
    let w_mean: Vec<f64> = sample.placebo_outcomes.iter().map(|c| c.iter().sum::<f64>() / n).collect();
    let tau_tilde = tau_rdd_y
        + w_mean.iter().zip(&right.beta_w).zip(&gamma_plus).map(|((m, b), g)| (m - b) * g).sum::<f64>()
        - w_mean.iter().zip(&left.beta_w).zip(&gamma_minus).map(|((m, b), g)| (m - b) * g).sum::<f64>();

    Ok(DiscontinuityEstimate {
        tau_rdd_y,
        tau_rdd_w,
        tau_rdd_a: None,
        gamma_minus,
        gamma_plus,
        tau_pdd,
        tau_pdd_iv_form,
        tau_tilde,
        fuzzy: None,
        beta_y_plus: right.beta_y,
        beta_y_minus: left.beta_y,
        beta_w_plus: right.beta_w,
        beta_w_minus: left.beta_w,
        alpha_plus: right.iv.intercept,
        alpha_minus: left.iv.intercept,
        iv_right: right.iv,
        iv_left: left.iv,
        n_left: left.n_positive,
        n_right: right.n_positive,
    })
}

/// Placebo-adjusted numerator divided by the treatment discontinuity.
pub fn estimate_fuzzy(sample: &Sample, cutoff: f64, h: f64, k: &KernelSpec) -> Result<DiscontinuityEstimate> {
    let a = sample.treatment.as_ref().ok_or_else(|| Error::invalid("fuzzy design requires a treatment column"))?;
    let mut est = estimate_sharp(sample, cutoff, h, k)?;
    let jump = rdd_discontinuity(a, &sample.running, cutoff, h, k)?;
    if !(jump.abs() > FIRST_STAGE_FLOOR) {
        return Err(Error::WeakFirstStage { jump });
    }
    est.tau_rdd_a = Some(jump);
    est.fuzzy = Some(est.tau_pdd / jump);
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn grid(n: usize, lo: f64, hi: f64) -> Vec<f64> {
        (0..n).map(|i| lo + (hi - lo) * (i as f64 + 0.5) / n as f64).collect()
    }

    #[test]
    fn pure_step() {
        let d = grid(40, -1.0, 1.0);
        let s: Vec<f64> = d.iter().map(|&x| if x >= 0.0 { 1.0 } else { 0.0 }).collect();
        let tau = rdd_discontinuity(&s, &d, 0.0, 0.8, &KernelSpec::triangle()).unwrap();
        assert!((tau - 1.0).abs() < 1e-12);
    }

    #[test]
    fn continuous_line_has_no_jump() {
        let d = grid(40, -1.0, 1.0);
        let s: Vec<f64> = d.iter().map(|&x| 0.3 - 1.7 * x).collect();
        let tau = rdd_discontinuity(&s, &d, 0.0, 0.8, &KernelSpec::triangle()).unwrap();
        assert!(tau.abs() < 1e-12);
    }

    // 40 evenly spaced points on (-1, 1), window kernel covering all of them.
    // Each side is exactly linear, so the normal equations reproduce the line
    // and the intercept difference is the step height.
    #[test]
    fn step_plus_slope_on_even_grid() {
        let d = grid(40, -1.0, 1.0);
        let s: Vec<f64> = d.iter().map(|&x| 0.7 * f64::from(u8::from(x >= 0.0)) + 2.0 * x).collect();
        let tau = rdd_discontinuity(&s, &d, 0.0, 1.5, &KernelSpec::window()).unwrap();
        assert!((tau - 0.7).abs() < 1e-12);
    }

    fn pseudo(i: usize, salt: u64) -> f64 {
        let mut x = (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ salt;
        x ^= x >> 33;
        x = x.wrapping_mul(0xff51_afd7_ed55_8ccd);
        x ^= x >> 33;
        (x >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    }

    fn placebo_sample(n: usize, w_jump: f64) -> Sample {
        let d = grid(n, -1.0, 1.0);
        let z: Vec<f64> = (0..n).map(|i| pseudo(i, 1)).collect();
        let w: Vec<f64> =
            (0..n).map(|i| z[i] + 0.5 * pseudo(i, 2) + 0.4 * d[i] + if d[i] >= 0.0 { w_jump } else { 0.0 }).collect();
        let y: Vec<f64> = (0..n).map(|i| 1.0 + d[i] + 2.0 * w[i] + 0.3 * pseudo(i, 3)).collect();
        Sample::new(d, y, None, vec![w], vec![z]).unwrap()
    }

    #[test]
    fn zero_placebo_jump_leaves_rdd_untouched() {
        // On a symmetric grid, an even function of d has identical left and
        // right local linear intercepts, so τ̂_rdd^w vanishes.
        let n = 200;
        let d = grid(n, -1.0, 1.0);
        let even: Vec<f64> = (0..n).map(|i| pseudo(i.min(n - 1 - i), 4)).collect();
        let w: Vec<f64> = (0..n).map(|i| even[i] + 0.5 * d[i]).collect();
        let z: Vec<f64> = (0..n).map(|i| even[i] + 0.3 * pseudo(i, 5)).collect();
        let y: Vec<f64> = (0..n).map(|i| 1.0 + d[i] + w[i] + 0.5 * f64::from(u8::from(d[i] >= 0.0))).collect();
        let s = Sample::new(d, y, None, vec![w], vec![z]).unwrap();
        let est = estimate_sharp(&s, 0.0, 0.9, &KernelSpec::triangle()).unwrap();
        assert!(est.tau_rdd_w[0].abs() < 1e-13);
        assert!((est.tau_pdd - est.tau_rdd_y).abs() < 1e-12);
        assert!((est.tau_pdd - 0.5).abs() < 1e-12);
    }

    #[test]
    fn decomposition_matches_iv_form() {
        let s = placebo_sample(300, 0.6);
        let est = estimate_sharp(&s, 0.0, 0.7, &KernelSpec::triangle()).unwrap();
        assert!((est.tau_pdd - est.tau_pdd_iv_form).abs() < 1e-10);
        // The placebo jump of 0.6 enters Y with loading 2 and is removed.
        assert!((est.tau_rdd_y - est.tau_pdd - est.tau_rdd_w[0] * est.gamma_minus[0]).abs() < 1e-12);
        assert!((est.gamma_minus[0] - 2.0).abs() < 0.3);
    }

    #[test]
    fn sharp_treatment_makes_fuzzy_equal_sharp() {
        let mut s = placebo_sample(200, 0.3);
        s.treatment = Some(s.running.iter().map(|&d| f64::from(u8::from(d >= 0.0))).collect());
        let k = KernelSpec::triangle();
        let sharp = estimate_sharp(&s, 0.0, 0.8, &k).unwrap();
        let fuzzy = estimate_fuzzy(&s, 0.0, 0.8, &k).unwrap();
        assert!((fuzzy.tau_rdd_a.unwrap() - 1.0).abs() < 1e-12);
        assert!((fuzzy.fuzzy.unwrap() - sharp.tau_pdd).abs() < 1e-12);
    }

    #[test]
    fn half_compliance_doubles() {
        let mut s = placebo_sample(200, 0.3);
        s.treatment = Some(s.running.iter().map(|&d| 0.25 + 0.5 * f64::from(u8::from(d >= 0.0))).collect());
        let est = estimate_fuzzy(&s, 0.0, 0.8, &KernelSpec::triangle()).unwrap();
        assert!((est.tau_rdd_a.unwrap() - 0.5).abs() < 1e-12);
        assert!((est.fuzzy.unwrap() - 2.0 * est.tau_pdd).abs() < 1e-12);
    }

    #[test]
    fn flat_treatment_is_weak_first_stage() {
        let mut s = placebo_sample(100, 0.3);
        s.treatment = Some(vec![0.4; 100]);
        assert!(matches!(
            estimate_fuzzy(&s, 0.0, 0.8, &KernelSpec::triangle()),
            Err(Error::WeakFirstStage { .. })
        ));
        s.treatment = None;
        assert!(matches!(estimate_fuzzy(&s, 0.0, 0.8, &KernelSpec::triangle()), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn placebos_required() {
        let d = grid(50, -1.0, 1.0);
        let s = Sample::new(d.clone(), d, None, vec![], vec![]).unwrap();
        assert!(matches!(estimate_sharp(&s, 0.0, 0.5, &KernelSpec::triangle()), Err(Error::InvalidInput(_))));
    }
}
