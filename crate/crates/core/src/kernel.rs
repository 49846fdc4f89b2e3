//! Kernel functions, one-sided locality weights and the bandwidth-scaled
//! polynomial basis shared by every local fit.
//!
//! Weights follow the convention `ω_i = (1/h) 1{side} K(|D_i - d*| / h)`.
//! They are never normalized. An observation sitting exactly at the cutoff
//! belongs to the right side.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelKind {
    /// `K(u) = 1{u <= 1}`
    Window,
    /// `K(u) = (1 - u) 1{u <= 1}`
    Triangle,
    /// `K(u) = exp(-u^2 / (2λ)) / sqrt(2πλ)`
    Gaussian,
}

impl KernelKind {
    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Window => "window",
            KernelKind::Triangle => "triangle",
            KernelKind::Gaussian => "gaussian",
        }
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "window" | "uniform" => Ok(KernelKind::Window),
            "triangle" | "triangular" => Ok(KernelKind::Triangle),
            "gaussian" => Ok(KernelKind::Gaussian),
            other => Err(Error::invalid(alloc::format!("unknown kernel `{other}`"))),
        }
    }
}

/// A kernel together with its shape parameter.
///
/// `lambda` is the Gaussian variance parameter and is ignored by the compact
/// kernels. `gain` multiplies the kernel; every estimator output is invariant
/// to it, which makes it useful for checking that invariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub lambda: f64,
    pub gain: f64,
}

impl KernelSpec {
    pub const fn new(kind: KernelKind) -> Self {
        KernelSpec { kind, lambda: 1.0, gain: 1.0 }
    }

    pub const fn window() -> Self {
        Self::new(KernelKind::Window)
    }

    pub const fn triangle() -> Self {
        Self::new(KernelKind::Triangle)
    }

    pub fn gaussian(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::invalid("gaussian kernel scale must be positive"));
        }
        Ok(KernelSpec { kind: KernelKind::Gaussian, lambda, gain: 1.0 })
    }

    /// The same kernel multiplied by `c > 0`.
    pub fn scaled(self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::invalid("kernel gain must be positive"));
        }
        Ok(KernelSpec { gain: self.gain * c, ..self })
    }

    pub fn value(&self, u: f64) -> Result<f64> {
        kernel_value(self, u)
    }

    /// Kernel evaluation without the domain check; `u` must be nonnegative.
    #[inline]
    pub(crate) fn eval(&self, u: f64) -> f64 {
        let raw = match self.kind {
            KernelKind::Window => {
                if u <= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            KernelKind::Triangle => {
                if u <= 1.0 {
                    1.0 - u
                } else {
                    0.0
                }
            }
            KernelKind::Gaussian => {
                libm::exp(-u * u / (2.0 * self.lambda))
                    / libm::sqrt(2.0 * core::f64::consts::PI * self.lambda)
            }
        };
        self.gain * raw
    }
}

impl Default for KernelSpec {
    fn default() -> Self {
        Self::triangle()
    }
}

/// Evaluates `K(u)` on the nonnegative half-line.
pub fn kernel_value(k: &KernelSpec, u: f64) -> Result<f64> {
    if !(u >= 0.0) {
        return Err(Error::invalid("kernel argument must be a nonnegative number"));
    }
    Ok(k.eval(u))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    /// `D < d*`
    Left,
    /// `D >= d*`
    Right,
}

impl Side {
    #[inline]
    pub fn contains(self, d: f64, cutoff: f64) -> bool {
        match self {
            Side::Left => d < cutoff,
            Side::Right => d >= cutoff,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Left => "left",
            Side::Right => "right",
        })
    }
}

/// Per-observation locality weights for one side of the cutoff.
#[derive(Debug, Clone, PartialEq)]
pub struct SidedWeights {
    pub side: Side,
    pub cutoff: f64,
    pub bandwidth: f64,
    pub weights: Vec<f64>,
    /// Number of strictly positive weights.
    pub n_positive: usize,
    /// Number of weights above `1e-12` times the largest weight.
    pub n_effective: usize,
}

impl SidedWeights {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Errors with `SingularSupport` unless at least `min` observations carry
    /// positive weight.
    pub fn require_support(&self, min: usize) -> Result<()> {
        if self.n_positive < min {
            return Err(Error::SingularSupport { side: self.side, support: self.n_positive, rcond: 0.0 });
        }
        Ok(())
    }

    /// Kernel-matrix diagonal as used in the Gram formulas: `h * ω_i`.
    pub fn kernel_diagonal(&self) -> impl Iterator<Item = f64> + '_ {
        self.weights.iter().map(move |w| w * self.bandwidth)
    }
}

pub fn sided_weights(d: &[f64], cutoff: f64, h: f64, side: Side, k: &KernelSpec) -> Result<SidedWeights> {
    if d.is_empty() {
        return Err(Error::invalid("running variable is empty"));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::invalid("bandwidth must be a positive finite number"));
    }
    if !cutoff.is_finite() {
        return Err(Error::invalid("cutoff must be finite"));
    }
    let weights: Vec<f64> = d
        .iter()
        .map(|&di| if side.contains(di, cutoff) { k.eval(libm::fabs(di - cutoff) / h) / h } else { 0.0 })
        .collect();
    let max = weights.iter().copied().fold(0.0_f64, f64::max);
    let n_positive = weights.iter().filter(|&&w| w > 0.0).count();
    let n_effective = weights.iter().filter(|&&w| w > 1e-12 * max).count();
    Ok(SidedWeights { side, cutoff, bandwidth: h, weights, n_positive, n_effective })
}

/// Rows `R_i = (1, u_i, .., u_i^p)` with `u_i = (D_i - d*) / h`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledBasis {
    pub degree: usize,
    pub bandwidth: f64,
    scaled: Vec<f64>,
}

impl ScaledBasis {
    pub fn new(d: &[f64], cutoff: f64, h: f64, degree: usize) -> Result<Self> {
        if !(1..=2).contains(&degree) {
            return Err(Error::invalid("basis degree must be 1 or 2"));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::invalid("bandwidth must be a positive finite number"));
        }
        Ok(ScaledBasis { degree, bandwidth: h, scaled: d.iter().map(|&di| (di - cutoff) / h).collect() })
    }

    pub fn len(&self) -> usize {
        self.scaled.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scaled.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.degree + 1
    }

    /// `(D_i - d*) / h`
    #[inline]
    pub fn scaled_distance(&self, i: usize) -> f64 {
        self.scaled[i]
    }

    #[inline]
    pub fn row(&self, i: usize) -> [f64; 3] {
        let u = self.scaled[i];
        [1.0, u, u * u]
    }

    /// Diagonal of `H_p = diag(1, h, .., h^p)`.
    pub fn scaling(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim());
        let mut acc = 1.0;
        for _ in 0..self.dim() {
            out.push(acc);
            acc *= self.bandwidth;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn closed_forms() {
        assert_eq!(kernel_value(&KernelSpec::triangle(), 0.0).unwrap(), 1.0);
        assert_eq!(kernel_value(&KernelSpec::window(), 0.5).unwrap(), 1.0);
        assert_eq!(kernel_value(&KernelSpec::triangle(), 2.0).unwrap(), 0.0);
        assert_eq!(kernel_value(&KernelSpec::window(), 1.0).unwrap(), 1.0);
        assert_eq!(kernel_value(&KernelSpec::window(), 1.0 + 1e-12).unwrap(), 0.0);
        assert!((kernel_value(&KernelSpec::triangle(), 0.25).unwrap() - 0.75).abs() < 1e-15);
        let g = KernelSpec::gaussian(1.0).unwrap();
        let expected = 1.0 / (2.0 * core::f64::consts::PI).sqrt();
        assert!((g.value(0.0).unwrap() - expected).abs() < 1e-15);
        assert!(g.value(40.0).unwrap() >= 0.0);
        assert!(g.value(5.0).unwrap() > 0.0);
    }

    #[test]
    fn negative_argument_rejected() {
        assert!(kernel_value(&KernelSpec::triangle(), -0.1).is_err());
        assert!(kernel_value(&KernelSpec::window(), f64::NAN).is_err());
        assert!(KernelSpec::gaussian(0.0).is_err());
    }

    #[test]
    fn parse_names() {
        assert_eq!("window".parse::<KernelKind>().unwrap(), KernelKind::Window);
        assert_eq!("Triangle".parse::<KernelKind>().unwrap(), KernelKind::Triangle);
        assert_eq!("gaussian".parse::<KernelKind>().unwrap(), KernelKind::Gaussian);
        assert!("epanechnikov".parse::<KernelKind>().is_err());
    }

    #[test]
    fn cutoff_point_is_right_side() {
        let k = KernelSpec::triangle();
        let r = sided_weights(&[0.3], 0.3, 1.0, Side::Right, &k).unwrap();
        assert_eq!(r.weights, vec![1.0]);
        let l = sided_weights(&[0.3], 0.3, 1.0, Side::Left, &k).unwrap();
        assert_eq!(l.weights, vec![0.0]);
        assert!(l.require_support(1).is_err());
    }

    #[test]
    fn half_distance_triangle() {
        let k = KernelSpec::triangle();
        let w = sided_weights(&[1.5, 2.5], 2.0, 1.0, Side::Right, &k).unwrap();
        assert_eq!(w.weights, vec![0.0, 0.5]);
        assert_eq!(w.n_positive, 1);
    }

    #[test]
    fn wide_window_is_scaled_indicator() {
        let d = [-3.0, -1.0, 0.0, 0.5, 2.0];
        let h = 10.0;
        let w = sided_weights(&d, 0.0, h, Side::Right, &KernelSpec::window()).unwrap();
        assert_eq!(w.weights, vec![0.0, 0.0, 0.1, 0.1, 0.1]);
        let w = sided_weights(&d, 0.0, h, Side::Left, &KernelSpec::window()).unwrap();
        assert_eq!(w.weights, vec![0.1, 0.1, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn gaussian_effective_support() {
        let d = [0.0, 1.0, 100.0];
        let w = sided_weights(&d, 0.0, 1.0, Side::Right, &KernelSpec::gaussian(1.0).unwrap()).unwrap();
        assert_eq!(w.n_effective, 2);
    }

    #[test]
    fn bad_bandwidth() {
        assert!(sided_weights(&[1.0], 0.0, 0.0, Side::Right, &KernelSpec::triangle()).is_err());
        assert!(sided_weights(&[], 0.0, 1.0, Side::Right, &KernelSpec::triangle()).is_err());
    }

    #[test]
    fn basis_rows() {
        let b = ScaledBasis::new(&[1.0, 3.0], 1.0, 2.0, 2).unwrap();
        assert_eq!(b.row(0), [1.0, 0.0, 0.0]);
        assert_eq!(b.row(1), [1.0, 1.0, 1.0]);
        assert_eq!(b.scaling(), vec![1.0, 2.0, 4.0]);
        assert!(ScaledBasis::new(&[1.0], 0.0, 1.0, 3).is_err());
    }
}
