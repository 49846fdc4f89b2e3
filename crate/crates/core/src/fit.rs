//! Weighted local polynomial least squares, the local IV solve, and
//! residualization against the running variable.
//!
//! All Gram matrices use the normalization `Γ = (1/n) Σ ω_i R_i R_iᵀ`, which
//! equals `(1/(nh)) Rᵀ K R` with `K = diag(h ω_i)`.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kernel::{ScaledBasis, Side, SidedWeights};
use crate::linalg::{invert, norm1};

/// Gram matrices with reciprocal condition below this are singular.
pub const GRAM_RCOND_FLOOR: f64 = 1e-12;
/// Normalized Schur complements with reciprocal condition below this flag a
/// weak placebo instrument.
pub const SCHUR_RCOND_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct LocalFit {
    pub side: Side,
    pub degree: usize,
    /// `H_p β̂`: entry 0 is the intercept at the cutoff, entry `j` the `j`-th
    /// coefficient times `h^j`.
    pub coefficients: Vec<f64>,
    pub gram: DMatrix<f64>,
    pub n_effective: usize,
    pub rcond: f64,
}

impl LocalFit {
    pub fn intercept(&self) -> f64 {
        self.coefficients[0]
    }
}

/// A factored local polynomial regression for one side and one bandwidth,
/// reusable across outcome vectors.
#[derive(Debug, Clone)]
pub struct LocalProjector<'a> {
    weights: &'a SidedWeights,
    basis: &'a ScaledBasis,
    gram: DMatrix<f64>,
    gram_inv: DMatrix<f64>,
    rcond: f64,
}

impl<'a> LocalProjector<'a> {
    pub fn new(weights: &'a SidedWeights, basis: &'a ScaledBasis) -> Result<Self> {
        if weights.len() != basis.len() {
            return Err(Error::invalid("weights and basis have different lengths"));
        }
        if (weights.bandwidth - basis.bandwidth).abs() > 1e-12 * weights.bandwidth {
            return Err(Error::invalid("weights and basis use different bandwidths"));
        }
        let p1 = basis.dim();
        weights.require_support(p1)?;

        let mut support: Vec<f64> =
            (0..basis.len()).filter(|&i| weights.weights[i] > 0.0).map(|i| basis.scaled_distance(i)).collect();
        support.sort_by(f64::total_cmp);
        support.dedup();
        if support.len() < p1 {
            return Err(Error::SingularSupport { side: weights.side, support: support.len(), rcond: 0.0 });
        }

        let n = weights.len() as f64;
        let mut gram = DMatrix::zeros(p1, p1);
        for (i, &w) in weights.weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let r = basis.row(i);
            for a in 0..p1 {
                for b in 0..p1 {
                    gram[(a, b)] += w * r[a] * r[b];
                }
            }
        }
        gram /= n;
        let inv = invert(&gram);
        if inv.rcond < GRAM_RCOND_FLOOR {
            return Err(Error::SingularSupport { side: weights.side, support: support.len(), rcond: inv.rcond });
        }
        Ok(LocalProjector { weights, basis, gram, gram_inv: inv.matrix, rcond: inv.rcond })
    }

    pub fn weights(&self) -> &SidedWeights {
        self.weights
    }

    pub fn basis(&self) -> &ScaledBasis {
        self.basis
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn gram_inverse(&self) -> &DMatrix<f64> {
        &self.gram_inv
    }

    pub fn rcond(&self) -> f64 {
        self.rcond
    }

    /// `(1/n) Σ ω_i R_i s_i`
    pub fn moment(&self, s: &[f64]) -> DVector<f64> {
        let p1 = self.basis.dim();
        let mut m = DVector::zeros(p1);
        for (i, (&w, &si)) in self.weights.weights.iter().zip(s).enumerate() {
            if w == 0.0 {
                continue;
            }
            let r = self.basis.row(i);
            for a in 0..p1 {
                m[a] += w * r[a] * si;
            }
        }
        m / self.weights.len() as f64
    }

    /// `H_p β̂ = Γ⁻¹ (1/n) Σ ω_i R_i s_i`
    pub fn coefficients(&self, s: &[f64]) -> Vec<f64> {
        (&self.gram_inv * self.moment(s)).iter().copied().collect()
    }

    pub fn fit(&self, s: &[f64]) -> Result<LocalFit> {
        if s.len() != self.weights.len() {
            return Err(Error::invalid("outcome length does not match the running variable"));
        }
        Ok(LocalFit {
            side: self.weights.side,
            degree: self.basis.degree,
            coefficients: self.coefficients(s),
            gram: self.gram.clone(),
            n_effective: self.weights.n_positive,
            rcond: self.rcond,
        })
    }

    /// Equivalent-kernel weights for coefficient `j`: the vector `ℓ` with
    /// `(H_p β̂)_j = Σ_i ℓ_i s_i` for every outcome `s`.
    pub fn equivalent_weights(&self, j: usize) -> Vec<f64> {
        let p1 = self.basis.dim();
        let n = self.weights.len() as f64;
        let row = self.gram_inv.row(j);
        self.weights
            .weights
            .iter()
            .enumerate()
            .map(|(i, &w)| {
                if w == 0.0 {
                    return 0.0;
                }
                let r = self.basis.row(i);
                let dot: f64 = (0..p1).map(|a| row[a] * r[a]).sum();
                dot * w / n
            })
            .collect()
    }

    pub fn fitted(&self, coefficients: &[f64], i: usize) -> f64 {
        let r = self.basis.row(i);
        (0..self.basis.dim()).map(|a| coefficients[a] * r[a]).sum()
    }

    pub fn residualize(&self, s: &[f64]) -> Result<Residuals> {
        if s.len() != self.weights.len() {
            return Err(Error::invalid("outcome length does not match the running variable"));
        }
        let coef = self.coefficients(s);
        let mut values = vec![0.0; s.len()];
        let mut in_support = vec![false; s.len()];
        for (i, &w) in self.weights.weights.iter().enumerate() {
            if w > 0.0 {
                values[i] = s[i] - self.fitted(&coef, i);
                in_support[i] = true;
            }
        }
        Ok(Residuals { values, in_support })
    }
}

/// Residuals from a local fit. Zero-weight observations carry a zero value
/// and `in_support = false`.
#[derive(Debug, Clone, PartialEq)]
pub struct Residuals {
    pub values: Vec<f64>,
    pub in_support: Vec<bool>,
}

pub fn local_poly_fit(s: &[f64], weights: &SidedWeights, basis: &ScaledBasis) -> Result<LocalFit> {
    LocalProjector::new(weights, basis)?.fit(s)
}

pub fn residualize(s: &[f64], weights: &SidedWeights, basis: &ScaledBasis) -> Result<Residuals> {
    if basis.degree != 1 {
        return Err(Error::invalid("residualization uses the local linear basis"));
    }
    LocalProjector::new(weights, basis)?.residualize(s)
}

/// One-sided local IV solution `ν̂ = (α̂_0, α̂_1 h, γ̂)`.
#[derive(Debug, Clone, PartialEq)]
pub struct IvFit {
    pub side: Side,
    pub intercept: f64,
    /// Slope times the bandwidth.
    pub slope_scaled: f64,
    pub gamma: Vec<f64>,
    /// Reciprocal condition of the stacked `(2+q) x (2+q)` system.
    pub system_rcond: f64,
    /// `1 / ‖Q̃⁻¹‖₁` for the Schur complement `Q = Zᵀ K W⊥` with rows and
    /// columns normalized by the weighted norms of `Z` and `W⊥`. Entries of
    /// `Q̃` are weighted cosines, so this is near zero when the placebo
    /// treatment is (numerically) unrelated to the residualized placebo
    /// outcome, and is invariant to rescaling either.
    pub schur_rcond: f64,
}

fn check_columns<C: AsRef<[f64]>>(cols: &[C], n: usize, what: &str) -> Result<()> {
    if cols.iter().any(|c| c.as_ref().len() != n) {
        return Err(Error::invalid(alloc::format!("{what} column length does not match the running variable")));
    }
    Ok(())
}

/// Solves the kernel-weighted just-identified moment condition
/// `Σ ω_i [R_i; Z_i] (Y_i - R_iᵀ H α - W_iᵀ γ) = 0`.
pub fn local_iv_fit<C: AsRef<[f64]>>(
    y: &[f64],
    w: &[C],
    z: &[C],
    weights: &SidedWeights,
    basis: &ScaledBasis,
) -> Result<IvFit> {
    let q = w.len();
    if q == 0 {
        return Err(Error::invalid("at least one placebo outcome is required"));
    }
    if z.len() != q {
        return Err(Error::invalid("placebo treatments and outcomes must have the same dimension"));
    }
    if basis.degree != 1 {
        return Err(Error::invalid("local IV regression uses the local linear basis"));
    }
    let n = y.len();
    check_columns(w, n, "placebo outcome")?;
    check_columns(z, n, "placebo treatment")?;
    weights.require_support(2 + q)?;
    let proj = LocalProjector::new(weights, basis)?;
    if y.len() != weights.len() {
        return Err(Error::invalid("outcome length does not match the running variable"));
    }

    let schur_rcond = normalized_schur_rcond(&proj, w, z)?;
    if schur_rcond < SCHUR_RCOND_FLOOR {
        return Err(Error::WeakInstrument { side: weights.side, rcond: schur_rcond });
    }

    let dim = 2 + q;
    let mut m = DMatrix::zeros(dim, dim);
    let mut rhs = DVector::zeros(dim);
    let mut inst = vec![0.0; dim];
    let mut regr = vec![0.0; dim];
    for (i, &om) in weights.weights.iter().enumerate() {
        if om == 0.0 {
            continue;
        }
        let r = basis.row(i);
        inst[0] = r[0];
        inst[1] = r[1];
        regr[0] = r[0];
        regr[1] = r[1];
        for j in 0..q {
            inst[2 + j] = z[j].as_ref()[i];
            regr[2 + j] = w[j].as_ref()[i];
        }
        for a in 0..dim {
            let ia = om * inst[a];
            rhs[a] += ia * y[i];
            for b in 0..dim {
                m[(a, b)] += ia * regr[b];
            }
        }
    }
    let nf = n as f64;
    m /= nf;
    rhs /= nf;
    let inv = invert(&m);
    if inv.rcond == 0.0 {
        return Err(Error::WeakInstrument { side: weights.side, rcond: 0.0 });
    }
    let nu = &inv.matrix * &rhs;
    Ok(IvFit {
        side: weights.side,
        intercept: nu[0],
        slope_scaled: nu[1],
        gamma: nu.iter().skip(2).copied().collect(),
        system_rcond: inv.rcond,
        schur_rcond,
    })
}

fn normalized_schur_rcond<C: AsRef<[f64]>>(proj: &LocalProjector<'_>, w: &[C], z: &[C]) -> Result<f64> {
    let q = w.len();
    let om = &proj.weights().weights;
    let resid: Vec<Vec<f64>> =
        w.iter().map(|c| proj.residualize(c.as_ref()).map(|r| r.values)).collect::<Result<_>>()?;
    let wnorm: Vec<f64> = resid.iter().map(|r| libm::sqrt(r.iter().zip(om).map(|(v, o)| o * v * v).sum())).collect();
    let znorm: Vec<f64> =
        z.iter().map(|c| libm::sqrt(c.as_ref().iter().zip(om).map(|(v, o)| o * v * v).sum())).collect();
    if wnorm.iter().chain(&znorm).any(|&v| !(v > 0.0)) {
        return Ok(0.0);
    }
    let mut schur = DMatrix::zeros(q, q);
    for j in 0..q {
        let zj = z[j].as_ref();
        for k in 0..q {
            let s: f64 = (0..om.len()).map(|i| om[i] * zj[i] * resid[k][i]).sum();
            schur[(j, k)] = s / (znorm[j] * wnorm[k]);
        }
    }
    let inv = invert(&schur);
    if inv.rcond == 0.0 {
        return Ok(0.0);
    }
    Ok(1.0 / norm1(&inv.matrix))
}
