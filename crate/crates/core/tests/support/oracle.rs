//! Naive reference implementations used as test oracles. Everything here is
//! written from the defining formulas with dense loops and Gaussian
//! elimination, sharing no code with the library.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type Mat = Vec<Vec<f64>>;

/// Gaussian elimination with partial pivoting.
pub fn solve(a: &Mat, b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut m: Mat = a.iter().zip(b).map(|(row, &bi)| row.iter().copied().chain([bi]).collect()).collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs())).unwrap();
        m.swap(col, pivot);
        assert!(m[col][col] != 0.0, "singular oracle system");
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            for k in col..=n {
                m[row][k] -= f * m[col][k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| m[i][k] * x[k]).sum();
        x[i] = (m[i][n] - s) / m[i][i];
    }
    x
}

pub fn inverse(a: &Mat) -> Mat {
    let n = a.len();
    let cols: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let e: Vec<f64> = (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect();
            solve(a, &e)
        })
        .collect();
    (0..n).map(|i| (0..n).map(|j| cols[j][i]).collect()).collect()
}

pub fn triangle(u: f64) -> f64 {
    (1.0 - u.abs()).max(0.0)
}

pub fn on_side(d: f64, cutoff: f64, right: bool) -> bool {
    if right {
        d >= cutoff
    } else {
        d < cutoff
    }
}

/// `K(|D − c| / h)` restricted to one side.
pub fn kernel_diag(d: &[f64], cutoff: f64, h: f64, right: bool) -> Vec<f64> {
    d.iter().map(|&x| if on_side(x, cutoff, right) { triangle((x - cutoff) / h) } else { 0.0 }).collect()
}

/// Weighted least squares of `s` on `(1, u, …, u^p)` with `u = (D − c)/h`.
/// Returns scaled coefficients.
pub fn wls(s: &[f64], d: &[f64], cutoff: f64, h: f64, right: bool, degree: usize) -> Vec<f64> {
    let k = kernel_diag(d, cutoff, h, right);
    let p = degree + 1;
    let mut a = vec![vec![0.0; p]; p];
    let mut rhs = vec![0.0; p];
    for i in 0..d.len() {
        let u = (d[i] - cutoff) / h;
        let r: Vec<f64> = (0..p).map(|j| u.powi(j as i32)).collect();
        for j in 0..p {
            rhs[j] += k[i] * r[j] * s[i];
            for l in 0..p {
                a[j][l] += k[i] * r[j] * r[l];
            }
        }
    }
    solve(&a, &rhs)
}

pub fn intercept(s: &[f64], d: &[f64], cutoff: f64, h: f64, right: bool) -> f64 {
    wls(s, d, cutoff, h, right, 1)[0]
}

/// Data for one placebo-adjusted estimation problem.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub d: Vec<f64>,
    pub y: Vec<f64>,
    pub w: Vec<Vec<f64>>,
    pub z: Vec<Vec<f64>>,
}

impl Fixture {
    pub fn q(&self) -> usize {
        self.w.len()
    }

    pub fn sample(&self) -> pdd_core::Sample {
        pdd_core::Sample {
            running: self.d.clone(),
            outcome: self.y.clone(),
            treatment: None,
            placebo_outcomes: self.w.clone(),
            placebo_treatments: self.z.clone(),
        }
    }

    /// Random data with a latent confounder that makes each placebo
    /// instrument relevant. Running values are uniform on `[-1, 1]`.
    pub fn random(seed: u64, n: usize, q: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut normal = || -> f64 { rng.sample(StandardNormal) };
        let u: Vec<f64> = (0..n).map(|_| normal()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
        let d: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut noise = || -> f64 { rng.sample(StandardNormal) };
        let mut w: Vec<Vec<f64>> = Vec::new();
        let mut z: Vec<Vec<f64>> = Vec::new();
        for j in 0..q {
            let load = 1.0 + 0.5 * j as f64;
            w.push((0..n).map(|i| load * u[i] + 0.3 * d[i] + 0.5 * noise()).collect());
            // Each instrument loads on its own noise too, so Z has full rank.
            let extra: Vec<f64> = (0..n).map(|_| noise()).collect();
            z.push((0..n).map(|i| u[i] + 0.5 * extra[i] + if j > 0 { 0.4 * w[j - 1][i] } else { 0.0 }).collect());
        }
        let y = (0..n)
            .map(|i| {
                let jump = if d[i] >= 0.0 { 0.8 } else { 0.0 };
                jump + d[i] + 0.5 * d[i] * d[i] + u[i] + 0.5 * noise()
            })
            .collect();
        Fixture { d, y, w, z }
    }
}

/// Solves the just-identified local IV system on one side: regressors
/// `(1, u, W)`, instruments `(1, u, Z)`. Returns `(intercept, slope, γ)`.
pub fn iv(fx: &Fixture, cutoff: f64, h: f64, right: bool) -> (f64, f64, Vec<f64>) {
    let k = kernel_diag(&fx.d, cutoff, h, right);
    let q = fx.q();
    let m = 2 + q;
    let mut a = vec![vec![0.0; m]; m];
    let mut rhs = vec![0.0; m];
    for i in 0..fx.d.len() {
        let u = (fx.d[i] - cutoff) / h;
        let x: Vec<f64> = [1.0, u].into_iter().chain(fx.w.iter().map(|c| c[i])).collect();
        let inst: Vec<f64> = [1.0, u].into_iter().chain(fx.z.iter().map(|c| c[i])).collect();
        for r in 0..m {
            rhs[r] += k[i] * inst[r] * fx.y[i];
            for c in 0..m {
                a[r][c] += k[i] * inst[r] * x[c];
            }
        }
    }
    let nu = solve(&a, &rhs);
    (nu[0], nu[1], nu[2..].to_vec())
}

/// `γ = [Σ K Z W⊥ᵀ]⁻¹ Σ K Z y⊥` with `⊥` the local linear residual.
pub fn residualized_gamma(fx: &Fixture, cutoff: f64, h: f64, right: bool) -> Vec<f64> {
    let k = kernel_diag(&fx.d, cutoff, h, right);
    let resid = |s: &[f64]| -> Vec<f64> {
        let c = wls(s, &fx.d, cutoff, h, right, 1);
        (0..s.len()).map(|i| s[i] - c[0] - c[1] * (fx.d[i] - cutoff) / h).collect()
    };
    let y_perp = resid(&fx.y);
    let w_perp: Vec<Vec<f64>> = fx.w.iter().map(|c| resid(c)).collect();
    let q = fx.q();
    let mut a = vec![vec![0.0; q]; q];
    let mut rhs = vec![0.0; q];
    for i in 0..fx.d.len() {
        for r in 0..q {
            rhs[r] += k[i] * fx.z[r][i] * y_perp[i];
            for c in 0..q {
                a[r][c] += k[i] * fx.z[r][i] * w_perp[c][i];
            }
        }
    }
    solve(&a, &rhs)
}

/// `τ_y − τ_wᵀ γ₋`.
pub fn pdd(fx: &Fixture, cutoff: f64, h: f64) -> f64 {
    let jump = |s: &[f64]| intercept(s, &fx.d, cutoff, h, true) - intercept(s, &fx.d, cutoff, h, false);
    let gamma = residualized_gamma(fx, cutoff, h, false);
    jump(&fx.y) - fx.w.iter().zip(&gamma).map(|(w, g)| jump(w) * g).sum::<f64>()
}

/// One side's bias-corrected equivalent-kernel row `P`, built from
/// `Γ₁⁻¹R₁ᵀK − (h/b)³ Γ₁⁻¹Λ e₂ᵀ Γ₂⁻¹R₂ᵀK_b` and read off at the intercept.
pub fn p_row(d: &[f64], cutoff: f64, h: f64, b: f64, right: bool) -> Vec<f64> {
    let n = d.len();
    let nf = n as f64;
    let kh = kernel_diag(d, cutoff, h, right);
    let kb = kernel_diag(d, cutoff, b, right);
    let r1 = |i: usize| {
        let u = (d[i] - cutoff) / h;
        vec![1.0, u]
    };
    let r2 = |i: usize| {
        let u = (d[i] - cutoff) / b;
        vec![1.0, u, u * u]
    };
    let mut g1 = vec![vec![0.0; 2]; 2];
    let mut lambda = vec![0.0; 2];
    let mut g2 = vec![vec![0.0; 3]; 3];
    for i in 0..n {
        let (a, c) = (r1(i), r2(i));
        let u = (d[i] - cutoff) / h;
        for r in 0..2 {
            lambda[r] += kh[i] * a[r] * u * u / (nf * h);
            for s in 0..2 {
                g1[r][s] += kh[i] * a[r] * a[s] / (nf * h);
            }
        }
        for r in 0..3 {
            for s in 0..3 {
                g2[r][s] += kb[i] * c[r] * c[s] / (nf * b);
            }
        }
    }
    let g1i = inverse(&g1);
    let g2i = inverse(&g2);
    let e0_g1i: Vec<f64> = g1i[0].clone();
    let e0_g1i_lambda: f64 = (0..2).map(|r| g1i[0][r] * lambda[r]).sum();
    let ratio = (h / b).powi(3);
    (0..n)
        .map(|i| {
            let a = r1(i);
            let c = r2(i);
            let first: f64 = (0..2).map(|r| e0_g1i[r] * a[r]).sum::<f64>() * kh[i];
            let second: f64 = (0..3).map(|r| g2i[2][r] * c[r]).sum::<f64>() * kb[i];
            first - ratio * e0_g1i_lambda * second
        })
        .collect()
}

/// Bias-corrected placebo-adjusted estimate and its variance, evaluated as
/// the full stacked quadratic form `ŝᵀ (I ⊗ P) Σ̂ (I ⊗ P)ᵀ ŝ / (nh)` summed
/// over both sides, with `Σ̂` the `(q+1)n` diagonal of squared deviations
/// from each side's bias-corrected intercept.
pub fn stacked_variance(fx: &Fixture, cutoff: f64, h: f64, b: f64) -> (f64, f64) {
    let n = fx.d.len();
    let nh = n as f64 * h;
    let gamma = residualized_gamma(fx, cutoff, h, false);
    let s_hat: Vec<f64> = [1.0].into_iter().chain(gamma.iter().map(|g| -g)).collect();
    let outcomes: Vec<&[f64]> = [fx.y.as_slice()].into_iter().chain(fx.w.iter().map(Vec::as_slice)).collect();
    let m = outcomes.len();
    let stacked: Vec<f64> = outcomes.iter().flat_map(|s| s.iter().copied()).collect();

    let mut estimate = 0.0;
    let mut v = 0.0;
    for right in [true, false] {
        let p = p_row(&fx.d, cutoff, h, b, right);
        // (I_m ⊗ P): m × mn
        let mut kron = vec![vec![0.0; m * n]; m];
        for k in 0..m {
            kron[k][k * n..(k + 1) * n].copy_from_slice(&p);
        }
        let corrected: Vec<f64> =
            (0..m).map(|k| (0..m * n).map(|j| kron[k][j] * stacked[j]).sum::<f64>() / nh).collect();
        let sign = if right { 1.0 } else { -1.0 };
        estimate += sign * (0..m).map(|k| s_hat[k] * corrected[k]).sum::<f64>();
        let sigma: Vec<f64> = (0..m * n).map(|j| (stacked[j] - corrected[j / n]).powi(2)).collect();
        // a = (I ⊗ P)ᵀ ŝ, length mn; then aᵀ Σ̂ a.
        let a: Vec<f64> = (0..m * n).map(|j| (0..m).map(|k| kron[k][j] * s_hat[k]).sum()).collect();
        v += (0..m * n).map(|j| a[j] * sigma[j] * a[j]).sum::<f64>() / nh;
    }
    (estimate, v)
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// `lim E[U | D ↓ c] − lim E[U | D ↑ c]` from local linear fits of `U` on `D`
/// within `delta` of the cutoff on each side.
pub fn binned_confounding_jump(d: &[f64], u: &[f64], cutoff: f64, delta: f64) -> f64 {
    let mut moments = [[0.0f64; 5]; 2];
    for (&x, &v) in d.iter().zip(u) {
        let t = x - cutoff;
        if t.abs() >= delta {
            continue;
        }
        let m = &mut moments[usize::from(t >= 0.0)];
        m[0] += 1.0;
        m[1] += t;
        m[2] += t * t;
        m[3] += v;
        m[4] += t * v;
    }
    let fit = |m: [f64; 5]| solve(&vec![vec![m[0], m[1]], vec![m[1], m[2]]], &[m[3], m[4]])[0];
    fit(moments[1]) - fit(moments[0])
}
