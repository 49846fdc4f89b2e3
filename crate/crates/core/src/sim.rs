//! Structural data-generating process with a known treatment effect.
//!
//! Per observation, in this draw order:
//!
//! ```text
//! U ~ N(0, 1)
//! Z = U + σ_z ε_z
//! D = d* + ρ Z + σ_d ε_d
//! if κ > 0 and D ∈ (d* − m, d*): with probability logistic(κ U), D ← 2d* − D
//! A = 1{D ≥ d*}                                   (sharp)
//! A ~ Bernoulli((1 − π)/2 + π 1{D ≥ d*})           (fuzzy, homogeneous effect)
//! W = λ U + σ_w ε_w
//! Y = τ₀ A + c₂ (D − d*)² + (D − d*) + U + σ_y η_y
//! ```
//!
//! Sorting is increasing in `U`, so units just above the cutoff have higher
//! `U` than units just below it and a plain RDD picks up the spurious jump
//! `Δ_U`. The bridge `g(d) + w/λ` is exact, so the placebo-adjusted
//! estimand equals `τ₀`.
//!
//! Randomness comes from ChaCha20 seeded through `seed_from_u64`, which is
//! portable across platforms. Monte Carlo replication `r` uses seed
//! `base_seed + r` (wrapping).

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::sample::Sample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Design {
    #[default]
    Sharp,
    FuzzyHomogeneous,
}

impl Design {
    pub fn name(self) -> &'static str {
        match self {
            Design::Sharp => "sharp",
            Design::FuzzyHomogeneous => "fuzzy",
        }
    }
}

impl core::str::FromStr for Design {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sharp" => Ok(Design::Sharp),
            "fuzzy" | "fuzzy_homogeneous" => Ok(Design::FuzzyHomogeneous),
            other => Err(Error::invalid(alloc::format!("unknown design `{other}`"))),
        }
    }
}

/// Standard deviations of the idiosyncratic shocks in Z, D, W and Y.
///
/// The defaults keep the placebo instrument strong enough that the
/// conditional-on-D variance dominates the sampling noise in γ̂.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseScales {
    pub z: f64,
    pub d: f64,
    pub w: f64,
    pub y: f64,
}

impl Default for NoiseScales {
    fn default() -> Self {
        NoiseScales { z: 0.5, d: 1.0, w: 0.5, y: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DgpSpec {
    pub n: usize,
    pub seed: u64,
    pub tau: f64,
    pub cutoff: f64,
    /// Sorting strength κ.
    pub kappa: f64,
    /// Width m of the sorting window below the cutoff.
    pub window: f64,
    /// Proxy loading λ in `W = λU + ε_w`.
    pub lambda: f64,
    /// Instrument strength ρ in `D = d* + ρZ + ε_d`.
    pub rho: f64,
    pub noise: NoiseScales,
    pub design: Design,
    /// Compliance jump π (fuzzy only).
    pub compliance: f64,
    /// Quadratic coefficient c₂ of the running-variable trend.
    pub curvature: f64,
}

impl Default for DgpSpec {
    fn default() -> Self {
        Self::calibration()
    }
}

impl DgpSpec {
    /// κ = 4, λ = 1, ρ = 1, m = 0.5, c₂ = 1, τ₀ = 1, n = 5000.
    pub fn calibration() -> Self {
        DgpSpec {
            n: 5000,
            seed: 0,
            tau: 1.0,
            cutoff: 0.0,
            kappa: 4.0,
            window: 0.5,
            lambda: 1.0,
            rho: 1.0,
            noise: NoiseScales::default(),
            design: Design::Sharp,
            compliance: 0.6,
            curvature: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.tau,
            self.cutoff,
            self.kappa,
            self.window,
            self.lambda,
            self.rho,
            self.compliance,
            self.curvature,
            self.noise.z,
            self.noise.d,
            self.noise.w,
            self.noise.y,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("simulation parameters must be finite"));
        }
        if self.n == 0 {
            return Err(Error::invalid("simulation size must be positive"));
        }
        if self.lambda == 0.0 {
            return Err(Error::invalid("proxy loading lambda must be nonzero"));
        }
        if self.kappa < 0.0 {
            return Err(Error::invalid("sorting strength kappa must be nonnegative"));
        }
        if !(self.window > 0.0) {
            return Err(Error::invalid("sorting window must be positive"));
        }
        if self.noise.z < 0.0 || self.noise.d < 0.0 || self.noise.w < 0.0 || self.noise.y < 0.0 {
            return Err(Error::invalid("noise scales must be nonnegative"));
        }
        if self.rho == 0.0 && self.noise.d == 0.0 {
            return Err(Error::invalid("running variable would be degenerate"));
        }
        if self.design == Design::FuzzyHomogeneous && !(self.compliance > 0.0 && self.compliance <= 1.0) {
            return Err(Error::invalid("compliance jump must lie in (0, 1]"));
        }
        Ok(())
    }

    pub fn with_seed(self, seed: u64) -> Self {
        DgpSpec { seed, ..self }
    }

    fn sort_probability(&self, u: f64) -> f64 {
        if self.kappa == 0.0 {
            0.0
        } else {
            logistic(self.kappa * u)
        }
    }

    fn base_takeup(&self) -> f64 {
        (1.0 - self.compliance) / 2.0
    }
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

/// Analytic targets of a simulation design.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DgpTruth {
    pub tau: f64,
    /// `1/λ`
    pub gamma_minus: f64,
    /// `lim E[U | D ↓ d*] − lim E[U | D ↑ d*]`, by quadrature.
    pub confounding_jump: f64,
    /// Treatment discontinuity: 1 (sharp) or π (fuzzy).
    pub first_stage: f64,
}

impl DgpTruth {
    /// Plain RDD estimand of the outcome: `τ₀ · first stage + Δ_U`.
    pub fn naive_rdd(&self) -> f64 {
        self.tau * self.first_stage + self.confounding_jump
    }
}

pub fn truth(spec: &DgpSpec) -> Result<DgpTruth> {
    spec.validate()?;
    Ok(DgpTruth {
        tau: spec.tau,
        gamma_minus: 1.0 / spec.lambda,
        confounding_jump: confounding_jump(spec),
        first_stage: match spec.design {
            Design::Sharp => 1.0,
            Design::FuzzyHomogeneous => spec.compliance,
        },
    })
}

/// At the cutoff, `D_raw | U = u ~ N(d* + ρu, ρ²σ_z² + σ_d²)`. Just above the
/// cutoff the density in `u` is `φ(u) f(d*|u) (1 + p(u))` (own mass plus
/// reflected mass), just below it is `φ(u) f(d*|u) (1 − p(u))`.
fn confounding_jump(spec: &DgpSpec) -> f64 {
    if spec.kappa == 0.0 {
        return 0.0;
    }
    let s2 = spec.rho * spec.rho * spec.noise.z * spec.noise.z + spec.noise.d * spec.noise.d;
    let base = |u: f64| {
        let cond = if s2 > 0.0 { libm::exp(-0.5 * spec.rho * spec.rho * u * u / s2) } else { 0.0 };
        libm::exp(-0.5 * u * u) * cond
    };
    // composite Simpson on [-12, 12]
    let steps = 4800;
    let (lo, hi) = (-12.0, 12.0);
    let dx = (hi - lo) / steps as f64;
    let mut m = [[0.0; 2]; 2];
    for i in 0..=steps {
        let u = lo + i as f64 * dx;
        let wgt = if i == 0 || i == steps {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let g = base(u);
        let p = spec.sort_probability(u);
        for (row, f) in m.iter_mut().zip([1.0 + p, 1.0 - p]) {
            row[0] += wgt * g * f;
            row[1] += wgt * g * f * u;
        }
    }
    m[0][1] / m[0][0] - m[1][1] / m[1][0]
}

/// Simulated sample together with the latent confounder.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulated {
    pub sample: Sample,
    pub confounder: Vec<f64>,
}

pub fn simulate(spec: &DgpSpec) -> Result<Sample> {
    simulate_with_confounder(spec).map(|s| s.sample)
}

pub fn simulate_with_confounder(spec: &DgpSpec) -> Result<Simulated> {
    spec.validate()?;
    let n = spec.n;
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let mut d = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    let mut a = Vec::with_capacity(n);
    let mut w = Vec::with_capacity(n);
    let mut z = Vec::with_capacity(n);
    let mut us = Vec::with_capacity(n);
    let c = spec.cutoff;
    for _ in 0..n {
        let u: f64 = rng.sample(StandardNormal);
        let ez: f64 = rng.sample(StandardNormal);
        let ed: f64 = rng.sample(StandardNormal);
        let sort_coin: f64 = rng.random();
        let takeup_coin: f64 = rng.random();
        let ew: f64 = rng.sample(StandardNormal);
        let ey: f64 = rng.sample(StandardNormal);

        let zi = u + spec.noise.z * ez;
        let mut di = c + spec.rho * zi + spec.noise.d * ed;
        if di < c && di > c - spec.window && sort_coin < spec.sort_probability(u) {
            di = 2.0 * c - di;
        }
        let above = di >= c;
        let ai = match spec.design {
            Design::Sharp => f64::from(u8::from(above)),
            Design::FuzzyHomogeneous => {
                let p = spec.base_takeup() + if above { spec.compliance } else { 0.0 };
                f64::from(u8::from(takeup_coin < p))
            }
        };
        let wi = spec.lambda * u + spec.noise.w * ew;
        let x = di - c;
        let yi = spec.tau * ai + spec.curvature * x * x + x + u + spec.noise.y * ey;
        d.push(di);
        y.push(yi);
        a.push(ai);
        w.push(wi);
        z.push(zi);
        us.push(u);
    }
    let sample = Sample::new(d, y, Some(a), alloc::vec![w], alloc::vec![z])?;
    Ok(Simulated { sample, confounder: us })
}
