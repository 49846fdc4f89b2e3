//! Placebo-adjusted regression discontinuity estimation.
//!
//! When units sort around the cutoff, the plain RDD jump in the outcome mixes
//! the treatment effect with a jump in an unobserved confounder. A placebo
//! outcome `W` (a proxy for the confounder, unaffected by treatment) and a
//! placebo treatment `Z` (shifts the running variable, excluded from the
//! outcome) allow the confounder jump to be removed:
//!
//! * [`kernel`]: kernels, one-sided weights, scaled polynomial basis
//! * [`fit`]: local polynomial fits, residualization, local IV regression
//! * [`estimator`]: sharp and fuzzy placebo-adjusted estimators
//! * [`inference`]: robust bias correction, variance, Wald intervals
//! * [`sim`]: structural simulator with known ground truth
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]

extern crate alloc;

pub mod error;
pub mod estimator;
pub mod fit;
pub mod inference;
pub mod kernel;
mod linalg;
pub mod sample;
pub mod sim;

pub use error::{Error, Result};
pub use estimator::{estimate_fuzzy, estimate_sharp, rdd_discontinuity, DiscontinuityEstimate};
pub use fit::{local_iv_fit, local_poly_fit, residualize, IvFit, LocalFit, LocalProjector, Residuals};
pub use inference::{
    bias_corrected_estimate, bias_corrected_fuzzy, confidence_interval, normal_quantile, rdd_robust,
    robust_discontinuity, rule_of_thumb_bandwidth, second_derivative, variance, BiasCorrection, CorrectedSide,
    InferenceConfig, RobustEstimate, SideBias, VarianceMode,
};
pub use kernel::{kernel_value, sided_weights, KernelKind, KernelSpec, ScaledBasis, Side, SidedWeights};
pub use sample::Sample;
pub use sim::{simulate, simulate_with_confounder, truth, Design, DgpSpec, DgpTruth, NoiseScales, Simulated};
