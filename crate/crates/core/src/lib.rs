//! Martingale MMD two-sample tests.
//!
//! The main entry points are [`mmd_test`] (one kernel, Gaussian calibration),
//! [`gamma_test`] (the `i^-γ` weighted family) and [`mmmmd_test`] (several
//! kernels, chi-squared calibration). All of them cost `O(n²)` kernel
//! evaluations and `O(n)` memory. The [`baselines`] module holds the
//! comparison tests and [`harness`] the simulation drivers.

pub mod baselines;
pub mod data;
pub mod datagen;
pub mod distfn;
pub mod error;
pub mod harness;
pub mod kernels;
pub mod multikernel;
pub mod outcome;
pub mod statcore;

pub use baselines::{
    block_mmd_test, cross_mmd_test, linear_mmd_test, permutation_mmd_test, quad_mmd_statistic, PermutationPlan,
};
pub use data::{PairedDataset, SampleMatrix};
pub use datagen::{generate, split_seed, GeneratorSpec, GeneratorVariant, SimRng};
pub use error::{Error, Result};
pub use kernels::{BandwidthRule, KernelFamily, KernelSpec, ResolvedKernel};
pub use multikernel::{compute_mmmmd, mmmmd_test, MultiKernelResult};
pub use outcome::{Method, TestOutcome};
pub use statcore::{
    compute_gamma_statistic, compute_mmd_breakdown, estimate_h_moments, gamma_test, mmd_test, GammaStatistic,
    HMoments, MmdBreakdown,
};
