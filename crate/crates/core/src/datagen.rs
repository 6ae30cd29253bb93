//! Seeded synthetic data for the null, power and multi-kernel experiments.
//!
//! Streams come from ChaCha8, a counter-based generator whose output is
//! specified bit-for-bit, so a `(spec, seed)` pair reproduces the same dataset
//! on every platform. Normal variates use the Box–Muller transform.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution};
use serde::{Deserialize, Serialize};

use crate::data::{PairedDataset, SampleMatrix};
use crate::error::{Error, Result};

/// SplitMix64 finalizer: a bijective 64-bit avalanche mix.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Child seed for replication `index` under `seed`.
///
/// For a fixed parent the map `index -> child` is injective, so sibling
/// streams never share a seed.
pub fn split_seed(seed: u64, index: u64) -> u64 {
    mix64(seed.wrapping_add(mix64(index ^ 0x9e37_79b9_7f4a_7c15)))
}

/// Simulation RNG: ChaCha8 plus a cached Box–Muller partner.
#[derive(Debug, Clone)]
pub struct SimRng {
    inner: ChaCha8Rng,
    spare: Option<f64>,
}

impl SimRng {
    pub fn seed_from(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    /// Uniform on `(0, 1]` with 53 random bits.
    #[inline]
    pub fn uniform_open0(&mut self) -> f64 {
        ((self.inner.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal variate.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.uniform_open0();
        let u2 = self.uniform_open0();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }
}

impl RngCore for SimRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// Distribution pair `(P, Q)` to sample from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GeneratorVariant {
    /// `P = N_d(0, I)`, `Q = N_d(μ, I)` with the first `j` coordinates of `μ`
    /// equal to `eps`.
    GaussianMeanShift { d: usize, j: usize, eps: f64 },
    /// `P = Q = t_d(df)`, not rescaled to unit variance.
    MultivariateT { d: usize, df: f64 },
    /// `P = N_d(0, Σ)`, `Q = N_d(0, scale·Σ)` with `Σ_ij = rho^|i-j|`.
    ArCovScale { d: usize, rho: f64, scale: f64 },
    /// `P = Q = N_d(0, I)`.
    StdGaussian { d: usize },
}

impl GeneratorVariant {
    pub fn dim(&self) -> usize {
        match *self {
            GeneratorVariant::GaussianMeanShift { d, .. }
            | GeneratorVariant::MultivariateT { d, .. }
            | GeneratorVariant::ArCovScale { d, .. }
            | GeneratorVariant::StdGaussian { d } => d,
        }
    }

    /// Whether `P = Q` for this variant.
    pub fn is_null(&self) -> bool {
        match *self {
            GeneratorVariant::GaussianMeanShift { eps, .. } => eps == 0.0,
            GeneratorVariant::ArCovScale { scale, .. } => scale == 1.0,
            GeneratorVariant::MultivariateT { .. } | GeneratorVariant::StdGaussian { .. } => true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.dim() == 0 {
            return bad("dimension must be >= 1".into());
        }
        match *self {
            GeneratorVariant::GaussianMeanShift { d, j, eps } => {
                if j < 1 || j > d {
                    return bad(format!("mean shift needs 1 <= j <= d (j={j}, d={d})"));
                }
                if !eps.is_finite() {
                    return bad("shift must be finite".into());
                }
            }
            GeneratorVariant::MultivariateT { df, .. } => {
                if !(df > 2.0 && df.is_finite()) {
                    return bad(format!("t degrees of freedom must exceed 2 (got {df})"));
                }
            }
            GeneratorVariant::ArCovScale { rho, scale, .. } => {
                if !(rho > -1.0 && rho < 1.0) {
                    return bad(format!("rho must lie in (-1, 1) (got {rho})"));
                }
                if !(scale > 0.0 && scale.is_finite()) {
                    return bad(format!("scale must be positive (got {scale})"));
                }
            }
            GeneratorVariant::StdGaussian { .. } => {}
        }
        Ok(())
    }

    /// Mean vector of `Q`.
    pub fn q_mean(&self) -> Vec<f64> {
        let d = self.dim();
        match *self {
            GeneratorVariant::GaussianMeanShift { j, eps, .. } => {
                (0..d).map(|k| if k < j { eps } else { 0.0 }).collect()
            }
            _ => vec![0.0; d],
        }
    }

    /// `(P covariance, Q covariance)` entry `(a, b)` where defined in closed form.
    pub fn covariance_entry(&self, a: usize, b: usize) -> (f64, f64) {
        let delta = if a == b { 1.0 } else { 0.0 };
        match *self {
            GeneratorVariant::ArCovScale { rho, scale, .. } => {
                let s = rho.powi(a.abs_diff(b) as i32);
                (s, scale * s)
            }
            GeneratorVariant::MultivariateT { df, .. } => {
                let v = delta * df / (df - 2.0);
                (v, v)
            }
            _ => (delta, delta),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            GeneratorVariant::GaussianMeanShift { d, j, eps } => format!("mean-shift(d={d},j={j},eps={eps})"),
            GeneratorVariant::MultivariateT { d, df } => format!("t(d={d},df={df})"),
            GeneratorVariant::ArCovScale { d, rho, scale } => format!("ar-cov(d={d},rho={rho},scale={scale})"),
            GeneratorVariant::StdGaussian { d } => format!("std-gaussian(d={d})"),
        }
    }
}

/// A variant plus sample size and seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub variant: GeneratorVariant,
    pub n: usize,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn new(variant: GeneratorVariant, n: usize, seed: u64) -> Self {
        Self { variant, n, seed }
    }
}

/// Draws `X ~ P` (all rows) and then `Y ~ Q` (all rows) from one stream.
pub fn generate(spec: &GeneratorSpec) -> Result<PairedDataset> {
    spec.variant.validate()?;
    if spec.n < 2 {
        return Err(Error::TooFewRows {
            needed: 2,
            found: spec.n,
        });
    }
    let d = spec.variant.dim();
    let n = spec.n;
    let mut rng = SimRng::seed_from(spec.seed);
    let mut x = vec![0.0; n * d];
    let mut y = vec![0.0; n * d];
    match spec.variant {
        GeneratorVariant::StdGaussian { .. } => {
            fill_normal(&mut rng, &mut x);
            fill_normal(&mut rng, &mut y);
        }
        GeneratorVariant::GaussianMeanShift { j, eps, .. } => {
            fill_normal(&mut rng, &mut x);
            fill_normal(&mut rng, &mut y);
            for row in y.chunks_exact_mut(d) {
                for v in &mut row[..j] {
                    *v += eps;
                }
            }
        }
        GeneratorVariant::MultivariateT { df, .. } => {
            let chi = ChiSquared::new(df)
                .map_err(|e| Error::InvalidParameter(format!("chi-squared({df}): {e}")))?;
            for buf in [&mut x, &mut y] {
                for row in buf.chunks_exact_mut(d) {
                    fill_normal(&mut rng, row);
                    let s: f64 = chi.sample(&mut rng);
                    let w = (df / s).sqrt();
                    row.iter_mut().for_each(|v| *v *= w);
                }
            }
        }
        GeneratorVariant::ArCovScale { rho, scale, .. } => {
            let innov = (1.0 - rho * rho).sqrt();
            for (buf, s) in [(&mut x, 1.0), (&mut y, scale.sqrt())] {
                for row in buf.chunks_exact_mut(d) {
                    let mut prev = rng.normal();
                    row[0] = s * prev;
                    for v in &mut row[1..] {
                        prev = rho * prev + innov * rng.normal();
                        *v = s * prev;
                    }
                }
            }
        }
    }
    PairedDataset::new(SampleMatrix::from_raw(x, d), SampleMatrix::from_raw(y, d))
}

fn fill_normal(rng: &mut SimRng, buf: &mut [f64]) {
    buf.iter_mut().for_each(|v| *v = rng.normal());
}
