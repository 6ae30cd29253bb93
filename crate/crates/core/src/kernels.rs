//! Kernel families, bandwidth rules and the pairwise statistic kernel
//! `H(z1, z2) = K(x1, x2) - K(x1, y2) - K(x2, y1) + K(y1, y2)`.
//!
//! Gaussian kernels carry one of two equivalent scales: the bandwidth form
//! `exp(-|x - y|² / (2λ²))` used with the median heuristic, and the rate form
//! `exp(-ν |x - y|²)` produced by the minimax rule. They are related by
//! `λ = 1 / √(2ν)`.

use serde::{Deserialize, Serialize};

use crate::data::{PairedDataset, SampleMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    Gaussian,
    Laplace,
    Linear,
}

impl KernelFamily {
    pub fn name(self) -> &'static str {
        match self {
            KernelFamily::Gaussian => "gaussian",
            KernelFamily::Laplace => "laplace",
            KernelFamily::Linear => "linear",
        }
    }
}

impl std::str::FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "gauss" | "rbf" => Ok(KernelFamily::Gaussian),
            "laplace" | "laplacian" => Ok(KernelFamily::Laplace),
            "linear" => Ok(KernelFamily::Linear),
            other => Err(Error::InvalidParameter(format!("unknown kernel family '{other}'"))),
        }
    }
}

/// How a bandwidth is obtained from the data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BandwidthRule {
    /// A fixed bandwidth λ.
    Fixed(f64),
    /// The median pairwise distance of the pooled sample: Euclidean for the
    /// Gaussian kernel, L1 for the Laplace kernel.
    MedianHeuristic,
    /// A multiple of the median heuristic, for bandwidth ensembles.
    MedianMultiple(f64),
    /// Gaussian rate `ν = n^{4/(d + 4β)}`.
    MinimaxGaussian { beta: f64, n: usize, d: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub bandwidth: BandwidthRule,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, bandwidth: BandwidthRule) -> Self {
        Self { family, bandwidth }
    }

    pub fn gaussian_median() -> Self {
        Self::new(KernelFamily::Gaussian, BandwidthRule::MedianHeuristic)
    }

    pub fn laplace_median() -> Self {
        Self::new(KernelFamily::Laplace, BandwidthRule::MedianHeuristic)
    }

    pub fn linear() -> Self {
        Self::new(KernelFamily::Linear, BandwidthRule::MedianHeuristic)
    }

    /// Whether resolving this spec requires the median heuristic.
    pub fn needs_median(&self) -> bool {
        self.family != KernelFamily::Linear
            && matches!(
                self.bandwidth,
                BandwidthRule::MedianHeuristic | BandwidthRule::MedianMultiple(_)
            )
    }
}

/// Internal scale of a resolved kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelScale {
    /// `exp(-|x-y|²/(2λ²))` (Gaussian) or `exp(-|x-y|₁/λ)` (Laplace).
    Bandwidth(f64),
    /// `exp(-ν|x-y|²)`; Gaussian only.
    Rate(f64),
    /// Linear kernel.
    None,
}

/// A kernel with its scale fixed. Immutable and cheap to copy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedKernel {
    family: KernelFamily,
    scale: KernelScale,
    /// Multiplier applied to the distance inside `exp(-coef * dist)`.
    coef: f64,
}

impl ResolvedKernel {
    pub fn gaussian(bandwidth: f64) -> Result<Self> {
        check_positive(bandwidth)?;
        Ok(Self {
            family: KernelFamily::Gaussian,
            scale: KernelScale::Bandwidth(bandwidth),
            coef: 1.0 / (2.0 * bandwidth * bandwidth),
        })
    }

    pub fn gaussian_rate(rate: f64) -> Result<Self> {
        check_positive(rate)?;
        Ok(Self {
            family: KernelFamily::Gaussian,
            scale: KernelScale::Rate(rate),
            coef: rate,
        })
    }

    pub fn laplace(bandwidth: f64) -> Result<Self> {
        check_positive(bandwidth)?;
        Ok(Self {
            family: KernelFamily::Laplace,
            scale: KernelScale::Bandwidth(bandwidth),
            coef: 1.0 / bandwidth,
        })
    }

    pub fn linear() -> Self {
        Self {
            family: KernelFamily::Linear,
            scale: KernelScale::None,
            coef: 0.0,
        }
    }

    pub fn with_bandwidth(family: KernelFamily, bandwidth: f64) -> Result<Self> {
        match family {
            KernelFamily::Gaussian => Self::gaussian(bandwidth),
            KernelFamily::Laplace => Self::laplace(bandwidth),
            KernelFamily::Linear => Ok(Self::linear()),
        }
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn scale(&self) -> KernelScale {
        self.scale
    }

    /// Bandwidth λ in the `exp(-|x-y|²/(2λ²))` convention; rate-form Gaussians
    /// are converted with `λ = 1/√(2ν)`. `None` for the linear kernel.
    pub fn bandwidth(&self) -> Option<f64> {
        match self.scale {
            KernelScale::Bandwidth(l) => Some(l),
            KernelScale::Rate(nu) => Some(1.0 / (2.0 * nu).sqrt()),
            KernelScale::None => None,
        }
    }

    /// Whether the kernel is bounded by one (Gaussian and Laplace).
    pub fn is_bounded(&self) -> bool {
        self.family != KernelFamily::Linear
    }

    /// Checked evaluation of `K(x, y)`.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        check_dims(x.len(), y.len())?;
        if x.iter().chain(y).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(self.eval_unchecked(x, y))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        match self.family {
            KernelFamily::Gaussian => (-self.coef * squared_euclidean(x, y)).exp(),
            KernelFamily::Laplace => (-self.coef * manhattan(x, y)).exp(),
            KernelFamily::Linear => dot(x, y),
        }
    }

    /// `K` from precomputed pair geometry.
    #[inline]
    pub(crate) fn eval_geometry(&self, g: &PairGeometry) -> f64 {
        match self.family {
            KernelFamily::Gaussian => (-self.coef * g.sq_l2).exp(),
            KernelFamily::Laplace => (-self.coef * g.l1).exp(),
            KernelFamily::Linear => g.dot,
        }
    }

    /// Checked evaluation of `H(z1, z2)` for `z1 = (x1, y1)`, `z2 = (x2, y2)`.
    pub fn eval_h(&self, z1: (&[f64], &[f64]), z2: (&[f64], &[f64])) -> Result<f64> {
        let d = z1.0.len();
        for v in [z1.1, z2.0, z2.1] {
            check_dims(d, v.len())?;
        }
        if [z1.0, z1.1, z2.0, z2.1].iter().any(|v| v.iter().any(|c| !c.is_finite())) {
            return Err(Error::NonFinite);
        }
        Ok(self.h_unchecked(z1.0, z1.1, z2.0, z2.1))
    }

    #[inline]
    pub(crate) fn h_unchecked(&self, x1: &[f64], y1: &[f64], x2: &[f64], y2: &[f64]) -> f64 {
        self.eval_unchecked(x1, x2) - self.eval_unchecked(x1, y2) - self.eval_unchecked(x2, y1)
            + self.eval_unchecked(y1, y2)
    }
}

fn check_positive(v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidBandwidth(v))
    }
}

fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Distances between two points, filled only where some kernel needs them.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct PairGeometry {
    pub sq_l2: f64,
    pub l1: f64,
    pub dot: f64,
}

/// Which pieces of [`PairGeometry`] a kernel set reads.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct GeometryNeeds {
    sq_l2: bool,
    l1: bool,
    dot: bool,
}

impl GeometryNeeds {
    pub(crate) fn of(kernels: &[ResolvedKernel]) -> Self {
        let mut needs = Self::default();
        for k in kernels {
            match k.family {
                KernelFamily::Gaussian => needs.sq_l2 = true,
                KernelFamily::Laplace => needs.l1 = true,
                KernelFamily::Linear => needs.dot = true,
            }
        }
        needs
    }

    #[inline]
    pub(crate) fn measure(&self, a: &[f64], b: &[f64]) -> PairGeometry {
        PairGeometry {
            sq_l2: if self.sq_l2 { squared_euclidean(a, b) } else { 0.0 },
            l1: if self.l1 { manhattan(a, b) } else { 0.0 },
            dot: if self.dot { dot(a, b) } else { 0.0 },
        }
    }
}

// Four independent accumulators let the compiler vectorise these loops.
macro_rules! unrolled_reduce {
    ($a:expr, $b:expr, |$u:ident, $v:ident| $term:expr) => {{
        let (a, b) = ($a, $b);
        let mut acc = [0.0f64; 4];
        let mut ca = a.chunks_exact(4);
        let mut cb = b.chunks_exact(4);
        for (pa, pb) in (&mut ca).zip(&mut cb) {
            for k in 0..4 {
                let ($u, $v) = (pa[k], pb[k]);
                acc[k] += $term;
            }
        }
        let mut tail = 0.0;
        for (&$u, &$v) in ca.remainder().iter().zip(cb.remainder()) {
            tail += $term;
        }
        (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
    }};
}

#[inline]
pub(crate) fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    unrolled_reduce!(a, b, |u, v| (u - v) * (u - v))
}

#[inline]
pub(crate) fn manhattan(a: &[f64], b: &[f64]) -> f64 {
    unrolled_reduce!(a, b, |u, v| (u - v).abs())
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    unrolled_reduce!(a, b, |u, v| u * v)
}

/// Median of the `m(m-1)/2` pairwise Euclidean distances among the rows of
/// `pooled`. With an even count the lower-middle order statistic is used, so
/// the result is always an observed distance.
pub fn median_heuristic(pooled: &SampleMatrix) -> Result<f64> {
    // Select on squared distances; sqrt is monotone.
    pairwise_median(pooled, squared_euclidean).map(f64::sqrt).and_then(positive_median)
}

/// As [`median_heuristic`] but over L1 distances, the metric of the Laplace
/// kernel.
pub fn median_heuristic_l1(pooled: &SampleMatrix) -> Result<f64> {
    pairwise_median(pooled, manhattan).and_then(positive_median)
}

fn pairwise_median(pooled: &SampleMatrix, dist: fn(&[f64], &[f64]) -> f64) -> Result<f64> {
    let m = pooled.nrows();
    if m < 2 {
        return Err(Error::TooFewRows { needed: 2, found: m });
    }
    let mut dists = Vec::with_capacity(m * (m - 1) / 2);
    for i in 1..m {
        let ri = pooled.row(i);
        for j in 0..i {
            dists.push(dist(ri, pooled.row(j)));
        }
    }
    let k = (dists.len() - 1) / 2;
    let (_, median, _) = dists.select_nth_unstable_by(k, f64::total_cmp);
    Ok(*median)
}

fn positive_median(median: f64) -> Result<f64> {
    if median > 0.0 {
        Ok(median)
    } else {
        Err(Error::DegenerateBandwidth)
    }
}

/// Resolves one spec against the two samples.
pub fn resolve_bandwidth(
    spec: &KernelSpec,
    x: &SampleMatrix,
    y: &SampleMatrix,
) -> Result<ResolvedKernel> {
    Ok(resolve_all(std::slice::from_ref(spec), x, y)?.remove(0))
}

/// Resolves several specs, computing the median heuristic at most once.
pub fn resolve_all(
    specs: &[KernelSpec],
    x: &SampleMatrix,
    y: &SampleMatrix,
) -> Result<Vec<ResolvedKernel>> {
    if x.nrows() == 0 || y.nrows() == 0 {
        return Err(Error::TooFewRows { needed: 1, found: 0 });
    }
    if x.ncols() != y.ncols() {
        return Err(Error::DimensionMismatch {
            expected: x.ncols(),
            found: y.ncols(),
        });
    }
    // Each family's median is taken in the metric its kernel uses.
    let needs = |family| specs.iter().any(|s| s.family == family && s.needs_median());
    let pooled = if specs.iter().any(KernelSpec::needs_median) {
        Some(x.stack(y)?)
    } else {
        None
    };
    let median_l2 = match &pooled {
        Some(p) if needs(KernelFamily::Gaussian) => Some(median_heuristic(p)?),
        _ => None,
    };
    let median_l1 = match &pooled {
        Some(p) if needs(KernelFamily::Laplace) => Some(median_heuristic_l1(p)?),
        _ => None,
    };
    specs
        .iter()
        .map(|spec| {
            if spec.family == KernelFamily::Linear {
                if let BandwidthRule::MinimaxGaussian { .. } = spec.bandwidth {
                    return Err(Error::MinimaxRequiresGaussian);
                }
                return Ok(ResolvedKernel::linear());
            }
            let median = match spec.family {
                KernelFamily::Laplace => median_l1,
                _ => median_l2,
            };
            match spec.bandwidth {
                BandwidthRule::Fixed(l) => ResolvedKernel::with_bandwidth(spec.family, l),
                BandwidthRule::MedianHeuristic => {
                    ResolvedKernel::with_bandwidth(spec.family, median.expect("median computed"))
                }
                BandwidthRule::MedianMultiple(f) => {
                    check_positive(f)?;
                    ResolvedKernel::with_bandwidth(spec.family, f * median.expect("median computed"))
                }
                BandwidthRule::MinimaxGaussian { beta, n, d } => {
                    if spec.family != KernelFamily::Gaussian {
                        return Err(Error::MinimaxRequiresGaussian);
                    }
                    ResolvedKernel::gaussian_rate(minimax_rate(beta, n, d)?)
                }
            }
        })
        .collect()
}

/// `ν_n = n^{4/(d + 4β)}`.
pub fn minimax_rate(beta: f64, n: usize, d: usize) -> Result<f64> {
    if !(beta.is_finite() && beta > 0.0) || n == 0 || d == 0 {
        return Err(Error::InvalidParameter(format!(
            "minimax rule needs beta > 0, n >= 1, d >= 1 (got beta={beta}, n={n}, d={d})"
        )));
    }
    Ok((n as f64).powf(4.0 / (d as f64 + 4.0 * beta)))
}

/// Resolves the spec for a paired dataset.
pub fn resolve_for(spec: &KernelSpec, data: &PairedDataset) -> Result<ResolvedKernel> {
    resolve_bandwidth(spec, data.x(), data.y())
}
