//! The martingale MMD statistic and its `i^-γ` weighted family.
//!
//! For pairs `Z_i = (X_i, Y_i)` the quantity shared by every statistic here is
//! the row sum `S_i = Σ_{j<i} H(Z_i, Z_j)`, `i = 2..n`. With it
//!
//! ```text
//! T_n   = (1/n)  Σ_i S_i / i
//! σ_n²  = (1/n²) Σ_i (S_i / i)²
//! η_n   = T_n / σ_n
//! ```
//!
//! and the test rejects when `η_n > z_{1-α}`. One pass evaluates `H` once per
//! unordered pair and keeps only the `n - 1` row sums.

use std::time::Instant;

use crate::data::{compensated_sum, CompensatedSum, PairedDataset};
use crate::distfn::{std_normal_quantile, std_normal_sf};
use crate::error::{Error, Result};
use crate::kernels::{resolve_for, GeometryNeeds, KernelSpec, ResolvedKernel};
use crate::outcome::{check_alpha, Method, TestOutcome};

/// Row sums `S_i` for `i = 2..n` (stored at index `i - 2`).
pub fn row_sums(data: &PairedDataset, k: &ResolvedKernel) -> Vec<f64> {
    let (x, y) = (data.x(), data.y());
    let n = data.len();
    let mut out = Vec::with_capacity(n.saturating_sub(1));
    for i in 1..n {
        let (xi, yi) = (x.row(i), y.row(i));
        let mut acc = CompensatedSum::default();
        for j in 0..i {
            acc.add(k.h_unchecked(xi, yi, x.row(j), y.row(j)));
        }
        out.push(acc.value());
    }
    out
}

/// Row sums for several kernels in one pass. Distances between each pair of
/// points are computed once and shared by all kernels.
pub fn row_sums_multi(data: &PairedDataset, kernels: &[ResolvedKernel]) -> Vec<Vec<f64>> {
    if kernels.len() == 1 {
        return vec![row_sums(data, &kernels[0])];
    }
    let (x, y) = (data.x(), data.y());
    let n = data.len();
    let r = kernels.len();
    let needs = GeometryNeeds::of(kernels);
    let mut out = vec![Vec::with_capacity(n.saturating_sub(1)); r];
    let mut acc = vec![CompensatedSum::default(); r];
    for i in 1..n {
        let (xi, yi) = (x.row(i), y.row(i));
        acc.iter_mut().for_each(|a| *a = CompensatedSum::default());
        for j in 0..i {
            let (xj, yj) = (x.row(j), y.row(j));
            let g_xx = needs.measure(xi, xj);
            let g_xy = needs.measure(xi, yj);
            let g_yx = needs.measure(xj, yi);
            let g_yy = needs.measure(yi, yj);
            for (a, k) in acc.iter_mut().zip(kernels) {
                a.add(
                    k.eval_geometry(&g_xx) - k.eval_geometry(&g_xy) - k.eval_geometry(&g_yx)
                        + k.eval_geometry(&g_yy),
                );
            }
        }
        for (o, a) in out.iter_mut().zip(&acc) {
            o.push(a.value());
        }
    }
    out
}

/// `T_n`, `σ_n` and `η_n` together with the row sums they come from.
#[derive(Debug, Clone, PartialEq)]
pub struct MmdBreakdown {
    pub row_sums: Vec<f64>,
    pub t_n: f64,
    pub sigma_n: f64,
    /// `None` when `σ_n = 0`.
    pub eta_n: Option<f64>,
}

impl MmdBreakdown {
    pub fn from_row_sums(row_sums: Vec<f64>) -> Self {
        let n = (row_sums.len() + 1) as f64;
        let means = || row_sums.iter().enumerate().map(|(k, s)| s / (k + 2) as f64);
        let t_n = compensated_sum(means()) / n;
        let sigma_n = compensated_sum(means().map(|m| m * m)).sqrt() / n;
        let eta_n = (sigma_n > 0.0).then(|| t_n / sigma_n);
        Self {
            row_sums,
            t_n,
            sigma_n,
            eta_n,
        }
    }

    pub fn n(&self) -> usize {
        self.row_sums.len() + 1
    }

    pub fn is_degenerate(&self) -> bool {
        self.eta_n.is_none()
    }
}

pub fn compute_mmd_breakdown(data: &PairedDataset, k: &ResolvedKernel) -> MmdBreakdown {
    MmdBreakdown::from_row_sums(row_sums(data, k))
}

/// `z_{1-α}`.
pub fn normal_threshold(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    std_normal_quantile(1.0 - alpha)
}

/// Builds the one-sided Gaussian outcome for a standardized statistic.
pub(crate) fn gaussian_outcome(method: Method, standardized: Option<f64>, alpha: f64) -> Result<TestOutcome> {
    let threshold = normal_threshold(alpha)?;
    Ok(match standardized {
        Some(z) if z.is_finite() => TestOutcome::decided(method, z, threshold, std_normal_sf(z), alpha),
        _ => TestOutcome::degenerate(method, threshold, alpha),
    })
}

fn bandwidth_diag(outcome: TestOutcome, k: &ResolvedKernel) -> TestOutcome {
    match k.bandwidth() {
        Some(b) => outcome.with("bandwidth", b),
        None => outcome,
    }
}

/// The martingale MMD test with an already resolved kernel.
pub fn mmd_test_resolved(data: &PairedDataset, k: &ResolvedKernel, alpha: f64) -> Result<TestOutcome> {
    check_alpha(alpha)?;
    let start = Instant::now();
    let b = compute_mmd_breakdown(data, k);
    let elapsed = start.elapsed().as_nanos() as f64;
    let out = gaussian_outcome(Method::Mmmd, b.eta_n, alpha)?
        .with("n", data.len() as f64)
        .with("d", data.dim() as f64)
        .with("t_n", b.t_n)
        .with("sigma_n", b.sigma_n)
        .with("runtime_ns", elapsed);
    Ok(bandwidth_diag(out, k))
}

/// The martingale MMD test: reject when `η_n > z_{1-α}`; `p = 1 - Φ(η_n)`.
pub fn mmd_test(data: &PairedDataset, spec: &KernelSpec, alpha: f64) -> Result<TestOutcome> {
    check_alpha(alpha)?;
    let k = resolve_for(spec, data)?;
    mmd_test_resolved(data, &k, alpha)
}

/// Weighted statistic `T_{n,γ}` and its self-normalized form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaStatistic {
    pub gamma: f64,
    /// `Σ_i i^-γ S_i`.
    pub numerator: f64,
    /// `sqrt(Σ_i (i^-γ S_i)²)`.
    pub denominator: f64,
    /// `numerator / denominator`, `None` when the denominator vanishes.
    pub standardized: Option<f64>,
    /// `numerator / n^{2-γ}`.
    pub t_n_gamma: f64,
}

fn check_gamma(gamma: f64) -> Result<()> {
    if (0.0..=1.0).contains(&gamma) {
        Ok(())
    } else {
        Err(Error::InvalidGamma(gamma))
    }
}

#[inline]
fn gamma_weight(i: usize, gamma: f64) -> f64 {
    if gamma == 1.0 {
        1.0 / i as f64
    } else if gamma == 0.0 {
        1.0
    } else {
        (i as f64).powf(-gamma)
    }
}

impl GammaStatistic {
    pub fn from_row_sums(row_sums: &[f64], gamma: f64) -> Result<Self> {
        check_gamma(gamma)?;
        let n = row_sums.len() + 1;
        let weighted = || {
            row_sums
                .iter()
                .enumerate()
                .map(move |(k, s)| s * gamma_weight(k + 2, gamma))
        };
        let numerator = compensated_sum(weighted());
        let denominator = compensated_sum(weighted().map(|w| w * w)).sqrt();
        let standardized = (denominator > 0.0).then(|| numerator / denominator);
        Ok(Self {
            gamma,
            numerator,
            denominator,
            standardized,
            t_n_gamma: numerator / (n as f64).powf(2.0 - gamma),
        })
    }
}

pub fn compute_gamma_statistic(data: &PairedDataset, k: &ResolvedKernel, gamma: f64) -> Result<GammaStatistic> {
    check_gamma(gamma)?;
    GammaStatistic::from_row_sums(&row_sums(data, k), gamma)
}

pub fn gamma_test_resolved(
    data: &PairedDataset,
    k: &ResolvedKernel,
    gamma: f64,
    alpha: f64,
) -> Result<TestOutcome> {
    check_alpha(alpha)?;
    check_gamma(gamma)?;
    let start = Instant::now();
    let g = compute_gamma_statistic(data, k, gamma)?;
    let elapsed = start.elapsed().as_nanos() as f64;
    let out = gaussian_outcome(Method::Gamma, g.standardized, alpha)?
        .with("n", data.len() as f64)
        .with("d", data.dim() as f64)
        .with("gamma", gamma)
        .with("t_n_gamma", g.t_n_gamma)
        .with("runtime_ns", elapsed);
    Ok(bandwidth_diag(out, k))
}

/// Self-normalized test of the `γ` family against `z_{1-α}`.
pub fn gamma_test(data: &PairedDataset, spec: &KernelSpec, gamma: f64, alpha: f64) -> Result<TestOutcome> {
    check_alpha(alpha)?;
    check_gamma(gamma)?;
    let k = resolve_for(spec, data)?;
    gamma_test_resolved(data, &k, gamma, alpha)
}

/// Plug-in moments of `h(z) = E[H(z, Z)] - MMD²` from an auxiliary sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HMoments {
    /// Mean of `H(W_a, W_b)` over ordered pairs `a != b`.
    pub mmd_sq_hat: f64,
    /// Sample variance of `ĥ(W_a) = mean_{b != a} H(W_a, W_b) - mmd_sq_hat`.
    pub var_h_hat: f64,
}

pub fn estimate_h_moments(aux: &PairedDataset, k: &ResolvedKernel) -> Result<HMoments> {
    let m = aux.len();
    if m < 2 {
        return Err(Error::TooFewRows { needed: 2, found: m });
    }
    let (x, y) = (aux.x(), aux.y());
    let mut totals = vec![CompensatedSum::default(); m];
    for a in 1..m {
        for b in 0..a {
            let h = k.h_unchecked(x.row(a), y.row(a), x.row(b), y.row(b));
            totals[a].add(h);
            totals[b].add(h);
        }
    }
    let totals: Vec<f64> = totals.iter().map(CompensatedSum::value).collect();
    let mf = m as f64;
    let mmd_sq_hat = compensated_sum(totals.iter().copied()) / (mf * (mf - 1.0));
    let h_hat: Vec<f64> = totals.iter().map(|t| t / (mf - 1.0) - mmd_sq_hat).collect();
    Ok(HMoments {
        mmd_sq_hat,
        var_h_hat: crate::distfn::sample_variance(&h_hat),
    })
}
