//! Comparison tests: permutation-calibrated quadratic MMD, block MMD,
//! linear-time MMD and cross MMD.
//!
//! Block, linear and cross tests are one-sided studentized means compared
//! against `z_{1-α}`; their exact normalizations are approximations of the
//! published tests, fixed here for benchmarking.

use std::time::Instant;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::{compensated_sum, PairedDataset, SampleMatrix};
use crate::datagen::{split_seed, SimRng};
use crate::distfn::{mean, sample_variance};
use crate::error::{Error, Result};
use crate::kernels::{resolve_for, KernelSpec, ResolvedKernel};
use crate::outcome::{check_alpha, Method, TestOutcome};
use crate::statcore::{gaussian_outcome, row_sums};

/// `(1/n²) Σ_{i≠j} H(Z_i, Z_j)`.
pub fn quad_mmd_statistic(data: &PairedDataset, k: &ResolvedKernel) -> f64 {
    let n = data.len() as f64;
    2.0 * compensated_sum(row_sums(data, k)) / (n * n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermutationPlan {
    pub num_perms: usize,
    pub seed: u64,
}

impl PermutationPlan {
    pub fn new(num_perms: usize, seed: u64) -> Result<Self> {
        if num_perms == 0 {
            return Err(Error::InvalidParameter("num_perms must be >= 1".into()));
        }
        Ok(Self { num_perms, seed })
    }
}

/// Pooled Gram matrix with the per-row sums needed to evaluate the quadratic
/// statistic under any relabeling in `O(n²)` without new kernel evaluations.
struct PooledGram {
    n: usize,
    gram: Vec<f64>,
    row_totals: Vec<f64>,
}

impl PooledGram {
    fn new(pooled: &SampleMatrix, k: &ResolvedKernel) -> Self {
        let m = pooled.nrows();
        let mut gram = vec![0.0; m * m];
        for a in 0..m {
            for b in 0..=a {
                let v = k.eval_unchecked(pooled.row(a), pooled.row(b));
                gram[a * m + b] = v;
                gram[b * m + a] = v;
            }
        }
        let row_totals = gram.chunks_exact(m).map(|r| r.iter().sum()).collect();
        Self { n: m / 2, gram, row_totals }
    }

    /// Statistic when pooled indices `order[..n]` form X and `order[n..]` form
    /// Y, paired positionally.
    fn statistic(&self, order: &[usize], mask: &mut [f64]) -> f64 {
        let (n, m) = (self.n, 2 * self.n);
        mask.iter_mut().for_each(|v| *v = 0.0);
        for &a in &order[..n] {
            mask[a] = 1.0;
        }
        // r_a = Σ_{b∈X} G[a, b].
        let (mut xx, mut yy, mut xy) = (0.0, 0.0, 0.0);
        for a in 0..m {
            let row = &self.gram[a * m..(a + 1) * m];
            let r_a: f64 = row.iter().zip(mask.iter()).map(|(g, w)| g * w).sum();
            if mask[a] == 1.0 {
                xx += r_a;
            } else {
                xy += r_a;
                yy += self.row_totals[a] - r_a;
            }
        }
        let (mut dx, mut dy, mut paired) = (0.0, 0.0, 0.0);
        for i in 0..n {
            let (a, b) = (order[i], order[n + i]);
            dx += self.gram[a * m + a];
            dy += self.gram[b * m + b];
            paired += self.gram[a * m + b];
        }
        let nf = n as f64;
        ((xx - dx) + (yy - dy) - 2.0 * (xy - paired)) / (nf * nf)
    }
}

/// `p = (1 + #{permuted ≥ observed}) / (B + 1)`; rejects iff `p ≤ α`.
///
/// The threshold is the permuted value whose exceedance is exactly the
/// boundary of the rejection region, so `reject == statistic > threshold`;
/// it is `+∞` when `α (B + 1) < 1` and the test can never reject.
pub fn permutation_mmd_test_resolved(
    data: &PairedDataset,
    k: &ResolvedKernel,
    plan: &PermutationPlan,
    alpha: f64,
) -> Result<TestOutcome> {
    check_alpha(alpha)?;
    if plan.num_perms == 0 {
        return Err(Error::InvalidParameter("num_perms must be >= 1".into()));
    }
    let start = Instant::now();
    let gram = PooledGram::new(&data.pooled(), k);
    let m = 2 * data.len();
    let mut mask = vec![0.0; m];
    let identity: Vec<usize> = (0..m).collect();
    let observed = gram.statistic(&identity, &mut mask);
    let mut permuted = Vec::with_capacity(plan.num_perms);
    let mut order = identity.clone();
    for p in 0..plan.num_perms {
        order.copy_from_slice(&identity);
        order.shuffle(&mut SimRng::seed_from(split_seed(plan.seed, p as u64)));
        permuted.push(gram.statistic(&order, &mut mask));
    }
    let exceed = permuted.iter().filter(|&&v| v >= observed).count();
    let b = plan.num_perms as f64;
    let p_value = (1.0 + exceed as f64) / (b + 1.0);

    permuted.sort_by(|a, b| b.total_cmp(a));
    // Largest k with (1 + k) / (B + 1) <= α.
    let max_exceed = (0..=plan.num_perms)
        .take_while(|&c| (1.0 + c as f64) / (b + 1.0) <= alpha)
        .last();
    let threshold = match max_exceed {
        Some(c) if c < plan.num_perms => permuted[c],
        Some(_) => f64::NEG_INFINITY,
        None => f64::INFINITY,
    };
    let elapsed = start.elapsed().as_nanos() as f64;
    let mut out = TestOutcome::decided(Method::MmdPerm, observed, threshold, p_value, alpha);
    debug_assert_eq!(out.reject, p_value <= alpha);
    out = out
        .with("n", data.len() as f64)
        .with("d", data.dim() as f64)
        .with("num_perms", b)
        .with("runtime_ns", elapsed);
    if let Some(bw) = k.bandwidth() {
        out = out.with("bandwidth", bw);
    }
    Ok(out)
}

pub fn permutation_mmd_test(
    data: &PairedDataset,
    spec: &KernelSpec,
    plan: &PermutationPlan,
    alpha: f64,
) -> Result<TestOutcome> {
    check_alpha(alpha)?;
    let k = resolve_for(spec, data)?;
    permutation_mmd_test_resolved(data, &k, plan, alpha)
}

/// `mean / (sd / √k)` with the sample standard deviation; `None` if `sd = 0`.
pub fn studentized_mean(values: &[f64]) -> Option<f64> {
    if values.len() < 2 {
        return None;
    }
    let sd = sample_variance(values).sqrt();
    let z = mean(values) / (sd / (values.len() as f64).sqrt());
    (sd > 0.0 && z.is_finite()).then_some(z)
}

/// `⌊√n⌋`.
pub fn default_block_size(n: usize) -> usize {
    (n as f64).sqrt().floor() as usize
}

/// Per-block `Σ_{i≠j} H / (B(B-1))` over `⌊n/B⌋` consecutive complete blocks.
pub fn block_statistics(data: &PairedDataset, k: &ResolvedKernel, block_size: usize) -> Result<Vec<f64>> {
    if block_size < 2 {
        return Err(Error::InvalidParameter(format!("block size must be >= 2 (got {block_size})")));
    }
    let blocks = data.len() / block_size;
    let bf = block_size as f64;
    Ok((0..blocks)
        .map(|b| {
            let block = data.slice(b * block_size, (b + 1) * block_size);
            2.0 * compensated_sum(row_sums(&block, k)) / (bf * (bf - 1.0))
        })
        .collect())
}

fn finish(
    method: Method,
    data: &PairedDataset,
    k: &ResolvedKernel,
    values: &[f64],
    alpha: f64,
    start: Instant,
) -> Result<TestOutcome> {
    let elapsed = start.elapsed().as_nanos() as f64;
    let mut out = gaussian_outcome(method, studentized_mean(values), alpha)?
        .with("n", data.len() as f64)
        .with("d", data.dim() as f64)
        .with("runtime_ns", elapsed);
    if let Some(bw) = k.bandwidth() {
        out = out.with("bandwidth", bw);
    }
    Ok(out)
}

pub fn block_mmd_test_resolved(
    data: &PairedDataset,
    k: &ResolvedKernel,
    block_size: usize,
    alpha: f64,
) -> Result<TestOutcome> {
    check_alpha(alpha)?;
    if block_size < 2 {
        return Err(Error::InvalidParameter(format!("block size must be >= 2 (got {block_size})")));
    }
    let blocks = data.len() / block_size;
    if blocks < 2 {
        return Err(Error::TooFewBlocks(blocks));
    }
    let start = Instant::now();
    let values = block_statistics(data, k, block_size)?;
    Ok(finish(Method::Block, data, k, &values, alpha, start)?.with("block_size", block_size as f64))
}

pub fn block_mmd_test(data: &PairedDataset, spec: &KernelSpec, block_size: usize, alpha: f64) -> Result<TestOutcome> {
    check_alpha(alpha)?;
    let k = resolve_for(spec, data)?;
    block_mmd_test_resolved(data, &k, block_size, alpha)
}

fn check_min_pairs(data: &PairedDataset) -> Result<()> {
    if data.len() < 4 {
        return Err(Error::TooFewRows { needed: 4, found: data.len() });
    }
    Ok(())
}

/// `H(Z_{2m-1}, Z_{2m})` for `m = 1..⌊n/2⌋`.
pub fn linear_terms(data: &PairedDataset, k: &ResolvedKernel) -> Vec<f64> {
    let (x, y) = (data.x(), data.y());
    (0..data.len() / 2)
        .map(|m| k.h_unchecked(x.row(2 * m), y.row(2 * m), x.row(2 * m + 1), y.row(2 * m + 1)))
        .collect()
}

pub fn linear_mmd_test_resolved(data: &PairedDataset, k: &ResolvedKernel, alpha: f64) -> Result<TestOutcome> {
    check_alpha(alpha)?;
    check_min_pairs(data)?;
    let start = Instant::now();
    let values = linear_terms(data, k);
    finish(Method::Linear, data, k, &values, alpha, start)
}

pub fn linear_mmd_test(data: &PairedDataset, spec: &KernelSpec, alpha: f64) -> Result<TestOutcome> {
    check_alpha(alpha)?;
    check_min_pairs(data)?;
    let k = resolve_for(spec, data)?;
    linear_mmd_test_resolved(data, &k, alpha)
}

/// `u_i = mean_{j∈B} H(Z_i, Z_j)` for `i` in the first `⌈n/2⌉` pairs and `B`
/// the rest.
pub fn cross_terms(data: &PairedDataset, k: &ResolvedKernel) -> Vec<f64> {
    let (x, y) = (data.x(), data.y());
    let split = data.len().div_ceil(2);
    let nb = (data.len() - split) as f64;
    (0..split)
        .map(|i| {
            compensated_sum(
                (split..data.len()).map(|j| k.h_unchecked(x.row(i), y.row(i), x.row(j), y.row(j))),
            ) / nb
        })
        .collect()
}

pub fn cross_mmd_test_resolved(data: &PairedDataset, k: &ResolvedKernel, alpha: f64) -> Result<TestOutcome> {
    check_alpha(alpha)?;
    check_min_pairs(data)?;
    let start = Instant::now();
    let values = cross_terms(data, k);
    finish(Method::Cross, data, k, &values, alpha, start)
}

pub fn cross_mmd_test(data: &PairedDataset, spec: &KernelSpec, alpha: f64) -> Result<TestOutcome> {
    check_alpha(alpha)?;
    check_min_pairs(data)?;
    let k = resolve_for(spec, data)?;
    cross_mmd_test_resolved(data, &k, alpha)
}
