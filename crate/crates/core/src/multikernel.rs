//! Multi-kernel martingale MMD with chi-squared calibration.
//!
//! For kernels `K_1..K_r` the per-kernel statistics form `t = (T_{n,1}, ..., T_{n,r})`
//! and the normalization matrix is
//! `Σ(a, b) = (1/n²) Σ_i (S_{a,i} / i)(S_{b,i} / i)`.
//! The statistic `tᵀ Σ⁻¹ t` is compared against the `χ²_r` quantile.

use std::time::Instant;

use crate::data::{compensated_sum, PairedDataset};
use crate::distfn::{chi2_quantile, chi2_sf};
use crate::error::{Error, Result};
use crate::kernels::{resolve_all, KernelSpec, ResolvedKernel};
use crate::outcome::{check_alpha, Method, TestOutcome};
use crate::statcore::row_sums_multi;

/// Relative pivot below which the jittered normalization matrix is treated as singular.
pub const PIVOT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct MultiKernelResult {
    pub t_vec: Vec<f64>,
    /// Symmetric `r × r`, row-major rows.
    pub sigma_mat: Vec<Vec<f64>>,
    /// `None` when the normalization matrix is numerically singular.
    pub mahalanobis: Option<f64>,
    pub r: usize,
}

impl MultiKernelResult {
    pub fn is_degenerate(&self) -> bool {
        self.mahalanobis.is_none()
    }

    /// Builds `t`, `Σ` and the quadratic form from per-kernel row sums.
    pub fn from_row_sums(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let n = rows.first().map_or(1, |v| v.len() + 1) as f64;
        let means: Vec<Vec<f64>> = rows
            .iter()
            .map(|rs| rs.iter().enumerate().map(|(k, s)| s / (k + 2) as f64).collect())
            .collect();
        let t_vec: Vec<f64> = means.iter().map(|m| compensated_sum(m.iter().copied()) / n).collect();
        let mut sigma_mat = vec![vec![0.0; r]; r];
        for a in 0..r {
            for b in 0..=a {
                let v = compensated_sum(means[a].iter().zip(&means[b]).map(|(p, q)| p * q)) / (n * n);
                sigma_mat[a][b] = v;
                sigma_mat[b][a] = v;
            }
        }
        let mahalanobis = spd_quadratic_form(&sigma_mat, &t_vec);
        Self {
            t_vec,
            sigma_mat,
            mahalanobis,
            r,
        }
    }
}

/// `tᵀ (Σ + εI)⁻¹ t` with `ε = 1e-12 · trace(Σ) / r`, via Cholesky with
/// diagonal pivoting.
///
/// Returns `None` when the largest remaining pivot of the jittered matrix falls
/// below `PIVOT_TOLERANCE · max diag(Σ)`; the jitter alone keeps exact
/// duplicates factorizable, so the pivot bound is what detects them. Pivots are
/// chosen by size, so the verdict does not depend on the kernel order.
pub fn spd_quadratic_form(sigma: &[Vec<f64>], t: &[f64]) -> Option<f64> {
    let r = t.len();
    let trace: f64 = (0..r).map(|a| sigma[a][a]).sum();
    let max_diag = (0..r).map(|a| sigma[a][a]).fold(0.0, f64::max);
    if !(trace > 0.0 && trace.is_finite()) {
        return None;
    }
    let eps = 1e-12 * trace / r as f64;
    let floor = PIVOT_TOLERANCE * max_diag;
    let mut a: Vec<Vec<f64>> = sigma.iter().map(|row| row[..r].to_vec()).collect();
    for (i, row) in a.iter_mut().enumerate() {
        row[i] += eps;
    }
    let mut t = t.to_vec();
    // Lower triangle of `a` becomes L; the trailing block holds the residual.
    for k in 0..r {
        let p = (k..r).max_by(|&i, &j| a[i][i].total_cmp(&a[j][j]).then(j.cmp(&i)))?;
        a.swap(k, p);
        for row in a.iter_mut() {
            row.swap(k, p);
        }
        t.swap(k, p);
        if !(a[k][k] > floor) {
            return None;
        }
        let pivot = a[k][k].sqrt();
        a[k][k] = pivot;
        for i in k + 1..r {
            a[i][k] /= pivot;
        }
        for i in k + 1..r {
            for j in k + 1..=i {
                let v = a[i][j] - a[i][k] * a[j][k];
                a[i][j] = v;
                a[j][i] = v;
            }
        }
    }
    // Forward substitution L z = t; the form is |z|².
    let mut z = vec![0.0; r];
    for i in 0..r {
        let mut s = t[i];
        for k in 0..i {
            s -= a[i][k] * z[k];
        }
        z[i] = s / a[i][i];
    }
    Some(z.iter().map(|v| v * v).sum())
}

pub fn compute_mmmmd(data: &PairedDataset, kernels: &[ResolvedKernel]) -> Result<MultiKernelResult> {
    if kernels.is_empty() {
        return Err(Error::InvalidParameter("at least one kernel is required".into()));
    }
    Ok(MultiKernelResult::from_row_sums(&row_sums_multi(data, kernels)))
}

pub fn mmmmd_test_resolved(data: &PairedDataset, kernels: &[ResolvedKernel], alpha: f64) -> Result<TestOutcome> {
    check_alpha(alpha)?;
    if kernels.is_empty() {
        return Err(Error::InvalidParameter("at least one kernel is required".into()));
    }
    let r = kernels.len() as u32;
    let threshold = chi2_quantile(r, 1.0 - alpha)?;
    let start = Instant::now();
    let res = compute_mmmmd(data, kernels)?;
    let elapsed = start.elapsed().as_nanos() as f64;
    let mut out = match res.mahalanobis {
        Some(m) if m.is_finite() => TestOutcome::decided(Method::Mmmmd, m, threshold, chi2_sf(r, m)?, alpha),
        _ => TestOutcome::degenerate(Method::Mmmmd, threshold, alpha),
    }
    .with("n", data.len() as f64)
    .with("d", data.dim() as f64)
    .with("r", r as f64)
    .with("runtime_ns", elapsed);
    for (i, k) in kernels.iter().enumerate() {
        if let Some(b) = k.bandwidth() {
            out = out.with(&format!("bandwidth.{i}"), b);
        }
    }
    Ok(out)
}

/// Resolves every spec (sharing one median computation) and runs the test.
pub fn mmmmd_test(data: &PairedDataset, specs: &[KernelSpec], alpha: f64) -> Result<TestOutcome> {
    check_alpha(alpha)?;
    if specs.is_empty() {
        return Err(Error::InvalidParameter("at least one kernel is required".into()));
    }
    let kernels = resolve_all(specs, data.x(), data.y())?;
    mmmmd_test_resolved(data, &kernels, alpha)
}
