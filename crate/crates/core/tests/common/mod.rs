//! Independent reference implementations used as test oracles.
//!
//! Everything here materializes the full `n × n` matrix of `H` values and
//! evaluates each formula with plain double loops.

#![allow(dead_code)]

use mmmd::{KernelFamily, PairedDataset, ResolvedKernel};

#[derive(Debug, Clone, Copy)]
pub enum RefKernel {
    Gaussian(f64),
    Laplace(f64),
    Linear,
}

impl RefKernel {
    pub fn eval(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            RefKernel::Gaussian(l) => {
                let d2: f64 = a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum();
                (-d2 / (2.0 * l * l)).exp()
            }
            RefKernel::Laplace(l) => {
                let d1: f64 = a.iter().zip(b).map(|(p, q)| (p - q).abs()).sum();
                (-d1 / l).exp()
            }
            RefKernel::Linear => a.iter().zip(b).map(|(p, q)| p * q).sum(),
        }
    }

    pub fn resolved(self) -> ResolvedKernel {
        match self {
            RefKernel::Gaussian(l) => ResolvedKernel::with_bandwidth(KernelFamily::Gaussian, l).unwrap(),
            RefKernel::Laplace(l) => ResolvedKernel::with_bandwidth(KernelFamily::Laplace, l).unwrap(),
            RefKernel::Linear => ResolvedKernel::linear(),
        }
    }
}

/// Dense `H[i][j]` for all `i, j`.
pub fn h_matrix(data: &PairedDataset, k: RefKernel) -> Vec<Vec<f64>> {
    let n = data.len();
    let (x, y) = (data.x(), data.y());
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    k.eval(x.row(i), x.row(j)) - k.eval(x.row(i), y.row(j)) - k.eval(x.row(j), y.row(i))
                        + k.eval(y.row(i), y.row(j))
                })
                .collect()
        })
        .collect()
}

/// `|K(x_i,x_j)| + |K(x_i,y_j)| + |K(x_j,y_i)| + |K(y_i,y_j)|`: bounds the
/// rounding in `H[i][j]`, which itself cancels when the samples are close.
pub fn h_abs_matrix(data: &PairedDataset, k: RefKernel) -> Vec<Vec<f64>> {
    let n = data.len();
    let (x, y) = (data.x(), data.y());
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    k.eval(x.row(i), x.row(j)).abs()
                        + k.eval(x.row(i), y.row(j)).abs()
                        + k.eval(x.row(j), y.row(i)).abs()
                        + k.eval(y.row(i), y.row(j)).abs()
                })
                .collect()
        })
        .collect()
}

/// Row means `(1/i) Σ_{j<i} H[i][j]` with 1-based `i = 2..n`.
fn weighted_rows(h: &[Vec<f64>], gamma: f64) -> Vec<f64> {
    (1..h.len())
        .map(|i| {
            let s: f64 = (0..i).map(|j| h[i][j]).sum();
            s * ((i + 1) as f64).powf(-gamma)
        })
        .collect()
}

pub struct RefBreakdown {
    pub t_n: f64,
    pub sigma_n: f64,
    pub eta_n: f64,
}

pub fn breakdown(h: &[Vec<f64>]) -> RefBreakdown {
    let n = h.len() as f64;
    let w = weighted_rows(h, 1.0);
    let t_n = w.iter().sum::<f64>() / n;
    let sigma_n = (w.iter().map(|v| v * v).sum::<f64>() / (n * n)).sqrt();
    RefBreakdown {
        t_n,
        sigma_n,
        eta_n: t_n / sigma_n,
    }
}

/// `(numerator, denominator, standardized, t_n_gamma)`.
pub fn gamma_family(h: &[Vec<f64>], gamma: f64) -> (f64, f64, f64, f64) {
    let n = h.len() as f64;
    let w = weighted_rows(h, gamma);
    let num: f64 = w.iter().sum();
    let den = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    (num, den, num / den, num / n.powf(2.0 - gamma))
}

/// `(1/n²) Σ_{i≠j} H[i][j]`.
pub fn quad_mmd(h: &[Vec<f64>]) -> f64 {
    let n = h.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += h[i][j];
            }
        }
    }
    s / (n * n) as f64
}

/// `Σ(a, b)` across several H matrices.
pub fn sigma_matrix(hs: &[Vec<Vec<f64>>]) -> Vec<Vec<f64>> {
    let n = hs[0].len() as f64;
    let ws: Vec<Vec<f64>> = hs.iter().map(|h| weighted_rows(h, 1.0)).collect();
    let r = ws.len();
    (0..r)
        .map(|a| {
            (0..r)
                .map(|b| ws[a].iter().zip(&ws[b]).map(|(p, q)| p * q).sum::<f64>() / (n * n))
                .collect()
        })
        .collect()
}

/// `tᵀ Σ⁻¹ t` by Gauss–Jordan elimination with partial pivoting.
pub fn mahalanobis(sigma: &[Vec<f64>], t: &[f64]) -> f64 {
    let r = t.len();
    let mut a: Vec<Vec<f64>> = sigma
        .iter()
        .zip(t)
        .map(|(row, &ti)| {
            let mut v = row.clone();
            v.push(ti);
            v
        })
        .collect();
    for c in 0..r {
        let p = (c..r).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, p);
        for i in 0..r {
            if i != c {
                let f = a[i][c] / a[c][c];
                for j in c..=r {
                    a[i][j] -= f * a[c][j];
                }
            }
        }
    }
    (0..r).map(|i| t[i] * a[i][r] / a[i][i]).sum()
}

/// Relative closeness with a floor for exact zeros.
pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol * a.abs().max(b.abs())
}

/// Closeness up to `tol` times the larger of the values and `scale`, where
/// `scale` bounds how far rounding in the inputs can move the result.
pub fn sum_close(a: f64, b: f64, tol: f64, scale: f64) -> bool {
    a == b || (a - b).abs() <= tol * a.abs().max(b.abs()).max(scale)
}

/// Row bounds `Σ_j habs[i][j]` weighted like the row sums; the rounding in
/// `S_i · (i+1)^-γ` of any evaluation order is proportional to them.
fn abs_rows(habs: &[Vec<f64>], gamma: f64) -> Vec<f64> {
    weighted_rows(habs, gamma)
}

/// Sensitivity of `Σ_i w_i` to rounding in the rows.
pub fn sum_scale(habs: &[Vec<f64>], gamma: f64) -> f64 {
    abs_rows(habs, gamma).iter().sum()
}

/// Sensitivity of `Σ_i w_{a,i} w_{b,i}` to rounding in the rows, to first order.
pub fn product_scale(a: (&[Vec<f64>], &[Vec<f64>]), b: (&[Vec<f64>], &[Vec<f64>]), gamma: f64) -> f64 {
    let (wa, wb) = (weighted_rows(a.0, gamma), weighted_rows(b.0, gamma));
    let (ra, rb) = (abs_rows(a.1, gamma), abs_rows(b.1, gamma));
    (0..wa.len()).map(|i| ra[i] * wb[i].abs() + wa[i].abs() * rb[i]).sum()
}
