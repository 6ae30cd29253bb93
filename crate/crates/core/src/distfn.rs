//! Special functions used for calibration and validation.
//!
//! Everything here is built from `exp`, `ln` and `sqrt` only, so thresholds and
//! p-values do not depend on the platform libm beyond those primitives.
//!
//! * Normal CDF: `erf` power series with positive terms for `|x| < 2.5·√2`,
//!   Lentz continued fraction for `erfc` beyond. Absolute error is at the
//!   `1e-16` level and the upper tail keeps relative accuracy.
//! * Normal quantile: Abramowitz–Stegun 26.2.23 start, Halley refinement.
//! * Chi-squared: regularized incomplete gamma (series / continued fraction)
//!   with exact `ln Γ(r/2)` for integer `r`; quantile by safeguarded Newton
//!   from the Wilson–Hilferty start.

use std::f64::consts::PI;

use crate::data::compensated_sum;
use crate::error::{Error, Result};

const FRAC_2_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;
const SQRT_2: f64 = std::f64::consts::SQRT_2;
const TINY: f64 = 1e-300;

/// Switch point (in `x/√2` units) between the series and the continued fraction.
const ERF_SERIES_LIMIT: f64 = 2.5;

pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// `erf(t)` for `0 <= t < ERF_SERIES_LIMIT`.
fn erf_series(t: f64) -> f64 {
    let t2 = t * t;
    let mut term = t;
    let mut sum = t;
    let mut k = 0.0;
    while term > sum * 1e-17 {
        k += 1.0;
        term *= 2.0 * t2 / (2.0 * k + 1.0);
        sum += term;
    }
    FRAC_2_SQRT_PI * (-t2).exp() * sum
}

/// `erfc(t)` for `t >= ERF_SERIES_LIMIT`.
fn erfc_continued_fraction(t: f64) -> f64 {
    // erfc(t) = exp(-t²)/√π · 1/(t + (1/2)/(t + 1/(t + (3/2)/(t + ...))))
    let mut f = t;
    let mut c = t;
    let mut d = 0.0;
    for k in 1..500 {
        let a = k as f64 * 0.5;
        d = t + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = t + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-t * t).exp() / (PI.sqrt() * f)
}

/// Upper tail `1 - Φ(x)` for `x >= 0`.
fn upper_tail_nonneg(x: f64) -> f64 {
    let t = x / SQRT_2;
    if t < ERF_SERIES_LIMIT {
        0.5 * (1.0 - erf_series(t))
    } else {
        0.5 * erfc_continued_fraction(t)
    }
}

/// Standard normal CDF `Φ(x)`.
pub fn std_normal_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x >= 0.0 {
        1.0 - upper_tail_nonneg(x)
    } else {
        upper_tail_nonneg(-x)
    }
}

/// Standard normal survival function `1 - Φ(x)`, accurate in the upper tail.
pub fn std_normal_sf(x: f64) -> f64 {
    std_normal_cdf(-x)
}

/// Standard normal quantile `Φ⁻¹(p)`.
pub fn std_normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidProbability(p));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    // Solve in the lower tail, where Φ is computed without cancellation.
    let (q, sign) = if p < 0.5 { (p, 1.0) } else { (1.0 - p, -1.0) };
    let t = (-2.0 * q.ln()).sqrt();
    let mut x = -(t
        - (2.515517 + 0.802853 * t + 0.010328 * t * t)
            / (1.0 + 1.432788 * t + 0.189269 * t * t + 0.001308 * t * t * t));
    for _ in 0..20 {
        let pdf = std_normal_pdf(x);
        if pdf <= 0.0 {
            break;
        }
        let u = (std_normal_cdf(x) - q) / pdf;
        let step = u / (1.0 + 0.5 * x * u);
        x -= step;
        if step.abs() <= 1e-15 * (1.0 + x.abs()) {
            break;
        }
    }
    Ok(sign * x)
}

/// `ln Γ(r/2)` for a positive integer `r`, by exact recurrence.
fn ln_gamma_half(r: u32) -> f64 {
    if r.is_multiple_of(2) {
        compensated_sum((1..r / 2).map(|k| (k as f64).ln()))
    } else {
        0.5 * PI.ln() + compensated_sum((0..(r - 1) / 2).map(|k| (k as f64 + 0.5).ln()))
    }
}

/// Regularized incomplete gamma pair `(P(a, x), Q(a, x))` with `a = r/2`.
fn incomplete_gamma_half(r: u32, x: f64) -> (f64, f64) {
    if x <= 0.0 {
        return (0.0, 1.0);
    }
    if x.is_infinite() {
        return (1.0, 0.0);
    }
    let a = r as f64 * 0.5;
    let log_prefactor = -x + a * x.ln() - ln_gamma_half(r);
    if x < a + 1.0 {
        let mut ap = a;
        let mut del = 1.0 / a;
        let mut sum = del;
        for _ in 0..10_000 {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if del.abs() < sum.abs() * 1e-17 {
                break;
            }
        }
        let p = (sum * log_prefactor.exp()).min(1.0);
        (p, 1.0 - p)
    } else {
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..10_000 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < TINY {
                d = TINY;
            }
            c = b + an / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        let q = (log_prefactor.exp() * h).min(1.0);
        (1.0 - q, q)
    }
}

fn check_dof(r: u32) -> Result<()> {
    if r == 0 {
        return Err(Error::InvalidParameter("chi-squared degrees of freedom must be >= 1".into()));
    }
    Ok(())
}

/// Chi-squared CDF with `r` degrees of freedom.
pub fn chi2_cdf(r: u32, x: f64) -> Result<f64> {
    check_dof(r)?;
    Ok(incomplete_gamma_half(r, 0.5 * x).0)
}

/// Chi-squared survival function `1 - F(x)`, accurate in the upper tail.
pub fn chi2_sf(r: u32, x: f64) -> Result<f64> {
    check_dof(r)?;
    Ok(incomplete_gamma_half(r, 0.5 * x).1)
}

fn chi2_pdf(r: u32, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let a = r as f64 * 0.5;
    ((a - 1.0) * x.ln() - 0.5 * x - a * std::f64::consts::LN_2 - ln_gamma_half(r)).exp()
}

/// Chi-squared quantile: the `x` with `F_r(x) = p`.
pub fn chi2_quantile(r: u32, p: f64) -> Result<f64> {
    check_dof(r)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidProbability(p));
    }
    let rf = r as f64;
    let a = 0.5 * rf;
    let z = std_normal_quantile(p)?;
    let v = 2.0 / (9.0 * rf);
    let mut x = rf * (1.0 - v + z * v.sqrt()).powi(3);
    if !(x > 0.0) {
        // Small-x expansion P(a, x/2) ≈ (x/2)^a / Γ(a + 1).
        let ln_g = ln_gamma_half(r) + a.ln();
        x = 2.0 * ((p.ln() + ln_g) / a).exp();
    }
    // Residual measured on whichever tail is the smaller probability.
    let upper = p > 0.5;
    let target = if upper { 1.0 - p } else { p };
    let residual = |x: f64| {
        let (lo, hi) = incomplete_gamma_half(r, 0.5 * x);
        if upper {
            target - hi
        } else {
            lo - target
        }
    };
    let (mut lo, mut hi) = (0.0_f64, f64::INFINITY);
    for _ in 0..200 {
        let f = residual(x);
        if f == 0.0 {
            break;
        }
        if f > 0.0 {
            hi = hi.min(x);
        } else {
            lo = lo.max(x);
        }
        let pdf = chi2_pdf(r, x);
        let mut next = if pdf > 0.0 { x - f / pdf } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = if hi.is_finite() { 0.5 * (lo + hi) } else { 2.0 * x.max(lo) + 1.0 };
        }
        if (next - x).abs() <= 1e-15 * x.abs() {
            x = next;
            break;
        }
        x = next;
    }
    Ok(x)
}

/// A sorted, finite sample.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalSample {
    values: Vec<f64>,
}

impl EmpiricalSample {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        values.sort_by(f64::total_cmp);
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// One-sample Kolmogorov–Smirnov distance `sup_x |F_m(x) - F(x)|`.
pub fn ks_distance<F: Fn(f64) -> f64>(sample: &EmpiricalSample, cdf: F) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::TooFewRows { needed: 1, found: 0 });
    }
    let m = sample.len() as f64;
    let mut sup = 0.0_f64;
    for (i, &x) in sample.values.iter().enumerate() {
        let f = cdf(x);
        let above = ((i + 1) as f64 / m - f).abs();
        let below = (i as f64 / m - f).abs();
        sup = sup.max(above).max(below);
    }
    Ok(sup.min(1.0))
}

pub fn mean(values: &[f64]) -> f64 {
    compensated_sum(values.iter().copied()) / values.len() as f64
}

/// Unbiased sample variance; zero for fewer than two values.
pub fn sample_variance(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    compensated_sum(values.iter().map(|v| (v - m) * (v - m))) / (values.len() - 1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

    #[test]
    fn cdf_known_points() {
        assert_eq!(std_normal_cdf(0.0), 0.5);
        assert_abs_diff_eq!(std_normal_cdf(1.959964), 0.975, epsilon = 1e-6);
        assert_abs_diff_eq!(std_normal_sf(1.0), 0.15865525393145705, epsilon = 1e-14);
    }

    #[test]
    fn cdf_matches_statrs_across_switch_point() {
        let reference = Normal::standard();
        let mut x = -9.0;
        while x <= 9.0 {
            assert_abs_diff_eq!(std_normal_cdf(x), reference.cdf(x), epsilon = 1e-10);
            x += 0.0137;
        }
    }

    #[test]
    fn far_tail_keeps_relative_accuracy() {
        // 1 - Φ(10) = 7.6198530241605e-24
        let q = std_normal_sf(10.0);
        assert!((q / 7.619853024160527e-24 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn quantile_known_points() {
        assert_eq!(std_normal_quantile(0.5).unwrap(), 0.0);
        assert_abs_diff_eq!(std_normal_quantile(0.95).unwrap(), 1.644854, epsilon = 1e-6);
        assert_abs_diff_eq!(
            std_normal_quantile(0.975).unwrap(),
            1.959963984540054,
            epsilon = 1e-12
        );
        assert!(std_normal_quantile(0.0).is_err());
        assert!(std_normal_quantile(1.0).is_err());
        assert!(std_normal_quantile(f64::NAN).is_err());
    }

    #[test]
    fn chi2_known_points() {
        assert_abs_diff_eq!(chi2_quantile(1, 0.95).unwrap(), 3.841459, epsilon = 1e-5);
        assert_abs_diff_eq!(
            chi2_quantile(2, 0.5).unwrap(),
            2.0 * std::f64::consts::LN_2,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(chi2_quantile(3, 0.95).unwrap(), 7.814727903251178, epsilon = 1e-8);
        assert!(chi2_quantile(0, 0.5).is_err());
        assert!(chi2_quantile(2, 1.0).is_err());
    }

    #[test]
    fn chi2_matches_statrs() {
        for r in [1u32, 2, 3, 5, 10, 31, 100] {
            let reference = ChiSquared::new(r as f64).unwrap();
            for &p in &[1e-6, 0.01, 0.05, 0.3, 0.5, 0.8, 0.95, 0.999, 1.0 - 1e-9] {
                let q = chi2_quantile(r, p).unwrap();
                // The reference CDF is accurate where its inverse is not.
                let back = reference.cdf(q);
                assert!((back - p).abs() <= 1e-10 * p.min(1.0 - p), "r={r} p={p}: cdf({q}) = {back}");
                assert_abs_diff_eq!(chi2_cdf(r, q).unwrap(), p, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn chi1_is_squared_normal() {
        for &p in &[0.01, 0.1, 0.5, 0.9, 0.95, 0.999] {
            let z = std_normal_quantile((1.0 + p) / 2.0).unwrap();
            assert_abs_diff_eq!(chi2_quantile(1, p).unwrap(), z * z, epsilon = 1e-7);
        }
    }

    #[test]
    fn ks_constructions() {
        let m = 50;
        let at_quantiles: Vec<f64> = (1..=m)
            .map(|i| std_normal_quantile((i as f64 - 0.5) / m as f64).unwrap())
            .collect();
        let s = EmpiricalSample::new(at_quantiles).unwrap();
        assert_abs_diff_eq!(ks_distance(&s, std_normal_cdf).unwrap(), 0.5 / m as f64, epsilon = 1e-9);

        let zero = EmpiricalSample::new(vec![0.0]).unwrap();
        assert_eq!(ks_distance(&zero, std_normal_cdf).unwrap(), 0.5);

        let empty = EmpiricalSample::new(vec![]).unwrap();
        assert!(ks_distance(&empty, std_normal_cdf).is_err());
    }

    #[test]
    fn moments() {
        let v = [1.0, 2.0, 4.0];
        assert_abs_diff_eq!(mean(&v), 7.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(sample_variance(&v), 7.0 / 3.0, epsilon = 1e-15);
        assert_eq!(sample_variance(&[3.0]), 0.0);
    }

    proptest! {
        #[test]
        fn cdf_symmetry(x in -12.0f64..12.0) {
            prop_assert!((std_normal_cdf(-x) - (1.0 - std_normal_cdf(x))).abs() < 1e-15);
        }

        #[test]
        fn quantile_round_trip(p in 1e-12f64..(1.0 - 1e-12)) {
            let x = std_normal_quantile(p).unwrap();
            prop_assert!((std_normal_cdf(x) - p).abs() <= 1e-10);
        }

        #[test]
        fn chi2_monotone_in_p(r in 1u32..40, p in 0.001f64..0.998) {
            let a = chi2_quantile(r, p).unwrap();
            let b = chi2_quantile(r, p + 0.001).unwrap();
            prop_assert!(b > a);
        }

        #[test]
        fn ks_in_unit_interval(v in proptest::collection::vec(-5.0f64..5.0, 1..40)) {
            let d = ks_distance(&EmpiricalSample::new(v).unwrap(), std_normal_cdf).unwrap();
            prop_assert!((0.0..=1.0).contains(&d));
        }
    }
}
