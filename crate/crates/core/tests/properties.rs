mod common;

use common::{h_matrix, rel_close, RefKernel};
use mmmd::baselines::{
    block_mmd_test_resolved, block_statistics, cross_mmd_test_resolved, cross_terms, linear_mmd_test_resolved,
    linear_terms, permutation_mmd_test_resolved,
};
use mmmd::statcore::{gamma_test_resolved, mmd_test_resolved, row_sums};
use mmmd::{compute_mmd_breakdown, compute_mmmmd, quad_mmd_statistic, PairedDataset, PermutationPlan, SampleMatrix};
use proptest::prelude::*;

fn bounded_kernel() -> impl Strategy<Value = RefKernel> {
    prop_oneof![
        (0.2f64..4.0).prop_map(RefKernel::Gaussian),
        (0.2f64..4.0).prop_map(RefKernel::Laplace),
    ]
}

fn any_kernel() -> impl Strategy<Value = RefKernel> {
    prop_oneof![bounded_kernel(), Just(RefKernel::Linear)]
}

fn dataset(min_n: usize) -> impl Strategy<Value = PairedDataset> {
    (min_n..=40usize, 1usize..=5, -1.5f64..1.5).prop_flat_map(|(n, d, shift)| {
        (
            proptest::collection::vec(-2.0f64..2.0, n * d),
            proptest::collection::vec(-2.0f64..2.0, n * d),
        )
            .prop_map(move |(x, y)| {
                let y = y.into_iter().map(|v| v + shift).collect();
                PairedDataset::new(SampleMatrix::new(x, d).unwrap(), SampleMatrix::new(y, d).unwrap()).unwrap()
            })
    })
}

/// Absolute tolerance scaled to the magnitude of the summed terms.
fn close_abs(a: f64, b: f64, scale: f64) -> bool {
    (a - b).abs() <= 1e-12 * (1.0 + scale)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn global_swap_leaves_statistic_unchanged(data in dataset(2), k in any_kernel()) {
        let k = k.resolved();
        let a = compute_mmd_breakdown(&data, &k);
        let b = compute_mmd_breakdown(&data.swapped(), &k);
        let scale = a.row_sums.iter().map(|s| s.abs()).sum::<f64>();
        prop_assert!(close_abs(a.t_n, b.t_n, scale));
        prop_assert!(close_abs(a.sigma_n, b.sigma_n, scale));
        if let (Some(x), Some(y)) = (a.eta_n, b.eta_n) {
            prop_assert!(rel_close(x, y, 1e-9) || close_abs(x, y, 0.0));
        }
    }

    #[test]
    fn within_pair_swap_negates_that_pair(data in dataset(3), k in any_kernel(), pick in any::<prop::sample::Index>()) {
        let p = pick.index(data.len());
        let h = h_matrix(&data, k);
        let before = row_sums(&data, &k.resolved());
        let after = row_sums(&data.swap_within_pair(p), &k.resolved());
        let h_scale = h.iter().flatten().map(|v| v.abs()).sum::<f64>();
        for i in 1..data.len() {
            let want = if i == p {
                -before[i - 1]
            } else if i > p {
                before[i - 1] - 2.0 * h[i][p]
            } else {
                before[i - 1]
            };
            prop_assert!(close_abs(after[i - 1], want, h_scale));
        }
    }

    #[test]
    fn bounded_kernels_respect_scale_bound(data in dataset(2), k in bounded_kernel()) {
        let b = compute_mmd_breakdown(&data, &k.resolved());
        prop_assert!(b.t_n.abs() <= 4.0);
        prop_assert!(b.sigma_n * b.sigma_n <= 16.0);
        prop_assert_eq!(b.eta_n.is_some(), b.sigma_n > 0.0);
    }

    #[test]
    fn outcomes_respect_decision_rule(data in dataset(8), k in any_kernel(), alpha in 0.01f64..0.5, gamma in 0.0f64..=1.0) {
        let k = k.resolved();
        let outs = [
            mmd_test_resolved(&data, &k, alpha).unwrap(),
            gamma_test_resolved(&data, &k, gamma, alpha).unwrap(),
            mmmd::multikernel::mmmmd_test_resolved(&data, &[k], alpha).unwrap(),
            permutation_mmd_test_resolved(&data, &k, &PermutationPlan::new(49, 3).unwrap(), alpha).unwrap(),
            block_mmd_test_resolved(&data, &k, 4, alpha).unwrap(),
            linear_mmd_test_resolved(&data, &k, alpha).unwrap(),
            cross_mmd_test_resolved(&data, &k, alpha).unwrap(),
        ];
        for o in outs {
            let p = o.p_value.unwrap();
            prop_assert!((0.0..=1.0).contains(&p));
            if o.degenerate {
                prop_assert!(!o.reject);
            } else {
                prop_assert_eq!(o.reject, o.statistic > o.threshold);
            }
        }
    }

    #[test]
    fn kernel_order_does_not_change_mahalanobis(data in dataset(6), ks in proptest::collection::vec(any_kernel(), 2..=3), rot in 1usize..3) {
        let resolved: Vec<_> = ks.iter().map(|k| k.resolved()).collect();
        let mut rotated = resolved.clone();
        rotated.rotate_left(rot % resolved.len());
        let a = compute_mmmmd(&data, &resolved).unwrap();
        let b = compute_mmmmd(&data, &rotated).unwrap();
        let r = resolved.len();
        let shift = rot % r;
        for i in 0..r {
            prop_assert_eq!(a.t_vec[(i + shift) % r], b.t_vec[i]);
            for j in 0..r {
                prop_assert_eq!(a.sigma_mat[(i + shift) % r][(j + shift) % r], b.sigma_mat[i][j]);
            }
        }
        match (a.mahalanobis, b.mahalanobis) {
            (Some(x), Some(y)) => prop_assert!(rel_close(x, y, 1e-8), "{} vs {}", x, y),
            (x, y) => prop_assert_eq!(x.is_some(), y.is_some()),
        }
    }

    #[test]
    fn sigma_matrix_is_positive_semidefinite(
        data in dataset(6),
        ks in proptest::collection::vec(any_kernel(), 1..=4),
        v in proptest::collection::vec(-1.0f64..1.0, 4),
    ) {
        let resolved: Vec<_> = ks.iter().map(|k| k.resolved()).collect();
        let res = compute_mmmmd(&data, &resolved).unwrap();
        let r = res.r;
        let trace: f64 = (0..r).map(|a| res.sigma_mat[a][a]).sum();
        let norm2: f64 = v[..r].iter().map(|x| x * x).sum();
        let mut q = 0.0;
        for a in 0..r {
            for b in 0..r {
                prop_assert_eq!(res.sigma_mat[a][b], res.sigma_mat[b][a]);
                q += v[a] * res.sigma_mat[a][b] * v[b];
            }
        }
        prop_assert!(q >= -1e-10 * trace * norm2);
    }

    #[test]
    fn duplicated_kernel_is_degenerate(data in dataset(6), k in any_kernel()) {
        let k = k.resolved();
        prop_assert!(compute_mmmmd(&data, &[k, k]).unwrap().is_degenerate());
    }

    #[test]
    fn baselines_are_invariant_under_global_swap(data in dataset(8), k in any_kernel()) {
        let rk = k.resolved();
        let sw = data.swapped();
        let h_scale = h_matrix(&data, k).iter().flatten().map(|v| v.abs()).sum::<f64>();
        prop_assert!(close_abs(quad_mmd_statistic(&data, &rk), quad_mmd_statistic(&sw, &rk), h_scale));
        for (a, b) in block_statistics(&data, &rk, 4).unwrap().iter().zip(block_statistics(&sw, &rk, 4).unwrap()) {
            prop_assert!(close_abs(*a, b, h_scale));
        }
        for (a, b) in linear_terms(&data, &rk).iter().zip(linear_terms(&sw, &rk)) {
            prop_assert!(close_abs(*a, b, h_scale));
        }
        for (a, b) in cross_terms(&data, &rk).iter().zip(cross_terms(&sw, &rk)) {
            prop_assert!(close_abs(*a, b, h_scale));
        }
    }

    #[test]
    fn single_block_reproduces_quadratic_statistic(data in dataset(2), k in any_kernel()) {
        let k = k.resolved();
        let n = data.len() as f64;
        let whole = block_statistics(&data, &k, data.len()).unwrap();
        prop_assert_eq!(whole.len(), 1);
        let q = quad_mmd_statistic(&data, &k);
        prop_assert!(rel_close(whole[0] * n * (n - 1.0) / (n * n), q, 1e-12));
    }

    #[test]
    fn pre_shuffle_is_seed_deterministic(data in dataset(4), seed in any::<u64>()) {
        let a = data.shuffle_pairs(seed);
        let b = data.shuffle_pairs(seed);
        prop_assert_eq!(&a, &b);
        let mut rows_a: Vec<Vec<f64>> = a.x().rows().map(<[f64]>::to_vec).collect();
        let mut rows: Vec<Vec<f64>> = data.x().rows().map(<[f64]>::to_vec).collect();
        rows_a.sort_by(|p, q| p.partial_cmp(q).unwrap());
        rows.sort_by(|p, q| p.partial_cmp(q).unwrap());
        prop_assert_eq!(rows_a, rows);
    }
}

#[test]
fn pair_order_changes_the_statistic() {
    let data = mmmd::generate(&mmmd::GeneratorSpec::new(
        mmmd::GeneratorVariant::GaussianMeanShift { d: 3, j: 1, eps: 0.5 },
        50,
        8,
    ))
    .unwrap();
    let k = mmmd::ResolvedKernel::gaussian(1.0).unwrap();
    let a = compute_mmd_breakdown(&data, &k);
    let b = compute_mmd_breakdown(&data.shuffle_pairs(1), &k);
    assert_ne!(a.eta_n, b.eta_n);
    // The quadratic statistic ignores pair order.
    let qa = quad_mmd_statistic(&data, &k);
    let qb = quad_mmd_statistic(&data.shuffle_pairs(1), &k);
    assert!(rel_close(qa, qb, 1e-12));
}
