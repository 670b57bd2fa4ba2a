//! Randomized invariants over the alignment and reparameterization helpers.

use latentnet::inference::bh_adjust;
use latentnet::likelihood::theta;
use latentnet::linalg::{center_reparam, dist2, procrustes_align};
use latentnet::state::LatentState;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn state_strategy(n: usize, k: usize) -> impl Strategy<Value = LatentState<f64>> {
    (
        proptest::collection::vec(-2.0f64..2.0, n * k),
        proptest::collection::vec(-2.0f64..2.0, n),
    )
        .prop_map(move |(z, a)| {
            LatentState::new(DMatrix::from_vec(n, k, z), DVector::from_vec(a))
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dist2_is_symmetric(a in state_strategy(7, 2), b in state_strategy(7, 2)) {
        let d_ab = dist2(&a, &b).unwrap();
        let d_ba = dist2(&b, &a).unwrap();
        prop_assert!((d_ab - d_ba).abs() <= 1e-9 * (1.0 + d_ab.abs()));
    }

    #[test]
    fn dist2_vanishes_under_rotation(a in state_strategy(7, 2), angle in 0.0f64..6.28) {
        let (s, c) = angle.sin_cos();
        let g = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        let rotated = LatentState::new(&a.z * &g, a.alpha.clone());
        prop_assert!(dist2(&a, &rotated).unwrap() <= 1e-9 * (1.0 + a.z.norm_squared()));
    }

    #[test]
    fn centering_preserves_offdiagonal_theta(y in state_strategy(6, 2)) {
        let centered = center_reparam(&y);
        prop_assert!(centered.centering_violation() <= 1e-12);
        let t0 = theta(&y);
        let t1 = theta(&centered);
        for i in 0..6 {
            for j in 0..6 {
                if i != j {
                    prop_assert!((t0[(i, j)] - t1[(i, j)]).abs() <= 1e-9);
                }
            }
        }
    }

    #[test]
    fn procrustes_never_beats_grid_point(
        z in proptest::collection::vec(-2.0f64..2.0, 12),
        angle in 0.0f64..6.28,
    ) {
        let z_hat = DMatrix::from_vec(6, 2, z.clone());
        let z_ref = DMatrix::from_fn(6, 2, |i, c| z[(i + c * 6 + 5) % 12] + 0.1);
        let res = procrustes_align(&z_hat, &z_ref).unwrap();
        let (s, c) = angle.sin_cos();
        let g = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        let at_angle = (&z_hat - &z_ref * g).norm();
        prop_assert!(res.residual <= at_angle + 1e-9);
    }

    #[test]
    fn bh_rejections_form_prefix_of_sorted_pvalues(
        mut ps in proptest::collection::vec(0.0f64..1.0, 1..40),
    ) {
        let rejected = bh_adjust(&ps, 0.1);
        let mut pairs: Vec<(f64, bool)> =
            ps.drain(..).zip(rejected.into_iter()).collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut seen_accept = false;
        for (_, rej) in pairs {
            if !rej {
                seen_accept = true;
            } else {
                prop_assert!(!seen_accept);
            }
        }
    }
}
