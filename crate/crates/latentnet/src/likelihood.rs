//! Objective `L(Y)`, its gradient, per-node losses, the Θ map, and the
//! per-node information blocks Σ_i.

use crate::error::{Error, Result};
use crate::family::EdgeFamily;
use crate::network::Network;
use crate::scalar::Scalar;
use crate::state::LatentState;
use nalgebra::{DMatrix, DVector};

/// `Θ = ZZᵀ + α1ᵀ + 1αᵀ`, including the (never consumed) diagonal.
pub fn theta<T: Scalar>(y: &LatentState<T>) -> DMatrix<T> {
    let n = y.n();
    let mut t = &y.z * y.z.transpose();
    for i in 0..n {
        for j in 0..n {
            t[(i, j)] += y.alpha[i] + y.alpha[j];
        }
    }
    t
}

/// Negative log-likelihood `L(Y) = −Σ_{i<j} ℓ(Θ_ij; A_ij)`.
pub fn neg_log_lik<T: Scalar>(y: &LatentState<T>, a: &Network<T>, family: EdgeFamily) -> T {
    let th = theta(y);
    neg_log_lik_with_theta(&th, a, family)
}

pub(crate) fn neg_log_lik_with_theta<T: Scalar>(
    th: &DMatrix<T>,
    a: &Network<T>,
    family: EdgeFamily,
) -> T {
    neg_varpart_with_theta(th, a, family) + neg_const_term(a, family)
}

/// Σ_{i<j} of the θ-dependent loss part; the optimizer's hot path, since the
/// θ-free normalization cancels in every comparison it makes.
pub(crate) fn neg_varpart_with_theta<T: Scalar>(
    th: &DMatrix<T>,
    a: &Network<T>,
    family: EdgeFamily,
) -> T {
    let n = a.n();
    let mut sum = T::zero();
    for i in 0..n {
        for j in (i + 1)..n {
            sum -= family.log_density_varpart(th[(i, j)], a.weight(i, j));
        }
    }
    sum
}

/// Σ_{i<j} of the θ-free normalization part of the loss.
pub(crate) fn neg_const_term<T: Scalar>(a: &Network<T>, family: EdgeFamily) -> T {
    let n = a.n();
    let mut sum = T::zero();
    for i in 0..n {
        for j in (i + 1)..n {
            sum -= family.log_density_const(a.weight(i, j));
        }
    }
    sum
}

/// Analytic gradient `(∇_Z L, ∇_α L)` of [`neg_log_lik`].
///
/// Organized as one pass computing the symmetric score matrix
/// `G_ij = ℓ′(Θ_ij; A_ij)` with zero diagonal, then `∇_Z L = −GZ` and
/// `∇_α L = −G1`.
pub fn gradient<T: Scalar>(
    y: &LatentState<T>,
    a: &Network<T>,
    family: EdgeFamily,
) -> (DMatrix<T>, DVector<T>) {
    let th = theta(y);
    gradient_with_theta(y, &th, a, family)
}

pub(crate) fn gradient_with_theta<T: Scalar>(
    y: &LatentState<T>,
    th: &DMatrix<T>,
    a: &Network<T>,
    family: EdgeFamily,
) -> (DMatrix<T>, DVector<T>) {
    let n = y.n();
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let s = family.d1_unchecked(th[(i, j)], a.weight(i, j));
            g[(i, j)] = s;
            g[(j, i)] = s;
        }
    }
    let grad_z = -(&g * &y.z);
    let ones = DVector::from_element(n, T::one());
    let grad_alpha = -(&g * ones);
    (grad_z, grad_alpha)
}

/// Gradient stacked as an `n×(k+1)` matrix `[∇_Z L, ∇_α L]`.
pub fn gradient_combined<T: Scalar>(
    y: &LatentState<T>,
    a: &Network<T>,
    family: EdgeFamily,
) -> DMatrix<T> {
    let (gz, ga) = gradient(y, a, family);
    stack_grad(&gz, &ga)
}

pub(crate) fn stack_grad<T: Scalar>(gz: &DMatrix<T>, ga: &DVector<T>) -> DMatrix<T> {
    let (n, k) = gz.shape();
    let mut out = DMatrix::zeros(n, k + 1);
    out.view_mut((0, 0), (n, k)).copy_from(gz);
    out.set_column(k, ga);
    out
}

/// Per-node loss `L_i(Y) = −Σ_{j≠i} ℓ(Θ_ij; A_ij)`.
pub fn row_neg_log_lik<T: Scalar>(
    y: &LatentState<T>,
    a: &Network<T>,
    family: EdgeFamily,
    i: usize,
) -> Result<T> {
    let n = y.n();
    if i >= n {
        return Err(Error::IndexOutOfRange { index: i, n });
    }
    let mut sum = T::zero();
    for j in 0..n {
        if j == i {
            continue;
        }
        let mut th = y.alpha[i] + y.alpha[j];
        for c in 0..y.k() {
            th += y.z[(i, c)] * y.z[(j, c)];
        }
        sum -= family.log_density_unchecked(th, a.weight(i, j));
    }
    Ok(sum)
}

/// Maximum absolute entry of the stacked gradient (the stopping statistic).
pub fn max_abs_score<T: Scalar>(grad: &DMatrix<T>) -> T {
    let mut m = T::zero();
    for &v in grad.iter() {
        // NaN propagates so a non-finite gradient never reads as converged
        if v != v {
            return crate::scalar::cast(f64::NAN);
        }
        m = m.max(v.abs());
    }
    m
}

/// Per-node information block
/// `Σ_i(Y) = −Σ_{j≠i} ℓ″(Θ_ij; A_ij) w_j w_jᵀ` with `w_j = [z_jᵀ, 1]ᵀ`.
pub fn sigma_i<T: Scalar>(
    y: &LatentState<T>,
    a: &Network<T>,
    family: EdgeFamily,
    i: usize,
) -> Result<DMatrix<T>> {
    let (n, k) = (y.n(), y.k());
    if i >= n {
        return Err(Error::IndexOutOfRange { index: i, n });
    }
    // curvature is data-free for the built-in families; the network stays in
    // the signature so non-canonical links can slot in later
    let _ = a;
    let mut sigma = DMatrix::zeros(k + 1, k + 1);
    let mut w = DVector::zeros(k + 1);
    for j in 0..n {
        if j == i {
            continue;
        }
        let mut th = y.alpha[i] + y.alpha[j];
        for c in 0..k {
            th += y.z[(i, c)] * y.z[(j, c)];
        }
        let curv = -family.d2_unchecked(th);
        for c in 0..k {
            w[c] = y.z[(j, c)];
        }
        w[k] = T::one();
        for r in 0..=k {
            for c in 0..=k {
                sigma[(r, c)] += curv * w[r] * w[c];
            }
        }
    }
    Ok(sigma)
}

/// Block-diagonal assembly of [`sigma_i`] over an index list.
#[derive(Debug, Clone)]
pub struct SigmaBlock<T: Scalar> {
    pub indices: Vec<usize>,
    pub block: DMatrix<T>,
}

pub fn sigma_block<T: Scalar>(
    y: &LatentState<T>,
    a: &Network<T>,
    family: EdgeFamily,
    indices: &[usize],
) -> Result<SigmaBlock<T>> {
    let kp1 = y.k() + 1;
    let mut seen = std::collections::HashSet::new();
    for &i in indices {
        if !seen.insert(i) {
            return Err(Error::DuplicateIndex(i));
        }
    }
    let m = indices.len();
    let mut block = DMatrix::zeros(m * kp1, m * kp1);
    for (b, &i) in indices.iter().enumerate() {
        let s = sigma_i(y, a, family, i)?;
        block
            .view_mut((b * kp1, b * kp1), (kp1, kp1))
            .copy_from(&s);
    }
    Ok(SigmaBlock {
        indices: indices.to_vec(),
        block,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{dmatrix, dvector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_instance(
        n: usize,
        k: usize,
        family: EdgeFamily,
        seed: u64,
    ) -> (LatentState<f64>, Network<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = DMatrix::from_fn(n, k, |_, _| rng.gen_range(-0.8..0.8));
        let alpha = DVector::from_fn(n, |_, _| rng.gen_range(-0.5..0.5));
        let mut w = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                let x = match family {
                    EdgeFamily::Poisson => rng.gen_range(0..6) as f64,
                    EdgeFamily::Bernoulli => rng.gen_range(0..2) as f64,
                    EdgeFamily::Gaussian => rng.gen_range(-2.0..2.0),
                };
                w[(i, j)] = x;
                w[(j, i)] = x;
            }
        }
        let labels = (0..n).map(|i| format!("v{i}")).collect();
        (
            LatentState::new(z, alpha),
            Network::new(w, labels).unwrap(),
        )
    }

    #[test]
    fn theta_reference_values() {
        let y = LatentState::<f64>::zeros(3, 2);
        assert_relative_eq!(theta(&y), DMatrix::zeros(3, 3));

        let y = LatentState::new(dmatrix![1.0; 2.0], dvector![0.1, -0.1]);
        assert_relative_eq!(theta(&y)[(0, 1)], 2.0, epsilon = 1e-15);
    }

    #[test]
    fn neg_log_lik_reference_values() {
        // n=2 Gaussian, Θ₁₂ = A₁₂ = 0 → log√(2π).
        let y = LatentState::<f64>::zeros(2, 1);
        let a = Network::new(DMatrix::zeros(2, 2), vec!["a".into(), "b".into()]).unwrap();
        assert_relative_eq!(
            neg_log_lik(&y, &a, EdgeFamily::Gaussian),
            (2.0 * std::f64::consts::PI).sqrt().ln(),
            epsilon = 1e-12
        );

        // n=3 Poisson, Y=0, off-diagonal A all 1 → 3.
        let y = LatentState::<f64>::zeros(3, 1);
        let mut w = DMatrix::from_element(3, 3, 1.0);
        w.fill_diagonal(0.0);
        let a = Network::new(w, vec!["a".into(), "b".into(), "c".into()]).unwrap();
        assert_relative_eq!(neg_log_lik(&y, &a, EdgeFamily::Poisson), 3.0, epsilon = 1e-12);
    }

    #[test]
    fn loss_invariant_under_rotation() {
        let (y, a) = random_instance(6, 2, EdgeFamily::Poisson, 5);
        let angle: f64 = 0.9;
        let q = dmatrix![angle.cos(), -angle.sin(); angle.sin(), angle.cos()];
        let rotated = LatentState::new(&y.z * &q, y.alpha.clone());
        assert_relative_eq!(
            neg_log_lik(&y, &a, EdgeFamily::Poisson),
            neg_log_lik(&rotated, &a, EdgeFamily::Poisson),
            max_relative = 1e-9
        );
    }

    #[test]
    fn gradient_zero_at_gaussian_fit() {
        // Gaussian with A_ij = Θ_ij → zero gradient.
        let (y, _) = random_instance(5, 2, EdgeFamily::Gaussian, 7);
        let th = theta(&y);
        let mut w = th.clone();
        w.fill_diagonal(0.0);
        let w = (&w + w.transpose()) * 0.5;
        let labels = (0..5).map(|i| format!("v{i}")).collect();
        let a = Network::new(w, labels).unwrap();
        let g = gradient_combined(&y, &a, EdgeFamily::Gaussian);
        assert!(max_abs_score(&g) < 1e-12);
    }

    /// Central finite-difference oracle for the gradient.
    pub fn fd_gradient(
        y: &LatentState<f64>,
        a: &Network<f64>,
        family: EdgeFamily,
        h: f64,
    ) -> DMatrix<f64> {
        let (n, k) = (y.n(), y.k());
        let mut out = DMatrix::zeros(n, k + 1);
        for i in 0..n {
            for c in 0..=k {
                let mut yp = y.clone();
                let mut ym = y.clone();
                if c < k {
                    yp.z[(i, c)] += h;
                    ym.z[(i, c)] -= h;
                } else {
                    yp.alpha[i] += h;
                    ym.alpha[i] -= h;
                }
                out[(i, c)] =
                    (neg_log_lik(&yp, a, family) - neg_log_lik(&ym, a, family)) / (2.0 * h);
            }
        }
        out
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for (seed, family) in [
            (1, EdgeFamily::Poisson),
            (2, EdgeFamily::Bernoulli),
            (3, EdgeFamily::Gaussian),
        ] {
            let (y, a) = random_instance(5, 2, family, seed);
            let g = gradient_combined(&y, &a, family);
            let fd = fd_gradient(&y, &a, family, 1e-5);
            for (gv, fv) in g.iter().zip(fd.iter()) {
                assert!(
                    (gv - fv).abs() <= 1e-6 * (1.0 + gv.abs()),
                    "{family}: {gv} vs {fv}"
                );
            }
        }
    }

    #[test]
    fn alpha_gradient_sum_identity() {
        let (y, a) = random_instance(6, 2, EdgeFamily::Poisson, 11);
        let th = theta(&y);
        let (_, ga) = gradient(&y, &a, EdgeFamily::Poisson);
        let mut pair_sum = 0.0;
        for i in 0..6 {
            for j in (i + 1)..6 {
                pair_sum += EdgeFamily::Poisson.d1_unchecked(th[(i, j)], a.weight(i, j));
            }
        }
        assert_relative_eq!(ga.sum(), -2.0 * pair_sum, max_relative = 1e-10);
    }

    #[test]
    fn row_loss_identities() {
        let (y, a) = random_instance(2, 1, EdgeFamily::Gaussian, 13);
        assert_relative_eq!(
            row_neg_log_lik(&y, &a, EdgeFamily::Gaussian, 0).unwrap(),
            neg_log_lik(&y, &a, EdgeFamily::Gaussian),
            max_relative = 1e-12
        );

        let (y, a) = random_instance(7, 2, EdgeFamily::Poisson, 17);
        let total: f64 = (0..7)
            .map(|i| row_neg_log_lik(&y, &a, EdgeFamily::Poisson, i).unwrap())
            .sum();
        assert_relative_eq!(
            total,
            2.0 * neg_log_lik(&y, &a, EdgeFamily::Poisson),
            max_relative = 1e-10
        );
        assert!(row_neg_log_lik(&y, &a, EdgeFamily::Poisson, 7).is_err());
    }

    #[test]
    fn row_loss_gradient_matches_full_row() {
        let (y, a) = random_instance(6, 2, EdgeFamily::Bernoulli, 19);
        let g = gradient_combined(&y, &a, EdgeFamily::Bernoulli);
        let h = 1e-6;
        let i = 2;
        for c in 0..=y.k() {
            let mut yp = y.clone();
            let mut ym = y.clone();
            if c < y.k() {
                yp.z[(i, c)] += h;
                ym.z[(i, c)] -= h;
            } else {
                yp.alpha[i] += h;
                ym.alpha[i] -= h;
            }
            let fd = (row_neg_log_lik(&yp, &a, EdgeFamily::Bernoulli, i).unwrap()
                - row_neg_log_lik(&ym, &a, EdgeFamily::Bernoulli, i).unwrap())
                / (2.0 * h);
            assert!((fd - g[(i, c)]).abs() <= 1e-5 * (1.0 + g[(i, c)].abs()));
        }
    }

    #[test]
    fn sigma_i_reference_values() {
        // n=2, k=1, Gaussian, z₂=2 → Σ₁ = [[4,2],[2,1]].
        let y = LatentState::new(dmatrix![0.0; 2.0], dvector![0.0, 0.0]);
        let a = Network::new(DMatrix::zeros(2, 2), vec!["a".into(), "b".into()]).unwrap();
        let s = sigma_i(&y, &a, EdgeFamily::Gaussian, 0).unwrap();
        assert_relative_eq!(s, dmatrix![4.0, 2.0; 2.0, 1.0], epsilon = 1e-12);

        // Poisson, Y=0, n=3, k=1 → Σ₁ = 2·[[0,0],[0,1]].
        let y = LatentState::<f64>::zeros(3, 1);
        let a = Network::new(DMatrix::zeros(3, 3), vec!["a".into(), "b".into(), "c".into()])
            .unwrap();
        let s = sigma_i(&y, &a, EdgeFamily::Poisson, 0).unwrap();
        assert_relative_eq!(s, dmatrix![0.0, 0.0; 0.0, 2.0], epsilon = 1e-12);
    }

    #[test]
    fn sigma_i_symmetric_psd() {
        let (y, a) = random_instance(6, 2, EdgeFamily::Bernoulli, 23);
        for i in 0..6 {
            let s = sigma_i(&y, &a, EdgeFamily::Bernoulli, i).unwrap();
            assert_relative_eq!(s.clone(), s.transpose(), epsilon = 1e-12);
            let eig = s.symmetric_eigen();
            assert!(eig.eigenvalues.iter().all(|&l| l >= -1e-12));
        }
    }

    #[test]
    fn sigma_i_matches_hessian_block() {
        // Σ_i equals the (k+1)×(k+1) Hessian block of L wrt y_i for
        // Gaussian and Bernoulli at any Y.
        for (seed, family) in [(29, EdgeFamily::Gaussian), (31, EdgeFamily::Bernoulli)] {
            let (y, a) = random_instance(6, 2, family, seed);
            let s = sigma_i(&y, &a, family, 1).unwrap();
            let h = 1e-4;
            let k = y.k();
            // finite-difference Hessian of L wrt row 1 coordinates
            for r in 0..=k {
                for c in 0..=k {
                    let mut ypp = y.clone();
                    let mut ypm = y.clone();
                    let mut ymp = y.clone();
                    let mut ymm = y.clone();
                    let bump = |st: &mut LatentState<f64>, coord: usize, delta: f64| {
                        if coord < k {
                            st.z[(1, coord)] += delta;
                        } else {
                            st.alpha[1] += delta;
                        }
                    };
                    bump(&mut ypp, r, h);
                    bump(&mut ypp, c, h);
                    bump(&mut ypm, r, h);
                    bump(&mut ypm, c, -h);
                    bump(&mut ymp, r, -h);
                    bump(&mut ymp, c, h);
                    bump(&mut ymm, r, -h);
                    bump(&mut ymm, c, -h);
                    let fd = (neg_log_lik(&ypp, &a, family) - neg_log_lik(&ypm, &a, family)
                        - neg_log_lik(&ymp, &a, family)
                        + neg_log_lik(&ymm, &a, family))
                        / (4.0 * h * h);
                    assert!(
                        (fd - s[(r, c)]).abs() <= 1e-4 * (1.0 + s[(r, c)].abs()),
                        "{family} hessian block ({r},{c}): {fd} vs {}",
                        s[(r, c)]
                    );
                }
            }
        }
    }

    #[test]
    fn sigma_block_assembly() {
        let (y, a) = random_instance(5, 2, EdgeFamily::Gaussian, 37);
        let single = sigma_block(&y, &a, EdgeFamily::Gaussian, &[2]).unwrap();
        assert_relative_eq!(
            single.block,
            sigma_i(&y, &a, EdgeFamily::Gaussian, 2).unwrap(),
            epsilon = 1e-12
        );

        let two = sigma_block(&y, &a, EdgeFamily::Gaussian, &[0, 1]).unwrap();
        assert_eq!(two.block.nrows(), 2 * 3);
        // off-block entries exactly zero
        for r in 0..3 {
            for c in 3..6 {
                assert_eq!(two.block[(r, c)], 0.0);
                assert_eq!(two.block[(c, r)], 0.0);
            }
        }
        assert!(sigma_block(&y, &a, EdgeFamily::Gaussian, &[1, 1]).is_err());
    }
}
