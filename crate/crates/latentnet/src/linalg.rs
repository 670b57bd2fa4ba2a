//! Linear-algebra primitives: orthogonal Procrustes alignment, the
//! O(k)-invariant distance, the top-k positively truncated square root,
//! and the centering reparameterization.

use crate::error::{Error, Result};
use crate::scalar::{cast, Scalar};
use crate::state::LatentState;
use nalgebra::{DMatrix, SymmetricEigen};

/// Result of aligning `Z_hat` to `Z_ref` over O(k).
#[derive(Debug, Clone)]
pub struct AlignmentResult<T: Scalar> {
    /// Orthogonal `k×k` matrix minimizing `‖Z_hat − Z_ref Q‖_F`.
    pub q: DMatrix<T>,
    /// Aligned matrix `Z_hat Qᵀ`.
    pub zq: DMatrix<T>,
    /// `‖Z_hat − Z_ref Q‖_F` at the minimizer.
    pub residual: T,
    /// Set when `Z_refᵀ Z_hat` is numerically rank-deficient, in which case
    /// the minimizer is non-unique and an arbitrary SVD-derived Q is returned.
    pub rank_deficient: bool,
}

/// Solves the orthogonal Procrustes problem via the SVD of `Z_refᵀ Z_hat`.
pub fn procrustes_align<T: Scalar>(
    z_hat: &DMatrix<T>,
    z_ref: &DMatrix<T>,
) -> Result<AlignmentResult<T>> {
    if z_hat.shape() != z_ref.shape() {
        return Err(Error::Shape(format!(
            "procrustes shapes differ: {:?} vs {:?}",
            z_hat.shape(),
            z_ref.shape()
        )));
    }
    if z_hat.nrows() < z_hat.ncols() {
        return Err(Error::Shape("procrustes requires n >= k".into()));
    }
    let m = z_ref.transpose() * z_hat;
    let svd = m.svd(true, true);
    let u = svd.u.as_ref().expect("svd with u requested");
    let v_t = svd.v_t.as_ref().expect("svd with v_t requested");
    let sigma = &svd.singular_values;
    let largest = sigma.max();
    let smallest = sigma.min();
    let rank_deficient = smallest < cast::<T>(1e-12) * largest;
    let q = u * v_t;
    let zq = z_hat * q.transpose();
    let residual = (z_hat - z_ref * &q).norm();
    Ok(AlignmentResult {
        q,
        zq,
        residual,
        rank_deficient,
    })
}

/// Squared O(k)-invariant distance
/// `dist²(Z_a, Z_b) + ‖α_a − α_b‖₂²`.
pub fn dist2<T: Scalar>(a: &LatentState<T>, b: &LatentState<T>) -> Result<T> {
    if a.n() != b.n() || a.k() != b.k() {
        return Err(Error::Shape(format!(
            "latent states not conformable: ({}, {}) vs ({}, {})",
            a.n(),
            a.k(),
            b.n(),
            b.k()
        )));
    }
    let align = procrustes_align(&a.z, &b.z)?;
    let da = &a.alpha - &b.alpha;
    Ok(align.residual * align.residual + da.norm_squared())
}

/// Top-k positively truncated square root of a symmetric matrix: keep the k
/// largest eigenvalues, clip negative parts to zero, and return
/// `[u₁√λ₁⁺, …, u_k√λ_k⁺]`.
pub fn top_k_psd_sqrt<T: Scalar>(s: &DMatrix<T>, k: usize) -> Result<DMatrix<T>> {
    let n = s.nrows();
    if s.ncols() != n {
        return Err(Error::Shape("top_k_psd_sqrt requires a square matrix".into()));
    }
    if k < 1 || k > n {
        return Err(Error::Shape(format!("k = {k} outside [1, {n}]")));
    }
    let sym = (s + s.transpose()) * cast::<T>(0.5);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut out = DMatrix::zeros(n, k);
    for (col, &idx) in order.iter().take(k).enumerate() {
        let lambda = eig.eigenvalues[idx].max(T::zero());
        let scale = lambda.sqrt();
        let v = eig.eigenvectors.column(idx);
        // Fix the column sign: largest-magnitude entry positive.
        let mut pivot = T::zero();
        for &x in v.iter() {
            if x.abs() > pivot.abs() {
                pivot = x;
            }
        }
        let sign = if pivot < T::zero() { -T::one() } else { T::one() };
        for r in 0..n {
            out[(r, col)] = v[r] * scale * sign;
        }
    }
    Ok(out)
}

/// Centering reparameterization: `z̃_i = z_i − c`, `α̃_i = α_i + cᵀz_i − ‖c‖²/2`
/// with `c = Zᵀ1ₙ/n`. Leaves every off-diagonal `Θ_ij` unchanged.
pub fn center_reparam<T: Scalar>(y: &LatentState<T>) -> LatentState<T> {
    let (n, k) = (y.n(), y.k());
    let nt = T::from_usize(n).unwrap();
    let mut c = vec![T::zero(); k];
    for (col, cv) in c.iter_mut().enumerate() {
        *cv = y.z.column(col).iter().copied().sum::<T>() / nt;
    }
    let c_norm2: T = c.iter().map(|&v| v * v).sum();
    let mut z = y.z.clone();
    let mut alpha = y.alpha.clone();
    for i in 0..n {
        let mut dot = T::zero();
        for (col, &cv) in c.iter().enumerate() {
            dot += cv * y.z[(i, col)];
            z[(i, col)] -= cv;
        }
        alpha[i] += dot - c_norm2 / cast(2.0);
    }
    LatentState::new(z, alpha)
}
