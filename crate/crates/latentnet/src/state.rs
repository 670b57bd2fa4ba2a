//! Latent parameter state `Y = [Z, α]`.

use crate::scalar::Scalar;
use nalgebra::{DMatrix, DVector};

/// Latent vectors `Z ∈ ℝ^{n×k}` and degree parameters `α ∈ ℝⁿ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentState<T: Scalar> {
    pub z: DMatrix<T>,
    pub alpha: DVector<T>,
}

impl<T: Scalar> LatentState<T> {
    pub fn new(z: DMatrix<T>, alpha: DVector<T>) -> Self {
        assert_eq!(z.nrows(), alpha.len(), "Z rows must match alpha length");
        assert!(z.ncols() >= 1, "latent dimension k must be at least 1");
        Self { z, alpha }
    }

    pub fn zeros(n: usize, k: usize) -> Self {
        Self::new(DMatrix::zeros(n, k), DVector::zeros(n))
    }

    pub fn n(&self) -> usize {
        self.z.nrows()
    }

    pub fn k(&self) -> usize {
        self.z.ncols()
    }

    /// Stacks the state into the combined `n×(k+1)` matrix `[Z, α]`.
    pub fn to_combined(&self) -> DMatrix<T> {
        let (n, k) = (self.n(), self.k());
        let mut y = DMatrix::zeros(n, k + 1);
        y.view_mut((0, 0), (n, k)).copy_from(&self.z);
        y.set_column(k, &self.alpha);
        y
    }

    /// Inverse of [`to_combined`](Self::to_combined).
    pub fn from_combined(y: &DMatrix<T>) -> Self {
        let (n, kp1) = y.shape();
        assert!(kp1 >= 2, "combined matrix needs at least 2 columns");
        let k = kp1 - 1;
        let z = y.view((0, 0), (n, k)).into_owned();
        let alpha = y.column(k).into_owned();
        Self::new(z, alpha)
    }

    /// Row `i` as the concatenated vector `y_i = [z_iᵀ, α_i]ᵀ`.
    pub fn row_concat(&self, i: usize) -> DVector<T> {
        let k = self.k();
        let mut y = DVector::zeros(k + 1);
        for c in 0..k {
            y[c] = self.z[(i, c)];
        }
        y[k] = self.alpha[i];
        y
    }

    /// Worst relative violation of the centering constraint `1ᵀZ = 0`,
    /// as `max_c |Σ_i Z_ic| / (n · max|Z|)`.
    pub fn centering_violation(&self) -> T {
        let max_abs = self.z.iter().fold(T::zero(), |m, &v| m.max(v.abs()));
        if max_abs == T::zero() {
            return T::zero();
        }
        let n = T::from_usize(self.n()).unwrap();
        let mut worst = T::zero();
        for c in 0..self.k() {
            let s: T = self.z.column(c).iter().copied().sum();
            worst = worst.max(s.abs());
        }
        worst / (n * max_abs)
    }

    /// Maximum row-wise Euclidean norm of `[Z, α]` (the two-to-infinity norm).
    pub fn two_to_inf_norm(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.n() {
            let mut s = self.alpha[i] * self.alpha[i];
            for c in 0..self.k() {
                s += self.z[(i, c)] * self.z[(i, c)];
            }
            worst = worst.max(s.sqrt());
        }
        worst
    }
}
