//! Range-adaptive singular value thresholding: the initializer producing
//! `Y⁰ = [Z̊, α̊]` from the raw adjacency matrix.

use crate::error::{Error, Result};
use crate::family::EdgeFamily;
use crate::linalg::{center_reparam, top_k_psd_sqrt};
use crate::network::Network;
use crate::scalar::{cast, Scalar};
use crate::state::LatentState;
use nalgebra::{DMatrix, DVector};

/// Tuning parameters for the initializer.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct RasvtConfig<T> {
    /// Singular value threshold τ.
    pub tau: T,
    /// Trimming quantile γ (an order-statistic index, 1-based).
    pub gamma: usize,
    /// Latent dimension k.
    pub k: usize,
}

impl<T: Scalar> RasvtConfig<T> {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.tau <= T::zero() {
            return Err(Error::Config("tau must be positive".into()));
        }
        if self.gamma < 1 || 2 * self.gamma >= n * n {
            return Err(Error::Config(format!(
                "gamma = {} outside [1, {})",
                self.gamma,
                n * n / 2
            )));
        }
        if self.k < 1 || self.k > n {
            return Err(Error::Config(format!("k = {} outside [1, {n}]", self.k)));
        }
        Ok(())
    }
}

/// Default tuning: `γ = round(0.1·n^{2−1/(k+4)})` clamped to its admissible
/// range, `τ = sqrt(ῡ·n·log n)` with ῡ the mean matrix entry.
pub fn default_config<T: Scalar>(a: &Network<T>, k: usize) -> Result<RasvtConfig<T>> {
    let n = a.n();
    if n < 3 {
        return Err(Error::Config("need at least 3 nodes".into()));
    }
    let nf = n as f64;
    let exponent = 2.0 - 1.0 / (k as f64 + 4.0);
    let gamma_raw = (0.1 * nf.powf(exponent)).round() as i64;
    let gamma_max = ((n * n - 1) / 2) as i64;
    let gamma = gamma_raw.clamp(1, gamma_max) as usize;
    let ubar = a.mean_entry();
    if ubar == T::zero() {
        return Err(Error::DegenerateNetwork);
    }
    let tau = (ubar * cast(nf) * cast(nf.ln())).sqrt();
    Ok(RasvtConfig { tau, gamma, k })
}

/// Singular value thresholding: keep rank-1 components with σ strictly
/// greater than τ. Exploits the symmetry of the adjacency matrix, under
/// which σ_i = |λ_i| and u_i v_iᵀ = sign(λ_i)·q_i q_iᵀ.
pub fn svt<T: Scalar>(a: &DMatrix<T>, tau: T) -> DMatrix<T> {
    let n = a.nrows();
    let sym = (a + a.transpose()) * cast::<T>(0.5);
    let eig = sym.symmetric_eigen();
    let mut out = DMatrix::zeros(n, n);
    for idx in 0..n {
        let lambda = eig.eigenvalues[idx];
        if lambda.abs() > tau {
            let q = eig.eigenvectors.column(idx);
            // rank-1 update out += λ q qᵀ
            for i in 0..n {
                let qi = lambda * q[i];
                for j in 0..n {
                    out[(i, j)] += qi * q[j];
                }
            }
        }
    }
    out
}

/// The data-driven clamp interval: the intersection of the trimmed-quantile
/// interval `[Ẽ_(γ), Ẽ_(n²−γ)]` with the widest closed interval of order
/// statistics strictly inside the mean image.
pub fn adaptive_interval<T: Scalar>(
    e_tilde: &DMatrix<T>,
    gamma: usize,
    family: EdgeFamily,
) -> Result<(T, T)> {
    let n2 = e_tilde.len();
    if gamma < 1 || 2 * gamma >= n2 {
        return Err(Error::Config(format!(
            "gamma = {gamma} outside [1, {})",
            n2 / 2
        )));
    }
    let mut vals: Vec<T> = e_tilde.iter().copied().collect();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));

    let lo_trim = vals[gamma - 1];
    let hi_trim = vals[n2 - gamma - 1];

    let image = family.mean_image::<T>();
    let lo_img = vals.iter().copied().find(|&v| image.contains(v));
    let hi_img = vals.iter().rev().copied().find(|&v| image.contains(v));
    let (lo_img, hi_img) = match (lo_img, hi_img) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::InitInfeasible),
    };

    let mut lo = lo_trim.max(lo_img);
    let mut hi = hi_trim.min(hi_img);
    if lo > hi {
        return Err(Error::TrimmingTooAggressive);
    }

    // Nudge endpoints off an open image boundary so the inverse link stays finite.
    let eps = cast::<T>(1e-12);
    if let Some(b) = image.lo {
        if lo - b < eps * (T::one() + b.abs()) {
            lo = b + eps * (T::one() + b.abs());
        }
    }
    if let Some(b) = image.hi {
        if b - hi < eps * (T::one() + b.abs()) {
            hi = b - eps * (T::one() + b.abs());
        }
    }
    if lo > hi {
        return Err(Error::TrimmingTooAggressive);
    }
    Ok((lo, hi))
}

/// Full initialization pipeline: SVT, clamp into the adaptive interval,
/// inverse link, closed-form α̊, spectral factorization, and centering.
pub fn ra_svt<T: Scalar>(
    a: &Network<T>,
    family: EdgeFamily,
    config: &RasvtConfig<T>,
) -> Result<LatentState<T>> {
    let n = a.n();
    config.validate(n)?;
    let e_tilde = svt(a.weights(), config.tau);
    let (lo, hi) = adaptive_interval(&e_tilde, config.gamma, family)?;

    let mut theta0 = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let clamped = e_tilde[(i, j)].clamp(lo, hi);
            theta0[(i, j)] = family.mean_inverse(clamped)?;
        }
    }

    // α̊ = (nI + 11ᵀ)⁻¹ Θ̊1, in closed form via Sherman–Morrison.
    let ones = DVector::from_element(n, T::one());
    let row_sums = &theta0 * &ones;
    let total = row_sums.sum();
    let nt = T::from_usize(n).unwrap();
    let alpha = (&row_sums - &ones * (total / (cast::<T>(2.0) * nt))) / nt;

    let mut residual = theta0;
    for i in 0..n {
        for j in 0..n {
            residual[(i, j)] -= alpha[i] + alpha[j];
        }
    }
    let z = top_k_psd_sqrt(&residual, config.k)?;
    Ok(center_reparam(&LatentState::new(z, alpha)))
}
