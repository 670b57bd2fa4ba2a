//! Standard errors, z-statistics, and tests built on the per-node
//! information blocks, plus the two-network latent-similarity comparison
//! with Benjamini–Hochberg correction.

use crate::error::{Error, Result};
use crate::family::EdgeFamily;
use crate::likelihood::sigma_i;
use crate::network::Network;
use crate::scalar::{cast, Scalar};
use crate::state::LatentState;
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

/// What a report row describes.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Entry { node: String, coord: usize },
    EdgeMean { i: String, j: String },
    InnerProduct { i: String, j: String },
    Custom(String),
}

#[derive(Debug, Clone, Serialize)]
pub struct InferenceReport<T> {
    pub target: Target,
    pub estimate: T,
    pub se: T,
    pub z: T,
    pub p_value: T,
    pub ci_low: T,
    pub ci_high: T,
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).unwrap()
}

/// Two-sided p-value `2(1 − Φ(|z|))`.
pub fn two_sided_p<T: Scalar>(z: T) -> T {
    let z = z.to_f64().unwrap_or(f64::NAN).abs();
    cast(2.0 * (1.0 - std_normal().cdf(z)))
}

/// Standard normal quantile for a two-sided CI at the given level.
pub fn ci_half_width_factor<T: Scalar>(level: T) -> T {
    let level = level.to_f64().unwrap_or(0.95);
    cast(std_normal().inverse_cdf(1.0 - (1.0 - level) / 2.0))
}

impl<T: Scalar> InferenceReport<T> {
    /// Builds a report from an estimate and its standard error. The z and
    /// p-value columns measure the deviation from `null_value`.
    pub fn from_estimate(target: Target, estimate: T, se: T, null_value: T, level: T) -> Self {
        let z = (estimate - null_value) / se;
        let hw = ci_half_width_factor::<T>(level) * se;
        InferenceReport {
            target,
            estimate,
            se,
            z,
            p_value: two_sided_p(z),
            ci_low: estimate - hw,
            ci_high: estimate + hw,
        }
    }
}

/// Inverse of Σ_i via symmetric positive-definite factorization; a failed
/// factorization is reported as singular information rather than patched
/// with a pseudo-inverse.
pub fn sigma_i_inverse<T: Scalar>(
    y: &LatentState<T>,
    a: &Network<T>,
    family: EdgeFamily,
    i: usize,
) -> Result<DMatrix<T>> {
    let sigma = sigma_i(y, a, family, i)?;
    sigma
        .cholesky()
        .map(|c| c.inverse())
        .ok_or(Error::SingularInformation(i))
}

/// `sqrt` of the `(coord, coord)` entry of `Σ_i(Ŷ)⁻¹` (0-based coordinate,
/// `0..k` are latent coordinates, `k` is α).
pub fn entry_se<T: Scalar>(
    y: &LatentState<T>,
    a: &Network<T>,
    family: EdgeFamily,
    i: usize,
    coord: usize,
) -> Result<T> {
    let kp1 = y.k() + 1;
    if coord >= kp1 {
        return Err(Error::IndexOutOfRange {
            index: coord,
            n: kp1,
        });
    }
    let inv = sigma_i_inverse(y, a, family, i)?;
    Ok(inv[(coord, coord)].sqrt())
}

/// Delta-method standard error
/// `{∇gᵀ Σ_𝓘⁻¹ ∇g}^{1/2}`, with the block-diagonal Σ inverted blockwise.
pub fn delta_method_se<T: Scalar>(
    y: &LatentState<T>,
    a: &Network<T>,
    family: EdgeFamily,
    indices: &[usize],
    grad_g: &DVector<T>,
) -> Result<T> {
    let kp1 = y.k() + 1;
    if grad_g.len() != indices.len() * kp1 {
        return Err(Error::Shape(format!(
            "grad_g has length {}, expected {}",
            grad_g.len(),
            indices.len() * kp1
        )));
    }
    let mut seen = std::collections::HashSet::new();
    for &i in indices {
        if !seen.insert(i) {
            return Err(Error::DuplicateIndex(i));
        }
    }
    let mut quad = T::zero();
    for (b, &i) in indices.iter().enumerate() {
        let inv = sigma_i_inverse(y, a, family, i)?;
        let g = grad_g.rows(b * kp1, kp1);
        quad += (g.transpose() * &inv * g)[(0, 0)];
    }
    Ok(quad.sqrt())
}

/// Edge-mean standard error
/// `|μ′(Θ̂_ij)|·{[ŵ_j; ŵ_i]ᵀ blkdiag(Σ_i⁻¹, Σ_j⁻¹) [ŵ_j; ŵ_i]}^{1/2}`
/// with `ŵ_j = [ẑ_jᵀ, 1]ᵀ`.
pub fn edge_mean_se<T: Scalar>(
    y: &LatentState<T>,
    a: &Network<T>,
    family: EdgeFamily,
    i: usize,
    j: usize,
) -> Result<T> {
    if i == j {
        return Err(Error::Config("edge mean requires i != j".into()));
    }
    let k = y.k();
    let w = |node: usize| -> DVector<T> {
        let mut v = DVector::zeros(k + 1);
        for c in 0..k {
            v[c] = y.z[(node, c)];
        }
        v[k] = T::one();
        v
    };
    let mut theta_ij = y.alpha[i] + y.alpha[j];
    for c in 0..k {
        theta_ij += y.z[(i, c)] * y.z[(j, c)];
    }
    let inv_i = sigma_i_inverse(y, a, family, i)?;
    let inv_j = sigma_i_inverse(y, a, family, j)?;
    let wi = w(i);
    let wj = w(j);
    let quad = (wj.transpose() * &inv_i * &wj)[(0, 0)] + (wi.transpose() * &inv_j * &wi)[(0, 0)];
    Ok(family.mean_derivative(theta_ij).abs() * quad.sqrt())
}

/// Benjamini–Hochberg step-up rule; returns the rejection indicator per input
/// p-value (input order preserved).
pub fn bh_adjust<T: Scalar>(p_values: &[T], level: T) -> Vec<bool> {
    let m = p_values.len();
    if m == 0 {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        p_values[a]
            .partial_cmp(&p_values[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mf = T::from_usize(m).unwrap();
    let mut threshold: Option<T> = None;
    for (rank, &idx) in order.iter().enumerate().rev() {
        let bound = T::from_usize(rank + 1).unwrap() * level / mf;
        if p_values[idx] <= bound {
            threshold = Some(p_values[idx]);
            break;
        }
    }
    match threshold {
        None => vec![false; m],
        Some(t) => p_values.iter().map(|&p| p <= t).collect(),
    }
}

/// One pairwise two-sample test of latent similarity.
#[derive(Debug, Clone, Serialize)]
pub struct PairwiseTestResult<T> {
    pub i: usize,
    pub j: usize,
    pub diff: T,
    pub se: T,
    pub z: T,
    pub p_value: T,
    pub rejected: bool,
}

#[derive(Debug, Clone)]
pub struct ComparisonResult<T: Scalar> {
    pub tests: Vec<PairwiseTestResult<T>>,
    /// Per node: fraction of rejected tests among the n−1 pairs containing it.
    pub node_rejection_rates: Vec<(String, T)>,
}

/// Two-network comparison: for every unordered pair, tests whether the latent
/// similarities `⟨z_i, z_j⟩` differ between the fits, with the two-sample
/// variance taken as the sum of per-network delta-method variances.
pub fn compare_networks<T: Scalar>(
    y1: &LatentState<T>,
    a1: &Network<T>,
    family1: EdgeFamily,
    y2: &LatentState<T>,
    a2: &Network<T>,
    family2: EdgeFamily,
    level: T,
) -> Result<ComparisonResult<T>> {
    if a1.labels() != a2.labels() {
        let unmatched: Vec<String> = a1
            .labels()
            .iter()
            .filter(|l| !a2.labels().contains(l))
            .chain(a2.labels().iter().filter(|l| !a1.labels().contains(l)))
            .cloned()
            .collect();
        return Err(Error::LabelMismatch(unmatched.join(", ")));
    }
    let n = y1.n();
    let k = y1.k();
    if y2.n() != n || y2.k() != k {
        return Err(Error::Shape("fits have different dimensions".into()));
    }

    // Σ_i⁻¹ per node per network, computed once.
    let inv1: Vec<DMatrix<T>> = (0..n)
        .map(|i| sigma_i_inverse(y1, a1, family1, i))
        .collect::<Result<_>>()?;
    let inv2: Vec<DMatrix<T>> = (0..n)
        .map(|i| sigma_i_inverse(y2, a2, family2, i))
        .collect::<Result<_>>()?;

    // variance of ⟨z_i, z_j⟩ on one network: z_jᵀ (Σ_i⁻¹)_zz z_j + z_iᵀ (Σ_j⁻¹)_zz z_i
    let var_one = |y: &LatentState<T>, inv: &[DMatrix<T>], i: usize, j: usize| -> T {
        let quad = |node: usize, other: usize| -> T {
            let m = &inv[node];
            let mut s = T::zero();
            for r in 0..k {
                for c in 0..k {
                    s += y.z[(other, r)] * m[(r, c)] * y.z[(other, c)];
                }
            }
            s
        };
        quad(i, j) + quad(j, i)
    };

    let mut tests = Vec::with_capacity(n * (n - 1) / 2);
    let mut p_values = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let mut ip1 = T::zero();
            let mut ip2 = T::zero();
            for c in 0..k {
                ip1 += y1.z[(i, c)] * y1.z[(j, c)];
                ip2 += y2.z[(i, c)] * y2.z[(j, c)];
            }
            let diff = ip1 - ip2;
            let se = (var_one(y1, &inv1, i, j) + var_one(y2, &inv2, i, j)).sqrt();
            let z = diff / se;
            let p = two_sided_p(z);
            p_values.push(p);
            tests.push(PairwiseTestResult {
                i,
                j,
                diff,
                se,
                z,
                p_value: p,
                rejected: false,
            });
        }
    }

    let rejections = bh_adjust(&p_values, level);
    let mut rejected_count = vec![0usize; n];
    for (t, &rej) in tests.iter_mut().zip(rejections.iter()) {
        t.rejected = rej;
        if rej {
            rejected_count[t.i] += 1;
            rejected_count[t.j] += 1;
        }
    }
    let denom = T::from_usize(n - 1).unwrap();
    let node_rejection_rates = a1
        .labels()
        .iter()
        .enumerate()
        .map(|(i, l)| (l.clone(), T::from_usize(rejected_count[i]).unwrap() / denom))
        .collect();

    Ok(ComparisonResult {
        tests,
        node_rejection_rates,
    })
}
