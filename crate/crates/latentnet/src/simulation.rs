//! Ground-truth generation, network sampling, and the Monte Carlo harness
//! for the convergence and normality studies.

use crate::error::{Error, Result};
use crate::family::EdgeFamily;
use crate::inference::{edge_mean_se, entry_se};
use crate::likelihood::theta;
use crate::linalg::procrustes_align;
use crate::network::Network;
use crate::pgd::{fit, default_eta_init, EtaInit, FitResult, PgdConfig};
use crate::rasvt::{default_config, ra_svt};
use crate::state::LatentState;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::Serialize;

/// Specification of a simulated ground truth.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TruthSpec {
    pub n: usize,
    pub k: usize,
    pub family: EdgeFamily,
    pub seed: u64,
}

impl TruthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n <= 2 * (self.k + 2) {
            return Err(Error::Config(format!(
                "need n > 2(k+2): n = {}, k = {}",
                self.n, self.k
            )));
        }
        Ok(())
    }
}

/// Derives the per-replication seed from a base seed; stable across runs.
pub fn rep_seed(base: u64, rep: u64) -> u64 {
    base.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(rep.wrapping_add(1)))
}

fn truncated_standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    // rejection sampling on [-2, 2]; acceptance probability ≈ 0.954
    loop {
        let x: f64 = StandardNormal.sample(rng);
        if x.abs() <= 2.0 {
            return x;
        }
    }
}

/// Generates the ground truth: `α* = α̃/(1ᵀα̃)` with `α̃ ~ U[1,3]` entries,
/// and `Z* = 0.5√n·Ũ` with `Ũ` the top-k left singular vectors of the
/// column-centered truncated-normal matrix. `Z*ᵀZ*` has k equal eigenvalues.
pub fn gen_truth(spec: &TruthSpec) -> Result<LatentState<f64>> {
    spec.validate()?;
    let (n, k) = (spec.n, spec.k);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let alpha_raw = DVector::from_fn(n, |_, _| rng.gen_range(1.0..3.0));
    let alpha = &alpha_raw / alpha_raw.sum();

    let mut z_raw = DMatrix::zeros(n, k);
    for c in 0..k {
        for r in 0..n {
            z_raw[(r, c)] = truncated_standard_normal(&mut rng);
        }
    }
    // column-center (J_n Z̃)
    for c in 0..k {
        let mean = z_raw.column(c).sum() / n as f64;
        for r in 0..n {
            z_raw[(r, c)] -= mean;
        }
    }
    let svd = z_raw.svd(true, false);
    let u = svd.u.as_ref().expect("svd with u");
    let mut z = DMatrix::zeros(n, k);
    let scale = 0.5 * (n as f64).sqrt();
    for c in 0..k {
        // fix column sign for reproducibility
        let col = u.column(c);
        let mut pivot = 0.0f64;
        for &x in col.iter() {
            if x.abs() > pivot.abs() {
                pivot = x;
            }
        }
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        for r in 0..n {
            z[(r, c)] = scale * sign * col[r];
        }
    }
    Ok(LatentState::new(z, alpha))
}

/// Samples a symmetric network with independent per-pair draws from the
/// family at `Θ*_ij`.
pub fn sample_network(truth: &LatentState<f64>, family: EdgeFamily, seed: u64) -> Network<f64> {
    let n = truth.n();
    let th = theta(truth);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let t = th[(i, j)];
            let x = match family {
                EdgeFamily::Poisson => {
                    let lambda = t.exp();
                    Poisson::new(lambda).expect("positive rate").sample(&mut rng)
                }
                EdgeFamily::Bernoulli => {
                    let p = family.mean(t);
                    if rng.gen_range(0.0..1.0) < p {
                        1.0
                    } else {
                        0.0
                    }
                }
                EdgeFamily::Gaussian => {
                    let eps: f64 = StandardNormal.sample(&mut rng);
                    t + eps
                }
            };
            w[(i, j)] = x;
            w[(j, i)] = x;
        }
    }
    let width = (n.max(10) as f64).log10().ceil() as usize;
    let labels = (0..n).map(|i| format!("n{i:0width$}")).collect();
    Network::new(w, labels).expect("constructed symmetric")
}

/// Initializes with RA-SVT defaults and returns the baseline step size
/// `η₀ = 6 ×` the closed-form choice at `Y⁰`.
pub fn init_with_baseline(
    a: &Network<f64>,
    family: EdgeFamily,
    k: usize,
) -> Result<(LatentState<f64>, f64)> {
    let cfg = default_config(a, k)?;
    let y0 = ra_svt(a, family, &cfg)?;
    let eta0 = 6.0 * default_eta_init(&y0, a, family);
    Ok((y0, eta0))
}

/// One row of the convergence table.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub eta_scale: f64,
    pub adaptive: bool,
    pub reps: usize,
    pub converged: usize,
    pub proportion: f64,
    /// Mean first iteration where the score dropped to the threshold,
    /// over converged replications.
    pub mean_conv_iter: f64,
}

/// Runs the step-size study: for each scale `s`, fits with
/// `η_init = s·η₀` in adaptive or fixed-step mode and records the fraction
/// of replications whose score reaches 0.01 within the iteration cap.
pub fn run_convergence_study(
    spec: &TruthSpec,
    eta_scales: &[f64],
    adaptive: bool,
    reps: usize,
    base: &PgdConfig<f64>,
) -> Result<Vec<ConvergenceRow>> {
    let truth = gen_truth(spec)?;
    let mut rows = Vec::new();
    for &scale in eta_scales {
        let mut converged = 0usize;
        let mut conv_iters = Vec::new();
        for rep in 0..reps {
            let a = sample_network(&truth, spec.family, rep_seed(spec.seed, rep as u64));
            let (y0, eta0) = init_with_baseline(&a, spec.family, spec.k)?;
            let cfg = PgdConfig {
                eta_init: EtaInit::Fixed(scale * eta0),
                line_search: adaptive,
                ..*base
            };
            let res = fit(&a, spec.family, &y0, &cfg)?;
            if let Some(r_conv) = first_conv_iter(&res, base.stop_tol) {
                converged += 1;
                conv_iters.push(r_conv as f64);
            }
        }
        let mean_conv_iter = if conv_iters.is_empty() {
            f64::NAN
        } else {
            conv_iters.iter().sum::<f64>() / conv_iters.len() as f64
        };
        rows.push(ConvergenceRow {
            eta_scale: scale,
            adaptive,
            reps,
            converged,
            proportion: converged as f64 / reps as f64,
            mean_conv_iter,
        });
    }
    Ok(rows)
}

/// First iteration whose score statistic reached the threshold, if any.
pub fn first_conv_iter(res: &FitResult<f64>, tol: f64) -> Option<usize> {
    res.trace
        .iter()
        .find(|t| t.max_abs_score <= tol)
        .map(|t| t.iter)
}

/// Standardized statistics from one normality-study replication.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct NormalityRep {
    pub rep: usize,
    /// `t(ẑ_{q,11})`: first latent coordinate of node 1 after alignment.
    pub t_z11: f64,
    /// `t(μ̂₁₂)`: edge mean between nodes 1 and 2.
    pub t_mu12: f64,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct NormalityStudy {
    pub reps: Vec<NormalityRep>,
    pub non_converged: usize,
}

/// Monte Carlo study of the standardized statistics: the truth is drawn once
/// per spec, networks are re-sampled per replication, and each fit is aligned
/// to the truth before computing entrywise statistics.
pub fn run_normality_study(
    spec: &TruthSpec,
    reps: usize,
    base: &PgdConfig<f64>,
) -> Result<NormalityStudy> {
    let truth = gen_truth(spec)?;
    let th_star = theta(&truth);
    let mut out = Vec::with_capacity(reps);
    let mut non_converged = 0usize;
    for rep in 0..reps {
        let a = sample_network(&truth, spec.family, rep_seed(spec.seed, rep as u64));
        let (y0, eta0) = init_with_baseline(&a, spec.family, spec.k)?;
        let cfg = PgdConfig {
            eta_init: EtaInit::Fixed(eta0),
            ..*base
        };
        let res = fit(&a, spec.family, &y0, &cfg)?;
        if !res.converged {
            non_converged += 1;
            continue;
        }
        let aligned = procrustes_align(&res.state.z, &truth.z)?;
        let y_q = LatentState::new(aligned.zq, res.state.alpha.clone());

        let se_z = entry_se(&y_q, &a, spec.family, 0, 0)?;
        let t_z11 = (y_q.z[(0, 0)] - truth.z[(0, 0)]) / se_z;

        let theta_hat_12 =
            y_q.alpha[0] + y_q.alpha[1] + y_q.z.row(0).dot(&y_q.z.row(1));
        let se_mu = edge_mean_se(&y_q, &a, spec.family, 0, 1)?;
        let t_mu12 =
            (spec.family.mean(theta_hat_12) - spec.family.mean(th_star[(0, 1)])) / se_mu;

        out.push(NormalityRep {
            rep,
            t_z11,
            t_mu12,
            converged: true,
        });
    }
    Ok(NormalityStudy {
        reps: out,
        non_converged,
    })
}

/// Kolmogorov–Smirnov distance of a sample to the standard normal.
pub fn ks_distance_to_std_normal(sample: &[f64]) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut sorted = sample.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = normal.cdf(x);
        let lo = i as f64 / n;
        let hi = (i + 1) as f64 / n;
        d = d.max((f - lo).abs()).max((hi - f).abs());
    }
    d
}

/// Fraction of |t| statistics within the two-sided 95% normal band.
pub fn coverage_95(sample: &[f64]) -> f64 {
    let z = 1.959963984540054;
    sample.iter().filter(|t| t.abs() <= z).count() as f64 / sample.len() as f64
}
