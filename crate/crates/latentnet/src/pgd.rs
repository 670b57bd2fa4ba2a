//! Projected gradient descent with the adaptive two-rule line search.

use crate::error::{Error, Result};
use crate::family::EdgeFamily;
use crate::likelihood::{
    gradient_with_theta, max_abs_score, neg_const_term, neg_log_lik_with_theta,
    neg_varpart_with_theta, stack_grad, theta,
};
use crate::linalg::center_reparam;
use crate::network::Network;
use crate::scalar::{cast, Scalar};
use crate::state::LatentState;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EtaInit<T> {
    /// Closed-form initial step size computed at `Y⁰`.
    Auto,
    Fixed(T),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EtaMode {
    /// One initial step size for all iterations.
    FixedInit,
    /// Recompute the closed-form step size at every iterate.
    RefreshEachIter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopRule {
    /// Stop when `max |∇_{y_ij} L|` drops to the tolerance.
    MaxAbsScore,
    /// Stop when `‖∇_Y L‖_F` drops to the tolerance.
    GradFroNorm,
    None,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PgdConfig<T> {
    /// Line-search constant in front of the quadratic decrease term.
    pub c_ls: T,
    /// Backtracking contraction factor in (0, 1).
    pub beta: T,
    /// Iteration cap R.
    pub max_iters: usize,
    /// Backtracking budget R′ per iteration; `None` means `⌈log n⌉`.
    pub backtrack_budget: Option<usize>,
    pub eta_init: EtaInit<T>,
    pub eta_mode: EtaMode,
    pub stop_tol: T,
    pub stop_rule: StopRule,
    /// `false` runs the fixed-step ablation: `η_r = η_init` with no search.
    pub line_search: bool,
}

impl<T: Scalar> Default for PgdConfig<T> {
    fn default() -> Self {
        Self {
            c_ls: T::one(),
            beta: cast(0.5),
            max_iters: 2000,
            backtrack_budget: None,
            eta_init: EtaInit::Auto,
            eta_mode: EtaMode::FixedInit,
            stop_tol: cast(0.01),
            stop_rule: StopRule::MaxAbsScore,
            line_search: true,
        }
    }
}

impl<T: Scalar> PgdConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > T::zero() && self.beta < T::one()) {
            return Err(Error::Config("beta must lie in (0, 1)".into()));
        }
        if self.c_ls <= T::zero() {
            return Err(Error::Config("c_ls must be positive".into()));
        }
        if self.stop_tol < T::zero() {
            return Err(Error::Config("stop_tol must be nonnegative".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be positive".into()));
        }
        if let EtaInit::Fixed(v) = self.eta_init {
            if v <= T::zero() {
                return Err(Error::Config("eta_init must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn budget_for(&self, n: usize) -> usize {
        self.backtrack_budget
            .unwrap_or(((n as f64).ln().ceil() as usize).max(1))
    }
}

/// One row of the optimizer trace.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct IterTrace<T> {
    pub iter: usize,
    pub loss: T,
    pub max_abs_score: T,
    pub eta: T,
    pub backtracks: usize,
}

#[derive(Debug, Clone)]
pub struct FitResult<T: Scalar> {
    pub state: LatentState<T>,
    pub trace: Vec<IterTrace<T>>,
    pub converged: bool,
    /// Iterations where the backtracking budget ran out (update proceeded
    /// with the smallest trial step).
    pub budget_exhausted_count: usize,
    /// Iterations where condition (full-loss decrease) held at acceptance with
    /// a descent inner product yet the loss increased; zero by construction.
    pub monotone_violations: usize,
    /// Worst relative centering violation of Z over all iterates.
    pub max_centering_violation: T,
    /// The η_init actually used at the first iteration.
    pub eta_init_used: T,
}

/// Descent direction `d(Y) = −[Jₙ∇_Z L, ∇_α L]`: the Z-gradient is centered
/// column-wise so updates preserve `1ᵀZ = 0`; the α column is unprojected.
pub fn descent_direction<T: Scalar>(
    y: &LatentState<T>,
    a: &Network<T>,
    family: EdgeFamily,
) -> DMatrix<T> {
    let th = theta(y);
    let (gz, ga) = gradient_with_theta(y, &th, a, family);
    direction_from_grad(&stack_grad(&gz, &ga))
}

fn direction_from_grad<T: Scalar>(grad: &DMatrix<T>) -> DMatrix<T> {
    let (n, kp1) = grad.shape();
    let k = kp1 - 1;
    let nt = T::from_usize(n).unwrap();
    let mut d = -grad;
    for c in 0..k {
        let mean = grad.column(c).iter().copied().sum::<T>() / nt;
        for r in 0..n {
            d[(r, c)] += mean;
        }
    }
    d
}

/// Closed-form initial step size
/// `η = [6·max_{i<j}(1 − ℓ″(Θ⁰_ij; A_ij))]⁻¹ · min(1/‖Z⁰‖²_op, 1/n)`.
pub fn default_eta_init<T: Scalar>(y0: &LatentState<T>, a: &Network<T>, family: EdgeFamily) -> T {
    let n = y0.n();
    let _ = a;
    let th = theta(y0);
    let mut max_curv = T::zero();
    for i in 0..n {
        for j in (i + 1)..n {
            let c = T::one() - family.d2_unchecked(th[(i, j)]);
            max_curv = max_curv.max(c);
        }
    }
    let gram = y0.z.transpose() * &y0.z;
    let zop2 = gram
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(T::zero(), |m, &v| m.max(v));
    let inv_n = T::one() / T::from_usize(n).unwrap();
    let scale = if zop2 > T::zero() {
        (T::one() / zop2).min(inv_n)
    } else {
        inv_n
    };
    scale / (cast::<T>(6.0) * max_curv)
}

/// Evaluates the two acceptance rules at a candidate step size.
///
/// Returns `(cond1, cond2)`: the quadratic decrease bound on the full loss and
/// on every per-row loss simultaneously. A non-finite trial loss counts as a
/// rejection on both.
pub fn line_search_conditions<T: Scalar>(
    y: &LatentState<T>,
    eta: T,
    a: &Network<T>,
    family: EdgeFamily,
    c_ls: T,
) -> (bool, bool) {
    let th = theta(y);
    let (gz, ga) = gradient_with_theta(y, &th, a, family);
    let grad = stack_grad(&gz, &ga);
    let d = direction_from_grad(&grad);
    let loss_var = neg_varpart_with_theta(&th, a, family);
    let ctx = SearchContext::new(y, &th, a, family, &grad, &d, loss_var);
    (ctx.cond1(eta, c_ls).0, ctx.cond2(eta, c_ls))
}

/// Quantities fixed across backtracking trials within one iteration.
struct SearchContext<'a, T: Scalar> {
    y: &'a LatentState<T>,
    a: &'a Network<T>,
    family: EdgeFamily,
    grad: &'a DMatrix<T>,
    d: &'a DMatrix<T>,
    /// θ-dependent part of `L(Y)`; the θ-free normalization cancels in both
    /// acceptance rules so it is never added here.
    loss: T,
    /// ⟨∇_Y L, d⟩ (Frobenius).
    inner: T,
    /// ‖row i of ∇_Y L‖² per node.
    row_sq: Vec<T>,
    /// L_i(Y) per node.
    row_loss: Vec<T>,
    n: usize,
    k: usize,
}

impl<'a, T: Scalar> SearchContext<'a, T> {
    fn new(
        y: &'a LatentState<T>,
        th: &DMatrix<T>,
        a: &'a Network<T>,
        family: EdgeFamily,
        grad: &'a DMatrix<T>,
        d: &'a DMatrix<T>,
        loss: T,
    ) -> Self {
        let (n, k) = (y.n(), y.k());
        let inner = grad.iter().zip(d.iter()).map(|(&g, &v)| g * v).sum();
        let mut row_sq = vec![T::zero(); n];
        for i in 0..n {
            let mut s = T::zero();
            for c in 0..=k {
                s += grad[(i, c)] * grad[(i, c)];
            }
            row_sq[i] = s;
        }
        let mut row_loss = vec![T::zero(); n];
        for i in 0..n {
            let mut s = T::zero();
            for j in 0..n {
                if j != i {
                    s -= family.log_density_varpart(th[(i, j)], a.weight(i, j));
                }
            }
            row_loss[i] = s;
        }
        Self {
            y,
            a,
            family,
            grad,
            d,
            loss,
            inner,
            row_sq,
            row_loss,
            n,
            k,
        }
    }

    /// Full-loss rule; also returns the trial loss for reuse.
    fn cond1(&self, eta: T, c_ls: T) -> (bool, T) {
        let trial = LatentState::from_combined(&(self.y.to_combined() + self.d * eta));
        let trial_loss = neg_varpart_with_theta(&theta(&trial), self.a, self.family);
        if !trial_loss.is_finite() {
            return (false, trial_loss);
        }
        let nt = T::from_usize(self.n).unwrap();
        let lhs = trial_loss - self.loss - c_ls * nt * eta * eta * self.inner;
        (lhs <= T::zero(), trial_loss)
    }

    /// Per-row rule: each row perturbed by `−η·(row i of ∇_Y L)` alone.
    fn cond2(&self, eta: T, c_ls: T) -> bool {
        let nt = T::from_usize(self.n).unwrap();
        let factor = c_ls * nt * eta * eta;
        for i in 0..self.n {
            // y_i' = y_i − η g_i
            let mut zi = vec![T::zero(); self.k];
            for c in 0..self.k {
                zi[c] = self.y.z[(i, c)] - eta * self.grad[(i, c)];
            }
            let ai = self.y.alpha[i] - eta * self.grad[(i, self.k)];
            let mut trial = T::zero();
            for j in 0..self.n {
                if j == i {
                    continue;
                }
                let mut th = ai + self.y.alpha[j];
                for c in 0..self.k {
                    th += zi[c] * self.y.z[(j, c)];
                }
                trial -= self
                    .family
                    .log_density_varpart(th, self.a.weight(i, j));
            }
            if !trial.is_finite() {
                return false;
            }
            // ⟨∇_Y L_i, d_i⟩ = −‖g_i‖²
            let lhs = trial - self.row_loss[i] + factor * self.row_sq[i];
            if lhs > T::zero() {
                return false;
            }
        }
        true
    }
}

/// Runs Algorithm-style projected gradient descent with adaptive line search.
pub fn fit<T: Scalar>(
    a: &Network<T>,
    family: EdgeFamily,
    y0: &LatentState<T>,
    config: &PgdConfig<T>,
) -> Result<FitResult<T>> {
    config.validate()?;
    a.validate_support(family)?;
    let n = a.n();
    if y0.n() != n {
        return Err(Error::Shape(format!(
            "initial state has {} rows for an n = {n} network",
            y0.n()
        )));
    }

    // Centering is idempotent and leaves Θ unchanged; apply unconditionally
    // so callers need not pre-center.
    let mut y = center_reparam(y0);
    let budget = config.budget_for(n);

    if !neg_log_lik_with_theta(&theta(&y), a, family).is_finite() {
        return Err(Error::NonFiniteStart);
    }
    let loss_const = neg_const_term(a, family);
    let eta_base = match config.eta_init {
        EtaInit::Auto => default_eta_init(&y, a, family),
        EtaInit::Fixed(v) => v,
    };
    if !(eta_base > T::zero() && eta_base.is_finite()) {
        return Err(Error::Config(
            "initial step size is not positive and finite".into(),
        ));
    }

    let mut trace = Vec::new();
    let mut converged = false;
    let mut budget_exhausted_count = 0usize;
    let mut monotone_violations = 0usize;
    let mut max_center = y.centering_violation();

    for r in 0..config.max_iters {
        let th = theta(&y);
        let (gz, ga) = gradient_with_theta(&y, &th, a, family);
        let grad = stack_grad(&gz, &ga);
        let smax = max_abs_score(&grad);
        let loss_var = neg_varpart_with_theta(&th, a, family);
        let loss = loss_var + loss_const;

        let stop = match config.stop_rule {
            StopRule::MaxAbsScore => smax <= config.stop_tol,
            StopRule::GradFroNorm => grad.norm() <= config.stop_tol,
            StopRule::None => false,
        };
        if stop {
            trace.push(IterTrace {
                iter: r,
                loss,
                max_abs_score: smax,
                eta: T::zero(),
                backtracks: 0,
            });
            converged = true;
            break;
        }

        let d = direction_from_grad(&grad);
        let eta_start = match config.eta_mode {
            EtaMode::FixedInit => eta_base,
            EtaMode::RefreshEachIter => {
                let e = default_eta_init(&y, a, family);
                if e > T::zero() && e.is_finite() {
                    e
                } else {
                    eta_base
                }
            }
        };

        let mut eta = eta_start;
        let mut backtracks = 0usize;
        if config.line_search {
            let ctx = SearchContext::new(&y, &th, a, family, &grad, &d, loss_var);
            loop {
                let (c1, trial_loss) = ctx.cond1(eta, config.c_ls);
                let accepted = c1 && ctx.cond2(eta, config.c_ls);
                if accepted {
                    if ctx.inner < T::zero() && trial_loss > loss_var {
                        monotone_violations += 1;
                    }
                    break;
                }
                if backtracks >= budget {
                    budget_exhausted_count += 1;
                    break;
                }
                eta *= config.beta;
                backtracks += 1;
            }
        }

        y.z += &d.view((0, 0), (n, y.k())) * eta;
        y.alpha += d.column(y.k()) * eta;
        // non-finite iterates (divergent fixed-step runs) have no meaningful
        // centering measure
        let violation = y.centering_violation();
        if violation.is_finite() {
            max_center = max_center.max(violation);
        }

        trace.push(IterTrace {
            iter: r,
            loss,
            max_abs_score: smax,
            eta,
            backtracks,
        });
    }

    Ok(FitResult {
        state: y,
        trace,
        converged,
        budget_exhausted_count,
        monotone_violations,
        max_centering_violation: max_center,
        eta_init_used: eta_base,
    })
}
