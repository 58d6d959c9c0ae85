//! ADMM for the unconstrained mixed l2/lp problem
//! `min_x lambda ||x||_{2,p}^p + (1/2) ||y - Phi x||_2^2`.
//!
//! Splitting `x = v` gives the three-step iteration
//!
//! ```text
//! x^{k+1} = (Phi^T Phi + gamma I)^{-1} (Phi^T y - gamma (z^k - v^k))
//! v^{k+1} = prox_{(lambda/gamma) ||.||_{2,p}^p} (z^k + x^{k+1})
//! z^{k+1} = z^k + x^{k+1} - v^{k+1}
//! ```
//!
//! with `z` the scaled multiplier of the coupling constraint. The system
//! matrix is factored once (Cholesky) and reused every iteration; for wide
//! matrices (`n < N`) the equivalent n-by-n system via the matrix-inversion
//! identity is factored instead.
//!
//! The v-update is the proximal map of the mixed-norm power. In the default
//! `BlockExact` mode it is computed exactly: the penalty sees a block only
//! through its l2 norm, so each block reduces to the scalar problem
//! `min_{r >= 0} tau r^p + (r - c)^2 / 2` solved by [`prox_scalar`] (hard
//! thresholding below a closed-form breakeven point, safeguarded Newton above
//! it). The `ElementwiseSurrogate` mode instead applies the scalar lp prox
//! entry by entry inside each block, which solves a surrogate of the block
//! problem rather than the block problem itself; it is kept for reproducing
//! experiments that used that shortcut. The two coincide when all blocks have
//! size 1.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::block_model::{l2_norm, mixed_norm_pow, BlockPartition};
use crate::error::{Error, Result};

/// Which proximal map the v-update applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProxMode {
    /// Exact minimizer of `tau ||v||_2^p + ||a - v||_2^2 / 2` per block.
    #[default]
    BlockExact,
    /// Scalar lp prox applied to each entry (a surrogate for p < 1).
    ElementwiseSurrogate,
}

/// Geometric regularization schedule: the solve starts at the configured
/// `lambda` and multiplies it by `factor` each iteration until it reaches
/// `floor`, which is the regularization actually targeted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Continuation {
    pub factor: f64,
    pub floor: f64,
}

/// ADMM configuration. `lambda` is the regularization weight, `gamma` the
/// penalty parameter; residual tolerances are measured relative to sqrt(N).
#[derive(Debug, Clone)]
pub struct AdmmConfig {
    pub lambda: f64,
    pub gamma: f64,
    pub p: f64,
    pub max_iters: usize,
    pub tol_primal: f64,
    pub tol_dual: f64,
    pub prox_mode: ProxMode,
    pub continuation: Option<Continuation>,
    /// Record (iteration, objective, primal, dual) rows; off by default
    /// because the objective costs an extra matrix product per iteration.
    pub record_history: bool,
}

impl AdmmConfig {
    pub fn new(lambda: f64, gamma: f64, p: f64) -> Result<Self> {
        let cfg = Self {
            lambda,
            gamma,
            p,
            max_iters: 5000,
            tol_primal: 1e-8,
            tol_dual: 1e-8,
            prox_mode: ProxMode::BlockExact,
            continuation: None,
            record_history: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.lambda) {
            return Err(Error::InvalidParameter("lambda must be > 0".into()));
        }
        if !positive(self.gamma) {
            return Err(Error::InvalidParameter("gamma must be > 0".into()));
        }
        if !(self.p > 0.0 && self.p <= 1.0) || !self.p.is_finite() {
            return Err(Error::ExponentOutOfRange {
                value: self.p,
                range: "(0, 1]",
            });
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be >= 1".into()));
        }
        if !(self.tol_primal > 0.0 && self.tol_dual > 0.0) {
            return Err(Error::InvalidParameter("tolerances must be > 0".into()));
        }
        if let Some(c) = &self.continuation {
            if !(c.factor.is_finite() && c.factor > 0.0 && c.factor < 1.0) {
                return Err(Error::InvalidParameter(
                    "continuation factor must be in (0, 1)".into(),
                ));
            }
            if !(c.floor > 0.0 && c.floor <= self.lambda) {
                return Err(Error::InvalidParameter(
                    "continuation floor must satisfy 0 < floor <= lambda".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn with_max_iters(mut self, iters: usize) -> Self {
        self.max_iters = iters;
        self
    }

    pub fn with_tolerances(mut self, primal: f64, dual: f64) -> Self {
        self.tol_primal = primal;
        self.tol_dual = dual;
        self
    }

    pub fn with_prox_mode(mut self, mode: ProxMode) -> Self {
        self.prox_mode = mode;
        self
    }

    pub fn with_history(mut self) -> Self {
        self.record_history = true;
        self
    }
}

/// One recorded ADMM iteration.
#[derive(Debug, Clone, Copy)]
pub struct IterationRecord {
    pub iteration: usize,
    pub objective: f64,
    pub primal: f64,
    pub dual: f64,
}

/// Final internal ADMM state, kept so callers can verify the fixed-point
/// identities: the x-update normal equations use the pre-update multiplier
/// `z^k = z - x + v` and the previous auxiliary iterate `v_prev`.
#[derive(Debug, Clone)]
pub struct AdmmState {
    pub x: DVector<f64>,
    pub v: DVector<f64>,
    pub v_prev: DVector<f64>,
    pub z: DVector<f64>,
}

/// Solver output; also produced by the Block-OMP baseline, which leaves
/// `state` empty and reports its residual in `primal_residual`.
#[derive(Debug, Clone)]
pub struct SolverResult {
    pub x_hat: DVector<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// `lambda ||x_hat||_{2,p}^p + ||y - Phi x_hat||_2^2 / 2` for ADMM;
    /// `||r||_2^2 / 2` for the greedy baseline.
    pub objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub history: Option<Vec<IterationRecord>>,
    pub state: Option<AdmmState>,
    /// Set when a rank-deficient least-squares refit fell back to the
    /// pseudo-inverse (greedy baseline only).
    pub ls_fallback: bool,
}

impl SolverResult {
    /// Writes the recorded history as CSV rows `iteration,objective,primal,dual`.
    pub fn write_history_csv<W: std::io::Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "iteration,objective,primal,dual")?;
        if let Some(history) = &self.history {
            for rec in history {
                writeln!(
                    out,
                    "{},{},{},{}",
                    rec.iteration,
                    crate::sensing::format_g17(rec.objective),
                    crate::sensing::format_g17(rec.primal),
                    crate::sensing::format_g17(rec.dual)
                )?;
            }
        }
        Ok(())
    }
}

/// `lambda ||x||_{2,p}^p + (1/2) ||y - Phi x||_2^2`.
pub fn objective(
    phi: &DMatrix<f64>,
    y: &DVector<f64>,
    part: &BlockPartition,
    x: &DVector<f64>,
    lambda: f64,
    p: f64,
) -> Result<f64> {
    if phi.nrows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: phi.nrows(),
            got: y.len(),
        });
    }
    part.check_len(x.as_slice())?;
    let penalty = mixed_norm_pow(x.as_slice(), part, p)?;
    let r = y - phi * x;
    Ok(lambda * penalty + 0.5 * r.norm_squared())
}

// --- scalar lp proximal operator ---

const NEWTON_TOL: f64 = 1e-14;
const NEWTON_ITERS: usize = 200;

/// Breakeven point: the prox is 0 exactly when `c <= c*(tau, p)`. At `c*`
/// the interior stationary value ties with 0; its magnitude there is
/// `s~ = (2 tau (1-p))^(1/(2-p))`.
fn prox_threshold(tau: f64, p: f64) -> (f64, f64) {
    let s_tilde = (2.0 * tau * (1.0 - p)).powf(1.0 / (2.0 - p));
    let c_star = s_tilde + tau * p * s_tilde.powf(p - 1.0);
    (s_tilde, c_star)
}

/// `argmin_{r >= 0} tau r^p + (c - r)^2 / 2` for `c >= 0`, `tau > 0`,
/// `p` in (0, 1].
///
/// Hard-threshold rule: 0 iff `c <= c*(tau, p)`; otherwise the largest root
/// of `r - c + tau p r^{p-1} = 0`. For `p` exactly 1, 1/2 or 2/3 the known
/// closed forms are used; everything else runs safeguarded Newton.
pub fn prox_scalar(c: f64, tau: f64, p: f64) -> f64 {
    assert!(c >= 0.0 && tau > 0.0 && p > 0.0 && p <= 1.0);
    if p == 1.0 {
        return (c - tau).max(0.0);
    }
    if p == 0.5 {
        return prox_scalar_half(c, tau);
    }
    #[allow(clippy::approx_constant)]
    if p == 2.0 / 3.0 {
        return prox_scalar_two_thirds(c, tau);
    }
    prox_scalar_newton(c, tau, p)
}

/// Newton/bisection reference path for the scalar prox; exposed so the
/// closed forms can be cross-checked against it.
pub fn prox_scalar_newton(c: f64, tau: f64, p: f64) -> f64 {
    assert!(c >= 0.0 && tau > 0.0 && p > 0.0 && p <= 1.0);
    if p == 1.0 {
        return (c - tau).max(0.0);
    }
    let (s_tilde, c_star) = prox_threshold(tau, p);
    if c <= c_star {
        return 0.0;
    }
    // F(r) = r - c + tau p r^{p-1} is increasing on [s_tilde, c] with
    // F(s_tilde) < 0 < F(c): Newton from r = c, bisection as safeguard.
    let f = |r: f64| r - c + tau * p * r.powf(p - 1.0);
    let (mut lo, mut hi) = (s_tilde, c);
    let mut r = c;
    let target = NEWTON_TOL * c.max(1.0);
    for _ in 0..NEWTON_ITERS {
        let fr = f(r);
        if fr.abs() <= target {
            return r;
        }
        if fr < 0.0 {
            lo = r;
        } else {
            hi = r;
        }
        let dfr = 1.0 + tau * p * (p - 1.0) * r.powf(p - 2.0);
        let mut next = r - fr / dfr;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - r).abs() <= f64::EPSILON * r {
            return next;
        }
        r = next;
    }
    r
}

/// Closed form for `p = 1/2`: with `r = sqrt(s)` the stationarity condition
/// becomes the depressed cubic `r^3 - c r + tau/2 = 0`, whose largest root is
/// `2 sqrt(c/3) cos(theta/3)`, `theta = arccos(-(3 sqrt(3) tau) / (4 c^{3/2}))`.
fn prox_scalar_half(c: f64, tau: f64) -> f64 {
    let (_, c_star) = prox_threshold(tau, 0.5);
    if c <= c_star {
        return 0.0;
    }
    let arg = (-(3.0 * 3.0f64.sqrt() * tau) / (4.0 * c.powf(1.5))).clamp(-1.0, 1.0);
    let theta = arg.acos();
    let r = 2.0 * (c / 3.0).sqrt() * (theta / 3.0).cos();
    r * r
}

/// Closed form for `p = 2/3`: with `r = s^(1/3)` stationarity is the quartic
/// `r^4 - c r + 2 tau / 3 = 0`, solved by Ferrari's method through the
/// resolvent cubic `m^3 - (2 tau / 3) m - c^2 / 8 = 0`.
fn prox_scalar_two_thirds(c: f64, tau: f64) -> f64 {
    let p = 2.0 / 3.0;
    let (_, c_star) = prox_threshold(tau, p);
    if c <= c_star {
        return 0.0;
    }
    // real root of the resolvent cubic (discriminant > 0 above threshold);
    // the small Cardano branch is rewritten as b / (q_half + disc) to avoid
    // cancellation when tau is tiny
    let q_half = c * c / 16.0;
    let b = (2.0 * tau / 9.0).powi(3);
    let disc = (q_half * q_half - b).max(0.0).sqrt();
    let m = (q_half + disc).cbrt() + (b / (q_half + disc)).cbrt();
    let sqrt_2m = (2.0 * m).sqrt();
    let inner = (c * std::f64::consts::SQRT_2 / m.sqrt() - 2.0 * m).max(0.0);
    let r = 0.5 * (sqrt_2m + inner.sqrt());
    r * r * r
}

/// Exact block prox: minimizer of `tau ||v||_2^p + ||a - v||_2^2 / 2` over
/// all of R^d. The penalty depends on `v` only through its norm, so the
/// minimizer is the input direction rescaled by the scalar prox of `||a||_2`.
pub fn prox_block(a: &[f64], tau: f64, p: f64) -> Vec<f64> {
    let norm = l2_norm(a);
    if norm == 0.0 {
        return vec![0.0; a.len()];
    }
    let shrunk = prox_scalar(norm, tau, p);
    if shrunk == 0.0 {
        return vec![0.0; a.len()];
    }
    let scale = shrunk / norm;
    a.iter().map(|&v| v * scale).collect()
}

// --- cached x-update factorization ---

enum XUpdate {
    /// Cholesky of `Phi^T Phi + gamma I_N`.
    Direct(Cholesky<f64, Dyn>),
    /// Cholesky of `Phi Phi^T + gamma I_n`; applies the matrix-inversion
    /// identity `(Phi^T Phi + gamma I)^{-1} w = (w - Phi^T (Phi Phi^T +
    /// gamma I)^{-1} Phi w) / gamma`.
    Woodbury(Cholesky<f64, Dyn>),
}

impl XUpdate {
    fn build(phi: &DMatrix<f64>, gamma: f64) -> Result<Self> {
        let (n, big_n) = (phi.nrows(), phi.ncols());
        if n < big_n {
            let mut small = phi * phi.transpose();
            for i in 0..n {
                small[(i, i)] += gamma;
            }
            let chol = Cholesky::new(small).ok_or_else(|| {
                Error::FactorizationFailed("Phi Phi^T + gamma I not positive definite".into())
            })?;
            Ok(XUpdate::Woodbury(chol))
        } else {
            let mut gram = phi.transpose() * phi;
            for i in 0..big_n {
                gram[(i, i)] += gamma;
            }
            let chol = Cholesky::new(gram).ok_or_else(|| {
                Error::FactorizationFailed("Phi^T Phi + gamma I not positive definite".into())
            })?;
            Ok(XUpdate::Direct(chol))
        }
    }

    fn solve(&self, phi: &DMatrix<f64>, gamma: f64, rhs: &DVector<f64>) -> DVector<f64> {
        match self {
            XUpdate::Direct(chol) => chol.solve(rhs),
            XUpdate::Woodbury(chol) => {
                let inner = chol.solve(&(phi * rhs));
                (rhs - phi.transpose() * inner) / gamma
            }
        }
    }
}

/// Runs the ADMM iteration on `min lambda ||x||_{2,p}^p + ||y - Phi x||^2/2`.
///
/// Initialization is the least-squares-flavored warm start
/// `x0 = v0 = Phi^T y / sigma(Phi)^2`, `z0 = 0`. Stops when the primal
/// residual `||x - v||_2 / sqrt(N)` and dual residual
/// `gamma ||v - v_prev||_2 / sqrt(N)` are both below their tolerances, or at
/// `max_iters` with `converged = false`. The returned estimate is the
/// auxiliary iterate `v`, which is exactly block-sparse after the final
/// proximal step.
pub fn admm_solve(
    phi: &DMatrix<f64>,
    y: &DVector<f64>,
    part: &BlockPartition,
    cfg: &AdmmConfig,
) -> Result<SolverResult> {
    cfg.validate()?;
    if phi.ncols() != part.total_dim() {
        return Err(Error::DimensionMismatch {
            expected: part.total_dim(),
            got: phi.ncols(),
        });
    }
    if phi.nrows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: phi.nrows(),
            got: y.len(),
        });
    }

    let big_n = phi.ncols();
    let sqrt_n = (big_n as f64).sqrt();
    let factor = XUpdate::build(phi, cfg.gamma)?;
    let phi_t_y = phi.transpose() * y;

    let sigma = crate::sensing::spectral_norm(phi)?;
    let init_scale = if sigma > 0.0 { 1.0 / (sigma * sigma) } else { 0.0 };
    let mut x = &phi_t_y * init_scale;
    let mut v = x.clone();
    let mut v_prev = v.clone();
    let mut z = DVector::zeros(big_n);

    let mut lambda_eff = cfg.lambda;
    let mut history = cfg.record_history.then(Vec::new);
    let mut converged = false;
    let mut iterations = 0;
    let mut primal = f64::INFINITY;
    let mut dual = f64::INFINITY;

    for k in 0..cfg.max_iters {
        iterations = k + 1;
        let rhs = &phi_t_y - (&z - &v) * cfg.gamma;
        x = factor.solve(phi, cfg.gamma, &rhs);

        let w = &z + &x;
        v_prev = std::mem::replace(&mut v, DVector::zeros(big_n));
        let tau = lambda_eff / cfg.gamma;
        match cfg.prox_mode {
            ProxMode::BlockExact => {
                for b in 0..part.num_blocks() {
                    let range = part.block_range(b);
                    let shrunk = prox_block(&w.as_slice()[range.clone()], tau, cfg.p);
                    v.as_mut_slice()[range].copy_from_slice(&shrunk);
                }
            }
            ProxMode::ElementwiseSurrogate => {
                for i in 0..big_n {
                    let shrunk = prox_block(&w.as_slice()[i..i + 1], tau, cfg.p);
                    v[i] = shrunk[0];
                }
            }
        }

        z += &x - &v;

        if !x.iter().all(|v| v.is_finite())
            || !v.iter().all(|v| v.is_finite())
            || !z.iter().all(|v| v.is_finite())
        {
            return Err(Error::Diverged(iterations));
        }

        primal = (&x - &v).norm() / sqrt_n;
        dual = cfg.gamma * (&v - &v_prev).norm() / sqrt_n;

        if let Some(hist) = history.as_mut() {
            let obj = objective(phi, y, part, &v, lambda_eff, cfg.p)?;
            hist.push(IterationRecord {
                iteration: iterations,
                objective: obj,
                primal,
                dual,
            });
        }

        if primal <= cfg.tol_primal && dual <= cfg.tol_dual {
            converged = true;
            break;
        }

        if let Some(c) = &cfg.continuation {
            lambda_eff = (lambda_eff * c.factor).max(c.floor);
        }
    }

    let obj = objective(phi, y, part, &v, lambda_eff, cfg.p)?;
    Ok(SolverResult {
        x_hat: v.clone(),
        iterations,
        converged,
        objective: obj,
        primal_residual: primal,
        dual_residual: dual,
        history,
        state: Some(AdmmState { x, v, v_prev, z }),
        ls_fallback: false,
    })
}
