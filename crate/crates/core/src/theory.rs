//! Closed-form recovery theory: the threshold root `mu`, the certification
//! threshold `phi(t, p)`, error-bound constants, Gaussian sample-complexity
//! bounds, and exact / Monte-Carlo block restricted-isometry constants.
//!
//! The central certificate is: if the block RIP constant at level
//! `ceil(t*s)` satisfies `delta < phi(t, p)` for some `t` in (1, 2], every
//! block s-sparse signal is stably recovered by the mixed l2/lp program, with
//! an l2 error bounded by `C1 (eps + rho) + C2 ||x_{-max(s)}||_2`.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::block_model::{best_block_approx, mixed_norm_pow, BlockPartition};
use crate::error::{Error, Result};

/// Parameters `(t, p)` of the recovery threshold: `t` in (1, 2] scales the
/// RIP order, `p` in (0, 1] is the mixed-norm exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdParams {
    t: f64,
    p: f64,
}

impl ThresholdParams {
    pub fn new(t: f64, p: f64) -> Result<Self> {
        if !(t > 1.0 && t <= 2.0) || !t.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "t = {t} must lie in (1, 2]"
            )));
        }
        if !(p > 0.0 && p <= 1.0) || !p.is_finite() {
            return Err(Error::ExponentOutOfRange {
                value: p,
                range: "(0, 1]",
            });
        }
        Ok(Self { t, p })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn p(&self) -> f64 {
        self.p
    }
}

/// The threshold equation `g(mu) = (p/2) mu^(2/p) + mu - (2-p) / (2(t-1))`,
/// whose sole positive root defines the recovery threshold.
pub fn threshold_equation(params: &ThresholdParams, mu: f64) -> f64 {
    let (t, p) = (params.t, params.p);
    0.5 * p * mu.powf(2.0 / p) + mu - (2.0 - p) / (2.0 * (t - 1.0))
}

/// The bracket `[(sqrt(1+2p-p^2)-1)/p, (1-(t-sqrt(t^2-t))p)/(t-1)]` stated to
/// contain the root. Returned for diagnostics; the solver falls back to a
/// wider bracket when `g` does not change sign here.
pub fn mu_bracket(params: &ThresholdParams) -> (f64, f64) {
    let (t, p) = (params.t, params.p);
    let lo = ((1.0 + 2.0 * p - p * p).sqrt() - 1.0) / p;
    let hi = (1.0 - (t - (t * t - t).sqrt()) * p) / (t - 1.0);
    (lo, hi)
}

const MU_RESIDUAL_TOL: f64 = 1e-12;
const BISECT_ITERS: usize = 200;

/// Solves `g(mu) = 0` for the sole positive root by bisection.
///
/// Tries the stated bracket first; if `g` has the same sign at both of its
/// endpoints (possible at the boundary cases where an endpoint *is* the
/// root), falls back to `[0, (2-p)/(2(t-1))]`, on which `g` provably changes
/// sign. `g` is strictly increasing for `mu > 0`, so the root is unique.
pub fn solve_mu(params: &ThresholdParams) -> Result<f64> {
    let (lo, hi) = mu_bracket(params);
    if lo.is_finite() && hi.is_finite() && lo <= hi {
        if let Some(mu) = bisect(params, lo, hi) {
            return Ok(mu);
        }
    }
    let hi2 = (2.0 - params.p) / (2.0 * (params.t - 1.0));
    match bisect(params, 0.0, hi2) {
        Some(mu) => Ok(mu),
        None => Err(Error::BracketingFailed {
            lo: 0.0,
            hi: hi2,
            g_lo: threshold_equation(params, 0.0),
            g_hi: threshold_equation(params, hi2),
        }),
    }
}

fn bisect(params: &ThresholdParams, mut lo: f64, mut hi: f64) -> Option<f64> {
    let g_lo = threshold_equation(params, lo);
    let g_hi = threshold_equation(params, hi);
    if g_lo.abs() <= MU_RESIDUAL_TOL {
        return Some(lo);
    }
    if g_hi.abs() <= MU_RESIDUAL_TOL {
        return Some(hi);
    }
    if g_lo.signum() == g_hi.signum() {
        return None;
    }
    // invariant: g(lo) < 0 < g(hi); g is increasing on mu > 0
    if g_lo > 0.0 {
        std::mem::swap(&mut lo, &mut hi);
    }
    for _ in 0..BISECT_ITERS {
        let mid = 0.5 * (lo + hi);
        let g_mid = threshold_equation(params, mid);
        if g_mid.abs() <= MU_RESIDUAL_TOL || (hi - lo).abs() < f64::EPSILON * mid.abs() {
            return Some(mid);
        }
        if g_mid < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// The recovery threshold `phi(t, p) = mu / ((2-p)/(t-1) - mu)`, always in
/// (0, 1) and increasing in `t`.
pub fn phi_threshold(params: &ThresholdParams) -> Result<f64> {
    let mu = solve_mu(params)?;
    Ok(phi_from_mu(params, mu))
}

fn phi_from_mu(params: &ThresholdParams, mu: f64) -> f64 {
    mu / ((2.0 - params.p) / (params.t - 1.0) - mu)
}

/// Error-bound constants `(C1, C2)` for the l2-constrained program:
/// `||x_hat - x||_2 <= C1 (eps + rho) + C2 ||x_{-max(s)}||_2`.
///
/// Requires `delta_ts < phi(t, p)`; both constants grow without bound as
/// `delta_ts` approaches the threshold. The two share their bracketed factor,
/// so `C2 = sigma_phi * C1 + 1` exactly.
pub fn constants_l2(
    params: &ThresholdParams,
    delta_ts: f64,
    sigma_phi: f64,
) -> Result<(f64, f64)> {
    if sigma_phi < 0.0 {
        return Err(Error::InvalidParameter("sigma(Phi) must be >= 0".into()));
    }
    let mu = solve_mu(params)?;
    let phi = phi_from_mu(params, mu);
    let certified = delta_ts < phi; // NaN delta fails certification
    if !certified {
        return Err(Error::NotCertified {
            delta: delta_ts,
            phi,
        });
    }
    let (t, p) = (params.t, params.p);
    let bracket = phi / (phi - delta_ts)
        * ((2.0 - p) * (1.0 - (t - 1.0) * mu) / (2.0 - p - (t - 1.0) * mu))
        * (1.0 + delta_ts).sqrt()
        + phi * ((1.0 - p) / (phi - delta_ts)).sqrt();
    let c1 = std::f64::consts::SQRT_2 * bracket;
    let c2 = sigma_phi * c1 + 1.0;
    Ok((c1, c2))
}

/// Error-bound constants `(D1, D2)` for the Dantzig-selector noise structure
/// (computed as formulas only; that program is not solved here).
/// `D2 = sigma_phi^2 * D1 + 1` exactly.
pub fn constants_ds(
    params: &ThresholdParams,
    delta_ts: f64,
    sigma_phi: f64,
    block_size: usize,
    s: usize,
    total_dim: usize,
) -> Result<(f64, f64)> {
    if sigma_phi < 0.0 {
        return Err(Error::InvalidParameter("sigma(Phi) must be >= 0".into()));
    }
    let ds = block_size * s;
    if ds > total_dim {
        return Err(Error::InvalidParameter(format!(
            "d*s = {ds} exceeds N = {total_dim}"
        )));
    }
    let mu = solve_mu(params)?;
    let phi = phi_from_mu(params, mu);
    let certified = delta_ts < phi;
    if !certified {
        return Err(Error::NotCertified {
            delta: delta_ts,
            phi,
        });
    }
    let (t, p) = (params.t, params.p);
    let ds_f = ds as f64;
    let inner = (2.0 - p) * (1.0 - (t - 1.0) * mu) / (2.0 - p - (t - 1.0) * mu)
        + (1.0 + (total_dim as f64 - ds_f).sqrt()) * (1.0 - p) * phi;
    let d1 = (2.0 * ds_f).sqrt() * phi / (phi - delta_ts) * inner;
    let d2 = sigma_phi * sigma_phi * d1 + 1.0;
    Ok((d1, d2))
}

/// RIP order used for certification: `ceil(t*s)` blocks, rounded with a small
/// guard so products like 1.2 * 5 do not spill over to the next integer.
pub fn rip_level(t: f64, s: usize) -> usize {
    let v = t * s as f64;
    let r = v.round();
    if (v - r).abs() < 1e-9 * (s as f64).max(1.0) {
        r as usize
    } else {
        v.ceil() as usize
    }
}

/// Smallest `n` with `n >= t*s*ln(N/(d*s)) / (phi^2/16 - phi^3/48)`: the
/// Gaussian measurement count that makes the certificate hold with
/// overwhelming probability as the problem grows.
pub fn sample_complexity(
    params: &ThresholdParams,
    s: usize,
    block_size: usize,
    total_dim: usize,
) -> Result<u64> {
    let ds = block_size * s;
    if s == 0 || block_size == 0 {
        return Err(Error::InvalidParameter("s and d must be >= 1".into()));
    }
    if ds >= total_dim {
        return Err(Error::InvalidParameter(format!(
            "d*s = {ds} must be < N = {total_dim}"
        )));
    }
    let phi = phi_threshold(params)?;
    let denom = phi * phi / 16.0 - phi * phi * phi / 48.0;
    let bound = params.t * s as f64 * (total_dim as f64 / ds as f64).ln() / denom;
    Ok(bound.ceil() as u64)
}

/// The certification probability bound
/// `1 - 2 exp{ t*s*(d ln(12/phi) + ln(e/t) + ln(M/s)) - n (phi^2/16 - phi^3/48) }`,
/// returned as-is; it is vacuous (possibly very negative) for small `n`.
pub fn recovery_probability_bound(
    n: usize,
    params: &ThresholdParams,
    s: usize,
    block_size: usize,
    num_blocks: usize,
) -> Result<f64> {
    if s == 0 || s > num_blocks {
        return Err(Error::SparsityOutOfRange { s, m: num_blocks });
    }
    let phi = phi_threshold(params)?;
    let exponent = params.t
        * s as f64
        * (block_size as f64 * (12.0 / phi).ln() + (std::f64::consts::E / params.t).ln()
            + (num_blocks as f64 / s as f64).ln())
        - n as f64 * (phi * phi / 16.0 - phi * phi * phi / 48.0);
    Ok(1.0 - 2.0 * exponent.exp())
}

/// [`recovery_probability_bound`] clamped below at 0 (a probability lower
/// bound below zero carries no information).
pub fn recovery_probability_bound_clamped(
    n: usize,
    params: &ThresholdParams,
    s: usize,
    block_size: usize,
    num_blocks: usize,
) -> Result<f64> {
    Ok(recovery_probability_bound(n, params, s, block_size, num_blocks)?.max(0.0))
}

/// Enumeration cap for the exact RIP computation: supports beyond this count
/// take too long for interactive use; callers switch to the Monte-Carlo
/// lower bound instead.
pub const ENUMERATION_CAP: u128 = 200_000;

fn binomial(m: usize, s: usize) -> u128 {
    if s > m {
        return 0;
    }
    let s = s.min(m - s);
    let mut acc: u128 = 1;
    for i in 0..s {
        acc = acc.saturating_mul((m - i) as u128) / (i + 1) as u128;
    }
    acc
}

/// RIP deviation of one block support: with `G = Phi_S^T Phi_S`,
/// `max(lambda_max(G) - 1, 1 - lambda_min(G))`.
fn support_deviation(gram: &DMatrix<f64>, part: &BlockPartition, support: &[usize]) -> f64 {
    let cols: Vec<usize> = support
        .iter()
        .flat_map(|&b| part.block_range(b))
        .collect();
    let k = cols.len();
    let mut sub = DMatrix::zeros(k, k);
    for (a, &i) in cols.iter().enumerate() {
        for (b, &j) in cols.iter().enumerate() {
            sub[(a, b)] = gram[(i, j)];
        }
    }
    let eigs = sub.symmetric_eigenvalues();
    let lam_max = eigs.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let lam_min = eigs.iter().fold(f64::INFINITY, |m, &v| m.min(v));
    (lam_max - 1.0).max(1.0 - lam_min)
}

fn all_supports(m: usize, s: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..s).collect();
    loop {
        out.push(cur.clone());
        // advance to the next lexicographic s-subset of 0..m
        let mut i = s;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] != i + m - s {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        cur[i] += 1;
        for j in i + 1..s {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

/// Exact block RIP constant at level `s` by enumerating every block support.
///
/// The deviation may exceed 1 for badly scaled matrices; it is reported
/// as-is, since `delta < 1` is a hypothesis of the recovery guarantees, not a
/// property of the data. Errors out when `C(M, s)` exceeds
/// [`ENUMERATION_CAP`].
pub fn block_rip_exact(phi: &DMatrix<f64>, part: &BlockPartition, s: usize) -> Result<f64> {
    let m = part.num_blocks();
    if s == 0 || s > m {
        return Err(Error::SparsityOutOfRange { s, m });
    }
    if phi.ncols() != part.total_dim() {
        return Err(Error::DimensionMismatch {
            expected: part.total_dim(),
            got: phi.ncols(),
        });
    }
    let count = binomial(m, s);
    if count > ENUMERATION_CAP {
        return Err(Error::EnumerationCapExceeded {
            m,
            s,
            count,
            cap: ENUMERATION_CAP,
        });
    }
    let gram = phi.transpose() * phi;
    let supports = all_supports(m, s);
    let delta = supports
        .par_iter()
        .map(|sup| support_deviation(&gram, part, sup))
        .reduce(|| f64::NEG_INFINITY, f64::max);
    Ok(delta)
}

/// Monte-Carlo lower bound on the block RIP constant: the same extremal
/// eigenvalue deviation maximized over `trials` uniformly sampled supports.
///
/// Never exceeds the exact constant; with a fixed seed, growing `trials`
/// extends the same sample stream, so the bound is nondecreasing in
/// `trials`.
pub fn block_rip_monte_carlo(
    phi: &DMatrix<f64>,
    part: &BlockPartition,
    s: usize,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    let m = part.num_blocks();
    if s == 0 || s > m {
        return Err(Error::SparsityOutOfRange { s, m });
    }
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    if phi.ncols() != part.total_dim() {
        return Err(Error::DimensionMismatch {
            expected: part.total_dim(),
            got: phi.ncols(),
        });
    }
    let gram = phi.transpose() * phi;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = f64::NEG_INFINITY;
    for _ in 0..trials {
        let mut sup: Vec<usize> = rand::seq::index::sample(&mut rng, m, s).into_vec();
        sup.sort_unstable();
        best = best.max(support_deviation(&gram, part, &sup));
    }
    Ok(best)
}

/// Outcome of [`error_bound_check`].
#[derive(Debug, Clone, Copy)]
pub struct ErrorBound {
    /// `||x_hat - x||_2`.
    pub lhs: f64,
    /// `C1 (eps + rho) + C2 ||x_{-max(s)}||_2`.
    pub rhs: f64,
    pub holds: bool,
}

/// Evaluates the recovery error bound on a concrete instance.
///
/// `x_hat` must satisfy the two hypotheses the bound rests on: feasibility
/// `||y - Phi x_hat||_2 <= eps` and objective domination
/// `||x_hat||_{2,p}^p <= ||x||_{2,p}^p`. A violated hypothesis is reported
/// as an error naming which one failed; no verdict is produced in that case.
#[allow(clippy::too_many_arguments)]
pub fn error_bound_check(
    phi: &DMatrix<f64>,
    y: &DVector<f64>,
    x_true: &DVector<f64>,
    x_hat: &DVector<f64>,
    part: &BlockPartition,
    s: usize,
    params: &ThresholdParams,
    delta_ts: f64,
    sigma_phi: f64,
    epsilon: f64,
    rho: f64,
) -> Result<ErrorBound> {
    part.check_len(x_true.as_slice())?;
    part.check_len(x_hat.as_slice())?;
    let slack = 1e-12;
    let residual = (y - phi * x_hat).norm();
    if residual > epsilon * (1.0 + slack) + slack {
        return Err(Error::HypothesisViolated {
            which: "feasibility",
            detail: format!("||y - Phi x_hat||_2 = {residual} > eps = {epsilon}"),
        });
    }
    let obj_hat = mixed_norm_pow(x_hat.as_slice(), part, params.p)?;
    let obj_true = mixed_norm_pow(x_true.as_slice(), part, params.p)?;
    if obj_hat > obj_true * (1.0 + slack) + slack {
        return Err(Error::HypothesisViolated {
            which: "objective domination",
            detail: format!("||x_hat||_{{2,p}}^p = {obj_hat} > ||x||_{{2,p}}^p = {obj_true}"),
        });
    }
    let (c1, c2) = constants_l2(params, delta_ts, sigma_phi)?;
    let tail = best_block_approx(x_true.as_slice(), part, s)?;
    let tail_norm = DVector::from_vec(tail.residual).norm();
    let lhs = (x_hat - x_true).norm();
    let rhs = c1 * (epsilon + rho) + c2 * tail_norm;
    Ok(ErrorBound {
        lhs,
        rhs,
        holds: lhs <= rhs,
    })
}

/// How a reported RIP constant was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeltaMethod {
    /// Full support enumeration: the value is the RIP constant.
    Exact,
    /// Sampled supports: the value only bounds the constant from below.
    MonteCarloLowerBound,
}

/// Bundle of every theory quantity for one matrix/configuration, serialized
/// as JSON for the experiment harness.
///
/// `certified` is `delta_estimate < phi`; it is a certificate only when
/// `delta_method` is [`DeltaMethod::Exact`]. A Monte-Carlo lower bound at or
/// above `phi` refutes certification, below `phi` it is inconclusive.
#[derive(Debug, Clone, Serialize)]
pub struct TheoryReport {
    pub t: f64,
    pub p: f64,
    pub mu: f64,
    pub phi: f64,
    pub delta_estimate: f64,
    pub delta_method: DeltaMethod,
    /// RIP order `ceil(t*s)` the estimate refers to.
    pub rip_level: usize,
    pub sigma_phi: f64,
    pub certified: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d2: Option<f64>,
    pub n_required: u64,
    pub probability_bound: f64,
    pub probability_bound_clamped: f64,
}

impl TheoryReport {
    /// Computes every quantity for the given matrix and uniform block
    /// structure. `delta` and its method are supplied by the caller (exact or
    /// Monte-Carlo, whichever was computable).
    #[allow(clippy::too_many_arguments)]
    pub fn build(
        phi_matrix: &DMatrix<f64>,
        part: &BlockPartition,
        s: usize,
        params: &ThresholdParams,
        delta_estimate: f64,
        delta_method: DeltaMethod,
    ) -> Result<Self> {
        let mu = solve_mu(params)?;
        let phi = phi_from_mu(params, mu);
        let sigma_phi = crate::sensing::spectral_norm(phi_matrix)?;
        let certified = delta_estimate < phi;
        let block_size = part.block_sizes()[0];
        let n_required = sample_complexity(params, s, block_size, part.total_dim())?;
        let prob = recovery_probability_bound(
            phi_matrix.nrows(),
            params,
            s,
            block_size,
            part.num_blocks(),
        )?;
        let (c1, c2, d1, d2) = if certified {
            let (c1, c2) = constants_l2(params, delta_estimate, sigma_phi)?;
            let (d1, d2) = constants_ds(
                params,
                delta_estimate,
                sigma_phi,
                block_size,
                s,
                part.total_dim(),
            )?;
            (Some(c1), Some(c2), Some(d1), Some(d2))
        } else {
            (None, None, None, None)
        };
        Ok(TheoryReport {
            t: params.t,
            p: params.p,
            mu,
            phi,
            delta_estimate,
            delta_method,
            rip_level: rip_level(params.t, s),
            sigma_phi,
            certified,
            c1,
            c2,
            d1,
            d2,
            n_required,
            probability_bound: prob,
            probability_bound_clamped: prob.max(0.0),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensing::{generate_matrix, EnsembleKind, MatrixEnsemble};
    use approx::assert_relative_eq;

    #[test]
    fn mu_p1_matches_quadratic_formula() {
        // p = 1: g = mu^2/2 + mu - 1/(2(t-1)), root -1 + sqrt(1 + 1/(t-1)).
        for t in [1.1, 1.25, 1.5, 2.0] {
            let params = ThresholdParams::new(t, 1.0).unwrap();
            let mu = solve_mu(&params).unwrap();
            let oracle = -1.0 + (1.0 + 1.0 / (t - 1.0)).sqrt();
            assert_relative_eq!(mu, oracle, epsilon = 1e-12);
        }
        let mu_t2 = solve_mu(&ThresholdParams::new(2.0, 1.0).unwrap()).unwrap();
        assert_relative_eq!(mu_t2, std::f64::consts::SQRT_2 - 1.0, epsilon = 1e-12);
        let mu_t15 = solve_mu(&ThresholdParams::new(1.5, 1.0).unwrap()).unwrap();
        assert_relative_eq!(mu_t15, 3.0f64.sqrt() - 1.0, epsilon = 1e-12);
    }

    #[test]
    fn mu_residual_small_on_grid() {
        for i in 0..20 {
            for j in 0..20 {
                let t = 1.0 + (i as f64 + 1.0) / 20.0;
                let p = (j as f64 + 1.0) / 20.0;
                let params = ThresholdParams::new(t, p).unwrap();
                let mu = solve_mu(&params).unwrap();
                assert!(
                    threshold_equation(&params, mu).abs() <= 1e-12,
                    "residual at t={t}, p={p}"
                );
            }
        }
    }

    #[test]
    fn phi_closed_forms() {
        let phi_21 = phi_threshold(&ThresholdParams::new(2.0, 1.0).unwrap()).unwrap();
        assert_relative_eq!(phi_21, 1.0 / std::f64::consts::SQRT_2, epsilon = 1e-10);
        let phi_151 = phi_threshold(&ThresholdParams::new(1.5, 1.0).unwrap()).unwrap();
        assert_relative_eq!(phi_151, 1.0 / 3.0f64.sqrt(), epsilon = 1e-10);
        // p = 1 recovers the sharp l1 threshold sqrt((t-1)/t)
        for t in [1.1, 1.25, 1.5, 2.0] {
            let phi = phi_threshold(&ThresholdParams::new(t, 1.0).unwrap()).unwrap();
            assert_relative_eq!(phi, ((t - 1.0) / t).sqrt(), epsilon = 1e-10);
        }
    }

    #[test]
    fn phi_monotone_in_t() {
        for j in 0..5 {
            let p = 0.2 * (j as f64 + 1.0);
            let mut prev = 0.0;
            for i in 0..50 {
                let t = 1.0 + (i as f64 + 1.0) / 50.0;
                let phi = phi_threshold(&ThresholdParams::new(t, p).unwrap()).unwrap();
                assert!(phi > prev, "phi not increasing at t={t}, p={p}");
                assert!(phi > 0.0 && phi < 1.0);
                prev = phi;
            }
        }
    }

    #[test]
    fn constants_identity_and_monotonicity() {
        let params = ThresholdParams::new(2.0, 0.5).unwrap();
        let phi = phi_threshold(&params).unwrap();
        let sigma = 1.7;
        let mut prev_c1 = 0.0;
        for i in 0..20 {
            let delta = phi * (i as f64) / 21.0;
            let (c1, c2) = constants_l2(&params, delta, sigma).unwrap();
            assert!(c1.is_finite() && c1 > 0.0);
            assert_relative_eq!(c2, sigma * c1 + 1.0, max_relative = 1e-14);
            assert!(c1 > prev_c1, "C1 must increase with delta");
            prev_c1 = c1;

            let (d1, d2) = constants_ds(&params, delta, sigma, 2, 3, 64).unwrap();
            assert!(d1.is_finite() && d1 > 0.0);
            assert_relative_eq!(d2, sigma * sigma * d1 + 1.0, max_relative = 1e-14);
        }
        assert!(constants_l2(&params, phi, sigma).is_err());
        assert!(constants_l2(&params, phi + 0.1, sigma).is_err());
    }

    #[test]
    fn c1_delta_zero_matches_direct_substitution() {
        // delta = 0 collapses the formula to
        // sqrt(2) * ((2-p)(1-(t-1)mu)/(2-p-(t-1)mu) + sqrt((1-p)phi)).
        let params = ThresholdParams::new(2.0, 1.0).unwrap();
        let (c1, c2) = constants_l2(&params, 0.0, 1.0).unwrap();
        let mu = solve_mu(&params).unwrap();
        let phi = phi_threshold(&params).unwrap();
        let direct = std::f64::consts::SQRT_2
            * ((2.0 - 1.0) * (1.0 - mu) / (2.0 - 1.0 - mu) + phi * ((1.0 - 1.0) / phi).sqrt());
        assert_relative_eq!(c1, direct, epsilon = 1e-12);
        assert_relative_eq!(c2, c1 + 1.0, epsilon = 1e-12);
    }

    #[test]
    fn rip_level_rounding() {
        assert_eq!(rip_level(2.0, 2), 4);
        assert_eq!(rip_level(1.5, 2), 3);
        assert_eq!(rip_level(1.5, 3), 5); // ceil(4.5)
        assert_eq!(rip_level(1.2, 5), 6); // 6.000000000000001 must not become 7
        assert_eq!(rip_level(1.01, 3), 4); // ceil(3.03)
    }

    #[test]
    fn sample_complexity_asymptotics() {
        // phi -> small: n ~ 16 t s log(N/ds) / phi^2 within 10%.
        // small phi comes from t close to 1.
        let params = ThresholdParams::new(1.0005, 0.5).unwrap();
        let phi = phi_threshold(&params).unwrap();
        assert!(phi <= 0.05, "phi = {phi}");
        let n = sample_complexity(&params, 4, 2, 1024).unwrap() as f64;
        let approx_n = 16.0 * params.t() * 4.0 * (1024.0 / 8.0f64).ln() / (phi * phi);
        assert!(
            (n - approx_n).abs() / approx_n < 0.1,
            "n = {n}, approx = {approx_n}"
        );
    }

    #[test]
    fn sample_complexity_doubling_bracket() {
        let params = ThresholdParams::new(2.0, 0.5).unwrap();
        let n1 = sample_complexity(&params, 8, 2, 4096).unwrap() as f64;
        let n2 = sample_complexity(&params, 16, 2, 4096).unwrap() as f64;
        let ratio = n2 / n1;
        // exact real-valued ratio is 2(1 - ln2 / ln(N/ds)); allow for the
        // integer ceilings on both counts
        let lo = 2.0 * (1.0 - 2.0f64.ln() / (4096.0f64 / 16.0).ln());
        assert!(ratio > lo - 0.02 && ratio <= 2.0 + 1e-9, "ratio = {ratio}");
    }

    #[test]
    fn probability_bound_increasing_in_n() {
        let params = ThresholdParams::new(2.0, 0.5).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for n in (100..2000).step_by(100) {
            let b = recovery_probability_bound(n, &params, 4, 2, 64).unwrap();
            assert!(b > prev);
            prev = b;
        }
        let clamped = recovery_probability_bound_clamped(1, &params, 4, 2, 64).unwrap();
        assert!(clamped >= 0.0);
    }

    #[test]
    fn block_rip_orthonormal_and_scaled_identity() {
        let part = BlockPartition::uniform(2, 3).unwrap();
        let eye = DMatrix::<f64>::identity(6, 6);
        for s in 1..=3 {
            assert_relative_eq!(
                block_rip_exact(&eye, &part, s).unwrap(),
                0.0,
                epsilon = 1e-12
            );
        }
        let scaled = eye * std::f64::consts::SQRT_2;
        assert_relative_eq!(
            block_rip_exact(&scaled, &part, 1).unwrap(),
            1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn block_rip_enumeration_cap() {
        let part = BlockPartition::uniform(1, 100).unwrap();
        let phi = DMatrix::<f64>::identity(100, 100);
        assert!(matches!(
            block_rip_exact(&phi, &part, 50),
            Err(Error::EnumerationCapExceeded { .. })
        ));
    }

    #[test]
    fn monte_carlo_exhaustive_equals_exact() {
        let ens = MatrixEnsemble::new(EnsembleKind::Gaussian, 12, 16, 5).unwrap();
        let phi = generate_matrix(&ens);
        let part = BlockPartition::uniform(2, 8).unwrap();
        let exact = block_rip_exact(&phi, &part, 2).unwrap();
        // C(8,2) = 28; vastly oversample so every support appears
        let mc = block_rip_monte_carlo(&phi, &part, 2, 5000, 1).unwrap();
        assert_relative_eq!(mc, exact, epsilon = 1e-12);
    }

    #[test]
    fn monte_carlo_nested_monotone() {
        let ens = MatrixEnsemble::new(EnsembleKind::Gaussian, 12, 20, 8).unwrap();
        let phi = generate_matrix(&ens);
        let part = BlockPartition::uniform(2, 10).unwrap();
        let mut prev = 0.0;
        for trials in [1, 2, 5, 10, 50, 200] {
            let b = block_rip_monte_carlo(&phi, &part, 2, trials, 77).unwrap();
            assert!(b >= prev);
            prev = b;
        }
    }

    #[test]
    fn all_supports_counts() {
        assert_eq!(all_supports(5, 2).len(), 10);
        assert_eq!(all_supports(6, 3).len(), 20);
        assert_eq!(all_supports(4, 4).len(), 1);
        assert_eq!(all_supports(4, 1).len(), 4);
    }

    #[test]
    fn report_serializes_with_method_tag() {
        let ens = MatrixEnsemble::new(EnsembleKind::Gaussian, 16, 20, 3).unwrap();
        let phi = generate_matrix(&ens);
        let part = BlockPartition::uniform(2, 10).unwrap();
        let params = ThresholdParams::new(2.0, 0.5).unwrap();
        let delta = block_rip_exact(&phi, &part, rip_level(2.0, 1)).unwrap();
        let report =
            TheoryReport::build(&phi, &part, 1, &params, delta, DeltaMethod::Exact).unwrap();
        let json = report.to_json();
        assert!(json.contains("\"delta_method\": \"exact\""));
        assert!(json.contains("\"n_required\""));
    }
}
