//! Greedy comparison baseline: Block Orthogonal Matching Pursuit.
//!
//! Selects one block per iteration by the block correlation norm
//! `||Phi[i]^T r||_2`, refits by least squares on the accumulated block
//! support, and stops at the block budget or when the residual drops below
//! tolerance. The non-block greedy baseline is the same routine with a
//! unit-block partition.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::block_model::BlockPartition;
use crate::error::{Error, Result};
use crate::solver::SolverResult;

#[derive(Debug, Clone, Copy)]
pub struct BompConfig {
    /// Block-sparsity budget (at most this many blocks selected).
    pub max_blocks: usize,
    /// Early stop once `||r||_2` falls below this.
    pub residual_tol: f64,
}

impl BompConfig {
    pub fn new(max_blocks: usize, residual_tol: f64) -> Result<Self> {
        if max_blocks == 0 {
            return Err(Error::InvalidParameter("max_blocks must be >= 1".into()));
        }
        if residual_tol < 0.0 {
            return Err(Error::InvalidParameter("residual_tol must be >= 0".into()));
        }
        Ok(Self {
            max_blocks,
            residual_tol,
        })
    }
}

/// Greedy block pursuit. The estimate is the least-squares fit on the
/// selected blocks, zero elsewhere; `converged` reports whether the residual
/// tolerance was reached. Selection stops early rather than letting the
/// accumulated column count exceed the number of measurements.
pub fn block_omp(
    phi: &DMatrix<f64>,
    y: &DVector<f64>,
    part: &BlockPartition,
    cfg: &BompConfig,
) -> Result<SolverResult> {
    let m = part.num_blocks();
    if cfg.max_blocks > m {
        return Err(Error::SparsityOutOfRange {
            s: cfg.max_blocks,
            m,
        });
    }
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

    let n = phi.nrows();
    let mut support: Vec<usize> = Vec::new();
    let mut selected = vec![false; m];
    let mut cols: Vec<usize> = Vec::new();
    let mut residual = y.clone();
    let mut x_hat = DVector::zeros(phi.ncols());
    let mut fallback = false;
    let mut steps = 0;

    while support.len() < cfg.max_blocks && residual.norm() > cfg.residual_tol {
        // block most correlated with the residual
        let mut best: Option<(usize, f64)> = None;
        for (b, &taken) in selected.iter().enumerate() {
            if taken {
                continue;
            }
            let range = part.block_range(b);
            if cols.len() + range.len() > n {
                continue; // refit would be underdetermined
            }
            let corr: f64 = range
                .clone()
                .map(|j| {
                    let c = phi.column(j).dot(&residual);
                    c * c
                })
                .sum::<f64>()
                .sqrt();
            if best.is_none_or(|(_, v)| corr > v) {
                best = Some((b, corr));
            }
        }
        let Some((b, _)) = best else {
            break; // no block fits within the measurement budget
        };
        selected[b] = true;
        support.push(b);
        cols.extend(part.block_range(b));
        steps += 1;

        // least-squares refit on the accumulated support
        let sub = phi.select_columns(cols.iter());
        let coeffs = match solve_least_squares(&sub, y) {
            Some(c) => c,
            None => {
                fallback = true;
                pseudo_inverse_solve(&sub, y)
            }
        };
        x_hat.fill(0.0);
        for (k, &j) in cols.iter().enumerate() {
            x_hat[j] = coeffs[k];
        }
        residual = y - &sub * &coeffs;
    }

    let rnorm = residual.norm();
    Ok(SolverResult {
        x_hat,
        iterations: steps,
        converged: rnorm <= cfg.residual_tol,
        objective: 0.5 * rnorm * rnorm,
        primal_residual: rnorm,
        dual_residual: 0.0,
        history: None,
        state: None,
        ls_fallback: fallback,
    })
}

/// Normal-equations least squares; `None` when the Gram matrix is not
/// positive definite (rank-deficient support).
fn solve_least_squares(a: &DMatrix<f64>, y: &DVector<f64>) -> Option<DVector<f64>> {
    let gram = a.transpose() * a;
    let chol = Cholesky::new(gram)?;
    Some(chol.solve(&(a.transpose() * y)))
}

fn pseudo_inverse_solve(a: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    let svd = a.clone().svd(true, true);
    svd.solve(y, 1e-12).expect("svd solve")
}
