//! Block-sparse signal recovery by mixed l2/lp (0 < p <= 1) minimization.
//!
//! A signal `x` of length `N` is split into `M` contiguous blocks by a
//! [`BlockPartition`]; it is *block s-sparse* when at most `s` blocks are
//! nonzero. Given underdetermined linear measurements `y = Phi x + e`, the
//! estimator minimizes the mixed norm power `sum_i ||x[i]||_2^p` subject to a
//! data-fit constraint, or its unconstrained Lagrangian form solved here by
//! ADMM with a nonconvex block proximal step.
//!
//! The crate has three layers:
//!
//! * recovery machinery: [`sensing`] (random ensembles, measurement synthesis),
//!   [`solver`] (ADMM + block lp proximal operators), [`baselines`] (Block-OMP);
//! * closed-form theory: [`theory`] computes the recovery threshold
//!   `phi(t, p)`, the error-bound constants, sample-complexity bounds, and
//!   exact / Monte-Carlo block-RIP constants;
//! * structural tools: [`block_model`] (mixed norms, best block approximation,
//!   inequality oracles) and [`polytope`] (constructive convex decomposition of
//!   block lp-polytope members into block-sparse vectors).

pub mod baselines;
pub mod block_model;
pub mod error;
pub mod polytope;
pub mod problem;
pub mod sensing;
pub mod solver;
pub mod theory;

pub use block_model::{BlockPartition, BlockSupport};
pub use error::{Error, Result};
pub use problem::RecoveryProblem;
