//! Bundled recovery instance handed between the generators, the solver, and
//! the theory checks.

use nalgebra::{DMatrix, DVector};

use crate::block_model::BlockPartition;
use crate::error::{Error, Result};
use crate::sensing::NoiseModel;

/// One recovery problem: measurement matrix, observation, block structure,
/// exponent, and the noise model that produced the observation.
///
/// The exponent is validated once here so downstream hot loops can assume
/// `p` is in (0, 1].
#[derive(Debug, Clone)]
pub struct RecoveryProblem {
    phi: DMatrix<f64>,
    y: DVector<f64>,
    partition: BlockPartition,
    p: f64,
    noise: NoiseModel,
}

impl RecoveryProblem {
    pub fn new(
        phi: DMatrix<f64>,
        y: DVector<f64>,
        partition: BlockPartition,
        p: f64,
        noise: NoiseModel,
    ) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) || !p.is_finite() {
            return Err(Error::ExponentOutOfRange {
                value: p,
                range: "(0, 1]",
            });
        }
        if phi.ncols() != partition.total_dim() {
            return Err(Error::DimensionMismatch {
                expected: partition.total_dim(),
                got: phi.ncols(),
            });
        }
        if phi.nrows() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: phi.nrows(),
                got: y.len(),
            });
        }
        Ok(Self {
            phi,
            y,
            partition,
            p,
            noise,
        })
    }

    pub fn phi(&self) -> &DMatrix<f64> {
        &self.phi
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn partition(&self) -> &BlockPartition {
        &self.partition
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }
}
