//! Random measurement ensembles, block-sparse test signals, and noisy
//! measurement synthesis.
//!
//! All generators are pure functions of their parameters and a 64-bit seed;
//! matrices are filled in row-major order from a ChaCha stream, so a given
//! `(ensemble, seed)` pair reproduces the same matrix bit for bit.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::io::{BufRead, Write};

use crate::block_model::{BlockPartition, BlockSupport};
use crate::error::{Error, Result};

/// Entry distribution of the measurement matrix; every variant has mean 0 and
/// variance `1/n` so that columns have unit expected squared norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnsembleKind {
    /// i.i.d. N(0, 1/n).
    Gaussian,
    /// +-1/sqrt(n), each with probability 1/2.
    Rademacher,
    /// +-sqrt(3/n) with probability 1/6 each, 0 with probability 2/3.
    SparseTernary,
}

/// Specification of a random `n x N` measurement matrix.
#[derive(Debug, Clone)]
pub struct MatrixEnsemble {
    pub kind: EnsembleKind,
    /// Rows (number of measurements).
    pub n_rows: usize,
    /// Columns (signal dimension N).
    pub n_cols: usize,
    pub seed: u64,
    /// Post-process: replace the rows by an orthonormal basis of their span
    /// (QR of the transpose). Off by default; the plain ensemble is the
    /// reference definition.
    pub orthonormal_rows: bool,
}

impl MatrixEnsemble {
    pub fn new(kind: EnsembleKind, n_rows: usize, n_cols: usize, seed: u64) -> Result<Self> {
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::InvalidParameter(
                "matrix dimensions must be >= 1".into(),
            ));
        }
        Ok(Self {
            kind,
            n_rows,
            n_cols,
            seed,
            orthonormal_rows: false,
        })
    }

    pub fn with_orthonormal_rows(mut self, flag: bool) -> Self {
        self.orthonormal_rows = flag;
        self
    }
}

/// Draws the matrix described by `ens`. Deterministic given the seed.
pub fn generate_matrix(ens: &MatrixEnsemble) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(ens.seed);
    let n = ens.n_rows as f64;
    let total = ens.n_rows * ens.n_cols;
    let mut data = Vec::with_capacity(total);
    match ens.kind {
        EnsembleKind::Gaussian => {
            let scale = 1.0 / n.sqrt();
            for _ in 0..total {
                let z: f64 = StandardNormal.sample(&mut rng);
                data.push(z * scale);
            }
        }
        EnsembleKind::Rademacher => {
            let mag = 1.0 / n.sqrt();
            for _ in 0..total {
                let up: bool = rng.random();
                data.push(if up { mag } else { -mag });
            }
        }
        EnsembleKind::SparseTernary => {
            let mag = (3.0 / n).sqrt();
            for _ in 0..total {
                let u: f64 = rng.random();
                data.push(if u < 1.0 / 6.0 {
                    mag
                } else if u < 1.0 / 3.0 {
                    -mag
                } else {
                    0.0
                });
            }
        }
    }
    let phi = DMatrix::from_row_slice(ens.n_rows, ens.n_cols, &data);
    if ens.orthonormal_rows {
        orthonormalize_rows(&phi)
    } else {
        phi
    }
}

/// Replaces the rows of `phi` by the Q factor of a QR decomposition of its
/// transpose, i.e. an orthonormal basis of the row space. Requires
/// `n_rows <= n_cols` and full row rank (almost sure for random draws).
pub fn orthonormalize_rows(phi: &DMatrix<f64>) -> DMatrix<f64> {
    let qr = phi.transpose().qr();
    qr.q().transpose()
}

/// Additive measurement noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseModel {
    None,
    /// i.i.d. N(0, level^2) per entry.
    GaussianL2 { level: f64 },
}

impl NoiseModel {
    /// `level = 0` collapses to `None`, keeping "no noise iff level 0".
    pub fn gaussian(level: f64) -> Result<Self> {
        if level < 0.0 || !level.is_finite() {
            return Err(Error::InvalidParameter(
                "noise level must be finite and >= 0".into(),
            ));
        }
        if level == 0.0 {
            Ok(NoiseModel::None)
        } else {
            Ok(NoiseModel::GaussianL2 { level })
        }
    }

    pub fn level(&self) -> f64 {
        match self {
            NoiseModel::None => 0.0,
            NoiseModel::GaussianL2 { level } => *level,
        }
    }
}

/// Draws a block-sparse signal: exactly `s` blocks chosen uniformly at
/// random, nonzero entries i.i.d. standard normal. Returns the signal and
/// its true support. `s = 0` yields the zero vector.
pub fn generate_block_sparse_signal(
    part: &BlockPartition,
    s: usize,
    seed: u64,
) -> Result<(DVector<f64>, BlockSupport)> {
    let m = part.num_blocks();
    if s > m {
        return Err(Error::SparsityOutOfRange { s, m });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = DVector::zeros(part.total_dim());
    if s == 0 {
        return Ok((x, BlockSupport::empty()));
    }
    let mut chosen: Vec<usize> = rand::seq::index::sample(&mut rng, m, s).into_vec();
    chosen.sort_unstable();
    for &i in &chosen {
        for j in part.block_range(i) {
            x[j] = StandardNormal.sample(&mut rng);
        }
    }
    let support = BlockSupport::new(chosen, part)?;
    Ok((x, support))
}

/// Synthesizes `y = Phi x + e` and reports the realized noise norm `||e||_2`
/// (the rho that theory checks consume).
pub fn measure(
    phi: &DMatrix<f64>,
    x: &DVector<f64>,
    noise: &NoiseModel,
    seed: u64,
) -> Result<(DVector<f64>, f64)> {
    if phi.ncols() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: phi.ncols(),
            got: x.len(),
        });
    }
    let mut y = phi * x;
    let realized = match noise {
        NoiseModel::None => 0.0,
        NoiseModel::GaussianL2 { level } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut sq = 0.0f64;
            for yi in y.iter_mut() {
                let e: f64 = StandardNormal.sample(&mut rng);
                let e = e * level;
                *yi += e;
                sq += e * e;
            }
            sq.sqrt()
        }
    };
    Ok((y, realized))
}

const POWER_ITER_CAP: usize = 100_000;

/// Largest singular value of `phi`: the smallest constant `sigma` with
/// `||Phi v||_2 <= sigma ||v||_2` for all `v`.
///
/// Power iteration on the Gram operator `v -> Phi^T (Phi v)` from a fixed
/// seeded start vector; the Rayleigh-quotient estimate stops once its
/// relative change falls below 1e-13.
pub fn spectral_norm(phi: &DMatrix<f64>) -> Result<f64> {
    if phi.nrows() == 0 || phi.ncols() == 0 {
        return Err(Error::InvalidParameter("empty matrix".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_5eed);
    let mut v = DVector::from_fn(phi.ncols(), |_, _| StandardNormal.sample(&mut rng));
    v /= v.norm();

    let mut prev = f64::INFINITY;
    for iter in 0..POWER_ITER_CAP {
        let u = phi * &v;
        let w = phi.transpose() * u;
        let lambda = v.dot(&w); // Rayleigh quotient for Phi^T Phi
        let wn = w.norm();
        if wn == 0.0 {
            return Ok(0.0);
        }
        v = w / wn;
        let sigma = lambda.max(0.0).sqrt();
        if iter >= 4 && (sigma - prev).abs() <= 1e-13 * sigma.max(1.0) {
            return Ok(sigma);
        }
        prev = sigma;
    }
    Err(Error::PowerIterationStalled(POWER_ITER_CAP))
}

// --- CSV interop (row-major, 17-significant-digit formatting) ---

/// Formats like C's `%.17g`: 17 significant digits, fixed notation when the
/// decimal exponent is in [-4, 17), scientific otherwise, trailing zeros
/// trimmed. 17 digits round-trip every finite f64.
pub fn format_g17(x: f64) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0" } else { "0" }.to_string();
    }
    let sci = format!("{:.16e}", x);
    let (mantissa, exp_str) = sci.split_once('e').expect("scientific form has exponent");
    let exp: i32 = exp_str.parse().expect("exponent is an integer");
    if (-4..17).contains(&exp) {
        let decimals = (16 - exp).max(0) as usize;
        trim_trailing_zeros(format!("{:.*}", decimals, x))
    } else {
        let mant = trim_trailing_zeros(mantissa.to_string());
        format!("{}e{}{:02}", mant, if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_trailing_zeros(mut s: String) -> String {
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    s
}

/// Writes `m` as CSV, one row per line.
pub fn write_matrix_csv<W: Write>(m: &DMatrix<f64>, out: &mut W) -> Result<()> {
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format_g17(m[(i, j)])).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// Writes a vector as a single CSV row.
pub fn write_vector_csv<W: Write>(v: &DVector<f64>, out: &mut W) -> Result<()> {
    let row: Vec<String> = v.iter().map(|&x| format_g17(x)).collect();
    writeln!(out, "{}", row.join(","))?;
    Ok(())
}

/// Reads a CSV matrix written by [`write_matrix_csv`]; all rows must have the
/// same number of fields.
pub fn read_matrix_csv<R: BufRead>(input: R) -> Result<DMatrix<f64>> {
    let mut data: Vec<f64> = Vec::new();
    let mut ncols = None;
    let mut nrows = 0;
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<f64> = line
            .split(',')
            .map(|f| {
                let f = f.trim();
                match f {
                    "inf" => Ok(f64::INFINITY),
                    "-inf" => Ok(f64::NEG_INFINITY),
                    "nan" => Ok(f64::NAN),
                    _ => f
                        .parse::<f64>()
                        .map_err(|e| Error::Parse(format!("bad float {f:?}: {e}"))),
                }
            })
            .collect::<Result<_>>()?;
        match ncols {
            None => ncols = Some(fields.len()),
            Some(c) if c != fields.len() => {
                return Err(Error::Parse(format!(
                    "ragged CSV: row {nrows} has {} fields, expected {c}",
                    fields.len()
                )));
            }
            _ => {}
        }
        data.extend_from_slice(&fields);
        nrows += 1;
    }
    let ncols = ncols.ok_or_else(|| Error::Parse("empty CSV".into()))?;
    Ok(DMatrix::from_row_slice(nrows, ncols, &data))
}

/// Reads a one-row CSV vector.
pub fn read_vector_csv<R: BufRead>(input: R) -> Result<DVector<f64>> {
    let m = read_matrix_csv(input)?;
    if m.nrows() != 1 {
        return Err(Error::Parse(format!(
            "expected a single CSV row, got {}",
            m.nrows()
        )));
    }
    Ok(DVector::from_row_slice(m.row(0).transpose().as_slice()))
}
