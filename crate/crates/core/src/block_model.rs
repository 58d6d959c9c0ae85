//! Block partitions, mixed l2/lp norms, and best block-s-term approximation.
//!
//! A [`BlockPartition`] divides coordinates `0..N` into `M` contiguous blocks
//! of sizes `d_1, ..., d_M`. The mixed norm power of a vector is
//! `sum_i ||x[i]||_2^p`, where `x[i]` is the slice belonging to block `i`;
//! for `p = 1` this is the classical group/l2-l1 norm, and for `p < 1` the
//! quasi-norm that drives nonconvex block-sparse recovery. The module also
//! carries the two inequality oracles that tests lean on: the power-mean
//! tail bound over nonincreasing sequences ([`cai_zhang_bound`]) and the cone
//! constraint satisfied by any objective-dominating candidate
//! ([`cone_constraint_holds`]).

use crate::error::{Error, Result};

/// Contiguous division of coordinates `0..N` into `M` blocks.
///
/// Stores the block sizes plus their prefix sums, so `block_range(i)` is O(1).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockPartition {
    block_sizes: Vec<usize>,
    /// `offsets[i]` is the first coordinate of block `i`; `offsets[M] = N`.
    offsets: Vec<usize>,
}

impl BlockPartition {
    /// Partition with explicit block sizes; every size must be >= 1.
    pub fn new(block_sizes: Vec<usize>) -> Result<Self> {
        if block_sizes.is_empty() {
            return Err(Error::InvalidParameter(
                "partition needs at least one block".into(),
            ));
        }
        if block_sizes.contains(&0) {
            return Err(Error::InvalidParameter("block sizes must be >= 1".into()));
        }
        let mut offsets = Vec::with_capacity(block_sizes.len() + 1);
        let mut acc = 0usize;
        offsets.push(0);
        for &d in &block_sizes {
            acc += d;
            offsets.push(acc);
        }
        Ok(Self {
            block_sizes,
            offsets,
        })
    }

    /// Uniform partition: `num_blocks` blocks of size `block_size` each.
    pub fn uniform(block_size: usize, num_blocks: usize) -> Result<Self> {
        if block_size == 0 || num_blocks == 0 {
            return Err(Error::InvalidParameter(
                "uniform partition needs block_size >= 1 and num_blocks >= 1".into(),
            ));
        }
        Self::new(vec![block_size; num_blocks])
    }

    /// Number of blocks `M`.
    pub fn num_blocks(&self) -> usize {
        self.block_sizes.len()
    }

    /// Total dimension `N = sum of block sizes`.
    pub fn total_dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    /// Sizes `d_1, ..., d_M`.
    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    /// Coordinate range of block `i`.
    pub fn block_range(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    /// Slice of `x` belonging to block `i`.
    pub fn block<'a>(&self, x: &'a [f64], i: usize) -> &'a [f64] {
        &x[self.block_range(i)]
    }

    /// l2 norms of every block of `x`.
    pub fn block_norms(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x)?;
        Ok((0..self.num_blocks())
            .map(|i| l2_norm(self.block(x, i)))
            .collect())
    }

    pub(crate) fn check_len(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.total_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.total_dim(),
                got: x.len(),
            });
        }
        Ok(())
    }
}

/// Sorted set of block indices, each in `0..M`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockSupport {
    indices: Vec<usize>,
}

impl BlockSupport {
    /// Builds a support from arbitrary-order indices; sorts and rejects
    /// duplicates or out-of-range entries.
    pub fn new(mut indices: Vec<usize>, part: &BlockPartition) -> Result<Self> {
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter(
                "block support has duplicate indices".into(),
            ));
        }
        if let Some(&last) = indices.last() {
            if last >= part.num_blocks() {
                return Err(Error::InvalidParameter(format!(
                    "block index {last} out of range for {} blocks",
                    part.num_blocks()
                )));
            }
        }
        Ok(Self { indices })
    }

    pub fn empty() -> Self {
        Self {
            indices: Vec::new(),
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Block sparsity level of this support.
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }
}

/// Stable two-pass Euclidean norm: scales by the largest magnitude before
/// squaring so large blocks cannot overflow intermediates.
pub(crate) fn l2_norm(v: &[f64]) -> f64 {
    let mut scale = 0.0f64;
    for &x in v {
        let a = x.abs();
        if a > scale {
            scale = a;
        }
    }
    if scale == 0.0 {
        return 0.0;
    }
    let mut sum = 0.0f64;
    for &x in v {
        let r = x / scale;
        sum += r * r;
    }
    scale * sum.sqrt()
}

fn check_exponent(p: f64, lo_open: f64, hi_closed: f64, range: &'static str) -> Result<()> {
    if !(p > lo_open && p <= hi_closed) || !p.is_finite() {
        return Err(Error::ExponentOutOfRange { value: p, range });
    }
    Ok(())
}

/// Mixed l2/lp norm `(sum_i ||x[i]||_2^p)^(1/p)` for `p` in (0, 1].
///
/// For a partition with unit blocks this reduces to the ordinary lp norm of
/// `x`; for `p = 1` it is the sum of block l2 norms.
pub fn mixed_norm(x: &[f64], part: &BlockPartition, p: f64) -> Result<f64> {
    check_exponent(p, 0.0, 1.0, "(0, 1]")?;
    Ok(mixed_norm_pow(x, part, p)?.powf(1.0 / p))
}

/// The p-th power `sum_i ||x[i]||_2^p` directly, avoiding the round trip
/// through the 1/p exponent.
///
/// Accepts `p` in (0, 2]: the recovery objective uses (0, 1], while the
/// energy-bound and theory identities also need the `2 - p` and `2`
/// exponents of the same quantity.
pub fn mixed_norm_pow(x: &[f64], part: &BlockPartition, p: f64) -> Result<f64> {
    check_exponent(p, 0.0, 2.0, "(0, 2]")?;
    part.check_len(x)?;
    let mut acc = 0.0f64;
    for i in 0..part.num_blocks() {
        let norm = l2_norm(part.block(x, i));
        if norm > 0.0 {
            acc += norm.powf(p);
        }
    }
    Ok(acc)
}

/// `||x||_{2,inf}`: the largest block l2 norm.
pub fn block_sup_norm(x: &[f64], part: &BlockPartition) -> Result<f64> {
    part.check_len(x)?;
    Ok((0..part.num_blocks())
        .map(|i| l2_norm(part.block(x, i)))
        .fold(0.0, f64::max))
}

/// Number of blocks with `||x[i]||_2 > tol`; `tol = 0` counts exact nonzeros.
pub fn block_support_size(x: &[f64], part: &BlockPartition, tol: f64) -> Result<usize> {
    part.check_len(x)?;
    if tol < 0.0 {
        return Err(Error::InvalidParameter("tolerance must be >= 0".into()));
    }
    Ok((0..part.num_blocks())
        .filter(|&i| l2_norm(part.block(x, i)) > tol)
        .count())
}

/// Result of [`best_block_approx`]: `principal + residual == x` with disjoint
/// block supports.
#[derive(Debug, Clone)]
pub struct BlockApprox {
    /// `x` restricted to its `s` largest blocks (in l2 norm).
    pub principal: Vec<f64>,
    /// `x` restricted to the complementary blocks.
    pub residual: Vec<f64>,
    /// Indices of the kept blocks.
    pub support: BlockSupport,
}

/// Best block-s-term approximation: keeps the `s` blocks of largest l2 norm.
///
/// Ties in block norm are broken toward the lower block index, so the split
/// is deterministic.
pub fn best_block_approx(x: &[f64], part: &BlockPartition, s: usize) -> Result<BlockApprox> {
    part.check_len(x)?;
    let m = part.num_blocks();
    if s > m {
        return Err(Error::SparsityOutOfRange { s, m });
    }
    let norms = part.block_norms(x)?;
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]).then(a.cmp(&b)));
    let mut kept: Vec<usize> = order[..s].to_vec();
    kept.sort_unstable();

    let mut principal = vec![0.0; x.len()];
    let mut residual = x.to_vec();
    for &i in &kept {
        let range = part.block_range(i);
        principal[range.clone()].copy_from_slice(&x[range.clone()]);
        for r in residual[range].iter_mut() {
            *r = 0.0;
        }
    }
    Ok(BlockApprox {
        principal,
        residual,
        support: BlockSupport { indices: kept },
    })
}

/// Whether `||h_{-max(s)}||_{2,p}^p <= ||h_{max(s)}||_{2,p}^p`.
///
/// Any `h = x_hat - x_max(s)` with `x_hat` dominating the objective of the
/// true signal satisfies this, which is what makes the error analysis go
/// through; the check is evaluated on the p-th powers.
pub fn cone_constraint_holds(h: &[f64], part: &BlockPartition, s: usize, p: f64) -> Result<bool> {
    check_exponent(p, 0.0, 1.0, "(0, 1]")?;
    if s == 0 || s > part.num_blocks() {
        return Err(Error::SparsityOutOfRange {
            s,
            m: part.num_blocks(),
        });
    }
    let split = best_block_approx(h, part, s)?;
    let head = mixed_norm_pow(&split.principal, part, p)?;
    let tail = mixed_norm_pow(&split.residual, part, p)?;
    Ok(tail <= head)
}

/// Both sides of the power-mean tail inequality over a nonincreasing
/// nonnegative sequence: returns
/// `(sum_{j>s} a_j^alpha, s * ((sum_{i<=s} a_i^alpha / s)^(1/alpha) + lambda/s)^alpha)`.
///
/// Under the hypothesis `sum_{i<=s} a_i + lambda >= sum_{i>s} a_i` the first
/// component is bounded by the second for every `alpha >= 1`; no assertion
/// happens here, callers compare the two values.
pub fn cai_zhang_bound(a: &[f64], s: usize, lambda: f64, alpha: f64) -> Result<(f64, f64)> {
    if a.windows(2).any(|w| w[0] < w[1]) || a.iter().any(|&v| v < 0.0) {
        return Err(Error::UnsortedSequence);
    }
    if s == 0 || s > a.len() {
        return Err(Error::SparsityOutOfRange { s, m: a.len() });
    }
    if lambda < 0.0 {
        return Err(Error::InvalidParameter("lambda must be >= 0".into()));
    }
    if alpha < 1.0 {
        return Err(Error::InvalidParameter("alpha must be >= 1".into()));
    }
    let lhs: f64 = a[s..].iter().map(|&v| v.powf(alpha)).sum();
    let head: f64 = a[..s].iter().map(|&v| v.powf(alpha)).sum();
    let s_f = s as f64;
    let rhs = s_f * ((head / s_f).powf(1.0 / alpha) + lambda / s_f).powf(alpha);
    Ok((lhs, rhs))
}
