//! Round data and the exact primal oracle.
//!
//! The action set of a round is a product of simplices with slack,
//! `{x ≥ 0, Σ_{j∈block} x_j ≤ 1}` per block, so a linear score is maximized
//! block by block at a vertex or at the origin.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Deref, Range};

use crate::error::{check_len, Error, Result};
use crate::linalg::{project_capped_simplex, Matrix};

/// Slack allowed when checking that an action lies in its simplex blocks.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Contiguous partition of `0..d` into nonempty blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimplexBlocks {
    offsets: Vec<usize>,
}

impl SimplexBlocks {
    /// `offsets` must start at 0 and be strictly increasing; the last entry is `d`.
    pub fn new(offsets: Vec<usize>) -> Result<Self> {
        if offsets.len() < 2 || offsets[0] != 0 {
            return Err(Error::InvalidParameter(format!(
                "block offsets must start at 0 and contain at least one block, got {offsets:?}"
            )));
        }
        if offsets.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(format!(
                "block offsets must be strictly increasing, got {offsets:?}"
            )));
        }
        Ok(Self { offsets })
    }

    pub fn single(d: usize) -> Result<Self> {
        Self::new(vec![0, d])
    }

    /// `count` consecutive blocks of `width` coordinates each.
    pub fn uniform(count: usize, width: usize) -> Result<Self> {
        Self::new((0..=count).map(|k| k * width).collect())
    }

    pub fn dim(&self) -> usize {
        *self.offsets.last().expect("validated on construction")
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn ranges(&self) -> impl Iterator<Item = Range<usize>> + '_ {
        self.offsets.windows(2).map(|w| w[0]..w[1])
    }
}

/// One round: constraint matrix `A_t` (`m×d`), target `b_t` and reward `u_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundData {
    pub a: Matrix,
    pub b: Vec<f64>,
    pub u: Vec<f64>,
    pub blocks: SimplexBlocks,
}

impl RoundData {
    pub fn new(a: Matrix, b: Vec<f64>, u: Vec<f64>, blocks: SimplexBlocks) -> Result<Self> {
        check_len("target b", a.rows(), b.len())?;
        check_len("reward u", a.cols(), u.len())?;
        check_len("block partition", a.cols(), blocks.dim())?;
        let finite = a.as_slice().iter().chain(&b).chain(&u).all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParameter("round data must be finite".into()));
        }
        Ok(Self { a, b, u, blocks })
    }

    pub fn m(&self) -> usize {
        self.a.rows()
    }

    pub fn d(&self) -> usize {
        self.a.cols()
    }

    pub fn reward(&self, x: &[f64]) -> f64 {
        crate::linalg::dot(&self.u, x)
    }

    /// `u − a_usedᵀλ`, the per-coordinate score of the Lagrangian.
    pub fn scores(&self, a_used: &Matrix, lambda: &[f64]) -> Result<Vec<f64>> {
        if a_used.rows() != self.m() || a_used.cols() != self.d() {
            return Err(Error::DimensionMismatch {
                what: "constraint matrix used by the oracle",
                expected: self.m() * self.d(),
                found: a_used.rows() * a_used.cols(),
            });
        }
        check_len("dual variable", self.m(), lambda.len())?;
        let mut c = a_used.tr_mul_vec(lambda)?;
        for (ci, ui) in c.iter_mut().zip(&self.u) {
            *ci = ui - *ci;
        }
        Ok(c)
    }
}

/// Allocation `x_t ∈ X_t`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ActionVector(Vec<f64>);

impl ActionVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn zeros(d: usize) -> Self {
        Self(vec![0.0; d])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Nonnegative with per-block mass at most one, up to [`FEASIBILITY_TOL`].
    pub fn is_feasible(&self, blocks: &SimplexBlocks) -> bool {
        self.0.len() == blocks.dim()
            && self.0.iter().all(|v| *v >= -FEASIBILITY_TOL)
            && blocks
                .ranges()
                .all(|r| self.0[r].iter().sum::<f64>() <= 1.0 + FEASIBILITY_TOL)
    }
}

impl Deref for ActionVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for ActionVector {
    fn from(values: Vec<f64>) -> Self {
        Self(values)
    }
}

/// Maximizer over the blocks of the linear score `c`: per block, a unit mass on
/// the lowest index attaining a strictly positive maximum, otherwise nothing.
pub fn argmax_scores(blocks: &SimplexBlocks, c: &[f64]) -> ActionVector {
    let mut x = vec![0.0; c.len()];
    for range in blocks.ranges() {
        let mut best = range.start;
        for j in range.clone() {
            if c[j] > c[best] {
                best = j;
            }
        }
        if c[best] > 0.0 {
            x[best] = 1.0;
        }
    }
    ActionVector(x)
}

/// Exact maximizer of `L_t(·, λ)` with `a_used` standing in for `A_t`.
pub fn primal_argmax(round: &RoundData, a_used: &Matrix, lambda: &[f64]) -> Result<ActionVector> {
    let c = round.scores(a_used, lambda)?;
    Ok(argmax_scores(&round.blocks, &c))
}

/// Upper limit on the number of vertex combinations [`brute_force_argmax`] visits.
pub const MAX_ENUMERATION: u128 = 1_000_000;

/// Reference maximizer that enumerates every product of block vertices
/// (origin first, then unit vectors by index) and keeps the first best.
pub fn brute_force_argmax(
    round: &RoundData,
    a_used: &Matrix,
    lambda: &[f64],
) -> Result<ActionVector> {
    let c = round.scores(a_used, lambda)?;
    let ranges: Vec<Range<usize>> = round.blocks.ranges().collect();
    let total = ranges
        .iter()
        .try_fold(1u128, |acc, r| acc.checked_mul(r.len() as u128 + 1))
        .unwrap_or(u128::MAX);
    if total > MAX_ENUMERATION {
        return Err(Error::InstanceTooLarge(total));
    }
    // choice[k] == 0 is the origin of block k, choice[k] == i + 1 puts mass on its i-th coordinate.
    let mut choice = vec![0usize; ranges.len()];
    let mut best_value = f64::NEG_INFINITY;
    let mut best_choice = choice.clone();
    loop {
        let value: f64 = ranges
            .iter()
            .zip(&choice)
            .filter(|(_, k)| **k > 0)
            .map(|(r, k)| c[r.start + k - 1])
            .sum();
        if value > best_value {
            best_value = value;
            best_choice.clone_from(&choice);
        }
        // Odometer over the blocks, last block fastest, so that visits are
        // in lexicographic order of the choice tuple.
        let mut k = ranges.len();
        loop {
            if k == 0 {
                let mut x = vec![0.0; c.len()];
                for (r, k) in ranges.iter().zip(&best_choice) {
                    if *k > 0 {
                        x[r.start + k - 1] = 1.0;
                    }
                }
                return Ok(ActionVector(x));
            }
            k -= 1;
            choice[k] += 1;
            if choice[k] <= ranges[k].len() {
                break;
            }
            choice[k] = 0;
        }
    }
}

/// `A_t x − b_t`.
pub fn residual(round: &RoundData, x: &[f64]) -> Result<Vec<f64>> {
    let mut r = round.a.mul_vec(x)?;
    for (ri, bi) in r.iter_mut().zip(&round.b) {
        *ri -= bi;
    }
    Ok(r)
}

/// Per-block Euclidean projection onto `{v ≥ 0, Σv ≤ 1}`.
pub fn project_block_simplex(blocks: &SimplexBlocks, x: &[f64]) -> Result<ActionVector> {
    check_len("action", blocks.dim(), x.len())?;
    let mut out = x.to_vec();
    for range in blocks.ranges() {
        project_capped_simplex(&mut out[range], 1.0);
    }
    Ok(ActionVector(out))
}
