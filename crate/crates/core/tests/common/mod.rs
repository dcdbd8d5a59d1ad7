#![allow(dead_code)]

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use saddleflow_core::linalg::Matrix;
use saddleflow_core::oracle::{RoundData, SimplexBlocks};
use saddleflow_core::penalty::{NormKind, PenaltySpec};

/// Every penalty family in both its symmetric and positive-part form.
pub fn catalog() -> Vec<PenaltySpec> {
    let mut out = Vec::new();
    for base in [
        PenaltySpec::norm(NormKind::L1, 1.5).unwrap(),
        PenaltySpec::norm(NormKind::L2, 1.0).unwrap(),
        PenaltySpec::norm(NormKind::Linf, 2.0).unwrap(),
        PenaltySpec::huber(1.0, 2.0).unwrap(),
    ] {
        out.push(base);
        out.push(base.positive_part());
    }
    out
}

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn uniform_vec(rng: &mut ChaCha20Rng, n: usize, half_width: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-half_width..half_width)).collect()
}

/// Random block partition of `d` coordinates into at most `max_blocks` blocks.
pub fn random_blocks(rng: &mut ChaCha20Rng, d: usize, max_blocks: usize) -> SimplexBlocks {
    let count = rng.random_range(1..=max_blocks.min(d));
    let mut cuts: Vec<usize> = (1..d).collect();
    for i in (1..cuts.len()).rev() {
        cuts.swap(i, rng.random_range(0..=i));
    }
    let mut offsets: Vec<usize> = cuts.into_iter().take(count - 1).collect();
    offsets.push(0);
    offsets.push(d);
    offsets.sort_unstable();
    SimplexBlocks::new(offsets).unwrap()
}

pub fn random_round(rng: &mut ChaCha20Rng, m: usize, d: usize, max_blocks: usize) -> RoundData {
    let a = Matrix::from_row_major(m, d, uniform_vec(rng, m * d, 1.0)).unwrap();
    let b = uniform_vec(rng, m, 1.0);
    let u = uniform_vec(rng, d, 1.0);
    let blocks = random_blocks(rng, d, max_blocks);
    RoundData::new(a, b, u, blocks).unwrap()
}
