//! Seeded synthetic instances.
//!
//! Each round draws `A_t` (`m×d`), `b_t` and `u_t` with i.i.d. entries from one
//! of four laws and rescales them to `‖A_t‖_F = ‖b_t‖₂ = ‖u_t‖₂ = 1`.
//!
//! Randomness: round `t` (0-based) uses `ChaCha20Rng::seed_from_u64(seed)`
//! switched to stream `t`, and draws `A_t` row-major, then `b_t`, then `u_t`.
//! Rounds are therefore independent of the horizon, and a longer dataset with
//! the same seed extends a shorter one.

use alloc::format;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Cauchy, Distribution as _, Gamma, StandardNormal, Uniform};

use crate::error::{Error, Result};
use crate::linalg::{norm2, Matrix};
use crate::oracle::{RoundData, SimplexBlocks};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Distribution {
    /// Standard normal.
    Gaussian,
    /// Standard Cauchy, unclipped.
    Cauchy,
    /// Uniform on `(−1, 1)`.
    Uniform,
    /// Gamma with shape 2 and scale 2.
    Gamma,
}

impl Distribution {
    pub const ALL: [Distribution; 4] = [
        Distribution::Gaussian,
        Distribution::Cauchy,
        Distribution::Uniform,
        Distribution::Gamma,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Distribution::Gaussian => "gaussian",
            Distribution::Cauchy => "cauchy",
            Distribution::Uniform => "uniform",
            Distribution::Gamma => "gamma",
        }
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Distribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Distribution::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown distribution {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub distribution: Distribution,
    pub m: usize,
    pub blocks: SimplexBlocks,
    pub horizon: usize,
    pub seed: u64,
}

impl GeneratorConfig {
    /// One simplex block over all `d` coordinates.
    pub fn single_block(
        distribution: Distribution,
        m: usize,
        d: usize,
        horizon: usize,
        seed: u64,
    ) -> Result<Self> {
        Ok(Self {
            distribution,
            m,
            blocks: SimplexBlocks::single(d)?,
            horizon,
            seed,
        })
    }

    pub fn d(&self) -> usize {
        self.blocks.dim()
    }
}

struct Sampler {
    distribution: Distribution,
    uniform: Uniform<f64>,
    cauchy: Cauchy<f64>,
    gamma: Gamma<f64>,
}

impl Sampler {
    fn new(distribution: Distribution) -> Self {
        Self {
            distribution,
            uniform: Uniform::new(-1.0, 1.0).expect("valid bounds"),
            cauchy: Cauchy::new(0.0, 1.0).expect("valid scale"),
            gamma: Gamma::new(2.0, 2.0).expect("valid shape and scale"),
        }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.distribution {
            Distribution::Gaussian => StandardNormal.sample(rng),
            Distribution::Cauchy => self.cauchy.sample(rng),
            Distribution::Uniform => self.uniform.sample(rng),
            Distribution::Gamma => self.gamma.sample(rng),
        }
    }

    /// `n` draws rescaled to unit Euclidean norm; redrawn on a zero norm.
    fn unit<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<f64> {
        loop {
            let mut v: Vec<f64> = (0..n).map(|_| self.draw(rng)).collect();
            let norm = norm2(&v);
            if norm > 0.0 && norm.is_finite() {
                v.iter_mut().for_each(|x| *x /= norm);
                return v;
            }
        }
    }
}

/// The random generator of round `t` (0-based).
pub fn round_rng(seed: u64, t: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(t as u64);
    rng
}

pub fn generate(config: &GeneratorConfig) -> Result<Vec<RoundData>> {
    if config.m == 0 || config.horizon == 0 {
        return Err(Error::InvalidParameter(format!(
            "m and T must be positive, got m={} T={}",
            config.m, config.horizon
        )));
    }
    let sampler = Sampler::new(config.distribution);
    let (m, d) = (config.m, config.d());
    (0..config.horizon)
        .map(|t| {
            let mut rng = round_rng(config.seed, t);
            let a = Matrix::from_row_major(m, d, sampler.unit(&mut rng, m * d))?;
            let b = sampler.unit(&mut rng, m);
            let u = sampler.unit(&mut rng, d);
            RoundData::new(a, b, u, config.blocks.clone())
        })
        .collect()
}

/// Rounds whose matrices drift slowly: `A_1` is drawn as in [`generate`] and
/// `A_{t+1} = normalize(A_t + drift · N)` with `N` standard Gaussian.
///
/// Round `t ≥ 1` draws `N` row-major from its own stream, then `b_t`, then
/// `u_t` (the latter two from the configured law, normalized).
pub fn generate_drifting(config: &GeneratorConfig, drift: f64) -> Result<Vec<RoundData>> {
    if !(drift.is_finite() && drift >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "drift must be nonnegative, got {drift}"
        )));
    }
    let first = generate(&GeneratorConfig {
        horizon: 1,
        ..config.clone()
    })?;
    let sampler = Sampler::new(config.distribution);
    let mut rounds = Vec::with_capacity(config.horizon);
    let mut a = first[0].a.clone();
    rounds.extend(first);
    for t in 1..config.horizon {
        let mut rng = round_rng(config.seed, t);
        let mut next = a.clone();
        for v in next.as_mut_slice() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *v += drift * z;
        }
        let norm = next.frobenius_norm();
        if norm > 0.0 {
            next.scale(1.0 / norm);
        }
        a = next;
        let b = sampler.unit(&mut rng, config.m);
        let u = sampler.unit(&mut rng, config.d());
        rounds.push(RoundData::new(a.clone(), b, u, config.blocks.clone())?);
    }
    Ok(rounds)
}

/// Raw (unnormalized) draws, exposed for distribution checks.
pub fn raw_draws(distribution: Distribution, seed: u64, n: usize) -> Vec<f64> {
    let sampler = Sampler::new(distribution);
    let mut rng = round_rng(seed, 0);
    (0..n).map(|_| sampler.draw(&mut rng)).collect()
}
