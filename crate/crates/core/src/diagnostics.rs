//! Terms of the dynamic regret bound and related checks.
//!
//! For a run `x̂` the regret against the offline optimum satisfies
//!
//! ```text
//! P* − P(x̂) ≤ R_T + S_e + S_A
//! ```
//!
//! with `R_T` the static regret of the dual descent, `S_e = (ε/T)·max_t Ψ_t(e*)`
//! driven by how much the optimal residuals `e*_t` drift, and `S_A` the price
//! of estimating the constraint matrices.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_len, Error, Result};
use crate::linalg::{axpy, norm2};
use crate::offline::{eval_primal, lagrangian, optimal_error_vectors, OfflineSolution};
use crate::online::{compute_bounds, RunTrace, StepSchedule};
use crate::oracle::{primal_argmax, RoundData};
use crate::penalty::PenaltySpec;

/// `Ψ_t(e) = ‖Σ_{j≤t} ((T−t)/T) e_j − Σ_{j>t} (t/T) e_j‖₂` for `1 ≤ t ≤ T−1`.
pub fn psi(e_stack: &[Vec<f64>], t: usize) -> Result<f64> {
    let horizon = e_stack.len();
    if t == 0 || t >= horizon {
        return Err(Error::TimeOutOfRange {
            t,
            max: horizon.saturating_sub(1),
        });
    }
    let m = e_stack[0].len();
    let big_t = horizon as f64;
    let head = (horizon - t) as f64 / big_t;
    let tail = t as f64 / big_t;
    let mut acc = vec![0.0; m];
    for (j, e) in e_stack.iter().enumerate() {
        check_len("error vector", m, e.len())?;
        let w = if j < t { head } else { -tail };
        axpy(w, e, &mut acc);
    }
    Ok(norm2(&acc))
}

/// `max_{1≤t≤T−1} Ψ_t(e)`, zero when `T < 2`.
///
/// Uses `Ψ_t = ‖S_t − (t/T) S_T‖₂` with prefix sums `S_t`, so the whole
/// sweep is linear in `T·m`.
pub fn max_psi(e_stack: &[Vec<f64>]) -> Result<f64> {
    let horizon = e_stack.len();
    if horizon < 2 {
        return Ok(0.0);
    }
    let m = e_stack[0].len();
    let mut total = vec![0.0; m];
    for e in e_stack {
        check_len("error vector", m, e.len())?;
        axpy(1.0, e, &mut total);
    }
    let mut prefix = vec![0.0; m];
    let mut best = 0.0f64;
    let mut diff = vec![0.0; m];
    for (k, e) in e_stack[..horizon - 1].iter().enumerate() {
        axpy(1.0, e, &mut prefix);
        let ratio = (k + 1) as f64 / horizon as f64;
        for ((d, p), s) in diff.iter_mut().zip(&prefix).zip(&total) {
            *d = p - ratio * s;
        }
        best = best.max(norm2(&diff));
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    /// Static dual regret rate `R_T`.
    pub r_t: f64,
    /// `M_e = max_t Ψ_t(e*)`.
    pub m_e: f64,
    pub s_e: f64,
    pub s_a: f64,
    /// `R_T + S_e + S_A`
    pub bound_total: f64,
    /// `best D − P(x̂)`; upper end of the regret interval.
    pub empirical_regret: f64,
    /// `P(x̄) − P(x̂)`; lower end of the regret interval.
    pub empirical_regret_lower: f64,
    /// `[(1/T) Σ D_t(λ̂_t) − P(x̂) − R_T]_+`
    pub lower_bound: f64,
    /// `Σ_{t<T} ‖λ̂_t − λ̂_{t+1}‖₂`
    pub dual_path_variation: f64,
    /// `ε = G Σ_t η_t`
    pub epsilon: f64,
    /// `P(x̂)`
    pub online_value: f64,
    /// Offline bracket `[P(x̄), best D]` around `P*`.
    pub p_star_lower: f64,
    pub p_star_upper: f64,
}

impl BoundReport {
    /// Whether the measured regret (upper end) respects the bound up to `tol`.
    pub fn bound_holds(&self, tol: f64) -> bool {
        self.empirical_regret <= self.bound_total + tol
    }
}

/// Fills every term of the regret bound for one run.
///
/// `S_A` is zero for runs that played with the true matrices. When the
/// matrices were estimated it is `(6 R_λ R_x/√T)[R_A + Σ_{t<T} ‖A_t − A_{t+1}‖_F]`.
pub fn bound_components(
    trace: &RunTrace,
    dataset: &[RoundData],
    spec: &PenaltySpec,
    schedule: &StepSchedule,
    offline: &OfflineSolution,
) -> Result<BoundReport> {
    check_len("trace length", dataset.len(), trace.len())?;
    check_len("schedule horizon", dataset.len(), schedule.horizon)?;
    let horizon = dataset.len() as f64;
    let bounds = compute_bounds(dataset, spec)?;

    let errors = optimal_error_vectors(dataset, offline)?;
    let m_e = max_psi(&errors)?;
    let r_t = schedule.regret_rate();
    let epsilon = schedule.g_bound * schedule.dual_step_sum();
    let s_e = epsilon / horizon * m_e;
    let s_a = if trace.used_estimates() {
        6.0 * schedule.r_lambda * bounds.r_x / libm::sqrt(horizon)
            * (schedule.matrix_radius + matrix_variation(dataset)?)
    } else {
        0.0
    };

    let online_value = eval_primal(dataset, spec, &trace.actions())?;
    let mut dual_sum = 0.0;
    for (round, rec) in dataset.iter().zip(&trace.rounds) {
        let x = primal_argmax(round, &round.a, &rec.lambda_hat)?;
        dual_sum += lagrangian(round, spec, &x, &rec.lambda_hat)?;
    }
    let lower_bound = f64::max(dual_sum / horizon - online_value - r_t, 0.0);

    Ok(BoundReport {
        r_t,
        m_e,
        s_e,
        s_a,
        bound_total: r_t + s_e + s_a,
        empirical_regret: offline.d_value - online_value,
        empirical_regret_lower: offline.p_value - online_value,
        lower_bound,
        dual_path_variation: trace.dual_path_variation(),
        epsilon,
        online_value,
        p_star_lower: offline.p_value,
        p_star_upper: offline.d_value,
    })
}

/// `Σ_{t<T} ‖A_t − A_{t+1}‖_F`
pub fn matrix_variation(dataset: &[RoundData]) -> Result<f64> {
    dataset
        .windows(2)
        .map(|w| w[0].a.frobenius_distance(&w[1].a))
        .sum()
}

/// Both sides of the matrix-tracking inequality
/// `(1/T) Σ ‖Â_t − A_t‖_F ≤ (3/√T)[R_A + Σ_{t<T} ‖A_t − A_{t+1}‖_F]`.
///
/// Rounds without a recorded estimate count as exact.
pub fn matrix_tracking(trace: &RunTrace, dataset: &[RoundData], r_a: f64) -> Result<(f64, f64)> {
    check_len("trace length", dataset.len(), trace.len())?;
    let horizon = dataset.len() as f64;
    let mut tracking = 0.0;
    for (round, rec) in dataset.iter().zip(&trace.rounds) {
        if let Some(a_hat) = &rec.a_hat {
            tracking += a_hat.frobenius_distance(&round.a)?;
        }
    }
    let rhs = 3.0 / libm::sqrt(horizon) * (r_a + matrix_variation(dataset)?);
    Ok((tracking / horizon, rhs))
}

/// `(1/T) Σ [L_t(x̂_t, λ̂_t) − L_t(x̂_t, λ)]` against a fixed comparator `λ ∈ Λ`.
pub fn static_dual_regret(
    trace: &RunTrace,
    dataset: &[RoundData],
    spec: &PenaltySpec,
    comparator: &[f64],
) -> Result<f64> {
    check_len("trace length", dataset.len(), trace.len())?;
    let mut total = 0.0;
    for (round, rec) in dataset.iter().zip(&trace.rounds) {
        total += lagrangian(round, spec, &rec.x_hat, &rec.lambda_hat)?
            - lagrangian(round, spec, &rec.x_hat, comparator)?;
    }
    Ok(total / dataset.len() as f64)
}

/// `√(σ² m T + ω_μ) + √(σ² m T log T)`
pub fn drift_bound_with_omega(sigma: f64, omega_mu: f64, horizon: f64, m: usize) -> f64 {
    let spread = sigma * sigma * m as f64 * horizon;
    libm::sqrt(spread + omega_mu) + libm::sqrt(spread * libm::log(horizon))
}

/// Bound on `E[max_t Ψ_t(e)]` for a sub-Gaussian stack with mean `μ` and
/// variance proxy `σ²`, where `T = μ.len()` and `ω_μ = max_t Ψ_t(μ)²`.
pub fn drift_bound(sigma: f64, mu_stack: &[Vec<f64>], m: usize) -> Result<f64> {
    let omega = max_psi(mu_stack)?;
    Ok(drift_bound_with_omega(
        sigma,
        omega * omega,
        mu_stack.len() as f64,
        m,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEstimate {
    pub empirical_mean: f64,
    pub standard_error: f64,
    pub bound: f64,
}

impl MonteCarloEstimate {
    /// Mean within `allowance` standard errors of the bound.
    pub fn holds(&self, allowance: f64) -> bool {
        self.empirical_mean <= self.bound + allowance * self.standard_error
    }
}

/// Monte Carlo estimate of `E[max_t Ψ_t(e)]` for `e ~ N(μ, σ² I)`.
///
/// Draws come from ChaCha20 seeded with `seed`.
pub fn drift_monte_carlo(
    sigma: f64,
    mu_stack: &[Vec<f64>],
    m: usize,
    n_samples: usize,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    if n_samples < 100 {
        return Err(Error::InvalidParameter(format!(
            "need at least 100 samples, got {n_samples}"
        )));
    }
    if !(sigma >= 0.0) {
        return Err(Error::InvalidParameter(format!("sigma must be nonnegative, got {sigma}")));
    }
    for mu in mu_stack {
        check_len("mean vector", m, mu.len())?;
    }
    let bound = drift_bound(sigma, mu_stack, m)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut sample = mu_stack.to_vec();
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..n_samples {
        for (e, mu) in sample.iter_mut().zip(mu_stack) {
            for (ei, mi) in e.iter_mut().zip(mu) {
                let z: f64 = StandardNormal.sample(&mut rng);
                *ei = mi + sigma * z;
            }
        }
        let v = max_psi(&sample)?;
        sum += v;
        sum_sq += v * v;
    }
    let n = n_samples as f64;
    let mean = sum / n;
    let variance = f64::max(sum_sq / n - mean * mean, 0.0) * n / (n - 1.0);
    Ok(MonteCarloEstimate {
        empirical_mean: mean,
        standard_error: libm::sqrt(variance / n),
        bound,
    })
}
