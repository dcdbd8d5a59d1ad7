//! Online primal-dual algorithms.
//!
//! Each round the player sees `L_t` (1-lookahead), plays the exact maximizer
//! `x̂_t` of `L_t(·, λ̂_t)` and then takes a projected gradient step on the
//! dual (0-lookahead):
//!
//! ```text
//! λ̂_{t+1} = Π_Λ[λ̂_t − η_t(−(A_t x̂_t − b_t) + ∇E*(λ̂_t))]
//! ```
//!
//! When `A_t` is only revealed after playing, the maximizer uses an estimate
//! `Â_t` tracked by projected subgradient descent on `‖A_t − ·‖_F`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_len, Error, Result};
use crate::linalg::{axpy, dot, norm2, Matrix};
use crate::oracle::{primal_argmax, project_block_simplex, residual, ActionVector, RoundData};
use crate::penalty::{DualVector, PenaltySpec, DOMAIN_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DualMode {
    /// `η_t = 2R_λ/(G√T)` for every round.
    ConvexFixed,
    /// `η_t = 1/(κt)`; needs `κ > 0`.
    StronglyConvex,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSchedule {
    pub dual_mode: DualMode,
    /// `G`, bound on `‖∇_λ L_t‖₂`.
    pub g_bound: f64,
    /// Strong-convexity modulus of `L_t(x, ·)`.
    pub kappa: f64,
    /// Euclidean radius of the dual domain.
    pub r_lambda: f64,
    pub horizon: usize,
    /// `R_A`, radius of the Frobenius ball holding the matrix estimates.
    pub matrix_radius: f64,
}

impl StepSchedule {
    pub fn new(
        dual_mode: DualMode,
        g_bound: f64,
        kappa: f64,
        r_lambda: f64,
        horizon: usize,
        matrix_radius: f64,
    ) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidParameter("horizon must be positive".into()));
        }
        if !(g_bound.is_finite() && g_bound > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "gradient bound G must be positive, got {g_bound}"
            )));
        }
        if !(r_lambda.is_finite() && r_lambda > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "dual radius must be positive, got {r_lambda}"
            )));
        }
        if !(matrix_radius.is_finite() && matrix_radius >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "matrix radius must be nonnegative, got {matrix_radius}"
            )));
        }
        if dual_mode == DualMode::StronglyConvex && !(kappa.is_finite() && kappa > 0.0) {
            return Err(Error::InvalidParameter(
                "strongly convex steps need a positive modulus".into(),
            ));
        }
        Ok(Self {
            dual_mode,
            g_bound,
            kappa,
            r_lambda,
            horizon,
            matrix_radius,
        })
    }

    /// Default schedule for `spec`: strongly convex steps whenever `E*` is
    /// strongly convex, the fixed convex step otherwise.
    pub fn for_penalty(spec: &PenaltySpec, bounds: &RunBounds, m: usize, horizon: usize) -> Result<Self> {
        let kappa = spec.strong_convexity();
        let mode = if kappa > 0.0 {
            DualMode::StronglyConvex
        } else {
            DualMode::ConvexFixed
        };
        Self::new(
            mode,
            bounds.g_bound,
            kappa,
            spec.dual_radius(m),
            horizon,
            bounds.r_a,
        )
    }

    /// Dual step `η_t`, `t` counted from 1.
    pub fn dual_step(&self, t: usize) -> f64 {
        match self.dual_mode {
            DualMode::ConvexFixed => {
                2.0 * self.r_lambda / (self.g_bound * libm::sqrt(self.horizon as f64))
            }
            DualMode::StronglyConvex => 1.0 / (self.kappa * t as f64),
        }
    }

    /// Matrix step `ν_t = R_A/√t`.
    pub fn matrix_step(&self, t: usize) -> f64 {
        self.matrix_radius / libm::sqrt(t as f64)
    }

    /// `Σ_{t≤T} η_t`.
    pub fn dual_step_sum(&self) -> f64 {
        (1..=self.horizon).map(|t| self.dual_step(t)).sum()
    }

    /// Static dual regret rate `R_T` matching the step rule.
    pub fn regret_rate(&self) -> f64 {
        let t = self.horizon as f64;
        match self.dual_mode {
            DualMode::ConvexFixed => 2.0 * self.r_lambda * self.g_bound / libm::sqrt(t),
            DualMode::StronglyConvex => {
                self.g_bound * self.g_bound / (2.0 * self.kappa * t)
                    * libm::log(core::f64::consts::E * t)
            }
        }
    }
}

/// Constants of a dataset that enter the step sizes and the regret bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunBounds {
    /// `G ≥ ‖∇_λ L_t(x, λ)‖₂` over all rounds, actions and dual variables.
    pub g_bound: f64,
    /// `R_x ≥ ‖x‖₂` over all action sets.
    pub r_x: f64,
    /// `R_A = max_t ‖A_t‖_F`.
    pub r_a: f64,
    pub b_max: f64,
}

pub fn compute_bounds(dataset: &[RoundData], spec: &PenaltySpec) -> Result<RunBounds> {
    let m = check_dataset(dataset)?;
    let r_x = dataset
        .iter()
        .map(|r| libm::sqrt(r.blocks.len() as f64))
        .fold(0.0, f64::max);
    let mut r_a = 0.0f64;
    let mut b_max = 0.0f64;
    let mut residual_bound = 0.0f64;
    for round in dataset {
        let a = round.a.frobenius_norm();
        let b = norm2(&round.b);
        r_a = r_a.max(a);
        b_max = b_max.max(b);
        residual_bound = residual_bound.max(a * r_x + b);
    }
    let conjugate_gradient = spec.dual_radius(m) * spec.strong_convexity();
    Ok(RunBounds {
        g_bound: residual_bound + conjugate_gradient,
        r_x,
        r_a,
        b_max,
    })
}

/// Returns the common constraint dimension `m`.
pub(crate) fn check_dataset(dataset: &[RoundData]) -> Result<usize> {
    let first = dataset.first().ok_or(Error::EmptyDataset)?;
    let m = first.m();
    for round in dataset {
        check_len("constraint rows", m, round.m())?;
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub x_hat: ActionVector,
    /// Dual variable the action was computed with.
    pub lambda_hat: DualVector,
    /// Matrix estimate the action was computed with (estimated-matrix runs only).
    pub a_hat: Option<Matrix>,
    /// `A_t x̂_t − b_t` with the true matrix.
    pub residual_true: Vec<f64>,
    /// `u_tᵀx̂_t`
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub rounds: Vec<RoundRecord>,
}

impl RunTrace {
    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    pub fn actions(&self) -> Vec<ActionVector> {
        self.rounds.iter().map(|r| r.x_hat.clone()).collect()
    }

    pub fn mean_reward(&self) -> f64 {
        self.rounds.iter().map(|r| r.reward).sum::<f64>() / self.len().max(1) as f64
    }

    /// `(1/T) Σ (A_t x̂_t − b_t)`
    pub fn mean_residual(&self) -> Vec<f64> {
        let m = self.rounds.first().map_or(0, |r| r.residual_true.len());
        let mut acc = vec![0.0; m];
        for r in &self.rounds {
            axpy(1.0, &r.residual_true, &mut acc);
        }
        let n = self.len().max(1) as f64;
        acc.iter_mut().for_each(|v| *v /= n);
        acc
    }

    /// `Σ_{t<T} ‖λ̂_t − λ̂_{t+1}‖₂`
    pub fn dual_path_variation(&self) -> f64 {
        self.rounds
            .windows(2)
            .map(|w| crate::linalg::distance2(&w[0].lambda_hat, &w[1].lambda_hat))
            .sum()
    }

    pub fn used_estimates(&self) -> bool {
        self.rounds.iter().any(|r| r.a_hat.is_some())
    }
}

/// Online saddle-point optimization with the true `A_t` available before playing.
pub fn run_saddle_point(
    dataset: &[RoundData],
    spec: &PenaltySpec,
    schedule: &StepSchedule,
    lambda_init: &DualVector,
) -> Result<RunTrace> {
    run_primal_dual(dataset, spec, schedule, lambda_init, None)
}

/// Online saddle-point optimization where the action uses an estimate `Â_t`
/// and `A_t` is revealed afterwards.
pub fn run_saddle_point_estimated(
    dataset: &[RoundData],
    spec: &PenaltySpec,
    schedule: &StepSchedule,
    lambda_init: &DualVector,
    a_init: &Matrix,
) -> Result<RunTrace> {
    let limit = schedule.matrix_radius * (1.0 + DOMAIN_TOL) + DOMAIN_TOL;
    if a_init.frobenius_norm() > limit {
        return Err(Error::OutsideDomain("initial matrix estimate"));
    }
    run_primal_dual(dataset, spec, schedule, lambda_init, Some(a_init.clone()))
}

fn run_primal_dual(
    dataset: &[RoundData],
    spec: &PenaltySpec,
    schedule: &StepSchedule,
    lambda_init: &DualVector,
    mut estimate: Option<Matrix>,
) -> Result<RunTrace> {
    let m = check_dataset(dataset)?;
    check_len("initial dual variable", m, lambda_init.len())?;
    check_len("horizon", schedule.horizon, dataset.len())?;
    let domain = spec.dual_domain();
    if !domain.contains(lambda_init) {
        return Err(Error::OutsideDomain("initial dual variable"));
    }
    let mut lambda = lambda_init.clone();
    let mut rounds = Vec::with_capacity(dataset.len());
    for (k, round) in dataset.iter().enumerate() {
        let t = k + 1;
        let x = match &estimate {
            Some(a_hat) => primal_argmax(round, a_hat, &lambda)?,
            None => primal_argmax(round, &round.a, &lambda)?,
        };
        let res = residual(round, &x)?;

        let mut grad = spec.conjugate_gradient_unchecked(&lambda);
        axpy(-1.0, &res, &mut grad);
        let mut next = lambda.to_vec();
        axpy(-schedule.dual_step(t), &grad, &mut next);
        let next = domain.project(&next);

        let a_used = match estimate.as_mut() {
            Some(a_hat) => {
                let used = a_hat.clone();
                track_matrix(a_hat, &round.a, schedule.matrix_step(t), schedule.matrix_radius)?;
                Some(used)
            }
            None => None,
        };
        rounds.push(RoundRecord {
            reward: round.reward(&x),
            x_hat: x,
            lambda_hat: core::mem::replace(&mut lambda, next),
            a_hat: a_used,
            residual_true: res,
        });
    }
    Ok(RunTrace { rounds })
}

/// One projected subgradient step of `A ↦ ‖target − A‖_F` on the ball of radius `radius`.
fn track_matrix(estimate: &mut Matrix, target: &Matrix, step: f64, radius: f64) -> Result<()> {
    let gap = estimate.frobenius_distance(target)?;
    if gap > 0.0 {
        // G_t = (Â_t − A_t)/‖Â_t − A_t‖_F
        let mut direction = estimate.clone();
        direction.add_scaled(-1.0, target)?;
        estimate.add_scaled(-step / gap, &direction)?;
    }
    let norm = estimate.frobenius_norm();
    if norm > radius {
        estimate.scale(if norm > 0.0 { radius / norm } else { 0.0 });
    }
    Ok(())
}

/// Default number of inner iterations of the additive baseline.
pub const BASELINE_INNER_ITERS: usize = 500;

/// Default inner step scale for a round: the reciprocal of a bound on the
/// norm of the objective's subgradients, floored at one.
pub fn baseline_step_scale(round: &RoundData, spec: &PenaltySpec) -> f64 {
    let g = norm2(&round.u) + spec.lipschitz(round.m()) * round.a.frobenius_norm();
    1.0 / g.max(1.0)
}

/// Primal-only baseline that maximizes `u_tᵀx − E(A_t x − b_t)` independently
/// in every round, i.e. the additive relaxation of the long-term penalty.
///
/// Each round runs `inner_iters` steps of projected subgradient ascent from
/// `x = 0` with steps `scale/√k` and returns the best raw or averaged iterate.
/// `inner_step_scale = None` selects [`baseline_step_scale`] per round.
pub fn run_additive_baseline(
    dataset: &[RoundData],
    spec: &PenaltySpec,
    inner_iters: usize,
    inner_step_scale: Option<f64>,
) -> Result<RunTrace> {
    let m = check_dataset(dataset)?;
    if inner_iters == 0 {
        return Err(Error::InvalidParameter("inner_iters must be at least 1".into()));
    }
    let mut rounds = Vec::with_capacity(dataset.len());
    for round in dataset {
        let scale = inner_step_scale.unwrap_or_else(|| baseline_step_scale(round, spec));
        let x = solve_additive_round(round, spec, inner_iters, scale)?;
        let res = residual(round, &x)?;
        rounds.push(RoundRecord {
            reward: round.reward(&x),
            x_hat: x,
            lambda_hat: DualVector::zeros(m),
            a_hat: None,
            residual_true: res,
        });
    }
    Ok(RunTrace { rounds })
}

/// Projected subgradient ascent on `u_tᵀx − E(A_t x − b_t)` over the round's blocks.
pub fn solve_additive_round(
    round: &RoundData,
    spec: &PenaltySpec,
    inner_iters: usize,
    step_scale: f64,
) -> Result<ActionVector> {
    let d = round.d();
    let objective = |x: &[f64], ax: &[f64]| -> f64 {
        let z: Vec<f64> = ax.iter().zip(&round.b).map(|(a, b)| a - b).collect();
        dot(&round.u, x) - spec.eval(&z)
    };
    let mut x = vec![0.0; d];
    let mut ax = vec![0.0; round.m()];
    let mut avg = vec![0.0; d];
    let mut a_avg = vec![0.0; round.m()];
    let mut best: Option<(f64, Vec<f64>)> = None;
    for k in 1..=inner_iters {
        let z: Vec<f64> = ax.iter().zip(&round.b).map(|(a, b)| a - b).collect();
        let g = spec.subgradient(&z);
        let mut ascent = round.a.tr_mul_vec(&g)?;
        for (gi, ui) in ascent.iter_mut().zip(&round.u) {
            *gi = ui - *gi;
        }
        axpy(step_scale / libm::sqrt(k as f64), &ascent, &mut x);
        x = project_block_simplex(&round.blocks, &x)?.into_vec();
        ax = round.a.mul_vec(&x)?;

        let w = 1.0 / k as f64;
        for (v, xi) in avg.iter_mut().zip(&x) {
            *v += w * (xi - *v);
        }
        for (v, ai) in a_avg.iter_mut().zip(&ax) {
            *v += w * (ai - *v);
        }
        for (candidate, image) in [(&x, &ax), (&avg, &a_avg)] {
            let value = objective(candidate, image);
            if best.as_ref().is_none_or(|(b, _)| value > *b) {
                best = Some((value, candidate.clone()));
            }
        }
    }
    let (_, x) = best.expect("at least one inner iteration");
    Ok(ActionVector::new(x))
}
