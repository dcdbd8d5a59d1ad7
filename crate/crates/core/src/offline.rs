//! Offline objective, dual function and the certified optimum `P*`.
//!
//! `P*` is bracketed rather than assumed: the dual function
//! `D(λ) = (1/T) Σ max_x L_t(x, λ)` upper-bounds every primal value, and the
//! ergodic average of the per-round maximizers gives a feasible primal point.
//! The solver stops once the two ends of the bracket are close.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_len, Error, Result};
use crate::linalg::{axpy, dot};
use crate::online::{check_dataset, compute_bounds};
use crate::oracle::{primal_argmax, residual, ActionVector, RoundData};
use crate::penalty::{DualVector, PenaltySpec};

/// Fraction of the iteration budget skipped before primal averaging starts.
pub const BURN_IN_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct OfflineSolution {
    /// Dual iterate with the smallest `D` value seen.
    pub lambda_star: DualVector,
    /// Ergodic average of the per-round maximizers.
    pub primal_star: Vec<ActionVector>,
    /// `P(primal_star)`, the lower end of the bracket.
    pub p_value: f64,
    /// Best `D(λ_k)`, the upper end of the bracket.
    pub d_value: f64,
    /// `d_value − p_value`
    pub gap: f64,
    pub iterations: usize,
    /// Whether the relative gap reached the requested tolerance.
    pub converged: bool,
}

impl OfflineSolution {
    pub fn relative_gap(&self) -> f64 {
        self.gap / (1.0 + libm::fabs(self.d_value))
    }
}

/// `L_t(x, λ) = u_tᵀx − λᵀ(A_t x − b_t) + E*(λ)`
pub fn lagrangian(round: &RoundData, spec: &PenaltySpec, x: &[f64], lambda: &[f64]) -> Result<f64> {
    let r = residual(round, x)?;
    check_len("dual variable", r.len(), lambda.len())?;
    Ok(round.reward(x) - dot(lambda, &r) + spec.conjugate(lambda))
}

/// `P(x_1..x_T) = (1/T) Σ u_tᵀx_t − E((1/T) Σ (A_t x_t − b_t))`
pub fn eval_primal(dataset: &[RoundData], spec: &PenaltySpec, xs: &[ActionVector]) -> Result<f64> {
    let m = check_dataset(dataset)?;
    check_len("action sequence", dataset.len(), xs.len())?;
    let mut reward = 0.0;
    let mut mean_residual = vec![0.0; m];
    for (round, x) in dataset.iter().zip(xs) {
        if !x.is_feasible(&round.blocks) {
            return Err(Error::OutsideDomain("action"));
        }
        reward += round.reward(x);
        axpy(1.0, &residual(round, x)?, &mut mean_residual);
    }
    let t = dataset.len() as f64;
    mean_residual.iter_mut().for_each(|v| *v /= t);
    Ok(reward / t - spec.eval(&mean_residual))
}

/// Dual function at `λ` with its per-round maximizers `x_t(λ)`.
pub fn eval_dual(
    dataset: &[RoundData],
    spec: &PenaltySpec,
    lambda: &[f64],
) -> Result<(f64, Vec<ActionVector>)> {
    let eval = DualEvaluation::at(dataset, spec, lambda)?;
    Ok((eval.value, eval.maximizers))
}

struct DualEvaluation {
    value: f64,
    maximizers: Vec<ActionVector>,
    mean_reward: f64,
    mean_residual: Vec<f64>,
}

impl DualEvaluation {
    fn at(dataset: &[RoundData], spec: &PenaltySpec, lambda: &[f64]) -> Result<Self> {
        let m = check_dataset(dataset)?;
        check_len("dual variable", m, lambda.len())?;
        let conj = spec.conjugate(lambda);
        if !conj.is_finite() {
            return Err(Error::OutsideDomain("dual variable"));
        }
        let mut maximizers = Vec::with_capacity(dataset.len());
        let mut mean_reward = 0.0;
        let mut mean_residual = vec![0.0; m];
        for round in dataset {
            let x = primal_argmax(round, &round.a, lambda)?;
            mean_reward += round.reward(&x);
            axpy(1.0, &residual(round, &x)?, &mut mean_residual);
            maximizers.push(x);
        }
        let t = dataset.len() as f64;
        mean_reward /= t;
        mean_residual.iter_mut().for_each(|v| *v /= t);
        Ok(Self {
            value: mean_reward - dot(lambda, &mean_residual) + conj,
            maximizers,
            mean_reward,
            mean_residual,
        })
    }
}

/// Projected subgradient descent on `D` over `Λ` with steps `R_λ/(G√k)`.
///
/// The subgradient at `λ` is `−(1/T) Σ (A_t x_t(λ) − b_t) + ∇E*(λ)`. After a
/// burn-in of [`BURN_IN_FRACTION`] of `max_iters`, the maximizers are averaged
/// per round; the run stops when `best D − P(x̄) ≤ tol·(1 + |best D|)`.
pub fn solve_offline(
    dataset: &[RoundData],
    spec: &PenaltySpec,
    max_iters: usize,
    tol: f64,
) -> Result<OfflineSolution> {
    let m = check_dataset(dataset)?;
    if max_iters == 0 {
        return Err(Error::InvalidParameter("max_iters must be at least 1".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol must be positive, got {tol}")));
    }
    let bounds = compute_bounds(dataset, spec)?;
    let domain = spec.dual_domain();
    let step_scale = if bounds.g_bound > 0.0 {
        spec.dual_radius(m) / bounds.g_bound
    } else {
        0.0
    };
    let burn_in = (BURN_IN_FRACTION * max_iters as f64) as usize;

    let mut lambda = DualVector::zeros(m);
    let mut best_value = f64::INFINITY;
    let mut best_lambda = lambda.clone();
    let mut averaged: Vec<Vec<f64>> = dataset.iter().map(|r| vec![0.0; r.d()]).collect();
    let mut avg_reward = 0.0;
    let mut avg_residual = vec![0.0; m];
    let mut averaged_count = 0usize;
    let mut p_value = f64::NEG_INFINITY;
    let mut iterations = 0;
    let mut converged = false;

    for k in 1..=max_iters {
        iterations = k;
        let eval = DualEvaluation::at(dataset, spec, &lambda)?;
        if eval.value < best_value {
            best_value = eval.value;
            best_lambda = lambda.clone();
        }
        if k > burn_in {
            averaged_count += 1;
            let w = 1.0 / averaged_count as f64;
            for (avg, x) in averaged.iter_mut().zip(&eval.maximizers) {
                for (a, xi) in avg.iter_mut().zip(x.iter()) {
                    *a += w * (xi - *a);
                }
            }
            // Rewards and residuals are linear in x, so the averaged point's
            // objective follows from the averaged statistics.
            avg_reward += w * (eval.mean_reward - avg_reward);
            for (a, r) in avg_residual.iter_mut().zip(&eval.mean_residual) {
                *a += w * (r - *a);
            }
            p_value = avg_reward - spec.eval(&avg_residual);
            if best_value - p_value <= tol * (1.0 + libm::fabs(best_value)) {
                converged = true;
                break;
            }
        }
        let mut grad = spec.conjugate_gradient_unchecked(&lambda);
        axpy(-1.0, &eval.mean_residual, &mut grad);
        let mut next = lambda.into_vec();
        axpy(-step_scale / libm::sqrt(k as f64), &grad, &mut next);
        lambda = domain.project(&next);
    }

    let primal_star: Vec<ActionVector> = averaged.into_iter().map(ActionVector::new).collect();
    // Recompute from the stored point so the reported value matches eval_primal.
    let p_value = if averaged_count > 0 {
        eval_primal(dataset, spec, &primal_star)?
    } else {
        p_value
    };
    Ok(OfflineSolution {
        lambda_star: best_lambda,
        primal_star,
        p_value,
        d_value: best_value,
        gap: best_value - p_value,
        iterations,
        converged,
    })
}

/// `e*_t = A_t x*_t − b_t` for the certified primal point.
pub fn optimal_error_vectors(
    dataset: &[RoundData],
    solution: &OfflineSolution,
) -> Result<Vec<Vec<f64>>> {
    check_len("primal solution", dataset.len(), solution.primal_star.len())?;
    dataset
        .iter()
        .zip(&solution.primal_star)
        .map(|(round, x)| residual(round, x))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::oracle::SimplexBlocks;
    use crate::penalty::NormKind;

    fn scalar_round(a: f64, b: f64, u: f64) -> RoundData {
        RoundData::new(
            Matrix::from_rows(&[vec![a]]).unwrap(),
            vec![b],
            vec![u],
            SimplexBlocks::single(1).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn primal_examples() {
        let data = [scalar_round(1.0, 0.0, 1.0), scalar_round(1.0, 0.0, 1.0)];
        let spec = PenaltySpec::norm(NormKind::L2, 1.0).unwrap();
        let xs = [ActionVector::new(vec![1.0]), ActionVector::new(vec![0.0])];
        assert!(eval_primal(&data, &spec, &xs).unwrap().abs() < 1e-15);
        let zero = [ActionVector::zeros(1), ActionVector::zeros(1)];
        let zero_b = [scalar_round(1.0, 0.0, 0.3), scalar_round(2.0, 0.0, 0.1)];
        assert_eq!(eval_primal(&zero_b, &spec, &zero).unwrap(), 0.0);
        let bad = [ActionVector::new(vec![2.0]), ActionVector::zeros(1)];
        assert!(eval_primal(&data, &spec, &bad).is_err());
    }

    #[test]
    fn single_round_primal_is_per_round_objective() {
        let r = scalar_round(0.5, 0.2, 0.7);
        let spec = PenaltySpec::huber(1.0, 3.0).unwrap();
        let x = ActionVector::new(vec![0.6]);
        let direct = 0.7 * 0.6 - spec.eval(&[0.5 * 0.6 - 0.2]);
        assert!((eval_primal(&[r], &spec, &[x]).unwrap() - direct).abs() < 1e-15);
    }

    #[test]
    fn dual_at_zero_is_unconstrained_reward() {
        let data = [scalar_round(1.0, 0.5, 0.3), scalar_round(-1.0, 0.1, -0.2)];
        let spec = PenaltySpec::norm(NormKind::L1, 1.0).unwrap();
        let (d0, xs) = eval_dual(&data, &spec, &[0.0]).unwrap();
        assert!((d0 - 0.15).abs() < 1e-15);
        assert_eq!(xs[0].as_slice(), &[1.0]);
        assert_eq!(xs[1].as_slice(), &[0.0]);
        assert!(eval_dual(&data, &spec, &[2.0]).is_err());
    }

    #[test]
    fn error_vectors_of_zero_action_are_negated_targets() {
        let data = [scalar_round(1.0, 0.5, 0.3), scalar_round(-1.0, 0.1, -0.2)];
        let sol = OfflineSolution {
            lambda_star: DualVector::zeros(1),
            primal_star: vec![ActionVector::zeros(1); 2],
            p_value: 0.0,
            d_value: 0.0,
            gap: 0.0,
            iterations: 1,
            converged: true,
        };
        assert_eq!(
            optimal_error_vectors(&data, &sol).unwrap(),
            vec![vec![-0.5], vec![-0.1]]
        );
    }

    #[test]
    fn solver_validates_arguments() {
        let data = [scalar_round(1.0, 0.5, 0.3)];
        let spec = PenaltySpec::norm(NormKind::L1, 1.0).unwrap();
        assert!(solve_offline(&data, &spec, 0, 1e-3).is_err());
        assert!(solve_offline(&data, &spec, 10, 0.0).is_err());
        assert_eq!(solve_offline(&[], &spec, 10, 1e-3), Err(Error::EmptyDataset));
    }
}
