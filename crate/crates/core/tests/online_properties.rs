mod common;

use saddleflow_core::data::{generate, generate_drifting, Distribution, GeneratorConfig};
use saddleflow_core::diagnostics::{matrix_tracking, static_dual_regret};
use saddleflow_core::linalg::{distance2, Matrix};
use saddleflow_core::offline::eval_primal;
use saddleflow_core::online::{
    compute_bounds, run_additive_baseline, run_saddle_point, run_saddle_point_estimated,
    StepSchedule,
};
use saddleflow_core::oracle::{ActionVector, RoundData};
use saddleflow_core::penalty::{DualVector, NormKind, PenaltySpec};

fn setup(spec: &PenaltySpec, data: &[RoundData]) -> StepSchedule {
    let bounds = compute_bounds(data, spec).unwrap();
    StepSchedule::for_penalty(spec, &bounds, data[0].m(), data.len()).unwrap()
}

#[test]
fn static_dual_regret_is_within_rate() {
    let mut rng = common::rng(41);
    for spec in common::catalog() {
        for seed in 0..3 {
            let cfg = GeneratorConfig::single_block(Distribution::Gaussian, 5, 4, 100, seed).unwrap();
            let data = generate(&cfg).unwrap();
            let schedule = setup(&spec, &data);
            let trace = run_saddle_point(&data, &spec, &schedule, &DualVector::zeros(5)).unwrap();
            for _ in 0..20 {
                let raw = common::uniform_vec(&mut rng, 5, 2.0 * spec.dual_radius(5));
                let comparator = spec.dual_domain().project(&raw);
                let regret = static_dual_regret(&trace, &data, &spec, &comparator).unwrap();
                assert!(
                    regret <= schedule.regret_rate() + 1e-9,
                    "{spec:?}: {regret} > {}",
                    schedule.regret_rate()
                );
            }
        }
    }
}

#[test]
fn dual_path_variation_is_bounded_by_step_budget() {
    for spec in common::catalog() {
        let cfg = GeneratorConfig::single_block(Distribution::Uniform, 6, 5, 150, 3).unwrap();
        let data = generate(&cfg).unwrap();
        let schedule = setup(&spec, &data);
        let trace = run_saddle_point(&data, &spec, &schedule, &DualVector::zeros(6)).unwrap();
        let budget = schedule.g_bound * schedule.dual_step_sum();
        assert!(trace.dual_path_variation() <= budget + 1e-9);
        for rec in &trace.rounds {
            assert!(spec.dual_domain().contains(&rec.lambda_hat));
            assert!(rec.x_hat.is_feasible(&data[0].blocks));
        }
    }
}

#[test]
fn matrix_tracking_bound_on_drifting_instances() {
    let spec = PenaltySpec::norm(NormKind::L2, 1.0).unwrap();
    for seed in 0..20 {
        let cfg = GeneratorConfig::single_block(Distribution::Gaussian, 5, 4, 200, seed).unwrap();
        let data = generate_drifting(&cfg, 0.01).unwrap();
        let schedule = setup(&spec, &data);
        let trace = run_saddle_point_estimated(
            &data,
            &spec,
            &schedule,
            &DualVector::zeros(5),
            &Matrix::zeros(5, 4),
        )
        .unwrap();
        let (lhs, rhs) = matrix_tracking(&trace, &data, schedule.matrix_radius).unwrap();
        assert!(lhs <= rhs + 1e-9, "seed {seed}: {lhs} > {rhs}");
        for rec in &trace.rounds {
            let a_hat = rec.a_hat.as_ref().unwrap();
            assert!(a_hat.frobenius_norm() <= schedule.matrix_radius * (1.0 + 1e-12));
        }
    }
}

#[test]
fn runs_are_deterministic() {
    let cfg = GeneratorConfig::single_block(Distribution::Cauchy, 4, 6, 80, 99).unwrap();
    let spec = PenaltySpec::huber(0.5, 1.0).unwrap();
    let run = || {
        let data = generate(&cfg).unwrap();
        let schedule = setup(&spec, &data);
        run_saddle_point(&data, &spec, &schedule, &DualVector::zeros(4)).unwrap()
    };
    let (a, b) = (run(), run());
    assert_eq!(a, b);
    let bits = |t: &saddleflow_core::online::RunTrace| -> Vec<u64> {
        t.rounds.iter().flat_map(|r| r.lambda_hat.iter().map(|v| v.to_bits())).collect()
    };
    assert_eq!(bits(&a), bits(&b));
}

#[test]
fn estimated_run_with_constant_matrix_matches_exact_run() {
    let cfg = GeneratorConfig::single_block(Distribution::Gaussian, 3, 5, 60, 4).unwrap();
    let fresh = generate(&cfg).unwrap();
    let a = fresh[0].a.clone();
    let data: Vec<RoundData> = fresh
        .into_iter()
        .map(|r| RoundData::new(a.clone(), r.b, r.u, r.blocks).unwrap())
        .collect();
    let spec = PenaltySpec::norm(NormKind::L1, 0.3).unwrap();
    let schedule = setup(&spec, &data);
    let exact = run_saddle_point(&data, &spec, &schedule, &DualVector::zeros(3)).unwrap();
    let estimated =
        run_saddle_point_estimated(&data, &spec, &schedule, &DualVector::zeros(3), &a).unwrap();
    for (x, y) in exact.rounds.iter().zip(&estimated.rounds) {
        assert!((x.reward - y.reward).abs() <= 1e-9);
        assert!(distance2(&x.lambda_hat, &y.lambda_hat) <= 1e-9);
    }
}

#[test]
fn additive_baseline_matches_grid_on_scalar_rounds() {
    let mut rng = common::rng(42);
    for spec in common::catalog() {
        for _ in 0..10 {
            let round = common::random_round(&mut rng, 1, 1, 1);
            let trace = run_additive_baseline(std::slice::from_ref(&round), &spec, 500, None).unwrap();
            let got = eval_primal(std::slice::from_ref(&round), &spec, &trace.actions()).unwrap();
            let best = (0..=10_000)
                .map(|i| {
                    let x = ActionVector::new(vec![i as f64 / 10_000.0]);
                    eval_primal(std::slice::from_ref(&round), &spec, &[x]).unwrap()
                })
                .fold(f64::NEG_INFINITY, f64::max);
            assert!(got <= best + 1e-4, "{spec:?}: baseline above grid maximum");
            assert!(best - got <= 1e-2, "{spec:?}: baseline {got} vs grid {best}");
        }
    }
}

#[test]
fn additive_baseline_respects_blocks() {
    let mut rng = common::rng(43);
    let spec = PenaltySpec::norm(NormKind::Linf, 2.0).unwrap();
    let data: Vec<RoundData> = (0..10).map(|_| common::random_round(&mut rng, 3, 6, 3)).collect();
    let trace = run_additive_baseline(&data, &spec, 200, None).unwrap();
    for (rec, round) in trace.rounds.iter().zip(&data) {
        assert!(rec.x_hat.is_feasible(&round.blocks));
    }
}
