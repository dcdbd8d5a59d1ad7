//! Built-in invariant suites with fixed seeds.
//!
//! Every suite takes its sample sizes as arguments so the same checks back
//! both the quick `validate` subcommand and the full-size acceptance tests.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use saddleflow_core::data::{generate, generate_drifting, Distribution, GeneratorConfig};
use saddleflow_core::diagnostics::{
    bound_components, drift_monte_carlo, matrix_tracking, static_dual_regret,
};
use saddleflow_core::linalg::{distance2, dot, Matrix};
use saddleflow_core::offline::solve_offline;
use saddleflow_core::online::{
    compute_bounds, run_saddle_point, run_saddle_point_estimated, StepSchedule,
};
use saddleflow_core::oracle::{brute_force_argmax, primal_argmax, RoundData, SimplexBlocks};
use saddleflow_core::penalty::{conjugate_bruteforce, DualDomain, DualVector, NormKind, PenaltySpec};

use crate::error::Result;
use crate::experiments::{Regime, BOUND_TOL};

/// Number of failure witnesses kept per suite.
const MAX_WITNESSES: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub module: &'static str,
    pub invariant: &'static str,
    pub checked: usize,
    pub failed: usize,
    /// The first few failing cases with their values.
    pub witnesses: Vec<String>,
}

impl SuiteReport {
    fn new(module: &'static str, invariant: &'static str) -> Self {
        Self {
            module,
            invariant,
            checked: 0,
            failed: 0,
            witnesses: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, witness: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.failed += 1;
            if self.witnesses.len() < MAX_WITNESSES {
                self.witnesses.push(witness());
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.failed == 0 && self.checked > 0
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}/{}: {}/{} checks passed",
            if self.passed() { "PASS" } else { "FAIL" },
            self.module,
            self.invariant,
            self.checked - self.failed,
            self.checked
        )?;
        for w in &self.witnesses {
            write!(f, "\n    {w}")?;
        }
        Ok(())
    }
}

/// Every penalty family, symmetric and positive-part.
pub fn penalty_catalog() -> Vec<PenaltySpec> {
    let mut out = Vec::new();
    for base in [
        PenaltySpec::norm(NormKind::L1, 1.5),
        PenaltySpec::norm(NormKind::L2, 1.0),
        PenaltySpec::norm(NormKind::Linf, 2.0),
        PenaltySpec::huber(1.0, 2.0),
    ] {
        let base = base.expect("catalog parameters are valid");
        out.push(base);
        out.push(base.positive_part());
    }
    out
}

fn uniform_vec(rng: &mut ChaCha20Rng, n: usize, half_width: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-half_width..half_width)).collect()
}

fn random_round(rng: &mut ChaCha20Rng, m: usize, d: usize, max_blocks: usize) -> Result<RoundData> {
    let count = rng.random_range(1..=max_blocks.min(d));
    let mut cuts: Vec<usize> = (1..d).collect();
    for i in (1..cuts.len()).rev() {
        cuts.swap(i, rng.random_range(0..=i));
    }
    let mut offsets: Vec<usize> = cuts.into_iter().take(count - 1).collect();
    offsets.extend([0, d]);
    offsets.sort_unstable();
    let a = Matrix::from_row_major(m, d, uniform_vec(rng, m * d, 1.0))?;
    let b = uniform_vec(rng, m, 1.0);
    let u = uniform_vec(rng, d, 1.0);
    Ok(RoundData::new(a, b, u, SimplexBlocks::new(offsets)?)?)
}

fn schedule_for(spec: &PenaltySpec, rounds: &[RoundData]) -> Result<StepSchedule> {
    let bounds = compute_bounds(rounds, spec)?;
    Ok(StepSchedule::for_penalty(spec, &bounds, rounds[0].m(), rounds.len())?)
}

/// Closed-form conjugates against a grid supremum over `[−10, 10]^m`, `m ∈ {1, 2}`.
///
/// Inside the dual domain the two must agree within `5e−2`; well outside it
/// the grid supremum must grow with the grid, i.e. the conjugate is infinite.
pub fn conjugacy_suite(samples: usize, grid_points: usize, seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("penalty", "conjugate matches grid supremum");
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let grid_radius = 10.0;
    for spec in penalty_catalog() {
        for m in [1usize, 2] {
            for _ in 0..samples {
                let lambda = uniform_vec(&mut rng, m, 1.5 * spec.dual_radius(m));
                let exact = spec.conjugate(&lambda);
                let grid = conjugate_bruteforce(&spec, &lambda, grid_radius, grid_points)?;
                let dist = distance2(&lambda, &spec.dual_domain().project(&lambda));
                let inside = spec.dual_domain().contains(&lambda);
                let ok = if exact.is_finite() {
                    inside && (exact - grid).abs() <= 5e-2
                } else {
                    !inside && (dist <= 0.05 || grid >= grid_radius * dist - 5e-2)
                };
                report.check(ok, || {
                    format!("{spec:?} λ={lambda:?}: closed form {exact}, grid {grid}")
                });
            }
        }
    }
    Ok(report)
}

/// Projection onto the dual domain against every grid point of the domain
/// in two dimensions, plus idempotence; `project` is the map under test.
pub fn projection_suite_with(
    samples: usize,
    seed: u64,
    project: &dyn Fn(&DualDomain, &[f64]) -> DualVector,
) -> SuiteReport {
    let mut report = SuiteReport::new("penalty", "projection is the nearest domain point");
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    for spec in penalty_catalog() {
        let domain = spec.dual_domain();
        let extent = 1.2 * spec.dual_radius(2);
        let h = 2.0 * extent / 200.0;
        let nodes: Vec<[f64; 2]> = (0..201)
            .flat_map(|i| (0..201).map(move |j| [-extent + h * i as f64, -extent + h * j as f64]))
            .filter(|p| domain.contains(p))
            .collect();
        for _ in 0..samples {
            let v = uniform_vec(&mut rng, 2, 2.0 * extent);
            let p = project(&domain, &v);
            let reach = distance2(&v, &p);
            let best = nodes
                .iter()
                .map(|g| distance2(&v, g))
                .fold(f64::INFINITY, f64::min);
            let again = project(&domain, &p);
            let ok = domain.contains(&p) && reach <= best + 1e-12 && distance2(&p, &again) <= 1e-12;
            report.check(ok, || {
                format!("{spec:?} v={v:?}: projection {p:?} at {reach}, grid best {best}")
            });
        }
    }
    report
}

pub fn projection_suite(samples: usize, seed: u64) -> SuiteReport {
    projection_suite_with(samples, seed, &|domain, v| domain.project(v))
}

/// Exact maximizer against vertex enumeration on random instances with
/// `m, d ≤ 6` and at most three blocks.
pub fn oracle_suite(instances: usize, seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("oracle", "argmax matches vertex enumeration");
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    for _ in 0..instances {
        let m = rng.random_range(1..=6);
        let d = rng.random_range(1..=6);
        let round = random_round(&mut rng, m, d, 3)?;
        let lambda = uniform_vec(&mut rng, m, 2.0);
        let fast = primal_argmax(&round, &round.a, &lambda)?;
        let slow = brute_force_argmax(&round, &round.a, &lambda)?;
        let c = round.scores(&round.a, &lambda)?;
        let gap = (dot(&c, &fast) - dot(&c, &slow)).abs();
        report.check(fast.is_feasible(&round.blocks) && gap <= 1e-12, || {
            format!("m={m} d={d} λ={lambda:?}: objective gap {gap}")
        });
    }
    Ok(report)
}

/// Static dual regret of the saddle-point method against random comparators
/// stays below the step rule's rate `R_T`.
pub fn dual_regret_suite(instances: usize, seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("online", "static dual regret within R_T");
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    for k in 0..instances {
        for spec in penalty_catalog() {
            let cfg = GeneratorConfig::single_block(Distribution::Gaussian, 5, 4, 100, seed + k as u64)?;
            let rounds = generate(&cfg)?;
            let schedule = schedule_for(&spec, &rounds)?;
            let trace = run_saddle_point(&rounds, &spec, &schedule, &DualVector::zeros(5))?;
            for _ in 0..20 {
                let raw = uniform_vec(&mut rng, 5, 2.0 * spec.dual_radius(5));
                let comparator = spec.dual_domain().project(&raw);
                let regret = static_dual_regret(&trace, &rounds, &spec, &comparator)?;
                let rate = schedule.regret_rate();
                report.check(regret <= rate + 1e-9, || {
                    format!("{spec:?} seed {}: regret {regret} > R_T {rate}", cfg.seed)
                });
            }
        }
    }
    Ok(report)
}

/// Average matrix-estimation error on slowly drifting instances
/// (`A_{t+1} = normalize(A_t + 0.01·N)`) against its `3/√T` bound.
pub fn tracking_suite(instances: usize, seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("online", "matrix tracking bound");
    let spec = PenaltySpec::norm(NormKind::L2, 1.0)?;
    let outcomes: Vec<(u64, f64, f64)> = (0..instances as u64)
        .into_par_iter()
        .map(|k| -> Result<_> {
            let cfg = GeneratorConfig::single_block(Distribution::Gaussian, 5, 4, 200, seed + k)?;
            let rounds = generate_drifting(&cfg, 0.01)?;
            let schedule = schedule_for(&spec, &rounds)?;
            let a_init = Matrix::zeros(cfg.m, cfg.d());
            let trace =
                run_saddle_point_estimated(&rounds, &spec, &schedule, &DualVector::zeros(cfg.m), &a_init)?;
            let (lhs, rhs) = matrix_tracking(&trace, &rounds, schedule.matrix_radius)?;
            Ok((cfg.seed, lhs, rhs))
        })
        .collect::<Result<_>>()?;
    for (s, lhs, rhs) in outcomes {
        report.check(lhs <= rhs + 1e-9, || format!("seed {s}: tracking {lhs} > bound {rhs}"));
    }
    Ok(report)
}

/// Measured regret (upper end of the bracket) against `R_T + S_e + S_A` on
/// Gaussian instances, for both the convex and the strongly convex regime.
pub fn regret_bound_suite(
    instances: usize,
    shape: (usize, usize, usize),
    seed: u64,
    max_iters: usize,
    tol: f64,
) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("diagnostics", "regret within R_T + S_e + S_A");
    let (m, d, horizon) = shape;
    for regime in Regime::ALL {
        let spec = regime.penalty(1.0)?;
        let outcomes: Vec<(u64, f64, f64)> = (0..instances as u64)
            .into_par_iter()
            .map(|k| -> Result<_> {
                let cfg = GeneratorConfig::single_block(Distribution::Gaussian, m, d, horizon, seed + k)?;
                let rounds = generate(&cfg)?;
                let schedule = schedule_for(&spec, &rounds)?;
                let trace = run_saddle_point(&rounds, &spec, &schedule, &DualVector::zeros(m))?;
                let sol = solve_offline(&rounds, &spec, max_iters, tol)?;
                let bound = bound_components(&trace, &rounds, &spec, &schedule, &sol)?;
                Ok((cfg.seed, bound.empirical_regret, bound.bound_total))
            })
            .collect::<Result<_>>()?;
        for (s, regret, bound) in outcomes {
            report.check(regret <= bound + BOUND_TOL, || {
                format!("{} seed {s}: regret {regret} > bound {bound}", regime.name())
            });
        }
    }
    Ok(report)
}

/// Mean stacks for the drift check: zero, constant, linear trend, a
/// sinusoid and i.i.d. uniform noise.
fn mean_stack(pattern: usize, horizon: usize, m: usize, rng: &mut ChaCha20Rng) -> Vec<Vec<f64>> {
    (0..horizon)
        .map(|t| {
            let s = t as f64 / horizon as f64;
            (0..m)
                .map(|i| match pattern {
                    0 => 0.0,
                    1 => 0.5 + 0.1 * i as f64,
                    2 => 2.0 * s - 1.0,
                    3 => (2.0 * std::f64::consts::PI * (s + i as f64 / m as f64)).sin(),
                    _ => rng.random_range(-1.0..1.0),
                })
                .collect()
        })
        .collect()
}

/// Monte Carlo `E[max_t Ψ_t]` for Gaussian residual stacks against the drift
/// bound, with an allowance of three standard errors.
pub fn drift_suite(settings: usize, samples: usize, seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("diagnostics", "drift bound on E[max Ψ_t]");
    let sigmas = [0.1, 0.5, 1.0, 2.0];
    let dims = [1usize, 3, 5];
    let horizons = [10usize, 50, 200];
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let cases: Vec<(f64, usize, usize, Vec<Vec<f64>>)> = (0..settings)
        .map(|k| {
            let sigma = sigmas[k % sigmas.len()];
            let m = dims[(k / 4) % dims.len()];
            let horizon = horizons[(k / 2) % horizons.len()];
            let mu = mean_stack(k % 5, horizon, m, &mut rng);
            (sigma, m, horizon, mu)
        })
        .collect();
    let estimates = cases
        .par_iter()
        .enumerate()
        .map(|(k, (sigma, m, _, mu))| drift_monte_carlo(*sigma, mu, *m, samples, seed + k as u64))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    for ((sigma, m, horizon, _), est) in cases.iter().zip(&estimates) {
        report.check(est.holds(3.0), || {
            format!(
                "σ={sigma} m={m} T={horizon}: mean {} ± {} above bound {}",
                est.empirical_mean, est.standard_error, est.bound
            )
        });
    }
    Ok(report)
}

/// Relative duality gap of the offline solver on generated instances,
/// cycling through the penalty catalog.
pub fn offline_suite(
    instances: usize,
    shape: (usize, usize, usize),
    seed: u64,
    max_iters: usize,
    tol: f64,
) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("offline", "duality gap certificate");
    let (m, d, horizon) = shape;
    let catalog = penalty_catalog();
    let outcomes: Vec<(u64, PenaltySpec, f64, usize)> = (0..instances as u64)
        .into_par_iter()
        .map(|k| -> Result<_> {
            let spec = catalog[k as usize % catalog.len()];
            let cfg = GeneratorConfig::single_block(Distribution::Gaussian, m, d, horizon, seed + k)?;
            let sol = solve_offline(&generate(&cfg)?, &spec, max_iters, tol)?;
            Ok((cfg.seed, spec, sol.relative_gap(), sol.iterations))
        })
        .collect::<Result<_>>()?;
    for (s, spec, gap, iters) in outcomes {
        report.check(gap <= tol, || {
            format!("{spec:?} seed {s}: relative gap {gap} after {iters} iterations")
        });
    }
    Ok(report)
}

/// The quick suites run by the `validate` subcommand.
pub fn run_all(seed: u64) -> Result<Vec<SuiteReport>> {
    Ok(vec![
        conjugacy_suite(10, 201, seed)?,
        projection_suite(10, seed),
        oracle_suite(200, seed)?,
        dual_regret_suite(2, seed)?,
        tracking_suite(5, seed)?,
        regret_bound_suite(3, (5, 4, 100), seed, 20_000, 1e-3)?,
        drift_suite(20, 300, seed)?,
        offline_suite(4, (5, 4, 50), seed, 20_000, 1e-3)?,
    ])
}
