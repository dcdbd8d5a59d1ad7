//! Experiment drivers behind the CLI subcommands.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use saddleflow_core::data::generate;
use saddleflow_core::diagnostics::{bound_components, BoundReport};
use saddleflow_core::linalg::Matrix;
use saddleflow_core::offline::{solve_offline, OfflineSolution};
use saddleflow_core::online::{
    compute_bounds, run_additive_baseline, run_saddle_point, run_saddle_point_estimated,
    DualMode, RunTrace, StepSchedule,
};
use saddleflow_core::oracle::RoundData;
use saddleflow_core::penalty::{DualVector, NormKind, PenaltyKind, PenaltySpec};
use serde::Serialize;

use crate::config::{
    Algorithm, BaselineSettings, DualModeOverride, ExperimentConfig, GeneratorSection,
    MatrixInit, OfflineSettings, PenaltyConfig, ScheduleOverrides, DEFAULT_REGRET_REPEATS,
    DEFAULT_TRADEOFF_REPEATS,
};
use crate::error::{CliError, Result};
use crate::io::{load_dataset, save_trace};

/// Slack allowed when comparing measured regret with its bound.
pub const BOUND_TOL: f64 = 1e-6;

/// The rounds described by the config: generated, or read from the dataset file.
pub fn load_rounds(config: &ExperimentConfig) -> Result<Vec<RoundData>> {
    if let Some(gen) = &config.generator {
        return Ok(generate(&gen.to_config(gen.horizon, gen.seed)?)?);
    }
    let path = config
        .dataset
        .as_ref()
        .ok_or_else(|| CliError::Config("missing dataset path".into()))?;
    if !path.is_file() {
        return Err(CliError::Config(format!(
            "dataset {} does not exist",
            path.display()
        )));
    }
    load_dataset(path)
}

/// Default schedule for `spec` on `rounds` with the config overrides applied.
pub fn build_schedule(
    spec: &PenaltySpec,
    rounds: &[RoundData],
    overrides: &ScheduleOverrides,
) -> Result<StepSchedule> {
    let bounds = compute_bounds(rounds, spec)?;
    let base = StepSchedule::for_penalty(spec, &bounds, rounds[0].m(), rounds.len())?;
    let mode = match overrides.dual_mode {
        None => base.dual_mode,
        Some(DualModeOverride::Convex) => DualMode::ConvexFixed,
        Some(DualModeOverride::StronglyConvex) => DualMode::StronglyConvex,
    };
    Ok(StepSchedule::new(
        mode,
        overrides.g_bound.unwrap_or(base.g_bound),
        base.kappa,
        overrides.r_lambda.unwrap_or(base.r_lambda),
        base.horizon,
        overrides.matrix_radius.unwrap_or(base.matrix_radius),
    )?)
}

pub fn run_algorithm(
    algorithm: Algorithm,
    rounds: &[RoundData],
    spec: &PenaltySpec,
    schedule: &StepSchedule,
    overrides: &ScheduleOverrides,
    baseline: &BaselineSettings,
) -> Result<RunTrace> {
    let lambda0 = DualVector::zeros(rounds[0].m());
    let trace = match algorithm {
        Algorithm::Alg1 => run_saddle_point(rounds, spec, schedule, &lambda0)?,
        Algorithm::Alg2 => {
            let a_init = match overrides.a_init {
                MatrixInit::Zero => Matrix::zeros(rounds[0].m(), rounds[0].d()),
                MatrixInit::First => rounds[0].a.clone(),
            };
            run_saddle_point_estimated(rounds, spec, schedule, &lambda0, &a_init)?
        }
        Algorithm::Additive => {
            run_additive_baseline(rounds, spec, baseline.inner_iters, baseline.step_scale)?
        }
    };
    Ok(trace)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundSection {
    pub r_t: f64,
    pub m_e: f64,
    pub s_e: f64,
    pub s_a: f64,
    pub bound_total: f64,
    pub regret_upper: f64,
    pub regret_lower: f64,
    pub lower_bound: f64,
    pub epsilon: f64,
    pub dual_path_variation: f64,
}

impl From<&BoundReport> for BoundSection {
    fn from(r: &BoundReport) -> Self {
        Self {
            r_t: r.r_t,
            m_e: r.m_e,
            s_e: r.s_e,
            s_a: r.s_a,
            bound_total: r.bound_total,
            regret_upper: r.empirical_regret,
            regret_lower: r.empirical_regret_lower,
            lower_bound: r.lower_bound,
            epsilon: r.epsilon,
            dual_path_variation: r.dual_path_variation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OfflineSection {
    pub p_value: f64,
    pub d_value: f64,
    pub gap: f64,
    pub relative_gap: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl From<&OfflineSolution> for OfflineSection {
    fn from(s: &OfflineSolution) -> Self {
        Self {
            p_value: s.p_value,
            d_value: s.d_value,
            gap: s.gap,
            relative_gap: s.relative_gap(),
            iterations: s.iterations,
            converged: s.converged,
        }
    }
}

/// Contents of `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub algorithm: &'static str,
    pub penalty: PenaltyConfig,
    pub horizon: usize,
    pub mean_reward: f64,
    pub penalty_value: f64,
    pub objective: f64,
    pub bound: BoundSection,
    pub offline: OfflineSection,
    /// The regret bound is only asserted for the saddle-point methods.
    pub bound_checked: bool,
    pub bound_holds: bool,
}

impl RunReport {
    pub fn summary_line(&self) -> String {
        format!(
            "{}: reward={:.6} penalty={:.6} regret=[{:.6}, {:.6}] bound_total={:.6}{}",
            self.algorithm,
            self.mean_reward,
            self.penalty_value,
            self.bound.regret_lower,
            self.bound.regret_upper,
            self.bound.bound_total,
            match (self.bound_checked, self.bound_holds) {
                (false, _) => " (bound not applicable)",
                (true, true) => "",
                (true, false) => " BOUND VIOLATED",
            }
        )
    }
}

pub struct RunOutcome {
    pub trace: RunTrace,
    pub report: RunReport,
}

pub fn execute_run(config: &ExperimentConfig, rounds: &[RoundData]) -> Result<RunOutcome> {
    let spec = config.penalty_spec()?;
    let schedule = build_schedule(&spec, rounds, &config.schedule)?;
    let trace = run_algorithm(
        config.algorithm,
        rounds,
        &spec,
        &schedule,
        &config.schedule,
        &config.baseline,
    )?;
    let offline = solve_offline(rounds, &spec, config.offline.max_iters, config.offline.tol)?;
    let bound = bound_components(&trace, rounds, &spec, &schedule, &offline)?;
    let bound_checked = config.algorithm != Algorithm::Additive;
    let penalty_value = spec.eval(&trace.mean_residual());
    let report = RunReport {
        algorithm: config.algorithm.name(),
        penalty: PenaltyConfig::from_spec(&spec),
        horizon: rounds.len(),
        mean_reward: trace.mean_reward(),
        penalty_value,
        objective: bound.online_value,
        bound: BoundSection::from(&bound),
        offline: OfflineSection::from(&offline),
        bound_checked,
        bound_holds: bound.bound_holds(BOUND_TOL),
    };
    Ok(RunOutcome { trace, report })
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::io(path, std::io::Error::other(e)))?;
    text.push('\n');
    let mut file = File::create(path).map_err(|e| CliError::io(path, e))?;
    file.write_all(text.as_bytes())
        .map_err(|e| CliError::io(path, e))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Runs the configured algorithm and writes `trace.jsonl` and `report.json`
/// into `out_dir`. A violated regret bound is reported after the files are written.
pub fn cmd_run(config: &ExperimentConfig, out_dir: &Path) -> Result<RunReport> {
    let rounds = load_rounds(config)?;
    let outcome = execute_run(config, &rounds)?;
    ensure_dir(out_dir)?;
    save_trace(&out_dir.join("trace.jsonl"), &outcome.trace)?;
    write_json(&out_dir.join("report.json"), &outcome.report)?;
    Ok(outcome.report)
}

pub fn bound_violation(report: &RunReport) -> Option<CliError> {
    (report.bound_checked && !report.bound_holds).then(|| {
        CliError::Violation(format!(
            "measured regret {} exceeds bound {} (+{BOUND_TOL})",
            report.bound.regret_upper, report.bound.bound_total
        ))
    })
}

/// Contents of `offline.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OfflineReport {
    pub penalty: PenaltyConfig,
    #[serde(flatten)]
    pub solution: OfflineSection,
    pub lambda_star: Vec<f64>,
    pub primal_star: Vec<Vec<f64>>,
}

pub fn cmd_offline(config: &ExperimentConfig, out_dir: &Path) -> Result<OfflineReport> {
    let rounds = load_rounds(config)?;
    let spec = config.penalty_spec()?;
    let sol = solve_offline(&rounds, &spec, config.offline.max_iters, config.offline.tol)?;
    let report = OfflineReport {
        penalty: PenaltyConfig::from_spec(&spec),
        solution: OfflineSection::from(&sol),
        lambda_star: sol.lambda_star.to_vec(),
        primal_star: sol.primal_star.iter().map(|x| x.to_vec()).collect(),
    };
    ensure_dir(out_dir)?;
    write_json(&out_dir.join("offline.json"), &report)?;
    Ok(report)
}

/// The tradeoff penalty at radius `r`: `r‖·‖_q` for norms, `r·H_{1,1} = H_{r,r}`
/// for the Huber family. The asymmetry flag of `template` is kept.
pub fn tradeoff_penalty(template: &PenaltySpec, r: f64) -> Result<PenaltySpec> {
    let spec = match template.kind() {
        PenaltyKind::ScaledNorm(q) => PenaltySpec::norm(q, r)?,
        PenaltyKind::HuberL2 { .. } => PenaltySpec::huber(r, r)?,
    };
    Ok(if template.is_asymmetric() {
        spec.positive_part()
    } else {
        spec
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TradeoffSample {
    pub reward: f64,
    /// `E((1/T) Σ (A_t x̂_t − b_t)) / R_λ`
    pub normalized_penalty: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffCell {
    pub gamma: f64,
    pub r_lambda: f64,
    /// One sample per seed, in seed order.
    pub non_additive: Vec<TradeoffSample>,
    pub additive: Vec<TradeoffSample>,
}

/// Both algorithms on `repeats` generated datasets (seeds `base_seed + k`) at `R_λ = 2^γ`.
pub fn tradeoff_cell(
    generator: &GeneratorSection,
    template: &PenaltySpec,
    gamma: f64,
    repeats: usize,
    base_seed: u64,
    baseline: &BaselineSettings,
) -> Result<TradeoffCell> {
    let r = gamma.exp2();
    let spec = tradeoff_penalty(template, r)?;
    let pairs: Vec<(TradeoffSample, TradeoffSample)> = (0..repeats as u64)
        .into_par_iter()
        .map(|k| -> Result<_> {
            let cfg = generator.to_config(generator.horizon, base_seed.wrapping_add(k))?;
            let rounds = generate(&cfg)?;
            let schedule = build_schedule(&spec, &rounds, &ScheduleOverrides::default())?;
            let sample = |trace: &RunTrace| TradeoffSample {
                reward: trace.mean_reward(),
                normalized_penalty: spec.eval(&trace.mean_residual()) / r,
            };
            let ours = run_saddle_point(&rounds, &spec, &schedule, &DualVector::zeros(cfg.m))?;
            let theirs =
                run_additive_baseline(&rounds, &spec, baseline.inner_iters, baseline.step_scale)?;
            Ok((sample(&ours), sample(&theirs)))
        })
        .collect::<Result<_>>()?;
    let (non_additive, additive) = pairs.into_iter().unzip();
    Ok(TradeoffCell {
        gamma,
        r_lambda: r,
        non_additive,
        additive,
    })
}

/// Mean and sample standard deviation (zero for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Serialize)]
struct TradeoffRow<'a> {
    gamma: f64,
    r_lambda: f64,
    algorithm: &'a str,
    reward_mean: f64,
    penalty_mean: f64,
    reward_std: f64,
    penalty_std: f64,
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file))
}

/// Sweeps `R_λ = 2^γ` over the configured grid and writes `tradeoff.csv`
/// with one row per `γ` and algorithm.
pub fn cmd_tradeoff(config: &ExperimentConfig, out_dir: &Path) -> Result<PathBuf> {
    let generator = config.generator_section()?;
    let template = config.penalty_spec()?;
    let repeats = config.repeats.unwrap_or(DEFAULT_TRADEOFF_REPEATS);
    ensure_dir(out_dir)?;
    let path = out_dir.join("tradeoff.csv");
    let mut out = csv_writer(&path)?;
    for gamma in config.sweep_or_default() {
        let cell = tradeoff_cell(
            generator,
            &template,
            gamma,
            repeats,
            generator.seed,
            &config.baseline,
        )?;
        for (name, samples) in [("non-additive", &cell.non_additive), ("additive", &cell.additive)] {
            let rewards: Vec<f64> = samples.iter().map(|s| s.reward).collect();
            let penalties: Vec<f64> = samples.iter().map(|s| s.normalized_penalty).collect();
            let (reward_mean, reward_std) = mean_std(&rewards);
            let (penalty_mean, penalty_std) = mean_std(&penalties);
            out.serialize(TradeoffRow {
                gamma,
                r_lambda: cell.r_lambda,
                algorithm: name,
                reward_mean,
                penalty_mean,
                reward_std,
                penalty_std,
            })?;
        }
    }
    out.flush().map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

/// The two penalty regimes compared in regret curves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `R‖·‖₁`, whose conjugate is not strongly convex.
    ConvexL1,
    /// `H_{R,1}(‖·‖₂)`, whose conjugate is 1-strongly convex.
    StronglyConvexHuber,
}

impl Regime {
    pub const ALL: [Regime; 2] = [Regime::ConvexL1, Regime::StronglyConvexHuber];

    pub fn name(self) -> &'static str {
        match self {
            Self::ConvexL1 => "convex-l1",
            Self::StronglyConvexHuber => "strongly-convex-huber",
        }
    }

    pub fn penalty(self, r: f64) -> Result<PenaltySpec> {
        Ok(match self {
            Self::ConvexL1 => PenaltySpec::norm(NormKind::L1, r)?,
            Self::StronglyConvexHuber => PenaltySpec::huber(r, 1.0)?,
        })
    }
}

/// Per-seed regret interval and bound of the saddle-point method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegretSample {
    pub upper: f64,
    pub lower: f64,
    pub bound_total: f64,
}

/// Runs the saddle-point method on `repeats` generated datasets of length
/// `horizon` and measures the regret against the offline bracket.
pub fn regret_samples(
    generator: &GeneratorSection,
    spec: &PenaltySpec,
    horizon: usize,
    repeats: usize,
    base_seed: u64,
    offline: &OfflineSettings,
) -> Result<Vec<RegretSample>> {
    (0..repeats as u64)
        .into_par_iter()
        .map(|k| {
            let cfg = generator.to_config(horizon, base_seed.wrapping_add(k))?;
            let rounds = generate(&cfg)?;
            let schedule = build_schedule(spec, &rounds, &ScheduleOverrides::default())?;
            let trace = run_saddle_point(&rounds, spec, &schedule, &DualVector::zeros(cfg.m))?;
            let sol = solve_offline(&rounds, spec, offline.max_iters, offline.tol)?;
            let report = bound_components(&trace, &rounds, spec, &schedule, &sol)?;
            Ok(RegretSample {
                upper: report.empirical_regret,
                lower: report.empirical_regret_lower,
                bound_total: report.bound_total,
            })
        })
        .collect()
}

/// Least-squares slope of `log y` against `log x`.
pub fn fit_loglog_slope(points: &[(f64, f64)]) -> f64 {
    let logs: Vec<(f64, f64)> = points.iter().map(|(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

#[derive(Debug, Serialize)]
struct RegretRow<'a> {
    #[serde(rename = "T")]
    horizon: usize,
    regime: &'a str,
    regret_upper_mean: f64,
    regret_lower_mean: f64,
    bound_total_mean: f64,
}

/// Regret curves for both regimes over the configured horizons, written to
/// `regret.csv`. The dual radius is taken from the configured penalty.
pub fn cmd_regret(config: &ExperimentConfig, out_dir: &Path) -> Result<PathBuf> {
    let generator = config.generator_section()?;
    let r = config.penalty.r_lambda;
    let repeats = config.repeats.unwrap_or(DEFAULT_REGRET_REPEATS);
    ensure_dir(out_dir)?;
    let path = out_dir.join("regret.csv");
    let mut out = csv_writer(&path)?;
    for horizon in config.horizons_or_default() {
        for regime in Regime::ALL {
            let spec = regime.penalty(r)?;
            let samples =
                regret_samples(generator, &spec, horizon, repeats, generator.seed, &config.offline)?;
            let n = samples.len() as f64;
            out.serialize(RegretRow {
                horizon,
                regime: regime.name(),
                regret_upper_mean: samples.iter().map(|s| s.upper).sum::<f64>() / n,
                regret_lower_mean: samples.iter().map(|s| s.lower).sum::<f64>() / n,
                bound_total_mean: samples.iter().map(|s| s.bound_total).sum::<f64>() / n,
            })?;
        }
    }
    out.flush().map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}
