use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use saddleflow::config::ExperimentConfig;
use saddleflow::experiments::{bound_violation, cmd_offline, cmd_regret, cmd_run, cmd_tradeoff};
use saddleflow::validate::run_all;
use saddleflow::{CliError, Result};

/// Online primal-dual allocation with non-additive long-term penalties.
#[derive(Parser)]
#[command(name = "saddleflow", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads for independent runs.
    #[arg(long, global = true, env = "SADDLEFLOW_JOBS")]
    jobs: Option<usize>,
}

#[derive(Args)]
struct Common {
    /// JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config's "output".
    #[arg(long)]
    out: Option<PathBuf>,
    /// Generator seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one algorithm and write trace.jsonl and report.json.
    Run(Common),
    /// Sweep the dual radius and write tradeoff.csv.
    Tradeoff(Common),
    /// Measure regret against the horizon and write regret.csv.
    Regret(Common),
    /// Certify the offline optimum and write offline.json.
    Offline(Common),
    /// Run the built-in invariant suites.
    Validate {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

impl Common {
    fn load(&self) -> Result<(ExperimentConfig, PathBuf)> {
        let config = ExperimentConfig::load(&self.config)?.with_seed(self.seed);
        let out = self
            .out
            .clone()
            .or_else(|| config.output.clone())
            .unwrap_or_else(|| PathBuf::from("saddleflow-out"));
        Ok((config, out))
    }
}

fn wrote(path: &Path) {
    println!("wrote {}", path.display());
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Run(common) => {
            let (config, out) = common.load()?;
            let report = cmd_run(&config, &out)?;
            println!("{}", report.summary_line());
            match bound_violation(&report) {
                Some(err) => Err(err),
                None => Ok(()),
            }
        }
        Command::Tradeoff(common) => {
            let (config, out) = common.load()?;
            wrote(&cmd_tradeoff(&config, &out)?);
            Ok(())
        }
        Command::Regret(common) => {
            let (config, out) = common.load()?;
            wrote(&cmd_regret(&config, &out)?);
            Ok(())
        }
        Command::Offline(common) => {
            let (config, out) = common.load()?;
            let report = cmd_offline(&config, &out)?;
            let s = &report.solution;
            println!(
                "P* in [{:.6}, {:.6}] relative_gap={:.3e} iterations={} converged={}",
                s.p_value, s.d_value, s.relative_gap, s.iterations, s.converged
            );
            Ok(())
        }
        Command::Validate { seed } => {
            let reports = run_all(seed)?;
            for r in &reports {
                println!("{r}");
            }
            let failed = reports.iter().filter(|r| !r.passed()).count();
            println!("{} suites, {failed} failed", reports.len());
            if failed > 0 {
                return Err(CliError::Violation(format!("{failed} validation suites failed")));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
