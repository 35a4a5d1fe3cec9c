use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use swipt_conic::sdpa::write_sdpa;
use swipt_core::active::{build_transmit_relaxation, solve_active};
use swipt_core::checks::run_checks;
use swipt_core::experiment::{
    run_sweep, summary_path, trial_channels, write_output, SweepKind, SweepSpec,
};
use swipt_core::passive::{build_lifted, build_phase_relaxation};
use swipt_core::rng::{lane, stream};
use swipt_core::scenario::{config_to_toml, load_config};
use swipt_core::{default_config, CoreError, ExecMode, Scheme, SystemConfig};

#[derive(Parser)]
#[command(
    name = "swipt",
    version,
    about = "Beamforming experiments for IRS-assisted SWIPT"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepArg {
    Convergence,
    Gamma,
    Power,
}

impl From<SweepArg> for SweepKind {
    fn from(s: SweepArg) -> Self {
        match s {
            SweepArg::Convergence => SweepKind::Convergence,
            SweepArg::Gamma => SweepKind::Gamma,
            SweepArg::Power => SweepKind::Power,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte-Carlo sweep and write per-trial rows plus a summary CSV.
    Run {
        /// TOML configuration; built-in defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        sweep: SweepArg,
        /// Comma-separated SINR targets in dB (gamma) or budgets in watts (power).
        #[arg(long, value_delimiter = ',')]
        grid: Vec<f64>,
        #[arg(long, default_value_t = swipt_core::experiment::DEFAULT_TRIALS)]
        trials: usize,
        /// Overrides the configuration's seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated subset of proposed, info_only_irs, no_irs_energy, info_only_no_irs.
        #[arg(long, value_delimiter = ',')]
        schemes: Vec<String>,
        /// Fill runtime_ms with wall time. Output is then no longer reproducible.
        #[arg(long)]
        timing: bool,
        /// Run every loop on the calling thread.
        #[arg(long)]
        sequential: bool,
    },
    /// Run the invariant suite on small random instances.
    Check {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print the default configuration as TOML.
    InitConfig {
        /// Write to this file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write one trial's channels as JSON and its relaxed problems in SDPA format.
    Dump {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 0)]
        trial: usize,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

const DEFAULT_GAMMA_GRID: [f64; 5] = [5.0, 10.0, 15.0, 20.0, 25.0];
const DEFAULT_POWER_GRID: [f64; 5] = [2.0, 4.0, 6.0, 8.0, 10.0];

fn config_or_default(path: Option<&Path>) -> Result<SystemConfig, CoreError> {
    match path {
        Some(p) => load_config(p),
        None => Ok(default_config()),
    }
}

fn run(cli: Cli) -> Result<ExitCode, CoreError> {
    match cli.command {
        Command::Run {
            config,
            sweep,
            grid,
            trials,
            seed,
            out,
            schemes,
            timing,
            sequential,
        } => {
            let mut cfg = config_or_default(config.as_deref())?;
            if sequential {
                cfg.algo.exec = ExecMode::Sequential;
            }
            let kind = SweepKind::from(sweep);
            let grid = match (kind, grid.is_empty()) {
                (SweepKind::Gamma, true) => DEFAULT_GAMMA_GRID.to_vec(),
                (SweepKind::Power, true) => DEFAULT_POWER_GRID.to_vec(),
                _ => grid,
            };
            let mut spec = SweepSpec::new(kind, grid, cfg);
            spec.n_trials = trials;
            spec.timing = timing;
            if let Some(s) = seed {
                spec.seed = s;
            }
            if !schemes.is_empty() {
                spec.schemes = schemes
                    .iter()
                    .map(|s| s.parse::<Scheme>())
                    .collect::<Result<_, _>>()?;
            }
            let result = run_sweep(&spec)?;
            write_output(&result, &out)?;
            let infeasible = result.rows.iter().filter(|r| !r.feasible).count();
            eprintln!(
                "wrote {} rows to {} and {} summary rows to {} ({} infeasible, {} errors)",
                result.rows.len(),
                out.display(),
                result.summary.len(),
                summary_path(&out).display(),
                infeasible,
                result.errors,
            );
            Ok(if result.errors > 0 {
                ExitCode::FAILURE
            } else {
                ExitCode::SUCCESS
            })
        }
        Command::Check { seed } => {
            let mut ok = true;
            for c in run_checks(seed) {
                println!(
                    "{} {}: {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail
                );
                ok &= c.passed;
            }
            Ok(if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::InitConfig { out } => {
            let text = config_to_toml(&default_config())?;
            match out {
                Some(p) => fs::write(p, text)?,
                None => print!("{text}"),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Dump {
            config,
            seed,
            trial,
            out_dir,
        } => {
            let cfg = config_or_default(config.as_deref())?;
            let seed = seed.unwrap_or(cfg.algo.seed);
            fs::create_dir_all(&out_dir)?;
            let ch = trial_channels(&cfg, seed, trial)?;
            fs::write(out_dir.join("channels.json"), ch.to_json()?)?;

            let theta = vec![0.0; cfg.elements];
            let mut f = fs::File::create(out_dir.join("active.sdpa"))?;
            write_sdpa(&build_transmit_relaxation(&ch, &theta, &cfg), &mut f)?;
            let mut rng = stream(seed, trial as u64, lane::SCHEME_BASE);
            match solve_active(&ch, &theta, &cfg, &mut rng) {
                Ok((a, _)) => {
                    let mut f = fs::File::create(out_dir.join("passive.sdpa"))?;
                    write_sdpa(
                        &build_phase_relaxation(&build_lifted(&ch, &a, &cfg), &cfg),
                        &mut f,
                    )?;
                }
                Err(e) => eprintln!("skipping passive.sdpa: {e}"),
            }
            eprintln!("wrote dump to {}", out_dir.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
