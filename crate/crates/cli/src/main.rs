#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use tguard_cli::{demo, load_config, montecarlo, verify, CliError, ExperimentConfig, Result};
use tguard_core::{multistart_solve, noncooperative_plan, AttackerMode};

#[derive(Debug, Parser)]
#[command(name = "tguard", version, about = "Target-guarding game solver and experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the number of trials (instances for `verify`).
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Output directory; defaults to the config's.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    mode: Option<Mode>,
    #[arg(long, global = true)]
    dt: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the capture-point program at the initial state, write report.json.
    Solve,
    /// Simulate one run, write trajectory.csv, figure.svg and report.json.
    Simulate,
    /// Certification sweep over sampled states, write verify.json.
    Verify,
    /// Paired cooperative/noncooperative batch, write montecarlo.csv and stats.json.
    Montecarlo,
    /// Noncooperative plan at the initial state, write baseline.json.
    Baseline,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Cooperative,
    Noncooperative,
}

fn settings(cli: &Cli) -> Result<(ExperimentConfig, PathBuf)> {
    let path = cli.config.clone().ok_or_else(|| CliError::Invalid(vec!["--config is required".into()]))?;
    let mut cfg = load_config(&path)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = cli.trials {
        if t == 0 {
            return Err(CliError::Invalid(vec!["--trials must be at least 1".into()]));
        }
        cfg.n_trials = t;
    }
    if let Some(m) = cli.mode {
        cfg.attacker_mode = match m {
            Mode::Cooperative => AttackerMode::Cooperative,
            Mode::Noncooperative => AttackerMode::Noncooperative,
        };
    }
    if let Some(dt) = cli.dt {
        if !(dt > 0.0) {
            return Err(CliError::Invalid(vec![format!("--dt must be positive, got {dt}")]));
        }
        cfg.dt = dt;
    }
    let out = cli.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
    std::fs::create_dir_all(&out)?;
    Ok((cfg, out))
}

fn run(cli: &Cli) -> Result<()> {
    let (cfg, out) = settings(cli)?;
    match cli.command {
        Command::Solve => {
            let x0 = cfg.initial_state(0);
            let rep = multistart_solve(&x0, &cfg.game, 0, montecarlo::N_STARTS, cfg.seed)?;
            std::fs::write(out.join("report.json"), serde_json::to_string_pretty(&rep)?)?;
            println!(
                "V = {} (kkt residual {:.1e}, certified {}, ambiguous {})",
                rep.best.value,
                rep.best.kkt_residual,
                rep.best.certificates.all(),
                rep.ambiguous
            );
        }
        Command::Simulate => {
            let d = demo::run_simulation_demo(&cfg, 0)?;
            demo::write_demo(&d, &out)?;
            println!(
                "{:?}: J = {}, V(x0) = {}, {} captures",
                d.trajectory.outcome,
                d.trajectory.realized_payoff,
                d.report.best.value,
                d.trajectory.events.len()
            );
        }
        Command::Verify => {
            let n = cli.trials.unwrap_or(100);
            let r = verify::verify(&cfg, n, cfg.seed);
            std::fs::write(out.join("verify.json"), serde_json::to_string_pretty(&r)?)?;
            println!(
                "{} instances: kkt {}/{}, certified {}, fd agree {}/{}, isaacs max {:.1e}, all active {}/{}, boundary {}/{}",
                r.instances,
                r.kkt_pass,
                r.instances,
                r.certified,
                r.fd_agree,
                r.fd_checked,
                r.isaacs_max,
                r.all_active,
                r.certified_unambiguous,
                r.boundary_pass,
                r.boundary_checked
            );
        }
        Command::Montecarlo => {
            let (table, trials) = montecarlo::run_montecarlo(&cfg, &out)?;
            for a in 1..=cfg.game.m() {
                println!(
                    "A{a}: median h cooperative {:.4}, noncooperative {:.4}",
                    table.median(AttackerMode::Cooperative, a),
                    table.median(AttackerMode::Noncooperative, a)
                );
            }
            println!(
                "mean V {:.4} vs baseline {:.4}; dominance violations {}",
                table.mean_cooperative_value, table.mean_noncooperative_value, table.dominance_violations
            );
            let failed = trials.iter().filter(|t| t.failed()).count();
            if failed > 0 {
                return Err(CliError::TrialFailures {
                    failed,
                    total: trials.len(),
                });
            }
        }
        Command::Baseline => {
            let x0 = cfg.initial_state(0);
            let b = noncooperative_plan(&x0, &cfg.game)?;
            std::fs::write(out.join("baseline.json"), serde_json::to_string_pretty(&b.plan)?)?;
            println!("f = {} (tied stages {:?})", b.plan.value, b.tied_stages);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
