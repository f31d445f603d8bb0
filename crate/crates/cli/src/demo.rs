use std::io::Write;
use std::path::Path;

use tguard_core::{
    multistart_solve, simulate, DefenderMode, SimOptions, SolveReport, SolverOptions, Trajectory,
};

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::montecarlo::N_STARTS;
use crate::svg;

pub fn sim_options(cfg: &ExperimentConfig) -> SimOptions {
    SimOptions {
        dt: cfg.dt,
        horizon: cfg.horizon,
        solver: SolverOptions {
            n_starts: N_STARTS,
            ..Default::default()
        },
        seed: cfg.seed,
        ..Default::default()
    }
}

#[derive(Debug, Clone)]
pub struct Demo {
    /// Plan at the initial state.
    pub report: SolveReport,
    pub trajectory: Trajectory,
    /// Absent for n != 2.
    pub svg: Option<String>,
}

/// One equilibrium run from the configured start (or trial `trial`'s sample).
pub fn run_simulation_demo(cfg: &ExperimentConfig, trial: u64) -> Result<Demo> {
    let x0 = cfg.initial_state(trial);
    let opts = sim_options(cfg);
    let report = multistart_solve(&x0, &cfg.game, 0, opts.solver.n_starts, opts.seed)?;
    let trajectory = simulate(&x0, &cfg.game, cfg.attacker_mode, &DefenderMode::Equilibrium, &opts)?;
    let svg = if cfg.game.n == 2 {
        Some(svg::render(&cfg.game, &trajectory, &report.best)?)
    } else {
        log::warn!("no figure for n = {}", cfg.game.n);
        None
    };
    Ok(Demo {
        report,
        trajectory,
        svg,
    })
}

/// One row per recorded state. `value` is the running payoff plus the value
/// of the remaining phases, blank on the final row.
pub fn write_trajectory<W: Write>(traj: &Trajectory, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let x0 = &traj.states[0];
    let n = x0.defender.len();
    let mut header = vec!["time".to_string(), "captured".to_string(), "value".to_string()];
    header.extend((1..=n).map(|k| format!("defender_x{k}")));
    for j in 1..=x0.attackers.len() {
        header.extend((1..=n).map(|k| format!("attacker{j}_x{k}")));
    }
    wr.write_record(&header)?;
    for (i, (t, s)) in traj.times.iter().zip(&traj.states).enumerate() {
        let mut rec = vec![
            t.to_string(),
            s.phase.to_string(),
            traj.value_trace.get(i).map(f64::to_string).unwrap_or_default(),
        ];
        rec.extend(s.defender.iter().map(f64::to_string));
        for a in &s.attackers {
            rec.extend(a.iter().map(f64::to_string));
        }
        wr.write_record(&rec)?;
    }
    wr.flush()?;
    Ok(())
}

/// Writes `report.json`, `trajectory.csv` and (for planar games) `figure.svg`.
pub fn write_demo(demo: &Demo, out: &Path) -> Result<()> {
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("report.json"), serde_json::to_string_pretty(&demo.report)?)?;
    write_trajectory(&demo.trajectory, std::fs::File::create(out.join("trajectory.csv"))?)?;
    if let Some(svg) = &demo.svg {
        std::fs::write(out.join("figure.svg"), svg)?;
    }
    Ok(())
}
