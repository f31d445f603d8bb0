use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tguard_core::{multistart_solve, noncooperative_plan, AttackerMode, GameState, SolveReport};

use crate::config::ExperimentConfig;
use crate::error::Result;

/// Multistart starts per cooperative solve.
pub const N_STARTS: usize = 32;

/// Both plans for one sampled initial state.
#[derive(Debug, Clone)]
pub struct Trial {
    pub index: u64,
    pub state: GameState,
    pub cooperative: std::result::Result<SolveReport, String>,
    /// Baseline capture points and their weighted proximity.
    pub noncooperative: std::result::Result<(Vec<f64>, f64), String>,
}

impl Trial {
    pub fn failed(&self) -> bool {
        self.cooperative.is_err() || self.noncooperative.is_err()
    }
}

pub fn run_trial(cfg: &ExperimentConfig, index: u64) -> Trial {
    let state = cfg.sample_state(index);
    let game = &cfg.game;
    let h = |p: &tguard_core::Point| game.target.value(p).expect("dimension checked by config");
    let cooperative =
        multistart_solve(&state, game, 0, N_STARTS, cfg.seed.wrapping_add(index)).map_err(|e| e.to_string());
    let noncooperative = noncooperative_plan(&state, game)
        .map(|b| (b.plan.points.iter().map(h).collect(), b.plan.value))
        .map_err(|e| e.to_string());
    for (mode, r) in [("cooperative", cooperative.as_ref().err()), ("noncooperative", noncooperative.as_ref().err())] {
        if let Some(e) = r {
            log::warn!("trial {index}: {mode} solve failed: {e}");
        }
    }
    Trial {
        index,
        state,
        cooperative,
        noncooperative,
    }
}

/// All trials, computed in parallel and returned in trial order.
pub fn run_trials(cfg: &ExperimentConfig) -> Vec<Trial> {
    (0..cfg.n_trials as u64)
        .into_par_iter()
        .map(|i| run_trial(cfg, i))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub trial: u64,
    /// One-based attacker label.
    pub attacker: usize,
    pub mode: AttackerMode,
    pub h_at_capture: f64,
    #[serde(rename = "V")]
    pub value: f64,
}

pub fn rows(trials: &[Trial], cfg: &ExperimentConfig) -> Vec<Row> {
    let mut out = Vec::new();
    for t in trials {
        if let Ok(rep) = &t.cooperative {
            for (j, p) in rep.best.points.iter().enumerate() {
                let h = cfg.game.target.value(p).expect("dimension checked by config");
                out.push(Row {
                    trial: t.index,
                    attacker: j + 1,
                    mode: AttackerMode::Cooperative,
                    h_at_capture: h,
                    value: rep.best.value,
                });
            }
        }
        if let Ok((hs, f)) = &t.noncooperative {
            for (j, h) in hs.iter().enumerate() {
                out.push(Row {
                    trial: t.index,
                    attacker: j + 1,
                    mode: AttackerMode::Noncooperative,
                    h_at_capture: *h,
                    value: *f,
                });
            }
        }
    }
    out
}

pub fn write_rows<W: Write>(rows: &[Row], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_rows(path: &Path) -> Result<Vec<Row>> {
    let mut rd = csv::Reader::from_path(path)?;
    Ok(rd.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// One row per agent per trial: `agent` is 0 for the defender, else the attacker label.
pub fn write_states<W: Write>(trials: &[Trial], n: usize, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let mut header = vec!["trial".to_string(), "agent".to_string()];
    header.extend((1..=n).map(|k| format!("x{k}")));
    wr.write_record(&header)?;
    for t in trials {
        let agents = std::iter::once(&t.state.defender).chain(&t.state.attackers);
        for (a, x) in agents.enumerate() {
            let mut rec = vec![t.index.to_string(), a.to_string()];
            rec.extend(x.iter().map(|v| v.to_string()));
            wr.write_record(&rec)?;
        }
    }
    wr.flush()?;
    Ok(())
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub const QUANTILES: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackerStats {
    pub attacker: usize,
    /// h at capture at the 5/25/50/75/95 % levels.
    pub quantiles: [f64; 5],
    /// Capture points with h <= 0, i.e. the attacker reaches the target.
    pub escapes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeStats {
    pub mode: AttackerMode,
    pub succeeded: usize,
    pub failed: usize,
    pub attackers: Vec<AttackerStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsTable {
    pub n_trials: usize,
    pub modes: Vec<ModeStats>,
    /// Trials in which both modes succeeded.
    pub paired: usize,
    pub mean_cooperative_value: f64,
    pub mean_noncooperative_value: f64,
    /// Paired trials with V > f_theta(baseline) beyond 1e-9.
    pub dominance_violations: usize,
}

impl StatsTable {
    pub fn mode(&self, mode: AttackerMode) -> &ModeStats {
        self.modes.iter().find(|s| s.mode == mode).expect("both modes present")
    }

    pub fn median(&self, mode: AttackerMode, attacker: usize) -> f64 {
        self.mode(mode).attackers[attacker - 1].quantiles[2]
    }
}

pub fn stats(trials: &[Trial], cfg: &ExperimentConfig) -> StatsTable {
    let m = cfg.game.m();
    let rows = rows(trials, cfg);
    let modes = [AttackerMode::Cooperative, AttackerMode::Noncooperative]
        .into_iter()
        .map(|mode| {
            let succeeded = trials
                .iter()
                .filter(|t| match mode {
                    AttackerMode::Cooperative => t.cooperative.is_ok(),
                    AttackerMode::Noncooperative => t.noncooperative.is_ok(),
                })
                .count();
            let attackers = (1..=m)
                .map(|a| {
                    let mut h: Vec<f64> = rows
                        .iter()
                        .filter(|r| r.mode == mode && r.attacker == a)
                        .map(|r| r.h_at_capture)
                        .collect();
                    h.sort_by(f64::total_cmp);
                    AttackerStats {
                        attacker: a,
                        quantiles: QUANTILES.map(|q| quantile(&h, q)),
                        escapes: h.iter().filter(|x| **x <= 0.0).count(),
                    }
                })
                .collect();
            ModeStats {
                mode,
                succeeded,
                failed: trials.len() - succeeded,
                attackers,
            }
        })
        .collect();
    let pairs: Vec<(f64, f64)> = trials
        .iter()
        .filter_map(|t| match (&t.cooperative, &t.noncooperative) {
            (Ok(c), Ok((_, f))) => Some((c.best.value, *f)),
            _ => None,
        })
        .collect();
    let mean = |f: &dyn Fn(&(f64, f64)) -> f64| pairs.iter().map(f).sum::<f64>() / pairs.len() as f64;
    StatsTable {
        n_trials: trials.len(),
        modes,
        paired: pairs.len(),
        mean_cooperative_value: mean(&|p| p.0),
        mean_noncooperative_value: mean(&|p| p.1),
        dominance_violations: pairs.iter().filter(|(v, f)| *v > f + 1e-9).count(),
    }
}

/// Runs the batch and writes `montecarlo.csv`, `initial_states.csv` and `stats.json` into `out`.
pub fn run_montecarlo(cfg: &ExperimentConfig, out: &Path) -> Result<(StatsTable, Vec<Trial>)> {
    std::fs::create_dir_all(out)?;
    let trials = run_trials(cfg);
    write_rows(&rows(&trials, cfg), std::fs::File::create(out.join("montecarlo.csv"))?)?;
    write_states(&trials, cfg.game.n, std::fs::File::create(out.join("initial_states.csv"))?)?;
    let table = stats(&trials, cfg);
    std::fs::write(out.join("stats.json"), serde_json::to_string_pretty(&table)?)?;
    Ok((table, trials))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_interpolate() {
        let d = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile(&d, 0.0), 1.0);
        assert_eq!(quantile(&d, 0.5), 3.0);
        assert_eq!(quantile(&d, 1.0), 5.0);
        assert!((quantile(&d, 0.05) - 1.2).abs() < 1e-15);
        assert!(quantile(&[], 0.5).is_nan());
    }

    #[test]
    fn row_csv_roundtrip() {
        let r = vec![Row {
            trial: 3,
            attacker: 2,
            mode: AttackerMode::Noncooperative,
            h_at_capture: 0.1 + 0.2,
            value: 1.0 / 3.0,
        }];
        let mut buf = Vec::new();
        write_rows(&r, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("trial,attacker,mode,h_at_capture,V\n3,2,noncooperative,"));
        let back: Vec<Row> = csv::Reader::from_reader(text.as_bytes())
            .deserialize()
            .collect::<std::result::Result<_, _>>()
            .unwrap();
        assert_eq!(back, r);
    }
}
