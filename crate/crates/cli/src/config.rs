use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use tguard_core::{AttackerMode, GameConfig, GameState, Point, ProximityShape, Tolerances};

use crate::error::{CliError, Result};

/// On-disk layout of an experiment config.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    n: usize,
    m: usize,
    speeds: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<Vec<f64>>,
    target: ProximityShape,
    defender_start: Vec<f64>,
    /// Fixed attacker positions for single runs; Monte Carlo batches always sample.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    attacker_starts: Option<Vec<Vec<f64>>>,
    #[serde(default = "default_capture_radius")]
    capture_radius: f64,
    #[serde(default = "default_dt")]
    dt: f64,
    #[serde(default = "default_horizon")]
    horizon: f64,
    #[serde(default = "default_trials")]
    n_trials: usize,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_spawn_radius")]
    spawn_radius: f64,
    #[serde(default = "default_mode")]
    mode: AttackerMode,
    #[serde(default = "default_output_dir")]
    output_dir: PathBuf,
}

fn default_capture_radius() -> f64 {
    1e-3
}
fn default_dt() -> f64 {
    1e-3
}
fn default_horizon() -> f64 {
    200.0
}
fn default_trials() -> usize {
    1000
}
fn default_spawn_radius() -> f64 {
    10.0
}
fn default_mode() -> AttackerMode {
    AttackerMode::Cooperative
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// A validated experiment: the game plus batch and simulation settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub game: GameConfig,
    pub defender_start: Point,
    pub attacker_starts: Option<Vec<Point>>,
    pub n_trials: usize,
    pub seed: u64,
    /// Attackers spawn on the sphere of this radius around the origin.
    pub spawn_radius: f64,
    pub attacker_mode: AttackerMode,
    pub dt: f64,
    pub horizon: f64,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn from_json(text: &str, path: &Path) -> Result<Self> {
        let raw: RawConfig = serde_json::from_str(text).map_err(|e| CliError::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        Self::from_raw(raw)
    }

    fn from_raw(raw: RawConfig) -> Result<Self> {
        let weights = raw.weights.ok_or(CliError::MissingWeights)?;
        let game = GameConfig {
            n: raw.n,
            speeds: raw.speeds,
            weights,
            target: raw.target,
            capture_radius: raw.capture_radius,
            tolerances: Tolerances::default(),
        };
        let mut v = game.violations();
        if game.m() != raw.m {
            v.push(format!("m = {} but {} speed ratios given", raw.m, game.m()));
        }
        if raw.defender_start.len() != raw.n {
            v.push(format!(
                "defender_start has {} coordinates, expected {}",
                raw.defender_start.len(),
                raw.n
            ));
        }
        if let Some(starts) = &raw.attacker_starts {
            if starts.len() != raw.m || starts.iter().any(|a| a.len() != raw.n) {
                v.push(format!("attacker_starts must hold {} points of dimension {}", raw.m, raw.n));
            }
        }
        if raw.n_trials < 1 {
            v.push("n_trials must be at least 1".to_string());
        }
        if let Some(extent) = game.target.extent() {
            if !(raw.spawn_radius > extent) {
                v.push(format!(
                    "spawn_radius {} does not exceed the target extent {extent}",
                    raw.spawn_radius
                ));
            }
        }
        if !(raw.dt > 0.0) {
            v.push(format!("dt must be positive, got {}", raw.dt));
        }
        if !(raw.horizon > 0.0) {
            v.push(format!("horizon must be positive, got {}", raw.horizon));
        }
        if !v.is_empty() {
            return Err(CliError::Invalid(v));
        }
        Ok(ExperimentConfig {
            game,
            defender_start: Point::from_vec(raw.defender_start),
            attacker_starts: raw
                .attacker_starts
                .map(|s| s.into_iter().map(Point::from_vec).collect()),
            n_trials: raw.n_trials,
            seed: raw.seed,
            spawn_radius: raw.spawn_radius,
            attacker_mode: raw.mode,
            dt: raw.dt,
            horizon: raw.horizon,
            output_dir: raw.output_dir,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        let raw = RawConfig {
            n: self.game.n,
            m: self.game.m(),
            speeds: self.game.speeds.clone(),
            weights: Some(self.game.weights.clone()),
            target: self.game.target.clone(),
            defender_start: self.defender_start.iter().copied().collect(),
            attacker_starts: self
                .attacker_starts
                .as_ref()
                .map(|s| s.iter().map(|p| p.iter().copied().collect()).collect()),
            capture_radius: self.game.capture_radius,
            dt: self.dt,
            horizon: self.horizon,
            n_trials: self.n_trials,
            seed: self.seed,
            spawn_radius: self.spawn_radius,
            mode: self.attacker_mode,
            output_dir: self.output_dir.clone(),
        };
        Ok(serde_json::to_string_pretty(&raw)?)
    }

    /// Random initial state of a trial. Each trial draws from its own
    /// ChaCha stream, so a trial's state does not depend on the others.
    pub fn sample_state(&self, trial: u64) -> GameState {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(trial);
        let n = self.game.n;
        let attackers = (0..self.game.m())
            .map(|_| {
                let dir = if n == 2 {
                    let a: f64 = rng.random::<f64>() * std::f64::consts::TAU;
                    Point::from_vec(vec![a.cos(), a.sin()])
                } else {
                    Point::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal)).normalize()
                };
                dir * self.spawn_radius
            })
            .collect();
        GameState::new(attackers, self.defender_start.clone())
    }

    /// The fixed start when one is configured, otherwise trial `trial`'s sample.
    pub fn initial_state(&self, trial: u64) -> GameState {
        match &self.attacker_starts {
            Some(a) => GameState::new(a.clone(), self.defender_start.clone()),
            None => self.sample_state(trial),
        }
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    ExperimentConfig::from_json(&text, path)
}
