#![allow(dead_code)]

pub mod fd;
pub mod oracles;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tguard_core::{multistart_solve, point, GameConfig, GameState, Point, ProximityShape, SolveReport};

use oracles::{BallTarget, PairInstance};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn on_circle(rng: &mut ChaCha8Rng, radius: f64) -> Point {
    let a: f64 = rng.random::<f64>() * std::f64::consts::TAU;
    point(&[radius * a.cos(), radius * a.sin()])
}

/// Random single-attacker instance with a ball target.
pub struct Single {
    pub cfg: GameConfig,
    pub state: GameState,
    pub target: BallTarget,
}

pub fn random_single(rng: &mut ChaCha8Rng) -> Single {
    let tc = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
    let r = rng.random_range(0.1..1.5);
    let nu = rng.random_range(0.1..0.9);
    let a: [f64; 2] = [rng.random_range(-6.0..6.0), rng.random_range(-6.0..6.0)];
    let d = loop {
        let d: [f64; 2] = [rng.random_range(-6.0..6.0), rng.random_range(-6.0..6.0)];
        if (a[0] - d[0]).hypot(a[1] - d[1]) > 0.5 {
            break d;
        }
    };
    let cfg = GameConfig::new(vec![nu], vec![1.0], ProximityShape::ball(&tc, r).unwrap()).unwrap();
    Single {
        state: GameState::new(vec![point(&a)], point(&d)),
        cfg,
        target: BallTarget { center: tc, radius: r },
    }
}

/// Planar two-attacker instance: unit ball target at the origin, attackers
/// 3 to 6 units out, defender at radius 1.5.
pub fn random_pair(rng: &mut ChaCha8Rng) -> (GameConfig, GameState) {
    let nu: Vec<f64> = (0..2).map(|_| rng.random_range(0.3..0.7)).collect();
    let w0: f64 = rng.random_range(0.2..0.8);
    let cfg = GameConfig::new(nu, vec![w0, 1.0 - w0], ProximityShape::ball(&[0.0, 0.0], 1.0).unwrap()).unwrap();
    let attackers = (0..2)
        .map(|_| {
            let r = rng.random_range(3.0..6.0);
            on_circle(rng, r)
        })
        .collect();
    let d = on_circle(rng, 1.5);
    (cfg, GameState::new(attackers, d))
}

pub fn pair_instance(cfg: &GameConfig, state: &GameState) -> PairInstance {
    let p = |x: &Point| [x[0], x[1]];
    PairInstance {
        target: BallTarget {
            center: [0.0, 0.0],
            radius: 1.0,
        },
        attackers: [p(&state.attackers[0]), p(&state.attackers[1])],
        defender: p(&state.defender),
        speeds: [cfg.speeds[0], cfg.speeds[1]],
        weights: [cfg.weights[0], cfg.weights[1]],
    }
}

/// The six-attacker configuration: speed ratios 1/5.5 .. 1/8, weights
/// (1,5,1,6,1,8)/22, ball target of radius 2 at the origin.
pub fn six_config() -> GameConfig {
    let speeds = [5.5, 6.0, 6.5, 7.0, 7.5, 8.0].iter().map(|d| 1.0 / d).collect();
    let weights = [1.0, 5.0, 1.0, 6.0, 1.0, 8.0].iter().map(|w| w / 22.0).collect();
    GameConfig::new(speeds, weights, ProximityShape::ball(&[0.0, 0.0], 2.0).unwrap()).unwrap()
}

/// Attackers uniform on the radius-10 circle, defender at (2, 2).
pub fn six_state(rng: &mut ChaCha8Rng) -> GameState {
    GameState::new((0..6).map(|_| on_circle(rng, 10.0)).collect(), point(&[2.0, 2.0]))
}

/// Capturable, unambiguous pair instance whose capture points all keep
/// `h >= margin`.
pub fn capturable_pair(rng: &mut ChaCha8Rng, margin: f64) -> (GameConfig, GameState, SolveReport) {
    loop {
        let (cfg, state) = random_pair(rng);
        let Ok(rep) = multistart_solve(&state, &cfg, 0, 32, 0) else {
            continue;
        };
        let ok = rep.in_capturable_set
            && !rep.ambiguous
            && rep.best.certificates.all()
            && rep
                .best
                .points
                .iter()
                .all(|p| cfg.target.value(p).unwrap() >= margin);
        if ok {
            return (cfg, state, rep);
        }
    }
}
