//! Fixed game instances shared by the benchmarks in `benches/`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tguard_core::{point, GameConfig, GameState, ProximityShape};

/// One attacker at (-2, 0), defender at (2, 0), speed ratio 1/2, ball of radius 1/2.
pub fn single() -> (GameConfig, GameState) {
    let cfg = GameConfig::new(vec![0.5], vec![1.0], ProximityShape::ball(&[0.0, 0.0], 0.5).unwrap()).unwrap();
    (cfg, GameState::new(vec![point(&[-2.0, 0.0])], point(&[2.0, 0.0])))
}

/// Six attackers with speed ratios 1/5.5 .. 1/8 and weights (1,5,1,6,1,8)/22
/// spawned on the radius-10 circle; ball target of radius 2; defender at (2, 2).
pub fn six(seed: u64) -> (GameConfig, GameState) {
    let speeds = [5.5, 6.0, 6.5, 7.0, 7.5, 8.0].iter().map(|d| 1.0 / d).collect();
    let weights = [1.0, 5.0, 1.0, 6.0, 1.0, 8.0].iter().map(|w| w / 22.0).collect();
    let cfg = GameConfig::new(speeds, weights, ProximityShape::ball(&[0.0, 0.0], 2.0).unwrap()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let attackers = (0..6)
        .map(|_| {
            let a: f64 = rng.random::<f64>() * std::f64::consts::TAU;
            point(&[10.0 * a.cos(), 10.0 * a.sin()])
        })
        .collect();
    (cfg, GameState::new(attackers, point(&[2.0, 2.0])))
}
