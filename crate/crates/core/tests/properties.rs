mod common;

use common::{random_pair, rng, six_config, six_state};
use rand::Rng;
use tguard_core::{
    constraint_g, multistart_solve, noncooperative_plan, point, solve_single, GameConfig, GameState,
    ProximityShape,
};

/// Every agent on the vertical axis, so reflecting x -> -x maps the instance
/// to itself. The optimal plan leaves the axis, hence its mirror image is a
/// second, distinct minimizer of equal value.
fn mirrored() -> (GameConfig, GameState) {
    let cfg = GameConfig::new(
        vec![0.49, 0.47],
        vec![0.67, 0.33],
        ProximityShape::ball(&[0.0, 0.0], 1.0).unwrap(),
    )
    .unwrap();
    let state = GameState::new(vec![point(&[0.0, 5.7]), point(&[0.0, 5.5])], point(&[0.0, -0.8]));
    (cfg, state)
}

#[test]
fn mirrored_instance_has_two_equal_minimizers() {
    let (cfg, state) = mirrored();
    let rep = multistart_solve(&state, &cfg, 0, 32, 0).unwrap();
    assert!(rep.ambiguous);
    let best = &rep.best;
    assert!(best.points[0][0].abs() > 1e-2, "optimum should leave the axis");
    let twin = rep
        .stationary_points
        .iter()
        .find(|p| {
            p.points
                .iter()
                .zip(&best.points)
                .all(|(q, b)| (q[0] + b[0]).abs() < 1e-6 && (q[1] - b[1]).abs() < 1e-6)
        })
        .expect("mirror image among the stationary points");
    assert!((twin.value - best.value).abs() <= 1e-8);
    assert!(best.points[0][0] < 0.0, "lexicographic tie-break picks the left plan");
}

#[test]
fn multistart_never_empty_on_distinct_positions() {
    let mut r = rng(200);
    for i in 0..1000 {
        let m = 1 + i % 3;
        let speeds: Vec<f64> = (0..m).map(|_| r.random_range(0.1..0.9)).collect();
        let raw: Vec<f64> = (0..m).map(|_| r.random_range(0.1..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let weights = raw.iter().map(|w| w / total).collect();
        let Ok(cfg) = GameConfig::new(speeds, weights, ProximityShape::ball(&[0.0, 0.0], 1.0).unwrap()) else {
            continue;
        };
        let attackers = (0..m)
            .map(|_| point(&[r.random_range(-8.0..8.0), r.random_range(-8.0..8.0)]))
            .collect();
        let state = GameState::new(attackers, point(&[r.random_range(-3.0..3.0), r.random_range(-3.0..3.0)]));
        let rep = multistart_solve(&state, &cfg, 0, 4, i as u64).unwrap();
        assert!(!rep.stationary_points.is_empty());
        for j in 0..m {
            let g = constraint_g(j, &rep.best.points, &state, &cfg, 0).unwrap();
            assert!(g <= cfg.tolerances.kkt_tol, "instance {i}: g_{j} = {g}");
        }
        for (k, a) in rep.stationary_points.iter().enumerate() {
            assert!(rep.best.value <= a.value);
            for b in &rep.stationary_points[k + 1..] {
                assert!(a.max_norm_distance(b) > 1e-4);
            }
        }
    }
}

#[test]
fn scaling_positions_scales_the_plan() {
    let mut r = rng(201);
    for _ in 0..10 {
        let (cfg, state) = random_pair(&mut r);
        let s = r.random_range(0.3..3.0);
        let scaled_cfg = GameConfig::new(
            cfg.speeds.clone(),
            cfg.weights.clone(),
            ProximityShape::ball(&[0.0, 0.0], s).unwrap(),
        )
        .unwrap();
        let scaled = GameState::new(
            state.attackers.iter().map(|a| a * s).collect(),
            &state.defender * s,
        );
        let a = multistart_solve(&state, &cfg, 0, 32, 0).unwrap();
        let b = multistart_solve(&scaled, &scaled_cfg, 0, 32, 0).unwrap();
        if a.ambiguous || b.ambiguous {
            continue;
        }
        for (p, q) in a.best.points.iter().zip(&b.best.points) {
            assert!((p * s - q).amax() <= 1e-6 * s.max(1.0));
        }
        assert!((a.best.value * s * s - b.best.value).abs() <= 1e-8 * (1.0 + b.best.value.abs()));
        for (la, lb) in a.best.multipliers.iter().zip(&b.best.multipliers) {
            assert!((la * s - lb).abs() <= 1e-6 * (1.0 + lb.abs()));
        }
    }
}

#[test]
fn seed_changes_do_not_move_the_six_attacker_value() {
    let cfg = six_config();
    let mut r = rng(202);
    for _ in 0..5 {
        let state = six_state(&mut r);
        let a = multistart_solve(&state, &cfg, 0, 32, 1).unwrap();
        let b = multistart_solve(&state, &cfg, 0, 32, 2).unwrap();
        assert!((a.best.value - b.best.value).abs() < cfg.tolerances.value_gap_tol);
    }
}

#[test]
fn cooperation_never_loses_to_the_baseline() {
    let cfg = six_config();
    let mut r = rng(203);
    for _ in 0..20 {
        let state = six_state(&mut r);
        let coop = multistart_solve(&state, &cfg, 0, 32, 0).unwrap();
        let base = noncooperative_plan(&state, &cfg).unwrap();
        for j in 0..cfg.m() {
            let g = constraint_g(j, &base.plan.points, &state, &cfg, 0).unwrap();
            assert!(g <= cfg.tolerances.kkt_tol, "baseline infeasible for the joint program");
        }
        assert!(coop.best.value <= base.plan.value + 1e-9);
    }
}

#[test]
fn last_phase_point_ignores_its_weight() {
    let mut r = rng(204);
    for _ in 0..20 {
        let (cfg, mut state) = random_pair(&mut r);
        state.phase = 1;
        let other = GameConfig::new(
            cfg.speeds.clone(),
            vec![0.9, 0.1],
            cfg.target.clone(),
        )
        .unwrap();
        let a = solve_single(&state, &cfg).unwrap();
        let b = solve_single(&state, &other).unwrap();
        assert!(a.max_norm_distance(&b) <= 1e-8);
    }
}

/// Low-weight attackers may finish strictly ahead of the defender: the
/// certified optimum then has an inactive constraint with zero multiplier.
#[test]
fn certified_optimum_can_leave_a_light_attacker_slack() {
    let cfg = six_config();
    let mut r = rng(1);
    let found = (0..20).any(|_| {
        let state = six_state(&mut r);
        let rep = multistart_solve(&state, &cfg, 0, 32, 7).unwrap();
        rep.best.certificates.all() && !rep.ambiguous && rep.best.active_set.len() < cfg.m()
    });
    assert!(found);
}
