use std::path::{Path, PathBuf};
use std::process::Command;

use tguard_cli::montecarlo::{self, read_rows, N_STARTS};
use tguard_cli::{load_config, run_simulation_demo, ExperimentConfig};
use tguard_core::{multistart_solve, AttackerMode, GameState, Point};

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn tguard(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_tguard")).args(args).output().unwrap()
}

fn edited_config(dir: &Path, f: impl FnOnce(&mut serde_json::Value)) -> PathBuf {
    let mut v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(config("six_attackers.json")).unwrap()).unwrap();
    f(&mut v);
    let p = dir.join("cfg.json");
    std::fs::write(&p, v.to_string()).unwrap();
    p
}

#[test]
fn validation_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let p = edited_config(dir.path(), |v| {
        v.as_object_mut().unwrap().remove("weights");
    });
    let o = tguard(&["solve", "--config", p.to_str().unwrap(), "--out", out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("weights required"));

    let p = edited_config(dir.path(), |v| v["weights"] = serde_json::json!([0.1, 0.1, 0.1, 0.2, 0.2, 0.2]));
    let o = tguard(&["solve", "--config", p.to_str().unwrap(), "--out", out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("weights sum"));

    let o = tguard(&["solve", "--config", "/nonexistent.json", "--out", out]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn solve_and_baseline_write_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let cfg = config("six_attackers.json");
    let o = tguard(&["solve", "--config", cfg.to_str().unwrap(), "--out", out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rep: tguard_core::SolveReport =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(rep.best.points.len(), 6);
    let o = tguard(&["baseline", "--config", cfg.to_str().unwrap(), "--out", out]);
    assert!(o.status.success());
    let base: tguard_core::CapturePlan =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("baseline.json")).unwrap()).unwrap();
    assert!(base.value >= rep.best.value - 1e-9);
}

#[test]
fn montecarlo_rows_are_rederivable() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = load_config(&config("six_attackers.json")).unwrap();
    cfg.n_trials = 6;
    cfg.seed = 11;
    let (table, trials) = montecarlo::run_montecarlo(&cfg, dir.path()).unwrap();
    assert_eq!(trials.len(), 6);
    for mode in &table.modes {
        assert_eq!(mode.succeeded + mode.failed, 6);
        for a in &mode.attackers {
            assert!(a.quantiles.windows(2).all(|w| w[0] <= w[1]));
        }
    }
    let rows = read_rows(&dir.path().join("montecarlo.csv")).unwrap();
    assert_eq!(rows.len(), 6 * 6 * 2);
    let states = read_states(&dir.path().join("initial_states.csv"), 6);
    for r in rows.iter().filter(|r| r.mode == AttackerMode::Cooperative && r.attacker == 1) {
        let s = &states[r.trial as usize];
        let rep = multistart_solve(s, &cfg.game, 0, N_STARTS, cfg.seed.wrapping_add(r.trial)).unwrap();
        assert!((rep.best.value - r.value).abs() <= 1e-9);
    }
}

fn read_states(path: &Path, m: usize) -> Vec<GameState> {
    let mut rd = csv::Reader::from_path(path).unwrap();
    let recs: Vec<csv::StringRecord> = rd.records().map(|r| r.unwrap()).collect();
    recs.chunks(m + 1)
        .map(|c| {
            let pt = |r: &csv::StringRecord| Point::from_vec(r.iter().skip(2).map(|x| x.parse().unwrap()).collect());
            GameState::new(c[1..].iter().map(pt).collect(), pt(&c[0]))
        })
        .collect()
}

#[test]
fn montecarlo_is_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = config("six_attackers.json");
    for d in [&a, &b] {
        let o = tguard(&["montecarlo", "--config", cfg.to_str().unwrap(), "--trials", "8", "--seed", "5", "--out", d.path().to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["montecarlo.csv", "initial_states.csv", "stats.json"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

fn svg_point(node: &roxmltree::Node, x: &str, y: &str) -> [f64; 2] {
    [node.attribute(x).unwrap().parse().unwrap(), -node.attribute(y).unwrap().parse::<f64>().unwrap()]
}

fn polyline_points(node: &roxmltree::Node) -> Vec<[f64; 2]> {
    node.attribute("points")
        .unwrap()
        .split_whitespace()
        .map(|p| {
            let (x, y) = p.split_once(',').unwrap();
            [x.parse().unwrap(), -y.parse::<f64>().unwrap()]
        })
        .collect()
}

#[test]
fn single_attacker_figure() {
    let cfg = load_config(&config("single_attacker.json")).unwrap();
    let demo = run_simulation_demo(&cfg, 0).unwrap();
    let svg = demo.svg.unwrap();
    let doc = roxmltree::Document::parse(&svg).unwrap();
    let class = |c: &str| doc.descendants().filter(move |n| n.attribute("class") == Some(c)).collect::<Vec<_>>();
    assert_eq!(class("attacker-path").len(), 1);
    assert_eq!(class("target").len(), 1);
    let defender = class("defender-path");
    assert_eq!(defender.len(), 1);
    let pts = polyline_points(&defender[0]);
    let (first, last) = (pts[0], pts[pts.len() - 1]);
    assert!((first[0] - 2.0).abs() < 1e-4 && first[1].abs() < 1e-4);
    let tol = cfg.game.capture_radius + cfg.dt;
    assert!((last[0] + 2.0 / 3.0).abs() < tol && last[1].abs() < tol, "{last:?}");
}

#[test]
fn six_attacker_figure_matches_the_trajectory() {
    let mut cfg: ExperimentConfig = load_config(&config("six_attackers.json")).unwrap();
    cfg.dt = 1e-2;
    cfg.game.capture_radius = 1e-2;
    let demo = run_simulation_demo(&cfg, 3).unwrap();
    let doc = roxmltree::Document::parse(demo.svg.as_ref().unwrap()).unwrap();
    let class = |c: &str| doc.descendants().filter(move |n| n.attribute("class") == Some(c)).collect::<Vec<_>>();
    assert_eq!(class("attacker-path").len(), 6);
    assert_eq!(class("defender-path").len(), 1);
    assert_eq!(class("target").len(), 1);
    assert_eq!(class("region").len(), 6);
    let caps = class("capture");
    assert_eq!(caps.len(), demo.trajectory.events.len());
    for (c, ev) in caps.iter().zip(&demo.trajectory.events) {
        let p = svg_point(c, "cx", "cy");
        assert!((p[0] - ev.point[0]).abs() <= 1e-4 && (p[1] - ev.point[1]).abs() <= 1e-4);
    }

    let mut buf = Vec::new();
    tguard_cli::demo::write_trajectory(&demo.trajectory, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), demo.trajectory.states.len() + 1);
}

#[test]
fn verify_sweep_on_a_few_instances() {
    let cfg = load_config(&config("six_attackers.json")).unwrap();
    let r = tguard_cli::verify(&cfg, 4, 9);
    assert_eq!(r.instances, 4);
    assert_eq!(r.kkt_pass, 4);
    assert!(r.isaacs_max <= 1e-10);
    assert_eq!(r.boundary_pass, r.boundary_checked);
}
