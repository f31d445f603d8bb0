use std::fmt::Write;

use tguard_core::{
    apollonius_ball, constraint_g, CapturePlan, GameConfig, GameError, GameState, Point,
    ProximityShape, Trajectory,
};

use crate::error::Result;

const REGION_GRID: usize = 160;
const MAX_PATH_POINTS: usize = 2000;
const COLORS: [&str; 6] = ["#d62728", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b", "#e377c2"];

/// Axis-aligned box in game coordinates.
#[derive(Debug, Clone, Copy)]
struct Bounds {
    lo: [f64; 2],
    hi: [f64; 2],
}

impl Bounds {
    fn empty() -> Self {
        Bounds {
            lo: [f64::INFINITY; 2],
            hi: [f64::NEG_INFINITY; 2],
        }
    }

    fn add(&mut self, x: f64, y: f64, r: f64) {
        self.lo[0] = self.lo[0].min(x - r);
        self.lo[1] = self.lo[1].min(y - r);
        self.hi[0] = self.hi[0].max(x + r);
        self.hi[1] = self.hi[1].max(y + r);
    }

    fn padded(self, frac: f64) -> Self {
        let pad = frac * (self.hi[0] - self.lo[0]).max(self.hi[1] - self.lo[1]);
        Bounds {
            lo: [self.lo[0] - pad, self.lo[1] - pad],
            hi: [self.hi[0] + pad, self.hi[1] + pad],
        }
    }

    fn width(&self) -> f64 {
        self.hi[0] - self.lo[0]
    }

    fn height(&self) -> f64 {
        self.hi[1] - self.lo[1]
    }
}

/// SVG y grows downwards, so y is negated on output.
fn xy(p: &Point) -> String {
    format!("{:.4},{:.4}", p[0], -p[1])
}

fn polyline(points: &[&Point]) -> String {
    let stride = points.len().div_ceil(MAX_PATH_POINTS).max(1);
    let mut out: Vec<String> = points.iter().step_by(stride).map(|p| xy(p)).collect();
    if !(points.len() - 1).is_multiple_of(stride) {
        out.push(xy(points[points.len() - 1]));
    }
    out.join(" ")
}

/// Grid cells of `{g_j <= 0}` bordering `{g_j > 0}`, with the capture points
/// ahead of `j` fixed to the plan's.
fn region_boundary(j: usize, plan: &[Point], x0: &GameState, cfg: &GameConfig, b: &Bounds) -> Result<Vec<(f64, f64)>> {
    let k = REGION_GRID;
    let cell = |i: usize, len: f64, lo: f64| lo + len * i as f64 / (k - 1) as f64;
    let mut pts = plan.to_vec();
    let mut inside = vec![false; k * k];
    for iy in 0..k {
        for ix in 0..k {
            pts[j] = Point::from_vec(vec![cell(ix, b.width(), b.lo[0]), cell(iy, b.height(), b.lo[1])]);
            inside[iy * k + ix] = constraint_g(j, &pts, x0, cfg, 0)? <= 0.0;
        }
    }
    let mut out = Vec::new();
    for iy in 0..k {
        for ix in 0..k {
            if !inside[iy * k + ix] {
                continue;
            }
            let edge = (ix + 1 < k && !inside[iy * k + ix + 1])
                || (ix > 0 && !inside[iy * k + ix - 1])
                || (iy + 1 < k && !inside[(iy + 1) * k + ix])
                || (iy > 0 && !inside[(iy - 1) * k + ix]);
            if edge {
                out.push((cell(ix, b.width(), b.lo[0]), cell(iy, b.height(), b.lo[1])));
            }
        }
    }
    Ok(out)
}

fn target_element(shape: &ProximityShape, b: &Bounds, stroke: f64) -> String {
    let style = format!("fill=\"#cfe3f7\" stroke=\"#1f77b4\" stroke-width=\"{stroke:.4}\"");
    match shape {
        ProximityShape::Ball { center, radius } => format!(
            "<circle class=\"target\" cx=\"{:.4}\" cy=\"{:.4}\" r=\"{:.4}\" {style}/>",
            center[0], -center[1], radius
        ),
        ProximityShape::Ellipsoid {
            center,
            shape_matrix: q,
            level,
        } => {
            // boundary (x-c)^T Q (x-c) = level, traced by direction
            let pts: Vec<String> = (0..256)
                .map(|i| {
                    let a = std::f64::consts::TAU * i as f64 / 256.0;
                    let (c, s) = (a.cos(), a.sin());
                    let quad = q[0][0] * c * c + (q[0][1] + q[1][0]) * c * s + q[1][1] * s * s;
                    let r = (level / quad).sqrt();
                    format!("{:.4},{:.4}", center[0] + r * c, -(center[1] + r * s))
                })
                .collect();
            format!("<polygon class=\"target\" points=\"{}\" {style}/>", pts.join(" "))
        }
        ProximityShape::HalfSpace { normal, offset } => {
            // the line normal . x = offset across the view
            let (nx, ny) = (normal[0], normal[1]);
            let (p, q) = if ny.abs() > nx.abs() {
                let y = |x: f64| (offset - nx * x) / ny;
                ((b.lo[0], y(b.lo[0])), (b.hi[0], y(b.hi[0])))
            } else {
                let x = |y: f64| (offset - ny * y) / nx;
                ((x(b.lo[1]), b.lo[1]), (x(b.hi[1]), b.hi[1]))
            };
            format!(
                "<line class=\"target\" x1=\"{:.4}\" y1=\"{:.4}\" x2=\"{:.4}\" y2=\"{:.4}\" stroke=\"#1f77b4\" stroke-width=\"{stroke:.4}\"/>",
                p.0, -p.1, q.0, -q.1
            )
        }
    }
}

/// Planar figure of one run: target, the attackers' reachable regions at the
/// start, agent paths and capture points.
pub fn render(cfg: &GameConfig, traj: &Trajectory, plan: &CapturePlan) -> Result<String> {
    if cfg.n != 2 {
        return Err(GameError::Unsupported(format!("plots need n = 2, got {}", cfg.n)).into());
    }
    let x0 = &traj.states[0];
    let m = cfg.m();
    let ball = apollonius_ball(0, x0, cfg)?;

    let mut b = Bounds::empty();
    for s in &traj.states {
        b.add(s.defender[0], s.defender[1], 0.0);
        for a in &s.attackers {
            b.add(a[0], a[1], 0.0);
        }
    }
    for p in &plan.points {
        b.add(p[0], p[1], 0.0);
    }
    b.add(ball.center[0], ball.center[1], ball.radius);
    if let Some(e) = cfg.target.extent() {
        if let ProximityShape::Ball { center, .. } | ProximityShape::Ellipsoid { center, .. } = &cfg.target {
            let r = e - center.iter().map(|c| c * c).sum::<f64>().sqrt();
            b.add(center[0], center[1], r);
        }
    }
    let b = b.padded(0.05);
    let stroke = 0.003 * b.width().max(b.height());

    let mut s = String::new();
    writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{:.4} {:.4} {:.4} {:.4}\" width=\"800\" height=\"{:.0}\">",
        b.lo[0],
        -b.hi[1],
        b.width(),
        b.height(),
        800.0 * b.height() / b.width()
    )
    .unwrap();
    writeln!(s, "{}", target_element(&cfg.target, &b, stroke)).unwrap();

    writeln!(
        s,
        "<circle class=\"region\" data-attacker=\"1\" cx=\"{:.4}\" cy=\"{:.4}\" r=\"{:.4}\" fill=\"none\" stroke=\"{}\" stroke-dasharray=\"{:.4}\" stroke-width=\"{stroke:.4}\"/>",
        ball.center[0],
        -ball.center[1],
        ball.radius,
        COLORS[0],
        4.0 * stroke
    )
    .unwrap();
    let full = plan.padded_points(x0);
    for j in 1..m {
        let dots = region_boundary(j, &full, x0, cfg, &b)?;
        writeln!(s, "<g class=\"region\" data-attacker=\"{}\" fill=\"{}\">", j + 1, COLORS[j % COLORS.len()]).unwrap();
        for (x, y) in dots {
            writeln!(s, "<circle cx=\"{x:.4}\" cy=\"{:.4}\" r=\"{:.4}\"/>", -y, stroke).unwrap();
        }
        writeln!(s, "</g>").unwrap();
    }

    for j in 0..m {
        let path: Vec<&Point> = traj.states.iter().map(|st| &st.attackers[j]).collect();
        writeln!(
            s,
            "<polyline class=\"attacker-path\" data-attacker=\"{}\" points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"{stroke:.4}\"/>",
            j + 1,
            polyline(&path),
            COLORS[j % COLORS.len()]
        )
        .unwrap();
    }
    let path: Vec<&Point> = traj.states.iter().map(|st| &st.defender).collect();
    writeln!(
        s,
        "<polyline class=\"defender-path\" points=\"{}\" fill=\"none\" stroke=\"#1f1f1f\" stroke-width=\"{:.4}\"/>",
        polyline(&path),
        1.5 * stroke
    )
    .unwrap();
    for ev in &traj.events {
        writeln!(
            s,
            "<circle class=\"capture\" data-attacker=\"{}\" cx=\"{:.4}\" cy=\"{:.4}\" r=\"{:.4}\" fill=\"#000000\"/>",
            ev.attacker + 1,
            ev.point[0],
            -ev.point[1],
            3.0 * stroke
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    Ok(s)
}
