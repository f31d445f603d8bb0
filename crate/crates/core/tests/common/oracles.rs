//! Independent reference solutions for planar instances with a ball target
//! `h(x) = |x - c|^2 - r^2`. Plain `f64` arithmetic only; nothing here calls
//! the solver.
#![allow(dead_code)]

pub type P2 = [f64; 2];

fn sub(a: P2, b: P2) -> P2 {
    [a[0] - b[0], a[1] - b[1]]
}

fn norm(a: P2) -> f64 {
    a[0].hypot(a[1])
}

fn dist(a: P2, b: P2) -> f64 {
    norm(sub(a, b))
}

#[derive(Debug, Clone, Copy)]
pub struct BallTarget {
    pub center: P2,
    pub radius: f64,
}

impl BallTarget {
    pub fn h(&self, x: P2) -> f64 {
        let d = sub(x, self.center);
        d[0] * d[0] + d[1] * d[1] - self.radius * self.radius
    }
}

/// Points reachable by the attacker no later than the defender, from
/// `|p - a|^2 <= nu^2 |p - d|^2` by completing the square.
pub fn apollonius(a: P2, d: P2, nu: f64) -> (P2, f64) {
    let k = 1.0 - nu * nu;
    let c = [(a[0] - nu * nu * d[0]) / k, (a[1] - nu * nu * d[1]) / k];
    (c, nu * dist(a, d) / k)
}

/// Closed-form single-attacker optimum: the target center projected onto the
/// Apollonius ball (or the center itself when it lies inside).
pub fn single_closed_form(t: &BallTarget, a: P2, d: P2, nu: f64, weight: f64) -> (P2, f64) {
    let (c, r) = apollonius(a, d, nu);
    let v = sub(t.center, c);
    let l = norm(v);
    let p = if l <= r {
        t.center
    } else {
        [c[0] + v[0] * r / l, c[1] + v[1] * r / l]
    };
    (p, weight * t.h(p))
}

/// Zoomed grid search over a box in parameter space. `eval` returns `None`
/// outside the domain. Each round centers an `m`-point-per-axis grid on the
/// incumbent and halves the window.
fn refine<const K: usize>(
    mut inc: (f64, [f64; K]),
    mut half: [f64; K],
    m: usize,
    rounds: usize,
    eval: &dyn Fn(&[f64; K]) -> Option<f64>,
) -> (f64, [f64; K]) {
    for _ in 0..rounds {
        let o = inc.1;
        let total = m.pow(K as u32);
        for idx in 0..total {
            let mut x = [0.0; K];
            let mut r = idx;
            for k in 0..K {
                let i = r % m;
                r /= m;
                x[k] = o[k] - half[k] + 2.0 * half[k] * i as f64 / (m - 1) as f64;
            }
            if let Some(v) = eval(&x) {
                if v < inc.0 {
                    inc = (v, x);
                }
            }
        }
        half.iter_mut().for_each(|h| *h *= 0.5);
    }
    inc
}

fn polar(c: P2, rho: f64, th: f64) -> P2 {
    [c[0] + rho * th.cos(), c[1] + rho * th.sin()]
}

/// Brute-force minimum of `weight * h` over the Apollonius ball, parametrized
/// as `c + s R (cos t, sin t)` with `s in [0, 1]` so the boundary is a grid
/// line: an `n x n` grid, then zoomed refinement around the incumbent.
pub fn single_grid(t: &BallTarget, a: P2, d: P2, nu: f64, weight: f64, n: usize) -> f64 {
    let (c, r) = apollonius(a, d, nu);
    let eval = |x: &[f64; 2]| -> Option<f64> {
        if !(0.0..=1.0).contains(&x[0]) {
            return None;
        }
        Some(weight * t.h(polar(c, x[0] * r, x[1])))
    };
    let mut best = (f64::INFINITY, [0.0, 0.0]);
    for i in 0..n {
        for k in 0..n {
            let x = [i as f64 / (n - 1) as f64, std::f64::consts::TAU * k as f64 / n as f64];
            let v = eval(&x).expect("in range");
            if v < best.0 {
                best = (v, x);
            }
        }
    }
    let cell = [2.0 / (n - 1) as f64, 2.0 * std::f64::consts::TAU / n as f64];
    let best = refine(best, cell, 21, 50, &eval);
    let p = polar(c, best.1[0] * r, best.1[1]);
    debug_assert!(dist(p, a) / nu - dist(p, d) <= 1e-9);
    best.0
}

#[derive(Debug, Clone, Copy)]
pub struct PairInstance {
    pub target: BallTarget,
    pub attackers: [P2; 2],
    pub defender: P2,
    pub speeds: [f64; 2],
    pub weights: [f64; 2],
}

impl PairInstance {
    pub fn constraints(&self, p1: P2, p2: P2) -> (f64, f64) {
        let l1 = dist(p1, self.defender);
        (
            dist(p1, self.attackers[0]) / self.speeds[0] - l1,
            dist(p2, self.attackers[1]) / self.speeds[1] - l1 - dist(p2, p1),
        )
    }

    pub fn objective(&self, p1: P2, p2: P2) -> f64 {
        self.weights[0] * self.target.h(p1) + self.weights[1] * self.target.h(p2)
    }
}

/// Largest `rho` with `g_2(a_2 + rho u) <= 0` along direction `u` from the
/// second attacker, given the first capture point. `g_2` increases along the
/// ray, so this is the larger root of a quadratic.
fn reach2(inst: &PairInstance, p1: P2, th: f64) -> f64 {
    let nu = inst.speeds[1];
    let l1 = dist(p1, inst.defender);
    let w = sub(inst.attackers[1], p1);
    let u = [th.cos(), th.sin()];
    let qa = 1.0 / (nu * nu) - 1.0;
    let qb = -2.0 * (l1 / nu + w[0] * u[0] + w[1] * u[1]);
    let qc = l1 * l1 - (w[0] * w[0] + w[1] * w[1]);
    (-qb + (qb * qb - 4.0 * qa * qc).max(0.0).sqrt()) / (2.0 * qa)
}

/// Brute-force minimum for two attackers over an exact parametrization of the
/// feasible set: `p1 = c1 + s1 R1 (cos t1, sin t1)` on the first Apollonius
/// ball and `p2 = a2 + s2 rho(t2; p1) (cos t2, sin t2)` with `rho` the reach of
/// the second attacker along the ray, `s1, s2 in [0, 1]`. A `coarse^4` grid,
/// then zoomed `fine^4` grids around the best coarse candidates.
pub fn pair_grid(inst: &PairInstance, coarse: usize, fine: usize, rounds: usize) -> f64 {
    let (c1, r1) = apollonius(inst.attackers[0], inst.defender, inst.speeds[0]);
    let a2 = inst.attackers[1];
    let points = |x: &[f64; 4]| -> Option<(P2, P2)> {
        if !(0.0..=1.0).contains(&x[0]) || !(0.0..=1.0).contains(&x[2]) {
            return None;
        }
        let p1 = polar(c1, x[0] * r1, x[1]);
        let p2 = polar(a2, x[2] * reach2(inst, p1, x[3]), x[3]);
        Some((p1, p2))
    };
    let eval = |x: &[f64; 4]| points(x).map(|(p1, p2)| inst.objective(p1, p2));

    let n = coarse;
    let s = |i: usize| i as f64 / (n - 1) as f64;
    let th = |k: usize| std::f64::consts::TAU * k as f64 / n as f64;
    let keep = 8;
    let mut top: Vec<(f64, [f64; 4])> = Vec::new();
    for i1 in 0..n {
        for k1 in 0..n {
            let p1 = polar(c1, s(i1) * r1, th(k1));
            let h1 = inst.weights[0] * inst.target.h(p1);
            let mut local = (f64::INFINITY, [0.0; 4]);
            for k2 in 0..n {
                let reach = reach2(inst, p1, th(k2));
                for i2 in 0..n {
                    let p2 = polar(a2, s(i2) * reach, th(k2));
                    let v = h1 + inst.weights[1] * inst.target.h(p2);
                    if v < local.0 {
                        local = (v, [s(i1), th(k1), s(i2), th(k2)]);
                    }
                }
            }
            if top.len() < keep || local.0 < top[top.len() - 1].0 {
                top.push(local);
                top.sort_by(|a, b| a.0.total_cmp(&b.0));
                top.truncate(keep);
            }
        }
    }
    let ds = 2.0 / (n - 1) as f64;
    let dt = 2.0 * std::f64::consts::TAU / n as f64;
    let mut best = f64::INFINITY;
    for cand in top {
        let (v, x) = refine(cand, [ds, dt, ds, dt], fine, rounds, &eval);
        if let Some((p1, p2)) = points(&x) {
            let (g1, g2) = inst.constraints(p1, p2);
            assert!(g1 <= 1e-9 && g2 <= 1e-9, "oracle left the feasible set");
        }
        best = best.min(v);
    }
    best
}
