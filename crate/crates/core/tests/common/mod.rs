//! Independent reference computations shared by the integration tests.
//!
//! Nothing here calls into the geometry constructors: the oracles work on
//! raw `(x, y, heading)` tuples and find tangencies numerically.
#![allow(dead_code)]

use std::f64::consts::{PI, TAU};

pub type Cfg = (f64, f64, f64);

fn wrap(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

fn wrap_pi(a: f64) -> f64 {
    let w = wrap(a);
    if w > PI {
        w - TAU
    } else {
        w
    }
}

/// Pose after sweeping `phi` radians on a circle of radius `r`, `k = +1`
/// counterclockwise, `k = -1` clockwise, using the circle parametrisation.
pub fn arc_pose(p: Cfg, r: f64, k: f64, phi: f64) -> Cfg {
    let (cx, cy) = (p.0 - k * r * p.2.sin(), p.1 + k * r * p.2.cos());
    let h = p.2 + k * phi;
    (cx + k * r * h.sin(), cy - k * r * h.cos(), h)
}

fn bisect(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fa < 0.0) == (fm < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
        if b - a < 1e-15 {
            break;
        }
    }
    0.5 * (a + b)
}

/// Roots of `f` on `[0, 2π]` found by dense sampling and bisection. Sign
/// changes across a jump (|f| large on both sides) are skipped.
fn roots(f: &dyn Fn(f64) -> f64, samples: usize, jump: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut prev_x = 0.0;
    let mut prev = f(0.0);
    if prev == 0.0 {
        out.push(0.0);
    }
    for i in 1..=samples {
        let x = TAU * i as f64 / samples as f64;
        let v = f(x);
        if v == 0.0 {
            out.push(x);
        } else if prev != 0.0 && (prev < 0.0) != (v < 0.0) && prev.abs() < jump && v.abs() < jump {
            out.push(bisect(f, prev_x, x));
        }
        prev_x = x;
        prev = v;
    }
    out
}

/// Shortest single-turn-then-straight length for one turn direction, by
/// searching the sweep angle at which the heading points at the goal.
pub fn cs_oracle_dir(start: Cfg, goal: (f64, f64), r: f64, k: f64) -> Option<f64> {
    let g = |phi: f64| {
        let q = arc_pose(start, r, k, phi);
        wrap_pi((goal.1 - q.1).atan2(goal.0 - q.0) - q.2)
    };
    roots(&g, 4096, 1.0)
        .into_iter()
        .map(|phi| {
            let q = arc_pose(start, r, k, phi);
            r * phi + (goal.0 - q.0).hypot(goal.1 - q.1)
        })
        .min_by(f64::total_cmp)
}

/// Shortest CS length together with the heading on arrival.
pub fn cs_oracle_end(start: Cfg, goal: (f64, f64), r: f64) -> Option<(f64, f64)> {
    let mut best: Option<(f64, f64)> = None;
    for k in [1.0, -1.0] {
        let g = |phi: f64| {
            let q = arc_pose(start, r, k, phi);
            wrap_pi((goal.1 - q.1).atan2(goal.0 - q.0) - q.2)
        };
        for phi in roots(&g, 4096, 1.0) {
            let q = arc_pose(start, r, k, phi);
            let len = r * phi + (goal.0 - q.0).hypot(goal.1 - q.1);
            if best.is_none_or(|b| len < b.0) {
                best = Some((len, q.2));
            }
        }
    }
    best
}

pub fn cs_oracle(start: Cfg, goal: (f64, f64), r: f64) -> Option<f64> {
    [1.0, -1.0]
        .into_iter()
        .filter_map(|k| cs_oracle_dir(start, goal, r, k))
        .min_by(f64::total_cmp)
}

/// One CSC word solved numerically: sweep the first arc until the heading
/// line is tangent to the goal circle on the correct side.
pub fn csc_oracle_word(start: Cfg, goal: Cfg, r: f64, k1: f64, k2: f64) -> Option<f64> {
    let c2 = (goal.0 - k2 * r * goal.2.sin(), goal.1 + k2 * r * goal.2.cos());
    let h = |phi: f64| {
        let q = arc_pose(start, r, k1, phi);
        let (ux, uy) = (q.2.cos(), q.2.sin());
        ux * (c2.1 - q.1) - uy * (c2.0 - q.0) - k2 * r
    };
    roots(&h, 1024, f64::INFINITY)
        .into_iter()
        .filter_map(|phi1| {
            let q = arc_pose(start, r, k1, phi1);
            let straight = q.2.cos() * (c2.0 - q.0) + q.2.sin() * (c2.1 - q.1);
            if straight < -1e-9 {
                return None;
            }
            let mut phi2 = wrap(k2 * (goal.2 - q.2));
            if phi2 > TAU - 1e-7 {
                phi2 = 0.0;
            }
            let mut phi1 = phi1;
            if phi1 > TAU - 1e-7 {
                phi1 = 0.0;
            }
            Some(r * (phi1 + phi2) + straight.max(0.0))
        })
        .min_by(f64::total_cmp)
}

pub fn csc_oracle(start: Cfg, goal: Cfg, r: f64) -> Option<f64> {
    [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)]
        .into_iter()
        .filter_map(|(k1, k2)| csc_oracle_word(start, goal, r, k1, k2))
        .min_by(f64::total_cmp)
}

/// Replays `(curvature sign, length)` pieces exactly from `start`.
/// Sign 0 is a straight piece.
pub fn replay(start: Cfg, r: f64, pieces: &[(f64, f64)]) -> Cfg {
    pieces.iter().fold(start, |p, &(k, len)| {
        if k == 0.0 {
            (p.0 + len * p.2.cos(), p.1 + len * p.2.sin(), p.2)
        } else {
            arc_pose(p, r, k, len / r)
        }
    })
}

/// Integrates unit-speed motion with piecewise-constant curvature using
/// small midpoint steps.
pub fn integrate(start: Cfg, pieces: &[(f64, f64, f64)], s: f64, step: f64) -> Cfg {
    let mut p = start;
    let mut left = s;
    for &(curv, len, _) in pieces {
        let mut seg_left = len.min(left);
        left -= seg_left;
        while seg_left > 0.0 {
            let ds = step.min(seg_left);
            let mid = p.2 + 0.5 * curv * ds;
            p = (p.0 + ds * mid.cos(), p.1 + ds * mid.sin(), p.2 + curv * ds);
            seg_left -= ds;
        }
        if left <= 0.0 {
            break;
        }
    }
    p
}

/// All permutations of `items` (Heap's algorithm).
pub fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    fn heap(k: usize, a: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k <= 1 {
            out.push(a.clone());
            return;
        }
        for i in 0..k {
            heap(k - 1, a, out);
            let j = if k.is_multiple_of(2) { i } else { 0 };
            a.swap(j, k - 1);
        }
    }
    let mut a = items.to_vec();
    let mut out = Vec::new();
    heap(a.len(), &mut a, &mut out);
    out
}

/// Minimum-cost injective assignment of rows into columns by enumeration.
pub fn brute_force_assignment(costs: &[Vec<f64>]) -> f64 {
    let rows = costs.len();
    let cols = costs.first().map_or(0, Vec::len);
    fn go(r: usize, costs: &[Vec<f64>], used: &mut Vec<bool>, acc: f64, best: &mut f64) {
        if r == costs.len() {
            *best = best.min(acc);
            return;
        }
        for c in 0..used.len() {
            if !used[c] {
                used[c] = true;
                go(r + 1, costs, used, acc + costs[r][c], best);
                used[c] = false;
            }
        }
    }
    if rows > cols {
        let t: Vec<Vec<f64>> = (0..cols).map(|c| (0..rows).map(|r| costs[r][c]).collect()).collect();
        return brute_force_assignment(&t);
    }
    let mut best = f64::INFINITY;
    go(0, costs, &mut vec![false; cols], 0.0, &mut best);
    best
}

/// Shortest closed tour from `base` through every point, by enumeration.
pub fn closed_tour_optimum(base: (f64, f64), pts: &[(f64, f64)]) -> f64 {
    let d = |a: (f64, f64), b: (f64, f64)| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt();
    let idx: Vec<usize> = (0..pts.len()).collect();
    permutations(&idx)
        .iter()
        .map(|perm| {
            let mut at = base;
            let mut total = 0.0;
            for &i in perm {
                total += d(at, pts[i]);
                at = pts[i];
            }
            total + d(at, base)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Index of the nearest of `centres` among those flagged active; ties go
/// to the lower index.
pub fn nearest_active(p: (f64, f64), centres: &[(f64, f64)], active: &[bool]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, c) in centres.iter().enumerate() {
        if !active[i] {
            continue;
        }
        let d = (p.0 - c.0).hypot(p.1 - c.1);
        if best.is_none_or(|(_, b)| d < b) {
            best = Some((i, d));
        }
    }
    best.map(|b| b.0)
}
