//! Single-epoch task allocation.
//!
//! A decision epoch builds a cost matrix between the currently idle UAVs and
//! the tasks they may claim, then resolves it with one of three strategies:
//! sequential greedy claims, a joint Hungarian solve, or an ε-scaling
//! forward auction. Costs are connecting-path length plus the task's
//! coverage length, measured either as Dubins distance or straight-line
//! distance.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cluster::ClusterModel;
use crate::geometry::{connect, EntryConfig, GeometryError, Pose};
use crate::mission::{coverage_plan, Task, TaskState, World};

/// Marks a pair that must not be selected.
pub const UNREACHABLE: f64 = f64::INFINITY;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AllocationError {
    #[error("cost matrix has no rows or no columns")]
    EmptyMatrix,
    #[error("no finite entry to select")]
    NoFeasibleTask,
    #[error("invalid strategy configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Metric {
    /// CS / CSC Dubins path length.
    Dubins,
    Euclidean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Strategy {
    Greedy,
    Hungarian,
    Auction,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Greedy => "greedy",
            Strategy::Hungarian => "hungarian",
            Strategy::Auction => "auction",
        })
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Dubins => "dubins",
            Metric::Euclidean => "euclidean",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrategyConfig {
    pub strategy: Strategy,
    pub metric: Metric,
    pub cluster_restricted: bool,
    /// Lets a UAV whose cluster is exhausted claim from the nearest cluster
    /// that still has work. Off by default: such a UAV waits.
    pub cluster_fallback: bool,
    /// Auction bid increment; `None` uses 10⁻³ × the mean finite entry.
    pub auction_epsilon: Option<f64>,
}

impl StrategyConfig {
    pub fn new(strategy: Strategy, metric: Metric, cluster_restricted: bool) -> Self {
        Self {
            strategy,
            metric,
            cluster_restricted,
            cluster_fallback: false,
            auction_epsilon: None,
        }
    }

    pub fn validate(&self) -> Result<(), AllocationError> {
        match self.auction_epsilon {
            Some(e) if !(e > 0.0 && e.is_finite()) => Err(AllocationError::InvalidConfig(format!(
                "auction epsilon must be positive, got {e}"
            ))),
            _ => Ok(()),
        }
    }
}

/// The benchmark methods and the offline baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    Sa,
    Gba,
    Hba,
    Aa,
    Rbddg,
    Rbddh,
    Prbddg,
    Prbddh,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::Sa,
        Method::Gba,
        Method::Hba,
        Method::Aa,
        Method::Rbddg,
        Method::Rbddh,
        Method::Prbddg,
        Method::Prbddh,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Sa => "SA",
            Method::Gba => "GBA",
            Method::Hba => "HBA",
            Method::Aa => "AA",
            Method::Rbddg => "RBDDG",
            Method::Rbddh => "RBDDH",
            Method::Prbddg => "PRBDDG",
            Method::Prbddh => "PRBDDH",
        }
    }

    /// Real-time strategy, or `None` for the offline annealing baseline.
    pub fn strategy(self) -> Option<StrategyConfig> {
        use Metric::*;
        use Strategy::*;
        let (s, m, c) = match self {
            Method::Sa => return None,
            Method::Gba => (Greedy, Euclidean, false),
            Method::Hba => (Hungarian, Euclidean, false),
            Method::Aa => (Auction, Euclidean, false),
            Method::Rbddg => (Greedy, Dubins, false),
            Method::Rbddh => (Hungarian, Dubins, false),
            Method::Prbddg => (Greedy, Dubins, true),
            Method::Prbddh => (Hungarian, Dubins, true),
        };
        Some(StrategyConfig::new(s, m, c))
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                let known: Vec<_> = Method::ALL.iter().map(|m| m.name()).collect();
                format!("unknown method {s:?}; expected one of {}", known.join(", "))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostMatrix {
    /// UAV ids, one per row.
    pub rows: Vec<usize>,
    /// Task ids, one per column.
    pub cols: Vec<usize>,
    pub entries: Vec<Vec<f64>>,
    pub metric: Metric,
}

impl CostMatrix {
    /// Matrix with row/column ids equal to their indices.
    pub fn from_rows(entries: Vec<Vec<f64>>) -> Self {
        let rows = (0..entries.len()).collect();
        let cols = (0..entries.first().map_or(0, Vec::len)).collect();
        Self {
            rows,
            cols,
            entries,
            metric: Metric::Euclidean,
        }
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row][col]
    }

    fn is_empty(&self) -> bool {
        self.rows.is_empty() || self.cols.is_empty()
    }

    /// Drops rows and columns that hold no finite entry.
    pub fn reconstruct(&self) -> CostMatrix {
        let keep_rows: Vec<usize> = (0..self.rows.len())
            .filter(|&r| self.entries[r].iter().any(|c| c.is_finite()))
            .collect();
        let keep_cols: Vec<usize> = (0..self.cols.len())
            .filter(|&c| keep_rows.iter().any(|&r| self.entries[r][c].is_finite()))
            .collect();
        CostMatrix {
            rows: keep_rows.iter().map(|&r| self.rows[r]).collect(),
            cols: keep_cols.iter().map(|&c| self.cols[c]).collect(),
            entries: keep_rows
                .iter()
                .map(|&r| keep_cols.iter().map(|&c| self.entries[r][c]).collect())
                .collect(),
            metric: self.metric,
        }
    }
}

/// One-to-one pairing of UAVs to tasks.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Assignment {
    /// `(uav id, task id)` pairs in ascending UAV order.
    pub pairs: Vec<(usize, usize)>,
    pub unassigned_uavs: Vec<usize>,
}

impl Assignment {
    pub fn total_cost(&self, m: &CostMatrix) -> f64 {
        self.pairs
            .iter()
            .map(|&(u, t)| {
                let r = m.rows.iter().position(|&x| x == u).expect("row id");
                let c = m.cols.iter().position(|&x| x == t).expect("col id");
                m.get(r, c)
            })
            .sum()
    }
}

/// Entry configuration chosen for a UAV approaching a task, with the
/// connecting cost under the given metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedEntry {
    pub entry: EntryConfig,
    pub connect_cost: f64,
}

/// Picks the cheapest entry candidate of `task` as seen from `from`.
pub fn resolve_entry(
    task: &Task,
    from: &Pose,
    turn_radius: f64,
    metric: Metric,
) -> Result<ResolvedEntry, GeometryError> {
    let mut best: Option<ResolvedEntry> = None;
    let mut last_err = GeometryError::Unreachable;
    for entry in task.entry_candidates(turn_radius) {
        let cost = match metric {
            Metric::Euclidean => from.point().distance(&entry.point),
            Metric::Dubins => match connect(*from, &entry, turn_radius) {
                Ok(p) => p.total_length,
                Err(e @ GeometryError::InvalidArgument(_)) => return Err(e),
                Err(e) => {
                    last_err = e;
                    continue;
                }
            },
        };
        if best.is_none_or(|b| cost < b.connect_cost) {
            best = Some(ResolvedEntry {
                entry,
                connect_cost: cost,
            });
        }
    }
    best.ok_or(last_err)
}

/// Cost of every (UAV, task) pair: connection + coverage length.
pub fn build_cost_matrix(
    uavs: &[(usize, Pose)],
    tasks: &[&Task],
    metric: Metric,
    turn_radius: f64,
) -> Result<CostMatrix, AllocationError> {
    if uavs.is_empty() || tasks.is_empty() {
        return Err(AllocationError::EmptyMatrix);
    }
    let coverage: Vec<f64> = tasks
        .iter()
        .map(|t| {
            if t.kind.is_point() {
                0.0
            } else {
                t.coverage_length(turn_radius).unwrap_or(UNREACHABLE)
            }
        })
        .collect();
    let entries = uavs
        .iter()
        .map(|(_, pose)| {
            tasks
                .iter()
                .zip(&coverage)
                .map(|(t, l)| match resolve_entry(t, pose, turn_radius, metric) {
                    Ok(r) => r.connect_cost + l,
                    Err(_) => UNREACHABLE,
                })
                .collect()
        })
        .collect();
    Ok(CostMatrix {
        rows: uavs.iter().map(|(id, _)| *id).collect(),
        cols: tasks.iter().map(|t| t.id).collect(),
        entries,
        metric,
    })
}

/// Index of the smallest finite entry; ties go to the lowest index.
pub fn greedy_select(row: &[f64]) -> Result<usize, AllocationError> {
    let mut best: Option<(usize, f64)> = None;
    for (j, &c) in row.iter().enumerate() {
        if c.is_finite() && best.is_none_or(|(_, b)| c < b) {
            best = Some((j, c));
        }
    }
    best.map(|(j, _)| j).ok_or(AllocationError::NoFeasibleTask)
}

/// Square matrix padded with a sentinel that dominates every finite total.
fn padded(m: &CostMatrix, extra_margin: f64) -> (Vec<Vec<f64>>, f64) {
    let finite_sum: f64 = m
        .entries
        .iter()
        .flatten()
        .filter(|c| c.is_finite())
        .map(|c| c.abs())
        .sum();
    let big = finite_sum + extra_margin + 1.0;
    let n = m.rows.len().max(m.cols.len());
    let square = (0..n)
        .map(|r| {
            (0..n)
                .map(|c| match m.entries.get(r).and_then(|row| row.get(c)) {
                    Some(v) if v.is_finite() => *v,
                    _ => big,
                })
                .collect()
        })
        .collect();
    (square, big)
}

fn collect_pairs(m: &CostMatrix, row_to_col: &[usize]) -> Assignment {
    let mut out = Assignment::default();
    for (r, &uav) in m.rows.iter().enumerate() {
        match row_to_col.get(r) {
            Some(&c) if c < m.cols.len() && m.entries[r][c].is_finite() => {
                out.pairs.push((uav, m.cols[c]))
            }
            _ => out.unassigned_uavs.push(uav),
        }
    }
    out.pairs.sort_unstable();
    out.unassigned_uavs.sort_unstable();
    out
}

/// O(n³) shortest augmenting path Hungarian method on a square matrix.
/// Returns the column assigned to each row.
fn hungarian_square(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    // p[j]: row (1-based) matched to column j; column 0 is the virtual root
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            row_to_col[p[j] - 1] = j - 1;
        }
    }
    row_to_col
}

/// Minimum-total-cost assignment. Rectangular matrices are padded; pairs
/// that land on a dummy or an unreachable entry are dropped.
pub fn hungarian_solve(m: &CostMatrix) -> Assignment {
    if m.is_empty() {
        return Assignment {
            pairs: Vec::new(),
            unassigned_uavs: m.rows.clone(),
        };
    }
    let (square, _) = padded(m, 0.0);
    let mut cols = hungarian_square(&square);
    prefer_low_columns(&square, &mut cols);
    collect_pairs(m, &cols)
}

/// Among equal-cost optima reachable by exchanging two rows' columns,
/// moves lower columns to lower rows.
fn prefer_low_columns(cost: &[Vec<f64>], cols: &mut [usize]) {
    let n = cols.len();
    let mut changed = true;
    while changed {
        changed = false;
        for i in 0..n {
            for j in i + 1..n {
                let (a, b) = (cols[i], cols[j]);
                if a > b && cost[i][b] + cost[j][a] <= cost[i][a] + cost[j][b] {
                    cols.swap(i, j);
                    changed = true;
                }
            }
        }
    }
}

/// Forward auction with ε-scaling on a square cost matrix (minimisation).
fn auction_square(cost: &[Vec<f64>], eps_final: f64) -> Vec<usize> {
    let n = cost.len();
    let (lo, hi) = cost
        .iter()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &c| (lo.min(c), hi.max(c)));
    let mut eps = ((hi - lo) / 4.0).max(eps_final);
    let mut prices = vec![0.0; n];
    loop {
        let mut owner: Vec<Option<usize>> = vec![None; n];
        let mut holds: Vec<Option<usize>> = vec![None; n];
        let mut queue: std::collections::VecDeque<usize> = (0..n).collect();
        while let Some(i) = queue.pop_front() {
            let (mut best_j, mut best, mut second) = (0, f64::INFINITY, f64::INFINITY);
            for j in 0..n {
                let v = cost[i][j] + prices[j];
                if v < best {
                    second = best;
                    best = v;
                    best_j = j;
                } else if v < second {
                    second = v;
                }
            }
            let raise = if second.is_finite() { second - best } else { 0.0 };
            prices[best_j] += raise + eps;
            if let Some(prev) = owner[best_j].replace(i) {
                holds[prev] = None;
                queue.push_back(prev);
            }
            holds[i] = Some(best_j);
        }
        if eps <= eps_final {
            return holds.into_iter().map(|h| h.expect("auction ends fully assigned")).collect();
        }
        eps = (eps / 4.0).max(eps_final);
    }
}

/// Auction assignment whose total is within `n·ε` of optimal.
pub fn auction_solve(m: &CostMatrix, epsilon: f64) -> Result<Assignment, AllocationError> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(AllocationError::InvalidConfig(format!(
            "auction epsilon must be positive, got {epsilon}"
        )));
    }
    if m.is_empty() {
        return Ok(Assignment {
            pairs: Vec::new(),
            unassigned_uavs: m.rows.clone(),
        });
    }
    let n = m.rows.len().max(m.cols.len());
    let (square, _) = padded(m, n as f64 * epsilon);
    Ok(collect_pairs(m, &auction_square(&square, epsilon)))
}

/// 10⁻³ × the mean finite entry (falls back to 10⁻³ when there is none).
pub fn default_auction_epsilon(m: &CostMatrix) -> f64 {
    let finite: Vec<f64> = m.entries.iter().flatten().copied().filter(|c| c.is_finite()).collect();
    let mean = if finite.is_empty() {
        0.0
    } else {
        finite.iter().sum::<f64>() / finite.len() as f64
    };
    if mean > 0.0 {
        1e-3 * mean
    } else {
        1e-3
    }
}

/// One line of the assignment log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentRecord {
    pub time: f64,
    pub uav: usize,
    pub task: usize,
    pub cost: f64,
    pub strategy: Strategy,
    pub metric: Metric,
    /// The task came from another cluster's pool.
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EpochOutcome {
    pub assignment: Assignment,
    pub records: Vec<AssignmentRecord>,
    /// At least one idle UAV had something to choose from.
    pub had_candidates: bool,
}

/// Tasks a UAV may claim and whether they come from the fallback pool.
fn candidates_for(world: &World, model: Option<&ClusterModel>, cfg: &StrategyConfig, uav: usize) -> (Vec<usize>, bool) {
    let open: Vec<usize> = world.unassigned().map(|t| t.id).collect();
    let (Some(model), true) = (model, cfg.cluster_restricted) else {
        return (open, false);
    };
    let Some(own) = world.uavs[uav].cluster else {
        return (open, false);
    };
    let pool = |c: usize| -> Vec<usize> {
        open.iter()
            .copied()
            .filter(|&t| model.cluster_of_task(t).is_none_or(|x| x == c))
            .collect()
    };
    let mine = pool(own);
    if !mine.is_empty() || !cfg.cluster_fallback {
        return (mine, false);
    }
    let here = world.uavs[uav].pose.point();
    let nearest = (0..model.centroids.len())
        .filter(|&c| c != own && open.iter().any(|&t| model.cluster_of_task(t) == Some(c)))
        .min_by(|&a, &b| {
            here.distance(&model.centroids[a])
                .total_cmp(&here.distance(&model.centroids[b]))
                .then(a.cmp(&b))
        });
    match nearest {
        Some(c) => (pool(c), true),
        None => (Vec::new(), false),
    }
}

/// Applies one claim: task → Assigned, UAV → InTransit along the Dubins
/// connection to the chosen entry. Returns false when no path exists.
fn commit(world: &mut World, uav: usize, task: usize, metric: Metric) -> bool {
    let radius = world.turn_radius;
    let pose = world.uavs[uav].pose;
    let Ok(resolved) = resolve_entry(&world.tasks[task], &pose, radius, metric) else {
        return false;
    };
    let Ok(path) = connect(pose, &resolved.entry, radius) else {
        return false;
    };
    let now = world.time;
    if world.tasks[task].assign(uav, now).is_err() {
        return false;
    }
    world.uavs[uav]
        .begin_transit(task, path)
        .expect("available UAV can start a transit");
    true
}

/// Coverage plan at the end of the UAV's current connecting path.
pub fn coverage_for_arrival(world: &World, uav: usize) -> Option<crate::mission::CoveragePlan> {
    let u = &world.uavs[uav];
    let task = &world.tasks[u.current_task?];
    let entry = u.current_path.as_ref()?.end_pose();
    coverage_plan(task, entry, world.turn_radius).ok()
}

/// Runs one allocation round for every available UAV.
pub fn decision_epoch(world: &mut World, model: Option<&ClusterModel>, cfg: &StrategyConfig) -> EpochOutcome {
    let idle: Vec<usize> = world.uavs.iter().filter(|u| u.is_available()).map(|u| u.id).collect();
    let mut out = EpochOutcome::default();
    if idle.is_empty() || world.unassigned().next().is_none() {
        out.assignment.unassigned_uavs = idle;
        return out;
    }
    let radius = world.turn_radius;
    let record = |world: &World, uav: usize, task: usize, cost: f64, fallback: bool| AssignmentRecord {
        time: world.time,
        uav,
        task,
        cost,
        strategy: cfg.strategy,
        metric: cfg.metric,
        fallback,
    };

    match cfg.strategy {
        Strategy::Greedy => {
            for &uav in &idle {
                let (cands, fallback) = candidates_for(world, model, cfg, uav);
                if cands.is_empty() {
                    out.assignment.unassigned_uavs.push(uav);
                    continue;
                }
                out.had_candidates = true;
                let tasks: Vec<&Task> = cands.iter().map(|&t| &world.tasks[t]).collect();
                let m = build_cost_matrix(&[(uav, world.uavs[uav].pose)], &tasks, cfg.metric, radius)
                    .expect("non-empty matrix");
                let picked = greedy_select(&m.entries[0]).ok().map(|j| (m.cols[j], m.entries[0][j]));
                match picked {
                    Some((task, cost)) if commit(world, uav, task, cfg.metric) => {
                        out.assignment.pairs.push((uav, task));
                        out.records.push(record(world, uav, task, cost, fallback));
                    }
                    _ => out.assignment.unassigned_uavs.push(uav),
                }
            }
        }
        Strategy::Hungarian | Strategy::Auction => {
            let sets: Vec<(usize, Vec<usize>, bool)> = idle
                .iter()
                .map(|&u| {
                    let (c, f) = candidates_for(world, model, cfg, u);
                    (u, c, f)
                })
                .collect();
            let mut union: Vec<usize> = sets.iter().flat_map(|(_, c, _)| c.iter().copied()).collect();
            union.sort_unstable();
            union.dedup();
            if union.is_empty() {
                out.assignment.unassigned_uavs = idle;
                return out;
            }
            out.had_candidates = true;
            let tasks: Vec<&Task> = union.iter().map(|&t| &world.tasks[t]).collect();
            let rows: Vec<(usize, Pose)> = idle.iter().map(|&u| (u, world.uavs[u].pose)).collect();
            let mut m = build_cost_matrix(&rows, &tasks, cfg.metric, radius).expect("non-empty matrix");
            for (r, (_, cands, _)) in sets.iter().enumerate() {
                for (c, t) in union.iter().enumerate() {
                    if !cands.contains(t) {
                        m.entries[r][c] = UNREACHABLE;
                    }
                }
            }
            let solvable = m.reconstruct();
            let assignment = match cfg.strategy {
                Strategy::Hungarian => hungarian_solve(&solvable),
                _ => {
                    let eps = cfg.auction_epsilon.unwrap_or_else(|| default_auction_epsilon(&solvable));
                    auction_solve(&solvable, eps).unwrap_or_default()
                }
            };
            for &(uav, task) in &assignment.pairs {
                let r = idle.iter().position(|&u| u == uav).expect("idle row");
                let c = union.iter().position(|&t| t == task).expect("task col");
                if commit(world, uav, task, cfg.metric) {
                    out.assignment.pairs.push((uav, task));
                    out.records.push(record(world, uav, task, m.entries[r][c], sets[r].2));
                }
            }
            let taken: Vec<usize> = out.assignment.pairs.iter().map(|p| p.0).collect();
            out.assignment.unassigned_uavs = idle.into_iter().filter(|u| !taken.contains(u)).collect();
        }
    }
    debug_assert!(world
        .tasks
        .iter()
        .filter(|t| t.state == TaskState::Assigned)
        .all(|t| t.assigned_to.is_some()));
    out
}
