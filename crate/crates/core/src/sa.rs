//! Offline simulated-annealing MTSP baseline.
//!
//! Tours are optimised on straight-line distance and afterwards flown as
//! chained Dubins legs for reporting.

use std::io::Write;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::allocation::{resolve_entry, Metric};
use crate::geometry::{connect, cs_shortest, Point, Pose};
use crate::mission::{coverage_plan, Scenario};

#[derive(Debug, Error)]
pub enum SaError {
    #[error("invalid annealing parameters: {0}")]
    InvalidParams(String),
    #[error("tour {tour}: no flyable leg into task {task}")]
    Smoothing { tour: usize, task: usize },
    #[error("tour {tour}: no flyable return leg")]
    Return { tour: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaParams {
    pub t0: f64,
    /// Multiplier applied after every chain.
    pub cooling: f64,
    /// Proposals per temperature level.
    pub chain_length: usize,
    pub t_min: f64,
    pub max_chains: usize,
    /// Moves that would leave a tour with fewer tasks are rejected.
    pub min_tour_tasks: usize,
    pub seed: u64,
}

impl Default for SaParams {
    fn default() -> Self {
        Self {
            t0: 50.0,
            cooling: 0.99,
            chain_length: 500,
            t_min: 10.0,
            max_chains: 1000,
            min_tour_tasks: 2,
            seed: 0,
        }
    }
}

impl SaParams {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), SaError> {
        if !(self.cooling > 0.0 && self.cooling < 1.0) {
            return Err(SaError::InvalidParams(format!("cooling {} not in (0, 1)", self.cooling)));
        }
        if !(self.t_min > 0.0 && self.t_min < self.t0) {
            return Err(SaError::InvalidParams(format!(
                "need 0 < t_min < t0, got t_min {} and t0 {}",
                self.t_min, self.t0
            )));
        }
        if self.chain_length == 0 || self.max_chains == 0 {
            return Err(SaError::InvalidParams("chain length and chain cap must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TourSet {
    /// Task ids per UAV, each implicitly starting and ending at base.
    pub tours: Vec<Vec<usize>>,
    pub total_euclidean: f64,
    pub total_dubins: Option<f64>,
    /// Dubins length of each tour once smoothed.
    pub tour_dubins: Vec<f64>,
}

impl TourSet {
    /// True when every id in `0..n` appears exactly once.
    pub fn is_partition(&self, n: usize) -> bool {
        let mut seen = vec![false; n];
        for &t in self.tours.iter().flatten() {
            if t >= n || seen[t] {
                return false;
            }
            seen[t] = true;
        }
        seen.into_iter().all(|s| s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainRecord {
    pub chain: usize,
    pub temperature: f64,
    pub best_energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Annealed {
    pub tours: TourSet,
    pub trace: Vec<ChainRecord>,
    pub proposals: usize,
    pub accepted: usize,
}

impl Annealed {
    pub fn write_trace_csv<W: Write>(&self, w: W) -> Result<(), SaError> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["chain", "temperature", "best_energy"]).map_err(csv_io)?;
        for r in &self.trace {
            out.write_record([r.chain.to_string(), r.temperature.to_string(), r.best_energy.to_string()])
                .map_err(csv_io)?;
        }
        out.flush()?;
        Ok(())
    }
}

fn csv_io(e: csv::Error) -> SaError {
    SaError::Io(std::io::Error::other(e))
}

struct Energy<'a> {
    base: Point,
    sites: &'a [Point],
    coverage: f64,
}

impl Energy<'_> {
    fn tour(&self, tour: &[usize]) -> f64 {
        let mut at = self.base;
        let mut total = 0.0;
        for &t in tour {
            total += at.distance(&self.sites[t]);
            at = self.sites[t];
        }
        total + at.distance(&self.base)
    }

    fn total(&self, tours: &[Vec<usize>]) -> f64 {
        tours.iter().map(|t| self.tour(t)).sum::<f64>() + self.coverage
    }
}

/// Round-robin nearest neighbour: UAVs take turns appending the closest
/// unvisited task to their tour.
fn nearest_neighbour(base: Point, sites: &[Point], k: usize) -> Vec<Vec<usize>> {
    let mut tours = vec![Vec::new(); k];
    let mut ends = vec![base; k];
    let mut left: Vec<usize> = (0..sites.len()).collect();
    let mut turn = 0;
    while !left.is_empty() {
        let (pos, _) = left
            .iter()
            .enumerate()
            .map(|(i, &t)| (i, ends[turn].distance(&sites[t])))
            .fold((0, f64::INFINITY), |b, c| if c.1 < b.1 { c } else { b });
        let t = left.remove(pos);
        tours[turn].push(t);
        ends[turn] = sites[t];
        turn = (turn + 1) % k;
    }
    tours
}

/// Applies one random move and returns the indices of the tours it touched.
fn propose(tours: &mut [Vec<usize>], rng: &mut ChaCha8Rng) -> Option<(usize, Option<usize>)> {
    let n: usize = tours.iter().map(Vec::len).sum();
    if n == 0 {
        return None;
    }
    // global position → (tour, index)
    let locate = |tours: &[Vec<usize>], mut g: usize| {
        for (a, t) in tours.iter().enumerate() {
            if g < t.len() {
                return (a, g);
            }
            g -= t.len();
        }
        unreachable!("position within task count")
    };
    match rng.gen_range(0..3) {
        0 => {
            let eligible: Vec<usize> = (0..tours.len()).filter(|&a| tours[a].len() >= 2).collect();
            if eligible.is_empty() {
                return None;
            }
            let a = eligible[rng.gen_range(0..eligible.len())];
            let len = tours[a].len();
            let i = rng.gen_range(0..len - 1);
            let j = rng.gen_range(i + 1..len);
            tours[a][i..=j].reverse();
            Some((a, None))
        }
        1 => {
            let (a, i) = locate(tours, rng.gen_range(0..n));
            let task = tours[a].remove(i);
            let b = rng.gen_range(0..tours.len());
            let at = rng.gen_range(0..=tours[b].len());
            tours[b].insert(at, task);
            Some((a, (a != b).then_some(b)))
        }
        _ => {
            if n < 2 {
                return None;
            }
            let g1 = rng.gen_range(0..n);
            let mut g2 = rng.gen_range(0..n - 1);
            if g2 >= g1 {
                g2 += 1;
            }
            let (a, i) = locate(tours, g1);
            let (b, j) = locate(tours, g2);
            if a == b {
                tours[a].swap(i, j);
                Some((a, None))
            } else {
                let tmp = tours[a][i];
                tours[a][i] = tours[b][j];
                tours[b][j] = tmp;
                Some((a, Some(b)))
            }
        }
    }
}

/// Anneals the scenario's task set over its K UAVs.
pub fn anneal(scenario: &Scenario, params: &SaParams) -> Result<Annealed, SaError> {
    params.validate()?;
    let r = scenario.turn_radius;
    let sites: Vec<Point> = scenario.tasks.iter().map(|t| t.position).collect();
    let coverage = scenario
        .tasks
        .iter()
        .map(|t| t.coverage_length(r).unwrap_or(0.0))
        .sum();
    let energy = Energy {
        base: scenario.base.point(),
        sites: &sites,
        coverage,
    };
    let k = scenario.k.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut current = nearest_neighbour(energy.base, &sites, k);
    let mut lengths: Vec<f64> = current.iter().map(|t| energy.tour(t)).collect();
    let mut e_cur = energy.total(&current);
    let mut best = current.clone();
    let mut e_best = e_cur;
    let mut trace = Vec::new();
    let (mut proposals, mut accepted) = (0, 0);
    let mut temp = params.t0;
    let mut chain = 0;
    while temp >= params.t_min && chain < params.max_chains {
        for _ in 0..params.chain_length {
            proposals += 1;
            let mut cand = current.clone();
            let Some((a, b)) = propose(&mut cand, &mut rng) else {
                continue;
            };
            if cand[a].len() < params.min_tour_tasks {
                continue;
            }
            let la = energy.tour(&cand[a]);
            let lb = b.map(|b| energy.tour(&cand[b]));
            let delta = la - lengths[a] + b.map_or(0.0, |b| lb.unwrap() - lengths[b]);
            if delta <= 0.0 || rng.gen::<f64>() < (-delta / temp).exp() {
                accepted += 1;
                current = cand;
                lengths[a] = la;
                if let (Some(b), Some(lb)) = (b, lb) {
                    lengths[b] = lb;
                }
                e_cur += delta;
                if e_cur < e_best - 1e-9 {
                    // resynchronise to avoid drift from accumulated deltas
                    e_cur = energy.total(&current);
                    if e_cur < e_best {
                        e_best = e_cur;
                        best = current.clone();
                    }
                }
            }
        }
        trace.push(ChainRecord {
            chain,
            temperature: temp,
            best_energy: e_best,
        });
        temp *= params.cooling;
        chain += 1;
    }
    Ok(Annealed {
        tours: TourSet {
            total_euclidean: energy.total(&best),
            tours: best,
            total_dubins: None,
            tour_dubins: Vec::new(),
        },
        trace,
        proposals,
        accepted,
    })
}

/// Best tour set found by annealing.
pub fn sa_solve(scenario: &Scenario, params: &SaParams) -> Result<TourSet, SaError> {
    anneal(scenario, params).map(|a| a.tours)
}

/// Flies every tour as chained Dubins legs: base → entry of each task (the
/// cheapest entry from the current pose) → coverage → next task, then a CS
/// leg back to the base position.
pub fn smooth_with_dubins(tours: &TourSet, scenario: &Scenario) -> Result<TourSet, SaError> {
    let r = scenario.turn_radius;
    let mut per_tour = Vec::with_capacity(tours.tours.len());
    for (k, tour) in tours.tours.iter().enumerate() {
        per_tour.push(fly_tour(tour, scenario, r).map_err(|leg| match leg {
            Some(task) => SaError::Smoothing { tour: k, task },
            None => SaError::Return { tour: k },
        })?);
    }
    Ok(TourSet {
        tours: tours.tours.clone(),
        total_euclidean: tours.total_euclidean,
        total_dubins: Some(per_tour.iter().sum()),
        tour_dubins: per_tour,
    })
}

fn fly_tour(tour: &[usize], scenario: &Scenario, r: f64) -> Result<f64, Option<usize>> {
    if tour.is_empty() {
        return Ok(0.0);
    }
    let mut pose: Pose = scenario.base;
    let mut total = 0.0;
    for &id in tour {
        let task = &scenario.tasks[id];
        let entry = resolve_entry(task, &pose, r, Metric::Dubins).map_err(|_| Some(id))?;
        let leg = connect(pose, &entry.entry, r).map_err(|_| Some(id))?;
        let plan = coverage_plan(task, leg.end_pose(), r).map_err(|_| Some(id))?;
        total += leg.total_length + plan.length;
        pose = plan.exit;
    }
    let home = cs_shortest(pose, scenario.base.point(), r).map_err(|_| None)?;
    Ok(total + home.total_length)
}
