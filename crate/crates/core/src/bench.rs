//! Method comparison bench and cost-function timing.

use std::hint::black_box;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::allocation::Method;
use crate::geometry::{cs_shortest, csc_shortest, Point, Pose};
use crate::metrics::{collect_metrics, gap, MetricsReport};
use crate::mission::{random_scenario, ModelError, Scenario, TypeMix, DEFAULT_TURN_RADIUS};
use crate::sa::{anneal, smooth_with_dubins, SaError, SaParams, TourSet};
use crate::sim::{run, EventTimeline, SimConfig, SimError, SimResult, Victim};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid bench plan: {0}")]
    InvalidPlan(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Sa(#[from] SaError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Emergencies {
    #[default]
    None,
    NewTasks,
    Damage,
    Both,
}

impl FromStr for Emergencies {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(Emergencies::None),
            "new-tasks" => Ok(Emergencies::NewTasks),
            "damage" => Ok(Emergencies::Damage),
            "both" => Ok(Emergencies::Both),
            _ => Err(format!("unknown emergency set {s:?}; expected none, new-tasks, damage or both")),
        }
    }
}

/// Number of tasks injected by the new-task emergency set.
pub const INJECTED_TASKS: usize = 5;
/// Window in which injected tasks appear, seconds.
pub const NEW_TASK_WINDOW: (f64, f64) = (30.0, 50.0);

impl Emergencies {
    /// Event timeline for one seeded run.
    pub fn timeline(self, seed: u64, scenario: &Scenario, mix: &TypeMix) -> EventTimeline {
        let new_tasks = || {
            EventTimeline::scripted_new_tasks(
                seed,
                INJECTED_TASKS,
                NEW_TASK_WINDOW,
                scenario.area_side,
                mix,
                scenario.turn_radius,
            )
        };
        match self {
            Emergencies::None => EventTimeline { seed, ..EventTimeline::none() },
            Emergencies::NewTasks => new_tasks(),
            Emergencies::Damage => EventTimeline { seed, ..EventTimeline::none() }.with_damage(None, Victim::Random),
            Emergencies::Both => new_tasks().with_damage(None, Victim::Random),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchPlan {
    pub methods: Vec<Method>,
    pub seeds: Vec<u64>,
    pub k: usize,
    pub n: usize,
    pub area_side: f64,
    pub mix: TypeMix,
    pub dt: f64,
    pub emergencies: Emergencies,
    pub sa: SaParams,
}

impl BenchPlan {
    /// 4 UAVs, 25 free point tasks in a 2.5 km square.
    pub fn new(methods: Vec<Method>, seeds: Vec<u64>) -> Self {
        Self {
            methods,
            seeds,
            k: 4,
            n: 25,
            area_side: 2500.0,
            mix: TypeMix::default(),
            dt: 0.1,
            emergencies: Emergencies::None,
            sa: SaParams::default(),
        }
    }

    pub fn trials(&self) -> usize {
        self.seeds.len()
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.methods.is_empty() {
            return Err(BenchError::InvalidPlan("no methods selected".into()));
        }
        if self.seeds.is_empty() {
            return Err(BenchError::InvalidPlan("no seeds (trials = 0)".into()));
        }
        if self.k >= self.n {
            return Err(BenchError::InvalidPlan(format!("need K < N, got K={} N={}", self.k, self.n)));
        }
        Ok(())
    }
}

/// SA outcome on one scenario, smoothed into Dubins legs.
#[derive(Debug, Clone, PartialEq)]
pub struct SaRun {
    pub tours: TourSet,
    pub solve_time_s: f64,
}

pub fn run_sa(scenario: &Scenario, params: &SaParams) -> Result<SaRun, BenchError> {
    let start = Instant::now();
    let annealed = anneal(scenario, params)?;
    let solve_time_s = start.elapsed().as_secs_f64();
    Ok(SaRun {
        tours: smooth_with_dubins(&annealed.tours, scenario)?,
        solve_time_s,
    })
}

/// Simulator settings a bench or single run uses for a real-time method.
pub fn sim_config(method: Method, dt: f64, seed: u64) -> Option<SimConfig> {
    let mut cfg = SimConfig::new(method.strategy()?);
    cfg.dt = dt;
    cfg.cluster_seed = seed;
    Some(cfg)
}

/// One method on one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub method: Method,
    pub seed: u64,
    pub success: bool,
    pub total_distance_m: f64,
    pub gap: Option<f64>,
    pub max_distance_difference_m: f64,
    pub max_task_number_difference: usize,
    pub planning_epochs: usize,
    pub total_planning_time_s: f64,
    pub avg_planning_time_s: f64,
    pub first_decision_share_pct: f64,
}

impl RunRecord {
    fn from_sa(seed: u64, sa: &SaRun) -> Self {
        let dists = &sa.tours.tour_dubins;
        let counts: Vec<usize> = sa.tours.tours.iter().map(Vec::len).collect();
        let spread_f = dists.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - dists.iter().cloned().fold(f64::INFINITY, f64::min);
        Self {
            method: Method::Sa,
            seed,
            success: true,
            total_distance_m: sa.tours.total_dubins.unwrap_or(f64::NAN),
            gap: Some(0.0),
            max_distance_difference_m: if dists.is_empty() { 0.0 } else { spread_f },
            max_task_number_difference: counts.iter().max().unwrap_or(&0) - counts.iter().min().unwrap_or(&0),
            planning_epochs: 1,
            total_planning_time_s: sa.solve_time_s,
            avg_planning_time_s: sa.solve_time_s,
            first_decision_share_pct: 100.0,
        }
    }

    fn from_metrics(method: Method, seed: u64, m: &MetricsReport) -> Self {
        Self {
            method,
            seed,
            success: m.success,
            total_distance_m: m.total_distance_m,
            gap: m.gap,
            max_distance_difference_m: m.max_distance_difference_m,
            max_task_number_difference: m.max_task_number_difference,
            planning_epochs: m.timing.planning_epochs,
            total_planning_time_s: m.timing.total_planning_time_s,
            avg_planning_time_s: m.timing.avg_planning_time_s,
            first_decision_share_pct: m.timing.first_decision_share_pct,
        }
    }
}

/// Per-method averages over successful trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: Method,
    pub trials: usize,
    pub failed_runs: usize,
    pub avg_total_distance_m: f64,
    pub avg_gap_pct: Option<f64>,
    pub max_distance_difference_m: f64,
    pub max_task_number_difference: f64,
    pub avg_total_planning_time_s: f64,
    pub avg_planning_time_s: f64,
    pub first_decision_share_pct: f64,
}

pub const SUMMARY_COLUMNS: [&str; 10] = [
    "method",
    "trials",
    "failed_runs",
    "avg_total_distance_m",
    "avg_gap_pct",
    "max_distance_difference_m",
    "max_task_number_difference",
    "avg_total_planning_time_s",
    "avg_planning_time_s",
    "first_decision_share_pct",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub plan: BenchPlan,
    pub runs: Vec<RunRecord>,
    pub summary: Vec<SummaryRow>,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

fn summarize(method: Method, runs: &[RunRecord], with_baseline: bool) -> SummaryRow {
    let mine: Vec<&RunRecord> = runs.iter().filter(|r| r.method == method).collect();
    let ok: Vec<&RunRecord> = mine.iter().copied().filter(|r| r.success).collect();
    SummaryRow {
        method,
        trials: mine.len(),
        failed_runs: mine.len() - ok.len(),
        avg_total_distance_m: mean(ok.iter().map(|r| r.total_distance_m)),
        avg_gap_pct: with_baseline.then(|| 100.0 * mean(ok.iter().filter_map(|r| r.gap))),
        max_distance_difference_m: mean(ok.iter().map(|r| r.max_distance_difference_m)),
        max_task_number_difference: mean(ok.iter().map(|r| r.max_task_number_difference as f64)),
        avg_total_planning_time_s: mean(ok.iter().map(|r| r.total_planning_time_s)),
        avg_planning_time_s: mean(ok.iter().map(|r| r.avg_planning_time_s)),
        first_decision_share_pct: mean(ok.iter().map(|r| r.first_decision_share_pct)),
    }
}

/// Callback invoked after every simulated run, for callers that persist
/// per-run files.
pub type RunSink<'a> = dyn FnMut(Method, u64, &SimResult, &MetricsReport) -> Result<(), BenchError> + 'a;

/// Runs every method on one generated scenario per seed. SA, when
/// selected, is the baseline for the gap of the other methods.
pub fn run_bench(plan: &BenchPlan) -> Result<BenchReport, BenchError> {
    run_bench_with(plan, &mut |_, _, _, _| Ok(()))
}

pub fn run_bench_with(plan: &BenchPlan, sink: &mut RunSink<'_>) -> Result<BenchReport, BenchError> {
    plan.validate()?;
    let with_sa = plan.methods.contains(&Method::Sa);
    let mut runs = Vec::new();
    for &seed in &plan.seeds {
        let scenario = random_scenario(seed, plan.k, plan.n, plan.area_side, &plan.mix)?;
        let baseline = if with_sa {
            let sa = run_sa(&scenario, &SaParams { seed, ..plan.sa })?;
            runs.push(RunRecord::from_sa(seed, &sa));
            sa.tours.total_dubins
        } else {
            None
        };
        let timeline = plan.emergencies.timeline(seed, &scenario, &plan.mix);
        for &method in plan.methods.iter().filter(|m| **m != Method::Sa) {
            let cfg = sim_config(method, plan.dt, seed).expect("real-time method");
            match run(&scenario, &cfg, &timeline) {
                Ok(result) => {
                    let metrics = collect_metrics(&result, baseline);
                    sink(method, seed, &result, &metrics)?;
                    runs.push(RunRecord::from_metrics(method, seed, &metrics));
                }
                Err(e) => {
                    runs.push(RunRecord {
                        method,
                        seed,
                        success: false,
                        total_distance_m: f64::NAN,
                        gap: None,
                        max_distance_difference_m: f64::NAN,
                        max_task_number_difference: 0,
                        planning_epochs: 0,
                        total_planning_time_s: 0.0,
                        avg_planning_time_s: 0.0,
                        first_decision_share_pct: 0.0,
                    });
                    eprintln!("warning: {method} on seed {seed} failed: {e}");
                }
            }
        }
    }
    let mut methods = plan.methods.clone();
    methods.sort();
    methods.dedup();
    let summary = methods.iter().map(|&m| summarize(m, &runs, with_sa)).collect();
    Ok(BenchReport {
        plan: plan.clone(),
        runs,
        summary,
    })
}

fn fmt_num(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        String::new()
    }
}

impl BenchReport {
    pub fn row(&self, method: Method) -> Option<&SummaryRow> {
        self.summary.iter().find(|r| r.method == method)
    }

    pub fn write_summary_csv<W: Write>(&self, w: W) -> Result<(), BenchError> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(SUMMARY_COLUMNS).map_err(csv_io)?;
        for r in &self.summary {
            out.write_record([
                r.method.name().to_string(),
                r.trials.to_string(),
                r.failed_runs.to_string(),
                fmt_num(r.avg_total_distance_m),
                r.avg_gap_pct.map(fmt_num).unwrap_or_default(),
                fmt_num(r.max_distance_difference_m),
                fmt_num(r.max_task_number_difference),
                fmt_num(r.avg_total_planning_time_s),
                fmt_num(r.avg_planning_time_s),
                fmt_num(r.first_decision_share_pct),
            ])
            .map_err(csv_io)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_runs_csv<W: Write>(&self, w: W) -> Result<(), BenchError> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "method",
            "seed",
            "success",
            "total_distance_m",
            "gap",
            "max_distance_difference_m",
            "max_task_number_difference",
            "planning_epochs",
            "total_planning_time_s",
            "avg_planning_time_s",
            "first_decision_share_pct",
        ])
        .map_err(csv_io)?;
        for r in &self.runs {
            out.write_record([
                r.method.name().to_string(),
                r.seed.to_string(),
                r.success.to_string(),
                fmt_num(r.total_distance_m),
                r.gap.map(fmt_num).unwrap_or_default(),
                fmt_num(r.max_distance_difference_m),
                r.max_task_number_difference.to_string(),
                r.planning_epochs.to_string(),
                fmt_num(r.total_planning_time_s),
                fmt_num(r.avg_planning_time_s),
                fmt_num(r.first_decision_share_pct),
            ])
            .map_err(csv_io)?;
        }
        out.flush()?;
        Ok(())
    }
}

fn csv_io(e: csv::Error) -> BenchError {
    BenchError::Io(std::io::Error::other(e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostTiming {
    pub cost: String,
    pub samples: usize,
    pub repetitions: usize,
    pub mean_s: f64,
}

pub const TIMING_REPETITIONS: usize = 50;

/// Times the straight-line, CS and CSC costs on one shared set of point
/// pairs. Start headings are added for CS and goal headings for CSC.
pub fn time_cost_functions(samples: usize, seed: u64) -> Result<Vec<CostTiming>, BenchError> {
    if samples == 0 {
        return Err(BenchError::InvalidPlan("at least one sample is required".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side = 2500.0;
    let r = DEFAULT_TURN_RADIUS;
    let pairs: Vec<(Point, Point, f64, f64)> = (0..samples)
        .map(|_| {
            (
                Point::new(rng.gen_range(0.0..side), rng.gen_range(0.0..side)),
                Point::new(rng.gen_range(0.0..side), rng.gen_range(0.0..side)),
                rng.gen_range(0.0..std::f64::consts::TAU),
                rng.gen_range(0.0..std::f64::consts::TAU),
            )
        })
        .collect();
    let starts: Vec<Pose> = pairs.iter().map(|(a, _, h, _)| Pose::at(*a, *h)).collect();
    let goals: Vec<Pose> = pairs.iter().map(|(_, b, _, h)| Pose::at(*b, *h)).collect();

    let time = |f: &dyn Fn(usize) -> f64| {
        let start = Instant::now();
        let mut acc = 0.0;
        for _ in 0..TIMING_REPETITIONS {
            for i in 0..samples {
                acc += f(black_box(i));
            }
        }
        black_box(acc);
        start.elapsed().as_secs_f64() / (samples * TIMING_REPETITIONS) as f64
    };
    let euclid = time(&|i| pairs[i].0.distance(&pairs[i].1));
    let cs = time(&|i| cs_shortest(starts[i], goals[i].point(), r).map_or(f64::NAN, |p| p.total_length));
    let csc = time(&|i| csc_shortest(starts[i], goals[i], r).map_or(f64::NAN, |p| p.total_length));
    Ok([("Euclidean", euclid), ("CS", cs), ("CSC", csc)]
        .into_iter()
        .map(|(cost, mean_s)| CostTiming {
            cost: cost.to_string(),
            samples,
            repetitions: TIMING_REPETITIONS,
            mean_s,
        })
        .collect())
}

pub fn write_timing_csv<W: Write>(rows: &[CostTiming], w: W) -> Result<(), BenchError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["cost", "samples", "repetitions", "mean_s"]).map_err(csv_io)?;
    for r in rows {
        out.write_record([r.cost.clone(), r.samples.to_string(), r.repetitions.to_string(), r.mean_s.to_string()])
            .map_err(csv_io)?;
    }
    out.flush()?;
    Ok(())
}

/// Gap of each seed's run against SA, as fractions.
pub fn paired_gaps(report: &BenchReport, method: Method) -> Vec<f64> {
    report
        .runs
        .iter()
        .filter(|r| r.method == method && r.success)
        .filter_map(|r| {
            let sa = report
                .runs
                .iter()
                .find(|s| s.method == Method::Sa && s.seed == r.seed)?;
            Some(gap(r.total_distance_m, sa.total_distance_m))
        })
        .collect()
}
