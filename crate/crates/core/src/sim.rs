//! Fixed-step mission simulator.
//!
//! Every step injects due emergencies, runs one decision epoch for the UAVs
//! that are idle, then advances each UAV by `speed · dt` along its current
//! connecting path, coverage plan or return leg. Once every task is done and
//! no more tasks can appear, survivors fly home independently.

use std::io::Write;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::allocation::{coverage_for_arrival, decision_epoch, AssignmentRecord, StrategyConfig};
use crate::cluster::{classify_point, ClusterError, ClusterModel};
use crate::geometry::{cs_shortest, Point, Segment, Turn};
use crate::mission::{random_task, LegKind, ModelError, Scenario, TaskType, TypeMix, UavState, World};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulator configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error("no UAV with id {0}")]
    UnknownUav(usize),
    #[error("position ({x}, {y}) lies outside the mission area")]
    OutOfArea { x: f64, y: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt: f64,
    pub arrival_tolerance: f64,
    pub strategy: StrategyConfig,
    pub preprocess_clustering: bool,
    /// Idle UAVs circle at minimum radius instead of freezing in place.
    pub loiter: bool,
    /// Trace sampling interval in steps.
    pub trace_every: usize,
    /// Simulated-time cap after which the run is declared failed.
    pub max_time: f64,
    pub cluster_seed: u64,
    pub kmeans_iters: usize,
}

impl SimConfig {
    pub fn new(strategy: StrategyConfig) -> Self {
        Self {
            dt: 0.1,
            arrival_tolerance: 1.0,
            preprocess_clustering: strategy.cluster_restricted,
            strategy,
            loiter: false,
            trace_every: 10,
            max_time: 50_000.0,
            cluster_seed: 0,
            kmeans_iters: 100,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(SimError::InvalidConfig(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.arrival_tolerance >= 0.0) {
            return Err(SimError::InvalidConfig(format!(
                "arrival tolerance must be non-negative, got {}",
                self.arrival_tolerance
            )));
        }
        if self.strategy.cluster_restricted && !self.preprocess_clustering {
            return Err(SimError::InvalidConfig(
                "cluster-restricted allocation needs clustering preprocessing".into(),
            ));
        }
        if self.trace_every == 0 || self.kmeans_iters == 0 {
            return Err(SimError::InvalidConfig("trace interval and k-means iterations must be positive".into()));
        }
        self.strategy
            .validate()
            .map_err(|e| SimError::InvalidConfig(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewTaskEvent {
    pub time: f64,
    pub position: Point,
    pub kind: TaskType,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum NewTaskSchedule {
    None,
    Scripted(Vec<NewTaskEvent>),
    /// One Bernoulli draw per step inside the window until `cap` tasks have
    /// appeared; the probability defaults to `cap · dt / window length`.
    Stochastic {
        window: (f64, f64),
        probability: Option<f64>,
        cap: usize,
        mix: TypeMix,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Victim {
    Uav(usize),
    /// Drawn uniformly among live UAVs when the damage fires.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DamageEvent {
    pub time: f64,
    pub victim: Victim,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventTimeline {
    pub new_tasks: NewTaskSchedule,
    pub damage: Vec<DamageEvent>,
    pub seed: u64,
}

const NEW_TASK_STREAM: u64 = 1;
const DAMAGE_STREAM: u64 = 2;
const DAMAGE_TIME_STREAM: u64 = 3;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

impl EventTimeline {
    pub fn none() -> Self {
        Self {
            new_tasks: NewTaskSchedule::None,
            damage: Vec::new(),
            seed: 0,
        }
    }

    /// `count` tasks at seeded uniform times in `window` and uniform
    /// positions inside the area.
    pub fn scripted_new_tasks(
        seed: u64,
        count: usize,
        window: (f64, f64),
        area_side: f64,
        mix: &TypeMix,
        turn_radius: f64,
    ) -> Self {
        let mut rng = stream(seed, NEW_TASK_STREAM);
        let mut events: Vec<NewTaskEvent> = (0..count)
            .map(|i| {
                let time = rng.gen_range(window.0..window.1);
                let task = random_task(&mut rng, i, area_side, mix, turn_radius);
                NewTaskEvent {
                    time,
                    position: task.position,
                    kind: task.kind,
                }
            })
            .collect();
        events.sort_by(|a, b| a.time.total_cmp(&b.time));
        Self {
            new_tasks: NewTaskSchedule::Scripted(events),
            damage: Vec::new(),
            seed,
        }
    }

    pub fn stochastic_new_tasks(seed: u64, window: (f64, f64), cap: usize, mix: TypeMix) -> Self {
        Self {
            new_tasks: NewTaskSchedule::Stochastic {
                window,
                probability: None,
                cap,
                mix,
            },
            damage: Vec::new(),
            seed,
        }
    }

    /// Adds a damage event; without an explicit time it fires at
    /// `50 + 10·u` seconds, `u` uniform in [0, 1).
    pub fn with_damage(mut self, time: Option<f64>, victim: Victim) -> Self {
        let time = time.unwrap_or_else(|| {
            let mut rng = stream(self.seed, DAMAGE_TIME_STREAM + self.damage.len() as u64);
            50.0 + 10.0 * rng.gen::<f64>()
        });
        self.damage.push(DamageEvent { time, victim });
        self.damage.sort_by(|a, b| a.time.total_cmp(&b.time));
        self
    }

    pub fn validate(&self, k: usize) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidConfig(m));
        match &self.new_tasks {
            NewTaskSchedule::Scripted(ev) if ev.iter().any(|e| !(e.time >= 0.0)) => {
                return bad("new-task times must be non-negative".into())
            }
            NewTaskSchedule::Stochastic { window, probability, .. } => {
                if !(window.0 >= 0.0 && window.0 < window.1) {
                    return bad(format!("new-task window {window:?} is empty or negative"));
                }
                if let Some(p) = probability {
                    if !(0.0..=1.0).contains(p) {
                        return bad(format!("emergence probability {p} not in [0, 1]"));
                    }
                }
            }
            _ => {}
        }
        for d in &self.damage {
            if !(d.time >= 0.0) {
                return bad("damage times must be non-negative".into());
            }
            if let Victim::Uav(v) = d.victim {
                if v >= k {
                    return Err(SimError::UnknownUav(v));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Assign,
    Arrive,
    Complete,
    NewTask,
    Damage,
    Release,
    Reassign,
    Home,
}

impl EventKind {
    pub fn label(self) -> &'static str {
        match self {
            EventKind::Assign => "assign",
            EventKind::Arrive => "arrive",
            EventKind::Complete => "complete",
            EventKind::NewTask => "new_task",
            EventKind::Damage => "damage",
            EventKind::Release => "release",
            EventKind::Reassign => "reassign",
            EventKind::Home => "home",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub time: f64,
    pub kind: EventKind,
    pub uav: Option<usize>,
    pub task: Option<usize>,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: f64,
    pub uav_id: usize,
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub state: UavState,
    pub odometer: f64,
}

/// One decision epoch in which at least one idle UAV had candidates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanningEvent {
    pub time: f64,
    pub idle_uavs: Vec<usize>,
    /// Wall-clock seconds spent in matrix construction and solve.
    pub duration_s: f64,
    pub assignments: Vec<AssignmentRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub id: usize,
    pub kind: String,
    pub created_at: f64,
    pub assigned_at: Option<f64>,
    pub completed_at: Option<f64>,
    pub completed_by: Option<usize>,
    pub injected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Outcome {
    Completed,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub config: SimConfig,
    pub world: World,
    pub cluster_model: Option<ClusterModel>,
    pub planning_events: Vec<PlanningEvent>,
    pub tasks: Vec<TaskRecord>,
    pub completion_time: f64,
    pub trace: Vec<TraceRow>,
    pub events: Vec<EventRecord>,
    pub outcome: Outcome,
    pub new_tasks_injected: usize,
    pub uavs_damaged: usize,
}

impl SimResult {
    pub fn succeeded(&self) -> bool {
        self.outcome == Outcome::Completed
    }

    /// Completed task ids per UAV in completion order.
    pub fn sequences(&self) -> Vec<Vec<usize>> {
        self.world
            .uavs
            .iter()
            .map(|u| u.completed.iter().map(|&(t, _)| t).collect())
            .collect()
    }

    pub fn write_trace_csv<W: Write>(&self, w: W) -> Result<(), SimError> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["t", "uav_id", "x", "y", "theta", "state", "odometer"])
            .map_err(csv_io)?;
        for r in &self.trace {
            out.write_record([
                r.t.to_string(),
                r.uav_id.to_string(),
                r.x.to_string(),
                r.y.to_string(),
                r.theta.to_string(),
                r.state.to_string(),
                r.odometer.to_string(),
            ])
            .map_err(csv_io)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_events_csv<W: Write>(&self, w: W) -> Result<(), SimError> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["time", "kind", "uav_id", "task_id", "detail"])
            .map_err(csv_io)?;
        let opt = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
        for e in &self.events {
            out.write_record([
                e.time.to_string(),
                e.kind.label().to_string(),
                opt(e.uav),
                opt(e.task),
                e.detail.clone(),
            ])
            .map_err(csv_io)?;
        }
        out.flush()?;
        Ok(())
    }
}

fn csv_io(e: csv::Error) -> SimError {
    SimError::Io(std::io::Error::other(e))
}

fn log(events: &mut Vec<EventRecord>, time: f64, kind: EventKind, uav: Option<usize>, task: Option<usize>, detail: String) {
    events.push(EventRecord {
        time,
        kind,
        uav,
        task,
        detail,
    });
}

/// Adds an emergent task. With a cluster model the task is bound to the
/// nearest active cluster. Assignment waits for a later decision epoch.
pub fn inject_new_task(
    world: &mut World,
    model: Option<&mut ClusterModel>,
    position: Point,
    kind: TaskType,
    events: &mut Vec<EventRecord>,
) -> Result<usize, SimError> {
    let side = world.area_side;
    if !(0.0..=side).contains(&position.x) || !(0.0..=side).contains(&position.y) {
        return Err(SimError::OutOfArea {
            x: position.x,
            y: position.y,
        });
    }
    let cluster = match &model {
        Some(m) => Some(classify_point(position, m, true)?),
        None => None,
    };
    let now = world.time;
    let id = world.add_task(position, kind, now);
    let detail = match (model, cluster) {
        (Some(m), Some(c)) => {
            m.set_membership(id, c);
            format!("{} at ({:.2}, {:.2}) -> cluster {c}", kind.name(), position.x, position.y)
        }
        _ => format!("{} at ({:.2}, {:.2})", kind.name(), position.x, position.y),
    };
    log(events, now, EventKind::NewTask, None, Some(id), detail);
    Ok(id)
}

/// Disables a UAV. Its current task is released, its cluster is
/// deactivated and every open task of that cluster moves to the nearest
/// active cluster. Damaging a UAV twice only logs a warning.
pub fn inject_damage(
    world: &mut World,
    model: Option<&mut ClusterModel>,
    victim: usize,
    events: &mut Vec<EventRecord>,
) -> Result<(), SimError> {
    let now = world.time;
    let uav = world.uavs.get_mut(victim).ok_or(SimError::UnknownUav(victim))?;
    if uav.state == UavState::Damaged {
        log(events, now, EventKind::Damage, Some(victim), None, "warning: already damaged, ignored".into());
        return Ok(());
    }
    let carried = uav.damage()?;
    let cluster = uav.cluster;
    log(events, now, EventKind::Damage, Some(victim), None, String::new());
    if let Some(task) = carried {
        world.tasks[task].release()?;
        log(events, now, EventKind::Release, Some(victim), Some(task), String::new());
    }
    let (Some(model), Some(cluster)) = (model, cluster) else {
        return Ok(());
    };
    model.deactivate(cluster);
    let orphans: Vec<usize> = world
        .unassigned()
        .filter(|t| model.cluster_of_task(t.id) == Some(cluster))
        .map(|t| t.id)
        .collect();
    for task in orphans {
        let to = classify_point(world.tasks[task].position, model, true)?;
        model.set_membership(task, to);
        log(
            events,
            now,
            EventKind::Reassign,
            None,
            Some(task),
            format!("cluster {cluster} -> {to}"),
        );
    }
    Ok(())
}

struct Engine<'a> {
    cfg: SimConfig,
    timeline: &'a EventTimeline,
    world: World,
    model: Option<ClusterModel>,
    events: Vec<EventRecord>,
    trace: Vec<TraceRow>,
    planning: Vec<PlanningEvent>,
    injected: Vec<usize>,
    scripted_next: usize,
    stochastic_drawn: usize,
    damage_next: usize,
    task_rng: ChaCha8Rng,
    victim_rng: ChaCha8Rng,
    damaged: usize,
}

impl Engine<'_> {
    fn new_tasks_pending(&self) -> bool {
        match &self.timeline.new_tasks {
            NewTaskSchedule::None => false,
            NewTaskSchedule::Scripted(ev) => self.scripted_next < ev.len(),
            NewTaskSchedule::Stochastic { window, cap, .. } => {
                self.stochastic_drawn < *cap && self.world.time <= window.1
            }
        }
    }

    fn inject(&mut self) -> Result<(), SimError> {
        let now = self.world.time;
        let due = now + 1e-9;
        match &self.timeline.new_tasks {
            NewTaskSchedule::None => {}
            NewTaskSchedule::Scripted(ev) => {
                while let Some(e) = ev.get(self.scripted_next).filter(|e| e.time <= due) {
                    let id = inject_new_task(&mut self.world, self.model.as_mut(), e.position, e.kind, &mut self.events)?;
                    self.injected.push(id);
                    self.scripted_next += 1;
                }
            }
            NewTaskSchedule::Stochastic {
                window,
                probability,
                cap,
                mix,
            } => {
                if self.stochastic_drawn < *cap && now >= window.0 && now <= window.1 {
                    let p = probability.unwrap_or(*cap as f64 * self.cfg.dt / (window.1 - window.0)).min(1.0);
                    if self.task_rng.gen::<f64>() < p {
                        let t = random_task(&mut self.task_rng, 0, self.world.area_side, mix, self.world.turn_radius);
                        let id = inject_new_task(&mut self.world, self.model.as_mut(), t.position, t.kind, &mut self.events)?;
                        self.injected.push(id);
                        self.stochastic_drawn += 1;
                    }
                }
            }
        }
        while let Some(d) = self.timeline.damage.get(self.damage_next).filter(|d| d.time <= due) {
            let victim = match d.victim {
                Victim::Uav(v) => Some(v),
                Victim::Random => {
                    let alive: Vec<usize> = self.world.alive().map(|u| u.id).collect();
                    (!alive.is_empty()).then(|| alive[self.victim_rng.gen_range(0..alive.len())])
                }
            };
            self.damage_next += 1;
            let Some(victim) = victim else { continue };
            let was_alive = self.world.uavs.get(victim).is_some_and(|u| u.is_alive());
            inject_damage(&mut self.world, self.model.as_mut(), victim, &mut self.events)?;
            if was_alive {
                self.damaged += 1;
            }
        }
        Ok(())
    }

    fn plan(&mut self) {
        let idle: Vec<usize> = self.world.uavs.iter().filter(|u| u.is_available()).map(|u| u.id).collect();
        if idle.is_empty() || self.world.unassigned().next().is_none() {
            return;
        }
        let start = Instant::now();
        let out = decision_epoch(&mut self.world, self.model.as_ref(), &self.cfg.strategy);
        let duration_s = start.elapsed().as_secs_f64();
        if !out.had_candidates {
            return;
        }
        for r in &out.records {
            let mut detail = format!("cost {:.3} {} {}", r.cost, r.strategy, r.metric);
            if r.fallback {
                detail.push_str(" fallback");
            }
            log(&mut self.events, r.time, EventKind::Assign, Some(r.uav), Some(r.task), detail);
        }
        self.planning.push(PlanningEvent {
            time: self.world.time,
            idle_uavs: idle,
            duration_s,
            assignments: out.records,
        });
    }

    /// Moves one UAV forward by one step; `end` is the time at step end.
    fn advance(&mut self, id: usize, end: f64) -> Result<(), SimError> {
        let tol = self.cfg.arrival_tolerance;
        let loiter = self.cfg.loiter;
        let uav = &mut self.world.uavs[id];
        let step = uav.speed * self.cfg.dt;
        let reach = tol.max(step);
        match uav.state {
            UavState::Damaged => {}
            UavState::InTransit => {
                let path = uav.current_path.clone().expect("transit has a path");
                let remaining = path.total_length - uav.progress;
                let leg = uav.transit_leg();
                if remaining > reach {
                    uav.progress += step;
                    uav.accrue(leg, step);
                    uav.pose = path.sample(uav.progress).expect("progress inside path");
                    return Ok(());
                }
                uav.accrue(leg, remaining.max(0.0));
                uav.pose = path.end_pose();
                let task = uav.current_task.expect("transit has a task");
                let plan = coverage_for_arrival(&self.world, id).ok_or_else(|| {
                    SimError::InvalidConfig(format!("task {task} has no coverage plan from its entry"))
                })?;
                let instant = plan.length <= 0.0;
                self.world.uavs[id].arrive(plan)?;
                log(&mut self.events, end, EventKind::Arrive, Some(id), Some(task), String::new());
                if instant {
                    self.complete(id, end)?;
                }
            }
            UavState::Busy => {
                let plan = uav.coverage.as_ref().expect("busy has a coverage plan");
                let remaining = plan.length - uav.progress;
                if remaining > reach {
                    uav.progress += step;
                    uav.pose = plan.pose_at(uav.progress);
                    uav.accrue(LegKind::Coverage, step);
                    return Ok(());
                }
                uav.pose = plan.exit;
                uav.accrue(LegKind::Coverage, remaining.max(0.0));
                self.complete(id, end)?;
            }
            UavState::Idle => {
                if let Some(home) = uav.home_leg.clone() {
                    let remaining = home.total_length - uav.progress;
                    if remaining > reach {
                        uav.progress += step;
                        uav.accrue(LegKind::Return, step);
                        uav.pose = home.sample(uav.progress).expect("progress inside path");
                        return Ok(());
                    }
                    uav.accrue(LegKind::Return, remaining.max(0.0));
                    uav.pose = home.end_pose();
                    uav.home_leg = None;
                    uav.at_home = true;
                    uav.progress = 0.0;
                    log(&mut self.events, end, EventKind::Home, Some(id), None, String::new());
                } else if loiter && !uav.at_home {
                    uav.pose = Segment::arc(uav.pose, Turn::Left, uav.turn_radius, step).end();
                    uav.loiter_distance += step;
                }
            }
        }
        Ok(())
    }

    fn complete(&mut self, id: usize, now: f64) -> Result<(), SimError> {
        let task = self.world.uavs[id].finish(now)?;
        self.world.tasks[task].complete(now)?;
        log(&mut self.events, now, EventKind::Complete, Some(id), Some(task), String::new());
        Ok(())
    }

    fn send_home(&mut self) {
        let base = self.world.base.point();
        let r = self.world.turn_radius;
        for uav in self.world.uavs.iter_mut() {
            if uav.is_alive() && uav.state == UavState::Idle && uav.home_leg.is_none() && !uav.at_home {
                let leg = cs_shortest(uav.pose, base, r).expect("free-heading return is always flyable");
                uav.progress = 0.0;
                if leg.total_length <= 0.0 {
                    uav.at_home = true;
                } else {
                    uav.home_leg = Some(leg);
                }
            }
        }
    }

    fn record_trace(&mut self, t: f64) {
        for u in &self.world.uavs {
            self.trace.push(TraceRow {
                t,
                uav_id: u.id,
                x: u.pose.x,
                y: u.pose.y,
                theta: u.pose.theta,
                state: u.state,
                odometer: u.odometer(),
            });
        }
    }
}

/// Runs a scenario to completion (or failure) under one strategy.
pub fn run(scenario: &Scenario, cfg: &SimConfig, timeline: &EventTimeline) -> Result<SimResult, SimError> {
    scenario.validate()?;
    cfg.validate()?;
    timeline.validate(scenario.k)?;
    let mut world = World::from_scenario(scenario);
    let model = if cfg.preprocess_clustering {
        Some(ClusterModel::build(&mut world, cfg.cluster_seed, cfg.kmeans_iters)?)
    } else {
        None
    };
    let mut e = Engine {
        cfg: *cfg,
        timeline,
        world,
        model,
        events: Vec::new(),
        trace: Vec::new(),
        planning: Vec::new(),
        injected: Vec::new(),
        scripted_next: 0,
        stochastic_drawn: 0,
        damage_next: 0,
        task_rng: stream(timeline.seed, NEW_TASK_STREAM),
        victim_rng: stream(timeline.seed, DAMAGE_STREAM),
        damaged: 0,
    };
    e.record_trace(0.0);
    let mut outcome = Outcome::Completed;
    let mut step: u64 = 0;
    loop {
        let now = step as f64 * cfg.dt;
        e.world.time = now;
        if let Err(err) = e.inject() {
            match err {
                SimError::Cluster(ClusterError::NoAvailableUav) => {
                    outcome = Outcome::Failed("no active cluster left for an emergent task".into());
                    break;
                }
                other => return Err(other),
            }
        }
        let work_left = !e.world.all_completed() || e.new_tasks_pending();
        if work_left && e.world.alive().next().is_none() {
            outcome = Outcome::Failed("every UAV is damaged with tasks outstanding".into());
            break;
        }
        if !work_left {
            e.send_home();
            if e.world.alive().all(|u| u.at_home) {
                break;
            }
        }
        if now >= cfg.max_time {
            outcome = Outcome::Failed(format!("time limit of {} s reached", cfg.max_time));
            break;
        }
        e.plan();
        let end = (step + 1) as f64 * cfg.dt;
        for id in 0..e.world.uavs.len() {
            e.advance(id, end)?;
        }
        step += 1;
        e.world.time = end;
        if step.is_multiple_of(cfg.trace_every as u64) {
            e.record_trace(end);
        }
    }
    let completion_time = e.world.time;
    if e.trace.last().is_none_or(|r| r.t < completion_time) {
        e.record_trace(completion_time);
    }
    let tasks = e
        .world
        .tasks
        .iter()
        .map(|t| TaskRecord {
            id: t.id,
            kind: t.kind.name().to_string(),
            created_at: t.timeline.created_at,
            assigned_at: t.timeline.assigned_at,
            completed_at: t.timeline.completed_at,
            completed_by: e
                .world
                .uavs
                .iter()
                .find(|u| u.completed.iter().any(|&(c, _)| c == t.id))
                .map(|u| u.id),
            injected: e.injected.contains(&t.id),
        })
        .collect();
    Ok(SimResult {
        config: *cfg,
        cluster_model: e.model,
        planning_events: e.planning,
        tasks,
        completion_time,
        trace: e.trace,
        events: e.events,
        outcome,
        new_tasks_injected: e.injected.len(),
        uavs_damaged: e.damaged,
        world: e.world,
    })
}
