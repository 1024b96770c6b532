//! Mission records: tasks, vehicles, scenarios and the two state machines.
//!
//! Task lifecycle: `Unassigned → Assigned → Completed`, plus the
//! `Assigned → Unassigned` edge used when the carrying UAV is lost.
//! UAV lifecycle: `Idle → InTransit → Busy → Idle`, and any live state may
//! fall into the absorbing `Damaged` state.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    self, csc_shortest, wrap_angle, DubinsPath, EntryConfig, GeometryError, Point, Pose, Segment,
};

pub const DEFAULT_TURN_RADIUS: f64 = 80.0;
pub const DEFAULT_SPEED: f64 = 17.5;
pub const DEFAULT_AREA_SIDE: f64 = 2500.0;
/// Candidate entry points tried around a circular target.
pub const CIRCLE_ENTRY_CANDIDATES: usize = 32;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("illegal {entity} transition {from} -> {to}")]
    Transition {
        entity: &'static str,
        from: String,
        to: String,
    },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("scenario JSON: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, ModelError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TaskType {
    PointFree,
    PointConstrained {
        entry_heading: f64,
    },
    /// Straight traverse from the task position to `endpoint_b` (either way).
    Line {
        endpoint_b: Point,
    },
    /// Counterclockwise circling around the task position.
    Circle {
        radius: f64,
        sweeps: u32,
    },
    /// Boustrophedon sweep of a `width × height` rectangle centred on the
    /// task position, lanes parallel to `orientation`.
    Area {
        width: f64,
        height: f64,
        orientation: f64,
        lane_spacing: f64,
    },
}

impl TaskType {
    pub fn name(&self) -> &'static str {
        match self {
            TaskType::PointFree | TaskType::PointConstrained { .. } => "point",
            TaskType::Line { .. } => "line",
            TaskType::Circle { .. } => "circle",
            TaskType::Area { .. } => "area",
        }
    }

    pub fn is_point(&self) -> bool {
        matches!(self, TaskType::PointFree | TaskType::PointConstrained { .. })
    }

    fn validate(&self, turn_radius: f64) -> Result<()> {
        let bad = |msg: String| Err(ModelError::InvalidScenario(msg));
        match *self {
            TaskType::PointFree => Ok(()),
            TaskType::PointConstrained { entry_heading } if !entry_heading.is_finite() => {
                bad("constrained heading must be finite".into())
            }
            TaskType::PointConstrained { .. } => Ok(()),
            TaskType::Line { endpoint_b } if !endpoint_b.is_finite() => {
                bad("line endpoint must be finite".into())
            }
            TaskType::Line { .. } => Ok(()),
            TaskType::Circle { radius, sweeps } => {
                if !(radius >= turn_radius) {
                    bad(format!("circle radius {radius} below turn radius {turn_radius}"))
                } else if sweeps == 0 {
                    bad("circle needs at least one sweep".into())
                } else {
                    Ok(())
                }
            }
            TaskType::Area {
                width,
                height,
                orientation,
                lane_spacing,
            } => {
                if !(width > 0.0 && height > 0.0 && lane_spacing > 0.0) || !orientation.is_finite() {
                    bad(format!(
                        "area needs positive width/height/lane_spacing, got {width}/{height}/{lane_spacing}"
                    ))
                } else {
                    Ok(())
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TaskState {
    Unassigned,
    Assigned,
    Completed,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TaskTimeline {
    pub created_at: f64,
    pub assigned_at: Option<f64>,
    pub completed_at: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub id: usize,
    pub position: Point,
    pub kind: TaskType,
    pub state: TaskState,
    pub assigned_to: Option<usize>,
    pub timeline: TaskTimeline,
}

impl Task {
    pub fn new(id: usize, position: Point, kind: TaskType) -> Self {
        Self {
            id,
            position,
            kind,
            state: TaskState::Unassigned,
            assigned_to: None,
            timeline: TaskTimeline::default(),
        }
    }

    fn illegal(&self, to: TaskState) -> ModelError {
        ModelError::Transition {
            entity: "task",
            from: format!("{:?}", self.state),
            to: format!("{to:?}"),
        }
    }

    pub fn assign(&mut self, uav: usize, now: f64) -> Result<()> {
        if self.state != TaskState::Unassigned {
            return Err(self.illegal(TaskState::Assigned));
        }
        self.state = TaskState::Assigned;
        self.assigned_to = Some(uav);
        self.timeline.assigned_at = Some(now.max(self.timeline.created_at));
        Ok(())
    }

    pub fn complete(&mut self, now: f64) -> Result<()> {
        if self.state != TaskState::Assigned {
            return Err(self.illegal(TaskState::Completed));
        }
        self.state = TaskState::Completed;
        let floor = self.timeline.assigned_at.unwrap_or(self.timeline.created_at);
        self.timeline.completed_at = Some(now.max(floor));
        Ok(())
    }

    /// Hands an assigned task back to the pool (carrier lost).
    pub fn release(&mut self) -> Result<()> {
        if self.state != TaskState::Assigned {
            return Err(self.illegal(TaskState::Unassigned));
        }
        self.state = TaskState::Unassigned;
        self.assigned_to = None;
        self.timeline.assigned_at = None;
        Ok(())
    }

    /// Entry configurations a connecting path may aim at. The first one is
    /// the nominal entry.
    pub fn entry_candidates(&self, turn_radius: f64) -> Vec<EntryConfig> {
        let p = self.position;
        match self.kind {
            TaskType::PointFree => vec![EntryConfig::free(p)],
            TaskType::PointConstrained { entry_heading } => {
                vec![EntryConfig::constrained(p, entry_heading)]
            }
            TaskType::Line { endpoint_b } => {
                let forward = (endpoint_b.y - p.y).atan2(endpoint_b.x - p.x);
                vec![
                    EntryConfig::constrained(p, forward),
                    EntryConfig::constrained(endpoint_b, forward + PI),
                ]
            }
            TaskType::Circle { radius, .. } => (0..CIRCLE_ENTRY_CANDIDATES)
                .map(|i| {
                    let a = TAU * i as f64 / CIRCLE_ENTRY_CANDIDATES as f64;
                    let point = Point::new(p.x + radius * a.cos(), p.y + radius * a.sin());
                    EntryConfig::constrained(point, a + FRAC_PI_2)
                })
                .collect(),
            TaskType::Area { .. } => AreaSweep::corners(self, turn_radius)
                .into_iter()
                .map(|(_, entry)| entry)
                .collect(),
        }
    }

    /// Coverage path length, which does not depend on the approach.
    pub fn coverage_length(&self, turn_radius: f64) -> Result<f64> {
        let entry = task_entry(self, turn_radius);
        let pose = Pose::at(entry.point, entry.heading.unwrap_or(0.0));
        Ok(coverage_plan(self, pose, turn_radius)?.length)
    }
}

/// Nominal entry configuration of a task.
pub fn task_entry(task: &Task, turn_radius: f64) -> EntryConfig {
    task.entry_candidates(turn_radius)[0]
}

/// Task-local flyable pattern executed once the entry is reached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoveragePlan {
    pub entry: Pose,
    pub segments: Vec<Segment>,
    pub length: f64,
    pub exit: Pose,
}

impl CoveragePlan {
    fn flyover(entry: Pose) -> Self {
        Self {
            entry,
            segments: Vec::new(),
            length: 0.0,
            exit: entry,
        }
    }

    fn from_segments(entry: Pose, segments: Vec<Segment>, exit: Option<Pose>) -> Self {
        let length = segments.iter().map(|s| s.length).sum();
        let exit = exit.unwrap_or_else(|| segments.last().map(Segment::end).unwrap_or(entry));
        Self {
            entry,
            segments,
            length,
            exit,
        }
    }

    pub fn pose_at(&self, s: f64) -> Pose {
        if s >= self.length {
            return self.exit;
        }
        geometry::pose_along(&self.segments, s).unwrap_or(self.entry)
    }
}

/// Lane geometry of an area target.
struct AreaSweep {
    origin: Point,
    along: f64,
    width: f64,
    offsets: Vec<f64>,
}

impl AreaSweep {
    fn new(task: &Task) -> Option<Self> {
        let TaskType::Area {
            width,
            height,
            orientation,
            lane_spacing,
        } = task.kind
        else {
            return None;
        };
        let (u, v) = (orientation, orientation + FRAC_PI_2);
        let c = task.position;
        let origin = Point::new(
            c.x - 0.5 * width * u.cos() - 0.5 * height * v.cos(),
            c.y - 0.5 * width * u.sin() - 0.5 * height * v.sin(),
        );
        let lanes = (height / lane_spacing + 1e-9).floor() as usize + 1;
        Some(Self {
            origin,
            along: orientation,
            width,
            offsets: (0..lanes).map(|i| i as f64 * lane_spacing).collect(),
        })
    }

    fn local(&self, a: f64, b: f64) -> Point {
        let v = self.along + FRAC_PI_2;
        Point::new(
            self.origin.x + a * self.along.cos() + b * v.cos(),
            self.origin.y + a * self.along.sin() + b * v.sin(),
        )
    }

    /// Lane start poses for corner `corner` (bit 0: start at the far end,
    /// bit 1: sweep lanes in descending order).
    fn lanes(&self, corner: usize) -> Vec<Pose> {
        let mut offsets = self.offsets.clone();
        if corner & 2 != 0 {
            offsets.reverse();
        }
        let mut from_far = corner & 1 != 0;
        offsets
            .into_iter()
            .map(|b| {
                let pose = if from_far {
                    Pose::at(self.local(self.width, b), self.along + PI)
                } else {
                    Pose::at(self.local(0.0, b), self.along)
                };
                from_far = !from_far;
                pose
            })
            .collect()
    }

    fn corners(task: &Task, _turn_radius: f64) -> Vec<(usize, EntryConfig)> {
        let Some(sweep) = AreaSweep::new(task) else {
            return Vec::new();
        };
        (0..4)
            .map(|corner| {
                let first = sweep.lanes(corner)[0];
                (corner, EntryConfig::constrained(first.point(), first.theta))
            })
            .collect()
    }
}

/// Builds the coverage pattern flown after arriving at `entry`.
pub fn coverage_plan(task: &Task, entry: Pose, turn_radius: f64) -> Result<CoveragePlan> {
    match task.kind {
        TaskType::PointFree | TaskType::PointConstrained { .. } => Ok(CoveragePlan::flyover(entry)),
        TaskType::Line { endpoint_b } => {
            let length = task.position.distance(&endpoint_b);
            let lane = Segment::straight(entry, length);
            Ok(CoveragePlan::from_segments(entry, vec![lane], None))
        }
        TaskType::Circle { radius, sweeps } => {
            if radius < turn_radius {
                return Err(ModelError::InvalidScenario(format!(
                    "circle radius {radius} below turn radius {turn_radius}"
                )));
            }
            let arc = Segment::arc(
                entry,
                geometry::Turn::Left,
                radius,
                sweeps as f64 * TAU * radius,
            );
            Ok(CoveragePlan::from_segments(entry, vec![arc], Some(entry)))
        }
        TaskType::Area { width, .. } => {
            let sweep = AreaSweep::new(task).expect("area task");
            let corner = AreaSweep::corners(task, turn_radius)
                .into_iter()
                .min_by(|a, b| {
                    let da = a.1.point.distance(&entry.point())
                        + geometry::angle_diff(a.1.heading.unwrap_or(0.0), entry.theta).abs();
                    let db = b.1.point.distance(&entry.point())
                        + geometry::angle_diff(b.1.heading.unwrap_or(0.0), entry.theta).abs();
                    da.total_cmp(&db)
                })
                .map(|(c, _)| c)
                .unwrap_or(0);
            let lanes = sweep.lanes(corner);
            let mut segments = Vec::new();
            let mut at = entry;
            for (i, lane_start) in lanes.iter().enumerate() {
                if i > 0 {
                    let turn = csc_shortest(at, *lane_start, turn_radius)?;
                    segments.extend(turn.segments.into_iter().filter(|s| s.length > 0.0));
                }
                let start = if i == 0 { entry } else { *lane_start };
                let lane = Segment::straight(start, width);
                at = lane.end();
                segments.push(lane);
            }
            Ok(CoveragePlan::from_segments(entry, segments, None))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UavState {
    Idle,
    InTransit,
    Busy,
    Damaged,
}

impl fmt::Display for UavState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            UavState::Idle => "idle",
            UavState::InTransit => "in_transit",
            UavState::Busy => "busy",
            UavState::Damaged => "damaged",
        };
        f.write_str(s)
    }
}

/// Flight distance split into base-to-first-task, inter-task connections,
/// coverage and return-to-base.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DistanceParts {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    pub l4: f64,
}

impl DistanceParts {
    pub fn total(&self) -> f64 {
        self.l1 + self.l2 + self.l3 + self.l4
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LegKind {
    FromBase,
    Connection,
    Coverage,
    Return,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Uav {
    pub id: usize,
    pub pose: Pose,
    pub state: UavState,
    pub speed: f64,
    pub turn_radius: f64,
    pub current_path: Option<DubinsPath>,
    pub current_task: Option<usize>,
    pub cluster: Option<usize>,
    pub parts: DistanceParts,
    /// Distance flown while waiting for work; not part of the odometer.
    pub loiter_distance: f64,
    /// Arc length flown along the active path or coverage plan.
    pub progress: f64,
    pub coverage: Option<CoveragePlan>,
    /// Completed task ids with completion times, in order.
    pub completed: Vec<(usize, f64)>,
    pub home_leg: Option<DubinsPath>,
    pub at_home: bool,
    legs_started: usize,
}

impl Uav {
    pub fn new(id: usize, pose: Pose, speed: f64, turn_radius: f64) -> Self {
        Self {
            id,
            pose,
            state: UavState::Idle,
            speed,
            turn_radius,
            current_path: None,
            current_task: None,
            cluster: None,
            parts: DistanceParts::default(),
            loiter_distance: 0.0,
            progress: 0.0,
            coverage: None,
            completed: Vec::new(),
            home_leg: None,
            at_home: false,
            legs_started: 0,
        }
    }

    pub fn odometer(&self) -> f64 {
        self.parts.total()
    }

    pub fn is_alive(&self) -> bool {
        self.state != UavState::Damaged
    }

    /// Idle and available for a decision epoch.
    pub fn is_available(&self) -> bool {
        self.state == UavState::Idle && self.home_leg.is_none() && !self.at_home
    }

    fn illegal(&self, to: UavState) -> ModelError {
        ModelError::Transition {
            entity: "uav",
            from: format!("{:?}", self.state),
            to: format!("{to:?}"),
        }
    }

    /// Which odometer bucket the transit leg currently flown belongs to.
    pub fn transit_leg(&self) -> LegKind {
        if self.legs_started <= 1 {
            LegKind::FromBase
        } else {
            LegKind::Connection
        }
    }

    pub fn accrue(&mut self, leg: LegKind, distance: f64) {
        match leg {
            LegKind::FromBase => self.parts.l1 += distance,
            LegKind::Connection => self.parts.l2 += distance,
            LegKind::Coverage => self.parts.l3 += distance,
            LegKind::Return => self.parts.l4 += distance,
        }
    }

    pub fn begin_transit(&mut self, task: usize, path: DubinsPath) -> Result<()> {
        if !self.is_available() {
            return Err(self.illegal(UavState::InTransit));
        }
        self.state = UavState::InTransit;
        self.current_task = Some(task);
        self.current_path = Some(path);
        self.progress = 0.0;
        self.legs_started += 1;
        Ok(())
    }

    pub fn arrive(&mut self, coverage: CoveragePlan) -> Result<()> {
        if self.state != UavState::InTransit {
            return Err(self.illegal(UavState::Busy));
        }
        self.state = UavState::Busy;
        self.current_path = None;
        self.coverage = Some(coverage);
        self.progress = 0.0;
        Ok(())
    }

    /// Busy → Idle; returns the finished task id.
    pub fn finish(&mut self, now: f64) -> Result<usize> {
        if self.state != UavState::Busy {
            return Err(self.illegal(UavState::Idle));
        }
        let task = self.current_task.take().expect("busy UAV carries a task");
        self.state = UavState::Idle;
        self.coverage = None;
        self.progress = 0.0;
        self.completed.push((task, now));
        Ok(task)
    }

    /// Any live state → Damaged; returns the task that was being carried.
    pub fn damage(&mut self) -> Result<Option<usize>> {
        if self.state == UavState::Damaged {
            return Err(self.illegal(UavState::Damaged));
        }
        self.state = UavState::Damaged;
        self.current_path = None;
        self.coverage = None;
        self.home_leg = None;
        Ok(self.current_task.take())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub k: usize,
    pub n: usize,
    pub area_side: f64,
    pub base: Pose,
    pub tasks: Vec<Task>,
    pub uav_speed: f64,
    pub turn_radius: f64,
    pub seed: u64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(ModelError::InvalidScenario(m));
        if self.k == 0 {
            return bad("at least one UAV is required".into());
        }
        if self.k >= self.n {
            return bad(format!("need K < N, got K={} N={}", self.k, self.n));
        }
        if self.tasks.len() != self.n {
            return bad(format!("N={} but {} tasks listed", self.n, self.tasks.len()));
        }
        if !(self.turn_radius > 0.0 && self.turn_radius.is_finite()) {
            return bad(format!("turn radius must be positive, got {}", self.turn_radius));
        }
        if !(self.uav_speed > 0.0 && self.uav_speed.is_finite()) {
            return bad(format!("speed must be positive, got {}", self.uav_speed));
        }
        if !(self.area_side > 0.0) {
            return bad(format!("area side must be positive, got {}", self.area_side));
        }
        if !self.base.is_finite() {
            return bad("base pose must be finite".into());
        }
        for (i, t) in self.tasks.iter().enumerate() {
            if t.id != i {
                return bad(format!("task ids must run 0..N in order; entry {i} has id {}", t.id));
            }
            let p = t.position;
            if !p.is_finite() || p.x < 0.0 || p.y < 0.0 || p.x > self.area_side || p.y > self.area_side {
                return bad(format!("task {i} at ({}, {}) outside the area", p.x, p.y));
            }
            t.kind.validate(self.turn_radius)?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ScenarioFile::from(self)).expect("scenario serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ScenarioFile = serde_json::from_str(text)?;
        let scenario = file.into_scenario()?;
        scenario.validate()?;
        Ok(scenario)
    }
}

/// Proportions of task types drawn by [`random_scenario`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TypeMix {
    pub point_free: f64,
    pub point_constrained: f64,
    pub line: f64,
    pub circle: f64,
    pub area: f64,
}

impl Default for TypeMix {
    fn default() -> Self {
        Self::points(0.0)
    }
}

impl TypeMix {
    pub fn points(constrained_fraction: f64) -> Self {
        Self {
            point_free: 1.0 - constrained_fraction,
            point_constrained: constrained_fraction,
            line: 0.0,
            circle: 0.0,
            area: 0.0,
        }
    }

    fn weights(&self) -> [f64; 5] {
        [self.point_free, self.point_constrained, self.line, self.circle, self.area]
    }

    fn validate(&self) -> Result<()> {
        let w = self.weights();
        if w.iter().any(|v| !(*v >= 0.0)) || (w.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(ModelError::InvalidArgument(format!(
                "type mix must be non-negative and sum to 1, got {w:?}"
            )));
        }
        Ok(())
    }
}

/// Draws one task of a type sampled from `mix` at a uniform position.
pub fn random_task(rng: &mut ChaCha8Rng, id: usize, area_side: f64, mix: &TypeMix, turn_radius: f64) -> Task {
    let position = Point::new(rng.gen_range(0.0..=area_side), rng.gen_range(0.0..=area_side));
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut pick = 0;
    for (i, w) in mix.weights().iter().enumerate() {
        acc += w;
        if u < acc {
            pick = i;
            break;
        }
        pick = i;
    }
    let kind = match pick {
        0 => TaskType::PointFree,
        1 => TaskType::PointConstrained {
            entry_heading: rng.gen_range(0.0..TAU),
        },
        2 => {
            let len = rng.gen_range(100.0..300.0);
            let dir: f64 = rng.gen_range(0.0..TAU);
            let b = Point::new(
                (position.x + len * dir.cos()).clamp(0.0, area_side),
                (position.y + len * dir.sin()).clamp(0.0, area_side),
            );
            TaskType::Line { endpoint_b: b }
        }
        3 => TaskType::Circle {
            radius: rng.gen_range(turn_radius..2.0 * turn_radius),
            sweeps: 1,
        },
        _ => TaskType::Area {
            width: rng.gen_range(200.0..400.0),
            height: rng.gen_range(2.0 * turn_radius..4.0 * turn_radius),
            orientation: rng.gen_range(0.0..TAU),
            lane_spacing: 2.0 * turn_radius,
        },
    };
    Task::new(id, position, kind)
}

/// Seeded uniform scenario with default speed, radius and base at the origin.
pub fn random_scenario(seed: u64, k: usize, n: usize, area_side: f64, mix: &TypeMix) -> Result<Scenario> {
    if k == 0 || k >= n {
        return Err(ModelError::InvalidArgument(format!("need 0 < K < N, got K={k} N={n}")));
    }
    if !(area_side > 0.0) {
        return Err(ModelError::InvalidArgument(format!("area side must be positive, got {area_side}")));
    }
    mix.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = Pose::new(0.0, 0.0, 0.0);
    let radius = DEFAULT_TURN_RADIUS;
    let tasks = (0..n)
        .map(|id| loop {
            let task = random_task(&mut rng, id, area_side, mix, radius);
            let reachable = task
                .entry_candidates(radius)
                .iter()
                .any(|e| geometry::connect(base, e, radius).is_ok());
            if reachable {
                break task;
            }
        })
        .collect();
    let scenario = Scenario {
        k,
        n,
        area_side,
        base,
        tasks,
        uav_speed: DEFAULT_SPEED,
        turn_radius: radius,
        seed,
    };
    scenario.validate()?;
    Ok(scenario)
}

/// The live world the simulator advances and decision epochs read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct World {
    pub time: f64,
    pub base: Pose,
    pub area_side: f64,
    pub turn_radius: f64,
    pub tasks: Vec<Task>,
    pub uavs: Vec<Uav>,
}

impl World {
    pub fn from_scenario(scenario: &Scenario) -> Self {
        let uavs = (0..scenario.k)
            .map(|id| Uav::new(id, scenario.base, scenario.uav_speed, scenario.turn_radius))
            .collect();
        Self {
            time: 0.0,
            base: scenario.base,
            area_side: scenario.area_side,
            turn_radius: scenario.turn_radius,
            tasks: scenario.tasks.clone(),
            uavs,
        }
    }

    pub fn unassigned(&self) -> impl Iterator<Item = &Task> {
        self.tasks.iter().filter(|t| t.state == TaskState::Unassigned)
    }

    pub fn all_completed(&self) -> bool {
        self.tasks.iter().all(|t| t.state == TaskState::Completed)
    }

    pub fn alive(&self) -> impl Iterator<Item = &Uav> {
        self.uavs.iter().filter(|u| u.is_alive())
    }

    /// Appends a new unassigned task and returns its id.
    pub fn add_task(&mut self, position: Point, kind: TaskType, now: f64) -> usize {
        let id = self.tasks.len();
        let mut task = Task::new(id, position, kind);
        task.timeline.created_at = now;
        self.tasks.push(task);
        id
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
struct TaskParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bx: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    by: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sweeps: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    height: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    orientation: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lane_spacing: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TaskEntry {
    id: usize,
    x: f64,
    y: f64,
    #[serde(rename = "type")]
    kind: String,
    #[serde(default)]
    params: TaskParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    heading: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    #[serde(rename = "K")]
    k: usize,
    #[serde(rename = "N")]
    n: usize,
    area_side: f64,
    base: Pose,
    tasks: Vec<TaskEntry>,
    uav_speed: f64,
    turn_radius: f64,
    seed: u64,
}

impl From<&Scenario> for ScenarioFile {
    fn from(s: &Scenario) -> Self {
        let tasks = s
            .tasks
            .iter()
            .map(|t| {
                let mut params = TaskParams::default();
                let mut heading = None;
                match t.kind {
                    TaskType::PointFree => {}
                    TaskType::PointConstrained { entry_heading } => heading = Some(entry_heading),
                    TaskType::Line { endpoint_b } => {
                        params.bx = Some(endpoint_b.x);
                        params.by = Some(endpoint_b.y);
                    }
                    TaskType::Circle { radius, sweeps } => {
                        params.radius = Some(radius);
                        params.sweeps = Some(sweeps);
                    }
                    TaskType::Area {
                        width,
                        height,
                        orientation,
                        lane_spacing,
                    } => {
                        params.width = Some(width);
                        params.height = Some(height);
                        params.orientation = Some(orientation);
                        params.lane_spacing = Some(lane_spacing);
                    }
                }
                TaskEntry {
                    id: t.id,
                    x: t.position.x,
                    y: t.position.y,
                    kind: t.kind.name().to_string(),
                    params,
                    heading,
                }
            })
            .collect();
        Self {
            k: s.k,
            n: s.n,
            area_side: s.area_side,
            base: s.base,
            tasks,
            uav_speed: s.uav_speed,
            turn_radius: s.turn_radius,
            seed: s.seed,
        }
    }
}

impl ScenarioFile {
    fn into_scenario(self) -> Result<Scenario> {
        let tasks = self
            .tasks
            .into_iter()
            .enumerate()
            .map(|(i, e)| {
                let need = |v: Option<f64>, field: &str| {
                    v.ok_or_else(|| {
                        ModelError::InvalidScenario(format!(
                            "tasks[{i}] ({} task) is missing params.{field}",
                            e.kind
                        ))
                    })
                };
                let kind = match e.kind.as_str() {
                    "point" => match e.heading {
                        None => TaskType::PointFree,
                        Some(h) => TaskType::PointConstrained {
                            entry_heading: geometry::normalize_angle(h)?,
                        },
                    },
                    "line" => TaskType::Line {
                        endpoint_b: Point::new(need(e.params.bx, "bx")?, need(e.params.by, "by")?),
                    },
                    "circle" => TaskType::Circle {
                        radius: need(e.params.radius, "radius")?,
                        sweeps: e.params.sweeps.unwrap_or(1),
                    },
                    "area" => TaskType::Area {
                        width: need(e.params.width, "width")?,
                        height: need(e.params.height, "height")?,
                        orientation: wrap_angle(need(e.params.orientation, "orientation")?),
                        lane_spacing: need(e.params.lane_spacing, "lane_spacing")?,
                    },
                    other => {
                        return Err(ModelError::InvalidScenario(format!(
                            "tasks[{i}].type: unknown task type {other:?}"
                        )))
                    }
                };
                Ok(Task::new(e.id, Point::new(e.x, e.y), kind))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Scenario {
            k: self.k,
            n: self.n,
            area_side: self.area_side,
            base: Pose::new(self.base.x, self.base.y, self.base.theta),
            tasks,
            uav_speed: self.uav_speed,
            turn_radius: self.turn_radius,
            seed: self.seed,
        })
    }
}
