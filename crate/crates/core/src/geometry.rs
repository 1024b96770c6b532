//! Planar Dubins geometry.
//!
//! Two families of paths are built here, both in closed form:
//!
//! * CS words (`LS`, `RS`): only the start heading is constrained. The path
//!   turns on the start circle until the heading points at the goal and then
//!   flies straight. The construction goes through the circle centre, the
//!   bearing and distance from the centre to the goal, and the tangent point
//!   angle; those intermediates are exposed in [`CsConstruction`].
//! * CSC words (`LSL`, `LSR`, `RSL`, `RSR`): both end headings are
//!   constrained. Built from the common tangents of the start and goal
//!   turning circles. CCC words are not part of the solution set.
//!
//! Every path is a list of [`Segment`]s that can be sampled by arc length,
//! so the same value serves as an allocation cost and as the flown track.

use std::f64::consts::{FRAC_PI_2, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Sweeps closer than this to a full turn are treated as zero.
pub const SWEEP_SNAP: f64 = 1e-9;
/// Relative slack used when deciding whether a goal is inside a turning circle.
pub const FEASIBILITY_SLACK: f64 = 1e-9;
/// Relative tolerance below which two candidate lengths count as a tie.
const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("goal lies strictly inside the {0:?} turning circle")]
    Infeasible(Turn),
    #[error("no admissible path word reaches the goal")]
    Unreachable,
}

pub type Result<T> = std::result::Result<T, GeometryError>;

/// Wraps an angle into `[0, 2π)`.
///
/// Fails on non-finite input.
pub fn normalize_angle(theta: f64) -> Result<f64> {
    if !theta.is_finite() {
        return Err(GeometryError::InvalidArgument(format!(
            "angle must be finite, got {theta}"
        )));
    }
    Ok(wrap_angle(theta))
}

/// Infallible wrap into `[0, 2π)`; NaN passes through.
#[inline]
pub fn wrap_angle(theta: f64) -> f64 {
    let r = theta.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Signed difference `a - b` wrapped into `(-π, π]`.
#[inline]
pub fn angle_diff(a: f64, b: f64) -> f64 {
    let d = wrap_angle(a - b);
    if d > std::f64::consts::PI {
        d - TAU
    } else {
        d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (other.x - self.x).hypot(other.y - self.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    fn offset(&self, angle: f64, dist: f64) -> Point {
        Point::new(self.x + dist * angle.cos(), self.y + dist * angle.sin())
    }
}

/// Planar configuration. `theta` is kept in `[0, 2π)` by every constructor
/// in this crate.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: wrap_angle(theta),
        }
    }

    pub fn at(point: Point, theta: f64) -> Self {
        Self::new(point.x, point.y, theta)
    }

    pub fn point(&self) -> Point {
        Point::new(self.x, self.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.theta.is_finite()
    }

    /// Centre of the turning circle on the given side.
    pub fn turn_center(&self, turn: Turn, radius: f64) -> Point {
        self.point().offset(self.theta + turn.sign() * FRAC_PI_2, radius)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Turn {
    Left,
    Right,
}

impl Turn {
    /// +1 for counterclockwise, -1 for clockwise.
    #[inline]
    pub fn sign(self) -> f64 {
        match self {
            Turn::Left => 1.0,
            Turn::Right => -1.0,
        }
    }

    /// Non-negative sweep needed to rotate the heading from `from` to `to`
    /// while turning in this direction.
    pub fn sweep(self, from: f64, to: f64) -> f64 {
        let raw = match self {
            Turn::Left => wrap_angle(to - from),
            Turn::Right => wrap_angle(from - to),
        };
        if raw > TAU - SWEEP_SNAP {
            0.0
        } else {
            raw
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PathWord {
    LS,
    RS,
    LSL,
    LSR,
    RSL,
    RSR,
}

impl PathWord {
    pub const CSC: [PathWord; 4] = [PathWord::LSL, PathWord::LSR, PathWord::RSL, PathWord::RSR];

    pub fn is_cs(self) -> bool {
        matches!(self, PathWord::LS | PathWord::RS)
    }

    fn turns(self) -> (Turn, Option<Turn>) {
        match self {
            PathWord::LS => (Turn::Left, None),
            PathWord::RS => (Turn::Right, None),
            PathWord::LSL => (Turn::Left, Some(Turn::Left)),
            PathWord::LSR => (Turn::Left, Some(Turn::Right)),
            PathWord::RSL => (Turn::Right, Some(Turn::Left)),
            PathWord::RSR => (Turn::Right, Some(Turn::Right)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SegmentKind {
    Arc { turn: Turn, radius: f64 },
    Straight,
}

/// One arc or straight piece of a flyable track.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub kind: SegmentKind,
    pub length: f64,
    pub start: Pose,
}

impl Segment {
    pub fn straight(start: Pose, length: f64) -> Self {
        Self {
            kind: SegmentKind::Straight,
            length,
            start,
        }
    }

    pub fn arc(start: Pose, turn: Turn, radius: f64, length: f64) -> Self {
        Self {
            kind: SegmentKind::Arc { turn, radius },
            length,
            start,
        }
    }

    /// Pose after travelling `s` along this segment. `s` is not clamped.
    pub fn pose_at(&self, s: f64) -> Pose {
        let p = self.start;
        match self.kind {
            SegmentKind::Straight => {
                Pose::new(p.x + s * p.theta.cos(), p.y + s * p.theta.sin(), p.theta)
            }
            SegmentKind::Arc { turn, radius } => {
                let k = turn.sign();
                let heading = p.theta + k * s / radius;
                Pose::new(
                    p.x + k * radius * (heading.sin() - p.theta.sin()),
                    p.y - k * radius * (heading.cos() - p.theta.cos()),
                    heading,
                )
            }
        }
    }

    pub fn end(&self) -> Pose {
        self.pose_at(self.length)
    }
}

/// Samples a chain of segments at arc length `s`, clamped to the chain.
pub fn pose_along(segments: &[Segment], s: f64) -> Option<Pose> {
    let mut remaining = s.max(0.0);
    for (i, seg) in segments.iter().enumerate() {
        if remaining <= seg.length || i + 1 == segments.len() {
            return Some(seg.pose_at(remaining.min(seg.length)));
        }
        remaining -= seg.length;
    }
    None
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DubinsPath {
    pub word: PathWord,
    pub segments: Vec<Segment>,
    pub turn_radius: f64,
    pub total_length: f64,
}

impl DubinsPath {
    fn from_segments(word: PathWord, segments: Vec<Segment>, turn_radius: f64) -> Self {
        let total_length = segments.iter().map(|s| s.length).sum();
        Self {
            word,
            segments,
            turn_radius,
            total_length,
        }
    }

    pub fn start_pose(&self) -> Pose {
        self.segments[0].start
    }

    pub fn end_pose(&self) -> Pose {
        self.segments.last().map(Segment::end).unwrap_or_default()
    }

    /// Lengths of the path's arcs, in order.
    pub fn arc_lengths(&self) -> Vec<f64> {
        self.segments
            .iter()
            .filter(|s| matches!(s.kind, SegmentKind::Arc { .. }))
            .map(|s| s.length)
            .collect()
    }

    pub fn straight_length(&self) -> f64 {
        self.segments
            .iter()
            .filter(|s| s.kind == SegmentKind::Straight)
            .map(|s| s.length)
            .sum()
    }

    pub fn sample(&self, s: f64) -> Result<Pose> {
        sample_pose(self, s)
    }
}

/// Pose at arc length `s` along `path`.
pub fn sample_pose(path: &DubinsPath, s: f64) -> Result<Pose> {
    let slack = 1e-9 * path.total_length.max(1.0);
    if !s.is_finite() || s < 0.0 || s > path.total_length + slack {
        return Err(GeometryError::InvalidArgument(format!(
            "arc length {s} outside [0, {}]",
            path.total_length
        )));
    }
    if s >= path.total_length {
        return Ok(path.end_pose());
    }
    pose_along(&path.segments, s)
        .ok_or_else(|| GeometryError::InvalidArgument("path has no segments".into()))
}

fn check_radius(radius: f64) -> Result<()> {
    if radius.is_finite() && radius > 0.0 {
        Ok(())
    } else {
        Err(GeometryError::InvalidArgument(format!(
            "turn radius must be positive and finite, got {radius}"
        )))
    }
}

fn check_pose(p: &Pose) -> Result<()> {
    if p.is_finite() {
        Ok(())
    } else {
        Err(GeometryError::InvalidArgument(format!("non-finite pose {p:?}")))
    }
}

/// Intermediate quantities of a CS construction, kept for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CsConstruction {
    pub turn: Turn,
    /// Centre of the start turning circle.
    pub center: Point,
    /// Bearing from the centre to the goal.
    pub theta_sf: f64,
    /// Angle between centre→goal and tangent→goal at the goal.
    pub theta_mf: f64,
    /// Bearing from the centre to the tangent point.
    pub theta_m: f64,
    /// Distance from the centre to the goal.
    pub len_spf: f64,
    pub tangent_point: Point,
    /// Heading swept on the start circle, in `[0, 2π)`.
    pub arc_sweep: f64,
    pub straight_length: f64,
}

/// Runs the single-turn-then-straight construction for one turn direction.
pub fn cs_construction(start: Pose, goal: Point, radius: f64, turn: Turn) -> Result<CsConstruction> {
    check_radius(radius)?;
    check_pose(&start)?;
    if !goal.is_finite() {
        return Err(GeometryError::InvalidArgument(format!("non-finite goal {goal:?}")));
    }
    let center = start.turn_center(turn, radius);
    let dx = goal.x - center.x;
    let dy = goal.y - center.y;
    let len_spf = dx.hypot(dy);
    if len_spf < radius * (1.0 - FEASIBILITY_SLACK) {
        return Err(GeometryError::Infeasible(turn));
    }
    let theta_sf = dy.atan2(dx);
    let theta_mf = (radius / len_spf).min(1.0).asin();
    let theta_m = match turn {
        Turn::Left => wrap_angle(theta_sf + theta_mf - FRAC_PI_2),
        Turn::Right => wrap_angle(theta_sf - theta_mf + FRAC_PI_2),
    };
    // on a left circle the heading leads the radial bearing by +π/2,
    // on a right circle it lags by π/2
    let exit_heading = theta_m + turn.sign() * FRAC_PI_2;
    let arc_sweep = turn.sweep(start.theta, exit_heading);
    let tangent_point = center.offset(theta_m, radius);
    let straight_length = tangent_point.distance(&goal);
    Ok(CsConstruction {
        turn,
        center,
        theta_sf,
        theta_mf,
        theta_m,
        len_spf,
        tangent_point,
        arc_sweep,
        straight_length,
    })
}

impl CsConstruction {
    pub fn into_path(self, start: Pose, radius: f64) -> DubinsPath {
        let word = match self.turn {
            Turn::Left => PathWord::LS,
            Turn::Right => PathWord::RS,
        };
        let heading = self.theta_m + self.turn.sign() * FRAC_PI_2;
        DubinsPath::from_segments(
            word,
            vec![
                Segment::arc(start, self.turn, radius, radius * self.arc_sweep),
                Segment::straight(Pose::at(self.tangent_point, heading), self.straight_length),
            ],
            radius,
        )
    }
}

/// CS path turning in `turn` first. Errors with [`GeometryError::Infeasible`]
/// when the goal is strictly inside that turning circle.
pub fn cs_candidate(start: Pose, goal: Point, radius: f64, turn: Turn) -> Result<DubinsPath> {
    Ok(cs_construction(start, goal, radius, turn)?.into_path(start, radius))
}

fn pick_shorter(best: Option<DubinsPath>, next: DubinsPath, radius: f64) -> Option<DubinsPath> {
    match best {
        Some(b) if next.total_length >= b.total_length - TIE_TOLERANCE * radius => Some(b),
        _ => Some(next),
    }
}

/// Shorter of `LS` and `RS`; ties go to `LS`.
pub fn cs_shortest(start: Pose, goal: Point, radius: f64) -> Result<DubinsPath> {
    let mut best = None;
    for turn in [Turn::Left, Turn::Right] {
        match cs_candidate(start, goal, radius, turn) {
            Ok(path) => best = pick_shorter(best, path, radius),
            Err(GeometryError::Infeasible(_)) => {}
            Err(e) => return Err(e),
        }
    }
    best.ok_or(GeometryError::Unreachable)
}

/// Builds one CSC word, or `None` when the word has no tangent.
pub fn csc_word(start: Pose, goal: Pose, radius: f64, word: PathWord) -> Result<Option<DubinsPath>> {
    check_radius(radius)?;
    check_pose(&start)?;
    check_pose(&goal)?;
    let (first, second) = match word.turns() {
        (first, Some(second)) => (first, second),
        _ => {
            return Err(GeometryError::InvalidArgument(format!(
                "{word:?} is not a CSC word"
            )))
        }
    };
    let c1 = start.turn_center(first, radius);
    let c2 = goal.turn_center(second, radius);
    let vx = c2.x - c1.x;
    let vy = c2.y - c1.y;
    let d = vx.hypot(vy);

    let (heading, straight) = if first == second {
        if d < radius * FEASIBILITY_SLACK {
            // both circles coincide: the whole turn happens on the first arc
            (goal.theta, 0.0)
        } else {
            (vy.atan2(vx), d)
        }
    } else {
        let min_d = 2.0 * radius;
        if d < min_d * (1.0 - FEASIBILITY_SLACK) {
            return Ok(None);
        }
        let straight = (d * d - min_d * min_d).max(0.0).sqrt();
        let offset = min_d.atan2(straight);
        let heading = match first {
            Turn::Left => vy.atan2(vx) + offset,
            Turn::Right => vy.atan2(vx) - offset,
        };
        (heading, straight)
    };

    let first_sweep = first.sweep(start.theta, heading);
    let second_sweep = second.sweep(heading, goal.theta);
    // tangent points sit a quarter turn behind the heading on each circle
    let t1 = c1.offset(heading - first.sign() * FRAC_PI_2, radius);
    let t2 = c2.offset(heading - second.sign() * FRAC_PI_2, radius);
    Ok(Some(DubinsPath::from_segments(
        word,
        vec![
            Segment::arc(start, first, radius, radius * first_sweep),
            Segment::straight(Pose::at(t1, heading), straight),
            Segment::arc(Pose::at(t2, heading), second, radius, radius * second_sweep),
        ],
        radius,
    )))
}

/// Shortest of `LSL`, `LSR`, `RSL`, `RSR`; ties resolved in that order.
pub fn csc_shortest(start: Pose, goal: Pose, radius: f64) -> Result<DubinsPath> {
    let mut best = None;
    for word in PathWord::CSC {
        if let Some(path) = csc_word(start, goal, radius, word)? {
            best = pick_shorter(best, path, radius);
        }
    }
    best.ok_or(GeometryError::Unreachable)
}

/// Where a connecting path has to end: a point and, optionally, a heading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntryConfig {
    pub point: Point,
    pub heading: Option<f64>,
}

impl EntryConfig {
    pub fn free(point: Point) -> Self {
        Self { point, heading: None }
    }

    pub fn constrained(point: Point, heading: f64) -> Self {
        Self {
            point,
            heading: Some(wrap_angle(heading)),
        }
    }
}

/// Connecting path: CS when the entry heading is free, CSC otherwise.
pub fn connect(start: Pose, entry: &EntryConfig, radius: f64) -> Result<DubinsPath> {
    match entry.heading {
        None => cs_shortest(start, entry.point, radius),
        Some(h) => csc_shortest(start, Pose::at(entry.point, h), radius),
    }
}
