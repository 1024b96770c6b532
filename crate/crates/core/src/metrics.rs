//! Run metrics: distances, balance across UAVs, gap to a baseline and
//! planning-time statistics.
//!
//! Wall-clock figures live in [`TimingReport`] and are kept out of the
//! serialized [`MetricsReport`], so the metrics file of a run is
//! reproducible byte for byte.

use serde::{Deserialize, Serialize};

use crate::cluster::ClusterModel;
use crate::geometry::Point;
use crate::mission::DistanceParts;
use crate::sim::{Outcome, SimResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UavMetrics {
    pub id: usize,
    pub parts: DistanceParts,
    pub odometer: f64,
    pub loiter_distance: f64,
    pub damaged: bool,
    pub cluster: Option<usize>,
    /// Completed tasks with completion times.
    pub sequence: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub centroids: Vec<Point>,
    pub membership: Vec<usize>,
    pub uav_of_cluster: Vec<usize>,
    pub active: Vec<bool>,
}

impl From<&ClusterModel> for ClusterSummary {
    fn from(m: &ClusterModel) -> Self {
        Self {
            centroids: m.centroids.clone(),
            membership: m.membership.clone(),
            uav_of_cluster: m.uav_of_cluster.clone(),
            active: m.active.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TimingReport {
    pub planning_epochs: usize,
    pub total_planning_time_s: f64,
    pub avg_planning_time_s: f64,
    pub first_decision_time_s: f64,
    /// First epoch as a percentage of total planning time.
    pub first_decision_share_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub strategy: String,
    pub success: bool,
    pub failure: Option<String>,
    pub completion_time_s: f64,
    pub total_distance_m: f64,
    pub per_uav: Vec<UavMetrics>,
    pub max_distance_difference_m: f64,
    pub max_task_number_difference: usize,
    pub baseline_total_m: Option<f64>,
    /// `(total − baseline) / baseline`.
    pub gap: Option<f64>,
    pub tasks_total: usize,
    pub tasks_completed: usize,
    pub new_tasks_injected: usize,
    pub uavs_damaged: usize,
    pub planning_epochs: usize,
    pub clusters: Option<ClusterSummary>,
    #[serde(skip)]
    pub timing: TimingReport,
}

pub fn gap(total: f64, baseline: f64) -> f64 {
    (total - baseline) / baseline
}

/// Largest minus smallest value; zero for fewer than two values.
fn spread<T: Copy + PartialOrd + std::ops::Sub<Output = T> + Default>(values: impl Iterator<Item = T>) -> T {
    let mut lo: Option<T> = None;
    let mut hi: Option<T> = None;
    for v in values {
        if lo.is_none_or(|l| v < l) {
            lo = Some(v);
        }
        if hi.is_none_or(|h| v > h) {
            hi = Some(v);
        }
    }
    match (lo, hi) {
        (Some(l), Some(h)) => h - l,
        _ => T::default(),
    }
}

pub fn timing(result: &SimResult) -> TimingReport {
    let durations: Vec<f64> = result.planning_events.iter().map(|p| p.duration_s).collect();
    let total: f64 = durations.iter().sum();
    let first = durations.first().copied().unwrap_or(0.0);
    TimingReport {
        planning_epochs: durations.len(),
        total_planning_time_s: total,
        avg_planning_time_s: if durations.is_empty() { 0.0 } else { total / durations.len() as f64 },
        first_decision_time_s: first,
        first_decision_share_pct: if total > 0.0 { 100.0 * first / total } else { 0.0 },
    }
}

pub fn collect_metrics(result: &SimResult, baseline_total: Option<f64>) -> MetricsReport {
    let per_uav: Vec<UavMetrics> = result
        .world
        .uavs
        .iter()
        .map(|u| UavMetrics {
            id: u.id,
            parts: u.parts,
            odometer: u.odometer(),
            loiter_distance: u.loiter_distance,
            damaged: !u.is_alive(),
            cluster: u.cluster,
            sequence: u.completed.clone(),
        })
        .collect();
    let total: f64 = per_uav.iter().map(|u| u.odometer).sum();
    let timing = timing(result);
    MetricsReport {
        strategy: format!(
            "{}/{}{}",
            result.config.strategy.strategy,
            result.config.strategy.metric,
            if result.config.strategy.cluster_restricted { "/clustered" } else { "" }
        ),
        success: result.outcome == Outcome::Completed,
        failure: match &result.outcome {
            Outcome::Completed => None,
            Outcome::Failed(why) => Some(why.clone()),
        },
        completion_time_s: result.completion_time,
        total_distance_m: total,
        max_distance_difference_m: spread(per_uav.iter().map(|u| u.odometer)),
        max_task_number_difference: spread(per_uav.iter().map(|u| u.sequence.len())),
        per_uav,
        baseline_total_m: baseline_total,
        gap: baseline_total.filter(|b| *b > 0.0).map(|b| gap(total, b)),
        tasks_total: result.tasks.len(),
        tasks_completed: result.tasks.iter().filter(|t| t.completed_at.is_some()).count(),
        new_tasks_injected: result.new_tasks_injected,
        uavs_damaged: result.uavs_damaged,
        planning_epochs: timing.planning_epochs,
        clusters: result.cluster_model.as_ref().map(ClusterSummary::from),
        timing,
    }
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metrics serialize")
    }

    pub fn timing_json(&self) -> String {
        serde_json::to_string_pretty(&self.timing).expect("timing serialize")
    }
}
