//! K-means task partitioning and cluster-to-UAV mapping.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::allocation::{hungarian_solve, CostMatrix, Metric, UNREACHABLE};
use crate::geometry::{cs_shortest, Point, Pose};
use crate::mission::World;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClusterError {
    #[error("invalid clustering argument: {0}")]
    InvalidArgument(String),
    #[error("no active cluster is left to take the task")]
    NoAvailableUav,
    #[error("cannot map {clusters} clusters onto {uavs} UAVs")]
    Mapping { clusters: usize, uavs: usize },
}

pub type Result<T> = std::result::Result<T, ClusterError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeans {
    pub centroids: Vec<Point>,
    /// Cluster index of every input point.
    pub labels: Vec<usize>,
    pub iterations: usize,
    /// Within-cluster sum of squared distances after each Lloyd iteration.
    pub objective_trace: Vec<f64>,
}

fn sq(a: &Point, b: &Point) -> f64 {
    let (dx, dy) = (a.x - b.x, a.y - b.y);
    dx * dx + dy * dy
}

fn nearest(p: &Point, centroids: &[Point]) -> usize {
    let mut best = (0, f64::INFINITY);
    for (c, q) in centroids.iter().enumerate() {
        let d = sq(p, q);
        if d < best.1 {
            best = (c, d);
        }
    }
    best.0
}

fn objective(points: &[Point], centroids: &[Point], labels: &[usize]) -> f64 {
    points.iter().zip(labels).map(|(p, &l)| sq(p, &centroids[l])).sum()
}

fn seed_plus_plus(points: &[Point], k: usize, rng: &mut ChaCha8Rng) -> Vec<Point> {
    let mut centers = vec![points[rng.gen_range(0..points.len())]];
    let mut d2: Vec<f64> = points.iter().map(|p| sq(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut idx = points.len() - 1;
            for (i, w) in d2.iter().enumerate() {
                if *w > 0.0 && target < *w {
                    idx = i;
                    break;
                }
                target -= w;
            }
            idx
        } else {
            // all remaining points coincide with a center
            rng.gen_range(0..points.len())
        };
        let c = points[pick];
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq(p, &c));
        }
        centers.push(c);
    }
    centers
}

fn update_centroids(points: &[Point], labels: &[usize], centroids: &mut [Point]) {
    let k = centroids.len();
    let mut sums = vec![(0.0, 0.0, 0usize); k];
    for (p, &l) in points.iter().zip(labels) {
        sums[l].0 += p.x;
        sums[l].1 += p.y;
        sums[l].2 += 1;
    }
    for (c, (sx, sy, n)) in centroids.iter_mut().zip(sums) {
        if n > 0 {
            *c = Point::new(sx / n as f64, sy / n as f64);
        }
    }
}

/// Moves the point farthest from its centroid in the largest cluster into
/// each empty cluster.
fn repair_empty(points: &[Point], labels: &mut [usize], centroids: &mut [Point]) {
    let k = centroids.len();
    loop {
        let mut sizes = vec![0usize; k];
        for &l in labels.iter() {
            sizes[l] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return;
        };
        let largest = (0..k).max_by(|&a, &b| sizes[a].cmp(&sizes[b]).then(b.cmp(&a))).unwrap();
        if sizes[largest] < 2 {
            return;
        }
        let far = (0..points.len())
            .filter(|&i| labels[i] == largest)
            .max_by(|&a, &b| {
                sq(&points[a], &centroids[largest])
                    .total_cmp(&sq(&points[b], &centroids[largest]))
                    .then(b.cmp(&a))
            })
            .unwrap();
        labels[far] = empty;
        update_centroids(points, labels, centroids);
    }
}

/// Lloyd's algorithm with k-means++ seeding.
pub fn kmeans(points: &[Point], k: usize, seed: u64, max_iters: usize) -> Result<KMeans> {
    if k == 0 {
        return Err(ClusterError::InvalidArgument("k must be at least 1".into()));
    }
    if k > points.len() {
        return Err(ClusterError::InvalidArgument(format!(
            "k = {k} exceeds the number of points ({})",
            points.len()
        )));
    }
    if points.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
        return Err(ClusterError::InvalidArgument("non-finite point".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = seed_plus_plus(points, k, &mut rng);
    let mut labels: Vec<usize> = points.iter().map(|p| nearest(p, &centroids)).collect();
    update_centroids(points, &labels, &mut centroids);
    repair_empty(points, &mut labels, &mut centroids);
    let mut trace = vec![objective(points, &centroids, &labels)];
    let mut iterations = 0;
    while iterations < max_iters {
        iterations += 1;
        let next: Vec<usize> = points.iter().map(|p| nearest(p, &centroids)).collect();
        let changed = next != labels;
        labels = next;
        update_centroids(points, &labels, &mut centroids);
        repair_empty(points, &mut labels, &mut centroids);
        trace.push(objective(points, &centroids, &labels));
        if !changed {
            break;
        }
    }
    Ok(KMeans {
        centroids,
        labels,
        iterations,
        objective_trace: trace,
    })
}

/// Task partition with the UAV owning each cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub centroids: Vec<Point>,
    /// Cluster of each task, indexed by task id.
    pub membership: Vec<usize>,
    /// UAV id owning each cluster.
    pub uav_of_cluster: Vec<usize>,
    pub active: Vec<bool>,
}

impl ClusterModel {
    /// Clusters the world's tasks into one cluster per UAV and maps each
    /// cluster to a UAV. Also records the cluster on every UAV.
    pub fn build(world: &mut World, seed: u64, max_iters: usize) -> Result<Self> {
        let points: Vec<Point> = world.tasks.iter().map(|t| t.position).collect();
        let k = world.uavs.len();
        let km = kmeans(&points, k, seed, max_iters)?;
        let poses: Vec<Pose> = world.uavs.iter().map(|u| u.pose).collect();
        let uav_of_cluster = map_clusters_to_uavs(&km.centroids, &poses, world.turn_radius)?;
        for (c, &u) in uav_of_cluster.iter().enumerate() {
            world.uavs[u].cluster = Some(c);
        }
        Ok(Self {
            active: vec![true; km.centroids.len()],
            centroids: km.centroids,
            membership: km.labels,
            uav_of_cluster,
        })
    }

    pub fn cluster_of_task(&self, task: usize) -> Option<usize> {
        self.membership.get(task).copied()
    }

    pub fn cluster_of_uav(&self, uav: usize) -> Option<usize> {
        self.uav_of_cluster.iter().position(|&u| u == uav)
    }

    pub fn deactivate(&mut self, cluster: usize) {
        if let Some(a) = self.active.get_mut(cluster) {
            *a = false;
        }
    }

    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|a| **a).count()
    }

    /// Records the cluster of a task appended after the model was built.
    pub fn set_membership(&mut self, task: usize, cluster: usize) {
        if task >= self.membership.len() {
            self.membership.resize(task + 1, cluster);
        }
        self.membership[task] = cluster;
    }
}

/// Optimal one-to-one mapping of centroids onto UAVs using the CS path
/// length from each UAV pose to each centroid. Returns the UAV index of
/// every cluster.
pub fn map_clusters_to_uavs(centroids: &[Point], uavs: &[Pose], turn_radius: f64) -> Result<Vec<usize>> {
    if centroids.len() != uavs.len() || centroids.is_empty() {
        return Err(ClusterError::Mapping {
            clusters: centroids.len(),
            uavs: uavs.len(),
        });
    }
    let entries = uavs
        .iter()
        .map(|pose| {
            centroids
                .iter()
                .map(|c| match cs_shortest(*pose, *c, turn_radius) {
                    Ok(p) => p.total_length,
                    Err(_) => UNREACHABLE,
                })
                .collect()
        })
        .collect();
    let m = CostMatrix {
        rows: (0..uavs.len()).collect(),
        cols: (0..centroids.len()).collect(),
        entries,
        metric: Metric::Dubins,
    };
    let assignment = hungarian_solve(&m);
    let mut owner = vec![usize::MAX; centroids.len()];
    for (u, c) in assignment.pairs {
        owner[c] = u;
    }
    if owner.contains(&usize::MAX) {
        return Err(ClusterError::Mapping {
            clusters: centroids.len(),
            uavs: uavs.len(),
        });
    }
    Ok(owner)
}

/// Nearest centroid to `p`; ties go to the lowest index.
pub fn classify_point(p: Point, model: &ClusterModel, only_active: bool) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (c, q) in model.centroids.iter().enumerate() {
        if only_active && !model.active[c] {
            continue;
        }
        let d = sq(&p, q);
        if best.is_none_or(|(_, b)| d < b) {
            best = Some((c, d));
        }
    }
    best.map(|(c, _)| c).ok_or(ClusterError::NoAvailableUav)
}
