mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uavplan_core::cluster::{classify_point, kmeans, map_clusters_to_uavs, ClusterError, ClusterModel};
use uavplan_core::geometry::{cs_shortest, Point, Pose};

fn pts(v: &[(f64, f64)]) -> Vec<Point> {
    v.iter().map(|&(x, y)| Point::new(x, y)).collect()
}

fn sse(points: &[Point], labels: &[usize], k: usize) -> f64 {
    let mut total = 0.0;
    for c in 0..k {
        let members: Vec<&Point> = points.iter().zip(labels).filter(|(_, &l)| l == c).map(|(p, _)| p).collect();
        if members.is_empty() {
            continue;
        }
        let mx = members.iter().map(|p| p.x).sum::<f64>() / members.len() as f64;
        let my = members.iter().map(|p| p.y).sum::<f64>() / members.len() as f64;
        total += members.iter().map(|p| (p.x - mx).powi(2) + (p.y - my).powi(2)).sum::<f64>();
    }
    total
}

#[test]
fn separated_pairs() {
    let p = pts(&[(0.0, 0.0), (1.0, 0.0), (10.0, 0.0), (11.0, 0.0)]);
    for seed in 0..10 {
        let km = kmeans(&p, 2, seed, 100).unwrap();
        assert_eq!(km.labels[0], km.labels[1]);
        assert_eq!(km.labels[2], km.labels[3]);
        assert_ne!(km.labels[0], km.labels[2]);
        let left = km.centroids[km.labels[0]];
        let right = km.centroids[km.labels[2]];
        assert!((left.x - 0.5).abs() < 1e-12 && left.y.abs() < 1e-12);
        assert!((right.x - 10.5).abs() < 1e-12 && right.y.abs() < 1e-12);
    }
}

#[test]
fn k_equals_n_gives_singletons() {
    let p = pts(&[(3.0, 4.0), (100.0, 7.0), (50.0, 900.0), (1.0, 1.0)]);
    let km = kmeans(&p, 4, 2, 100).unwrap();
    for (i, q) in p.iter().enumerate() {
        assert_eq!(km.centroids[km.labels[i]], *q);
    }
}

#[test]
fn errors_on_bad_k() {
    let p = pts(&[(0.0, 0.0), (1.0, 1.0)]);
    assert!(matches!(kmeans(&p, 3, 0, 10), Err(ClusterError::InvalidArgument(_))));
}

#[test]
fn beats_random_partitions() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for trial in 0..5 {
        let p: Vec<Point> = (0..50)
            .map(|_| Point::new(rng.gen_range(0.0..2500.0), rng.gen_range(0.0..2500.0)))
            .collect();
        let km = kmeans(&p, 4, trial, 100).unwrap();
        let ours = sse(&p, &km.labels, 4);
        for _ in 0..1000 {
            let labels: Vec<usize> = (0..50).map(|_| rng.gen_range(0..4)).collect();
            assert!(ours <= sse(&p, &labels, 4) + 1e-9);
        }
    }
}

#[test]
fn objective_nonincreasing_and_centroids_are_means() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for seed in 0..50 {
        let n = rng.gen_range(8..60);
        let k = rng.gen_range(1..=6.min(n));
        let p: Vec<Point> = (0..n)
            .map(|_| Point::new(rng.gen_range(0.0..2500.0), rng.gen_range(0.0..2500.0)))
            .collect();
        let km = kmeans(&p, k, seed, 200).unwrap();
        for w in km.objective_trace.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-9, "{:?}", km.objective_trace);
        }
        for c in 0..k {
            let members: Vec<&Point> = p.iter().zip(&km.labels).filter(|(_, &l)| l == c).map(|(q, _)| q).collect();
            assert!(!members.is_empty());
            let mx = members.iter().map(|q| q.x).sum::<f64>() / members.len() as f64;
            let my = members.iter().map(|q| q.y).sum::<f64>() / members.len() as f64;
            assert!((km.centroids[c].x - mx).abs() < 1e-9 && (km.centroids[c].y - my).abs() < 1e-9);
        }
        assert_eq!(kmeans(&p, k, seed, 200).unwrap(), km);
    }
}

#[test]
fn mapping_single_and_identical() {
    let base = Pose::new(0.0, 0.0, 0.0);
    assert_eq!(map_clusters_to_uavs(&pts(&[(900.0, 10.0)]), &[base], 80.0).unwrap(), vec![0]);
    let c = pts(&[(2000.0, 100.0), (100.0, 2000.0), (1200.0, 1200.0), (500.0, 40.0)]);
    assert_eq!(map_clusters_to_uavs(&c, &[base; 4], 80.0).unwrap(), vec![0, 1, 2, 3]);
    assert!(map_clusters_to_uavs(&c, &[base; 3], 80.0).is_err());
}

#[test]
fn mapping_matches_permutation_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let uavs: Vec<Pose> = (0..3)
            .map(|_| Pose::new(rng.gen_range(0.0..2500.0), rng.gen_range(0.0..2500.0), rng.gen_range(0.0..std::f64::consts::TAU)))
            .collect();
        let c: Vec<Point> = (0..3)
            .map(|_| Point::new(rng.gen_range(0.0..2500.0), rng.gen_range(0.0..2500.0)))
            .collect();
        let cost = |u: usize, k: usize| cs_shortest(uavs[u], c[k], 80.0).map_or(f64::INFINITY, |p| p.total_length);
        let owner = map_clusters_to_uavs(&c, &uavs, 80.0).unwrap();
        let ours: f64 = owner.iter().enumerate().map(|(k, &u)| cost(u, k)).sum();
        let best = common::permutations(&[0, 1, 2])
            .iter()
            .map(|perm| (0..3).map(|k| cost(perm[k], k)).sum::<f64>())
            .fold(f64::INFINITY, f64::min);
        assert!((ours - best).abs() < 1e-6, "{ours} vs {best}");
    }
}

fn model(centres: &[(f64, f64)]) -> ClusterModel {
    ClusterModel {
        centroids: pts(centres),
        membership: Vec::new(),
        uav_of_cluster: (0..centres.len()).collect(),
        active: vec![true; centres.len()],
    }
}

#[test]
fn classify_examples() {
    let mut m = model(&[(0.0, 0.0), (10.0, 0.0)]);
    assert_eq!(classify_point(Point::new(2.0, 0.0), &m, true), Ok(0));
    assert_eq!(classify_point(Point::new(5.0, 3.0), &m, true), Ok(0));
    m.deactivate(0);
    assert_eq!(classify_point(Point::new(2.0, 0.0), &m, true), Ok(1));
    m.deactivate(1);
    assert_eq!(classify_point(Point::new(2.0, 0.0), &m, true), Err(ClusterError::NoAvailableUav));
}

#[test]
fn classify_matches_oracle_and_survives_unrelated_deactivation() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..2000 {
        let k = rng.gen_range(1..7);
        let centres: Vec<(f64, f64)> = (0..k).map(|_| (rng.gen_range(0.0..2500.0), rng.gen_range(0.0..2500.0))).collect();
        let mut m = model(&centres);
        let p = (rng.gen_range(0.0..2500.0), rng.gen_range(0.0..2500.0));
        let got = classify_point(Point::new(p.0, p.1), &m, true).unwrap();
        assert_eq!(Some(got), common::nearest_active(p, &centres, &m.active));
        if k > 1 {
            let other = (got + 1 + rng.gen_range(0..k - 1)) % k;
            m.deactivate(other);
            assert_eq!(classify_point(Point::new(p.0, p.1), &m, true).unwrap(), got);
        }
    }
}
