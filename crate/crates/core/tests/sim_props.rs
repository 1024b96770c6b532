mod common;

use std::collections::HashSet;

use uavplan_core::allocation::{Method, Metric, Strategy, StrategyConfig};
use uavplan_core::cluster::ClusterModel;
use uavplan_core::geometry::{Point, Pose};
use uavplan_core::metrics::{collect_metrics, gap};
use uavplan_core::mission::{random_scenario, Scenario, Task, TaskState, TaskType, TypeMix, UavState, World};
use uavplan_core::sim::{
    inject_damage, inject_new_task, run, EventKind, EventTimeline, NewTaskEvent, NewTaskSchedule, Outcome, SimConfig,
    SimResult, Victim,
};

fn scenario(k: usize, pts: &[(f64, f64)], speed: f64) -> Scenario {
    Scenario {
        k,
        n: pts.len(),
        area_side: 2500.0,
        base: Pose::new(0.0, 0.0, 0.0),
        tasks: pts
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| Task::new(i, Point::new(x, y), TaskType::PointFree))
            .collect(),
        uav_speed: speed,
        turn_radius: 80.0,
        seed: 0,
    }
}

fn cfg(method: Method) -> SimConfig {
    SimConfig::new(method.strategy().unwrap())
}

fn fingerprint(r: &SimResult) -> (String, String, String) {
    let mut trace = Vec::new();
    r.write_trace_csv(&mut trace).unwrap();
    let mut events = Vec::new();
    r.write_events_csv(&mut events).unwrap();
    (
        collect_metrics(r, None).to_json(),
        String::from_utf8(trace).unwrap(),
        String::from_utf8(events).unwrap(),
    )
}

fn assert_complete_once(r: &SimResult) {
    assert!(r.succeeded(), "{:?}", r.outcome);
    let mut seen = HashSet::new();
    for t in r.sequences().into_iter().flatten() {
        assert!(seen.insert(t), "task {t} completed twice");
    }
    assert_eq!(seen.len(), r.world.tasks.len());
    assert!(r.world.tasks.iter().all(|t| t.state == TaskState::Completed));
}

#[test]
fn straight_leg_kinematics() {
    let s = scenario(1, &[(100.0, 0.0), (2400.0, 2400.0)], 10.0);
    let r = run(&s, &cfg(Method::Rbddg), &EventTimeline::none()).unwrap();
    let arrive = r
        .events
        .iter()
        .find(|e| e.kind == EventKind::Arrive && e.task == Some(0))
        .unwrap();
    assert!((arrive.time - 10.0).abs() <= 0.1 + 1e-9, "{}", arrive.time);
    let at = r.trace.iter().find(|row| (row.t - 10.0).abs() < 1e-9).unwrap();
    assert!((at.odometer - 100.0).abs() <= 1.0 + 1e-9);
    assert!((r.world.uavs[0].parts.l1 - 100.0).abs() < 1e-9);
    assert_complete_once(&r);
}

#[test]
fn repeated_runs_are_identical() {
    let s = random_scenario(31, 4, 20, 2500.0, &TypeMix::default()).unwrap();
    for m in [Method::Prbddg, Method::Hba, Method::Aa] {
        let a = run(&s, &cfg(m), &EventTimeline::none()).unwrap();
        let b = run(&s, &cfg(m), &EventTimeline::none()).unwrap();
        assert_eq!(fingerprint(&a), fingerprint(&b));
    }
}

#[test]
fn late_damage_changes_nothing() {
    let s = random_scenario(32, 4, 20, 2500.0, &TypeMix::points(0.3)).unwrap();
    let c = cfg(Method::Prbddg);
    let plain = run(&s, &c, &EventTimeline::none()).unwrap();
    let late = EventTimeline::none().with_damage(Some(plain.completion_time + 100.0), Victim::Uav(2));
    let damaged = run(&s, &c, &late).unwrap();
    assert_eq!(fingerprint(&plain), fingerprint(&damaged));
}

#[test]
fn odometer_reintegrates_from_trace() {
    let s = random_scenario(33, 3, 12, 2500.0, &TypeMix::points(0.5)).unwrap();
    let mut c = cfg(Method::Rbddg);
    c.trace_every = 1;
    let r = run(&s, &c, &EventTimeline::none()).unwrap();
    let step = s.uav_speed * c.dt;
    for u in &r.world.uavs {
        let rows: Vec<_> = r.trace.iter().filter(|row| row.uav_id == u.id).collect();
        let mut sum = 0.0;
        let mut partial = 0;
        for w in rows.windows(2) {
            let d = w[1].odometer - w[0].odometer;
            assert!(d >= -1e-9 && d <= step + 1e-9);
            if d > 1e-9 && (d - step).abs() > 1e-6 {
                partial += 1;
            }
            let moved = (w[1].x - w[0].x).hypot(w[1].y - w[0].y);
            assert!(moved <= step + 1e-6, "jump of {moved} m");
            sum += d;
        }
        assert!((sum - u.odometer()).abs() < 1e-6);
        assert!((u.odometer() - (u.parts.l1 + u.parts.l2 + u.parts.l3 + u.parts.l4)).abs() < 1e-9);
        // one short step per leg end at most: legs into tasks plus the way home
        assert!(partial <= u.completed.len() + 1, "{partial} partial steps");
    }
    let total: f64 = r.world.uavs.iter().map(|u| u.odometer()).sum();
    assert!((collect_metrics(&r, None).total_distance_m - total).abs() < 1e-9);
}

#[test]
fn every_method_completes_random_missions() {
    for seed in 0..6 {
        let s = random_scenario(40 + seed, 4, 18, 2500.0, &TypeMix::points(0.3)).unwrap();
        for m in &Method::ALL[1..] {
            let r = run(&s, &cfg(*m), &EventTimeline::none()).unwrap();
            assert_complete_once(&r);
            assert!(r.world.uavs.iter().all(|u| u.at_home));
        }
    }
}

#[test]
fn mixed_task_types_complete() {
    for seed in 0..4 {
        let mix = TypeMix {
            point_free: 0.4,
            point_constrained: 0.2,
            line: 0.15,
            circle: 0.15,
            area: 0.1,
        };
        let s = random_scenario(60 + seed, 3, 12, 2500.0, &mix).unwrap();
        for m in [Method::Prbddg, Method::Rbddh, Method::Aa] {
            let r = run(&s, &cfg(m), &EventTimeline::none()).unwrap();
            assert_complete_once(&r);
            let coverage: f64 = r.world.uavs.iter().map(|u| u.parts.l3).sum();
            let expected: f64 = s.tasks.iter().map(|t| t.coverage_length(80.0).unwrap()).sum();
            assert!((coverage - expected).abs() < 1e-6 * expected.max(1.0), "{coverage} vs {expected}");
        }
    }
}

#[test]
fn emergencies_keep_liveness_and_release_atomically() {
    for seed in 0..8 {
        let mix = TypeMix::points(0.4);
        let s = random_scenario(70 + seed, 4, 16, 2500.0, &mix).unwrap();
        let timeline = EventTimeline::scripted_new_tasks(seed, 5, (30.0, 50.0), 2500.0, &mix, 80.0)
            .with_damage(None, Victim::Random);
        for m in [Method::Prbddg, Method::Prbddh, Method::Gba, Method::Rbddh] {
            let r = run(&s, &cfg(m), &timeline).unwrap();
            assert_complete_once(&r);
            assert_eq!(r.world.tasks.len(), 21);
            let dmg = r.events.iter().find(|e| e.kind == EventKind::Damage).unwrap();
            let victim = dmg.uav.unwrap();
            assert!((50.0..60.1).contains(&dmg.time));
            assert_eq!(r.world.uavs[victim].state, UavState::Damaged);
            // nothing is handed to or finished by the victim afterwards
            assert!(!r
                .events
                .iter()
                .any(|e| e.time > dmg.time && e.uav == Some(victim) && e.kind != EventKind::Damage));
            if let Some(rel) = r.events.iter().find(|e| e.kind == EventKind::Release) {
                let t = rel.task.unwrap();
                let by = r.tasks[t].completed_by.unwrap();
                assert_ne!(by, victim);
            }
        }
    }
}

#[test]
fn new_task_classification_examples() {
    let s = scenario(2, &[(100.0, 100.0), (2000.0, 100.0), (2100.0, 200.0)], 17.5);
    let mut w = World::from_scenario(&s);
    let mut model = ClusterModel {
        centroids: vec![Point::new(0.0, 0.0), Point::new(10.0, 0.0)],
        membership: vec![0, 1, 1],
        uav_of_cluster: vec![0, 1],
        active: vec![true, true],
    };
    let mut log = Vec::new();
    let id = inject_new_task(&mut w, Some(&mut model), Point::new(2.0, 0.0), TaskType::PointFree, &mut log).unwrap();
    assert_eq!(model.membership[id], 0);
    assert_eq!(w.tasks[id].state, TaskState::Unassigned);
    model.deactivate(0);
    let id = inject_new_task(&mut w, Some(&mut model), Point::new(2.0, 0.0), TaskType::PointFree, &mut log).unwrap();
    assert_eq!(model.membership[id], 1);
    model.deactivate(1);
    assert!(inject_new_task(&mut w, Some(&mut model), Point::new(2.0, 0.0), TaskType::PointFree, &mut log).is_err());
    assert!(inject_new_task(&mut w, None, Point::new(-5.0, 0.0), TaskType::PointFree, &mut log).is_err());
    assert_eq!(log.iter().filter(|e| e.kind == EventKind::NewTask).count(), 2);
}

#[test]
fn idle_victim_with_empty_cluster_changes_only_availability() {
    let s = scenario(2, &[(2000.0, 100.0), (2100.0, 300.0), (2200.0, 200.0)], 17.5);
    let mut w = World::from_scenario(&s);
    let mut model = ClusterModel::build(&mut w, 0, 50).unwrap();
    let empty = 1 - model.membership[0];
    model.membership = vec![1 - empty; 3];
    let victim = model.uav_of_cluster[empty];
    let before: Vec<TaskState> = w.tasks.iter().map(|t| t.state).collect();
    let mut log = Vec::new();
    inject_damage(&mut w, Some(&mut model), victim, &mut log).unwrap();
    assert_eq!(before, w.tasks.iter().map(|t| t.state).collect::<Vec<_>>());
    assert_eq!(w.uavs[victim].state, UavState::Damaged);
    assert!(!model.active[empty]);
    // a second hit only logs a warning
    inject_damage(&mut w, Some(&mut model), victim, &mut log).unwrap();
    assert!(log.last().unwrap().detail.contains("already damaged"));
}

#[test]
fn released_and_pending_tasks_go_to_nearest_survivors() {
    // four groups of tasks near the four corners of a square
    let groups = [(300.0, 300.0), (2200.0, 300.0), (2200.0, 2200.0), (300.0, 2200.0)];
    let mut pts = Vec::new();
    for &(x, y) in &groups {
        for i in 0..3 {
            pts.push((x + 40.0 * i as f64, y + 30.0 * (i % 2) as f64));
        }
    }
    let s = scenario(4, &pts, 17.5);
    let c = cfg(Method::Prbddg);
    let probe = run(&s, &c, &EventTimeline::none()).unwrap();
    let model = probe.cluster_model.clone().unwrap();
    let cluster_of = |p: (f64, f64)| {
        let centres: Vec<(f64, f64)> = model.centroids.iter().map(|q| (q.x, q.y)).collect();
        common::nearest_active(p, &centres, &[true; 4]).unwrap()
    };
    // the UAV owning the (2200, 2200) group has the longest approach
    let far = cluster_of((2200.0, 2200.0));
    let victim = model.uav_of_cluster[far];
    let r = run(&s, &c, &EventTimeline::none().with_damage(Some(60.0), Victim::Uav(victim))).unwrap();
    assert_complete_once(&r);
    let released: Vec<usize> = r.events.iter().filter(|e| e.kind == EventKind::Release).filter_map(|e| e.task).collect();
    let moved: Vec<usize> = r.events.iter().filter(|e| e.kind == EventKind::Reassign).filter_map(|e| e.task).collect();
    assert_eq!(released.len(), 1);
    assert_eq!(moved.len(), 3, "released task plus two pending ones are reclassified");
    let mut active = [true; 4];
    active[far] = false;
    let centres: Vec<(f64, f64)> = model.centroids.iter().map(|q| (q.x, q.y)).collect();
    let final_model = r.cluster_model.as_ref().unwrap();
    for &t in &moved {
        let p = r.world.tasks[t].position;
        let want = common::nearest_active((p.x, p.y), &centres, &active).unwrap();
        assert_eq!(final_model.membership[t], want);
        assert_eq!(r.tasks[t].completed_by, Some(model.uav_of_cluster[want]));
    }
}

#[test]
fn late_task_goes_to_the_waiting_owner() {
    // cluster near (2000, 300) is tiny, the other one is long
    let pts = [
        (2000.0, 300.0),
        (2050.0, 350.0),
        (300.0, 1200.0),
        (400.0, 1700.0),
        (300.0, 2200.0),
        (900.0, 2300.0),
        (1300.0, 2100.0),
    ];
    let s = scenario(2, &pts, 17.5);
    let c = cfg(Method::Prbddg);
    let plain = run(&s, &c, &EventTimeline::none()).unwrap();
    let model = plain.cluster_model.clone().unwrap();
    let small = model.membership[0];
    let owner = model.uav_of_cluster[small];
    let done = plain.world.uavs[owner].completed.last().unwrap().1;
    let inject_at = done + 20.0;
    assert!(inject_at < plain.completion_time - 100.0);
    let timeline = EventTimeline {
        new_tasks: NewTaskSchedule::Scripted(vec![NewTaskEvent {
            time: inject_at,
            position: Point::new(1900.0, 500.0),
            kind: TaskType::PointFree,
        }]),
        damage: Vec::new(),
        seed: 0,
    };
    let r = run(&s, &c, &timeline).unwrap();
    assert_complete_once(&r);
    assert_eq!(r.tasks[7].completed_by, Some(owner));
    let other = 1 - owner;
    assert_eq!(r.sequences()[other], plain.sequences()[other]);
}

#[test]
fn losing_every_uav_fails_the_mission() {
    let s = scenario(1, &[(2000.0, 2000.0), (2400.0, 100.0)], 17.5);
    let r = run(&s, &cfg(Method::Rbddg), &EventTimeline::none().with_damage(Some(5.0), Victim::Uav(0))).unwrap();
    assert!(matches!(r.outcome, Outcome::Failed(_)));
    let m = collect_metrics(&r, None);
    assert!(!m.success);
    assert_eq!(m.tasks_completed, 0);
}

fn fig7_timeline(damage_at: f64, seed: u64) -> EventTimeline {
    let pos = [(1800.0, 400.0), (600.0, 2100.0), (1500.0, 1500.0), (2300.0, 2000.0), (400.0, 900.0)];
    let times = [31.0, 36.0, 41.0, 45.0, 49.0];
    let kinds = [
        TaskType::PointFree,
        TaskType::PointConstrained { entry_heading: 1.0 },
        TaskType::PointFree,
        TaskType::PointFree,
        TaskType::PointConstrained { entry_heading: 4.0 },
    ];
    EventTimeline {
        new_tasks: NewTaskSchedule::Scripted(
            (0..5)
                .map(|i| NewTaskEvent {
                    time: times[i],
                    position: Point::new(pos[i].0, pos[i].1),
                    kind: kinds[i],
                })
                .collect(),
        ),
        damage: Vec::new(),
        seed,
    }
    .with_damage(Some(damage_at), Victim::Uav(1))
}

#[test]
fn combined_emergency_orderings() {
    let s = random_scenario(90, 4, 18, 2500.0, &TypeMix::points(1.0 / 3.0)).unwrap();
    for (damage_at, before, after) in [(20.0, 0, 5), (43.0, 3, 2), (70.0, 5, 0)] {
        for m in [Method::Prbddg, Method::Rbddg] {
            let r = run(&s, &cfg(m), &fig7_timeline(damage_at, 1)).unwrap();
            assert_complete_once(&r);
            let dmg = r.events.iter().position(|e| e.kind == EventKind::Damage).unwrap();
            let news: Vec<usize> = (0..r.events.len()).filter(|&i| r.events[i].kind == EventKind::NewTask).collect();
            assert_eq!(news.iter().filter(|&&i| i < dmg).count(), before);
            assert_eq!(news.iter().filter(|&&i| i > dmg).count(), after);
            if m == Method::Prbddg {
                // tasks that appear after the damage never land in the dead cluster
                let dead = r.world.uavs[1].cluster.unwrap();
                let model = r.cluster_model.as_ref().unwrap();
                for &i in news.iter().filter(|&&i| i > dmg) {
                    assert_ne!(model.membership[r.events[i].task.unwrap()], dead);
                }
            }
        }
    }
}

#[test]
fn stochastic_emergence_respects_window_and_cap() {
    let s = random_scenario(91, 4, 15, 2500.0, &TypeMix::default()).unwrap();
    for seed in 0..10 {
        let tl = EventTimeline::stochastic_new_tasks(seed, (30.0, 50.0), 5, TypeMix::default());
        let r = run(&s, &cfg(Method::Prbddg), &tl).unwrap();
        assert_complete_once(&r);
        assert!(r.new_tasks_injected <= 5);
        for e in r.events.iter().filter(|e| e.kind == EventKind::NewTask) {
            assert!((30.0..=50.0 + 1e-9).contains(&e.time));
        }
        let again = run(&s, &cfg(Method::Prbddg), &tl).unwrap();
        assert_eq!(fingerprint(&r), fingerprint(&again));
    }
}

#[test]
fn loiter_is_tracked_apart_from_the_odometer() {
    let s = random_scenario(92, 4, 14, 2500.0, &TypeMix::default()).unwrap();
    let mut c = cfg(Method::Prbddg);
    let frozen = run(&s, &c, &EventTimeline::none()).unwrap();
    c.loiter = true;
    let circling = run(&s, &c, &EventTimeline::none()).unwrap();
    assert_complete_once(&circling);
    assert!(circling.world.uavs.iter().any(|u| u.loiter_distance > 0.0));
    assert!(frozen.world.uavs.iter().all(|u| u.loiter_distance == 0.0));
    for u in &circling.world.uavs {
        assert!((u.odometer() - (u.parts.l1 + u.parts.l2 + u.parts.l3 + u.parts.l4)).abs() < 1e-9);
    }
}

#[test]
fn metrics_examples() {
    assert!((gap(110.0, 100.0) - 0.10).abs() < 1e-12);
    let s = scenario(1, &[(500.0, 500.0), (900.0, 100.0)], 17.5);
    let r = run(&s, &cfg(Method::Rbddg), &EventTimeline::none()).unwrap();
    let m = collect_metrics(&r, Some(r.world.uavs[0].odometer() / 1.1));
    assert_eq!(m.max_distance_difference_m, 0.0);
    assert!((m.gap.unwrap() - 0.1).abs() < 1e-12);
    assert!(collect_metrics(&r, None).gap.is_none());

    let s = random_scenario(93, 4, 22, 2500.0, &TypeMix::default()).unwrap();
    let r = run(&s, &cfg(Method::Prbddg), &EventTimeline::none()).unwrap();
    let m = collect_metrics(&r, None);
    let counts: Vec<usize> = r.sequences().iter().map(Vec::len).collect();
    assert_eq!(m.max_task_number_difference, counts.iter().max().unwrap() - counts.iter().min().unwrap());
    let d: Vec<f64> = r.world.uavs.iter().map(|u| u.odometer()).collect();
    let spread = d.iter().cloned().fold(f64::MIN, f64::max) - d.iter().cloned().fold(f64::MAX, f64::min);
    assert!((m.max_distance_difference_m - spread).abs() < 1e-9);
    assert!(m.timing.planning_epochs > 0);
    assert!(!m.to_json().contains("planning_time"));
}

#[test]
fn csv_headers() {
    let s = scenario(1, &[(500.0, 500.0), (900.0, 100.0)], 17.5);
    let r = run(&s, &cfg(Method::Gba), &EventTimeline::none()).unwrap();
    let (_, trace, events) = fingerprint(&r);
    assert_eq!(trace.lines().next(), Some("t,uav_id,x,y,theta,state,odometer"));
    assert_eq!(events.lines().next(), Some("time,kind,uav_id,task_id,detail"));
    assert!(events.lines().any(|l| l.contains(",assign,")));
    assert!(trace.lines().nth(1).unwrap().contains(",idle,") || trace.lines().nth(1).unwrap().contains(",in_transit,"));
}

#[test]
fn bad_configs_are_rejected() {
    let s = scenario(1, &[(500.0, 500.0), (900.0, 100.0)], 17.5);
    let mut c = cfg(Method::Rbddg);
    c.dt = 0.0;
    assert!(run(&s, &c, &EventTimeline::none()).is_err());
    let c = SimConfig {
        preprocess_clustering: false,
        ..SimConfig::new(StrategyConfig::new(Strategy::Greedy, Metric::Dubins, true))
    };
    assert!(run(&s, &c, &EventTimeline::none()).is_err());
    assert!(run(&s, &cfg(Method::Rbddg), &EventTimeline::none().with_damage(Some(1.0), Victim::Uav(7))).is_err());
    let mut bad = s.clone();
    bad.k = 2;
    assert!(run(&bad, &cfg(Method::Rbddg), &EventTimeline::none()).is_err());
}
