//! Acceptance suite: every criterion prints one PASS/FAIL line, and the
//! process exits non-zero if any of them fails.

use std::f64::consts::{PI, TAU};
use std::time::Instant;

use hollow::clustering::{ClusterModel, Mask};
use hollow::comparator::{Comparator, Smoothing};
use hollow::kriging::KrigingModel;
use hollow::clustering::Cluster;
use hollow::pipeline::{AlarmEvent, Comparison, MonitorConfig, MonitorState};
use hollow::shell_stats::{estimate_point_shell, shell_from_distances};
use hollow::synth::{gen_cloud, pair_distances, ManifoldSpec};
use hollow::verify::variance_interval;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn point_monitor(n: usize) -> MonitorState {
    let mut roles = vec![true];
    roles.extend(vec![false; n]);
    let config = MonitorConfig { kmax: 10, ..MonitorConfig::default() };
    MonitorState::new(Mask::new(roles).unwrap(), config).unwrap()
}

fn row(s: &hollow::synth::Sample, offset: f64) -> Vec<f64> {
    let mut x = s.operating_point.clone();
    x.extend(s.realization.iter().map(|v| v + offset));
    x
}

fn sphere_hardening() -> Outcome {
    let t = Instant::now();
    let spec = ManifoldSpec::point(1000, 1.0, 1);
    let cloud: Vec<Vec<f64>> = gen_cloud(&spec, 10_000).unwrap().into_iter().map(|s| s.realization).collect();
    let (_, shell) = estimate_point_shell(&cloud).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let ok = rel(shell.mu, 31.615) <= 0.005 && rel(shell.sd(), 0.707) <= 0.05 && secs < 10.0;
    outcome(ok, format!("mu {:.4} (31.615 ±0.5%), sd {:.4} (0.707 ±5%), {secs:.2} s", shell.mu, shell.sd()))
}

fn perpendicular(l: usize, seed: u64) -> Vec<f64> {
    let spec = ManifoldSpec::axis_aligned(100, l, 5.0, 1.0, seed);
    gen_cloud(&spec, 10_000).unwrap().into_iter().map(|s| s.perpendicular).collect()
}

fn shell_location() -> Outcome {
    let shell = shell_from_distances(&perpendicular(3, 2)).unwrap();
    let closed_in_band = rel(97f64.sqrt(), 9.823) <= 0.01;
    let ok = rel(shell.mu, 9.823) <= 0.01 && closed_in_band;
    outcome(ok, format!("mu {:.4} (9.823 ±1%), sqrt(97) = {:.4} inside band: {closed_in_band}", shell.mu, 97f64.sqrt()))
}

fn shell_thickness() -> Outcome {
    let shell = shell_from_distances(&perpendicular(3, 3)).unwrap();
    let (var36, lo, hi) = variance_interval(&perpendicular(36, 4), 2.576);
    let outside = !(lo..=hi).contains(&0.781);
    let ok = rel(shell.var, 0.498) <= 0.10 && outside;
    outcome(
        ok,
        format!(
            "L=3 var {:.4} (0.498 ±10%; closed form 0.5155); L=36 var {var36:.4}, 99% CI [{lo:.4}, {hi:.4}], 0.781 outside: {outside}",
            shell.var
        ),
    )
}

fn pair_distance() -> Outcome {
    let mean = |v: Vec<f64>| v.iter().sum::<f64>() / v.len() as f64;
    let big = mean(pair_distances(1000, 1.0, 10_000, 5));
    let small = mean(pair_distances(2, 1.0, 100_000, 6));
    let ok = rel(big, 44.721) <= 0.01 && rel(small, PI.sqrt()) <= 0.01;
    outcome(ok, format!("N=1000 mean {big:.3} (44.721 ±1%); N=2 mean {small:.4} (≈1.772, formula gives 2)"))
}

fn comparator_trace() -> Outcome {
    let mut c = Comparator::new(Smoothing::Batch, 4.0).unwrap();
    let mut last = None;
    for d in [10.0, 10.5, 10.0, 30.0] {
        last = Some(c.compare_distance(d, 0.0, 0.0));
    }
    let r = last.unwrap();
    let ok = (r.tested_shelldist - 10.166_666_666_666_666).abs() <= 1e-10
        && (r.tested_shellvar - 0.15625).abs() <= 1e-10
        && r.evaluated
        && !r.matched;
    outcome(
        ok,
        format!(
            "shelldist {:.10}, shellvar {:.10}, match on 30: {}",
            r.tested_shelldist, r.tested_shellvar, r.matched
        ),
    )
}

fn false_alarms() -> Outcome {
    let n = 1000;
    let mut monitor = point_monitor(n);
    let warmup = monitor.config().warmup as usize;
    let (mut fast, mut trend) = (0, 0);
    for s in ManifoldSpec::point(n, 1.0, 11).sampler().unwrap().take(warmup + 100_000) {
        for a in monitor.process(&row(&s, 0.0)).unwrap() {
            match a.comparison {
                Comparison::Fast => fast += 1,
                Comparison::Trend => trend += 1,
            }
        }
    }
    outcome(fast <= 50, format!("{fast} fast alarms in 100000 post-warm-up realizations (≤ 50); {trend} trend alarms"))
}

fn detection() -> Outcome {
    let n = 1000;
    let defect_at = 800;
    let mut hits = 0;
    for trial in 0..100 {
        let mut monitor = point_monitor(n);
        let mut alarm = None;
        for (i, s) in ManifoldSpec::point(n, 1.0, 1000 + trial).sampler().unwrap().take(defect_at + 1).enumerate() {
            let offset = if i >= defect_at { 1.0 } else { 0.0 };
            alarm = monitor.monitor_step(&row(&s, offset)).unwrap().alarm;
        }
        hits += usize::from(alarm.is_some());
    }
    outcome(hits >= 99, format!("{hits}/100 trials alarmed on the first defective realization (≥ 99)"))
}

struct CircleRun {
    max_offset: f64,
    shelldist: f64,
    gap_ratio: f64,
    population: u64,
    first_quarter: u64,
    last_quarter: u64,
}

fn circle_run() -> CircleRun {
    let (m, kmax) = (10_000usize, 50);
    let spec = ManifoldSpec::circle(20, 10.0, 0.1, 7);
    let mut model = ClusterModel::new(kmax, 1.5, Mask::all_independent(20).unwrap()).unwrap();
    let quarter = (m - kmax) / 4;
    let mut counts = [0u64; 4];
    for (i, s) in spec.sampler().unwrap().take(m).enumerate() {
        let before = model.fusion_search_count();
        model.ingest(&s.realization).unwrap();
        if i >= kmax {
            counts[((i - kmax) / quarter).min(3)] += model.fusion_search_count() - before;
        }
    }
    let mut angles: Vec<f64> = model.clusters().iter().map(|c| c.centroid[1].atan2(c.centroid[0])).collect();
    angles.sort_by(f64::total_cmp);
    let mut gaps: Vec<f64> = angles.windows(2).map(|w| w[1] - w[0]).collect();
    gaps.push(angles[0] + TAU - angles[angles.len() - 1]);
    let mean_gap = TAU / gaps.len() as f64;
    CircleRun {
        max_offset: model.clusters().iter().map(|c| spec.project(&c.centroid).1).fold(0.0, f64::max),
        shelldist: model.shelldist(),
        gap_ratio: gaps.iter().cloned().fold(0.0, f64::max) / mean_gap,
        population: model.clusters().iter().map(|c| c.population).sum(),
        first_quarter: counts[0],
        last_quarter: counts[3],
    }
}

fn clustering_geometry(run: &CircleRun) -> Outcome {
    let ok = run.max_offset <= 3.0 * run.shelldist && run.gap_ratio < 3.0 && run.population == 10_000;
    outcome(
        ok,
        format!(
            "farthest centroid {:.4} from circle (≤ 3·shelldist = {:.4}), max/mean gap {:.3} (< 3), population {}",
            run.max_offset,
            3.0 * run.shelldist,
            run.gap_ratio,
            run.population
        ),
    )
}

fn fusion_convergence(run: &CircleRun) -> Outcome {
    let ok = run.last_quarter as f64 <= 0.25 * run.first_quarter as f64;
    outcome(
        ok,
        format!(
            "fusion searches: first post-seed quartile {}, last quartile {} (≤ 25%)",
            run.first_quarter, run.last_quarter
        ),
    )
}

fn kriging_sanity() -> Outcome {
    let site = |w: f64, v: f64| Cluster { centroid: vec![w, v], per_dim_var: vec![0.0, 0.5], population: 50, cvar: 0.5 };
    let model = KrigingModel::fit(&[site(-1.5, 3.25), site(2.5, 8.5)], &Mask::new(vec![true, false]).unwrap(), &[1.0, 1.0])
        .unwrap();
    let mid = model.interpolate(&[0.5]).unwrap();
    let near = model.interpolate(&[-1.1]).unwrap();
    let mean_exact = mid.estimate[0] == (3.25 + 8.5) / 2.0;
    let mut worst: f64 = 0.0;
    for q in [-4.0, -1.5, -0.3, 0.5, 1.7, 2.5, 9.0] {
        worst = worst.max((model.weights(&[q]).unwrap().iter().sum::<f64>() - 1.0).abs());
    }
    let ok = mean_exact && worst <= 1e-10 && mid.sigma_m > near.sigma_m;
    outcome(
        ok,
        format!(
            "midpoint {} (mean 5.875), max |Σλ - 1| {worst:.1e}, sigma_M midpoint {:.4} > 1/10 gap {:.4}",
            mid.estimate[0], mid.sigma_m, near.sigma_m
        ),
    )
}

fn round_trip() -> Outcome {
    let n = 200;
    let spec = ManifoldSpec::axis_aligned(n, 2, 5.0, 1.0, 21);
    let mut roles = vec![true; 2];
    roles.extend(vec![false; n]);
    let fresh = || MonitorState::new(Mask::new(roles.clone()).unwrap(), MonitorConfig::default()).unwrap();
    let rows: Vec<Vec<f64>> = spec
        .sampler()
        .unwrap()
        .take(2500)
        .enumerate()
        .map(|(i, s)| {
            let mut x = s.operating_point.clone();
            x.extend(s.realization.iter().map(|v| if i >= 2000 { v + 0.5 } else { *v }));
            x
        })
        .collect();
    let run = |state: &mut MonitorState, xs: &[Vec<f64>]| -> Vec<AlarmEvent> {
        xs.iter().flat_map(|x| state.process(x).unwrap()).collect()
    };

    let mut continuous = fresh();
    let expected = run(&mut continuous, &rows);

    let mut first = fresh();
    let mut alarms = run(&mut first, &rows[..1234]);
    let saved = first.to_json().unwrap();
    let reloaded = MonitorState::from_json(&saved).unwrap();
    let identical_bytes = reloaded.to_json().unwrap() == saved;
    let mut resumed = reloaded;
    alarms.extend(run(&mut resumed, &rows[1234..]));
    let same_stream = alarms == expected && !expected.is_empty();
    let same_end = resumed.to_json().unwrap() == continuous.to_json().unwrap();
    outcome(
        identical_bytes && same_stream && same_end,
        format!(
            "save/load/save identical: {identical_bytes}; interrupted run emits the same {} alarms: {same_stream}; final states identical: {same_end}",
            expected.len()
        ),
    )
}

fn main() {
    let started = Instant::now();
    let results: Vec<(usize, &str, Outcome)> = std::thread::scope(|s| {
        let circle = s.spawn(circle_run);
        let jobs: Vec<(usize, &str, std::thread::ScopedJoinHandle<'_, Outcome>)> = vec![
            (1, "sphere hardening", s.spawn(sphere_hardening)),
            (2, "shell location", s.spawn(shell_location)),
            (3, "shell thickness", s.spawn(shell_thickness)),
            (4, "pair distance", s.spawn(pair_distance)),
            (5, "comparator hand trace", s.spawn(comparator_trace)),
            (6, "false-alarm rate", s.spawn(false_alarms)),
            (7, "detection", s.spawn(detection)),
            (10, "kriging sanity", s.spawn(kriging_sanity)),
            (11, "round trip", s.spawn(round_trip)),
        ];
        let circle = circle.join().expect("circle run panicked");
        let mut results: Vec<(usize, &str, Outcome)> = jobs
            .into_iter()
            .map(|(i, name, h)| {
                let o = h.join().unwrap_or_else(|_| outcome(false, "panicked".into()));
                (i, name, o)
            })
            .collect();
        results.push((8, "clustering geometry", clustering_geometry(&circle)));
        results.push((9, "fusion-search convergence", fusion_convergence(&circle)));
        results.sort_by_key(|r| r.0);
        results
    });

    let mut failed = 0;
    for (i, name, o) in &results {
        println!("criterion {i:>2} {name:<26} {}  {}", if o.passed { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.passed);
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.1} s",
        results.len() - failed,
        started.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
