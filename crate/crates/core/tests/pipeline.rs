use hollow::clustering::Mask;
use hollow::pipeline::{AlarmEvent, Comparison, Direction, MonitorConfig, MonitorState};
use hollow::synth::ManifoldSpec;

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

#[test]
fn bound_composition_examples() {
    let a = AlarmEvent::check(7, Comparison::Fast, 13.5, 10.0, 0.25, 0.5, 4.0).unwrap();
    assert_eq!(a.direction, Direction::Above);
    assert!((a.bound - 4.0 * 0.5f64.sqrt()).abs() < 1e-12);
    assert!((a.z - 3.5 / 0.5f64.sqrt()).abs() < 1e-12);
    assert!(AlarmEvent::check(7, Comparison::Fast, 10.0, 10.0, 0.25, 0.5, 4.0).is_none());
    let below = AlarmEvent::check(7, Comparison::Trend, 6.0, 10.0, 0.25, 0.5, 4.0).unwrap();
    assert_eq!(below.direction, Direction::Below);
}

#[test]
fn trend_step_before_warmup_is_an_error() {
    let mut m = point_monitor(20);
    assert!(m.trend_step().is_err());
}

struct Trial {
    detected: usize,
    first: bool,
    mean_d: f64,
    shelldist: f64,
}

/// Feeds `defect_at` clean realizations, then `after` shifted ones.
fn shifted_run(n: usize, offset: f64, seed: u64, defect_at: usize, after: usize) -> Trial {
    let mut m = point_monitor(n);
    let mut detected = 0;
    let mut first = false;
    let mut sum = 0.0;
    let mut shelldist = 0.0;
    for (i, s) in ManifoldSpec::point(n, 1.0, seed).sampler().unwrap().take(defect_at + after).enumerate() {
        if i == defect_at {
            shelldist = m.fast().shelldist();
        }
        let r = m.monitor_step(&row(&s, if i >= defect_at { offset } else { 0.0 })).unwrap();
        if i >= defect_at {
            sum += r.d.unwrap();
            detected += usize::from(r.alarm.is_some());
            first |= i == defect_at && r.alarm.is_some();
        }
    }
    Trial { detected, first, mean_d: sum / after as f64, shelldist }
}

#[test]
fn detection_grows_with_offset_and_distance_inflates() {
    let (n, trials, after) = (400, 12, 40);
    let mut rates = Vec::new();
    let mut excess = Vec::new();
    for offset in [0.25, 0.5, 1.0] {
        let (mut detected, mut gap) = (0, 0.0);
        for t in 0..trials {
            let run = shifted_run(n, offset, 500 + t, 1500, after);
            if offset == 1.0 {
                assert!(run.first, "trial {t} missed the first shifted realization");
            }
            detected += run.detected;
            gap += run.mean_d - run.shelldist;
        }
        rates.push(detected);
        excess.push(gap / trials as f64);
    }
    assert!(rates.windows(2).all(|w| w[0] <= w[1]), "{rates:?}");
    assert!(excess.iter().all(|e| *e > 0.0), "{excess:?}");
    assert!(excess.windows(2).all(|w| w[0] < w[1]), "{excess:?}");
}

#[test]
fn slow_drift_trips_trend_before_fast() {
    let n = 1000;
    let mut m = point_monitor(n);
    let (mut first_trend, mut first_fast) = (None, None);
    for (i, s) in ManifoldSpec::point(n, 1.0, 3).sampler().unwrap().take(2500).enumerate() {
        let drift = if i >= 1200 { 0.05 * (i - 1200) as f64 / 100.0 } else { 0.0 };
        for a in m.process(&row(&s, drift)).unwrap() {
            match a.comparison {
                Comparison::Trend => first_trend = first_trend.or(Some(a.index)),
                Comparison::Fast => first_fast = first_fast.or(Some(a.index)),
            }
        }
    }
    let trend = first_trend.expect("drift never raised a trend alarm");
    assert!(trend >= 1200);
    assert!(first_fast.is_none_or(|f| trend < f), "trend {trend}, fast {first_fast:?}");
}

#[test]
fn reference_is_frozen_after_warmup() {
    let mut m = point_monitor(30);
    let mut frozen = None;
    for s in ManifoldSpec::point(30, 1.0, 8).sampler().unwrap().take(900) {
        m.process(&row(&s, 0.0)).unwrap();
        if m.warmed_up() {
            let r = m.reference().unwrap().clone();
            assert_eq!(frozen.get_or_insert(r.clone()), &r);
        }
    }
    assert!(frozen.is_some());
}

#[test]
fn save_load_round_trip_and_schema_check() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("state.json");
    let mut m = point_monitor(10);
    for s in ManifoldSpec::point(10, 1.0, 2).sampler().unwrap().take(650) {
        m.process(&row(&s, 0.0)).unwrap();
    }
    m.save(&path).unwrap();
    let first = std::fs::read(&path).unwrap();
    MonitorState::load(&path).unwrap().save(&path).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), first);

    let text = String::from_utf8(first).unwrap().replacen("\"schema\":1", "\"schema\":99", 1);
    assert!(MonitorState::from_json(&text).is_err());
    assert!(MonitorState::from_json("{not json").is_err());

    let empty = point_monitor(3);
    assert_eq!(MonitorState::from_json(&empty.to_json().unwrap()).unwrap(), empty);
}
