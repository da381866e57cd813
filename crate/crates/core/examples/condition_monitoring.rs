//! Monitoring a process whose response depends on two operating inputs.
//! After a clean warm-up every dependent channel is shifted by one noise
//! standard deviation; the fast comparison flags it on the next realization.
//!
//! Run with `cargo run --release --example condition_monitoring`.

use hollow::clustering::Mask;
use hollow::pipeline::{AlarmEvent, Comparison, MonitorConfig, MonitorState};
use hollow::synth::ManifoldSpec;

pub const DEFECT_AT: u64 = 3000;

pub fn run_example() -> hollow::Result<Vec<AlarmEvent>> {
    let (n, l) = (200, 2);
    let spec = ManifoldSpec::axis_aligned(n, l, 5.0, 1.0, 5);
    let mut roles = vec![true; l];
    roles.extend(vec![false; n]);
    let mut monitor = MonitorState::new(Mask::new(roles)?, MonitorConfig::default())?;

    let mut alarms = Vec::new();
    for (i, s) in spec.sampler()?.take(4000).enumerate() {
        let mut x = s.operating_point;
        x.extend(s.realization.iter().map(|v| if i as u64 >= DEFECT_AT { v + 1.0 } else { *v }));
        alarms.extend(monitor.process(&x)?);
    }

    let fast: Vec<&AlarmEvent> = alarms.iter().filter(|a| a.comparison == Comparison::Fast).collect();
    let trend = alarms.iter().filter(|a| a.comparison == Comparison::Trend).count();
    println!("{} clusters, {} realizations", monitor.clusters().clusters().len(), monitor.seen());
    println!("defect injected at {DEFECT_AT}");
    println!("{} fast alarms, {trend} trend alarms", fast.len());
    for a in fast.iter().take(5) {
        println!(
            "  #{:<5} d {:.3}  shelldist {:.3}  bound {:.3}  z {:+.1}",
            a.index, a.d, a.shelldist, a.bound, a.z
        );
    }
    Ok(alarms)
}

fn main() -> hollow::Result<()> {
    run_example().map(|_| ())
}
