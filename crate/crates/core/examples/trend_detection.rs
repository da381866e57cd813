//! A slow drift of the response: each realization only moves a little, so
//! the fast comparison keeps adapting, while the actualized average walks
//! away from the frozen initial history and raises a trend alarm.
//!
//! Run with `cargo run --release --example trend_detection`.

use hollow::clustering::Mask;
use hollow::pipeline::{Comparison, MonitorConfig, MonitorState};
use hollow::synth::ManifoldSpec;

pub const DRIFT_FROM: u64 = 1200;

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub first_trend: Option<u64>,
    pub first_fast: Option<u64>,
}

pub fn run_example() -> hollow::Result<Outcome> {
    let n = 1000;
    let spec = ManifoldSpec::point(n, 1.0, 1);
    let mut roles = vec![true];
    roles.extend(vec![false; n]);
    let config = MonitorConfig { kmax: 10, ..MonitorConfig::default() };
    let mut monitor = MonitorState::new(Mask::new(roles)?, config)?;

    let mut out = Outcome { first_trend: None, first_fast: None };
    for (i, s) in spec.sampler()?.take(3000).enumerate() {
        // 0.05 per channel every 100 realizations
        let drift = (i as f64 - DRIFT_FROM as f64).max(0.0) * 0.05 / 100.0;
        let mut x = s.operating_point;
        x.extend(s.realization.iter().map(|v| v + drift));
        for a in monitor.process(&x)? {
            let slot = match a.comparison {
                Comparison::Fast => &mut out.first_fast,
                Comparison::Trend => &mut out.first_trend,
            };
            slot.get_or_insert(a.index);
        }
    }
    println!("drift starts at {DRIFT_FROM}");
    println!("first trend alarm {:?}", out.first_trend);
    println!("first fast alarm  {:?}", out.first_fast);
    Ok(out)
}

fn main() -> hollow::Result<()> {
    run_example().map(|_| ())
}
