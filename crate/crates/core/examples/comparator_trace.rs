//! Step-by-step trace of the shell comparator on a short distance stream,
//! then the same stream through an EWMA comparator.
//!
//! Run with `cargo run --example comparator_trace`.

use hollow::comparator::{Comparator, MatchResult, Smoothing, DEFAULT_THRESHOLD_K};

fn trace(mut c: Comparator, stream: &[f64]) -> hollow::Result<Vec<MatchResult>> {
    println!(
        "{:>5} {:>8} {:>10} {:>10} {:>8} {:>12} {:>10}",
        "m", "d", "shelldist", "shellvar", "bound", "decision", "after"
    );
    let mut out = Vec::new();
    for (m, &d) in stream.iter().enumerate() {
        let r = c.compare_distance(d, 0.0, 0.0);
        let decision = match (r.evaluated, r.matched) {
            (false, _) => "no decision",
            (true, true) => "match",
            (true, false) => "MISMATCH",
        };
        println!(
            "{:>5} {:>8.3} {:>10.5} {:>10.5} {:>8.4} {:>12} {:>10.5}",
            m, d, r.tested_shelldist, r.tested_shellvar, r.bound, decision, r.shelldist
        );
        out.push(r);
    }
    Ok(out)
}

pub fn run_example() -> hollow::Result<(Vec<MatchResult>, Vec<MatchResult>)> {
    let stream = [10.0, 10.5, 10.0, 30.0];
    println!("batch");
    let batch = trace(Comparator::new(Smoothing::Batch, DEFAULT_THRESHOLD_K)?, &stream)?;
    println!("\newma, alpha = 0.5");
    let ewma = trace(Comparator::new(Smoothing::Ewma { alpha: 0.5 }, DEFAULT_THRESHOLD_K)?, &stream)?;
    Ok((batch, ewma))
}

fn main() -> hollow::Result<()> {
    run_example().map(|_| ())
}
