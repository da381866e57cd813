//! Norms of Gaussian noise vectors concentrate as the dimension grows: the
//! mean length climbs like `sqrt(N)` while the spread stays near `1/sqrt(2)`.
//!
//! Run with `cargo run --release --example sphere_hardening`.

use hollow::shell_stats::estimate_point_shell;
use hollow::synth::{chi_moments, gen_cloud, ManifoldSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub exact_mean: f64,
    pub exact_sd: f64,
}

pub fn run_example() -> hollow::Result<Vec<Row>> {
    let mut rows = Vec::new();
    for n in [1, 10, 100, 1000] {
        let spec = ManifoldSpec::point(n, 1.0, 42 + n as u64);
        let cloud: Vec<Vec<f64>> = gen_cloud(&spec, 10_000)?.into_iter().map(|s| s.realization).collect();
        let (_, shell) = estimate_point_shell(&cloud)?;
        let (mu, var) = chi_moments(n as u64, 1.0)?;
        rows.push(Row { n, mean: shell.mu, sd: shell.sd(), exact_mean: mu, exact_sd: var.sqrt() });
    }

    println!("{:>6} {:>10} {:>10} {:>10} {:>10} {:>8}", "N", "mean", "exact", "sd", "exact", "mean/sd");
    for r in &rows {
        println!(
            "{:>6} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>8.2}",
            r.n,
            r.mean,
            r.exact_mean,
            r.sd,
            r.exact_sd,
            r.mean / r.sd
        );
    }
    Ok(rows)
}

fn main() -> hollow::Result<()> {
    run_example().map(|_| ())
}
