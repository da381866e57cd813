//! Distances from noisy realizations to a hyperplane manifold: where the
//! shell sits and how thick it is, measured against the closed forms and
//! the exact chi moments.
//!
//! Run with `cargo run --release --example shell_thickness`.

use hollow::shell_stats::{shell_from_distances, theoretical_shell};
use hollow::synth::{gen_cloud, ManifoldSpec};
use hollow::verify::variance_interval;

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub l: usize,
    pub mu: f64,
    pub var: f64,
    pub var_lo: f64,
    pub var_hi: f64,
    pub mu_closed: f64,
    pub var_closed: f64,
    pub mu_exact: f64,
    pub var_exact: f64,
}

pub fn run_example() -> hollow::Result<Vec<Row>> {
    let n = 100;
    let mut rows = Vec::new();
    for l in [3, 36] {
        let spec = ManifoldSpec::axis_aligned(n, l, 5.0, 1.0, 2024 + l as u64);
        let d: Vec<f64> = gen_cloud(&spec, 10_000)?.into_iter().map(|s| s.perpendicular).collect();
        let shell = shell_from_distances(&d)?;
        let (_, lo, hi) = variance_interval(&d, 2.576);
        let t = theoretical_shell(n, l, 1.0)?;
        rows.push(Row {
            l,
            mu: shell.mu,
            var: shell.var,
            var_lo: lo,
            var_hi: hi,
            mu_closed: t.mu_closed,
            var_closed: t.var_closed,
            mu_exact: t.mu_exact,
            var_exact: t.var_exact,
        });
    }

    println!("N = {n}, eps0 = 1, 10000 realizations per manifold");
    for r in &rows {
        println!("L = {}", r.l);
        println!("  location  measured {:.4}  sqrt(N-L) {:.4}  exact {:.4}", r.mu, r.mu_closed, r.mu_exact);
        println!(
            "  thickness measured {:.4}  99% CI [{:.4}, {:.4}]  N/(2(N-L)) {:.4}  exact {:.4}",
            r.var, r.var_lo, r.var_hi, r.var_closed, r.var_exact
        );
        let inside = r.var_closed >= r.var_lo && r.var_closed <= r.var_hi;
        println!("  closed-form thickness inside the interval: {inside}");
    }
    Ok(rows)
}

fn main() -> hollow::Result<()> {
    run_example().map(|_| ())
}
