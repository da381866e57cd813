//! Ordinary kriging along one input: cluster means sampled from a linear
//! response are interpolated between the sites and extrapolated beyond them,
//! with the estimation error growing away from the sites.
//!
//! Run with `cargo run --example kriging_interpolation`.

use hollow::clustering::{Cluster, Mask};
use hollow::kriging::KrigingModel;

#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub w: f64,
    pub estimate: f64,
    pub linear: f64,
    pub sigma_m: f64,
}

pub fn run_example() -> hollow::Result<Vec<Point>> {
    let line = |w: f64| 2.0 + 0.5 * w;
    let clusters: Vec<Cluster> = (0..8)
        .map(|i| {
            let w = i as f64;
            Cluster { centroid: vec![w, line(w)], per_dim_var: vec![0.0, 0.04], population: 200, cvar: 0.04 }
        })
        .collect();
    let mask = Mask::new(vec![true, false])?;
    let model = KrigingModel::fit(&clusters, &mask, &[1.0, 1.0])?;
    println!("variogram {:?}", model.variogram());

    let mut points = Vec::new();
    println!("{:>6} {:>10} {:>10} {:>10}", "w", "estimate", "linear", "sigma_M");
    for step in -4..=36 {
        let w = step as f64 * 0.25;
        let r = model.interpolate(&[w])?;
        let p = Point { w, estimate: r.estimate[0], linear: line(w), sigma_m: r.sigma_m };
        println!("{:>6.2} {:>10.5} {:>10.5} {:>10.5}", p.w, p.estimate, p.linear, p.sigma_m);
        points.push(p);
    }
    Ok(points)
}

fn main() -> hollow::Result<()> {
    run_example().map(|_| ())
}
