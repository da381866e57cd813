//! Online clustering of a noisy circle in R^20: clusters spread evenly along
//! the curve and fusions become rare once the layout has settled.
//!
//! Run with `cargo run --release --example dynamic_clustering`.

use hollow::clustering::{ClusterModel, IngestOutcome, Mask};
use hollow::synth::ManifoldSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub clusters: usize,
    pub shelldist: f64,
    /// Largest distance from a centroid to the true circle.
    pub max_offset: f64,
    /// Largest angular gap between neighbouring centroids over the mean gap.
    pub gap_ratio: f64,
    /// Fusion searches in each quarter of the post-seed stream.
    pub searches_per_quarter: [u64; 4],
    pub population: u64,
}

pub fn run_example() -> hollow::Result<Summary> {
    let (n, radius, m, kmax) = (20, 10.0, 10_000usize, 50);
    let spec = ManifoldSpec::circle(n, radius, 0.1, 7);
    let mut model = ClusterModel::new(kmax, 1.5, Mask::all_independent(n)?)?;

    let quarter = (m - kmax) / 4;
    let mut searches = [0u64; 4];
    let mut fusions = 0;
    for (i, s) in spec.sampler()?.take(m).enumerate() {
        let before = model.fusion_search_count();
        if let IngestOutcome::Fused { .. } = model.ingest(&s.realization)? {
            fusions += 1;
        }
        if i >= kmax {
            searches[((i - kmax) / quarter).min(3)] += model.fusion_search_count() - before;
        }
    }

    let mut angles: Vec<f64> = model.clusters().iter().map(|c| c.centroid[1].atan2(c.centroid[0])).collect();
    angles.sort_by(f64::total_cmp);
    let mut gaps: Vec<f64> = angles.windows(2).map(|w| w[1] - w[0]).collect();
    gaps.push(angles[0] + std::f64::consts::TAU - angles[angles.len() - 1]);
    let mean_gap = std::f64::consts::TAU / gaps.len() as f64;
    let max_gap = gaps.iter().cloned().fold(0.0, f64::max);
    let max_offset = model.clusters().iter().map(|c| spec.project(&c.centroid).1).fold(0.0, f64::max);

    let summary = Summary {
        clusters: model.clusters().len(),
        shelldist: model.shelldist(),
        max_offset,
        gap_ratio: max_gap / mean_gap,
        searches_per_quarter: searches,
        population: model.clusters().iter().map(|c| c.population).sum(),
    };
    println!("{} realizations, {} clusters, {fusions} fusions", m, summary.clusters);
    println!("shelldist {:.4}, farthest centroid from the circle {:.4}", summary.shelldist, summary.max_offset);
    println!("largest angular gap / mean gap {:.3}", summary.gap_ratio);
    println!("fusion searches per quarter of the stream {:?}", summary.searches_per_quarter);
    println!("total population {}", summary.population);
    Ok(summary)
}

fn main() -> hollow::Result<()> {
    run_example().map(|_| ())
}
