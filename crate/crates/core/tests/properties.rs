use hollow::clustering::{masked_distance, Cluster, ClusterModel, IngestOutcome, Mask};
use hollow::comparator::{Comparator, Smoothing};
use hollow::kriging::KrigingModel;
use hollow::pipeline::{AlarmEvent, Comparison};
use hollow::shell_stats::{estimate_point_shell, new_realization_correction, realization_zscore, shell_from_distances};
use nalgebra::DMatrix;
use proptest::collection::vec;
use proptest::prelude::*;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn config() -> ProptestConfig {
    ProptestConfig { cases: 64, ..ProptestConfig::default() }
}

/// Realizations of equal length built from a flat pool of values.
fn cloud(max_n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1..=max_n, 2..40usize).prop_flat_map(|(n, m)| vec(vec(-50.0..50.0f64, n), m))
}

fn hausdorff(a: &[Cluster], b: &[Cluster], mask: &Mask) -> f64 {
    let ones = vec![1.0; mask.len()];
    let directed = |p: &[Cluster], q: &[Cluster]| {
        p.iter()
            .map(|x| {
                q.iter()
                    .map(|y| masked_distance(&x.centroid, &y.centroid, mask, &ones).unwrap())
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    directed(a, b).max(directed(b, a))
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn batch_comparator_matches_step_replay(ds in vec(0.0..100.0f64, 1..60), k in 0.5..6.0f64) {
        let mut c = Comparator::new(Smoothing::Batch, k).unwrap();
        let (mut mu, mut var) = (0.0f64, 0.0f64);
        for (m, &d) in ds.iter().enumerate() {
            let r = c.compare_distance(d, 0.0, 0.0);
            if m >= 2 {
                prop_assert!(r.evaluated);
                prop_assert_eq!(r.matched, (d - mu).abs() <= k * var.sqrt());
            }
            let mf = m as f64;
            if m >= 1 {
                var = ((d - mu).powi(2) + (mf - 1.0) * var) / mf;
            }
            mu = (d + mf * mu) / (mf + 1.0);
            let prefix_mean = ds[..=m].iter().sum::<f64>() / (mf + 1.0);
            prop_assert!(close(r.shelldist, prefix_mean, 1e-10));
            prop_assert!(close(r.shelldist, mu, 1e-10));
            prop_assert!(close(r.shellvar, var, 1e-10));
            prop_assert!(r.shellvar >= 0.0);
        }
    }

    #[test]
    fn match_decisions_are_scale_covariant(
        ds in vec(0.1..20.0f64, 3..40),
        ex in 0.0..2.0f64,
        ey in 0.0..2.0f64,
        c in 0.01..100.0f64,
    ) {
        let mut a = Comparator::new(Smoothing::Ewma { alpha: 0.2 }, 3.0).unwrap();
        let mut b = Comparator::new(Smoothing::Ewma { alpha: 0.2 }, 3.0).unwrap();
        for &d in &ds {
            let x = [d, 0.5 * d];
            let y = [0.0, 1.0];
            let ra = a.compare(&x, &y, ex, ey).unwrap();
            let xs: Vec<f64> = x.iter().map(|v| v * c).collect();
            let ys: Vec<f64> = y.iter().map(|v| v * c).collect();
            let rb = b.compare(&xs, &ys, ex * c, ey * c).unwrap();
            // skip decisions sitting on the bound itself, where rounding decides
            if ((ra.d - ra.tested_shelldist).abs() - ra.bound).abs() > 1e-9 * ra.bound.max(1.0) {
                prop_assert_eq!(ra.matched, rb.matched);
            }
        }
    }

    #[test]
    fn zero_errors_reduce_alarm_to_base_rule(
        d in 0.0..50.0f64,
        shelldist in 0.0..50.0f64,
        shellvar in 0.0..10.0f64,
        k in 0.5..6.0f64,
    ) {
        let alarm = AlarmEvent::check(0, Comparison::Fast, d, shelldist, shellvar, 0.0, k);
        prop_assert_eq!(alarm.is_some(), (d - shelldist).abs() > k * shellvar.sqrt());
        let mut c = Comparator::new(Smoothing::Batch, k).unwrap();
        c.compare_distance(shelldist - shellvar.sqrt(), 0.0, 0.0);
        c.compare_distance(shelldist + shellvar.sqrt(), 0.0, 0.0);
        prop_assert!(close(c.band(0.0, 0.0), k * c.shellvar().sqrt(), 1e-12));
    }

    #[test]
    fn point_shell_is_invariant_under_rigid_motion(pts in cloud(6), seed in vec(-1.0..1.0f64, 36), shift in vec(-100.0..100.0f64, 6)) {
        let n = pts[0].len();
        let q = DMatrix::from_iterator(n, n, seed.iter().cloned().chain(std::iter::repeat(0.3)).take(n * n))
            + DMatrix::identity(n, n) * 2.0;
        let q = q.qr().q();
        let moved: Vec<Vec<f64>> = pts
            .iter()
            .map(|p| {
                let v = &q * nalgebra::DVector::from_column_slice(p);
                v.iter().zip(&shift).map(|(a, s)| a + s).collect()
            })
            .collect();
        let (_, a) = estimate_point_shell(&pts).unwrap();
        let (_, b) = estimate_point_shell(&moved).unwrap();
        prop_assert!(close(a.mu, b.mu, 1e-10));
        prop_assert!((a.var - b.var).abs() <= 1e-10 * a.mu.powi(2).max(1.0));
    }

    #[test]
    fn correction_decreases_with_population(ds in vec(0.1..10.0f64, 2..20), m in 2u64..10_000) {
        let shell = shell_from_distances(&ds).unwrap();
        prop_assert!(new_realization_correction(&shell, m + 1).unwrap() < new_realization_correction(&shell, m).unwrap());
    }

    #[test]
    fn zscore_at_shell_center_is_zero(ds in vec(0.1..10.0f64, 2..20)) {
        let shell = shell_from_distances(&ds).unwrap();
        prop_assume!(shell.var > 0.0);
        prop_assert_eq!(realization_zscore(&shell, shell.mu, true, ds.len() as u64).unwrap().z, 0.0);
    }

    #[test]
    fn clustering_conserves_population_and_stays_in_hull(
        pts in cloud(4),
        kmax in 2..8usize,
        cdist in 0.5..3.0f64,
    ) {
        let n = pts[0].len();
        let mut roles = vec![true; n];
        roles[n - 1] = n == 1;
        let mask = Mask::new(roles).unwrap();
        let mut model = ClusterModel::new(kmax, cdist, mask).unwrap();
        for (i, p) in pts.iter().enumerate() {
            model.ingest(p).unwrap();
            let total: u64 = model.clusters().iter().map(|c| c.population).sum();
            prop_assert_eq!(total, i as u64 + 1);
            prop_assert_eq!(model.kcount(), i as u64 + 1);
            prop_assert!(close(model.dmax(), cdist * model.shelldist(), 1e-12));
            for c in model.clusters() {
                prop_assert!(c.population >= 1 && c.cvar >= 0.0);
                prop_assert!(c.per_dim_var.iter().all(|v| *v >= 0.0));
                for (j, v) in c.centroid.iter().enumerate() {
                    let lo = pts[..=i].iter().map(|p| p[j]).fold(f64::INFINITY, f64::min);
                    let hi = pts[..=i].iter().map(|p| p[j]).fold(f64::NEG_INFINITY, f64::max);
                    prop_assert!(*v >= lo - 1e-10 && *v <= hi + 1e-10);
                }
            }
        }
    }

    #[test]
    fn first_merge_spreads_half_the_squared_gap(
        seeds in vec(vec(-10.0..10.0f64, 3), 3..6),
        dir in vec(-1.0..1.0f64, 3),
        frac in 0.01..0.45f64,
    ) {
        let mask = Mask::new(vec![true, true, false]).unwrap();
        let ones = [1.0; 3];
        let mut gap = f64::INFINITY;
        for (i, a) in seeds.iter().enumerate() {
            for b in &seeds[i + 1..] {
                gap = gap.min(masked_distance(a, b, &mask, &ones).unwrap());
            }
        }
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assume!(gap > 1e-3 && norm > 1e-3);
        let x: Vec<f64> = seeds[0].iter().zip(&dir).map(|(s, d)| s + frac * gap * d / norm).collect();

        let mut model = ClusterModel::new(seeds.len(), 1.5, mask.clone()).unwrap();
        for s in &seeds {
            model.ingest(s).unwrap();
        }
        prop_assert_eq!(model.ingest(&x).unwrap(), IngestOutcome::Merged(0));
        let expected = 0.5 * masked_distance(&seeds[0], &x, &mask, &ones).unwrap().powi(2);
        prop_assert!(close(model.clusters()[0].cvar, expected, 1e-12));
    }

    #[test]
    fn kriging_weights_sum_to_one(
        sites in vec((-10.0..10.0f64, -5.0..5.0f64, 0.0..2.0f64, 1u64..200), 2..10),
        q in -20.0..20.0f64,
    ) {
        let clusters: Vec<Cluster> = sites
            .iter()
            .enumerate()
            .map(|(i, &(w, v, var, p))| Cluster {
                centroid: vec![w + i as f64 * 1e-3, v],
                per_dim_var: vec![0.0, var],
                population: p,
                cvar: 0.0,
            })
            .collect();
        let model = KrigingModel::fit(&clusters, &Mask::new(vec![true, false]).unwrap(), &[1.0, 1.0]).unwrap();
        let sum: f64 = model.weights(&[q]).unwrap().iter().sum();
        prop_assert!((sum - 1.0).abs() <= 1e-10);
        prop_assert!(model.interpolate(&[q]).unwrap().sigma_m >= 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, ..ProptestConfig::default() })]

    #[test]
    fn kriging_ignores_site_order(
        sites in vec((0.0..10.0f64, -5.0..5.0f64, 0.01..2.0f64, 2u64..200), 3..9),
        rot in 1..8usize,
        q in -2.0..12.0f64,
    ) {
        let clusters: Vec<Cluster> = sites
            .iter()
            .enumerate()
            .map(|(i, &(w, v, var, p))| Cluster {
                centroid: vec![w + i as f64 * 1e-2, v],
                per_dim_var: vec![0.0, var],
                population: p,
                cvar: 0.0,
            })
            .collect();
        let mut shuffled = clusters.clone();
        shuffled.rotate_left(rot % clusters.len());
        shuffled.reverse();
        let mask = Mask::new(vec![true, false]).unwrap();
        let a = KrigingModel::fit(&clusters, &mask, &[1.0, 1.0]).unwrap().interpolate(&[q]).unwrap();
        let b = KrigingModel::fit(&shuffled, &mask, &[1.0, 1.0]).unwrap().interpolate(&[q]).unwrap();
        prop_assert!(close(a.estimate[0], b.estimate[0], 1e-10));
        prop_assert!(close(a.sigma_m, b.sigma_m, 1e-10));
    }

    #[test]
    fn ingestion_order_barely_moves_centroids(seed in 0u64..1000, rot in 1..500usize) {
        let spec = hollow::synth::ManifoldSpec::circle(4, 10.0, 0.3, seed);
        let pts: Vec<Vec<f64>> = spec.sampler().unwrap().take(2000).map(|s| s.realization).collect();
        let mut other = pts.clone();
        other.rotate_left(rot);
        other.reverse();
        let mask = Mask::all_independent(4).unwrap();
        let run = |xs: &[Vec<f64>]| {
            let mut m = ClusterModel::new(12, 1.5, mask.clone()).unwrap();
            xs.iter().for_each(|x| { m.ingest(x).unwrap(); });
            m
        };
        let (a, b) = (run(&pts), run(&other));
        let h = hausdorff(a.clusters(), b.clusters(), &mask);
        prop_assert!(h <= 3.0 * a.shelldist().max(b.shelldist()), "hausdorff {} vs shelldist {} / {}", h, a.shelldist(), b.shelldist());
    }
}
