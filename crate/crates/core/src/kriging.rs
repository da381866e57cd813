//! Ordinary kriging of cluster means over the independent coordinates.
//!
//! All dependent channels share one Gaussian variogram shape, fitted on
//! standardized cluster means, so one set of weights serves every channel.
//! Each site carries a nugget equal to the standard error of its cluster mean
//! (mean dependent variance over population), which makes high-population
//! sites nearly exact.
//!
//! Weights come from the system
//!
//! ```text
//! [ S c1 P + diag(tau)  1 ] [lambda]   [ S c1 p0 ]
//! [ 1^T                 0 ] [  mu  ] = [    1    ]
//! ```
//!
//! with `P_ab = exp(-h_ab^2 / a^2)` and `S` the mean per-channel spread of the
//! site values. The error variance of channel `j` is then evaluated with its
//! own spread `S_j` and its own site errors.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::clustering::{Cluster, Mask};
use crate::error::{Error, Result};

const VARIOGRAM_BINS: usize = 12;
const MIN_FIT_BINS: usize = 4;

/// `gamma(h) = nugget + sill * (1 - exp(-h^2 / range^2))`, in standardized units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Variogram {
    pub nugget: f64,
    pub sill: f64,
    pub range: f64,
}

impl Variogram {
    pub fn gamma(&self, h: f64) -> f64 {
        if h == 0.0 {
            return 0.0;
        }
        self.nugget + self.sill * (1.0 - self.correlation(h))
    }

    pub fn correlation(&self, h: f64) -> f64 {
        (-(h * h) / (self.range * self.range)).exp()
    }
}

/// Fitted state, as stored in model files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KrigingData {
    /// Independent coordinates of each site, raw units.
    pub sites: Vec<Vec<f64>>,
    /// Scales applied to independent coordinate differences.
    pub scales: Vec<f64>,
    /// Dependent means of each site, raw units.
    pub values: Vec<Vec<f64>>,
    /// Scalar nugget of each site in normalized units.
    pub site_nuggets: Vec<f64>,
    /// Per-channel error variance of each site mean, raw units.
    pub site_errors: Vec<Vec<f64>>,
    /// Per-channel variance of the site values, raw units.
    pub channel_spread: Vec<f64>,
    /// Mean normalized channel spread.
    pub pooled_spread: f64,
    pub variogram: Variogram,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterpolationResult {
    pub estimate: Vec<f64>,
    /// Error variance of each estimated channel.
    pub per_dim_var: Vec<f64>,
    /// Length of the estimation error vector.
    pub sigma_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KrigingData", into = "KrigingData")]
pub struct KrigingModel {
    data: KrigingData,
    inverse: DMatrix<f64>,
}

impl TryFrom<KrigingData> for KrigingModel {
    type Error = Error;

    fn try_from(data: KrigingData) -> Result<Self> {
        KrigingModel::from_data(data)
    }
}

impl From<KrigingModel> for KrigingData {
    fn from(m: KrigingModel) -> Self {
        m.data
    }
}

impl KrigingModel {
    /// Fits a model on cluster means. `scales` covers all dimensions of the
    /// clusters; independent ones shape distances, dependent ones normalize
    /// the nugget and spread used for the weights.
    pub fn fit(clusters: &[Cluster], mask: &Mask, scales: &[f64]) -> Result<Self> {
        if clusters.len() < 2 {
            return Err(Error::TooFewClusters(clusters.len()));
        }
        let dims = mask.len();
        if scales.len() != dims {
            return Err(Error::DimensionMismatch { expected: dims, got: scales.len() });
        }
        if let Some(c) = clusters.iter().find(|c| c.centroid.len() != dims) {
            return Err(Error::DimensionMismatch { expected: dims, got: c.centroid.len() });
        }
        let indep: Vec<usize> = mask.independent().collect();
        let dep: Vec<usize> = mask.dependent().collect();
        // fixed site order, so rounding and the fitted variogram do not
        // depend on where clustering happened to put each cluster
        let mut clusters: Vec<&Cluster> = clusters.iter().collect();
        clusters.sort_by(|a, b| {
            lexical(&a.centroid, &b.centroid)
                .then(a.population.cmp(&b.population))
                .then_with(|| lexical(&a.per_dim_var, &b.per_dim_var))
        });

        let sites: Vec<Vec<f64>> = clusters
            .iter()
            .map(|c| indep.iter().map(|&i| c.centroid[i]).collect())
            .collect();
        let site_scales: Vec<f64> = indep.iter().map(|&i| scales[i]).collect();
        let values: Vec<Vec<f64>> = clusters
            .iter()
            .map(|c| dep.iter().map(|&i| c.centroid[i]).collect())
            .collect();
        // a singleton has no spread of its own; it borrows the pooled one
        let pooled_var: Vec<f64> = {
            let grown: Vec<&Cluster> = clusters.iter().copied().filter(|c| c.population >= 2).collect();
            let total: u64 = grown.iter().map(|c| c.population).sum();
            dep.iter()
                .map(|&i| {
                    if total == 0 {
                        return 0.0;
                    }
                    grown.iter().map(|c| c.population as f64 * c.per_dim_var[i]).sum::<f64>() / total as f64
                })
                .collect()
        };
        let site_errors: Vec<Vec<f64>> = clusters
            .iter()
            .map(|c| {
                dep.iter()
                    .enumerate()
                    .map(|(j, &i)| {
                        let v = if c.population >= 2 { c.per_dim_var[i] } else { pooled_var[j] };
                        v / c.population as f64
                    })
                    .collect()
            })
            .collect();
        let site_nuggets: Vec<f64> = site_errors
            .iter()
            .map(|e| {
                if dep.is_empty() {
                    return 0.0;
                }
                let v: f64 = dep.iter().enumerate().map(|(j, &i)| e[j] / (scales[i] * scales[i])).sum();
                v / dep.len() as f64
            })
            .collect();

        let n = sites.len();
        let pooled_nugget = site_nuggets.iter().sum::<f64>() / n as f64;
        let mut h = vec![0.0; n * n];
        let mut hmax: f64 = 0.0;
        for a in 0..n {
            for b in (a + 1)..n {
                let d = scaled_distance(&sites[a], &sites[b], &site_scales);
                h[a * n + b] = d;
                h[b * n + a] = d;
                hmax = hmax.max(d);
            }
        }
        if !(hmax > 0.0) {
            return Err(Error::NoSpatialSpread);
        }

        // per-channel spread of the site values
        let nf = n as f64;
        let mut means = vec![0.0; dep.len()];
        let mut channel_spread = vec![0.0; dep.len()];
        for (j, m) in means.iter_mut().enumerate() {
            *m = values.iter().map(|v| v[j]).sum::<f64>() / nf;
            let s = values.iter().map(|v| (v[j] - *m).powi(2)).sum::<f64>() / nf;
            let magnitude = values.iter().map(|v| v[j].abs()).fold(0.0, f64::max);
            channel_spread[j] = if s > (1e-12 * magnitude).powi(2) { s } else { 0.0 };
        }
        let varying: Vec<usize> = (0..dep.len()).filter(|&j| channel_spread[j] > 0.0).collect();
        let pooled_spread = if dep.is_empty() {
            0.0
        } else {
            dep.iter()
                .enumerate()
                .map(|(j, &i)| channel_spread[j] / (scales[i] * scales[i]))
                .sum::<f64>()
                / dep.len() as f64
        };
        let variogram = if varying.is_empty() {
            Variogram { nugget: 0.0, sill: 0.0, range: 0.5 * hmax }
        } else {
            let z: Vec<Vec<f64>> = values
                .iter()
                .map(|v| varying.iter().map(|&j| (v[j] - means[j]) / channel_spread[j].sqrt()).collect())
                .collect();
            // (distance, semivariance, semivariance less the site-mean errors)
            let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
            for a in 0..n {
                for b in (a + 1)..n {
                    let (mut g, mut err) = (0.0, 0.0);
                    for (k, &j) in varying.iter().enumerate() {
                        g += (z[a][k] - z[b][k]).powi(2);
                        err += (site_errors[a][j] + site_errors[b][j]) / channel_spread[j];
                    }
                    let scale = 2.0 * varying.len() as f64;
                    pairs.push((h[a * n + b], g / scale, (g - err) / scale));
                }
            }
            fit_variogram(&pairs, hmax, pooled_nugget / pooled_spread)
        };

        KrigingModel::from_data(KrigingData {
            sites,
            scales: site_scales,
            values,
            site_nuggets,
            site_errors,
            channel_spread,
            pooled_spread,
            variogram,
        })
    }

    fn from_data(data: KrigingData) -> Result<Self> {
        let n = data.sites.len();
        if n < 2 {
            return Err(Error::TooFewClusters(n));
        }
        let consistent = data.values.len() == n
            && data.site_nuggets.len() == n
            && data.site_errors.len() == n
            && data.sites.iter().all(|s| s.len() == data.scales.len())
            && data.values.iter().all(|v| v.len() == data.channel_spread.len())
            && data.site_errors.iter().all(|v| v.len() == data.channel_spread.len());
        if !consistent {
            return Err(Error::CorruptModel("kriging arrays disagree in size".into()));
        }
        if !(data.variogram.range > 0.0) || data.variogram.sill < 0.0 || data.variogram.nugget < 0.0 {
            return Err(Error::CorruptModel("invalid variogram parameters".into()));
        }

        let signal = data.pooled_spread * data.variogram.sill;
        let noise_scale = data.site_nuggets.iter().cloned().fold(0.0, f64::max);
        for a in 0..n {
            for b in (a + 1)..n {
                let dup = scaled_distance(&data.sites[a], &data.sites[b], &data.scales) == 0.0;
                if dup && data.site_nuggets[a] == 0.0 && data.site_nuggets[b] == 0.0 && signal > 0.0 {
                    return Err(Error::DegenerateSiteGeometry);
                }
            }
        }
        let jitter = if signal + noise_scale > 0.0 {
            1e-12 * (signal + noise_scale)
        } else {
            1.0
        };

        let mut k = DMatrix::<f64>::zeros(n + 1, n + 1);
        for a in 0..n {
            for b in 0..n {
                let hab = scaled_distance(&data.sites[a], &data.sites[b], &data.scales);
                k[(a, b)] = signal * data.variogram.correlation(hab);
            }
            k[(a, a)] += data.site_nuggets[a] + jitter;
            k[(a, n)] = 1.0;
            k[(n, a)] = 1.0;
        }
        let lu = k.lu();
        let u = lu.u();
        let diag: Vec<f64> = u.diagonal().iter().map(|x| x.abs()).collect();
        let dmax = diag.iter().cloned().fold(0.0, f64::max);
        let dmin = diag.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(dmin > 1e-15 * dmax) {
            return Err(Error::DegenerateSiteGeometry);
        }
        let inverse = lu.try_inverse().ok_or(Error::DegenerateSiteGeometry)?;
        if inverse.iter().any(|x| !x.is_finite()) {
            return Err(Error::DegenerateSiteGeometry);
        }
        Ok(KrigingModel { data, inverse })
    }

    pub fn data(&self) -> &KrigingData {
        &self.data
    }

    pub fn variogram(&self) -> Variogram {
        self.data.variogram
    }

    pub fn site_count(&self) -> usize {
        self.data.sites.len()
    }

    /// Number of independent coordinates a query takes.
    pub fn input_dims(&self) -> usize {
        self.data.scales.len()
    }

    pub fn output_dims(&self) -> usize {
        self.data.channel_spread.len()
    }

    /// Kriging weights at `w` (they sum to one).
    pub fn weights(&self, w: &[f64]) -> Result<Vec<f64>> {
        Ok(self.solve(w)?.0)
    }

    fn solve(&self, w: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        if w.len() != self.input_dims() {
            return Err(Error::DimensionMismatch { expected: self.input_dims(), got: w.len() });
        }
        if let Some(i) = w.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        let n = self.site_count();
        let signal = self.data.pooled_spread * self.data.variogram.sill;
        let rho0: Vec<f64> = self
            .data
            .sites
            .iter()
            .map(|s| self.data.variogram.correlation(scaled_distance(s, w, &self.data.scales)))
            .collect();
        let mut rhs = DVector::<f64>::zeros(n + 1);
        for a in 0..n {
            rhs[a] = signal * rho0[a];
        }
        rhs[n] = 1.0;
        let sol = &self.inverse * rhs;
        let mut lambda: Vec<f64> = sol.iter().take(n).cloned().collect();
        // restore the unbiasedness constraint lost to rounding
        let excess = (lambda.iter().sum::<f64>() - 1.0) / n as f64;
        lambda.iter_mut().for_each(|l| *l -= excess);
        Ok((lambda, rho0))
    }

    pub fn interpolate(&self, w: &[f64]) -> Result<InterpolationResult> {
        let (lambda, rho0) = self.solve(w)?;
        let d = &self.data;
        let n = lambda.len();
        let outputs = self.output_dims();

        let mut estimate = vec![0.0; outputs];
        let mut nugget_part = vec![0.0; outputs];
        for (a, &l) in lambda.iter().enumerate() {
            for j in 0..outputs {
                estimate[j] += l * d.values[a][j];
                nugget_part[j] += l * l * d.site_errors[a][j];
            }
        }

        let mut quad = 0.0;
        for a in 0..n {
            for b in 0..n {
                let hab = scaled_distance(&d.sites[a], &d.sites[b], &d.scales);
                quad += lambda[a] * lambda[b] * d.variogram.correlation(hab);
            }
        }
        let cross: f64 = lambda.iter().zip(&rho0).map(|(l, r)| l * r).sum();
        let structural = (d.variogram.sill * (quad - 2.0 * cross + 1.0)).max(0.0);

        let per_dim_var: Vec<f64> = (0..outputs)
            .map(|j| d.channel_spread[j] * structural + nugget_part[j])
            .collect();
        let sigma_m = per_dim_var.iter().sum::<f64>().sqrt();
        Ok(InterpolationResult { estimate, per_dim_var, sigma_m })
    }
}

fn scaled_distance(a: &[f64], b: &[f64], scales: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .zip(scales)
        .map(|((x, y), s)| ((x - y) / s).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Gaussian variogram from `(distance, semivariance, net semivariance)` pairs.
///
/// The least-squares fit runs on binned net semivariances, so that spread
/// already explained by the error of each site mean is not counted again as
/// structure, and searches the range up to the largest site distance. With
/// fewer than four populated bins it falls back to the pooled nugget, the
/// mean semivariance and half the largest site distance.
fn fit_variogram(pairs: &[(f64, f64, f64)], hmax: f64, pooled_nugget: f64) -> Variogram {
    let width = hmax / VARIOGRAM_BINS as f64;
    let mut bins = vec![(0.0, 0.0, 0usize); VARIOGRAM_BINS];
    for &(h, _, g) in pairs {
        let i = ((h / width) as usize).min(VARIOGRAM_BINS - 1);
        bins[i].0 += h;
        bins[i].1 += g;
        bins[i].2 += 1;
    }
    let bins: Vec<(f64, f64, f64)> = bins
        .into_iter()
        .filter(|b| b.2 > 0)
        .map(|(h, g, c)| (h / c as f64, g / c as f64, c as f64))
        .collect();

    if bins.len() < MIN_FIT_BINS {
        let mean = pairs.iter().map(|p| p.1).sum::<f64>() / pairs.len() as f64;
        return Variogram { nugget: pooled_nugget, sill: mean.max(0.0), range: 0.5 * hmax };
    }

    let hmin = bins.iter().map(|b| b.0).fold(f64::INFINITY, f64::min).max(1e-6 * hmax);
    let (lo, hi) = ((0.25 * hmin).ln(), hmax.ln());
    let steps = 80;
    let mut best = (f64::INFINITY, 0.0, Variogram { nugget: 0.0, sill: 0.0, range: hmax });
    for s in 0..=steps {
        let t = lo + (hi - lo) * s as f64 / steps as f64;
        let (sse, v) = fit_at_range(&bins, t.exp());
        if sse < best.0 {
            best = (sse, t, v);
        }
    }
    // golden-section refinement in log-range around the best grid point
    let step = (hi - lo) / steps as f64;
    let (mut a, mut b) = ((best.1 - step).max(lo), (best.1 + step).min(hi));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if fit_at_range(&bins, c.exp()).0 < fit_at_range(&bins, d.exp()).0 {
            b = d;
        } else {
            a = c;
        }
    }
    let (sse, v) = fit_at_range(&bins, (0.5 * (a + b)).exp());
    if sse < best.0 {
        v
    } else {
        best.2
    }
}

/// Non-negative weighted least squares for nugget and sill at a fixed range.
fn fit_at_range(bins: &[(f64, f64, f64)], range: f64) -> (f64, Variogram) {
    let shape = |h: f64| 1.0 - (-(h * h) / (range * range)).exp();
    let (mut sw, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(h, g, w) in bins {
        let x = shape(h);
        sw += w;
        sx += w * x;
        sy += w * g;
        sxx += w * x * x;
        sxy += w * x * g;
    }
    let det = sw * sxx - sx * sx;
    let (mut c0, mut c1) = if det.abs() > 1e-14 * sw * sxx.max(1e-300) {
        ((sy * sxx - sx * sxy) / det, (sw * sxy - sx * sy) / det)
    } else {
        (sy / sw, 0.0)
    };
    if c0 < 0.0 {
        c0 = 0.0;
        c1 = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    }
    if c1 < 0.0 {
        c1 = 0.0;
        c0 = (sy / sw).max(0.0);
    }
    let sse = bins
        .iter()
        .map(|&(h, g, w)| w * (g - c0 - c1 * shape(h)).powi(2))
        .sum();
    (sse, Variogram { nugget: c0, sill: c1, range })
}

fn lexical(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}
