//! Synthetic ground truth: noisy clouds around known manifolds, defect
//! injection and exact chi-distribution moments.
//!
//! Noise is Gaussian, independent per dimension, drawn from a ChaCha8 stream
//! seeded by the spec. Normal variates come from `rand_distr::StandardNormal`
//! (ziggurat method), so a given seed always reproduces the same stream.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Shape of the noise-free response locus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Manifold {
    /// A single response point (L = 0).
    Point,
    /// `origin + sum_l w_l * basis[l]`, with `w_l` uniform in `[-extent, extent]`.
    /// The basis is orthonormal.
    Affine { basis: Vec<Vec<f64>>, extent: f64 },
    /// `origin + radius * (cos t * axes[0] + sin t * axes[1])`, `t` uniform in `[0, 2 pi)`.
    Circle { radius: f64, axes: [Vec<f64>; 2] },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Noise {
    Uniform(f64),
    PerChannel(Vec<f64>),
}

impl Noise {
    fn sd(&self, i: usize) -> f64 {
        match self {
            Noise::Uniform(e) => *e,
            Noise::PerChannel(v) => v[i],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifoldSpec {
    pub manifold: Manifold,
    pub origin: Vec<f64>,
    pub noise: Noise,
    pub seed: u64,
}

/// One generated realization with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    /// Manifold coordinates `w`. A point process carries one uniform nuisance
    /// input in `[0, 1)` that has no effect on the response, so that it can be
    /// fed to a monitor which clusters on independent variables.
    pub operating_point: Vec<f64>,
    pub realization: Vec<f64>,
    pub manifold_point: Vec<f64>,
    /// `|y - x|`, the noise vector length.
    pub noise_norm: f64,
    /// Distance from the realization to the nearest manifold point.
    pub perpendicular: f64,
}

impl ManifoldSpec {
    pub fn point(n: usize, eps0: f64, seed: u64) -> Self {
        ManifoldSpec {
            manifold: Manifold::Point,
            origin: vec![0.0; n],
            noise: Noise::Uniform(eps0),
            seed,
        }
    }

    /// Affine manifold spanned by the first `l` coordinate axes.
    pub fn axis_aligned(n: usize, l: usize, extent: f64, eps0: f64, seed: u64) -> Self {
        let basis = (0..l)
            .map(|i| {
                let mut e = vec![0.0; n];
                e[i] = 1.0;
                e
            })
            .collect();
        ManifoldSpec {
            manifold: Manifold::Affine { basis, extent },
            origin: vec![0.0; n],
            noise: Noise::Uniform(eps0),
            seed,
        }
    }

    /// Line through `origin` along `direction` (normalized here).
    pub fn line(origin: Vec<f64>, direction: Vec<f64>, extent: f64, eps0: f64, seed: u64) -> Result<Self> {
        let basis = orthonormalize(vec![direction])?;
        Ok(ManifoldSpec {
            manifold: Manifold::Affine { basis, extent },
            origin,
            noise: Noise::Uniform(eps0),
            seed,
        })
    }

    /// Circle in the plane of the first two coordinate axes.
    pub fn circle(n: usize, radius: f64, eps0: f64, seed: u64) -> Self {
        let mut u = vec![0.0; n];
        let mut v = vec![0.0; n];
        u[0] = 1.0;
        v[1] = 1.0;
        ManifoldSpec {
            manifold: Manifold::Circle { radius, axes: [u, v] },
            origin: vec![0.0; n],
            noise: Noise::Uniform(eps0),
            seed,
        }
    }

    pub fn with_origin(mut self, origin: Vec<f64>) -> Self {
        self.origin = origin;
        self
    }

    pub fn with_noise(mut self, noise: Noise) -> Self {
        self.noise = noise;
        self
    }

    pub fn ambient(&self) -> usize {
        self.origin.len()
    }

    pub fn manifold_dims(&self) -> usize {
        match &self.manifold {
            Manifold::Point => 0,
            Manifold::Affine { basis, .. } => basis.len(),
            Manifold::Circle { .. } => 1,
        }
    }

    /// Number of operating-point columns a sample carries.
    pub fn input_dims(&self) -> usize {
        self.manifold_dims().max(1)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.ambient();
        let l = self.manifold_dims();
        if n <= l {
            return Err(Error::NoPerpendicularDimensions { n, l });
        }
        match &self.noise {
            Noise::Uniform(e) if !(*e >= 0.0) => return Err(Error::invalid("noise", "must be >= 0")),
            Noise::PerChannel(v) => {
                if v.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, got: v.len() });
                }
                if v.iter().any(|e| !(*e >= 0.0)) {
                    return Err(Error::invalid("noise", "per-channel entries must be >= 0"));
                }
            }
            _ => {}
        }
        match &self.manifold {
            Manifold::Point => {}
            Manifold::Affine { basis, extent } => {
                if basis.iter().any(|b| b.len() != n) {
                    return Err(Error::invalid("basis", "vectors must match the ambient dimension"));
                }
                if !(*extent >= 0.0) {
                    return Err(Error::invalid("extent", "must be >= 0"));
                }
            }
            Manifold::Circle { radius, axes } => {
                if axes.iter().any(|a| a.len() != n) {
                    return Err(Error::invalid("axes", "vectors must match the ambient dimension"));
                }
                if !(*radius > 0.0) {
                    return Err(Error::invalid("radius", "must be positive"));
                }
            }
        }
        Ok(())
    }

    /// Deterministic stream of samples.
    pub fn sampler(&self) -> Result<Sampler<'_>> {
        self.validate()?;
        Ok(Sampler {
            spec: self,
            rng: ChaCha8Rng::seed_from_u64(self.seed),
        })
    }

    /// Nearest point on the manifold and the distance to it.
    pub fn project(&self, y: &[f64]) -> (Vec<f64>, f64) {
        let rel: Vec<f64> = y.iter().zip(&self.origin).map(|(a, o)| a - o).collect();
        match &self.manifold {
            Manifold::Point => (self.origin.clone(), norm(&rel)),
            Manifold::Affine { basis, .. } => {
                let mut foot = self.origin.clone();
                let mut resid = rel.clone();
                for b in basis {
                    let c = dot(&rel, b);
                    for i in 0..resid.len() {
                        resid[i] -= c * b[i];
                        foot[i] += c * b[i];
                    }
                }
                (foot, norm(&resid))
            }
            Manifold::Circle { radius, axes } => {
                let a = dot(&rel, &axes[0]);
                let b = dot(&rel, &axes[1]);
                let rho = (a * a + b * b).sqrt();
                let out_of_plane: f64 = rel
                    .iter()
                    .enumerate()
                    .map(|(i, r)| {
                        let q = r - a * axes[0][i] - b * axes[1][i];
                        q * q
                    })
                    .sum();
                let (ca, sa) = if rho > 0.0 { (a / rho, b / rho) } else { (1.0, 0.0) };
                let foot = (0..rel.len())
                    .map(|i| self.origin[i] + radius * (ca * axes[0][i] + sa * axes[1][i]))
                    .collect();
                let dist = ((rho - radius).powi(2) + out_of_plane).sqrt();
                (foot, dist)
            }
        }
    }

    fn manifold_point(&self, w: &[f64]) -> Vec<f64> {
        let mut x = self.origin.clone();
        match &self.manifold {
            Manifold::Point => {}
            Manifold::Affine { basis, .. } => {
                for (wl, b) in w.iter().zip(basis) {
                    for (xi, bi) in x.iter_mut().zip(b) {
                        *xi += wl * bi;
                    }
                }
            }
            Manifold::Circle { radius, axes } => {
                let (s, c) = w[0].sin_cos();
                for i in 0..x.len() {
                    x[i] += radius * (c * axes[0][i] + s * axes[1][i]);
                }
            }
        }
        x
    }
}

pub struct Sampler<'a> {
    spec: &'a ManifoldSpec,
    rng: ChaCha8Rng,
}

impl Sampler<'_> {
    pub fn next_sample(&mut self) -> Sample {
        let spec = self.spec;
        let w: Vec<f64> = match &spec.manifold {
            Manifold::Point => vec![self.rng.random::<f64>()],
            Manifold::Affine { basis, extent } => basis
                .iter()
                .map(|_| self.rng.random_range(-1.0..=1.0) * extent)
                .collect(),
            Manifold::Circle { .. } => vec![self.rng.random::<f64>() * std::f64::consts::TAU],
        };
        let x = spec.manifold_point(&w);
        let mut y = x.clone();
        for (i, yi) in y.iter_mut().enumerate() {
            let z: f64 = self.rng.sample(StandardNormal);
            *yi += spec.noise.sd(i) * z;
        }
        let noise_norm = y.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let perpendicular = match spec.manifold {
            Manifold::Point => noise_norm,
            _ => spec.project(&y).1,
        };
        Sample {
            operating_point: w,
            realization: y,
            manifold_point: x,
            noise_norm,
            perpendicular,
        }
    }
}

impl Iterator for Sampler<'_> {
    type Item = Sample;

    fn next(&mut self) -> Option<Sample> {
        Some(self.next_sample())
    }
}

pub fn gen_cloud(spec: &ManifoldSpec, m: usize) -> Result<Vec<Sample>> {
    if m == 0 {
        return Err(Error::invalid("m", "must be >= 1"));
    }
    Ok(spec.sampler()?.take(m).collect())
}

/// Mean and variance of `eps0` times a chi variable with `k` degrees of freedom.
///
/// Below 300 degrees of freedom the mean comes from log-gamma and the variance
/// from `k - mean^2`. Above, the variance uses the asymptotic series
/// `1/2 - 1/(8k) - 1/(16k^2) + 5/(128k^3) + 23/(256k^4)` (error below 1e-13)
/// and the mean is `sqrt(k - var)`, which avoids the cancellation.
pub fn chi_moments(k: u64, eps0: f64) -> Result<(f64, f64)> {
    if k < 1 {
        return Err(Error::invalid("k", "degrees of freedom must be >= 1"));
    }
    let kf = k as f64;
    let (mean, var) = if k > 300 {
        let var = 0.5 - 1.0 / (8.0 * kf) - 1.0 / (16.0 * kf * kf)
            + 5.0 / (128.0 * kf.powi(3))
            + 23.0 / (256.0 * kf.powi(4));
        ((kf - var).sqrt(), var)
    } else {
        let mean = std::f64::consts::SQRT_2 * (ln_gamma((kf + 1.0) / 2.0) - ln_gamma(kf / 2.0)).exp();
        (mean, kf - mean * mean)
    };
    Ok((eps0 * mean, eps0 * eps0 * var))
}

/// Adds `offset` to the listed dimensions of every realization from
/// `from_index` onward. An index past the end leaves the stream unchanged.
pub fn inject_defect(realizations: &mut [Vec<f64>], dims: &[usize], offset: f64, from_index: usize) -> Result<()> {
    if dims.is_empty() {
        return Err(Error::invalid("dims", "defect needs at least one dimension"));
    }
    for r in realizations.iter_mut().skip(from_index) {
        for &d in dims {
            let len = r.len();
            *r.get_mut(d).ok_or(Error::DimensionMismatch { expected: len, got: d + 1 })? += offset;
        }
    }
    Ok(())
}

/// Distances between pairs of realizations drawn at the same manifold point.
pub fn pair_distances(n: usize, eps0: f64, pairs: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..pairs)
        .map(|_| {
            (0..n)
                .map(|_| {
                    let a: f64 = rng.sample(StandardNormal);
                    let b: f64 = rng.sample(StandardNormal);
                    let d = eps0 * (a - b);
                    d * d
                })
                .sum::<f64>()
                .sqrt()
        })
        .collect()
}

fn orthonormalize(vectors: Vec<Vec<f64>>) -> Result<Vec<Vec<f64>>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(vectors.len());
    for mut v in vectors {
        for b in &out {
            let c = dot(&v, b);
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
        }
        let n = norm(&v);
        if !(n > 1e-12) {
            return Err(Error::invalid("basis", "vectors must be linearly independent"));
        }
        v.iter_mut().for_each(|x| *x /= n);
        out.push(v);
    }
    Ok(out)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
