//! Shell statistics for point clusters and manifold shells.
//!
//! A cloud of noisy realizations of the same response concentrates on a thin
//! shell at a nearly fixed distance from the noise-free point (or manifold).
//! This module estimates that shell empirically (mean distance and its
//! variance, population divisors) and exposes the closed-form approximations
//! next to the exact chi-distribution moments so callers can compare them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::synth::chi_moments;

/// Incremental estimate of a distance stream: shell radius `mu`, shell
/// hardness `var` and the weight they were accumulated with.
///
/// `weight` is an integer count for batch estimates and an accumulated
/// smoothing weight for exponentially weighted ones. A frozen estimate
/// ignores every further observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShellEstimate {
    pub mu: f64,
    pub var: f64,
    pub weight: f64,
    pub frozen: bool,
}

impl Default for ShellEstimate {
    fn default() -> Self {
        Self::new()
    }
}

impl ShellEstimate {
    pub fn new() -> Self {
        ShellEstimate {
            mu: 0.0,
            var: 0.0,
            weight: 0.0,
            frozen: false,
        }
    }

    /// Half-thickness of the shell.
    pub fn sd(&self) -> f64 {
        self.var.sqrt()
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    /// Batch update with one distance. The variance is updated first, against
    /// the mean available before this observation, then the mean. Returns
    /// `false` when the estimate is frozen and nothing changed.
    pub fn push(&mut self, d: f64) -> bool {
        if self.frozen {
            return false;
        }
        let m = self.weight;
        if m >= 1.0 {
            let dev = d - self.mu;
            self.var = (dev * dev + (m - 1.0) * self.var) / m;
        }
        self.mu = (d + m * self.mu) / (m + 1.0);
        self.weight = m + 1.0;
        true
    }
}

/// Closed-form and exact moments of the realization-to-manifold distance for
/// isotropic Gaussian noise of standard deviation `eps0` per dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoreticalShell {
    pub n: usize,
    pub l: usize,
    pub eps0: f64,
    /// `eps0 * sqrt(N)`: mean distance to a single noise-free point.
    pub mu_point: f64,
    /// `eps0 * sqrt(N - L)`.
    pub mu_closed: f64,
    /// `eps0^2 * N / (2 (N - L))`.
    pub var_closed: f64,
    /// Mean of a chi distribution with `N - L` degrees of freedom, times `eps0`.
    pub mu_exact: f64,
    /// Variance of the same chi distribution, times `eps0^2`.
    pub var_exact: f64,
}

/// Centroid and shell of a single point cluster. Variances use the
/// population divisor `M`.
pub fn estimate_point_shell<V: AsRef<[f64]>>(realizations: &[V]) -> Result<(Vec<f64>, ShellEstimate)> {
    let first = realizations.first().ok_or(Error::NoRealizations)?.as_ref();
    let n = first.len();
    let mut centroid = vec![0.0; n];
    for r in realizations {
        let r = r.as_ref();
        if r.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: r.len(),
            });
        }
        for (i, (c, v)) in centroid.iter_mut().zip(r).enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite(i));
            }
            *c += v;
        }
    }
    let m = realizations.len() as f64;
    centroid.iter_mut().for_each(|c| *c /= m);

    let distances: Vec<f64> = realizations
        .iter()
        .map(|r| euclidean(r.as_ref(), &centroid))
        .collect();
    let shell = shell_from_distances(&distances)?;
    Ok((centroid, shell))
}

/// Shell of a set of realization-to-manifold distances: mean and population
/// variance.
pub fn shell_from_distances(distances: &[f64]) -> Result<ShellEstimate> {
    if distances.is_empty() {
        return Err(Error::NoRealizations);
    }
    if let Some(i) = distances.iter().position(|d| !d.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    let m = distances.len() as f64;
    let mu = distances.iter().sum::<f64>() / m;
    let var = distances.iter().map(|d| (d - mu) * (d - mu)).sum::<f64>() / m;
    Ok(ShellEstimate {
        mu,
        var,
        weight: m,
        frozen: false,
    })
}

/// Extra distance a new realization carries because it did not take part in
/// the centroid estimate built from `m` realizations.
pub fn new_realization_correction(shell: &ShellEstimate, m: u64) -> Result<f64> {
    if m < 2 {
        return Err(Error::UndefinedCorrection(m));
    }
    let m = m as f64;
    Ok(shell.mu * (1.0 / (m * (m - 1.0))).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZScore {
    pub z: f64,
    /// Normal density of the distance under the shell model.
    pub density: f64,
}

/// Standardized position of a distance `d` relative to the shell. Realizations
/// outside the training set are shifted by [`new_realization_correction`].
pub fn realization_zscore(shell: &ShellEstimate, d: f64, in_training: bool, m: u64) -> Result<ZScore> {
    if shell.var <= 0.0 {
        return Err(Error::DegenerateShell);
    }
    let sd = shell.sd();
    let center = if in_training {
        shell.mu
    } else {
        shell.mu + new_realization_correction(shell, m)?
    };
    let z = (d - center) / sd;
    let density = (-0.5 * z * z).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt());
    Ok(ZScore { z, density })
}

pub fn theoretical_shell(n: usize, l: usize, eps0: f64) -> Result<TheoreticalShell> {
    if n <= l {
        return Err(Error::NoPerpendicularDimensions { n, l });
    }
    if !(eps0 > 0.0) {
        return Err(Error::invalid("eps0", "must be positive"));
    }
    let k = n - l;
    let (mu_exact, var_exact) = chi_moments(k as u64, eps0)?;
    Ok(TheoreticalShell {
        n,
        l,
        eps0,
        mu_point: eps0 * (n as f64).sqrt(),
        mu_closed: eps0 * (k as f64).sqrt(),
        var_closed: eps0 * eps0 * n as f64 / (2.0 * k as f64),
        mu_exact,
        var_exact,
    })
}

/// Large-`N` approximation of the mean distance between two realizations at
/// the same manifold location: `eps0 * sqrt(2N)`.
pub fn expected_pair_distance(n: usize, l: usize, eps0: f64) -> Result<f64> {
    if n <= l {
        return Err(Error::NoPerpendicularDimensions { n, l });
    }
    Ok(eps0 * (2.0 * n as f64).sqrt())
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
