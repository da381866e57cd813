//! Dynamic online clustering of realizations along the response manifold.
//!
//! The model holds at most `kmax` clusters. The first `kmax` realizations seed
//! them; afterwards each realization is merged into its nearest cluster
//! (distance over independent dimensions only) unless it lies farther than
//! `dmax = cdist * shelldist`. In that case the closest pair of clusters is
//! searched and, if that pair is closer than the realization, it is fused and
//! the freed slot is re-seeded with the realization.
//!
//! Centroids are kept in raw units; per-dimension scales only enter the
//! distance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-dimension role: `true` for independent (used in distances), `false`
/// for dependent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<bool>", into = "Vec<bool>")]
pub struct Mask {
    roles: Vec<bool>,
}

impl Mask {
    pub fn new(roles: Vec<bool>) -> Result<Self> {
        if !roles.iter().any(|&r| r) {
            return Err(Error::invalid("mask", "at least one dimension must be independent"));
        }
        Ok(Mask { roles })
    }

    pub fn all_independent(len: usize) -> Result<Self> {
        Mask::new(vec![true; len])
    }

    pub fn len(&self) -> usize {
        self.roles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roles.is_empty()
    }

    pub fn is_independent(&self, i: usize) -> bool {
        self.roles[i]
    }

    pub fn roles(&self) -> &[bool] {
        &self.roles
    }

    pub fn independent(&self) -> impl Iterator<Item = usize> + '_ {
        self.roles.iter().enumerate().filter(|(_, r)| **r).map(|(i, _)| i)
    }

    pub fn dependent(&self) -> impl Iterator<Item = usize> + '_ {
        self.roles.iter().enumerate().filter(|(_, r)| !**r).map(|(i, _)| i)
    }
}

impl TryFrom<Vec<bool>> for Mask {
    type Error = Error;

    fn try_from(roles: Vec<bool>) -> Result<Self> {
        Mask::new(roles)
    }
}

impl From<Mask> for Vec<bool> {
    fn from(m: Mask) -> Self {
        m.roles
    }
}

/// Euclidean distance over the masked (independent) dimensions, each
/// difference divided by its scale.
pub fn masked_distance(a: &[f64], b: &[f64], mask: &Mask, scales: &[f64]) -> Result<f64> {
    for len in [b.len(), mask.len(), scales.len()] {
        if len != a.len() {
            return Err(Error::DimensionMismatch { expected: a.len(), got: len });
        }
    }
    Ok(masked_sq(a, b, mask, scales).sqrt())
}

fn masked_sq(a: &[f64], b: &[f64], mask: &Mask, scales: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        if mask.roles[i] {
            let t = (a[i] - b[i]) / scales[i];
            s += t * t;
        }
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub centroid: Vec<f64>,
    pub per_dim_var: Vec<f64>,
    pub population: u64,
    /// Mean squared masked distance of members to the centroid.
    pub cvar: f64,
}

impl Cluster {
    fn seed(x: &[f64]) -> Self {
        Cluster {
            centroid: x.to_vec(),
            per_dim_var: vec![0.0; x.len()],
            population: 1,
            cvar: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IngestOutcome {
    /// Stored as a new cluster at this index.
    Seeded(usize),
    /// Merged into the cluster at this index.
    Merged(usize),
    /// Cluster `fused` was folded into `retained`; slot `fused` now holds the
    /// realization alone.
    Fused { fused: usize, retained: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    clusters: Vec<Cluster>,
    kmax: usize,
    cdist: f64,
    mask: Mask,
    shelldist: f64,
    dmax: f64,
    kcount: u64,
    fusion_search_count: u64,
}

impl ClusterModel {
    pub fn new(kmax: usize, cdist: f64, mask: Mask) -> Result<Self> {
        if kmax < 2 {
            return Err(Error::invalid("kmax", "must be at least 2"));
        }
        if !(cdist > 0.0) || !cdist.is_finite() {
            return Err(Error::invalid("cdist", "must be positive"));
        }
        Ok(ClusterModel {
            clusters: Vec::with_capacity(kmax),
            kmax,
            cdist,
            mask,
            shelldist: 0.0,
            dmax: 0.0,
            kcount: 0,
            fusion_search_count: 0,
        })
    }

    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    pub fn kmax(&self) -> usize {
        self.kmax
    }

    pub fn cdist(&self) -> f64 {
        self.cdist
    }

    pub fn mask(&self) -> &Mask {
        &self.mask
    }

    pub fn shelldist(&self) -> f64 {
        self.shelldist
    }

    pub fn dmax(&self) -> f64 {
        self.dmax
    }

    /// Realizations ingested so far.
    pub fn kcount(&self) -> u64 {
        self.kcount
    }

    /// Number of cluster-to-cluster distance matrix evaluations.
    pub fn fusion_search_count(&self) -> u64 {
        self.fusion_search_count
    }

    pub fn dims(&self) -> usize {
        self.mask.len()
    }

    /// Ingest with unit scales.
    pub fn ingest(&mut self, x: &[f64]) -> Result<IngestOutcome> {
        let scales = vec![1.0; self.dims()];
        self.ingest_scaled(x, &scales)
    }

    pub fn ingest_scaled(&mut self, x: &[f64], scales: &[f64]) -> Result<IngestOutcome> {
        let n = self.dims();
        for len in [x.len(), scales.len()] {
            if len != n {
                return Err(Error::DimensionMismatch { expected: n, got: len });
            }
        }
        self.kcount += 1;

        let outcome = if self.clusters.len() < self.kmax {
            self.clusters.push(Cluster::seed(x));
            IngestOutcome::Seeded(self.clusters.len() - 1)
        } else {
            let (nearest, sdr) = self.nearest(x, scales);
            if sdr > self.dmax {
                let (j, k, sdcc) = self.min_pair_scaled(scales)?;
                self.fusion_search_count += 1;
                if sdr > sdcc {
                    self.fuse(j, k, scales);
                    self.clusters[j] = Cluster::seed(x);
                    IngestOutcome::Fused { fused: j, retained: k }
                } else {
                    self.merge(nearest, x, sdr);
                    IngestOutcome::Merged(nearest)
                }
            } else {
                self.merge(nearest, x, sdr);
                IngestOutcome::Merged(nearest)
            }
        };

        let (num, den) = self
            .clusters
            .iter()
            .fold((0.0, 0.0), |(n, d), c| (n + c.population as f64 * c.cvar, d + c.population as f64));
        self.shelldist = (num / den).sqrt();
        self.dmax = self.cdist * self.shelldist;
        Ok(outcome)
    }

    /// Nearest cluster and its masked distance; the lowest index wins ties.
    fn nearest(&self, x: &[f64], scales: &[f64]) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (k, c) in self.clusters.iter().enumerate() {
            let d = masked_sq(&c.centroid, x, &self.mask, scales);
            if d < best.1 {
                best = (k, d);
            }
        }
        (best.0, best.1.sqrt())
    }

    /// Closest pair of centroids `(j, k)` with `j < k`, unit scales.
    pub fn min_pair_distance(&self) -> Result<(usize, usize, f64)> {
        let scales = vec![1.0; self.dims()];
        self.min_pair_scaled(&scales)
    }

    /// Closest pair of centroids `(j, k)` with `j < k`; ties go to the
    /// lexicographically smallest pair.
    pub fn min_pair_scaled(&self, scales: &[f64]) -> Result<(usize, usize, f64)> {
        if self.clusters.len() < 2 {
            return Err(Error::TooFewClusters(self.clusters.len()));
        }
        let mut best = (0, 1, f64::INFINITY);
        for j in 0..self.clusters.len() {
            for k in (j + 1)..self.clusters.len() {
                let d = masked_sq(&self.clusters[j].centroid, &self.clusters[k].centroid, &self.mask, scales);
                if d < best.2 {
                    best = (j, k, d);
                }
            }
        }
        Ok((best.0, best.1, best.2.sqrt()))
    }

    fn merge(&mut self, k: usize, x: &[f64], sdr: f64) {
        let c = &mut self.clusters[k];
        let p = c.population as f64;
        for ((m, v), xi) in c.centroid.iter_mut().zip(c.per_dim_var.iter_mut()).zip(x) {
            *m = (xi + p * *m) / (p + 1.0);
            // deviation from the updated centroid
            let dev = *m - xi;
            *v = (dev * dev + p * *v) / (p + 1.0);
        }
        c.cvar = (p * c.cvar + sdr * sdr) / (p + 1.0);
        c.population += 1;
    }

    fn fuse(&mut self, j: usize, k: usize, scales: &[f64]) {
        let (cj, ck) = (&self.clusters[j], &self.clusters[k]);
        let (pj, pk) = (cj.population as f64, ck.population as f64);
        let total = pj + pk;
        let fused: Vec<f64> = cj
            .centroid
            .iter()
            .zip(&ck.centroid)
            .map(|(a, b)| (pj * a + pk * b) / total)
            .collect();
        let var: Vec<f64> = cj
            .per_dim_var
            .iter()
            .zip(&ck.per_dim_var)
            .map(|(a, b)| (pj * a + pk * b) / total)
            .collect();
        let cvar = (pj * (cj.cvar + masked_sq(&cj.centroid, &fused, &self.mask, scales))
            + pk * (ck.cvar + masked_sq(&ck.centroid, &fused, &self.mask, scales)))
            / total;
        self.clusters[k] = Cluster {
            centroid: fused,
            per_dim_var: var,
            population: cj.population + ck.population,
            cvar,
        };
    }
}

/// Mean and variance of the dependent dimensions of a cluster.
pub fn cluster_dependent_stats(cluster: &Cluster, mask: &Mask) -> (Vec<f64>, Vec<f64>) {
    mask.dependent()
        .map(|i| (cluster.centroid[i], cluster.per_dim_var[i]))
        .unzip()
}
