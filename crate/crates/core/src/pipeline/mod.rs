//! End-to-end shell monitoring of a repeatable multichannel process.
//!
//! Each realization is normalized, clustered on its independent variables and
//! compared with the manifold reference kriged at the same operating point.
//! The realization-to-reference distance feeds a fast comparator (abrupt
//! defects). After warm-up, the initial average response is frozen and
//! compared with the exponentially averaged current response (slow trends).

mod io;
mod normalize;

use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::clustering::{ClusterModel, Mask};
use crate::comparator::{Comparator, Smoothing, DEFAULT_THRESHOLD_K};
use crate::error::{Error, Result};
use crate::kriging::KrigingModel;

pub use io::{read_roles, AlarmWriter, CsvLayout, RealizationReader, Role, Roles};
pub use normalize::Normalizer;

/// Version written into and required from model files.
pub const SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorConfig {
    pub threshold_k: f64,
    /// Realizations forming the initial history.
    pub warmup: u64,
    /// Smoothing factor of the actualized average response.
    pub alpha: f64,
    /// Smoothing factor of the fast comparator shell.
    pub fast_alpha: f64,
    /// Ingests between kriging refits.
    pub refit_interval: u64,
    pub kmax: usize,
    pub cdist: f64,
    /// Trend comparisons used to learn the trend shell before it is frozen.
    pub trend_training: u64,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        MonitorConfig {
            threshold_k: DEFAULT_THRESHOLD_K,
            warmup: 500,
            alpha: 0.01,
            fast_alpha: 0.005,
            refit_interval: 100,
            kmax: 20,
            cdist: 1.5,
            trend_training: 500,
        }
    }
}

impl MonitorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold_k > 0.0) {
            return Err(Error::invalid("threshold_k", "must be positive"));
        }
        if self.warmup < 2 {
            return Err(Error::invalid("warmup", "must be at least 2"));
        }
        for (name, a) in [("alpha", self.alpha), ("fast_alpha", self.fast_alpha)] {
            if !(a > 0.0 && a < 1.0) {
                return Err(Error::invalid(name, "must lie in (0, 1)"));
            }
        }
        if self.refit_interval == 0 {
            return Err(Error::invalid("refit_interval", "must be at least 1"));
        }
        if self.trend_training < 2 {
            return Err(Error::invalid("trend_training", "must be at least 2"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    Fast,
    Trend,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Above,
    Below,
}

/// One out-of-shell distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlarmEvent {
    pub index: u64,
    pub comparison: Comparison,
    pub d: f64,
    pub shelldist: f64,
    pub sigma_m: f64,
    pub bound: f64,
    pub z: f64,
    pub direction: Direction,
}

impl AlarmEvent {
    /// Builds the event when `|d - shelldist| > k * sqrt(shellvar + sigma_m^2)`.
    pub fn check(
        index: u64,
        comparison: Comparison,
        d: f64,
        shelldist: f64,
        shellvar: f64,
        sigma_m: f64,
        threshold_k: f64,
    ) -> Option<AlarmEvent> {
        let spread = (shellvar + sigma_m * sigma_m).sqrt();
        let bound = threshold_k * spread;
        let excess = d - shelldist;
        if excess.abs() <= bound {
            return None;
        }
        Some(AlarmEvent {
            index,
            comparison,
            d,
            shelldist,
            sigma_m,
            bound,
            z: excess / spread,
            direction: if excess > 0.0 { Direction::Above } else { Direction::Below },
        })
    }
}

/// Frozen initial history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    /// Mean dependent response over the warm-up, raw units.
    pub mean: Vec<f64>,
    /// Dependent scales at freeze time; trend distances use them.
    pub scales: Vec<f64>,
    /// Fast shell radius at freeze time, in the same units.
    pub shell_mu: f64,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct VectorEwma {
    acc: Vec<f64>,
    weight: f64,
}

impl VectorEwma {
    fn new(dims: usize) -> Self {
        VectorEwma { acc: vec![0.0; dims], weight: 0.0 }
    }

    fn push(&mut self, alpha: f64, x: &[f64]) {
        self.weight = alpha + (1.0 - alpha) * self.weight;
        for (a, v) in self.acc.iter_mut().zip(x) {
            *a = alpha * v + (1.0 - alpha) * *a;
        }
    }

    fn value(&self) -> Vec<f64> {
        self.acc.iter().map(|a| a / self.weight).collect()
    }
}

/// Outcome of the fast path for one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub index: u64,
    /// `None` while no kriged reference is available.
    pub d: Option<f64>,
    pub sigma_m: f64,
    pub shelldist: f64,
    pub shellvar: f64,
    pub bound: f64,
    pub alarm: Option<AlarmEvent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorState {
    schema: u64,
    config: MonitorConfig,
    mask: Mask,
    normalizer: Normalizer,
    clusters: ClusterModel,
    kriging: Option<KrigingModel>,
    fast: Comparator,
    trend: Comparator,
    average: VectorEwma,
    history: Vec<f64>,
    reference: Option<Reference>,
    seen: u64,
}

impl MonitorState {
    pub fn new(mask: Mask, config: MonitorConfig) -> Result<Self> {
        config.validate()?;
        let dependent = mask.dependent().count();
        if dependent == 0 {
            return Err(Error::invalid("mask", "at least one dimension must be dependent"));
        }
        Ok(MonitorState {
            schema: SCHEMA_VERSION,
            normalizer: Normalizer::new(mask.len()),
            clusters: ClusterModel::new(config.kmax, config.cdist, mask.clone())?,
            kriging: None,
            fast: Comparator::new(Smoothing::Ewma { alpha: config.fast_alpha }, config.threshold_k)?,
            trend: Comparator::new(Smoothing::Batch, config.threshold_k)?,
            average: VectorEwma::new(dependent),
            history: vec![0.0; dependent],
            reference: None,
            seen: 0,
            mask,
            config,
        })
    }

    pub fn config(&self) -> &MonitorConfig {
        &self.config
    }

    pub fn mask(&self) -> &Mask {
        &self.mask
    }

    pub fn normalizer(&self) -> &Normalizer {
        &self.normalizer
    }

    pub fn clusters(&self) -> &ClusterModel {
        &self.clusters
    }

    pub fn kriging(&self) -> Option<&KrigingModel> {
        self.kriging.as_ref()
    }

    pub fn fast(&self) -> &Comparator {
        &self.fast
    }

    pub fn trend(&self) -> &Comparator {
        &self.trend
    }

    pub fn reference(&self) -> Option<&Reference> {
        self.reference.as_ref()
    }

    /// Realizations processed so far.
    pub fn seen(&self) -> u64 {
        self.seen
    }

    pub fn warmed_up(&self) -> bool {
        self.reference.is_some()
    }

    /// Current actualized average response, raw units.
    pub fn actualized_average(&self) -> Option<Vec<f64>> {
        (self.average.weight > 0.0).then(|| self.average.value())
    }

    fn dependent_of(&self, x: &[f64]) -> Vec<f64> {
        self.mask.dependent().map(|i| x[i]).collect()
    }

    fn independent_of(&self, x: &[f64]) -> Vec<f64> {
        self.mask.independent().map(|i| x[i]).collect()
    }

    fn dependent_scales(&self) -> Vec<f64> {
        self.mask.dependent().map(|i| self.normalizer.scale(i)).collect()
    }

    /// Fast path: train on `x` and test it against the kriged reference.
    ///
    /// The fast shell starts learning halfway through the warm-up, once the
    /// normalization ranges and clusters have settled. Alarms are only raised
    /// once the warm-up is complete.
    pub fn monitor_step(&mut self, x: &[f64]) -> Result<StepReport> {
        self.normalizer.observe(x)?;
        let index = self.seen;
        self.seen += 1;
        let scales = self.normalizer.scales();
        self.clusters.ingest_scaled(x, &scales)?;

        let n_clusters = self.clusters.clusters().len();
        if n_clusters >= 2 && (self.kriging.is_none() || self.clusters.kcount().is_multiple_of(self.config.refit_interval)) {
            match KrigingModel::fit(self.clusters.clusters(), &self.mask, &scales) {
                Ok(model) => self.kriging = Some(model),
                Err(e) => warn!("realization {index}: kriging refit failed ({e}); keeping the previous reference"),
            }
        }

        let dep = self.dependent_of(x);
        let dep_scales = self.dependent_scales();
        let mut report = StepReport {
            index,
            d: None,
            sigma_m: 0.0,
            shelldist: self.fast.shelldist(),
            shellvar: self.fast.shellvar(),
            bound: 0.0,
            alarm: None,
        };
        if let Some(kriging) = &self.kriging {
            match kriging.interpolate(&self.independent_of(x)) {
                Ok(interp) => {
                    let d = dep
                        .iter()
                        .zip(&interp.estimate)
                        .zip(&dep_scales)
                        .map(|((v, e), s)| ((v - e) / s).powi(2))
                        .sum::<f64>()
                        .sqrt();
                    let sigma_m = interp
                        .per_dim_var
                        .iter()
                        .zip(&dep_scales)
                        .map(|(v, s)| v / (s * s))
                        .sum::<f64>()
                        .sqrt();
                    report.d = Some(d);
                    report.sigma_m = sigma_m;
                    if index < self.config.warmup / 2 {
                        // ranges and clusters are still settling
                        return self.finish_step(report, &dep, dep_scales);
                    }
                    let r = self.fast.compare_distance(d, sigma_m, 0.0);
                    report.shelldist = r.tested_shelldist;
                    report.shellvar = r.tested_shellvar;
                    report.bound = r.bound;
                    if self.reference.is_some() && r.evaluated && !r.matched {
                        report.alarm = AlarmEvent::check(
                            index,
                            Comparison::Fast,
                            d,
                            r.tested_shelldist,
                            r.tested_shellvar,
                            sigma_m,
                            self.config.threshold_k,
                        );
                    }
                }
                Err(e) => warn!("realization {index}: interpolation failed ({e}); training only"),
            }
        }

        self.finish_step(report, &dep, dep_scales)
    }

    fn finish_step(&mut self, report: StepReport, dep: &[f64], dep_scales: Vec<f64>) -> Result<StepReport> {
        self.average.push(self.config.alpha, dep);
        if self.reference.is_none() {
            let m = self.seen as f64;
            for (h, v) in self.history.iter_mut().zip(dep) {
                *h += (v - *h) / m;
            }
            if self.seen >= self.config.warmup {
                self.reference = Some(Reference {
                    mean: self.history.clone(),
                    scales: dep_scales,
                    shell_mu: self.fast.shelldist(),
                    count: self.seen,
                });
            }
        }
        Ok(report)
    }

    /// Slow path: distance between the frozen initial history and the
    /// actualized average. The first `trend_training` comparisons learn the
    /// trend shell, which is then frozen; alarms start after that.
    pub fn trend_step(&mut self) -> Result<Option<AlarmEvent>> {
        let reference = self.reference.as_ref().ok_or(Error::ReferenceNotFrozen)?;
        let average = self.average.value();
        let d = reference
            .mean
            .iter()
            .zip(&average)
            .zip(&reference.scales)
            .map(|((r, a), s)| ((r - a) / s).powi(2))
            .sum::<f64>()
            .sqrt();
        let m0 = reference.count.max(2) as f64;
        let ex = reference.shell_mu * (1.0 / (m0 * (m0 - 1.0))).sqrt();
        let alpha = self.config.alpha;
        let m_eff = ((2.0 - alpha) / alpha).max(2.0);
        let ey = reference.shell_mu * (1.0 / (m_eff * (m_eff - 1.0))).sqrt();

        let was_frozen = self.trend.is_frozen();
        let r = self.trend.compare_distance(d, ex, ey);
        if !was_frozen {
            if self.trend.count() >= self.config.trend_training {
                self.trend.freeze()?;
            }
            return Ok(None);
        }
        if r.matched {
            return Ok(None);
        }
        let sigma = (ex * ex + ey * ey).sqrt();
        Ok(AlarmEvent::check(
            self.seen.saturating_sub(1),
            Comparison::Trend,
            d,
            r.tested_shelldist,
            r.tested_shellvar,
            sigma,
            self.config.threshold_k,
        ))
    }

    /// Runs the fast path and, once warmed up, the trend path.
    pub fn process(&mut self, x: &[f64]) -> Result<Vec<AlarmEvent>> {
        let mut alarms = Vec::new();
        if let Some(a) = self.monitor_step(x)?.alarm {
            alarms.push(a);
        }
        if self.warmed_up() {
            if let Some(a) = self.trend_step()? {
                alarms.push(a);
            }
        }
        Ok(alarms)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::CorruptModel(e.to_string()))?;
        let found = value
            .get("schema")
            .and_then(|s| s.as_u64())
            .ok_or_else(|| Error::CorruptModel("missing schema version".into()))?;
        if found != SCHEMA_VERSION {
            return Err(Error::SchemaVersion { found, expected: SCHEMA_VERSION });
        }
        let state: MonitorState = serde_json::from_str(text).map_err(|e| Error::CorruptModel(e.to_string()))?;
        state.config.validate()?;
        if state.mask.len() != state.normalizer.dims() || state.mask != *state.clusters.mask() {
            return Err(Error::CorruptModel("mask disagrees with stored model".into()));
        }
        Ok(state)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        MonitorState::from_json(&std::fs::read_to_string(path)?)
    }
}
