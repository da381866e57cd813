//! Incremental shell comparator.
//!
//! Tracks the mean (`shelldist`) and variance (`shellvar`) of a stream of
//! distances `|X - Y|` and flags a mismatch when a new distance leaves the
//! band `shelldist ± k * sqrt(shellvar + ex^2 + ey^2)`. The match test only
//! starts once two comparisons have been processed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::shell_stats::{euclidean, ShellEstimate};

/// Default mismatch threshold in standard deviations.
pub const DEFAULT_THRESHOLD_K: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Smoothing {
    /// Equal weight for every observation.
    Batch,
    /// Exponentially weighted with smoothing factor `alpha` in (0, 1).
    Ewma { alpha: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchResult {
    pub d: f64,
    /// `false` while fewer than two comparisons have been seen.
    pub evaluated: bool,
    pub matched: bool,
    /// Band half-width the distance was tested against.
    pub bound: f64,
    /// Shell state the distance was tested against (before the update).
    pub tested_shelldist: f64,
    pub tested_shellvar: f64,
    /// Shell state after the update.
    pub shelldist: f64,
    pub shellvar: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparator {
    shell: ShellEstimate,
    m: u64,
    updates: u64,
    mode: Smoothing,
    threshold_k: f64,
    update_on_match_only: bool,
    matched: bool,
    // ewma accumulators, stored without the 1/weight normalization
    alpha_weight: f64,
    var_weight: f64,
    acc_mean: f64,
    acc_var: f64,
}

impl Comparator {
    pub fn new(mode: Smoothing, threshold_k: f64) -> Result<Self> {
        if !(threshold_k > 0.0) || !threshold_k.is_finite() {
            return Err(Error::invalid("threshold_k", "must be positive and finite"));
        }
        if let Smoothing::Ewma { alpha } = mode {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(Error::invalid("alpha", format!("{alpha} is outside (0, 1)")));
            }
        }
        Ok(Comparator {
            shell: ShellEstimate::new(),
            m: 0,
            updates: 0,
            mode,
            threshold_k,
            update_on_match_only: false,
            matched: true,
            alpha_weight: 0.0,
            var_weight: 0.0,
            acc_mean: 0.0,
            acc_var: 0.0,
        })
    }

    /// Only let matching distances update the shell.
    pub fn with_update_on_match_only(mut self, on: bool) -> Self {
        self.update_on_match_only = on;
        self
    }

    pub fn shelldist(&self) -> f64 {
        self.shell.mu
    }

    pub fn shellvar(&self) -> f64 {
        self.shell.var
    }

    pub fn shell(&self) -> &ShellEstimate {
        &self.shell
    }

    /// Number of processed comparisons.
    pub fn count(&self) -> u64 {
        self.m
    }

    pub fn mode(&self) -> Smoothing {
        self.mode
    }

    pub fn threshold_k(&self) -> f64 {
        self.threshold_k
    }

    pub fn alpha_weight(&self) -> f64 {
        self.alpha_weight
    }

    pub fn is_frozen(&self) -> bool {
        self.shell.frozen
    }

    /// Outcome of the most recent test (`true` before any test).
    pub fn last_match(&self) -> bool {
        self.matched
    }

    /// Stops shell updates; later comparisons are tested against the frozen
    /// shell, which is how slow trends are detected.
    pub fn freeze(&mut self) -> Result<()> {
        if self.m < 2 {
            return Err(Error::InsufficientHistory(self.m));
        }
        self.shell.freeze();
        Ok(())
    }

    pub fn band(&self, ex: f64, ey: f64) -> f64 {
        self.threshold_k * (self.shell.var + ex * ex + ey * ey).sqrt()
    }

    pub fn compare(&mut self, x: &[f64], y: &[f64], ex: f64, ey: f64) -> Result<MatchResult> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: y.len(),
            });
        }
        Ok(self.compare_distance(euclidean(x, y), ex, ey))
    }

    /// Same as [`compare`](Self::compare) for an already computed distance.
    pub fn compare_distance(&mut self, d: f64, ex: f64, ey: f64) -> MatchResult {
        let tested_shelldist = self.shell.mu;
        let tested_shellvar = self.shell.var;
        let bound = self.band(ex, ey);
        let evaluated = self.m >= 2 || self.shell.frozen;
        if evaluated {
            self.matched = (d - tested_shelldist).abs() <= bound;
        }
        let accept = !self.update_on_match_only || !evaluated || self.matched;
        if !self.shell.frozen && accept {
            match self.mode {
                Smoothing::Batch => {
                    self.shell.push(d);
                }
                Smoothing::Ewma { alpha } => self.push_ewma(alpha, d),
            }
            self.updates += 1;
        }
        self.m += 1;
        MatchResult {
            d,
            evaluated,
            matched: if evaluated { self.matched } else { true },
            bound,
            tested_shelldist,
            tested_shellvar,
            shelldist: self.shell.mu,
            shellvar: self.shell.var,
        }
    }

    fn push_ewma(&mut self, alpha: f64, d: f64) {
        self.alpha_weight = alpha + (1.0 - alpha) * self.alpha_weight;
        if self.updates >= 1 {
            let dev = d - self.shell.mu;
            self.var_weight = alpha + (1.0 - alpha) * self.var_weight;
            self.acc_var = alpha * dev * dev + (1.0 - alpha) * self.acc_var;
            self.shell.var = self.acc_var / self.var_weight;
        }
        self.acc_mean = alpha * d + (1.0 - alpha) * self.acc_mean;
        self.shell.mu = self.acc_mean / self.alpha_weight;
        self.shell.weight = self.alpha_weight;
    }
}
