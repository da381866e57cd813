//! Hollow-shell statistics and shell-distance anomaly detection.
//!
//! Noisy realizations of a repeatable multichannel process do not fill a
//! diffuse cloud around the noise-free response: they concentrate on a thin
//! shell at a nearly constant distance from the response manifold. This crate
//! estimates that shell and uses the distance from a realization to the
//! shell, rather than to the manifold, to flag anomalies.
//!
//! - [`shell_stats`]: empirical and theoretical shell moments.
//! - [`comparator`]: incremental shell comparator with batch and EWMA modes.
//! - [`clustering`]: dynamic online clustering along the manifold.
//! - [`kriging`]: ordinary kriging of cluster means with uncertainty.
//! - [`pipeline`]: end-to-end monitoring with fast and trend alarms.
//! - [`synth`]: ground-truth generators and chi-distribution moments.
//! - [`verify`]: Monte-Carlo checks of the closed-form shell moments.
//! - [`report`]: static plots of a monitor run.
//! - [`cli`]: the `hollow` command-line tool.

// `!(x > 0.0)` also rejects NaN, which is the point
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod clustering;
pub mod comparator;
pub mod error;
pub mod kriging;
pub mod pipeline;
pub mod report;
pub mod shell_stats;
pub mod synth;
pub mod verify;

pub use error::{Error, Result};
