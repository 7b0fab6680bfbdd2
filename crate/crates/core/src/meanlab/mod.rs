//! Monte Carlo invariance laboratory.
//!
//! Every defect estimator is paired: each draw evaluates both sides of
//! `F(g·f) − F(f)` on the same `f`, so the identity of each action gives an
//! exact zero. Draws run in parallel over fixed chunks of independent
//! streams (see [`crate::rng`]), and reports are pure functions of the
//! inputs and the seed.

mod brownian;
mod defect;
mod functional;
mod sweep;
mod witness;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::ballmeasure::{Law, RadiusSchedule};
use crate::report::{f17, f17_opt};
use crate::rng::{par_samples, stream_id, Rng};
use crate::stats::mean_se;
use crate::{Error, Result};

pub use brownian::{brownian_defect, brownian_sample, haar_ks, BrownianSpec, KsReport, Observable, ObservableKind};
pub use defect::{
    rotation_defect, rotation_envelope, semidirect_defect, star_defect, translation_defect, EnvelopeReport,
    RotationEstimator,
};
pub use functional::{GridFunctional, GroupFunctional, TestFunctional};
pub use sweep::{sweep, DefectKind, Fit, FitStatus, SweepResult};
pub use witness::{sin_witness, Witness};

/// Sampling controls shared by every estimator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McOptions {
    pub m: usize,
    pub seed: u64,
    pub law: Law,
    /// Record wall time; off by default so that reports are byte-stable.
    pub timing: bool,
}

impl McOptions {
    pub fn new(m: usize, seed: u64) -> Self {
        Self { m, seed, law: Law::UniformBall, timing: false }
    }
}

/// One finite-`N` defect estimate.
///
/// Brownian rows reuse the grid columns: `n` holds the step count `K` and
/// `radius` the diffusion time `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DefectReport {
    pub experiment: String,
    pub group: String,
    pub n: usize,
    #[serde(with = "f17")]
    pub radius: f64,
    #[serde(with = "f17_opt")]
    pub alpha: Option<f64>,
    pub m: usize,
    pub seed: u64,
    #[serde(with = "f17")]
    pub estimate: f64,
    #[serde(with = "f17")]
    pub std_error: f64,
    pub wall_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

impl DefectReport {
    /// `|estimate| > k·std_error`.
    pub fn significant(&self, k: f64) -> bool {
        self.estimate.abs() > k * self.std_error
    }
}

pub(crate) struct Cell<'a> {
    pub experiment: &'a str,
    pub group: String,
    pub n: usize,
    pub radius: f64,
    pub schedule: Option<&'a RadiusSchedule>,
}

const MIN_M: usize = 100;

/// Runs `m` paired draws on stream `(tag, n)` and summarizes them.
pub(crate) fn run_cell(
    cell: Cell<'_>,
    tag: u64,
    opts: &McOptions,
    draw: impl Fn(&mut Rng) -> f64 + Sync,
) -> Result<DefectReport> {
    if opts.m < MIN_M {
        return Err(Error::Argument(format!("M = {} is below the minimum of {MIN_M}", opts.m)));
    }
    let start = Instant::now();
    let values = par_samples(opts.m, opts.seed, stream_id(&[tag, cell.n as u64]), draw);
    let summary = mean_se(&values);
    let wall_ms = if opts.timing { start.elapsed().as_millis() as u64 } else { 0 };
    let warning = cell
        .schedule
        .filter(|s| !s.in_window())
        .map(|s| format!("schedule exponent {} lies outside (1/2, 1)", s.alpha().unwrap_or(f64::NAN)));
    Ok(DefectReport {
        experiment: cell.experiment.to_string(),
        group: cell.group,
        n: cell.n,
        radius: cell.radius,
        alpha: cell.schedule.and_then(RadiusSchedule::alpha),
        m: opts.m,
        seed: opts.seed,
        estimate: summary.mean,
        std_error: summary.std_error,
        wall_ms,
        warning,
    })
}
