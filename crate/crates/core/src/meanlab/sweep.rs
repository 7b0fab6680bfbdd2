//! Defect estimates over a grid of `N` with a fitted log-log slope.

use serde::Serialize;

use crate::ballmeasure::RadiusSchedule;
use crate::liegroup::GroupElement;
use crate::pathspace::{GroupPath, StepPath};
use crate::report::f17;
use crate::stats::loglog_slope;
use crate::{Error, Result};

use super::{
    rotation_defect, semidirect_defect, star_defect, translation_defect, DefectReport, GroupFunctional, McOptions,
    RotationEstimator, TestFunctional,
};

/// Significance multiple for trend claims.
const SIGNIFICANCE: f64 = 3.0;

#[derive(Clone, Debug)]
pub enum DefectKind {
    Translation { g: StepPath, func: TestFunctional },
    Rotation { r: GroupPath, func: TestFunctional, estimator: RotationEstimator },
    Star { g: StepPath, func: TestFunctional },
    Semidirect { k: GroupElement, g: StepPath, fk: GroupFunctional, func: TestFunctional },
}

impl DefectKind {
    pub fn name(&self) -> &'static str {
        match self {
            DefectKind::Translation { .. } => "translation",
            DefectKind::Rotation { .. } => "rotation",
            DefectKind::Star { .. } => "star",
            DefectKind::Semidirect { .. } => "semidirect",
        }
    }

    pub fn run(&self, n: usize, schedule: &RadiusSchedule, opts: &McOptions) -> Result<DefectReport> {
        match self {
            DefectKind::Translation { g, func } => translation_defect(g, func, n, schedule, opts),
            DefectKind::Rotation { r, func, estimator } => rotation_defect(r, func, n, schedule, *estimator, opts),
            DefectKind::Star { g, func } => star_defect(g, func, n, schedule, opts),
            DefectKind::Semidirect { k, g, fk, func } => semidirect_defect(k, g, fk, func, n, schedule, opts),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitStatus {
    /// Every estimate exceeds 3 standard errors; the slope is fitted on all of them.
    Fitted,
    /// Some estimate is within 3 standard errors of zero; no slope is reported.
    NoiseDominated,
    /// Every estimate is exactly zero.
    Degenerate,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Fit {
    #[serde(with = "f17")]
    pub slope: f64,
    #[serde(with = "f17")]
    pub intercept: f64,
    #[serde(with = "f17")]
    pub ci_low: f64,
    #[serde(with = "f17")]
    pub ci_high: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepResult {
    pub experiment: String,
    pub reports: Vec<DefectReport>,
    /// Sample count after any doubling.
    pub m: usize,
    pub status: FitStatus,
    pub fit: Option<Fit>,
    /// The smallest-`N` estimate is significant, the largest-`N` magnitude is
    /// below it, and the slope through the significant points is negative.
    pub decreasing: bool,
}

fn fit_of(reports: &[&DefectReport]) -> Option<Fit> {
    let xs: Vec<f64> = reports.iter().map(|r| r.n as f64).collect();
    let ys: Vec<f64> = reports.iter().map(|r| r.estimate.abs()).collect();
    loglog_slope(&xs, &ys).map(|f| Fit { slope: f.slope, intercept: f.intercept, ci_low: f.ci_low, ci_high: f.ci_high })
}

fn is_decreasing(reports: &[DefectReport]) -> bool {
    let (first, last) = (&reports[0], &reports[reports.len() - 1]);
    if !first.significant(SIGNIFICANCE) || last.estimate.abs() >= first.estimate.abs() {
        return false;
    }
    let sig: Vec<&DefectReport> = reports.iter().filter(|r| r.significant(SIGNIFICANCE)).collect();
    if sig.len() < 2 {
        return true;
    }
    fit_of(&sig).is_some_and(|f| f.slope < 0.0)
}

/// Runs `kind` at every `N` in `n_list` (ascending, at least 3 points). While
/// the smallest-`N` estimate is within 3 standard errors of zero, `M` is
/// doubled and the whole grid rerun, up to `m_cap`.
pub fn sweep(
    kind: &DefectKind,
    schedule: &RadiusSchedule,
    n_list: &[usize],
    opts: &McOptions,
    m_cap: usize,
) -> Result<SweepResult> {
    if n_list.len() < 3 || n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Argument("N list must be strictly ascending with at least 3 points".into()));
    }
    let mut opts = *opts;
    loop {
        let reports = n_list.iter().map(|&n| kind.run(n, schedule, &opts)).collect::<Result<Vec<_>>>()?;
        let degenerate = reports.iter().all(|r| r.estimate == 0.0);
        if !degenerate && !reports[0].significant(SIGNIFICANCE) && opts.m * 2 <= m_cap {
            opts.m *= 2;
            continue;
        }
        let all_sig = reports.iter().all(|r| r.significant(SIGNIFICANCE));
        let (status, fit) = if degenerate {
            (FitStatus::Degenerate, None)
        } else if all_sig {
            (FitStatus::Fitted, fit_of(&reports.iter().collect::<Vec<_>>()))
        } else {
            (FitStatus::NoiseDominated, None)
        };
        let decreasing = !degenerate && is_decreasing(&reports);
        return Ok(SweepResult { experiment: kind.name().to_string(), reports, m: opts.m, status, fit, decreasing });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liegroup::LieContext;
    use crate::rng::seeded;
    use std::sync::Arc;

    #[test]
    fn zero_translation_is_degenerate() {
        let ctx = Arc::new(LieContext::so3());
        let h = StepPath::random(ctx.clone(), 4, 1.0, &mut seeded(1));
        let kind = DefectKind::Translation { g: StepPath::zeros(ctx, 1), func: TestFunctional::cosine(h) };
        let res = sweep(&kind, &RadiusSchedule::default(), &[4, 8, 16], &McOptions::new(200, 1), 800).unwrap();
        assert_eq!(res.status, FitStatus::Degenerate);
        assert_eq!(res.m, 200);
        assert!(res.reports.iter().all(|r| r.estimate == 0.0));
        assert!(!res.decreasing);
    }

    #[test]
    fn rejects_short_or_unsorted_grids() {
        let ctx = Arc::new(LieContext::so3());
        let h = StepPath::zeros(ctx.clone(), 1);
        let kind = DefectKind::Translation { g: h.clone(), func: TestFunctional::cosine(h) };
        let opts = McOptions::new(200, 1);
        assert!(sweep(&kind, &RadiusSchedule::default(), &[4, 8], &opts, 200).is_err());
        assert!(sweep(&kind, &RadiusSchedule::default(), &[8, 4, 16], &opts, 200).is_err());
    }

    #[test]
    fn noise_triggers_doubling_up_to_cap() {
        let ctx = Arc::new(LieContext::so3());
        let mut rng = seeded(2);
        let g = StepPath::random(ctx.clone(), 1, 1e-9, &mut rng);
        let h = StepPath::random(ctx, 1, 1.0, &mut rng);
        let kind = DefectKind::Translation { g, func: TestFunctional::gauss_window(h, 1.0).unwrap() };
        let res = sweep(&kind, &RadiusSchedule::default(), &[4, 8, 16], &McOptions::new(200, 1), 800).unwrap();
        assert!(res.m <= 800);
    }
}
