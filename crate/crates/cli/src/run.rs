//! Config validation, execution and output writing.
//!
//! A run is split in three stages. [`Plan::new`] resolves and validates every
//! field of the config; [`Plan::execute`] computes all outputs in memory;
//! [`write_outputs`] writes them and then the manifest. Nothing touches the
//! filesystem until every computation has succeeded.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use pathlab::ballmeasure::{
    block_max_stat, block_max_threshold, levy_tail, shifted_ball_overlap_exact, shifted_ball_overlap_mc, BallSpec, Law,
    RadiusSchedule,
};
use pathlab::liegroup::{AlgebraElement, Family, GroupElement, LieContext};
use pathlab::meanlab::{
    brownian_defect, haar_ks, rotation_envelope, sin_witness, sweep, BrownianSpec, DefectKind, DefectReport,
    EnvelopeReport, Fit, FitStatus, GroupFunctional, KsReport, McOptions, Observable, RotationEstimator,
    TestFunctional,
};
use pathlab::pathspace::{develop, GroupPath, StepPath};
use pathlab::report::{defect_csv, f17, fmt_f64, geometry_csv, to_json, GeometryRow};
use pathlab::rng::seeded;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{
    Check, ElementSpec, ExperimentConfig, ExperimentKind, Format, FunctionalSpec, PathSpec, RotorSpec,
};
use crate::error::CliError;
use crate::selftest::{checks_csv, cocycle_study, exactness_study, group_laws_study, round_trip_study, CheckResult};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Default pairs, paths and triples for the selftest studies.
const COCYCLE_PAIRS: usize = 50;
const ROUND_TRIP_PATHS: usize = 20;
const GROUP_LAW_TRIPLES: usize = 8;

/// One output file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    fn new(name: String, text: String) -> Self {
        Self { name, bytes: text.into_bytes() }
    }

    pub fn text(&self) -> &str {
        std::str::from_utf8(&self.bytes).expect("artifacts are UTF-8")
    }

    pub fn sha256(&self) -> String {
        Sha256::digest(&self.bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    /// Names of failed selftest checks.
    pub failed_checks: Vec<String>,
}

impl Outcome {
    pub fn artifact(&self, name: &str) -> Option<&Artifact> {
        self.artifacts.iter().find(|a| a.name == name)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OutputDigest {
    pub file: String,
    pub sha256: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub config: String,
    pub version: String,
    pub wall_ms: u64,
    pub outputs: Vec<OutputDigest>,
}

/// Command-line values that take precedence over the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub format: Option<Format>,
    pub m: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(f) = self.format {
            cfg.format = f;
        }
        if let Some(m) = self.m {
            cfg.m = Some(m);
            for c in &mut cfg.cases {
                c.m = None;
            }
        }
    }
}

struct DefectCase {
    label: String,
    kind: DefectKind,
    schedule: RadiusSchedule,
    n_list: Vec<usize>,
    m: usize,
    m_cap: usize,
    envelope: Option<usize>,
}

struct GeometryJob {
    rows: Vec<(usize, f64)>,
    trends: Vec<(f64, Vec<usize>)>,
    m: usize,
}

struct LevyJob {
    n: Vec<usize>,
    eps: Vec<f64>,
    m: usize,
    block_max: Option<(BallSpec, f64, usize)>,
}

struct BrownianJob {
    g: GroupPath,
    obs: Observable,
    t_list: Vec<f64>,
    steps: usize,
    m: usize,
    ks: Option<(BrownianSpec, usize, f64)>,
}

struct WitnessJob {
    y: AlgebraElement,
    eps: f64,
    n: usize,
    radii: Vec<f64>,
}

enum Job {
    Geometry(GeometryJob),
    Levy(LevyJob),
    Defect(Vec<DefectCase>),
    Brownian(BrownianJob),
    Witness(WitnessJob),
    Selftest(Vec<Check>, Option<usize>),
}

/// A validated config, ready to execute.
pub struct Plan {
    pub config: ExperimentConfig,
    ctx: Arc<LieContext>,
    job: Job,
    timing: bool,
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn at(field: &str) -> impl Fn(pathlab::Error) -> CliError + '_ {
    move |e| CliError::Config(format!("{field}: {e}"))
}

fn need<T: Clone>(field: &str, own: &Option<T>, top: &Option<T>) -> Result<T, CliError> {
    own.clone().or_else(|| top.clone()).ok_or_else(|| bad(format!("missing field '{field}'")))
}

fn check_m(field: &str, m: usize) -> Result<(), CliError> {
    if m < 100 {
        return Err(bad(format!("{field}: M = {m} is below the minimum of 100")));
    }
    Ok(())
}

fn check_grid(field: &str, ns: &[usize]) -> Result<(), CliError> {
    if ns.is_empty() || ns.contains(&0) {
        return Err(bad(format!("{field}: need a nonempty list of positive sizes")));
    }
    if ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(bad(format!("{field}: sizes must be strictly ascending")));
    }
    Ok(())
}

fn algebra_vector(ctx: &LieContext, field: &str, axis: &[f64], angle: f64) -> Result<AlgebraElement, CliError> {
    if axis.len() != ctx.algebra_dim() {
        return Err(bad(format!(
            "{field}: axis has {} entries, the algebra has dimension {}",
            axis.len(),
            ctx.algebra_dim()
        )));
    }
    if !angle.is_finite() || axis.iter().any(|v| !v.is_finite()) {
        return Err(bad(format!("{field}: non-finite axis or angle")));
    }
    let a = AlgebraElement::from_slice(axis);
    if angle == 0.0 {
        return Ok(AlgebraElement::zeros(axis.len()));
    }
    if a.norm() == 0.0 {
        return Err(bad(format!("{field}: zero axis with nonzero angle")));
    }
    Ok(a.scale(angle / a.norm()))
}

fn element(ctx: &LieContext, field: &str, e: &ElementSpec) -> Result<GroupElement, CliError> {
    let x = algebra_vector(ctx, field, &e.axis, e.angle)?;
    Ok(ctx.exp_alg(&x))
}

fn build_path(
    ctx: &Arc<LieContext>,
    field: &str,
    spec: &PathSpec,
    base: Option<&StepPath>,
) -> Result<StepPath, CliError> {
    let d = ctx.algebra_dim();
    let base_or = || base.cloned().ok_or_else(|| bad(format!("{field}: no case path to refer to")));
    match spec {
        PathSpec::Zero => Ok(StepPath::zeros(ctx.clone(), 1)),
        PathSpec::Random { blocks, norm, seed } => {
            if *blocks == 0 || !(*norm >= 0.0 && norm.is_finite()) {
                return Err(bad(format!("{field}: need blocks > 0 and a finite norm ≥ 0")));
            }
            Ok(StepPath::random(ctx.clone(), *blocks, *norm, &mut seeded(*seed)))
        }
        PathSpec::Basis { index, scale } => {
            if *index >= d {
                return Err(bad(format!("{field}: basis index {index} out of range for dimension {d}")));
            }
            Ok(StepPath::constant(ctx.clone(), 1, &ctx.basis_element(*index).scale(*scale)))
        }
        PathSpec::Blocks { blocks, data } => StepPath::new(ctx.clone(), *blocks, data.clone()).map_err(at(field)),
        PathSpec::SameAsPath => base_or(),
        PathSpec::PathScaled { norm } => {
            let p = base_or()?;
            let len = p.l2_norm();
            if len == 0.0 {
                return Err(bad(format!("{field}: cannot rescale the zero path")));
            }
            Ok(p.scale(norm / len))
        }
    }
}

fn build_functional(
    ctx: &Arc<LieContext>,
    field: &str,
    spec: &FunctionalSpec,
    base: Option<&StepPath>,
) -> Result<TestFunctional, CliError> {
    match spec {
        FunctionalSpec::Cosine { direction } => Ok(TestFunctional::cosine(build_path(ctx, field, direction, base)?)),
        FunctionalSpec::GaussWindow { direction, scale } => {
            TestFunctional::gauss_window(build_path(ctx, field, direction, base)?, *scale).map_err(at(field))
        }
        // cos⟨f, 0⟩ = 1.
        FunctionalSpec::One => Ok(TestFunctional::cosine(StepPath::zeros(ctx.clone(), 1))),
    }
}

fn build_rotor(
    ctx: &Arc<LieContext>,
    field: &str,
    spec: &RotorSpec,
    base: Option<&StepPath>,
) -> Result<GroupPath, CliError> {
    let grid = match spec {
        RotorSpec::Identity { grid }
        | RotorSpec::Geodesic { grid, .. }
        | RotorSpec::Constant { grid, .. }
        | RotorSpec::Develop { grid } => *grid,
    };
    if grid == 0 {
        return Err(bad(format!("{field}: grid must be positive")));
    }
    match spec {
        RotorSpec::Identity { .. } => GroupPath::constant(ctx.clone(), ctx.identity(), grid).map_err(at(field)),
        RotorSpec::Geodesic { axis, angle, .. } => {
            let x = algebra_vector(ctx, field, axis, *angle)?;
            GroupPath::geodesic(ctx.clone(), &x, grid).map_err(at(field))
        }
        RotorSpec::Constant { axis, angle, .. } => {
            let g = ctx.exp_alg(&algebra_vector(ctx, field, axis, *angle)?);
            GroupPath::constant(ctx.clone(), g, grid).map_err(at(field))
        }
        RotorSpec::Develop { .. } => {
            let p = base.ok_or_else(|| bad(format!("{field}: develop needs a case path")))?;
            develop(p, grid).map_err(at(field))
        }
    }
}

impl Plan {
    /// Resolves every field; any problem is a [`CliError::Config`].
    pub fn new(config: ExperimentConfig, timing: bool) -> Result<Self, CliError> {
        let family = Family::parse(&config.group).map_err(at("group"))?;
        let ctx = Arc::new(LieContext::new(family).map_err(at("group"))?);
        if let Some(s) = &config.schedule {
            s.validate().map_err(at("schedule"))?;
        }
        let kind = config.experiment;
        let missing = |s: &str| bad(format!("experiment '{}' needs a [{s}] section", kind.name()));
        let job = match kind {
            ExperimentKind::Geometry => {
                let g = config.geometry.as_ref().ok_or_else(|| missing("geometry"))?;
                check_m("geometry.m", g.m)?;
                for &(n, s) in &g.points {
                    shifted_ball_overlap_exact(n, s).map_err(at("geometry.points"))?;
                }
                for t in &g.trends {
                    check_grid("geometry.trends.n", &t.n)?;
                    if !t.exponent.is_finite() {
                        return Err(bad("geometry.trends.exponent must be finite"));
                    }
                }
                if g.points.is_empty() && g.trends.is_empty() {
                    return Err(bad("geometry: need points or trends"));
                }
                Job::Geometry(GeometryJob {
                    rows: g.points.clone(),
                    trends: g.trends.iter().map(|t| (t.exponent, t.n.clone())).collect(),
                    m: g.m,
                })
            }
            ExperimentKind::Levy => {
                let l = config.levy.as_ref().ok_or_else(|| missing("levy"))?;
                check_m("levy.m", l.m)?;
                check_grid("levy.n", &l.n)?;
                if l.eps.is_empty() || l.eps.iter().any(|e| !(0.0..=1.0).contains(e)) {
                    return Err(bad("levy.eps: need values in [0, 1]"));
                }
                let block_max = match &l.block_max {
                    None => None,
                    Some(b) => {
                        check_m("levy.block_max.m", b.m)?;
                        let schedule = config.schedule.clone().ok_or_else(|| missing("schedule"))?;
                        if config.law != Law::UniformBall {
                            return Err(bad("levy.block_max needs law = \"uniform-ball\""));
                        }
                        let spec = BallSpec::from_schedule(ctx.clone(), b.n, &schedule, config.law)
                            .map_err(at("levy.block_max"))?;
                        let threshold = block_max_threshold(&spec);
                        Some((spec, threshold, b.m))
                    }
                };
                Job::Levy(LevyJob { n: l.n.clone(), eps: l.eps.clone(), m: l.m, block_max })
            }
            k if k.is_defect() => Job::Defect(Self::defect_cases(&config, &ctx)?),
            ExperimentKind::Brownian => {
                let b = config.brownian.as_ref().ok_or_else(|| missing("brownian"))?;
                let m = config.m.ok_or_else(|| bad("missing field 'm'"))?;
                check_m("m", m)?;
                if b.t_list.is_empty() || b.t_list.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
                    return Err(bad("brownian.t_list: need positive finite times"));
                }
                if b.t_list.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(bad("brownian.t_list: times must be strictly ascending"));
                }
                BrownianSpec::new(ctx.clone(), b.t_list[0], b.steps).map_err(at("brownian.steps"))?;
                if !(0.0..=1.0).contains(&b.time) {
                    return Err(bad("brownian.time must lie in [0, 1]"));
                }
                let g = build_rotor(&ctx, "brownian.path", &b.path, None)?;
                let ks = match &b.ks {
                    None => None,
                    Some(k) => {
                        if k.m < 2 || !(k.alpha > 0.0 && k.alpha < 1.0) {
                            return Err(bad("brownian.ks: need m ≥ 2 and alpha in (0, 1)"));
                        }
                        let spec = BrownianSpec::new(ctx.clone(), k.t, k.steps).map_err(at("brownian.ks"))?;
                        Some((spec, k.m, k.alpha))
                    }
                };
                Job::Brownian(BrownianJob {
                    g,
                    obs: Observable { kind: b.observable, time: b.time },
                    t_list: b.t_list.clone(),
                    steps: b.steps,
                    m,
                    ks,
                })
            }
            ExperimentKind::Witness => {
                let w = config.witness.as_ref().ok_or_else(|| missing("witness"))?;
                if w.y.len() != ctx.algebra_dim() {
                    return Err(bad(format!("witness.y: expected {} coordinates", ctx.algebra_dim())));
                }
                if w.n == 0 || w.radii.is_empty() {
                    return Err(bad("witness: need n > 0 and at least one radius"));
                }
                let y = AlgebraElement::from_slice(&w.y);
                // Cheap dry run: rejects central y, negative ε and bad radii.
                for &r in &w.radii {
                    sin_witness(ctx.clone(), &y, r, w.eps, 1).map_err(at("witness"))?;
                }
                Job::Witness(WitnessJob { y, eps: w.eps, n: w.n, radii: w.radii.clone() })
            }
            ExperimentKind::Selftest => {
                let s = config.selftest.as_ref().ok_or_else(|| missing("selftest"))?;
                if s.checks.is_empty() {
                    return Err(bad("selftest.checks is empty"));
                }
                if s.samples == Some(0) {
                    return Err(bad("selftest.samples must be positive"));
                }
                Job::Selftest(s.checks.clone(), s.samples)
            }
            _ => unreachable!("defect kinds handled above"),
        };
        Ok(Self { config, ctx, job, timing })
    }

    fn defect_cases(config: &ExperimentConfig, ctx: &Arc<LieContext>) -> Result<Vec<DefectCase>, CliError> {
        if config.cases.is_empty() {
            return Err(bad(format!("experiment '{}' needs at least one [[case]]", config.experiment.name())));
        }
        let mut seen = std::collections::HashSet::new();
        let mut out = Vec::new();
        for (i, c) in config.cases.iter().enumerate() {
            let f = |name: &str| format!("case[{i}].{name}");
            if c.label.is_empty() || c.label.contains([',', '/', '\n']) || !seen.insert(c.label.clone()) {
                return Err(bad(format!("{}: labels must be unique, nonempty and free of ',' and '/'", f("label"))));
            }
            let schedule = need(&f("schedule"), &c.schedule, &config.schedule)?;
            schedule.validate().map_err(at(&f("schedule")))?;
            let n_list = need(&f("n_list"), &c.n_list, &config.n_list)?;
            check_grid(&f("n_list"), &n_list)?;
            let m = need(&f("m"), &c.m, &config.m)?;
            check_m(&f("m"), m)?;
            let m_cap = config.m_cap.unwrap_or(2 * m).max(m);
            let path = c.path.as_ref().map(|p| build_path(ctx, &f("path"), p, None)).transpose()?;
            let func = c
                .functional
                .as_ref()
                .ok_or_else(|| bad(format!("missing field '{}'", f("functional"))))
                .and_then(|s| build_functional(ctx, &f("functional"), s, path.as_ref()))?;
            let path_or_err = || path.clone().ok_or_else(|| bad(format!("missing field '{}'", f("path"))));
            let kind = match config.experiment {
                ExperimentKind::Translation => DefectKind::Translation { g: path_or_err()?, func },
                ExperimentKind::Star => DefectKind::Star { g: path_or_err()?, func },
                ExperimentKind::Rotation => {
                    let spec = c.rotor.as_ref().ok_or_else(|| bad(format!("missing field '{}'", f("rotor"))))?;
                    let r = build_rotor(ctx, &f("rotor"), spec, path.as_ref())?;
                    if let Some(&n) = n_list.iter().find(|&&n| r.k() % n != 0) {
                        return Err(bad(format!("{}: grid {} is not a multiple of N = {n}", f("rotor"), r.k())));
                    }
                    DefectKind::Rotation { r, func, estimator: c.estimator }
                }
                ExperimentKind::Semidirect => {
                    let k = c.k.as_ref().ok_or_else(|| bad(format!("missing field '{}'", f("k"))))?;
                    DefectKind::Semidirect {
                        k: element(ctx, &f("k"), k)?,
                        g: path.clone().unwrap_or_else(|| StepPath::zeros(ctx.clone(), 1)),
                        fk: c.group_functional,
                        func,
                    }
                }
                _ => unreachable!(),
            };
            if c.estimator != RotationEstimator::default() && config.experiment != ExperimentKind::Rotation {
                return Err(bad(format!("{}: only rotation cases take an estimator", f("estimator"))));
            }
            if c.group_functional != GroupFunctional::default() && config.experiment != ExperimentKind::Semidirect {
                return Err(bad(format!("{}: only semidirect cases take a group functional", f("group_functional"))));
            }
            let envelope = match (&c.envelope, config.experiment) {
                (None, _) => None,
                (Some(e), ExperimentKind::Rotation) => {
                    check_m(&f("envelope.m"), e.m)?;
                    Some(e.m)
                }
                (Some(_), _) => return Err(bad(format!("{}: only rotation cases take an envelope", f("envelope")))),
            };
            out.push(DefectCase { label: c.label.clone(), kind, schedule, n_list, m, m_cap, envelope });
        }
        Ok(out)
    }

    fn opts(&self, m: usize) -> McOptions {
        McOptions { m, seed: self.config.seed, law: self.config.law, timing: self.timing }
    }

    /// Computes every output in memory.
    pub fn execute(&self) -> Result<Outcome, CliError> {
        let stem = self.config.stem();
        let ext = self.config.format.extension();
        let json = self.config.format == Format::Json;
        let mut failed_checks = Vec::new();
        let artifacts = match &self.job {
            Job::Geometry(g) => {
                let (rows, summary) = self.geometry(g)?;
                let main = if json { to_json(&rows)? } else { geometry_csv(&rows) };
                vec![
                    Artifact::new(format!("{stem}.{ext}"), main),
                    Artifact::new(format!("{stem}.summary.json"), to_json(&summary)?),
                ]
            }
            Job::Levy(l) => self.levy(l, &stem, json)?,
            Job::Defect(cases) => {
                let (rows, summary) = self.defects(cases)?;
                let main = if json { to_json(&rows)? } else { defect_csv(&rows) };
                vec![
                    Artifact::new(format!("{stem}.{ext}"), main),
                    Artifact::new(format!("{stem}.summary.json"), to_json(&summary)?),
                ]
            }
            Job::Brownian(b) => {
                let rows = brownian_defect(&b.g, &b.obs, &b.t_list, b.steps, &self.opts(b.m))?;
                let ks =
                    b.ks.as_ref().map(|(spec, m, alpha)| haar_ks(spec, *m, self.config.seed, *alpha)).transpose()?;
                let summary = BrownianSummary { strictly_decreasing: strictly_decreasing(&rows), ks };
                let main = if json { to_json(&rows)? } else { defect_csv(&rows) };
                vec![
                    Artifact::new(format!("{stem}.{ext}"), main),
                    Artifact::new(format!("{stem}.summary.json"), to_json(&summary)?),
                ]
            }
            Job::Witness(w) => {
                let rows = w
                    .radii
                    .iter()
                    .map(|&r| sin_witness(self.ctx.clone(), &w.y, r, w.eps, w.n))
                    .collect::<pathlab::Result<Vec<_>>>()?;
                let main = if json { to_json(&rows)? } else { witness_csv(&rows) };
                vec![Artifact::new(format!("{stem}.{ext}"), main)]
            }
            Job::Selftest(checks, samples) => {
                let results = self.selftest(checks, *samples)?;
                failed_checks = results.iter().filter(|r| !r.pass).map(|r| r.check.clone()).collect();
                let main = if json { to_json(&results)? } else { checks_csv(&results) };
                vec![Artifact::new(format!("{stem}.{ext}"), main)]
            }
        };
        Ok(Outcome { artifacts, failed_checks })
    }

    fn geometry(&self, g: &GeometryJob) -> Result<(Vec<GeometryRow>, GeometrySummary), CliError> {
        let seed = self.config.seed;
        let row = |n: usize, s: f64| -> pathlab::Result<GeometryRow> {
            let exact = shifted_ball_overlap_exact(n, s)?;
            let mc = shifted_ball_overlap_mc(n, s, g.m, seed)?;
            Ok(GeometryRow { n, s, exact, mc_estimate: mc.estimate, mc_se: mc.std_error, m: g.m, seed })
        };
        let mut rows = Vec::new();
        for &(n, s) in &g.rows {
            rows.push(row(n, s)?);
        }
        let mut trends = Vec::new();
        for (exponent, ns) in &g.trends {
            let mut exact = Vec::new();
            for &n in ns {
                let r = row(n, (n as f64).powf(*exponent))?;
                exact.push(r.exact);
                rows.push(r);
            }
            trends.push(TrendSummary {
                exponent: *exponent,
                n: ns.clone(),
                strictly_decreasing: exact.windows(2).all(|w| w[1] < w[0]),
                strictly_increasing: exact.windows(2).all(|w| w[1] > w[0]),
            });
        }
        Ok((rows, GeometrySummary { trends }))
    }

    fn levy(&self, l: &LevyJob, stem: &str, json: bool) -> Result<Vec<Artifact>, CliError> {
        let seed = self.config.seed;
        let mut tails = Vec::new();
        for &n in &l.n {
            for &eps in &l.eps {
                tails.push(levy_tail(n, eps, l.m, seed)?);
            }
        }
        let ext = self.config.format.extension();
        let main = if json {
            to_json(&tails)?
        } else {
            let mut s = String::from(LEVY_HEADER);
            s.push('\n');
            for t in &tails {
                s.push_str(&format!(
                    "{},{},{},{},{},{},{},{}\n",
                    t.n,
                    fmt_f64(t.eps),
                    fmt_f64(t.exact),
                    fmt_f64(t.empirical.estimate),
                    fmt_f64(t.empirical.std_error),
                    fmt_f64(t.bound),
                    t.empirical.m,
                    seed
                ));
            }
            s
        };
        let mut out = vec![Artifact::new(format!("{stem}.{ext}"), main)];
        if let Some((spec, threshold, m)) = &l.block_max {
            let est = block_max_stat(spec, *m, seed)?;
            let row = BlockMaxRow {
                n: spec.n,
                radius: spec.radius,
                alpha: self.config.schedule.as_ref().and_then(RadiusSchedule::alpha),
                threshold: *threshold,
                estimate: est.estimate,
                std_error: est.std_error,
                m: *m,
                seed,
            };
            let text = if json {
                to_json(&[row])?
            } else {
                format!(
                    "{BLOCK_MAX_HEADER}\n{},{},{},{},{},{},{},{}\n",
                    row.n,
                    fmt_f64(row.radius),
                    row.alpha.map(fmt_f64).unwrap_or_default(),
                    fmt_f64(row.threshold),
                    fmt_f64(row.estimate),
                    fmt_f64(row.std_error),
                    row.m,
                    row.seed
                )
            };
            out.push(Artifact::new(format!("{stem}.block_max.{ext}"), text));
        }
        Ok(out)
    }

    fn defects(&self, cases: &[DefectCase]) -> Result<(Vec<DefectReport>, Vec<CaseSummary>), CliError> {
        let mut rows = Vec::new();
        let mut summary = Vec::new();
        for c in cases {
            let name = format!("{}/{}", c.kind.name(), c.label);
            let opts = self.opts(c.m);
            let (mut reports, s) = if c.n_list.len() >= 3 {
                let res = sweep(&c.kind, &c.schedule, &c.n_list, &opts, c.m_cap)?;
                let s = CaseSummary {
                    experiment: name.clone(),
                    n_list: c.n_list.clone(),
                    m: res.m,
                    status: Some(res.status),
                    fit: res.fit,
                    decreasing: Some(res.decreasing),
                    envelope: Vec::new(),
                };
                (res.reports, s)
            } else {
                let reports =
                    c.n_list.iter().map(|&n| c.kind.run(n, &c.schedule, &opts)).collect::<pathlab::Result<Vec<_>>>()?;
                let s = CaseSummary {
                    experiment: name.clone(),
                    n_list: c.n_list.clone(),
                    m: c.m,
                    status: None,
                    fit: None,
                    decreasing: None,
                    envelope: Vec::new(),
                };
                (reports, s)
            };
            let mut s = s;
            if let (Some(em), DefectKind::Rotation { r, .. }) = (c.envelope, &c.kind) {
                for &n in &c.n_list {
                    s.envelope.push(rotation_envelope(r, n, &c.schedule, &self.opts(em))?);
                }
            }
            for r in &mut reports {
                r.experiment = name.clone();
            }
            rows.extend(reports);
            summary.push(s);
        }
        Ok((rows, summary))
    }

    fn selftest(&self, checks: &[Check], samples: Option<usize>) -> Result<Vec<CheckResult>, CliError> {
        let seed = self.config.seed;
        let ctx = &self.ctx;
        let mut out = Vec::new();
        for check in checks {
            out.push(match check {
                Check::Cocycle => cocycle_study(ctx, samples.unwrap_or(COCYCLE_PAIRS), seed)?,
                Check::RoundTrip => round_trip_study(ctx, samples.unwrap_or(ROUND_TRIP_PATHS), seed)?,
                Check::GroupLaws => group_laws_study(ctx, samples.unwrap_or(GROUP_LAW_TRIPLES), seed)?,
                Check::Exactness => exactness_study(ctx, seed)?,
            });
        }
        Ok(out)
    }
}

pub const LEVY_HEADER: &str = "n,eps,exact,mc_estimate,mc_se,bound,M,seed";
pub const BLOCK_MAX_HEADER: &str = "N,R,alpha,threshold,estimate,std_error,M,seed";
pub const WITNESS_HEADER: &str = "group,N,eps,R,z_index,f_norm,growth";

#[derive(Serialize)]
struct BlockMaxRow {
    n: usize,
    #[serde(with = "f17")]
    radius: f64,
    #[serde(with = "pathlab::report::f17_opt")]
    alpha: Option<f64>,
    #[serde(with = "f17")]
    threshold: f64,
    #[serde(with = "f17")]
    estimate: f64,
    #[serde(with = "f17")]
    std_error: f64,
    m: usize,
    seed: u64,
}

#[derive(Serialize)]
struct TrendSummary {
    #[serde(with = "f17")]
    exponent: f64,
    n: Vec<usize>,
    strictly_decreasing: bool,
    strictly_increasing: bool,
}

#[derive(Serialize)]
struct GeometrySummary {
    trends: Vec<TrendSummary>,
}

#[derive(Serialize)]
struct CaseSummary {
    experiment: String,
    n_list: Vec<usize>,
    /// Sample count after any doubling.
    m: usize,
    status: Option<FitStatus>,
    fit: Option<Fit>,
    decreasing: Option<bool>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    envelope: Vec<EnvelopeReport>,
}

#[derive(Serialize)]
struct BrownianSummary {
    strictly_decreasing: bool,
    ks: Option<KsReport>,
}

/// Consecutive magnitudes drop by more than 3 combined standard errors.
fn strictly_decreasing(rows: &[DefectReport]) -> bool {
    rows.windows(2).all(|w| {
        let gap = w[0].estimate.abs() - w[1].estimate.abs();
        gap > 3.0 * w[0].std_error.hypot(w[1].std_error)
    })
}

fn witness_csv(rows: &[pathlab::meanlab::Witness]) -> String {
    let mut s = String::from(WITNESS_HEADER);
    s.push('\n');
    for w in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            w.group,
            w.n,
            fmt_f64(w.eps),
            fmt_f64(w.radius),
            w.z_index,
            fmt_f64(w.f_norm),
            fmt_f64(w.growth)
        ));
    }
    s
}

/// Writes the artifacts into `dir`, then `<stem>.manifest.json`.
pub fn write_outputs(
    dir: &Path,
    config: &ExperimentConfig,
    outcome: &Outcome,
    wall_ms: u64,
) -> Result<RunManifest, CliError> {
    std::fs::create_dir_all(dir)?;
    for a in &outcome.artifacts {
        std::fs::write(dir.join(&a.name), &a.bytes)?;
    }
    let manifest = RunManifest {
        config: config.to_toml(),
        version: VERSION.to_string(),
        wall_ms,
        outputs: outcome.artifacts.iter().map(|a| OutputDigest { file: a.name.clone(), sha256: a.sha256() }).collect(),
    };
    std::fs::write(dir.join(format!("{}.manifest.json", config.stem())), to_json(&manifest)?)?;
    Ok(manifest)
}

/// Validates, executes and writes one config.
pub fn run(config: ExperimentConfig, out: &Path, timing: bool) -> Result<(RunManifest, Outcome), CliError> {
    let start = Instant::now();
    let plan = Plan::new(config, timing)?;
    let outcome = plan.execute()?;
    let manifest = write_outputs(out, &plan.config, &outcome, start.elapsed().as_millis() as u64)?;
    Ok((manifest, outcome))
}

/// The manifest path for `config` under `out`.
pub fn manifest_path(out: &Path, config: &ExperimentConfig) -> PathBuf {
    out.join(format!("{}.manifest.json", config.stem()))
}
