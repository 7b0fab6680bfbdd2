//! The measures `ν_N` on `V_N` and the geometry of high-dimensional balls.
//!
//! `ν_N` is the normalized uniform measure on the L² ball of radius `R_N` in
//! `V_N`. Since `‖f‖₂² = N⁻¹·Σ‖f_i‖²`, this is the Euclidean ball of radius
//! `R_N·√N` in block coordinates. The Gaussian variant draws every coordinate
//! independently with standard deviation `R_N`.

use std::sync::Arc;

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::beta::checked_beta_reg;

use crate::liegroup::LieContext;
use crate::pathspace::StepPath;
use crate::rng::{par_samples, Rng};
use crate::stats::{proportion, MeanSe};
use crate::{Error, Result};

/// `N ↦ R_N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RadiusSchedule {
    PowerLaw {
        #[serde(default = "one")]
        c: f64,
        alpha: f64,
    },
    /// Explicit `(N, R_N)` pairs.
    Table { table: Vec<(usize, f64)> },
}

fn one() -> f64 {
    1.0
}

impl Default for RadiusSchedule {
    fn default() -> Self {
        RadiusSchedule::PowerLaw { c: 1.0, alpha: 0.75 }
    }
}

impl RadiusSchedule {
    pub fn power_law(c: f64, alpha: f64) -> Result<Self> {
        let s = RadiusSchedule::PowerLaw { c, alpha };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            RadiusSchedule::PowerLaw { c, alpha } => {
                if !(*c > 0.0 && c.is_finite()) {
                    return Err(Error::Argument(format!("schedule constant c = {c} must be positive")));
                }
                if !alpha.is_finite() {
                    return Err(Error::Argument(format!("schedule exponent {alpha} is not finite")));
                }
            }
            RadiusSchedule::Table { table } => {
                if table.is_empty() {
                    return Err(Error::Argument("radius table is empty".into()));
                }
                for &(n, r) in table {
                    if n == 0 || !(r > 0.0 && r.is_finite()) {
                        return Err(Error::Argument(format!("bad table entry ({n}, {r})")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn radius(&self, n: usize) -> Result<f64> {
        if n == 0 {
            return Err(Error::Argument("N must be at least 1".into()));
        }
        match self {
            RadiusSchedule::PowerLaw { c, alpha } => Ok(c * (n as f64).powf(*alpha)),
            RadiusSchedule::Table { table } => table
                .iter()
                .find(|(m, _)| *m == n)
                .map(|(_, r)| *r)
                .ok_or_else(|| Error::Argument(format!("radius table has no entry for N = {n}"))),
        }
    }

    pub fn alpha(&self) -> Option<f64> {
        match self {
            RadiusSchedule::PowerLaw { alpha, .. } => Some(*alpha),
            RadiusSchedule::Table { .. } => None,
        }
    }

    /// Whether `R_N = ω(N^{1/2}) ∩ o(N/log N)` holds; tables are not judged.
    pub fn in_window(&self) -> bool {
        self.alpha().is_none_or(|a| a > 0.5 && a < 1.0)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Law {
    #[default]
    UniformBall,
    Gaussian,
}

#[derive(Clone, Debug)]
pub struct BallSpec {
    pub ctx: Arc<LieContext>,
    pub n: usize,
    pub radius: f64,
    pub law: Law,
}

impl BallSpec {
    pub fn new(ctx: Arc<LieContext>, n: usize, radius: f64, law: Law) -> Result<Self> {
        if n == 0 {
            return Err(Error::Argument("N must be at least 1".into()));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Argument(format!("radius {radius} must be positive")));
        }
        Ok(Self { ctx, n, radius, law })
    }

    pub fn from_schedule(ctx: Arc<LieContext>, n: usize, schedule: &RadiusSchedule, law: Law) -> Result<Self> {
        let r = schedule.radius(n)?;
        Self::new(ctx, n, r, law)
    }

    pub fn dim(&self) -> usize {
        self.n * self.ctx.algebra_dim()
    }

    /// Radius of the ball in block coordinates.
    pub fn coordinate_radius(&self) -> f64 {
        self.radius * (self.n as f64).sqrt()
    }

    /// Fills `out` (length `dim`) with one draw in block coordinates.
    pub fn sample_into(&self, rng: &mut Rng, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dim());
        for v in out.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        match self.law {
            Law::Gaussian => out.iter_mut().for_each(|v| *v *= self.radius),
            Law::UniformBall => {
                let norm = out.iter().map(|v| v * v).sum::<f64>().sqrt();
                let u: f64 = rng.random();
                let r = self.coordinate_radius() * u.powf(1.0 / out.len() as f64);
                out.iter_mut().for_each(|v| *v *= r / norm);
            }
        }
    }
}

/// One draw from `ν_N`.
pub fn sample_nu(spec: &BallSpec, rng: &mut Rng) -> StepPath {
    let mut data = vec![0.0; spec.dim()];
    spec.sample_into(rng, &mut data);
    StepPath::new(spec.ctx.clone(), spec.n, data).expect("length matches N·d")
}

fn beta_reg(a: f64, b: f64, x: f64) -> Result<f64> {
    checked_beta_reg(a, b, x).map_err(|e| Error::Domain(format!("incomplete beta I_{x}({a}, {b}): {e}")))
}

/// Fraction of `B_n + s·e₁` lying outside the unit ball `B_n`.
pub fn shifted_ball_overlap_exact(n: usize, s: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Argument("dimension must be at least 1".into()));
    }
    if !(s >= 0.0) {
        return Err(Error::Argument(format!("shift {s} must be nonnegative")));
    }
    if s == 0.0 {
        return Ok(0.0);
    }
    if s >= 2.0 {
        return Ok(1.0);
    }
    // The lens B ∩ (B + s·e₁) is two caps {x₁ ≥ s/2}; the cap mass of the
    // uniform ball is ½·I_{1−a²}((n+1)/2, ½), and its complement is
    // I_{a²}(½, (n+1)/2).
    let a = s / 2.0;
    beta_reg(0.5, (n as f64 + 1.0) / 2.0, a * a)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub estimate: f64,
    pub std_error: f64,
    pub m: usize,
}

impl From<MeanSe> for Estimate {
    fn from(m: MeanSe) -> Self {
        Estimate { estimate: m.mean, std_error: m.std_error, m: m.n }
    }
}

/// Radius and first direction cosine of a uniform point in `B_n`.
fn ball_radial_first(n: usize, rng: &mut Rng) -> (f64, f64) {
    let mut ss = 0.0;
    let mut z1 = 0.0;
    for i in 0..n {
        let z: f64 = rng.sample(StandardNormal);
        if i == 0 {
            z1 = z;
        }
        ss += z * z;
    }
    let u: f64 = rng.random();
    (u.powf(1.0 / n as f64), z1 / ss.sqrt())
}

const OVERLAP_STREAM: u64 = 0x6F76;
const LEVY_STREAM: u64 = 0x6C76;
const BLOCK_STREAM: u64 = 0x626D;

fn hit_fraction(m: usize, seed: u64, stream: u64, hit: impl Fn(&mut Rng) -> bool + Sync) -> Estimate {
    let xs = par_samples(m, seed, stream, |rng| if hit(rng) { 1.0 } else { 0.0 });
    let hits = xs.iter().filter(|&&v| v == 1.0).count();
    proportion(hits, m).into()
}

/// Monte Carlo estimate of [`shifted_ball_overlap_exact`].
pub fn shifted_ball_overlap_mc(n: usize, s: f64, m: usize, seed: u64) -> Result<Estimate> {
    if n == 0 {
        return Err(Error::Argument("dimension must be at least 1".into()));
    }
    if m < 100 {
        return Err(Error::Argument(format!("M = {m} is below the minimum of 100")));
    }
    if !(s >= 0.0) {
        return Err(Error::Argument(format!("shift {s} must be nonnegative")));
    }
    Ok(hit_fraction(m, seed, OVERLAP_STREAM, |rng| {
        let (r, u1) = ball_radial_first(n, rng);
        r * r - 2.0 * s * r * u1 + s * s > 1.0
    }))
}

/// `P(|x₁| > ε)` for `x` uniform in `B_n`.
pub fn levy_tail_exact(n: usize, eps: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Argument("dimension must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::Argument(format!("ε = {eps} must lie in [0, 1]")));
    }
    beta_reg((n as f64 + 1.0) / 2.0, 0.5, 1.0 - eps * eps)
}

/// Concentration bound `2·exp(−ε²n/4)` dominating [`levy_tail_exact`].
pub fn levy_bound(n: usize, eps: f64) -> f64 {
    2.0 * (-eps * eps * n as f64 / 4.0).exp()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LevyTail {
    pub n: usize,
    pub eps: f64,
    pub exact: f64,
    pub empirical: Estimate,
    pub bound: f64,
}

pub fn levy_tail(n: usize, eps: f64, m: usize, seed: u64) -> Result<LevyTail> {
    let exact = levy_tail_exact(n, eps)?;
    if m < 100 {
        return Err(Error::Argument(format!("M = {m} is below the minimum of 100")));
    }
    let empirical = hit_fraction(m, seed, LEVY_STREAM, |rng| {
        let (r, u1) = ball_radial_first(n, rng);
        (r * u1).abs() > eps
    });
    Ok(LevyTail { n, eps, exact, empirical, bound: levy_bound(n, eps) })
}

/// Threshold on block coordinate norms defining `A_N`: `R·log N`, the
/// condition `N^{−1/2}‖f_i‖ ≤ N^{−1/2}·log N` rescaled to a ball of L² radius `R`.
pub fn block_max_threshold(spec: &BallSpec) -> f64 {
    spec.radius * (spec.n as f64).ln()
}

/// Empirical `ν_N{f : max_i ‖f_i‖ ≤ threshold}`.
pub fn block_max_fraction(spec: &BallSpec, threshold: f64, m: usize, seed: u64) -> Result<Estimate> {
    if spec.law != Law::UniformBall {
        return Err(Error::Argument("the block maximum statistic needs the uniform law".into()));
    }
    if m == 0 {
        return Err(Error::Argument("M must be positive".into()));
    }
    let d = spec.ctx.algebra_dim();
    Ok(hit_fraction(m, seed, BLOCK_STREAM, |rng| {
        let mut buf = vec![0.0; spec.dim()];
        spec.sample_into(rng, &mut buf);
        buf.chunks(d).all(|b| b.iter().map(|v| v * v).sum::<f64>().sqrt() <= threshold)
    }))
}

/// Empirical `ν_N(A_N)`.
pub fn block_max_stat(spec: &BallSpec, m: usize, seed: u64) -> Result<Estimate> {
    block_max_fraction(spec, block_max_threshold(spec), m, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liegroup::{Family, LieContext};
    use crate::rng::seeded;

    /// `P(x₁ ≥ a)` for the uniform ball: the marginal density is
    /// `∝ (1 − t²)^{(n−1)/2}`, integrated by Simpson's rule after `t = cos θ`.
    fn cap_mass_quadrature(n: usize, a: f64) -> f64 {
        let dens = |th: f64| th.sin().powi(n as i32);
        let simpson = |lo: f64, hi: f64| {
            let k = 20_000;
            let h = (hi - lo) / k as f64;
            let mut s = dens(lo) + dens(hi);
            for i in 1..k {
                s += dens(lo + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            s * h / 3.0
        };
        simpson(0.0, a.acos()) / simpson(0.0, std::f64::consts::PI)
    }

    #[test]
    fn overlap_trivial_cases() {
        assert_eq!(shifted_ball_overlap_exact(5, 0.0).unwrap(), 0.0);
        assert_eq!(shifted_ball_overlap_exact(5, 2.0).unwrap(), 1.0);
        assert_eq!(shifted_ball_overlap_exact(5, 7.5).unwrap(), 1.0);
        assert!(shifted_ball_overlap_exact(5, -0.1).is_err());
    }

    #[test]
    fn overlap_three_ball_cap_formula() {
        let h: f64 = 0.5;
        let cap = std::f64::consts::PI * h * h * (3.0 - h) / 3.0;
        let ball = 4.0 * std::f64::consts::PI / 3.0;
        let oracle = 1.0 - 2.0 * cap / ball;
        assert!((oracle - 0.6875).abs() < 1e-15);
        assert!((shifted_ball_overlap_exact(3, 1.0).unwrap() - oracle).abs() < 1e-10);
    }

    #[test]
    fn overlap_matches_quadrature() {
        for &(n, s) in &[(2, 0.3), (7, 1.2), (24, 0.4), (60, 0.05)] {
            let oracle = 1.0 - 2.0 * cap_mass_quadrature(n, s / 2.0);
            let got = shifted_ball_overlap_exact(n, s).unwrap();
            assert!((got - oracle).abs() < 1e-8, "n={n} s={s}: {got} vs {oracle}");
        }
    }

    #[test]
    fn overlap_monotone_in_shift() {
        let mut prev = 0.0;
        for i in 1..=40 {
            let v = shifted_ball_overlap_exact(16, i as f64 * 0.05).unwrap();
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn overlap_sharp_threshold_trend() {
        let ns: Vec<usize> = (3..=9).map(|k| 1 << k).collect();
        let fast: Vec<f64> =
            ns.iter().map(|&n| shifted_ball_overlap_exact(n, (n as f64).powf(-0.6)).unwrap()).collect();
        let slow: Vec<f64> =
            ns.iter().map(|&n| shifted_ball_overlap_exact(n, (n as f64).powf(-0.4)).unwrap()).collect();
        assert!(fast.windows(2).all(|w| w[1] < w[0]), "{fast:?}");
        assert!(slow.windows(2).all(|w| w[1] > w[0]), "{slow:?}");
    }

    #[test]
    fn overlap_mc_exact_endpoints_and_agreement() {
        assert_eq!(shifted_ball_overlap_mc(4, 0.0, 500, 1).unwrap().estimate, 0.0);
        assert_eq!(shifted_ball_overlap_mc(4, 3.0, 500, 1).unwrap().estimate, 1.0);
        assert!(shifted_ball_overlap_mc(4, 1.0, 99, 1).is_err());
        let e = shifted_ball_overlap_mc(3, 1.0, 20_000, 11).unwrap();
        assert!((e.estimate - 0.6875).abs() < 4.0 * e.std_error);
    }

    #[test]
    fn levy_endpoints_and_bound() {
        assert_eq!(levy_tail_exact(10, 0.0).unwrap(), 1.0);
        assert_eq!(levy_tail_exact(10, 1.0).unwrap(), 0.0);
        assert!(levy_tail_exact(10, 1.1).is_err());
        for &n in &[24, 100, 192] {
            for &eps in &[0.1, 0.2, 0.5] {
                let exact = levy_tail_exact(n, eps).unwrap();
                assert!((exact - 2.0 * cap_mass_quadrature(n, eps)).abs() < 1e-8);
                assert!(exact <= levy_bound(n, eps));
            }
        }
    }

    #[test]
    fn levy_empirical_agrees() {
        let t = levy_tail(100, 0.2, 20_000, 5).unwrap();
        assert!((t.empirical.estimate - t.exact).abs() < 4.0 * t.empirical.std_error);
    }

    #[test]
    fn uniform_samples_stay_in_ball() {
        let ctx = Arc::new(LieContext::so3());
        let spec = BallSpec::new(ctx, 8, 2.5, Law::UniformBall).unwrap();
        let mut rng = seeded(2);
        for _ in 0..200 {
            let f = sample_nu(&spec, &mut rng);
            assert!(f.l2_norm() <= 2.5 * (1.0 + 1e-12));
        }
    }

    #[test]
    fn gaussian_coordinates_have_radius_scale() {
        let ctx = Arc::new(LieContext::so3());
        let spec = BallSpec::new(ctx, 4, 3.0, Law::Gaussian).unwrap();
        let mut rng = seeded(3);
        let mut ss = 0.0;
        let mut cnt = 0;
        for _ in 0..2000 {
            let f = sample_nu(&spec, &mut rng);
            ss += f.data().iter().map(|v| v * v).sum::<f64>();
            cnt += f.data().len();
        }
        let sd = (ss / cnt as f64).sqrt();
        assert!((sd - 3.0).abs() < 0.1, "{sd}");
    }

    #[test]
    fn block_max_trivial_cases() {
        let ctx = Arc::new(LieContext::new(Family::So { n: 3 }).unwrap());
        let one = BallSpec::new(ctx.clone(), 1, 2.0, Law::UniformBall).unwrap();
        assert_eq!(block_max_fraction(&one, 2.0 * 1.0001, 300, 1).unwrap().estimate, 1.0);
        let spec = BallSpec::new(ctx.clone(), 16, 8.0, Law::UniformBall).unwrap();
        assert_eq!(block_max_fraction(&spec, 0.0, 300, 1).unwrap().estimate, 0.0);
        let g = BallSpec::new(ctx, 16, 8.0, Law::Gaussian).unwrap();
        assert!(block_max_stat(&g, 300, 1).is_err());
    }

    #[test]
    fn schedule_behaviour() {
        let s = RadiusSchedule::default();
        assert_eq!(s.radius(16).unwrap(), 8.0);
        assert!(s.in_window());
        assert!(!RadiusSchedule::power_law(1.0, 0.4).unwrap().in_window());
        assert!(RadiusSchedule::power_law(0.0, 0.75).is_err());
        let t = RadiusSchedule::Table { table: vec![(4, 2.0)] };
        assert_eq!(t.radius(4).unwrap(), 2.0);
        assert!(t.radius(5).is_err());
        let parsed: RadiusSchedule = serde_json::from_str(r#"{"kind":"power-law","alpha":0.6}"#).unwrap();
        assert_eq!(parsed, RadiusSchedule::PowerLaw { c: 1.0, alpha: 0.6 });
        assert!(serde_json::from_str::<RadiusSchedule>(r#"{"kind":"power-law","c":2.0}"#).is_err());
    }
}
