//! Step-function paths in `L²((0,1), 𝔤)` and grid-sampled paths in `G`.
//!
//! A [`StepPath`] with `N` blocks is an element of `V_N`: it is constant on each
//! `[i/N, (i+1)/N)`. Its L² norm carries the `1/N` cell weight, so refining a
//! path (splitting every block into `k` equal blocks) leaves every norm and
//! inner product unchanged.
//!
//! A [`GroupPath`] stores `K + 1` nodes at `t_k = k/K`. Between nodes it is read
//! as the geodesic `exp(s·log(g_{k+1} g_k⁻¹))·g_k`, which is exact for paths
//! produced by [`develop`] and for one-parameter subgroups.
//!
//! Wherever a pointwise `Ad` has to be frozen on a cell (the `∗` law,
//! [`ad_path`], the cocycle residual) the cell midpoint is used.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::liegroup::{AlgebraElement, Family, GroupElement, LieContext, Matrix};
use crate::{Error, Result};

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub(crate) fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

fn check_ctx(a: &LieContext, b: &LieContext) -> Result<()> {
    if a.family() == b.family() {
        Ok(())
    } else {
        Err(Error::ContextMismatch(a.family().to_string(), b.family().to_string()))
    }
}

/// An element of `V_N`: `N` blocks of algebra coordinates, row-major.
#[derive(Clone, Debug)]
pub struct StepPath {
    ctx: Arc<LieContext>,
    n: usize,
    data: Vec<f64>,
}

impl PartialEq for StepPath {
    fn eq(&self, other: &Self) -> bool {
        self.ctx.family() == other.ctx.family() && self.n == other.n && self.data == other.data
    }
}

impl StepPath {
    pub fn new(ctx: Arc<LieContext>, n: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Argument("a step path needs at least one block".into()));
        }
        let d = ctx.algebra_dim();
        if data.len() != n * d {
            return Err(Error::Argument(format!("expected {} coordinates, got {}", n * d, data.len())));
        }
        Ok(Self { ctx, n, data })
    }

    pub fn zeros(ctx: Arc<LieContext>, n: usize) -> Self {
        let len = n * ctx.algebra_dim();
        Self { ctx, n, data: vec![0.0; len] }
    }

    pub fn constant(ctx: Arc<LieContext>, n: usize, x: &AlgebraElement) -> Self {
        let data = (0..n).flat_map(|_| x.coords.iter().copied()).collect();
        Self { ctx, n, data }
    }

    pub fn from_blocks(ctx: Arc<LieContext>, blocks: &[AlgebraElement]) -> Result<Self> {
        let data = blocks.iter().flat_map(|b| b.coords.iter().copied()).collect();
        Self::new(ctx, blocks.len(), data)
    }

    /// Random element of `V_N` with i.i.d. Gaussian coordinates, rescaled to
    /// the requested L² norm.
    pub fn random<R: Rng + ?Sized>(ctx: Arc<LieContext>, n: usize, l2: f64, rng: &mut R) -> Self {
        let len = n * ctx.algebra_dim();
        let data: Vec<f64> = (0..len).map(|_| rng.sample(rand_distr::StandardNormal)).collect();
        let p = Self { ctx, n, data };
        let norm = p.l2_norm();
        if norm > 0.0 {
            p.scale(l2 / norm)
        } else {
            p
        }
    }

    pub fn ctx(&self) -> &Arc<LieContext> {
        &self.ctx
    }

    /// Number of blocks `N`.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn algebra_dim(&self) -> usize {
        self.ctx.algebra_dim()
    }

    /// Dimension `N·d` of `V_N`.
    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn block(&self, i: usize) -> &[f64] {
        let d = self.algebra_dim();
        &self.data[i * d..(i + 1) * d]
    }

    pub fn block_element(&self, i: usize) -> AlgebraElement {
        AlgebraElement::from_slice(self.block(i))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0.0)
    }

    pub fn l2_norm_sq(&self) -> f64 {
        // Neumaier summation: a constant path of block norm c gets norm c.
        let (mut sum, mut comp) = (0.0f64, 0.0f64);
        for x in &self.data {
            let v = x * x;
            let t = sum + v;
            comp += if sum.abs() >= v { (sum - t) + v } else { (v - t) + sum };
            sum = t;
        }
        (sum + comp) / self.n as f64
    }

    /// `(1/N · Σ‖f_i‖²)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    /// Largest block norm `max_i ‖f_i‖`.
    pub fn max_block_norm(&self) -> f64 {
        self.data.chunks(self.algebra_dim()).map(|b| b.iter().map(|x| x * x).sum::<f64>().sqrt()).fold(0.0, f64::max)
    }

    /// Splits every block into `k` equal blocks.
    pub fn refine(&self, k: usize) -> Self {
        assert!(k > 0, "refinement factor must be positive");
        if k == 1 {
            return self.clone();
        }
        let d = self.algebra_dim();
        let mut data = Vec::with_capacity(self.data.len() * k);
        for b in self.data.chunks(d) {
            for _ in 0..k {
                data.extend_from_slice(b);
            }
        }
        Self { ctx: self.ctx.clone(), n: self.n * k, data }
    }

    /// Refines onto `m` blocks; `m` must be a multiple of `N`.
    pub fn refine_to(&self, m: usize) -> Result<Self> {
        if m == 0 || m % self.n != 0 {
            return Err(Error::Argument(format!("{m} blocks is not a refinement of {} blocks", self.n)));
        }
        Ok(self.refine(m / self.n))
    }

    /// Both paths refined onto `lcm(N_a, N_b)` blocks.
    pub fn common(a: &Self, b: &Self) -> Result<(Self, Self)> {
        check_ctx(&a.ctx, &b.ctx)?;
        let m = lcm(a.n, b.n);
        Ok((a.refine(m / a.n), b.refine(m / b.n)))
    }

    /// `⟨f, g⟩₂`, refining to a common grid when needed.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        check_ctx(&self.ctx, &other.ctx)?;
        if self.n == other.n {
            return Ok(dot(&self.data, &other.data) / self.n as f64);
        }
        let (a, b) = Self::common(self, other)?;
        Ok(dot(&a.data, &b.data) / a.n as f64)
    }

    fn zip_with(&self, other: &Self, op: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let (a, b) = if self.n == other.n {
            check_ctx(&self.ctx, &other.ctx)?;
            (self.clone(), other.clone())
        } else {
            Self::common(self, other)?
        };
        let data = a.data.iter().zip(&b.data).map(|(x, y)| op(*x, *y)).collect();
        Ok(Self { ctx: a.ctx, n: a.n, data })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |x, y| x + y)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |x, y| x - y)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { ctx: self.ctx.clone(), n: self.n, data: self.data.iter().map(|x| x * s).collect() }
    }

    pub fn neg(&self) -> Self {
        Self { ctx: self.ctx.clone(), n: self.n, data: self.data.iter().map(|x| -x).collect() }
    }

    /// Blockwise constant conjugation `Ad_c f`.
    pub fn ad_const(&self, c: &GroupElement) -> Self {
        let field = AdField::constant(&self.ctx, c, self.n);
        field.apply(self).expect("grid sizes agree by construction")
    }

    pub fn norms(&self) -> Result<PathNormReport> {
        let g = develop(self, self.n)?;
        let mut report = g.norms()?;
        report.l2_of_log_derivative = self.l2_norm();
        Ok(report)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&StepPathJson {
            ctx: self.ctx.family(),
            n: self.n,
            class: "step".into(),
            data: self.data.clone(),
        })
        .expect("plain data serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: StepPathJson = serde_json::from_str(s).map_err(|e| Error::Argument(e.to_string()))?;
        if raw.class != "step" {
            return Err(Error::Argument(format!("expected class 'step', got '{}'", raw.class)));
        }
        Self::new(Arc::new(LieContext::new(raw.ctx)?), raw.n, raw.data)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StepPathJson {
    ctx: Family,
    #[serde(rename = "N")]
    n: usize,
    class: String,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GroupPathJson {
    ctx: Family,
    #[serde(rename = "K")]
    k: usize,
    class: PathClass,
    data: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathClass {
    FreePath,
    BasedPath,
    FreeLoop,
    BasedLoop,
}

impl PathClass {
    pub fn is_based(self) -> bool {
        matches!(self, PathClass::BasedPath | PathClass::BasedLoop)
    }

    pub fn is_loop(self) -> bool {
        matches!(self, PathClass::FreeLoop | PathClass::BasedLoop)
    }
}

/// A path `[0,1] → G` sampled at `t_k = k/K`, `k = 0..=K`.
#[derive(Clone, Debug)]
pub struct GroupPath {
    ctx: Arc<LieContext>,
    nodes: Vec<GroupElement>,
    class: PathClass,
}

impl GroupPath {
    /// Validates the class invariants and node membership within `10·tol`.
    pub fn new(ctx: Arc<LieContext>, nodes: Vec<GroupElement>, class: PathClass) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::Argument("a group path needs at least two nodes".into()));
        }
        let p = Self { ctx, nodes, class };
        let tol = 10.0 * p.ctx.tol();
        if let Some(k) = p.nodes.iter().position(|g| p.ctx.group_defect(&g.matrix) > tol) {
            return Err(Error::Argument(format!("node {k} is not a group element")));
        }
        if class.is_based() && !p.satisfies_based(tol) {
            return Err(Error::Argument("based path must start at the identity".into()));
        }
        if class.is_loop() && !p.satisfies_loop(tol) {
            return Err(Error::Argument("loop must end where it starts".into()));
        }
        Ok(p)
    }

    pub(crate) fn from_nodes_unchecked(ctx: Arc<LieContext>, nodes: Vec<GroupElement>, class: PathClass) -> Self {
        Self { ctx, nodes, class }
    }

    pub fn constant(ctx: Arc<LieContext>, g: GroupElement, k: usize) -> Result<Self> {
        let class = if g.is_exact_identity() { PathClass::BasedLoop } else { PathClass::FreeLoop };
        Self::new(ctx, vec![g; k + 1], class)
    }

    /// One-parameter subgroup `t ↦ exp(tX)` on `K` cells.
    pub fn geodesic(ctx: Arc<LieContext>, x: &AlgebraElement, k: usize) -> Result<Self> {
        let nodes = (0..=k).map(|j| ctx.exp_alg(&x.scale(j as f64 / k as f64))).collect();
        Self::new(ctx, nodes, PathClass::BasedPath)
    }

    pub fn ctx(&self) -> &Arc<LieContext> {
        &self.ctx
    }

    /// Number of cells `K`.
    pub fn k(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn nodes(&self) -> &[GroupElement] {
        &self.nodes
    }

    pub fn node(&self, k: usize) -> &GroupElement {
        &self.nodes[k]
    }

    pub fn class(&self) -> PathClass {
        self.class
    }

    pub fn satisfies_based(&self, tol: f64) -> bool {
        self.nodes[0].dist(&self.ctx.identity()) <= tol
    }

    pub fn satisfies_loop(&self, tol: f64) -> bool {
        self.nodes[self.k()].dist(&self.nodes[0]) <= tol
    }

    /// Worst node membership defect.
    pub fn membership_defect(&self) -> f64 {
        self.nodes.iter().map(|g| self.ctx.group_defect(&g.matrix)).fold(0.0, f64::max)
    }

    /// Geodesic point at fraction `s ∈ [0,1]` of cell `k`.
    fn interpolate(&self, k: usize, s: f64) -> Result<GroupElement> {
        let (a, b) = (&self.nodes[k], &self.nodes[k + 1]);
        if s == 0.0 || a == b {
            return Ok(a.clone());
        }
        let inc = self.ctx.log_group(&b.mul(&a.inverse()))?;
        Ok(self.ctx.exp_alg(&inc.scale(s)).mul(a))
    }

    /// Value at the midpoint of cell `k`.
    pub fn midpoint(&self, k: usize) -> Result<GroupElement> {
        self.interpolate(k, 0.5)
    }

    /// Value at `t ∈ [0,1]`.
    pub fn eval(&self, t: f64) -> Result<GroupElement> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Range(t));
        }
        let kk = self.k();
        let pos = t * kk as f64;
        let cell = (pos.floor() as usize).min(kk - 1);
        let frac = pos - cell as f64;
        if frac == 1.0 {
            return Ok(self.nodes[cell + 1].clone());
        }
        self.interpolate(cell, frac)
    }

    /// Pointwise product `t ↦ self(t)·other(t)`.
    pub fn pointwise_mul(&self, other: &Self) -> Result<Self> {
        check_ctx(&self.ctx, &other.ctx)?;
        if self.k() != other.k() {
            return Err(Error::Argument(format!("grids differ: {} vs {}", self.k(), other.k())));
        }
        let nodes = self.nodes.iter().zip(&other.nodes).map(|(a, b)| self.ctx.repair(a.mul(b))).collect();
        let class =
            match (self.class.is_based() && other.class.is_based(), self.class.is_loop() && other.class.is_loop()) {
                (true, true) => PathClass::BasedLoop,
                (true, false) => PathClass::BasedPath,
                (false, true) => PathClass::FreeLoop,
                (false, false) => PathClass::FreePath,
            };
        Ok(Self { ctx: self.ctx.clone(), nodes, class })
    }

    /// Pointwise inverse `t ↦ self(t)⁻¹`.
    pub fn pointwise_inverse(&self) -> Self {
        Self { ctx: self.ctx.clone(), nodes: self.nodes.iter().map(GroupElement::inverse).collect(), class: self.class }
    }

    /// L² norm of the discrete log derivative, the Sobolev norm
    /// `(‖g‖₂² + ‖g′‖₂²)^{1/2}` by grid quadrature, and the observed Hölder-½
    /// constant `max ‖g(t) − g(s)‖ / |t − s|^{1/2}` over all node pairs.
    pub fn norms(&self) -> Result<PathNormReport> {
        let kk = self.k();
        let kf = kk as f64;
        let ld = log_derivative(self)?;
        let value_sq: f64 =
            self.nodes.windows(2).map(|w| 0.5 * (w[0].matrix.norm_squared() + w[1].matrix.norm_squared())).sum::<f64>()
                / kf;
        let deriv_sq: f64 =
            self.nodes.windows(2).map(|w| (&w[1].matrix - &w[0].matrix).norm_squared()).sum::<f64>() * kf;
        let mut holder: f64 = 0.0;
        for i in 0..=kk {
            for j in (i + 1)..=kk {
                let gap = ((j - i) as f64 / kf).sqrt();
                holder = holder.max(self.nodes[i].dist(&self.nodes[j]) / gap);
            }
        }
        Ok(PathNormReport {
            l2_of_log_derivative: ld.l2_norm(),
            sobolev_norm: (value_sq + deriv_sq).sqrt(),
            holder_constant_observed: holder,
        })
    }

    pub fn to_json(&self) -> String {
        let data = self.nodes.iter().flat_map(|g| g.matrix.transpose().iter().copied().collect::<Vec<_>>()).collect();
        serde_json::to_string(&GroupPathJson { ctx: self.ctx.family(), k: self.k(), class: self.class, data })
            .expect("plain data serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: GroupPathJson = serde_json::from_str(s).map_err(|e| Error::Argument(e.to_string()))?;
        let ctx = Arc::new(LieContext::new(raw.ctx)?);
        let m = ctx.matrix_size();
        if raw.data.len() != (raw.k + 1) * m * m {
            return Err(Error::Argument("node data has the wrong length".into()));
        }
        let nodes = raw.data.chunks(m * m).map(|c| GroupElement { matrix: Matrix::from_row_slice(m, m, c) }).collect();
        Self::new(ctx, nodes, raw.class)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PathNormReport {
    pub l2_of_log_derivative: f64,
    pub sobolev_norm: f64,
    pub holder_constant_observed: f64,
}

/// A field of coordinate `Ad` matrices, one per cell, applied blockwise.
#[derive(Clone, Debug)]
pub struct AdField {
    d: usize,
    /// Row-major `d×d` per cell; `None` marks an exact identity.
    cells: Vec<Option<Vec<f64>>>,
}

impl AdField {
    pub fn from_elements(ctx: &LieContext, elems: &[GroupElement]) -> Self {
        let d = ctx.algebra_dim();
        let cells = elems
            .iter()
            .map(|g| {
                if g.is_exact_identity() {
                    None
                } else {
                    let a = ctx.ad_matrix(g);
                    Some(a.transpose().iter().copied().collect())
                }
            })
            .collect();
        Self { d, cells }
    }

    pub fn constant(ctx: &LieContext, g: &GroupElement, n: usize) -> Self {
        let one = Self::from_elements(ctx, std::slice::from_ref(g));
        Self { d: one.d, cells: vec![one.cells[0].clone(); n] }
    }

    /// `Ad` at the cell midpoints of `r`.
    pub fn at_midpoints(r: &GroupPath) -> Result<Self> {
        let mids = (0..r.k()).map(|k| r.midpoint(k)).collect::<Result<Vec<_>>>()?;
        Ok(Self::from_elements(&r.ctx, &mids))
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.cells.iter().all(Option::is_none)
    }

    /// Writes `Ad_i x_i` for every block into `out`.
    pub fn apply_slice(&self, x: &[f64], out: &mut [f64]) {
        let d = self.d;
        for (i, cell) in self.cells.iter().enumerate() {
            let src = &x[i * d..(i + 1) * d];
            let dst = &mut out[i * d..(i + 1) * d];
            match cell {
                None => dst.copy_from_slice(src),
                Some(a) => {
                    for r in 0..d {
                        dst[r] = dot(&a[r * d..(r + 1) * d], src);
                    }
                }
            }
        }
    }

    pub fn apply(&self, f: &StepPath) -> Result<StepPath> {
        if f.n != self.cells.len() {
            return Err(Error::Argument(format!("field has {} cells, path has {} blocks", self.cells.len(), f.n)));
        }
        let mut out = vec![0.0; f.data.len()];
        self.apply_slice(&f.data, &mut out);
        Ok(StepPath { ctx: f.ctx.clone(), n: f.n, data: out })
    }
}

/// `Π_0^t exp f(s) ds` for a step function: later intervals multiply on the left.
pub fn product_integral(f: &StepPath, t: f64) -> Result<GroupElement> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Range(t));
    }
    let ctx = &f.ctx;
    let n = f.n;
    let nf = n as f64;
    let j = ((t * nf).floor() as usize).min(n);
    let mut p = ctx.identity();
    for i in 0..j {
        let step = ctx.exp_coords(&scaled(f.block(i), 1.0 / nf));
        p = ctx.repair(step.mul(&p));
    }
    if j < n {
        let rest = t - j as f64 / nf;
        if rest > 0.0 {
            let step = ctx.exp_coords(&scaled(f.block(j), rest));
            p = ctx.repair(step.mul(&p));
        }
    }
    Ok(p)
}

fn scaled(x: &[f64], s: f64) -> Vec<f64> {
    x.iter().map(|v| v * s).collect()
}

/// `Π exp f` at every block midpoint `(i + ½)/N`, computed incrementally.
pub fn midpoint_transport(f: &StepPath) -> Vec<GroupElement> {
    let ctx = &f.ctx;
    let nf = f.n as f64;
    let mut p = ctx.identity();
    let mut out = Vec::with_capacity(f.n);
    for i in 0..f.n {
        let block = f.block(i);
        let half = ctx.exp_coords(&scaled(block, 0.5 / nf));
        out.push(ctx.repair(half.mul(&p)));
        let step = ctx.exp_coords(&scaled(block, 1.0 / nf));
        p = ctx.repair(step.mul(&p));
    }
    out
}

/// Samples `t ↦ Π_0^t exp f` on `K` cells as a based path. Either `K` is a
/// multiple of `N` or `N` is a multiple of `K`; one matrix product per node.
pub fn develop(f: &StepPath, k: usize) -> Result<GroupPath> {
    let ctx = f.ctx.clone();
    let n = f.n;
    if k == 0 || (k % n != 0 && n % k != 0) {
        return Err(Error::Argument(format!("grid of {k} cells is incompatible with {n} blocks")));
    }
    let mut nodes = Vec::with_capacity(k + 1);
    let mut p = ctx.identity();
    nodes.push(p.clone());
    if k % n == 0 {
        let per = k / n;
        for i in 0..n {
            let step = ctx.exp_coords(&scaled(f.block(i), 1.0 / k as f64));
            for _ in 0..per {
                p = ctx.repair(step.mul(&p));
                nodes.push(p.clone());
            }
        }
    } else {
        let per = n / k;
        for c in 0..k {
            let mut step = ctx.identity();
            for i in c * per..(c + 1) * per {
                step = ctx.exp_coords(&scaled(f.block(i), 1.0 / n as f64)).mul(&step);
            }
            p = ctx.repair(step.mul(&p));
            nodes.push(p.clone());
        }
    }
    Ok(GroupPath::from_nodes_unchecked(ctx, nodes, PathClass::BasedPath))
}

/// Discrete right logarithmic derivative: block `k` is
/// `K·log(g_{k+1} g_k⁻¹)`.
pub fn log_derivative(g: &GroupPath) -> Result<StepPath> {
    let ctx = g.ctx.clone();
    let kk = g.k();
    let d = ctx.algebra_dim();
    let mut data = Vec::with_capacity(kk * d);
    for (k, w) in g.nodes.windows(2).enumerate() {
        if w[0] == w[1] {
            data.extend(std::iter::repeat_n(0.0, d));
            continue;
        }
        let inc = w[1].mul(&w[0].inverse());
        let x = ctx.log_group(&inc).map_err(|e| match e {
            Error::Domain(msg) => Error::Domain(format!("increment {k}: {msg}; path too coarse")),
            other => other,
        })?;
        data.extend(x.coords.iter().map(|v| v * kk as f64));
    }
    StepPath::new(ctx, kk, data)
}

/// `f ∗ g = f + Ad_{Π exp f} g` on the common grid, with `Ad` frozen at block midpoints.
pub fn star(f: &StepPath, g: &StepPath) -> Result<StepPath> {
    let (f, g) = StepPath::common(f, g)?;
    if f.is_zero() {
        return Ok(g);
    }
    let field = AdField::from_elements(&f.ctx, &midpoint_transport(&f));
    let rotated = field.apply(&g)?;
    f.add(&rotated)
}

/// Inverse in `(L², ∗)`: block `i` is `−Ad_{P(m_i)⁻¹} f_i` with
/// `P = Π exp f` at the block midpoint `m_i`.
pub fn star_inverse(f: &StepPath) -> StepPath {
    if f.is_zero() {
        return f.clone();
    }
    let inv: Vec<GroupElement> = midpoint_transport(f).iter().map(GroupElement::inverse).collect();
    let field = AdField::from_elements(&f.ctx, &inv);
    field.apply(f).expect("field built on the same grid").neg()
}

/// Pointwise `Ad_r f` on the grid of `r`; `f` is refined onto it, and `r`
/// is read at cell midpoints.
pub fn ad_path(r: &GroupPath, f: &StepPath) -> Result<StepPath> {
    check_ctx(&r.ctx, &f.ctx)?;
    let fk = f
        .refine_to(r.k())
        .map_err(|_| Error::Argument(format!("path grid {} is not a multiple of {} blocks", r.k(), f.n)))?;
    AdField::at_midpoints(r)?.apply(&fk)
}

/// Step approximation `ρ` of `r`: the value `r(i/N)` on block `i`, encoded on
/// the grid of `r`.
pub fn step_approx(r: &GroupPath, n: usize) -> Result<GroupPath> {
    let kk = r.k();
    if n == 0 || kk % n != 0 {
        return Err(Error::Argument(format!("path grid {kk} is not a multiple of {n}")));
    }
    let per = kk / n;
    let nodes = (0..=kk).map(|k| r.nodes[(k / per).min(n - 1) * per].clone()).collect();
    let class = if r.class.is_based() { PathClass::BasedPath } else { PathClass::FreePath };
    Ok(GroupPath::from_nodes_unchecked(r.ctx.clone(), nodes, class))
}

/// `‖∂log(fg) − ∂log f − Ad_f ∂log g‖₂` on the common grid.
pub fn cocycle_residual(f: &GroupPath, g: &GroupPath) -> Result<f64> {
    let fg = f.pointwise_mul(g)?;
    let lhs = log_derivative(&fg)?;
    let lf = log_derivative(f)?;
    let lg = ad_path(f, &log_derivative(g)?)?;
    Ok(lhs.sub(&lf)?.sub(&lg)?.l2_norm())
}
