//! Compact matrix Lie groups: `SO(n)` for `2 ≤ n ≤ 8` and `SU(2)` in its
//! real 4×4 embedding (left multiplication by unit quaternions on `ℝ⁴ ≅ ℍ`).
//!
//! Algebra elements are stored as coordinates in a basis that is orthonormal
//! for the Hilbert–Schmidt inner product `⟨A, B⟩ = tr(AᵀB)`, so Euclidean
//! norms of coordinate vectors are HS norms of the matrices they denote.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{matfn, Error, Result};

pub type Matrix = DMatrix<f64>;

/// Default membership and round-trip tolerance.
pub const DEFAULT_TOL: f64 = 1e-9;
/// Principal-branch radius for [`LieContext::log_group`], in HS distance from `I`.
pub const LOG_RADIUS: f64 = 1.9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Family {
    So { n: usize },
    Su2,
}

impl Family {
    /// Parses `so3`, `SO(3)`, `so(3)`, `su2` or `SU(2)`.
    pub fn parse(s: &str) -> Result<Self> {
        let t: String = s.chars().filter(|c| !matches!(c, '(' | ')' | ' ')).collect::<String>().to_ascii_lowercase();
        if t == "su2" {
            return Ok(Family::Su2);
        }
        if let Some(rest) = t.strip_prefix("so") {
            if let Ok(n) = rest.parse::<usize>() {
                return Ok(Family::So { n });
            }
        }
        Err(Error::Argument(format!("unknown group family '{s}'")))
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::So { n } => write!(f, "SO({n})"),
            Family::Su2 => write!(f, "SU(2)"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraElement {
    pub coords: DVector<f64>,
}

impl AlgebraElement {
    pub fn zeros(d: usize) -> Self {
        Self { coords: DVector::zeros(d) }
    }

    pub fn from_slice(c: &[f64]) -> Self {
        Self { coords: DVector::from_column_slice(c) }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// HS norm of the represented matrix.
    pub fn norm(&self) -> f64 {
        self.coords.norm()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { coords: &self.coords * s }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { coords: &self.coords + &other.coords }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { coords: &self.coords - &other.coords }
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.coords.dot(&other.coords)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupElement {
    pub matrix: Matrix,
}

impl GroupElement {
    pub fn identity(m: usize) -> Self {
        Self { matrix: Matrix::identity(m, m) }
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_exact_identity() {
            return other.clone();
        }
        if other.is_exact_identity() {
            return self.clone();
        }
        Self { matrix: &self.matrix * &other.matrix }
    }

    /// Inverse; all groups here are orthogonal, so this is the transpose.
    pub fn inverse(&self) -> Self {
        Self { matrix: self.matrix.transpose() }
    }

    /// True when the matrix is bit-for-bit the identity.
    pub fn is_exact_identity(&self) -> bool {
        let m = &self.matrix;
        (0..m.nrows()).all(|i| (0..m.ncols()).all(|j| m[(i, j)] == if i == j { 1.0 } else { 0.0 }))
    }

    /// Hilbert–Schmidt distance.
    pub fn dist(&self, other: &Self) -> f64 {
        (&self.matrix - &other.matrix).norm()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }
}

/// A concrete compact matrix group with an HS-orthonormal algebra basis.
#[derive(Clone, Debug)]
pub struct LieContext {
    family: Family,
    m: usize,
    basis: Vec<Matrix>,
    /// Matrices the group must commute with (right quaternion units for SU(2)).
    commutant: Vec<Matrix>,
    tol: f64,
    log_radius: f64,
}

impl PartialEq for LieContext {
    fn eq(&self, other: &Self) -> bool {
        self.family == other.family
    }
}

type Quat = [f64; 4];

fn quat_mul(p: Quat, q: Quat) -> Quat {
    [
        p[0] * q[0] - p[1] * q[1] - p[2] * q[2] - p[3] * q[3],
        p[0] * q[1] + p[1] * q[0] + p[2] * q[3] - p[3] * q[2],
        p[0] * q[2] - p[1] * q[3] + p[2] * q[0] + p[3] * q[1],
        p[0] * q[3] + p[1] * q[2] - p[2] * q[1] + p[3] * q[0],
    ]
}

fn unit(c: usize) -> Quat {
    let mut e = [0.0; 4];
    e[c] = 1.0;
    e
}

/// Matrix of `x ↦ p·x` on `ℍ ≅ ℝ⁴`.
fn left_mult(p: Quat) -> Matrix {
    Matrix::from_fn(4, 4, |r, c| quat_mul(p, unit(c))[r])
}

/// Matrix of `x ↦ x·p` on `ℍ ≅ ℝ⁴`.
fn right_mult(p: Quat) -> Matrix {
    Matrix::from_fn(4, 4, |r, c| quat_mul(unit(c), p)[r])
}

impl LieContext {
    pub fn new(family: Family) -> Result<Self> {
        match family {
            Family::So { n } => {
                if !(2..=8).contains(&n) {
                    return Err(Error::Argument(format!("SO(n) supported for 2 ≤ n ≤ 8, got n = {n}")));
                }
                let s = std::f64::consts::FRAC_1_SQRT_2;
                let mut basis = Vec::with_capacity(n * (n - 1) / 2);
                for i in 0..n {
                    for j in (i + 1)..n {
                        let mut b = Matrix::zeros(n, n);
                        b[(i, j)] = s;
                        b[(j, i)] = -s;
                        basis.push(b);
                    }
                }
                Ok(Self { family, m: n, basis, commutant: Vec::new(), tol: DEFAULT_TOL, log_radius: LOG_RADIUS })
            }
            Family::Su2 => {
                let basis = (1..4).map(|c| left_mult(unit(c)) * 0.5).collect();
                let commutant = (1..4).map(|c| right_mult(unit(c))).collect();
                Ok(Self { family, m: 4, basis, commutant, tol: DEFAULT_TOL, log_radius: LOG_RADIUS })
            }
        }
    }

    /// `SO(3)`, the default group.
    pub fn so3() -> Self {
        Self::new(Family::So { n: 3 }).expect("SO(3) is supported")
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_log_radius(mut self, radius: f64) -> Self {
        self.log_radius = radius;
        self
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn matrix_size(&self) -> usize {
        self.m
    }

    pub fn algebra_dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Matrix] {
        &self.basis
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn log_radius(&self) -> f64 {
        self.log_radius
    }

    pub fn is_abelian(&self) -> bool {
        self.algebra_dim() <= 1
    }

    pub fn basis_element(&self, i: usize) -> AlgebraElement {
        let mut x = AlgebraElement::zeros(self.algebra_dim());
        x.coords[i] = 1.0;
        x
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement::identity(self.m)
    }

    pub fn to_matrix(&self, x: &AlgebraElement) -> Matrix {
        self.matrix_of(x.coords.as_slice())
    }

    pub(crate) fn matrix_of(&self, coords: &[f64]) -> Matrix {
        let mut out = Matrix::zeros(self.m, self.m);
        for (c, b) in coords.iter().zip(&self.basis) {
            if *c != 0.0 {
                out += b * *c;
            }
        }
        out
    }

    /// Orthogonal projection of an arbitrary matrix onto the algebra, in coordinates.
    pub fn coords_of(&self, a: &Matrix) -> AlgebraElement {
        AlgebraElement { coords: DVector::from_iterator(self.basis.len(), self.basis.iter().map(|b| b.dot(a))) }
    }

    /// Membership defect of a matrix as a group element.
    pub fn group_defect(&self, g: &Matrix) -> f64 {
        let ident = Matrix::identity(self.m, self.m);
        let mut defect = (g.transpose() * g - ident).norm();
        defect = defect.max((g.determinant() - 1.0).abs());
        for c in &self.commutant {
            defect = defect.max((g * c - c * g).norm());
        }
        defect
    }

    pub fn is_group_member(&self, g: &GroupElement) -> bool {
        self.group_defect(&g.matrix) <= self.tol
    }

    /// Membership defect of a matrix as an algebra element.
    pub fn algebra_defect(&self, x: &Matrix) -> f64 {
        let mut defect = (x + x.transpose()).norm();
        for c in &self.commutant {
            defect = defect.max((x * c - c * x).norm());
        }
        defect
    }

    /// Gram matrix of the basis under the HS inner product.
    pub fn gram(&self) -> Matrix {
        let d = self.algebra_dim();
        Matrix::from_fn(d, d, |i, j| self.basis[i].dot(&self.basis[j]))
    }

    pub fn exp_alg(&self, x: &AlgebraElement) -> GroupElement {
        self.exp_coords(x.coords.as_slice())
    }

    pub(crate) fn exp_coords(&self, coords: &[f64]) -> GroupElement {
        if coords.iter().all(|&c| c == 0.0) {
            return self.identity();
        }
        GroupElement { matrix: matfn::expm(&self.matrix_of(coords)) }
    }

    /// Principal logarithm; fails outside `‖g − I‖_HS < log_radius`.
    pub fn log_group(&self, g: &GroupElement) -> Result<AlgebraElement> {
        if g.is_exact_identity() {
            return Ok(AlgebraElement::zeros(self.algebra_dim()));
        }
        let dist = g.dist(&self.identity());
        if !(dist < self.log_radius) {
            return Err(Error::Domain(format!(
                "‖g − I‖ = {dist:.6} is outside the logarithm radius {}",
                self.log_radius
            )));
        }
        let l = matfn::logm(&g.matrix)
            .ok_or_else(|| Error::Domain("matrix square root iteration failed to converge".into()))?;
        Ok(self.coords_of(&l))
    }

    /// `Ad_g X = g X g⁻¹`.
    pub fn ad(&self, g: &GroupElement, x: &AlgebraElement) -> AlgebraElement {
        if g.is_exact_identity() {
            return x.clone();
        }
        let mx = self.to_matrix(x);
        self.coords_of(&(&g.matrix * mx * g.matrix.transpose()))
    }

    /// Matrix of `Ad_g` acting on coordinates. Exact identity for `g = e`.
    pub fn ad_matrix(&self, g: &GroupElement) -> Matrix {
        let d = self.algebra_dim();
        if g.is_exact_identity() {
            return Matrix::identity(d, d);
        }
        let gt = g.matrix.transpose();
        let mut out = Matrix::zeros(d, d);
        for (k, b) in self.basis.iter().enumerate() {
            let img = &g.matrix * b * &gt;
            for (j, bj) in self.basis.iter().enumerate() {
                out[(j, k)] = bj.dot(&img);
            }
        }
        out
    }

    /// Projects onto the group when the membership defect exceeds `tol`.
    pub fn repair(&self, g: GroupElement) -> GroupElement {
        if self.group_defect(&g.matrix) <= self.tol {
            g
        } else {
            GroupElement { matrix: matfn::polar(&g.matrix) }
        }
    }

    /// A Haar-distributed group element.
    pub fn haar_sample<R: Rng + ?Sized>(&self, rng: &mut R) -> GroupElement {
        match self.family {
            Family::Su2 => {
                let mut q = [0.0; 4];
                for v in &mut q {
                    *v = rng.sample(StandardNormal);
                }
                let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
                q.iter_mut().for_each(|v| *v /= n);
                GroupElement { matrix: left_mult(q) }
            }
            Family::So { n } => {
                let z = Matrix::from_fn(n, n, |_, _| rng.sample(StandardNormal));
                let qr = z.qr();
                let r = qr.r();
                let mut q = qr.q();
                for j in 0..n {
                    if r[(j, j)] < 0.0 {
                        q.column_mut(j).neg_mut();
                    }
                }
                if q.determinant() < 0.0 {
                    q.column_mut(0).neg_mut();
                }
                GroupElement { matrix: q }
            }
        }
    }

    /// Uniform on the coordinate sphere of radius `norm`.
    pub fn random_algebra<R: Rng + ?Sized>(&self, rng: &mut R, norm: f64) -> AlgebraElement {
        let d = self.algebra_dim();
        if norm == 0.0 {
            return AlgebraElement::zeros(d);
        }
        loop {
            let v = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
            let n = v.norm();
            if n > 0.0 {
                return AlgebraElement { coords: v * (norm / n) };
            }
        }
    }
}
