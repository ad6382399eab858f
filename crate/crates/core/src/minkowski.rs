//! Linear algebra of SO⁺(n,1) in the hyperboloid model, n ∈ {2,3,4}.
//!
//! The Minkowski form is `η = diag(1,…,1,−1)`; boundary points are null rays
//! scaled so that the last coordinate equals 1.

use std::fmt;

use nalgebra::{Complex, DMatrix, DVector, Schur, SVD};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tolerance;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("dimension {0} unsupported (need 2, 3 or 4)")]
    BadDimension(usize),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("matrix is not in SO+(n,1): {0}")]
    NotLorentz(String),
    #[error("vector is not a boundary point: {0}")]
    NotNull(String),
    #[error("boundary points coincide (angle {0:e})")]
    CoincidentEndpoints(f64),
    #[error("non-finite parameter")]
    NonFinite,
    #[error("element is not loxodromic ({0:?})")]
    NotLoxodromic(IsometryClass),
    #[error("logarithm outside the principal branch")]
    LogBranch,
    #[error("rotation unavailable: {0}")]
    Rotation(String),
}

pub type Result<T> = std::result::Result<T, GeometryError>;

pub fn check_dimension(n: usize) -> Result<()> {
    if (2..=4).contains(&n) {
        Ok(())
    } else {
        Err(GeometryError::BadDimension(n))
    }
}

/// `diag(1,…,1,−1)` of size `n+1`.
pub fn eta(n: usize) -> DMatrix<f64> {
    let mut e = DMatrix::identity(n + 1, n + 1);
    e[(n, n)] = -1.0;
    e
}

/// Minkowski inner product `uᵀηv`.
pub fn form(u: &DVector<f64>, v: &DVector<f64>) -> f64 {
    let k = u.len() - 1;
    u.rows(0, k).dot(&v.rows(0, k)) - u[k] * v[k]
}

/// `Xᵀ` with respect to the form: `η Xᵀ η`.
fn eta_transpose(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows() - 1;
    let mut t = m.transpose();
    for i in 0..n {
        t[(i, n)] = -t[(i, n)];
        t[(n, i)] = -t[(n, i)];
    }
    t
}

/// Relative form defect `‖MᵀηM − η‖_F / max(1, ‖M‖²_F)`.
pub fn form_defect(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows() - 1;
    let e = eta(n);
    let d = m.transpose() * &e * m - &e;
    d.norm() / m.norm_squared().max(1.0)
}

/// An element of SO⁺(n,1).
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct GroupElement {
    m: DMatrix<f64>,
}

impl fmt::Debug for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GroupElement{:?}", self.rows())
    }
}

impl fmt::Display for GroupElement {
    /// Row-major, one row per line, shortest round-trip decimals.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.m.nrows() {
            let row: Vec<String> = (0..self.m.ncols()).map(|j| format!("{}", self.m[(i, j)])).collect();
            writeln!(f, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

impl GroupElement {
    /// Validates the form, orientation and time orientation.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(GeometryError::NotLorentz("not square".into()));
        }
        check_dimension(m.nrows().saturating_sub(1))?;
        if m.iter().any(|x| !x.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let defect = form_defect(&m);
        if defect > tolerance::FORM {
            return Err(GeometryError::NotLorentz(format!("form defect {defect:e}")));
        }
        let n = m.nrows() - 1;
        if m[(n, n)] < 1.0 - 1e-9 {
            return Err(GeometryError::NotLorentz("reverses time orientation".into()));
        }
        let det = m.determinant();
        if det < 0.0 {
            return Err(GeometryError::NotLorentz(format!("determinant {det}")));
        }
        Ok(GroupElement { m })
    }

    /// Wraps a matrix known to be Lorentz (products and exponentials of valid elements).
    pub fn from_matrix_unchecked(m: DMatrix<f64>) -> Self {
        GroupElement { m }
    }

    pub fn identity(n: usize) -> Self {
        GroupElement { m: DMatrix::identity(n + 1, n + 1) }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows() - 1
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.m.nrows()).map(|i| self.m.row(i).iter().copied().collect()).collect()
    }

    pub fn mul(&self, other: &GroupElement) -> GroupElement {
        GroupElement { m: &self.m * &other.m }
    }

    /// Exact inverse `ηMᵀη`.
    pub fn inverse(&self) -> GroupElement {
        GroupElement { m: eta_transpose(&self.m) }
    }

    pub fn pow(&self, k: i64) -> GroupElement {
        let base = if k < 0 { self.inverse() } else { self.clone() };
        let mut acc = GroupElement::identity(self.dim());
        let mut b = base;
        let mut e = k.unsigned_abs();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&b);
            }
            b = b.mul(&b);
            e >>= 1;
        }
        acc
    }

    pub fn conjugate_by(&self, g: &GroupElement) -> GroupElement {
        g.mul(self).mul(&g.inverse())
    }

    pub fn act(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.m * v
    }

    pub fn act_boundary(&self, p: &BoundaryPoint) -> BoundaryPoint {
        BoundaryPoint::normalize_unchecked(self.act(p.vector()))
    }

    pub fn trace(&self) -> f64 {
        self.m.trace()
    }

    pub fn form_defect(&self) -> f64 {
        form_defect(&self.m)
    }

    pub fn frobenius_distance(&self, other: &GroupElement) -> f64 {
        (&self.m - &other.m).norm()
    }

    /// Relative commutator size `‖AB − BA‖_F / (‖A‖_F‖B‖_F)`.
    pub fn commutator_defect(&self, other: &GroupElement) -> f64 {
        let c = &self.m * &other.m - &other.m * &self.m;
        c.norm() / (self.m.norm() * other.m.norm())
    }

    /// Copies an SO⁺(k,1) element into the block acting on `e₁..e_k, e_{n+1}`.
    pub fn embed(&self, n: usize) -> Result<GroupElement> {
        check_dimension(n)?;
        let k = self.dim();
        if n < k {
            return Err(GeometryError::DimensionMismatch(k, n));
        }
        let mut m = DMatrix::identity(n + 1, n + 1);
        for i in 0..=k {
            for j in 0..=k {
                let (ii, jj) = (if i == k { n } else { i }, if j == k { n } else { j });
                m[(ii, jj)] = self.m[(i, j)];
            }
        }
        Ok(GroupElement { m })
    }
}

impl TryFrom<Vec<Vec<f64>>> for GroupElement {
    type Error = GeometryError;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        let r = rows.len();
        if rows.iter().any(|row| row.len() != r) {
            return Err(GeometryError::NotLorentz("ragged or non-square rows".into()));
        }
        GroupElement::new(DMatrix::from_fn(r, r, |i, j| rows[i][j]))
    }
}

impl From<GroupElement> for Vec<Vec<f64>> {
    fn from(g: GroupElement) -> Self {
        g.rows()
    }
}

/// An element of 𝔰𝔬(n,1): `Xᵀη + ηX = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LieVector {
    m: DMatrix<f64>,
}

impl LieVector {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        check_dimension(m.nrows().saturating_sub(1))?;
        let e = eta(m.nrows() - 1);
        let defect = (m.transpose() * &e + &e * &m).norm();
        if defect > tolerance::FORM * m.norm().max(1.0) {
            return Err(GeometryError::NotLorentz(format!("Lie algebra defect {defect:e}")));
        }
        Ok(LieVector { m })
    }

    /// Projects an arbitrary matrix onto the Lie algebra.
    pub fn project(m: &DMatrix<f64>) -> Self {
        LieVector { m: (m - eta_transpose(m)) * 0.5 }
    }

    pub fn zero(n: usize) -> Self {
        LieVector { m: DMatrix::zeros(n + 1, n + 1) }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows() - 1
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn scale(&self, s: f64) -> LieVector {
        LieVector { m: &self.m * s }
    }

    pub fn add(&self, other: &LieVector) -> LieVector {
        LieVector { m: &self.m + &other.m }
    }

    pub fn sub(&self, other: &LieVector) -> LieVector {
        LieVector { m: &self.m - &other.m }
    }

    /// Norm of the inner product `trace(XᵀY)`.
    pub fn norm(&self) -> f64 {
        self.m.norm()
    }

    /// `Ad(g)X = gXg⁻¹`.
    pub fn adjoint(&self, g: &GroupElement) -> LieVector {
        LieVector { m: g.matrix() * &self.m * g.inverse().matrix() }
    }
}

/// A point of ∂ℍⁿ: null, future pointing, last coordinate 1.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPoint {
    v: DVector<f64>,
}

impl BoundaryPoint {
    pub fn new(v: DVector<f64>) -> Result<Self> {
        check_dimension(v.len().saturating_sub(1))?;
        let k = v.len() - 1;
        if !(v[k] > 0.0) || v.iter().any(|x| !x.is_finite()) {
            return Err(GeometryError::NotNull("not future pointing".into()));
        }
        let p = BoundaryPoint::normalize_unchecked(v);
        let r = p.spatial_norm();
        if (r - 1.0).abs() > 1e-6 {
            return Err(GeometryError::NotNull(format!("spatial norm {r} after scaling")));
        }
        Ok(p)
    }

    /// The boundary point with the given spatial unit direction.
    pub fn from_direction(dir: &[f64]) -> Result<Self> {
        let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(GeometryError::NotNull("zero direction".into()));
        }
        let mut v = DVector::from_iterator(dir.len() + 1, dir.iter().map(|x| x / norm).chain([1.0]));
        v[dir.len()] = 1.0;
        BoundaryPoint::new(v)
    }

    /// Scales the ray to last coordinate 1 and snaps the spatial part to the unit sphere.
    pub fn normalize_unchecked(v: DVector<f64>) -> Self {
        let k = v.len() - 1;
        let last = v[k];
        let mut v = v / last;
        let r = v.rows(0, k).norm();
        for i in 0..k {
            v[i] /= r;
        }
        v[k] = 1.0;
        BoundaryPoint { v }
    }

    pub fn dim(&self) -> usize {
        self.v.len() - 1
    }

    pub fn vector(&self) -> &DVector<f64> {
        &self.v
    }

    pub fn spatial(&self) -> Vec<f64> {
        self.v.iter().take(self.dim()).copied().collect()
    }

    fn spatial_norm(&self) -> f64 {
        self.v.rows(0, self.dim()).norm()
    }

    /// Angle between the spatial directions.
    pub fn angle_to(&self, other: &BoundaryPoint) -> f64 {
        let k = self.dim();
        let c = self.v.rows(0, k).dot(&other.v.rows(0, k)).clamp(-1.0, 1.0);
        let s = (self.v.rows(0, k) - other.v.rows(0, k)).norm();
        // chord-based form is accurate for tiny angles
        if c > 0.9 {
            2.0 * (s / 2.0).asin()
        } else {
            c.acos()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IsometryClass {
    Loxodromic,
    Elliptic,
    ParabolicOrBoundary,
}

/// Eigenvalues via the real Schur form.
///
/// Deflation at machine epsilon can stall on clustered unit-modulus
/// eigenvalues (elliptic factors), so the tolerance is loosened stepwise and a
/// last attempt is made on an orthogonally conjugated copy.
pub fn eigenvalues(m: &DMatrix<f64>) -> Vec<Complex<f64>> {
    let attempt = |a: &DMatrix<f64>, eps: f64| Schur::try_new(a.clone(), eps, 500).map(|s| s.complex_eigenvalues());
    for eps in [f64::EPSILON, 1e-14, 1e-12] {
        if let Some(ev) = attempt(m, eps) {
            return ev.iter().copied().collect();
        }
    }
    let k = m.nrows();
    let q = fixed_orthogonal(k);
    let rotated = &q * m * q.transpose();
    if let Some(ev) = attempt(&rotated, 1e-12) {
        return ev.iter().copied().collect();
    }
    // eigenvalues clustered at 1: spread them out around the origin
    let shifted = m - DMatrix::identity(k, k);
    let scale = shifted.norm();
    if scale > 0.0 {
        if let Some(ev) = attempt(&(&shifted / scale), 1e-12) {
            return ev.iter().map(|z| Complex::new(1.0, 0.0) + z * scale).collect();
        }
    }
    polynomial_roots(&characteristic_polynomial(m))
}

/// Monic characteristic polynomial coefficients `[c₀, …, c_{k−1}]` (Faddeev–LeVerrier).
fn characteristic_polynomial(m: &DMatrix<f64>) -> Vec<f64> {
    let k = m.nrows();
    let mut coeffs = vec![0.0; k];
    let mut mk = DMatrix::zeros(k, k);
    let mut c = 1.0;
    for j in 1..=k {
        mk = m * &mk + DMatrix::identity(k, k) * c;
        c = -(m * &mk).trace() / j as f64;
        coeffs[k - j] = c;
    }
    coeffs
}

/// Roots of a monic polynomial by simultaneous (Durand–Kerner) iteration.
fn polynomial_roots(coeffs: &[f64]) -> Vec<Complex<f64>> {
    let k = coeffs.len();
    let eval = |z: Complex<f64>| coeffs.iter().rev().fold(Complex::new(1.0, 0.0), |acc, &c| acc * z + c);
    let radius = 1.0 + coeffs.iter().fold(0.0f64, |a, c| a.max(c.abs()));
    let mut roots: Vec<Complex<f64>> =
        (0..k).map(|i| Complex::from_polar(radius, 0.4 + std::f64::consts::TAU * i as f64 / k as f64)).collect();
    for _ in 0..2000 {
        let mut change: f64 = 0.0;
        for i in 0..k {
            let denom = (0..k).filter(|&j| j != i).fold(Complex::new(1.0, 0.0), |acc, j| acc * (roots[i] - roots[j]));
            if denom.norm() == 0.0 {
                continue;
            }
            let step = eval(roots[i]) / denom;
            roots[i] -= step;
            change = change.max(step.norm());
        }
        if change < 1e-15 * radius {
            break;
        }
    }
    roots
}

/// A fixed orthogonal matrix in general position (product of plane rotations).
fn fixed_orthogonal(k: usize) -> DMatrix<f64> {
    let mut q = DMatrix::identity(k, k);
    for i in 0..k {
        for j in (i + 1)..k {
            let a = 0.7 + 0.13 * (i * k + j) as f64;
            let mut r = DMatrix::identity(k, k);
            r[(i, i)] = a.cos();
            r[(j, j)] = a.cos();
            r[(i, j)] = -a.sin();
            r[(j, i)] = a.sin();
            q = r * q;
        }
    }
    q
}

/// Complex eigenvalue moduli.
pub fn eigenvalue_moduli(m: &DMatrix<f64>) -> Vec<f64> {
    eigenvalues(m).iter().map(|z| z.norm()).collect()
}

pub fn spectral_radius(g: &GroupElement) -> f64 {
    eigenvalue_moduli(g.matrix()).into_iter().fold(0.0, f64::max)
}

/// Singular values and `Vᵀ`, with a bounded iteration count.
fn svd_right(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    for eps in [f64::EPSILON, 1e-14, 1e-12] {
        if let Some(svd) = SVD::try_new(m.clone(), false, true, eps, 2000) {
            return (svd.singular_values, svd.v_t.expect("v_t requested"));
        }
    }
    panic!("SVD failed to converge")
}

/// Orthonormal basis of the numerical kernel, as columns.
fn kernel(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let (singular, v_t) = svd_right(m);
    let scale = m.norm().max(1.0);
    let rows: Vec<usize> = (0..singular.len())
        .filter(|&i| singular[i] <= tol * scale)
        .collect();
    DMatrix::from_fn(m.ncols(), rows.len(), |i, j| v_t[(rows[j], i)])
}

pub fn classify(g: &GroupElement) -> IsometryClass {
    let moduli = eigenvalue_moduli(g.matrix());
    let rho = moduli.iter().copied().fold(0.0, f64::max);
    if rho > 1.0 + tolerance::SPEC {
        return IsometryClass::Loxodromic;
    }
    if moduli.iter().all(|r| (r - 1.0).abs() <= tolerance::SPEC) {
        let n = g.dim();
        let k = kernel(&(g.matrix() - DMatrix::identity(n + 1, n + 1)), 1e-7);
        if k.ncols() > 0 {
            let gram = k.transpose() * eta(n) * &k;
            let gram = (&gram + gram.transpose()) * 0.5;
            if gram.symmetric_eigenvalues().iter().any(|&l| l < -1e-6) {
                return IsometryClass::Elliptic;
            }
        }
    }
    IsometryClass::ParabolicOrBoundary
}

fn require_loxodromic(g: &GroupElement) -> Result<()> {
    match classify(g) {
        IsometryClass::Loxodromic => Ok(()),
        c => Err(GeometryError::NotLoxodromic(c)),
    }
}

fn check_pair(x: &BoundaryPoint, y: &BoundaryPoint) -> Result<()> {
    if x.dim() != y.dim() {
        return Err(GeometryError::DimensionMismatch(x.dim(), y.dim()));
    }
    let a = x.angle_to(y);
    if a <= tolerance::SEP {
        return Err(GeometryError::CoincidentEndpoints(a));
    }
    Ok(())
}

/// Rotation-free translation by `t` along the geodesic from `x` to `y`.
pub fn hyperbolic_translation(x: &BoundaryPoint, y: &BoundaryPoint, t: f64) -> Result<GroupElement> {
    check_pair(x, y)?;
    if !t.is_finite() {
        return Err(GeometryError::NonFinite);
    }
    let n = x.dim();
    let (xv, yv) = (x.vector(), y.vector());
    let c = form(xv, yv);
    let e = eta(n);
    let yx = yv * (xv.transpose() * &e);
    let xy = xv * (yv.transpose() * &e);
    let m = DMatrix::identity(n + 1, n + 1) + yx * (t.exp_m1() / c) + xy * ((-t).exp_m1() / c);
    Ok(GroupElement { m })
}

/// Generator `v(x,y)` with `exp(t·v) = H(x,y,t)`.
pub fn lie_generator(x: &BoundaryPoint, y: &BoundaryPoint) -> Result<LieVector> {
    check_pair(x, y)?;
    let (xv, yv) = (x.vector(), y.vector());
    let c = form(xv, yv);
    let m = (yv * xv.transpose() - xv * yv.transpose()) * eta(x.dim()) / c;
    Ok(LieVector { m })
}

/// Largest-eigenvalue null eigenvector of a loxodromic matrix, unchecked.
fn attracting_vector(m: &DMatrix<f64>) -> DVector<f64> {
    let lambda = eigenvalue_moduli(m).into_iter().fold(0.0, f64::max);
    let k = m.nrows();
    let shifted = m - DMatrix::identity(k, k) * lambda;
    let (singular, v_t) = svd_right(&shifted);
    let (imin, _) = singular
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
    v_t.row(imin).transpose()
}

/// `(repelling, attracting)` fixed points.
pub fn fixed_points(g: &GroupElement) -> Result<(BoundaryPoint, BoundaryPoint)> {
    require_loxodromic(g)?;
    let att = BoundaryPoint::normalize_unchecked(attracting_vector(g.matrix()));
    let rep = BoundaryPoint::normalize_unchecked(attracting_vector(g.inverse().matrix()));
    Ok((rep, att))
}

pub fn translation_length(g: &GroupElement) -> Result<f64> {
    require_loxodromic(g)?;
    Ok(spectral_radius(g).ln())
}

/// `g = σθ` with `σ` rotation free along the axis of `g` and `θ` elliptic fixing the axis.
pub fn loxodromic_factorization(g: &GroupElement) -> Result<(GroupElement, GroupElement)> {
    let (p, q) = fixed_points(g)?;
    let l = translation_length(g)?;
    let sigma = hyperbolic_translation(&p, &q, l)?;
    let theta = reorthonormalize(&sigma.inverse().mul(g));
    Ok((sigma, theta))
}

/// Orthonormal basis of the η-orthogonal complement of `span(p,q)`, as columns.
pub(crate) fn complement_basis(p: &BoundaryPoint, q: &BoundaryPoint) -> Vec<DVector<f64>> {
    let n = p.dim();
    let (pv, qv) = (p.vector(), q.vector());
    let c = form(pv, qv);
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for i in 0..=n {
        if basis.len() == n - 1 {
            break;
        }
        let mut v = DVector::zeros(n + 1);
        v[i] = 1.0;
        v = &v - (pv * form(&v, qv) + qv * form(&v, pv)) / c;
        for b in &basis {
            v = &v - b * form(&v, b);
        }
        let nn = form(&v, &v);
        if nn > 0.1 {
            basis.push(v / nn.sqrt());
        }
    }
    basis
}

fn det_columns(cols: &[&DVector<f64>]) -> f64 {
    let k = cols.len();
    DMatrix::from_fn(k, k, |i, j| cols[j][i]).determinant()
}

/// Unit-speed rotation about the geodesic `p → q`.
///
/// For n = 3 the rotation plane is the full complement, oriented so that
/// `det[e_a, e_b, p, q] > 0`. For n = 4 the plane is the part of the complement
/// orthogonal to the projection `u` of `plane_normal`, oriented by
/// `det[e_a, e_b, u, p, q] > 0`.
pub fn rotation_generator(
    p: &BoundaryPoint,
    q: &BoundaryPoint,
    plane_normal: Option<&DVector<f64>>,
) -> Result<LieVector> {
    check_pair(p, q)?;
    let n = p.dim();
    let (pv, qv) = (p.vector(), q.vector());
    let (ea, eb) = match n {
        2 => return Err(GeometryError::Rotation("no rotations about a geodesic in H^2".into())),
        3 => {
            let b = complement_basis(p, q);
            let (ea, mut eb) = (b[0].clone(), b[1].clone());
            if det_columns(&[&ea, &eb, pv, qv]) < 0.0 {
                eb = -eb;
            }
            (ea, eb)
        }
        _ => {
            let h = plane_normal
                .ok_or_else(|| GeometryError::Rotation("n = 4 rotation needs a plane selector".into()))?;
            if h.len() != n + 1 {
                return Err(GeometryError::DimensionMismatch(h.len() - 1, n));
            }
            let c = form(pv, qv);
            let u = h - (pv * form(h, qv) + qv * form(h, pv)) / c;
            let uu = form(&u, &u);
            if !(uu > 1e-12) {
                return Err(GeometryError::Rotation("plane selector lies in the axis plane".into()));
            }
            let u = u / uu.sqrt();
            let mut plane = Vec::new();
            for b in complement_basis(p, q) {
                let mut v = &b - &u * form(&b, &u);
                for e in &plane {
                    v = &v - e * form(&v, e);
                }
                let nn = form(&v, &v);
                if nn > 0.1 {
                    plane.push(v / nn.sqrt());
                }
            }
            let (ea, mut eb) = (plane[0].clone(), plane[1].clone());
            if det_columns(&[&ea, &eb, &u, pv, qv]) < 0.0 {
                eb = -eb;
            }
            (ea, eb)
        }
    };
    let m = (&eb * ea.transpose() - &ea * eb.transpose()) * eta(n);
    Ok(LieVector { m })
}

/// Matrix exponential (Padé approximant with scaling and squaring).
pub fn exp_lie(x: &LieVector) -> GroupElement {
    reorthonormalize(&GroupElement { m: x.matrix().exp() })
}

/// `exp(a·T + b·R)` in closed form, for a unit translation `T` (`T³ = T`) and a
/// unit rotation `R` (`R³ = −R`) about the same geodesic, so that `TR = RT = 0`.
/// Stays accurate when the axis is far from the origin and Padé squaring is not.
pub fn exp_axial(translation: &LieVector, a: f64, rotation: Option<&LieVector>, b: f64) -> GroupElement {
    let t = &translation.m;
    let k = t.nrows();
    let mut m = DMatrix::identity(k, k) + t * a.sinh() + (t * t) * (a.cosh() - 1.0);
    if let Some(r) = rotation {
        let r = &r.m;
        m += r * b.sin() + (r * r) * (1.0 - b.cos());
    }
    GroupElement { m }
}

/// Denman–Beavers square root.
fn sqrtm(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let k = m.nrows();
    let mut y = m.clone();
    let mut z = DMatrix::identity(k, k);
    for _ in 0..100 {
        let yi = y.clone().try_inverse()?;
        let zi = z.clone().try_inverse()?;
        let y1 = (&y + zi) * 0.5;
        let z1 = (&z + yi) * 0.5;
        let delta = (&y1 - &y).norm() / y1.norm();
        y = y1;
        z = z1;
        if delta < 1e-15 {
            break;
        }
    }
    Some(y)
}

/// Principal logarithm.
pub fn log_group(g: &GroupElement) -> Result<LieVector> {
    let m = g.matrix();
    let k = m.nrows();
    let id = DMatrix::identity(k, k);
    for z in eigenvalues(m) {
        if z.arg().abs() > std::f64::consts::PI - 1e-6 {
            return Err(GeometryError::LogBranch);
        }
    }
    let mut a = m.clone();
    let mut squarings = 0;
    while (&a - &id).norm() >= 0.1 {
        if squarings > 60 {
            return Err(GeometryError::LogBranch);
        }
        a = sqrtm(&a).ok_or(GeometryError::LogBranch)?;
        squarings += 1;
    }
    let x = &a - &id;
    let mut term = x.clone();
    let mut sum = DMatrix::zeros(k, k);
    for j in 1..200 {
        let contrib = &term / j as f64;
        if j % 2 == 1 {
            sum += &contrib;
        } else {
            sum -= &contrib;
        }
        if contrib.norm() < 1e-18 * sum.norm().max(1e-300) {
            break;
        }
        term = &term * &x;
    }
    sum *= 2f64.powi(squarings);
    if sum.iter().any(|v| !v.is_finite()) {
        return Err(GeometryError::LogBranch);
    }
    Ok(LieVector::project(&sum))
}

/// Distance from [`group_distance`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Distance {
    pub value: f64,
    /// True when the logarithm failed and the Frobenius distance was used.
    pub fallback: bool,
}

/// `‖log(M₁⁻¹M₂)‖`, or the Frobenius distance with a flag when the log fails.
pub fn group_distance(a: &GroupElement, b: &GroupElement) -> Distance {
    let rel = a.inverse().mul(b);
    match log_group(&rel) {
        Ok(x) => Distance { value: x.norm(), fallback: false },
        Err(_) => Distance { value: a.frobenius_distance(b), fallback: true },
    }
}

/// η-Gram–Schmidt on the columns, applied only when the form defect exceeds [`tolerance::REORTHO`].
pub fn reorthonormalize(g: &GroupElement) -> GroupElement {
    if form_defect(g.matrix()) <= tolerance::REORTHO {
        return g.clone();
    }
    let m = g.matrix();
    let n = g.dim();
    let mut cols: Vec<DVector<f64>> = (0..=n).map(|j| m.column(j).into_owned()).collect();
    let mut time = cols[n].clone();
    time /= (-form(&time, &time)).sqrt();
    if time[n] < 0.0 {
        time = -time;
    }
    cols[n] = time;
    for j in 0..n {
        let mut v = cols[j].clone();
        v = &v + &cols[n] * form(&v, &cols[n]);
        for i in 0..j {
            v = &v - &cols[i] * form(&v, &cols[i]);
        }
        cols[j] = &v / form(&v, &v).sqrt();
    }
    GroupElement { m: DMatrix::from_columns(&cols) }
}

/// Boost by `t` in the plane of `e_axis` and the time direction.
pub fn boost(n: usize, axis: usize, t: f64) -> GroupElement {
    let mut m = DMatrix::identity(n + 1, n + 1);
    m[(axis, axis)] = t.cosh();
    m[(n, n)] = t.cosh();
    m[(axis, n)] = t.sinh();
    m[(n, axis)] = t.sinh();
    GroupElement { m }
}

/// Rotation by `theta` taking `e_i` towards `e_j`.
pub fn rotation(n: usize, i: usize, j: usize, theta: f64) -> GroupElement {
    let mut m = DMatrix::identity(n + 1, n + 1);
    m[(i, i)] = theta.cos();
    m[(j, j)] = theta.cos();
    m[(j, i)] = theta.sin();
    m[(i, j)] = -theta.sin();
    GroupElement { m }
}

/// A random isometry: exponential of a random Lie algebra element with entries of size `scale`.
pub fn random_isometry<R: Rng + ?Sized>(rng: &mut R, n: usize, scale: f64) -> GroupElement {
    let mut x = DMatrix::zeros(n + 1, n + 1);
    for i in 0..n {
        for j in (i + 1)..n {
            let a = rng.random_range(-scale..scale);
            x[(i, j)] = a;
            x[(j, i)] = -a;
        }
        let b = rng.random_range(-scale..scale);
        x[(i, n)] = b;
        x[(n, i)] = b;
    }
    exp_lie(&LieVector { m: x })
}

pub fn random_boundary_point<R: Rng + ?Sized>(rng: &mut R, n: usize) -> BoundaryPoint {
    loop {
        let dir: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let r2: f64 = dir.iter().map(|x| x * x).sum();
        if r2 > 0.01 && r2 <= 1.0 {
            return BoundaryPoint::from_direction(&dir).expect("nonzero direction");
        }
    }
}

/// The origin `(0,…,0,1)` of the hyperboloid.
pub fn origin(n: usize) -> DVector<f64> {
    let mut o = DVector::zeros(n + 1);
    o[n] = 1.0;
    o
}

/// Hyperbolic distance between two hyperboloid points.
pub fn point_distance(u: &DVector<f64>, v: &DVector<f64>) -> f64 {
    (-form(u, v)).max(1.0).acosh()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn std_pair(n: usize) -> (BoundaryPoint, BoundaryPoint) {
        let mut x = vec![0.0; n];
        x[0] = -1.0;
        let mut y = vec![0.0; n];
        y[0] = 1.0;
        (BoundaryPoint::from_direction(&x).unwrap(), BoundaryPoint::from_direction(&y).unwrap())
    }

    /// Exponential by plain power series, independent of the Padé routine.
    fn series_exp(m: &DMatrix<f64>) -> DMatrix<f64> {
        let k = m.nrows();
        let mut sum = DMatrix::identity(k, k);
        let mut term = DMatrix::identity(k, k);
        for j in 1..60 {
            term = &term * m / j as f64;
            sum += &term;
        }
        sum
    }

    fn std_generator(n: usize) -> DMatrix<f64> {
        let mut e = DMatrix::zeros(n + 1, n + 1);
        e[(0, n)] = 1.0;
        e[(n, 0)] = 1.0;
        e
    }

    #[test]
    fn translation_at_zero_is_identity() {
        let (x, y) = std_pair(3);
        let h = hyperbolic_translation(&x, &y, 0.0).unwrap();
        assert!(h.frobenius_distance(&GroupElement::identity(3)) < 1e-15);
    }

    #[test]
    fn standard_translation_is_boost_block() {
        for n in 2..=4 {
            let (x, y) = std_pair(n);
            for &t in &[0.3, -1.2, 2.5] {
                let h = hyperbolic_translation(&x, &y, t).unwrap();
                let oracle = series_exp(&(std_generator(n) * t));
                assert!((h.matrix() - &oracle).norm() < 1e-12 * oracle.norm());
            }
        }
    }

    #[test]
    fn standard_lie_generator() {
        let (x, y) = std_pair(3);
        let v = lie_generator(&x, &y).unwrap();
        assert!((v.matrix() - std_generator(3)).norm() < 1e-14);
        let w = lie_generator(&y, &x).unwrap();
        assert!((v.matrix() + w.matrix()).norm() < 1e-14);
    }

    #[test]
    fn coincident_endpoints_rejected() {
        let (x, _) = std_pair(2);
        assert!(matches!(hyperbolic_translation(&x, &x, 1.0), Err(GeometryError::CoincidentEndpoints(_))));
        assert!(lie_generator(&x, &x).is_err());
        let (x, y) = std_pair(2);
        assert_eq!(hyperbolic_translation(&x, &y, f64::NAN), Err(GeometryError::NonFinite));
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify(&GroupElement::identity(3)), IsometryClass::Elliptic);
        assert_eq!(classify(&boost(3, 0, 1.0)), IsometryClass::Loxodromic);
        assert_eq!(classify(&rotation(3, 0, 1, 0.7)), IsometryClass::Elliptic);
        // parabolic: product of reflections-like shear; exp of a nilpotent generator
        let mut nil = DMatrix::zeros(3, 3);
        nil[(0, 1)] = 1.0;
        nil[(1, 0)] = -1.0;
        nil[(0, 2)] = 1.0;
        nil[(2, 0)] = 1.0;
        let par = exp_lie(&LieVector::new(nil).unwrap());
        assert_eq!(classify(&par), IsometryClass::ParabolicOrBoundary);
    }

    #[test]
    fn conjugated_boost_matches_eigensolver() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = random_isometry(&mut rng, 3, 0.8);
        let m = boost(3, 0, 0.3).conjugate_by(&g);
        assert_eq!(classify(&m), IsometryClass::Loxodromic);
        // eigensolver oracle: moduli of the symmetric-free spectrum
        let mut moduli = eigenvalue_moduli(m.matrix());
        moduli.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((moduli[3] - 0.3f64.exp()).abs() < 1e-12);
        assert!((translation_length(&m).unwrap() - 0.3).abs() < 1e-12);
        let (p, q) = fixed_points(&m).unwrap();
        let (x, y) = std_pair(3);
        assert!(p.angle_to(&g.act_boundary(&x)) < 1e-10);
        assert!(q.angle_to(&g.act_boundary(&y)) < 1e-10);
    }

    #[test]
    fn factorization_recovers_factors() {
        let b = boost(3, 0, 0.7);
        let r = rotation(3, 1, 2, 0.4);
        let m = b.mul(&r);
        let (sigma, theta) = loxodromic_factorization(&m).unwrap();
        assert!(sigma.frobenius_distance(&b) < 1e-10);
        assert!(theta.frobenius_distance(&r) < 1e-10);
        assert!(sigma.commutator_defect(&theta) < 1e-10);
        assert!((translation_length(&m).unwrap() - 0.7).abs() < 1e-12);
        let (s2, t2) = loxodromic_factorization(&boost(2, 1, 1.1)).unwrap();
        assert!(t2.frobenius_distance(&GroupElement::identity(2)) < 1e-10);
        assert!(s2.frobenius_distance(&boost(2, 1, 1.1)) < 1e-10);
    }

    #[test]
    fn log_exp_basics() {
        for n in 2..=4 {
            assert!(log_group(&GroupElement::identity(n)).unwrap().norm() < 1e-15);
            let e = exp_lie(&LieVector::zero(n));
            assert!(e.frobenius_distance(&GroupElement::identity(n)) < 1e-15);
        }
        let gen = LieVector::new(std_generator(2) * 0.8).unwrap();
        assert!(exp_lie(&gen).frobenius_distance(&boost(2, 0, 0.8)) < 1e-13);
        assert!(matches!(log_group(&rotation(3, 0, 1, std::f64::consts::PI)), Err(GeometryError::LogBranch)));
    }

    #[test]
    fn polynomial_fallback_finds_spectrum() {
        let g = boost(3, 0, 0.8).mul(&rotation(3, 1, 2, 0.5));
        let mut ev: Vec<f64> = polynomial_roots(&characteristic_polynomial(g.matrix())).iter().map(|z| z.norm()).collect();
        ev.sort_by(f64::total_cmp);
        assert!((ev[3] - 0.8f64.exp()).abs() < 1e-9);
        assert!((ev[0] - (-0.8f64).exp()).abs() < 1e-9);
        assert!((ev[1] - 1.0).abs() < 1e-6 && (ev[2] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn axial_exp_matches_series() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let g = random_isometry(&mut rng, 3, 1.0);
            let p = g.act_boundary(&BoundaryPoint::new(DVector::from_vec(vec![1.0, 0.0, 0.0, 1.0])).unwrap());
            let q = g.act_boundary(&BoundaryPoint::new(DVector::from_vec(vec![-1.0, 0.0, 0.0, 1.0])).unwrap());
            let t = lie_generator(&p, &q).unwrap();
            let r = rotation_generator(&p, &q, None).unwrap();
            let (a, b) = (rng.random_range(-2.0..2.0), rng.random_range(-3.0..3.0));
            let closed = exp_axial(&t, a, Some(&r), b);
            let series = exp_lie(&t.scale(a).add(&r.scale(b)));
            assert!(closed.frobenius_distance(&series) < 1e-10 * series.matrix().norm());
            assert!(closed.form_defect() < 1e-13);
        }
    }

    #[test]
    fn distance_examples() {
        let (x, y) = std_pair(2);
        let v = lie_generator(&x, &y).unwrap();
        let h = hyperbolic_translation(&x, &y, 0.05).unwrap();
        let d = group_distance(&GroupElement::identity(2), &h);
        assert!(!d.fallback);
        assert!((d.value - 0.05 * v.norm()).abs() < 1e-12);
        assert_eq!(group_distance(&h, &h).value, 0.0);
    }

    #[test]
    fn n4_rotation_needs_selector() {
        let (x, y) = std_pair(4);
        assert!(rotation_generator(&x, &y, None).is_err());
        let mut h = DVector::zeros(5);
        h[3] = 1.0;
        let j = rotation_generator(&x, &y, Some(&h)).unwrap();
        // the selected plane is spanned by e₂, e₃ (indices 1, 2)
        assert!(j.matrix()[(3, 3)].abs() < 1e-14 && j.matrix().column(3).norm() < 1e-14);
        assert!((j.matrix()[(2, 1)].abs() - 1.0).abs() < 1e-14);
        let (x2, y2) = std_pair(2);
        assert!(rotation_generator(&x2, &y2, None).is_err());
    }

    #[test]
    fn embed_block() {
        let b = boost(2, 1, 0.5);
        let e = b.embed(4).unwrap();
        assert!(e.frobenius_distance(&boost(4, 1, 0.5)) < 1e-15);
    }

    #[test]
    fn reorthonormalize_fixes_drift() {
        let mut m = boost(3, 0, 1.0).into_matrix();
        m[(0, 1)] += 1e-7;
        let g = reorthonormalize(&GroupElement::from_matrix_unchecked(m));
        assert!(g.form_defect() < 1e-14);
        let clean = boost(3, 0, 1.0);
        assert_eq!(reorthonormalize(&clean), clean);
    }

    fn dim_and_seed() -> impl Strategy<Value = (usize, u64)> {
        (2usize..=4, any::<u64>())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn translation_equivariant((n, seed) in dim_and_seed(), t in -3.0f64..3.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = random_boundary_point(&mut rng, n);
            let y = random_boundary_point(&mut rng, n);
            prop_assume!(x.angle_to(&y) > 0.05);
            let g = random_isometry(&mut rng, n, 0.7);
            let lhs = hyperbolic_translation(&x, &y, t).unwrap().conjugate_by(&g);
            let rhs = hyperbolic_translation(&g.act_boundary(&x), &g.act_boundary(&y), t).unwrap();
            prop_assert!(lhs.frobenius_distance(&rhs) < 1e-9 * lhs.matrix().norm());
        }

        #[test]
        fn translation_form_and_subgroup((n, seed) in dim_and_seed(), s in -3.0f64..3.0, t in -3.0f64..3.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = random_boundary_point(&mut rng, n);
            let y = random_boundary_point(&mut rng, n);
            prop_assume!(x.angle_to(&y) > 0.05);
            let hs = hyperbolic_translation(&x, &y, s).unwrap();
            let ht = hyperbolic_translation(&x, &y, t).unwrap();
            let hst = hyperbolic_translation(&x, &y, s + t).unwrap();
            prop_assert!(form_defect(hs.matrix()) < 1e-9);
            prop_assert!(hs.mul(&ht).frobenius_distance(&hst) < 1e-9 * hst.matrix().norm().max(1.0));
            let v = lie_generator(&x, &y).unwrap();
            let small = exp_lie(&v.scale(0.01));
            prop_assert!(small.frobenius_distance(&hyperbolic_translation(&x, &y, 0.01).unwrap()) < 1e-12);
        }

        #[test]
        fn fixed_points_and_factorization((n, seed) in dim_and_seed(), t in 0.2f64..3.0, angle in -2.5f64..2.5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = random_isometry(&mut rng, n, 0.6);
            let mut m = boost(n, 0, t);
            if n >= 3 {
                m = m.mul(&rotation(n, 1, 2, angle));
            }
            let m = m.conjugate_by(&g);
            let (p, q) = fixed_points(&m).unwrap();
            let (pi, qi) = fixed_points(&m.inverse()).unwrap();
            prop_assert!(p.angle_to(&qi) < 1e-9 && q.angle_to(&pi) < 1e-9);
            let (sigma, theta) = loxodromic_factorization(&m).unwrap();
            prop_assert!(sigma.mul(&theta).frobenius_distance(&m) < 1e-9 * m.matrix().norm());
            prop_assert!(sigma.commutator_defect(&theta) < 1e-9);
            prop_assert!((theta.act_boundary(&p).angle_to(&p)) < 1e-8);
            prop_assert!(eigenvalue_moduli(theta.matrix()).iter().all(|r| (r - 1.0).abs() < 1e-7));
            prop_assert!((translation_length(&m).unwrap() - t).abs() < 1e-9);
            for &s in &[-1.0, 0.5, 2.0] {
                let h = hyperbolic_translation(&p, &q, s).unwrap();
                prop_assert!(h.commutator_defect(&m) < 1e-9);
            }
            // conjugation equivariance of the factorization
            let k = random_isometry(&mut rng, n, 0.5);
            let (s2, t2) = loxodromic_factorization(&m.conjugate_by(&k)).unwrap();
            prop_assert!(s2.frobenius_distance(&sigma.conjugate_by(&k)) < 1e-8 * s2.matrix().norm());
            prop_assert!(t2.frobenius_distance(&theta.conjugate_by(&k)) < 1e-8);
        }

        #[test]
        fn log_exp_inverse((n, seed) in dim_and_seed(), scale in 0.01f64..1.5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = random_isometry(&mut rng, n, scale);
            let x = log_group(&g).unwrap();
            prop_assert!(exp_lie(&x).frobenius_distance(&g) < 1e-10 * g.matrix().norm());
            prop_assert!(g.form_defect() < 1e-9);
        }

        #[test]
        fn distance_left_invariant((n, seed) in dim_and_seed()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_isometry(&mut rng, n, 0.5);
            let b = random_isometry(&mut rng, n, 0.5);
            let g = random_isometry(&mut rng, n, 0.8);
            let d1 = group_distance(&a, &b);
            let d2 = group_distance(&g.mul(&a), &g.mul(&b));
            prop_assert!(!d1.fallback && !d2.fallback);
            prop_assert!((d1.value - d2.value).abs() < 1e-9);
        }

        #[test]
        fn rotation_generator_is_centralizing((n, seed) in (3usize..=4, any::<u64>()), theta in -3.0f64..3.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = random_boundary_point(&mut rng, n);
            let q = random_boundary_point(&mut rng, n);
            prop_assume!(p.angle_to(&q) > 0.05);
            let hint = DVector::from_fn(n + 1, |_, _| rng.random_range(-1.0..1.0));
            let j = rotation_generator(&p, &q, Some(&hint)).unwrap();
            let r = exp_lie(&j.scale(theta));
            prop_assert!(r.act_boundary(&p).angle_to(&p) < 1e-9);
            prop_assert!(r.act_boundary(&q).angle_to(&q) < 1e-9);
            let h = hyperbolic_translation(&p, &q, 1.3).unwrap();
            prop_assert!(h.commutator_defect(&r) < 1e-12);
            // equivariance of the orientation convention
            let g = random_isometry(&mut rng, n, 0.6);
            let hint_g = g.act(&hint);
            let jg = rotation_generator(&g.act_boundary(&p), &g.act_boundary(&q), Some(&hint_g)).unwrap();
            prop_assert!((jg.matrix() - j.adjoint(&g).matrix()).norm() < 1e-9);
        }
    }
}
