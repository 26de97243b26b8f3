//! Dense complex matrices and Schatten-class functionals.
//!
//! A [`MatrixC`] stands in for a compact operator on a `d`-dimensional
//! Hilbert space. Singular values below [`RANK_TOL`] times the largest one
//! are treated as zero by every routine that takes roots or ranks.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Relative cutoff below which singular values count as zero.
pub const RANK_TOL: f64 = 1e-12;

const SVD_EPS: f64 = 1e-15;
const MAX_SWEEPS: usize = 10_000;

/// Square complex matrix of fixed dimension.
#[derive(Clone, PartialEq)]
pub struct MatrixC(DMatrix<C64>);

impl MatrixC {
    pub fn zeros(dim: usize) -> Self {
        MatrixC(DMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        MatrixC(DMatrix::identity(dim, dim))
    }

    /// Matrix unit `E_{pq}`: a single 1 in row `p`, column `q`.
    pub fn unit(dim: usize, p: usize, q: usize) -> Self {
        let mut m = Self::zeros(dim);
        m.0[(p, q)] = C64::new(1.0, 0.0);
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        MatrixC(DMatrix::from_fn(dim, dim, |i, j| f(i, j)))
    }

    pub fn from_diag(diag: &[C64]) -> Self {
        let d = diag.len();
        Self::from_fn(d, |i, j| if i == j { diag[i] } else { C64::new(0.0, 0.0) })
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let diag: Vec<C64> = diag.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::from_diag(&diag)
    }

    /// Builds a matrix from real row-major rows.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let d = rows.len();
        Self::from_fn(d, |i, j| C64::new(rows[i][j], 0.0))
    }

    /// Builds a matrix from row-major entries; fails on non-square or
    /// non-finite input.
    pub fn from_row_major(dim: usize, entries: &[C64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::Shape(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                entries.len()
            )));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Domain("matrix entries must be finite".into()));
        }
        Ok(MatrixC(DMatrix::from_row_slice(dim, dim, entries)))
    }

    pub fn from_dmatrix(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Shape(format!("{}x{} is not square", m.nrows(), m.ncols())));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Domain("matrix entries must be finite".into()));
        }
        Ok(MatrixC(m))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_dmatrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_dmatrix(self) -> DMatrix<C64> {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, z: C64) {
        self.0[(i, j)] = z;
    }

    /// Entries in row-major order.
    pub fn row_major(&self) -> Vec<C64> {
        let d = self.dim();
        let mut out = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                out.push(self.0[(i, j)]);
            }
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        MatrixC(self.0.adjoint())
    }

    pub fn scale(&self, z: C64) -> Self {
        MatrixC(&self.0 * z)
    }

    pub fn scale_real(&self, x: f64) -> Self {
        self.scale(C64::new(x, 0.0))
    }

    /// `adjoint(self) · rhs`
    pub fn adjoint_mul(&self, rhs: &MatrixC) -> Self {
        MatrixC(self.0.ad_mul(&rhs.0))
    }

    /// `self · adjoint(rhs)`
    pub fn mul_adjoint(&self, rhs: &MatrixC) -> Self {
        MatrixC(&self.0 * rhs.0.adjoint())
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// Hilbert-Schmidt (Frobenius) norm computed from the entries.
    pub fn frobenius(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Hermitian part `(A + A*)/2`.
    pub fn hermitian_part(&self) -> Self {
        MatrixC((&self.0 + self.0.adjoint()) * C64::new(0.5, 0.0))
    }
}

impl fmt::Debug for MatrixC {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MatrixC{}", self.0)
    }
}

impl Add for &MatrixC {
    type Output = MatrixC;
    fn add(self, rhs: &MatrixC) -> MatrixC {
        MatrixC(&self.0 + &rhs.0)
    }
}

impl Sub for &MatrixC {
    type Output = MatrixC;
    fn sub(self, rhs: &MatrixC) -> MatrixC {
        MatrixC(&self.0 - &rhs.0)
    }
}

impl Mul for &MatrixC {
    type Output = MatrixC;
    fn mul(self, rhs: &MatrixC) -> MatrixC {
        MatrixC(&self.0 * &rhs.0)
    }
}

impl Neg for &MatrixC {
    type Output = MatrixC;
    fn neg(self) -> MatrixC {
        MatrixC(-&self.0)
    }
}

impl Serialize for MatrixC {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = self.row_major().iter().map(|z| [z.re, z.im]).collect();
        pairs.serialize(s)
    }
}

impl<'de> Deserialize<'de> for MatrixC {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let pairs = Vec::<[f64; 2]>::deserialize(de)?;
        let dim = (pairs.len() as f64).sqrt().round() as usize;
        if dim == 0 || dim * dim != pairs.len() {
            return Err(D::Error::custom(format!(
                "{} entries do not form a nonempty square matrix",
                pairs.len()
            )));
        }
        let entries: Vec<C64> = pairs.iter().map(|p| C64::new(p[0], p[1])).collect();
        MatrixC::from_row_major(dim, &entries).map_err(D::Error::custom)
    }
}

/// Singular value decomposition `A = left · diag(singulars) · adjoint(right)`.
#[derive(Clone, Debug)]
pub struct SvdTriple {
    pub left: MatrixC,
    /// Nonincreasing; values below `RANK_TOL · σ_max` are set to zero.
    pub singulars: Vec<f64>,
    pub right: MatrixC,
}

impl SvdTriple {
    pub fn rank(&self) -> usize {
        self.singulars.iter().filter(|&&s| s > 0.0).count()
    }

    /// `left · diag(weights) · adjoint(right)` for arbitrary per-index weights.
    pub fn recompose_with(&self, weights: &[f64]) -> MatrixC {
        let d = self.left.dim();
        let mut scaled = self.left.0.clone();
        for (j, &w) in weights.iter().enumerate().take(d) {
            scaled.column_mut(j).scale_mut(w);
        }
        MatrixC(scaled * self.right.0.adjoint())
    }
}

pub fn svd(a: &MatrixC) -> Result<SvdTriple> {
    let d = a.dim();
    let decomposed = a
        .0
        .clone()
        .try_svd(true, true, SVD_EPS, MAX_SWEEPS)
        .ok_or_else(|| {
            Error::Numerical(format!(
                "svd did not converge for a {d}x{d} matrix of Frobenius norm {:e}",
                a.frobenius()
            ))
        })?;
    let u = decomposed.u.expect("requested U");
    let v_t = decomposed.v_t.expect("requested V*");
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| decomposed.singular_values[j].total_cmp(&decomposed.singular_values[i]));

    let left = DMatrix::from_fn(d, d, |r, c| u[(r, order[c])]);
    let right = DMatrix::from_fn(d, d, |r, c| v_t[(order[c], r)].conj());
    let mut singulars: Vec<f64> = order.iter().map(|&i| decomposed.singular_values[i]).collect();
    let cutoff = singulars.first().copied().unwrap_or(0.0) * RANK_TOL;
    for s in &mut singulars {
        if *s <= cutoff {
            *s = 0.0;
        }
    }
    Ok(SvdTriple { left: MatrixC(left), singulars, right: MatrixC(right) })
}

pub fn singular_values(a: &MatrixC) -> Result<Vec<f64>> {
    Ok(svd(a)?.singulars)
}

/// `(Σ σ_i^p)^{1/p}`. Below `p = 1` this is only a quasi-norm.
/// `p = ∞` gives the operator norm.
pub fn schatten_norm(a: &MatrixC, p: f64) -> Result<f64> {
    if p.is_nan() || p <= 0.0 {
        return Err(Error::Domain(format!("Schatten exponent must be positive, got {p}")));
    }
    let s = singular_values(a)?;
    Ok(schatten_from_singulars(&s, p))
}

pub(crate) fn schatten_from_singulars(s: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        return s.first().copied().unwrap_or(0.0);
    }
    if p == 1.0 {
        return s.iter().sum();
    }
    if p == 2.0 {
        return s.iter().map(|x| x * x).sum::<f64>().sqrt();
    }
    s.iter().map(|x| x.powf(p)).sum::<f64>().powf(1.0 / p)
}

/// Trace norm `tr|A|`.
pub fn trace_norm(a: &MatrixC) -> Result<f64> {
    schatten_norm(a, 1.0)
}

pub fn operator_norm(a: &MatrixC) -> Result<f64> {
    schatten_norm(a, f64::INFINITY)
}

pub fn trace(a: &MatrixC) -> C64 {
    a.trace()
}

/// Hilbert-Schmidt inner product `tr(adjoint(b) · a)`.
pub fn hs_inner(a: &MatrixC, b: &MatrixC) -> C64 {
    a.0.iter().zip(b.0.iter()).map(|(x, y)| y.conj() * x).sum()
}

/// Eigen-decomposition of a Hermitian matrix: eigenvalues and unitary eigenvectors.
pub fn hermitian_eigen(a: &MatrixC) -> Result<(Vec<f64>, MatrixC)> {
    let d = a.dim();
    let h = a.hermitian_part();
    let eig = h.0.try_symmetric_eigen(SVD_EPS, MAX_SWEEPS).ok_or_else(|| {
        Error::Numerical(format!(
            "Hermitian eigensolver did not converge for a {d}x{d} matrix of Frobenius norm {:e}",
            a.frobenius()
        ))
    })?;
    Ok((eig.eigenvalues.iter().copied().collect(), MatrixC(eig.eigenvectors)))
}

/// Principal square root of a positive semidefinite matrix.
///
/// Eigenvalues in `[-1e-10·‖A‖, 0)` are clamped to zero.
pub fn sqrt_psd(a: &MatrixC) -> Result<MatrixC> {
    let scale = a.frobenius();
    let skew = (a - &a.adjoint()).frobenius();
    if skew > 1e-10 * (1.0 + scale) {
        return Err(Error::Domain(format!("matrix is not Hermitian (skew part {skew:e})")));
    }
    let (vals, vecs) = hermitian_eigen(a)?;
    let op = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if let Some(&worst) = vals.iter().find(|&&v| v < -1e-10 * op.max(f64::MIN_POSITIVE)) {
        return Err(Error::Domain(format!("matrix has negative eigenvalue {worst:e}")));
    }
    let roots: Vec<f64> = vals.iter().map(|&v| v.max(0.0).sqrt()).collect();
    let d = a.dim();
    let mut scaled = vecs.0.clone();
    for (j, &r) in roots.iter().enumerate().take(d) {
        scaled.column_mut(j).scale_mut(r);
    }
    Ok(MatrixC(scaled * vecs.0.adjoint()))
}

/// Writes `A = adjoint(B) · C` with `‖B‖²_{S₂} = ‖C‖²_{S₂} = ‖A‖_{S₁}`.
///
/// With `A = UΣV*` the factors are `C = VΣ^{1/2}V* = |A|^{1/2}` and
/// `B = VΣ^{1/2}U*`, the `S₁ = S₂·S₂` instance of unit-ball factorization.
/// For positive semidefinite `A` both equal `√A`.
pub fn factor_unit_ball(a: &MatrixC) -> Result<(MatrixC, MatrixC)> {
    let t = svd(a)?;
    let roots: Vec<f64> = t.singulars.iter().map(|s| s.sqrt()).collect();
    Ok(half_factors(&t, &roots))
}

/// `(VΣ^{1/2}U*, VΣ^{1/2}V*)` from an svd and the roots of its singular values.
pub(crate) fn half_factors(t: &SvdTriple, roots: &[f64]) -> (MatrixC, MatrixC) {
    let mut v_root = t.right.0.clone();
    for (j, &r) in roots.iter().enumerate() {
        v_root.column_mut(j).scale_mut(r);
    }
    let b = &v_root * t.left.0.adjoint();
    let c = &v_root * t.right.0.adjoint();
    (MatrixC(b), MatrixC(c))
}

/// `‖A‖_{S_p}·‖B‖_{S_q} − ‖AB‖_{S_r}` with `1/r = 1/p + 1/q`.
pub fn hoelder_gap(a: &MatrixC, b: &MatrixC, p: f64, q: f64) -> Result<f64> {
    if !(p > 0.0 && q > 0.0) {
        return Err(Error::Domain(format!("Hoelder exponents must be positive, got ({p}, {q})")));
    }
    if a.dim() != b.dim() {
        return Err(Error::Shape(format!("{} vs {}", a.dim(), b.dim())));
    }
    let r = 1.0 / (1.0 / p + 1.0 / q);
    Ok(schatten_norm(a, p)? * schatten_norm(b, q)? - schatten_norm(&(a * b), r)?)
}
