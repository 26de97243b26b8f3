//! Operator-valued functions on the dyadic grid of `[0,1)` and on the
//! discrete circle.
//!
//! A [`DyadicFn`] is constant on the `2^N` cells `[k/2^N, (k+1)/2^N)`; a
//! [`TrigFn`] is sampled at `t_m = 2πm/M − π`. In both cases the grid with
//! uniform weight is the measure space, so coefficients, norms and inner
//! products are exact finite sums.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{hs_inner, trace_norm, MatrixC, C64};

/// Value of the Rademacher function `r_j` on cell `cell` of the `2^N` grid.
pub fn rademacher_value(j: u32, cell: usize, resolution: u32) -> Result<i8> {
    if j >= resolution {
        return Err(Error::Resolution(format!(
            "r_{j} is not constant on cells of a 2^{resolution} grid"
        )));
    }
    check_cell(cell, resolution)?;
    Ok(if (cell >> (resolution - 1 - j)) & 1 == 0 { 1 } else { -1 })
}

/// Value of the Walsh function `w_n` (Paley enumeration) on a cell.
pub fn walsh_value(n: usize, cell: usize, resolution: u32) -> Result<i8> {
    check_walsh_index(n, resolution)?;
    check_cell(cell, resolution)?;
    Ok(walsh_sign(n, cell, resolution))
}

/// `w_m · w_n = w_{m ⊕ n}`.
pub fn walsh_index_product(m: usize, n: usize) -> usize {
    m ^ n
}

#[inline]
fn walsh_sign(n: usize, cell: usize, resolution: u32) -> i8 {
    // Bit j of n selects r_j, which reads bit (N-1-j) of the cell index.
    let mut mask = 0usize;
    for j in 0..resolution {
        if (n >> j) & 1 == 1 {
            mask |= 1 << (resolution - 1 - j);
        }
    }
    if (mask & cell).count_ones() % 2 == 0 {
        1
    } else {
        -1
    }
}

fn check_cell(cell: usize, resolution: u32) -> Result<()> {
    if cell >= 1usize << resolution {
        return Err(Error::Resolution(format!(
            "cell {cell} out of range for 2^{resolution} cells"
        )));
    }
    Ok(())
}

fn check_walsh_index(n: usize, resolution: u32) -> Result<()> {
    if n >= 1usize << resolution {
        return Err(Error::Resolution(format!(
            "w_{n} is not resolved by 2^{resolution} cells"
        )));
    }
    Ok(())
}

/// Shared surface of dyadic and trigonometric functions.
pub trait GridFn: Clone + Sized {
    /// Walsh index for dyadic functions, integer frequency for trigonometric ones.
    type Char: Copy + std::fmt::Debug;

    fn dim(&self) -> usize;
    fn values(&self) -> &[MatrixC];

    /// Same grid and metadata, new values.
    fn with_values(&self, values: Vec<MatrixC>) -> Self;

    /// Scalar values of a character on the grid.
    fn character(&self, ch: Self::Char) -> Result<Vec<C64>>;

    /// Grid descriptor used to compare shapes.
    fn grid(&self) -> Grid;

    fn len(&self) -> usize {
        self.values().len()
    }

    fn is_empty(&self) -> bool {
        self.values().is_empty()
    }

    fn zeros_like(&self) -> Self {
        self.with_values(vec![MatrixC::zeros(self.dim()); self.len()])
    }

    fn map(&self, f: impl FnMut(&MatrixC) -> MatrixC) -> Self {
        self.with_values(self.values().iter().map(f).collect())
    }

    /// Pointwise multiplication by a character.
    fn modulate(&self, ch: Self::Char) -> Result<Self> {
        let chi = self.character(ch)?;
        Ok(self.with_values(self.values().iter().zip(&chi).map(|(v, &z)| v.scale(z)).collect()))
    }

    /// Coefficient against a character: mean of `conj(χ)·f`.
    fn coefficient(&self, ch: Self::Char) -> Result<MatrixC> {
        let chi = self.character(ch)?;
        let mut acc = MatrixC::zeros(self.dim());
        for (v, z) in self.values().iter().zip(&chi) {
            acc = &acc + &v.scale(z.conj());
        }
        Ok(acc.scale_real(1.0 / self.len() as f64))
    }

    fn add(&self, other: &Self) -> Result<Self> {
        check_same_shape(self, other)?;
        Ok(self.with_values(self.values().iter().zip(other.values()).map(|(a, b)| a + b).collect()))
    }

    fn sub(&self, other: &Self) -> Result<Self> {
        check_same_shape(self, other)?;
        Ok(self.with_values(self.values().iter().zip(other.values()).map(|(a, b)| a - b).collect()))
    }

    fn scale(&self, z: C64) -> Self {
        self.map(|v| v.scale(z))
    }

    /// Pointwise right multiplication `u(t) · b`.
    fn right_mul(&self, b: &MatrixC) -> Self {
        self.map(|v| v * b)
    }

    /// Norm in the discrete `L²(·; S₂)`.
    fn l2_norm(&self) -> f64 {
        let s: f64 = self.values().iter().map(|v| v.frobenius().powi(2)).sum();
        (s / self.len() as f64).sqrt()
    }

    /// Largest entry modulus over the grid.
    fn max_abs(&self) -> f64 {
        self.values().iter().fold(0.0, |m, v| m.max(v.max_abs()))
    }

    /// Column `q` of every value, stacked cell by cell.
    fn column(&self, q: usize) -> Vec<C64> {
        let d = self.dim();
        let mut out = Vec::with_capacity(self.len() * d);
        for v in self.values() {
            for i in 0..d {
                out.push(v.get(i, q));
            }
        }
        out
    }

    /// Inverse of [`GridFn::column`] applied to all `d` columns.
    fn from_columns(&self, columns: &[Vec<C64>]) -> Self {
        let d = self.dim();
        let values = (0..self.len())
            .map(|cell| MatrixC::from_fn(d, |i, q| columns[q][cell * d + i]))
            .collect();
        self.with_values(values)
    }
}

/// Grid descriptor; two functions are compatible iff their grids match.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Grid {
    Dyadic { resolution: u32, dim: usize },
    Circle { gridsize: usize, dim: usize },
}

pub fn check_same_shape<F: GridFn>(u: &F, v: &F) -> Result<()> {
    if u.grid() != v.grid() {
        return Err(Error::Domain(format!("shape mismatch: {:?} vs {:?}", u.grid(), v.grid())));
    }
    Ok(())
}

/// Mean over the grid of `‖f(t)‖_{S₁}`.
pub fn l1_s1_norm<F: GridFn>(f: &F) -> Result<f64> {
    let mut s = 0.0;
    for v in f.values() {
        s += trace_norm(v)?;
    }
    Ok(s / f.len() as f64)
}

/// Scalar inner product of the discrete `L²(·; S₂)`: mean of `tr(v*u)`.
pub fn l2_s2_inner<F: GridFn>(u: &F, v: &F) -> Result<C64> {
    check_same_shape(u, v)?;
    let s: C64 = u.values().iter().zip(v.values()).map(|(a, b)| hs_inner(a, b)).sum();
    Ok(s / u.len() as f64)
}

/// Operator-valued partial inner product: mean of `adjoint(v(t))·u(t)`.
pub fn partial_inner<F: GridFn>(u: &F, v: &F) -> Result<MatrixC> {
    check_same_shape(u, v)?;
    let mut acc = MatrixC::zeros(u.dim());
    for (a, b) in u.values().iter().zip(v.values()) {
        acc = &acc + &b.adjoint_mul(a);
    }
    Ok(acc.scale_real(1.0 / u.len() as f64))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProductMode {
    /// `u(t) · v(t)`
    Plain,
    /// `adjoint(u(t)) · v(t)`
    AdjointLeft,
}

pub fn pointwise_product<F: GridFn>(u: &F, v: &F, mode: ProductMode) -> Result<F> {
    check_same_shape(u, v)?;
    let values = u
        .values()
        .iter()
        .zip(v.values())
        .map(|(a, b)| match mode {
            ProductMode::Plain => a * b,
            ProductMode::AdjointLeft => a.adjoint_mul(b),
        })
        .collect();
    Ok(u.with_values(values))
}

/// Function on `[0,1)` constant on each of the `2^resolution` dyadic cells.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DyadicRaw")]
pub struct DyadicFn {
    resolution: u32,
    dim: usize,
    values: Vec<MatrixC>,
}

#[derive(Deserialize)]
struct DyadicRaw {
    resolution: u32,
    dim: usize,
    values: Vec<MatrixC>,
}

impl TryFrom<DyadicRaw> for DyadicFn {
    type Error = Error;
    fn try_from(raw: DyadicRaw) -> Result<Self> {
        DyadicFn::new(raw.resolution, raw.dim, raw.values)
    }
}

/// Largest supported dyadic resolution.
pub const MAX_RESOLUTION: u32 = 20;

impl DyadicFn {
    pub fn new(resolution: u32, dim: usize, values: Vec<MatrixC>) -> Result<Self> {
        if resolution > MAX_RESOLUTION {
            return Err(Error::Resolution(format!("resolution {resolution} exceeds {MAX_RESOLUTION}")));
        }
        if dim == 0 {
            return Err(Error::Domain("dimension must be positive".into()));
        }
        if values.len() != 1usize << resolution {
            return Err(Error::Shape(format!(
                "{} values for 2^{resolution} cells",
                values.len()
            )));
        }
        if let Some(bad) = values.iter().position(|v| v.dim() != dim) {
            return Err(Error::Shape(format!("cell {bad} has dimension {}", values[bad].dim())));
        }
        Ok(DyadicFn { resolution, dim, values })
    }

    pub fn zeros(resolution: u32, dim: usize) -> Result<Self> {
        Self::constant(resolution, MatrixC::zeros(dim))
    }

    pub fn constant(resolution: u32, value: MatrixC) -> Result<Self> {
        if resolution > MAX_RESOLUTION {
            return Err(Error::Resolution(format!("resolution {resolution} exceeds {MAX_RESOLUTION}")));
        }
        let dim = value.dim();
        Self::new(resolution, dim, vec![value; 1usize << resolution])
    }

    /// `Σ_j d_j r_j`, with `coefficients[j] = d_j`.
    pub fn rademacher_series(resolution: u32, coefficients: &[MatrixC]) -> Result<Self> {
        let dim = coefficients
            .first()
            .map(MatrixC::dim)
            .ok_or_else(|| Error::Domain("empty Rademacher series".into()))?;
        let mut f = Self::zeros(resolution, dim)?;
        for (j, dj) in coefficients.iter().enumerate() {
            if dj.dim() != dim {
                return Err(Error::Shape(format!("coefficient {j} has dimension {}", dj.dim())));
            }
            let rj = Self::constant(resolution, dj.clone())?.modulate(1usize << j)?;
            f = f.add(&rj)?;
        }
        Ok(f)
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn cells(&self) -> usize {
        self.values.len()
    }

    pub fn walsh_coeff(&self, n: usize) -> Result<MatrixC> {
        self.coefficient(n)
    }
}

impl GridFn for DyadicFn {
    type Char = usize;

    fn dim(&self) -> usize {
        self.dim
    }

    fn values(&self) -> &[MatrixC] {
        &self.values
    }

    fn with_values(&self, values: Vec<MatrixC>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        DyadicFn { resolution: self.resolution, dim: self.dim, values }
    }

    fn character(&self, n: usize) -> Result<Vec<C64>> {
        check_walsh_index(n, self.resolution)?;
        Ok((0..self.cells())
            .map(|k| C64::new(walsh_sign(n, k, self.resolution) as f64, 0.0))
            .collect())
    }

    fn grid(&self) -> Grid {
        Grid::Dyadic { resolution: self.resolution, dim: self.dim }
    }
}

/// Function on the discrete circle `t_m = 2πm/M − π`, `m = 0..M`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TrigRaw")]
pub struct TrigFn {
    gridsize: usize,
    dim: usize,
    /// Largest `|n|` with a possibly nonzero coefficient, when known.
    spectrum_bound: Option<usize>,
    values: Vec<MatrixC>,
}

#[derive(Deserialize)]
struct TrigRaw {
    gridsize: usize,
    dim: usize,
    #[serde(default)]
    spectrum_bound: Option<usize>,
    values: Vec<MatrixC>,
}

impl TryFrom<TrigRaw> for TrigFn {
    type Error = Error;
    fn try_from(raw: TrigRaw) -> Result<Self> {
        let f = TrigFn::from_samples(raw.gridsize, raw.dim, raw.values)?;
        match raw.spectrum_bound {
            Some(b) => f.with_spectrum_bound(b),
            None => Ok(f),
        }
    }
}

/// Sample point `t_m`.
pub fn circle_point(m: usize, gridsize: usize) -> f64 {
    2.0 * PI * m as f64 / gridsize as f64 - PI
}

/// `e^{i n t_m}`, reduced so that large `|n·m|` keeps full accuracy.
fn circle_character(n: i64, m: usize, gridsize: usize) -> C64 {
    let g = gridsize as i64;
    let phase = (n.rem_euclid(g) * m as i64).rem_euclid(g);
    let angle = 2.0 * PI * phase as f64 / gridsize as f64;
    // t_m carries the extra factor e^{-iπn} = (-1)^n.
    let sign = if n.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    C64::new(sign * angle.cos(), sign * angle.sin())
}

impl TrigFn {
    /// Arbitrary samples; no band limit is claimed.
    pub fn from_samples(gridsize: usize, dim: usize, values: Vec<MatrixC>) -> Result<Self> {
        if gridsize == 0 || dim == 0 {
            return Err(Error::Domain("gridsize and dimension must be positive".into()));
        }
        if values.len() != gridsize {
            return Err(Error::Shape(format!("{} values for gridsize {gridsize}", values.len())));
        }
        if let Some(bad) = values.iter().position(|v| v.dim() != dim) {
            return Err(Error::Shape(format!("point {bad} has dimension {}", values[bad].dim())));
        }
        Ok(TrigFn { gridsize, dim, spectrum_bound: None, values })
    }

    pub fn zeros(gridsize: usize, dim: usize) -> Result<Self> {
        Self::from_samples(gridsize, dim, vec![MatrixC::zeros(dim); gridsize])
    }

    pub fn constant(gridsize: usize, value: MatrixC) -> Result<Self> {
        let dim = value.dim();
        Ok(Self::from_samples(gridsize, dim, vec![value; gridsize])?.with_spectrum_bound(0)?)
    }

    /// Trigonometric polynomial `Σ_n ĉ(n) e^{int}` sampled on the grid.
    pub fn from_coefficients(gridsize: usize, dim: usize, coefficients: &[(i64, MatrixC)]) -> Result<Self> {
        let bound = coefficients.iter().map(|(n, _)| n.unsigned_abs() as usize).max().unwrap_or(0);
        if 2 * bound >= gridsize {
            return Err(Error::Alias(format!(
                "frequency {bound} needs gridsize above {}, got {gridsize}",
                2 * bound
            )));
        }
        let mut values = vec![MatrixC::zeros(dim); gridsize];
        for (n, c) in coefficients {
            if c.dim() != dim {
                return Err(Error::Shape(format!("coefficient at {n} has dimension {}", c.dim())));
            }
            for (m, v) in values.iter_mut().enumerate() {
                *v = &*v + &c.scale(circle_character(*n, m, gridsize));
            }
        }
        Ok(TrigFn { gridsize, dim, spectrum_bound: Some(bound), values })
    }

    /// Declares a band limit, verifying it against the discrete coefficients.
    pub fn with_spectrum_bound(mut self, bound: usize) -> Result<Self> {
        if 2 * bound >= self.gridsize {
            return Err(Error::Alias(format!(
                "spectrum bound {bound} is not alias-free at gridsize {}",
                self.gridsize
            )));
        }
        let scale = 1.0 + self.max_abs();
        for n in self.window() {
            if n.unsigned_abs() as usize > bound {
                let c = self.coefficient(n)?;
                if c.max_abs() > 1e-10 * scale {
                    return Err(Error::Domain(format!(
                        "coefficient at {n} is {:e}, beyond the declared bound {bound}",
                        c.max_abs()
                    )));
                }
            }
        }
        self.spectrum_bound = Some(bound);
        Ok(self)
    }

    pub fn gridsize(&self) -> usize {
        self.gridsize
    }

    pub fn spectrum_bound(&self) -> Option<usize> {
        self.spectrum_bound
    }

    /// Frequencies `n` with `|n| < M/2`.
    pub fn window(&self) -> std::ops::RangeInclusive<i64> {
        let half = ((self.gridsize - 1) / 2) as i64;
        -half..=half
    }

    pub fn fourier_coeff(&self, n: i64) -> Result<MatrixC> {
        if 2 * n.unsigned_abs() as usize >= self.gridsize {
            return Err(Error::Alias(format!(
                "frequency {n} aliases at gridsize {}",
                self.gridsize
            )));
        }
        self.coefficient(n)
    }

    /// Multiplication by `z^k`, tracking the band limit.
    pub fn modulate_checked(&self, k: i64) -> Result<Self> {
        let mut out = self.modulate(k)?;
        out.spectrum_bound = match self.spectrum_bound {
            Some(b) => {
                let nb = b + k.unsigned_abs() as usize;
                if 2 * nb >= self.gridsize {
                    return Err(Error::Alias(format!(
                        "modulating by {k} pushes the spectrum to {nb} at gridsize {}",
                        self.gridsize
                    )));
                }
                Some(nb)
            }
            None => None,
        };
        Ok(out)
    }
}

impl GridFn for TrigFn {
    type Char = i64;

    fn dim(&self) -> usize {
        self.dim
    }

    fn values(&self) -> &[MatrixC] {
        &self.values
    }

    fn with_values(&self, values: Vec<MatrixC>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        TrigFn { gridsize: self.gridsize, dim: self.dim, spectrum_bound: None, values }
    }

    fn character(&self, n: i64) -> Result<Vec<C64>> {
        if n.unsigned_abs() as usize >= self.gridsize {
            return Err(Error::Alias(format!(
                "character z^{n} repeats a lower one at gridsize {}",
                self.gridsize
            )));
        }
        Ok((0..self.gridsize).map(|m| circle_character(n, m, self.gridsize)).collect())
    }

    fn grid(&self) -> Grid {
        Grid::Circle { gridsize: self.gridsize, dim: self.dim }
    }
}

/// Strongly lacunary set: `1 ≤ k_0` and `k_{j+1} > 2 k_j`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<u64>", into = "Vec<u64>")]
pub struct LacunarySet(Vec<u64>);

impl LacunarySet {
    pub fn new(elements: Vec<u64>) -> Result<Self> {
        match elements.first() {
            None => return Err(Error::Lacunarity("empty set".into())),
            Some(0) => return Err(Error::Lacunarity("k_0 must be at least 1".into())),
            _ => {}
        }
        for (j, w) in elements.windows(2).enumerate() {
            if w[1] <= 2 * w[0] {
                return Err(Error::Lacunarity(format!(
                    "k_{} = {} is not above 2·k_{j} = {}",
                    j + 1,
                    w[1],
                    2 * w[0]
                )));
            }
        }
        Ok(LacunarySet(elements))
    }

    pub fn elements(&self) -> &[u64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max(&self) -> u64 {
        *self.0.last().expect("nonempty")
    }

    pub fn contains(&self, n: i64) -> bool {
        n > 0 && self.0.binary_search(&(n as u64)).is_ok()
    }

    /// The smallest admissible successor of the last element, `2·k_max + 1`.
    pub fn next_minimal(&self) -> u64 {
        2 * self.max() + 1
    }
}

impl TryFrom<Vec<u64>> for LacunarySet {
    type Error = Error;
    fn try_from(v: Vec<u64>) -> Result<Self> {
        LacunarySet::new(v)
    }
}

impl From<LacunarySet> for Vec<u64> {
    fn from(k: LacunarySet) -> Vec<u64> {
        k.0
    }
}

/// Either kind of function, tagged for JSON persistence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FnDocument {
    Dyadic(DyadicFn),
    Trig(TrigFn),
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn rademacher_examples() {
        assert_eq!(rademacher_value(0, 0, 1).unwrap(), 1);
        assert_eq!(rademacher_value(0, 1, 1).unwrap(), -1);
        let r1: Vec<i8> = (0..4).map(|k| rademacher_value(1, k, 2).unwrap()).collect();
        assert_eq!(r1, vec![1, -1, 1, -1]);
        assert!(matches!(rademacher_value(2, 0, 2), Err(Error::Resolution(_))));
    }

    #[test]
    fn walsh_examples() {
        for k in 0..8 {
            assert_eq!(walsh_value(0, k, 3).unwrap(), 1);
        }
        for j in 0..3 {
            for k in 0..8 {
                assert_eq!(walsh_value(1 << j, k, 3).unwrap(), rademacher_value(j, k, 3).unwrap());
            }
        }
        let w3: Vec<i8> = (0..4).map(|k| walsh_value(3, k, 2).unwrap()).collect();
        assert_eq!(w3, vec![1, -1, -1, 1]);
        assert!(matches!(walsh_value(4, 0, 2), Err(Error::Resolution(_))));
    }

    #[test]
    fn walsh_products() {
        assert_eq!(walsh_index_product(9, 9), 0);
        assert_eq!(walsh_index_product(1, 2), 3);
        assert_eq!(walsh_index_product(5, 3), 6);
        for k in 0..8 {
            let lhs = walsh_value(5, k, 3).unwrap() * walsh_value(3, k, 3).unwrap();
            assert_eq!(lhs, walsh_value(6, k, 3).unwrap());
        }
    }

    #[test]
    fn walsh_coeff_examples() {
        let p = MatrixC::from_real_rows(&[&[1.0, 2.0], &[-1.0, 0.5]]);
        let f = DyadicFn::constant(3, p.clone()).unwrap();
        assert!((&f.walsh_coeff(0).unwrap() - &p).max_abs() < 1e-15);
        let g = f.modulate(1).unwrap();
        assert!((&g.walsh_coeff(1).unwrap() - &p).max_abs() < 1e-15);
        assert!(g.walsh_coeff(3).unwrap().max_abs() < 1e-15);
        assert!(matches!(g.walsh_coeff(8), Err(Error::Resolution(_))));
    }

    #[test]
    fn fourier_coeff_examples() {
        let i2 = MatrixC::identity(2);
        let f = TrigFn::from_coefficients(16, 2, &[(3, i2.clone())]).unwrap();
        assert!((&f.fourier_coeff(3).unwrap() - &i2).max_abs() < 1e-13);
        for n in f.window().filter(|&n| n != 3) {
            assert!(f.fourier_coeff(n).unwrap().max_abs() < 1e-13, "n = {n}");
        }
        let p = MatrixC::from_real_diag(&[2.0, -1.0]);
        let k = TrigFn::constant(9, p.clone()).unwrap();
        assert!((&k.fourier_coeff(0).unwrap() - &p).max_abs() < 1e-14);
        assert!(matches!(f.fourier_coeff(8), Err(Error::Alias(_))));
        assert!(matches!(f.fourier_coeff(-8), Err(Error::Alias(_))));
    }

    #[test]
    fn sample_points_follow_convention() {
        // values[m] is f(t_m) with t_0 = -π.
        let f = TrigFn::from_coefficients(8, 1, &[(1, MatrixC::identity(1))]).unwrap();
        for m in 0..8 {
            let t = circle_point(m, 8);
            let z = f.values()[m].get(0, 0);
            assert_abs_diff_eq!(z.re, t.cos(), epsilon = 1e-14);
            assert_abs_diff_eq!(z.im, t.sin(), epsilon = 1e-14);
        }
    }

    #[test]
    fn l1_norm_examples() {
        let f = DyadicFn::constant(2, MatrixC::identity(3)).unwrap();
        assert_abs_diff_eq!(l1_s1_norm(&f).unwrap(), 3.0, epsilon = 1e-13);
        let g = DyadicFn::constant(2, MatrixC::from_real_diag(&[1.0, 0.0])).unwrap().modulate(1).unwrap();
        assert_abs_diff_eq!(l1_s1_norm(&g).unwrap(), 1.0, epsilon = 1e-13);
        // r_0 + r_1 on four cells takes the values (2, 0, 0, -2).
        let one = MatrixC::identity(1);
        let h = DyadicFn::rademacher_series(2, &[one.clone(), one]).unwrap();
        let cells: Vec<f64> = h.values().iter().map(|v| v.get(0, 0).re).collect();
        assert_eq!(cells, vec![2.0, 0.0, 0.0, -2.0]);
        assert_abs_diff_eq!(l1_s1_norm(&h).unwrap(), 1.0, epsilon = 1e-13);
    }

    #[test]
    fn inner_product_examples() {
        let i2 = MatrixC::identity(2);
        let u = DyadicFn::constant(2, i2.clone()).unwrap();
        assert_abs_diff_eq!(l2_s2_inner(&u, &u).unwrap().re, 2.0, epsilon = 1e-14);
        let r0 = u.modulate(1).unwrap();
        let r1 = u.modulate(2).unwrap();
        assert!(l2_s2_inner(&r0, &r1).unwrap().norm() < 1e-15);
        let e = TrigFn::from_coefficients(8, 2, &[(1, MatrixC::from_real_diag(&[1.0, 0.0]))]).unwrap();
        let ip = l2_s2_inner(&e, &e).unwrap();
        assert_abs_diff_eq!(ip.re, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(ip.im, 0.0, epsilon = 1e-14);

        let other = DyadicFn::constant(3, i2).unwrap();
        assert!(matches!(l2_s2_inner(&u, &other), Err(Error::Domain(_))));
        assert!(matches!(partial_inner(&u, &other), Err(Error::Domain(_))));
    }

    #[test]
    fn partial_inner_of_unitary_values() {
        let rot = |t: f64| {
            MatrixC::from_fn(2, |i, j| match (i, j) {
                (0, 0) | (1, 1) => c(t.cos()),
                (0, 1) => c(-t.sin()),
                _ => c(t.sin()),
            })
        };
        let u = TrigFn::from_samples(7, 2, (0..7).map(|m| rot(0.3 * m as f64)).collect()).unwrap();
        let p = partial_inner(&u, &u).unwrap();
        assert!((&p - &MatrixC::identity(2)).max_abs() < 1e-14);
    }

    #[test]
    fn modulate_examples() {
        let p = MatrixC::from_real_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let f = DyadicFn::constant(3, p.clone()).unwrap().modulate(6).unwrap();
        assert_eq!(f.modulate(4).unwrap().modulate(4).unwrap(), f);

        let one = TrigFn::constant(16, MatrixC::identity(2)).unwrap();
        let shifted = one.modulate_checked(5).unwrap();
        let expected = TrigFn::from_coefficients(16, 2, &[(5, MatrixC::identity(2))]).unwrap();
        assert!(shifted.sub(&expected).unwrap().max_abs() < 1e-14);
        assert_eq!(shifted.spectrum_bound(), Some(5));
        assert!(matches!(shifted.modulate_checked(3), Err(Error::Alias(_))));
        assert!(matches!(one.modulate(16), Err(Error::Alias(_))));
    }

    #[test]
    fn pointwise_product_examples() {
        let u = DyadicFn::constant(1, MatrixC::from_real_rows(&[&[0.0, 1.0], &[-1.0, 0.0]])).unwrap();
        let p = pointwise_product(&u, &u, ProductMode::AdjointLeft).unwrap();
        assert!(p.sub(&DyadicFn::constant(1, MatrixC::identity(2)).unwrap()).unwrap().max_abs() < 1e-15);
        let z = u.zeros_like();
        assert_eq!(pointwise_product(&z, &u, ProductMode::Plain).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn spectrum_bound_is_checked() {
        let f = TrigFn::from_coefficients(16, 1, &[(2, MatrixC::identity(1))]).unwrap();
        let raw = TrigFn::from_samples(16, 1, f.values().to_vec()).unwrap();
        assert!(raw.clone().with_spectrum_bound(2).is_ok());
        assert!(raw.clone().with_spectrum_bound(1).is_err());
        assert!(matches!(raw.with_spectrum_bound(8), Err(Error::Alias(_))));
        assert!(TrigFn::from_coefficients(8, 1, &[(4, MatrixC::identity(1))]).is_err());
    }

    #[test]
    fn lacunary_validation() {
        assert!(LacunarySet::new(vec![1, 3, 7, 15]).is_ok());
        assert!(matches!(LacunarySet::new(vec![0, 1]), Err(Error::Lacunarity(_))));
        assert!(matches!(LacunarySet::new(vec![1, 2]), Err(Error::Lacunarity(_))));
        assert!(matches!(LacunarySet::new(vec![]), Err(Error::Lacunarity(_))));
        let k = LacunarySet::new(vec![2, 5, 11]).unwrap();
        assert!(k.contains(5) && !k.contains(6) && !k.contains(-5));
        assert_eq!(k.next_minimal(), 23);
        let parsed: std::result::Result<LacunarySet, _> = serde_json::from_str("[1, 2]");
        assert!(parsed.is_err());
    }

    #[test]
    fn json_documents_round_trip() {
        let f = DyadicFn::rademacher_series(2, &[MatrixC::identity(2)]).unwrap();
        let doc = FnDocument::Dyadic(f);
        let s = serde_json::to_string(&doc).unwrap();
        assert!(s.starts_with(r#"{"kind":"dyadic","resolution":2,"dim":2,"values":"#));
        assert_eq!(serde_json::from_str::<FnDocument>(&s).unwrap(), doc);

        let t = TrigFn::from_coefficients(8, 1, &[(-1, MatrixC::identity(1))]).unwrap();
        let s = serde_json::to_string(&FnDocument::Trig(t)).unwrap();
        assert!(s.contains(r#""spectrum_bound":1"#));
        let bad = r#"{"kind":"dyadic","resolution":2,"dim":1,"values":[[[1,0]]]}"#;
        assert!(serde_json::from_str::<FnDocument>(bad).is_err());
    }
}
