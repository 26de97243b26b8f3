//! Module-closed subspaces, nested projections and the three splitting
//! constructions.
//!
//! Every subspace used here is the closed span of products `χ·h·b` with `χ`
//! ranging over a set of characters and `b` over all `d×d` matrices. Such a
//! span is closed under right multiplication, so it splits column by column:
//! `u` belongs to it iff every column of `u` lies in the space `W` spanned by
//! the vector functions `χ(t)·h(t)e_p`. [`ModuleSpan`] keeps an orthonormal
//! basis of `W` only; projecting a matrix function projects each column.
//!
//! Given `f = h*g` and a target coefficient `⟨g, A_j h⟩_p`, a chain of
//! projections `Q_0 ⊂ Q_1 ⊂ …` with `A_j h ∈ range Q_{j+1}` splits it as
//!
//! ```text
//! ⟨g, A_j h⟩_p = ⟨Q_j g, A_j h⟩_p + ⟨(Q_{j+1} − Q_j) g, A_j h⟩_p = a_j + b_j.
//! ```

use serde::Serialize;

use crate::error::{Error, Result};
use crate::factorize::{generic_factor, FactorPair};
use crate::matrix::{trace_norm, MatrixC, C64};
use crate::opfunc::{
    check_same_shape, l1_s1_norm, partial_inner, DyadicFn, GridFn, LacunarySet, TrigFn,
};
use crate::seqnorm::{column_norm, row_norm, OpSequence};

/// Generators whose residual falls below this fraction of the leading
/// generator norm are treated as dependent.
pub const SPAN_RANK_TOL: f64 = 1e-10;

/// Euclidean-orthonormal vectors of a common length, stored row by row.
#[derive(Clone, Debug)]
struct Orthonormal {
    len: usize,
    data: Vec<C64>,
}

impl Orthonormal {
    fn new(len: usize) -> Self {
        Orthonormal { len, data: Vec::new() }
    }

    fn rank(&self) -> usize {
        if self.len == 0 {
            0
        } else {
            self.data.len() / self.len
        }
    }

    fn vector(&self, k: usize) -> &[C64] {
        &self.data[k * self.len..(k + 1) * self.len]
    }

    fn truncated(&self, rank: usize) -> Self {
        Orthonormal { len: self.len, data: self.data[..rank * self.len].to_vec() }
    }

    /// `⟨x_i, e_k⟩` for the first `upto` basis vectors, reading each basis
    /// vector once.
    fn block_coefficients(&self, xs: &[Vec<C64>], upto: usize) -> Vec<Vec<C64>> {
        let mut out = vec![Vec::with_capacity(upto); xs.len()];
        for k in 0..upto {
            let e = self.vector(k);
            for (o, x) in out.iter_mut().zip(xs) {
                o.push(dot(e, x));
            }
        }
        out
    }

    /// `x_i ← x_i − Σ_{k ∈ range} c_{ik} e_k`
    fn block_subtract(&self, xs: &mut [Vec<C64>], coeffs: &[Vec<C64>], range: std::ops::Range<usize>) {
        for k in range {
            let e = self.vector(k);
            for (x, c) in xs.iter_mut().zip(coeffs) {
                axpy(x, -c[k], e);
            }
        }
    }

    /// `Σ_{k ∈ range} c_k e_k`.
    fn combine(&self, coeffs: &[C64], range: std::ops::Range<usize>) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.len];
        for k in range {
            axpy(&mut out, coeffs[k], self.vector(k));
        }
        out
    }

    /// Orthogonal projections of several vectors onto the first `upto` basis vectors.
    fn block_project(&self, xs: &[Vec<C64>], upto: usize) -> Vec<Vec<C64>> {
        let c = self.block_coefficients(xs, upto);
        let mut out = vec![vec![C64::new(0.0, 0.0); self.len]; xs.len()];
        self.block_subtract(&mut out, &c, 0..upto);
        out.iter_mut().flatten().for_each(|z| *z = -*z);
        out
    }

    /// Largest `‖x − Px‖/‖x‖` with `P` onto the first `upto` basis vectors.
    fn relative_residual(&self, xs: &[Vec<C64>], upto: usize) -> f64 {
        let mut r = xs.to_vec();
        let c = self.block_coefficients(xs, upto);
        self.block_subtract(&mut r, &c, 0..upto);
        xs.iter().zip(&r).fold(0.0, |worst, (x, rx)| {
            let nx = norm(x);
            if nx == 0.0 {
                worst
            } else {
                worst.max(norm(rx) / nx)
            }
        })
    }

    /// Appends the vectors in order, each orthogonalized against everything
    /// before it, dropping those whose residual is at most `drop_below`.
    ///
    /// Block classical Gram-Schmidt: each block is projected off the
    /// existing basis, then orthonormalized internally. Whenever a vector
    /// keeps less than `1/√2` of its norm through a pass, the pass is
    /// repeated.
    fn extend(&mut self, vectors: Vec<Vec<C64>>, drop_below: f64) {
        const BLOCK: usize = 48;
        let mut vectors = vectors;
        while !vectors.is_empty() {
            let rest = vectors.split_off(BLOCK.min(vectors.len()));
            let mut block = std::mem::replace(&mut vectors, rest);
            let r0 = self.rank();
            let before: Vec<f64> = block.iter().map(|v| norm(v)).collect();
            let c = self.block_coefficients(&block, r0);
            self.block_subtract(&mut block, &c, 0..r0);
            let again: Vec<usize> =
                (0..block.len()).filter(|&i| norm(&block[i]) < REORTH * before[i]).collect();
            if !again.is_empty() {
                let mut redo: Vec<Vec<C64>> = again.iter().map(|&i| std::mem::take(&mut block[i])).collect();
                let c = self.block_coefficients(&redo, r0);
                self.block_subtract(&mut redo, &c, 0..r0);
                for (i, v) in again.into_iter().zip(redo) {
                    block[i] = v;
                }
            }
            for mut v in block {
                let mut n = norm(&v);
                for pass in 0..3 {
                    // The first pass covers the vectors accepted from this
                    // block; repeats cover the whole basis.
                    let from = if pass == 0 { r0 } else { 0 };
                    let prev = n;
                    for k in from..self.rank() {
                        let c = dot(self.vector(k), &v);
                        axpy(&mut v, -c, self.vector(k));
                    }
                    n = norm(&v);
                    if n <= drop_below || n >= REORTH * prev {
                        break;
                    }
                }
                if n > drop_below && n > 0.0 {
                    self.data.extend(v.iter().map(|x| x / n));
                }
            }
        }
    }
}

/// Fraction of its norm a vector must keep through a Gram-Schmidt pass to
/// skip reorthogonalization.
const REORTH: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// `y ← y + a·x`
fn axpy(y: &mut [C64], a: C64, x: &[C64]) {
    if a == C64::new(0.0, 0.0) {
        return;
    }
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// `Σ conj(a_i)·b_i`, with split accumulators so the loop vectorizes.
fn dot(a: &[C64], b: &[C64]) -> C64 {
    let mut re = [0.0f64; 4];
    let mut im = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ta, tb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            re[k] += x[k].re * y[k].re + x[k].im * y[k].im;
            im[k] += x[k].re * y[k].im - x[k].im * y[k].re;
        }
    }
    let mut out = C64::new(re.iter().sum(), im.iter().sum());
    for (x, y) in ta.iter().zip(tb) {
        out += x.conj() * y;
    }
    out
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// A closed subspace of the discrete `L²(·; S₂)` with orthogonal projection.
pub trait Subspace<F: GridFn> {
    /// Complex dimension.
    fn rank(&self) -> usize;
    fn project(&self, v: &F) -> Result<F>;
    /// Basis orthonormal for the scalar inner product of `L²(·; S₂)`.
    fn basis_fns(&self) -> Vec<F>;
}

/// `span{ χ·h·b : χ ∈ characters, b ∈ M_d }`, closed under right multiplication.
#[derive(Clone, Debug)]
pub struct ModuleSpan<F: GridFn> {
    h: F,
    characters: Vec<F::Char>,
    columns: Orthonormal,
    lead: f64,
}

/// Builds the module span generated by `χ·h·E_pq`.
pub fn build_module_span<F: GridFn>(h: &F, characters: &[F::Char]) -> Result<ModuleSpan<F>> {
    let mut span = ModuleSpan::empty(h);
    span.extend(characters)?;
    Ok(span)
}

impl<F: GridFn> ModuleSpan<F> {
    pub fn empty(h: &F) -> Self {
        let lead = (0..h.dim()).map(|p| norm(&h.column(p))).fold(0.0, f64::max);
        ModuleSpan {
            h: h.clone(),
            characters: Vec::new(),
            columns: Orthonormal::new(h.len() * h.dim()),
            lead,
        }
    }

    /// Adds the generators `χ·h·E_pq` for new characters. Earlier basis
    /// vectors are kept, so the old span's basis is a prefix of the new one.
    pub fn extend(&mut self, characters: &[F::Char]) -> Result<()> {
        let mut generators = Vec::with_capacity(characters.len() * self.h.dim());
        for &ch in characters {
            let hm = self.h.modulate(ch)?;
            generators.extend((0..self.h.dim()).map(|p| hm.column(p)));
            self.characters.push(ch);
        }
        self.columns.extend(generators, SPAN_RANK_TOL * self.lead);
        Ok(())
    }

    pub fn characters(&self) -> &[F::Char] {
        &self.characters
    }

    /// Dimension of the column space `W`; the span itself has `d` times this.
    pub fn column_rank(&self) -> usize {
        self.columns.rank()
    }

    fn prefix(&self, column_rank: usize, characters: usize) -> Self {
        ModuleSpan {
            h: self.h.clone(),
            characters: self.characters[..characters].to_vec(),
            columns: self.columns.truncated(column_rank),
            lead: self.lead,
        }
    }

    fn check_ambient(&self, v: &F) -> Result<()> {
        check_same_shape(&self.h, v)
    }

    /// Largest entry of `⟨g, v⟩_p` over basis vectors `v` of the span.
    pub fn max_partial_inner(&self, g: &F) -> Result<f64> {
        self.check_ambient(g)?;
        let d = g.dim();
        let scale = 1.0 / (g.len() as f64).sqrt();
        let cols: Vec<Vec<C64>> = (0..d).map(|q| g.column(q)).collect();
        let mut worst = 0.0f64;
        for k in 0..self.columns.rank() {
            let e = self.columns.vector(k);
            for col in &cols {
                worst = worst.max(dot(e, col).norm() * scale);
            }
        }
        Ok(worst)
    }

    /// Largest relative residual `‖x − Px‖/‖x‖` over the columns of `v`.
    pub fn membership_residual(&self, v: &F) -> Result<f64> {
        self.check_ambient(v)?;
        let cols: Vec<Vec<C64>> = (0..v.dim()).map(|q| v.column(q)).collect();
        Ok(self.columns.relative_residual(&cols, self.columns.rank()))
    }

    /// Largest deviation of the column basis Gram matrix from the identity.
    pub fn orthonormality_defect(&self) -> f64 {
        let r = self.columns.rank();
        let mut worst = 0.0f64;
        for i in 0..r {
            for j in 0..=i {
                let g = dot(self.columns.vector(i), self.columns.vector(j));
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - target).norm());
            }
        }
        worst
    }
}

impl<F: GridFn> Subspace<F> for ModuleSpan<F> {
    fn rank(&self) -> usize {
        self.columns.rank() * self.h.dim()
    }

    fn project(&self, v: &F) -> Result<F> {
        self.check_ambient(v)?;
        let cols: Vec<Vec<C64>> = (0..v.dim()).map(|q| v.column(q)).collect();
        Ok(v.from_columns(&self.columns.block_project(&cols, self.columns.rank())))
    }

    fn basis_fns(&self) -> Vec<F> {
        let d = self.h.dim();
        let n = self.h.len() * d;
        let root = (self.h.len() as f64).sqrt();
        let zero = vec![C64::new(0.0, 0.0); n];
        let mut out = Vec::with_capacity(self.rank());
        for k in 0..self.columns.rank() {
            let e: Vec<C64> = self.columns.vector(k).iter().map(|z| z * root).collect();
            for q in 0..d {
                let cols: Vec<Vec<C64>> =
                    (0..d).map(|c| if c == q { e.clone() } else { zero.clone() }).collect();
                out.push(self.h.from_columns(&cols));
            }
        }
        out
    }
}

/// Span of arbitrary functions, orthonormalized over all matrix entries.
///
/// Unlike [`ModuleSpan`] this need not be closed under right
/// multiplication; it exists to probe what fails without that closure.
#[derive(Clone, Debug)]
pub struct FlatSpan<F: GridFn> {
    template: F,
    basis: Orthonormal,
}

fn flatten<F: GridFn>(v: &F) -> Vec<C64> {
    (0..v.dim()).flat_map(|q| v.column(q)).collect()
}

fn unflatten<F: GridFn>(template: &F, x: &[C64]) -> F {
    let n = template.len() * template.dim();
    let cols: Vec<Vec<C64>> = x.chunks(n).map(<[C64]>::to_vec).collect();
    template.from_columns(&cols)
}

impl<F: GridFn> FlatSpan<F> {
    pub fn new(generators: &[F]) -> Result<Self> {
        let template = generators
            .first()
            .ok_or_else(|| Error::Domain("flat span needs at least one generator".into()))?
            .zeros_like();
        let flat: Vec<Vec<C64>> = generators
            .iter()
            .map(|g| check_same_shape(&template, g).map(|_| flatten(g)))
            .collect::<Result<_>>()?;
        let lead = flat.iter().map(|v| norm(v)).fold(0.0, f64::max);
        let mut basis = Orthonormal::new(template.len() * template.dim() * template.dim());
        basis.extend(flat, SPAN_RANK_TOL * lead);
        Ok(FlatSpan { template, basis })
    }
}

impl<F: GridFn> Subspace<F> for FlatSpan<F> {
    fn rank(&self) -> usize {
        self.basis.rank()
    }

    fn project(&self, v: &F) -> Result<F> {
        check_same_shape(&self.template, v)?;
        let p = self.basis.block_project(&[flatten(v)], self.basis.rank());
        Ok(unflatten(&self.template, &p[0]))
    }

    fn basis_fns(&self) -> Vec<F> {
        let root = (self.template.len() as f64).sqrt();
        (0..self.basis.rank())
            .map(|k| {
                let e: Vec<C64> = self.basis.vector(k).iter().map(|z| z * root).collect();
                unflatten(&self.template, &e)
            })
            .collect()
    }
}

/// Entrywise max of `|⟨F, QG⟩_p − ⟨QF, G⟩_p|`.
///
/// Vanishes (up to rounding) exactly when the subspace is closed under
/// right multiplication.
pub fn partial_adjointness_gap<F: GridFn, S: Subspace<F>>(span: &S, f: &F, g: &F) -> Result<f64> {
    let lhs = partial_inner(f, &span.project(g)?)?;
    let rhs = partial_inner(&span.project(f)?, g)?;
    Ok((&lhs - &rhs).max_abs())
}

/// Largest `L²` residual of `u·E_pq` off the span, over basis vectors `u`.
pub fn closure_residual<F: GridFn, S: Subspace<F>>(span: &S) -> Result<f64> {
    let mut worst = 0.0f64;
    for u in span.basis_fns() {
        let d = u.dim();
        for p in 0..d {
            for q in 0..d {
                let v = u.right_mul(&MatrixC::unit(d, p, q));
                let r = v.sub(&span.project(&v)?)?;
                worst = worst.max(r.l2_norm());
            }
        }
    }
    Ok(worst)
}

/// Nested module spans `range Q_0 ⊂ range Q_1 ⊂ …`, sharing one basis.
#[derive(Clone, Debug)]
pub struct ProjectionChain<F: GridFn> {
    span: ModuleSpan<F>,
    /// Column rank of each level; level `j` is spanned by the first `ranks[j]` basis vectors.
    ranks: Vec<usize>,
    /// Number of generating characters at each level.
    char_counts: Vec<usize>,
}

impl<F: GridFn> ProjectionChain<F>
where
    F::Char: PartialEq,
{
    /// `levels[j]` lists the characters of level `j`; each must contain the previous.
    pub fn build(h: &F, levels: &[Vec<F::Char>]) -> Result<Self> {
        let mut span = ModuleSpan::empty(h);
        let mut ranks = Vec::with_capacity(levels.len());
        let mut char_counts = Vec::with_capacity(levels.len());
        for (j, level) in levels.iter().enumerate() {
            if let Some(missing) = span.characters.iter().find(|c| !level.contains(c)) {
                return Err(Error::Domain(format!(
                    "level {j} drops character {missing:?} of the previous level"
                )));
            }
            let fresh: Vec<F::Char> =
                level.iter().copied().filter(|c| !span.characters.contains(c)).collect();
            span.extend(&fresh)?;
            ranks.push(span.column_rank());
            char_counts.push(span.characters.len());
        }
        Ok(ProjectionChain { span, ranks, char_counts })
    }

    pub fn levels(&self) -> usize {
        self.ranks.len()
    }

    /// The span at level `j` as a standalone [`ModuleSpan`].
    pub fn level(&self, j: usize) -> ModuleSpan<F> {
        self.span.prefix(self.ranks[j], self.char_counts[j])
    }

    /// `Q_j v` for every level `j`.
    pub fn project_all(&self, v: &F) -> Result<Vec<F>> {
        self.span.check_ambient(v)?;
        let d = v.dim();
        let top = *self.ranks.last().unwrap_or(&0);
        let cols: Vec<Vec<C64>> = (0..d).map(|q| v.column(q)).collect();
        let coeffs = self.span.columns.block_coefficients(&cols, top);
        Ok(self
            .ranks
            .iter()
            .map(|&r| {
                let pc: Vec<Vec<C64>> = coeffs.iter().map(|c| self.span.columns.combine(c, 0..r)).collect();
                v.from_columns(&pc)
            })
            .collect())
    }

    /// Relative residual off level `j+1` of random combinations of the
    /// level-`j` generators, maximized over `j`.
    ///
    /// A combination with independent Gaussian weights leaves level `j+1`
    /// with probability one as soon as a single generator does, at the cost
    /// of one projection per level.
    pub fn nesting_residual(&self) -> Result<f64> {
        let h = &self.span.h;
        let mut rng = crate::sample::seeded(NESTING_SEED);
        let mut worst = 0.0f64;
        for j in 0..self.levels().saturating_sub(1) {
            let chars = &self.span.characters[..self.char_counts[j]];
            if chars.is_empty() {
                continue;
            }
            let n = h.len() * h.dim();
            let mut probes = vec![vec![C64::new(0.0, 0.0); n]; NESTING_PROBES];
            for &ch in chars {
                let hm = h.modulate(ch)?;
                for p in 0..h.dim() {
                    let x = hm.column(p);
                    for probe in probes.iter_mut() {
                        axpy(probe, crate::sample::complex_gaussian(&mut rng), &x);
                    }
                }
            }
            worst = worst.max(self.span.columns.relative_residual(&probes, self.ranks[j + 1]));
        }
        Ok(worst)
    }
}

const NESTING_SEED: u64 = 0x6e65_7374;
const NESTING_PROBES: usize = 2;

/// The `a_j + b_j` decomposition of the target coefficients with diagnostics.
#[derive(Clone, Debug, Serialize)]
pub struct Splitting {
    pub a: OpSequence,
    pub b: OpSequence,
    pub target: OpSequence,
    pub diagnostics: SplitDiagnostics,
}

#[derive(Clone, Debug, Serialize)]
pub struct SplitDiagnostics {
    /// `‖f‖_{L¹(S₁)}`
    pub l1_norm: f64,
    pub g_norm: f64,
    pub h_norm: f64,
    pub column_norm_a: f64,
    pub row_norm_b: f64,
    /// `column_norm_a + row_norm_b`
    pub splitting_value: f64,
    /// `‖(Q_{j+1} − Q_j) g‖²` per `j`.
    pub g_increment_energies: Vec<f64>,
    /// `max_j |a_j + b_j − target_j|`, entrywise.
    pub reconstruction_residual: f64,
    /// Residual of `h*g − f`, entrywise.
    pub factor_residual: f64,
    pub nesting_residual: f64,
    /// Largest relative residual of `A_j h` off level `j+1`.
    pub membership_residual: f64,
    /// Largest entry of `⟨g, χh⟩_p` over the gap characters.
    pub gap_orthogonality: f64,
    /// `row_norm_b ≤ mean tr√(h*Gh) ≤ mean ‖h‖₂√‖G‖₁ ≤ ‖h‖√‖G‖_{L¹(S₁)}`.
    pub b_chain: [f64; 3],
    /// Largest entry of the difference between `a_j` and its alternate form.
    pub alternate_a_residual: f64,
}

impl SplitDiagnostics {
    /// `‖g‖·‖h‖`, the bound on each half.
    pub fn half_bound(&self) -> f64 {
        self.g_norm * self.h_norm
    }
}

/// Tolerances of the splitting invariants.
pub const RECONSTRUCTION_TOL: f64 = 1e-8;
pub const HALF_BOUND_SLACK: f64 = 1e-6;

impl Splitting {
    fn scale(&self) -> f64 {
        1.0 + self.diagnostics.l1_norm
    }

    /// Violated invariants, empty when the splitting is valid.
    pub fn violations(&self) -> Vec<String> {
        let d = &self.diagnostics;
        let bound = d.half_bound() * (1.0 + HALF_BOUND_SLACK);
        let mut out = Vec::new();
        if d.reconstruction_residual > RECONSTRUCTION_TOL * self.scale() {
            out.push(format!("a + b misses the target by {:e}", d.reconstruction_residual));
        }
        if d.column_norm_a > bound + 1e-12 {
            out.push(format!("column norm of a is {} > {}", d.column_norm_a, d.half_bound()));
        }
        if d.row_norm_b > bound + 1e-12 {
            out.push(format!("row norm of b is {} > {}", d.row_norm_b, d.half_bound()));
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.violations().is_empty()
    }

    /// Violated structural properties of the chain behind the splitting:
    /// nesting, membership of `A_j h`, orthogonality on the gaps, the energy
    /// budget, the `b` estimate cascade and the alternate form of `a_j`.
    pub fn structural_violations(&self) -> Vec<String> {
        let d = &self.diagnostics;
        let slack = STRUCTURE_TOL * self.scale();
        let mut out = Vec::new();
        if d.nesting_residual > STRUCTURE_TOL {
            out.push(format!("levels do not nest (residual {:e})", d.nesting_residual));
        }
        if d.membership_residual > STRUCTURE_TOL {
            out.push(format!("A_j h leaves level j+1 (residual {:e})", d.membership_residual));
        }
        if d.gap_orthogonality > slack {
            out.push(format!("g is not orthogonal to the gaps ({:e})", d.gap_orthogonality));
        }
        let energy: f64 = d.g_increment_energies.iter().sum();
        if energy > d.g_norm.powi(2) * (1.0 + STRUCTURE_TOL) + slack {
            out.push(format!("increment energy {energy} exceeds ‖g‖² = {}", d.g_norm.powi(2)));
        }
        let chain = [d.row_norm_b, d.b_chain[0], d.b_chain[1], d.b_chain[2]];
        for (k, w) in chain.windows(2).enumerate() {
            if w[0] > w[1] + slack {
                out.push(format!("b estimate step {k} fails: {} > {}", w[0], w[1]));
            }
        }
        if d.alternate_a_residual > slack {
            out.push(format!("alternate form of a differs by {:e}", d.alternate_a_residual));
        }
        out
    }
}

/// Tolerance of the structural properties checked by
/// [`Splitting::structural_violations`].
pub const STRUCTURE_TOL: f64 = 1e-8;

/// Shared second half of every construction.
struct ChainSplit<'a, F: GridFn> {
    f: &'a F,
    pair: &'a FactorPair<F>,
    chain: &'a ProjectionChain<F>,
    /// `A_j` as the character multiplying `h`.
    shifts: &'a [F::Char],
    target: OpSequence,
    gap_characters: Vec<F::Char>,
    /// `A_j(P − P')h` per `j`, the alternate route to `a_j`.
    alternate: Vec<F>,
}

impl<F: GridFn> ChainSplit<'_, F>
where
    F::Char: PartialEq,
{
    fn run(self) -> Result<Splitting> {
        let d = self.f.dim();
        let terms = self.shifts.len();
        debug_assert_eq!(self.chain.levels(), terms + 1);
        let g = &self.pair.g;
        let h = &self.pair.h;
        let qg = self.chain.project_all(g)?;

        let mut a = Vec::with_capacity(terms);
        let mut b = Vec::with_capacity(terms);
        let mut increments = Vec::with_capacity(terms);
        let mut membership = 0.0f64;
        let mut alternate_residual = 0.0f64;
        for (j, &shift) in self.shifts.iter().enumerate() {
            let ajh = h.modulate(shift)?;
            let gj = qg[j + 1].sub(&qg[j])?;
            let aj = partial_inner(&qg[j], &ajh)?;
            b.push(partial_inner(&gj, &ajh)?);
            membership = membership.max(self.chain.level(j + 1).membership_residual(&ajh)?);
            if let Some(alt) = self.alternate.get(j) {
                alternate_residual = alternate_residual.max((&partial_inner(g, alt)? - &aj).max_abs());
            }
            a.push(aj);
            increments.push(gj);
        }
        let a = OpSequence::new(d, a)?;
        let b = OpSequence::new(d, b)?;

        let mut gap = 0.0f64;
        for &ch in &self.gap_characters {
            gap = gap.max(partial_inner(g, &h.modulate(ch)?)?.max_abs());
        }

        // G(t) = Σ_j g_j(t) g_j(t)*
        let n = self.f.len();
        let mut step0 = 0.0;
        let mut step1 = 0.0;
        let mut g_l1 = 0.0;
        for t in 0..n {
            let gt = increments
                .iter()
                .fold(MatrixC::zeros(d), |acc, gj| &acc + &gj.values()[t].mul_adjoint(&gj.values()[t]));
            let ht = &h.values()[t];
            let inner = ht.adjoint_mul(&(&gt * ht)).hermitian_part();
            step0 += crate::matrix::sqrt_psd(&inner).map(|r| r.trace().re).or_else(|_| {
                crate::matrix::schatten_norm(&inner, 0.5).map(|v| v.sqrt())
            })?;
            let gt_norm = trace_norm(&gt)?;
            step1 += ht.frobenius() * gt_norm.sqrt();
            g_l1 += gt_norm;
        }
        let h_norm = h.l2_norm();
        let b_chain = [step0 / n as f64, step1 / n as f64, h_norm * (g_l1 / n as f64).sqrt()];

        let sum = a.add(&b)?;
        let column_norm_a = column_norm(&a)?;
        let row_norm_b = row_norm(&b)?;
        let diagnostics = SplitDiagnostics {
            l1_norm: l1_s1_norm(self.f)?,
            g_norm: g.l2_norm(),
            h_norm,
            column_norm_a,
            row_norm_b,
            splitting_value: column_norm_a + row_norm_b,
            g_increment_energies: increments.iter().map(|x| x.l2_norm().powi(2)).collect(),
            reconstruction_residual: sum.max_abs_diff(&self.target)?,
            factor_residual: self.pair.reconstruction_error(self.f)?,
            nesting_residual: self.chain.nesting_residual()?,
            membership_residual: membership,
            gap_orthogonality: gap,
            b_chain,
            alternate_a_residual: alternate_residual,
        };
        Ok(Splitting { a, b, target: self.target, diagnostics })
    }
}

/// Relative tolerance of the coefficient-vanishing validators.
pub const HYPOTHESIS_TOL: f64 = 1e-10;

fn hypothesis_tolerance<F: GridFn>(f: &F) -> Result<f64> {
    Ok(HYPOTHESIS_TOL * l1_s1_norm(f)?.max(f.max_abs()))
}

/// Walsh indices `n < 2^N`, not powers of two, with nonzero coefficient.
pub fn khintchine_violations(f: &DyadicFn) -> Result<Vec<i64>> {
    let tol = hypothesis_tolerance(f)?;
    let mut bad = Vec::new();
    for n in 0..f.cells() {
        if !n.is_power_of_two() && f.walsh_coeff(n)?.max_abs() > tol {
            bad.push(n as i64);
        }
    }
    Ok(bad)
}

/// Splits the Rademacher coefficients `d_j = f̂(w_{2^j})`, `j < terms`.
///
/// `A_j` multiplies by `w_{2^j}`, and `Q_j` projects onto
/// `A_j M_j = span{w_n h b : n < 2^{j+1}, n ≠ 2^j}`. The resolution must be
/// at least `terms`; when it is exactly `terms` the last projection is onto
/// the span of all Walsh modulates of `h`.
pub fn khintchine_split(f: &DyadicFn, terms: usize) -> Result<Splitting> {
    if terms == 0 {
        return Err(Error::Domain("at least one term is required".into()));
    }
    if (f.resolution() as usize) < terms {
        return Err(Error::Resolution(format!(
            "{terms} terms need resolution at least {terms}, got {}",
            f.resolution()
        )));
    }
    let bad = khintchine_violations(f)?;
    if !bad.is_empty() {
        return Err(Error::Hypothesis { what: "Walsh coefficient off the powers of 2".into(), offending: bad });
    }
    let pair = generic_factor(f)?;
    let m_chars = |j: usize| -> Vec<usize> { (1..1usize << (j + 1)).collect() };
    // Q_j for j = 0..=terms: images A_j M_j, clipped to the grid. Only the
    // last level can reach past it, and then it covers the whole grid.
    let cells = f.cells();
    let levels: Vec<Vec<usize>> = (0..=terms)
        .map(|j| {
            m_chars(j)
                .into_iter()
                .map(|n| crate::opfunc::walsh_index_product(n, 1 << j))
                .filter(|&m| m < cells)
                .collect()
        })
        .collect();
    let chain = ProjectionChain::build(&pair.h, &levels)?;
    let shifts: Vec<usize> = (0..terms).map(|j| 1usize << j).collect();
    let target = OpSequence::new(f.dim(), shifts.iter().map(|&n| f.walsh_coeff(n)).collect::<Result<_>>()?)?;

    // A_{j+1} M_j = span{w_n h b : 2^{j+1} < n < 2^{j+2}}
    let gap_characters: Vec<usize> = (0..terms)
        .flat_map(|j| (1usize << (j + 1)) + 1..(1usize << (j + 2)).min(cells))
        .collect();

    // a_j = ⟨g, A_j (P_j − P_{j−1}) h⟩_p with P_j onto M_j, P_{−1} = 0.
    let p_levels: Vec<Vec<usize>> = (0..terms).map(m_chars).collect();
    let p_chain = ProjectionChain::build(&pair.h, &p_levels)?;
    let ph = p_chain.project_all(&pair.h)?;
    let alternate = (0..terms)
        .map(|j| {
            let diff = if j == 0 { ph[0].clone() } else { ph[j].sub(&ph[j - 1])? };
            diff.modulate(shifts[j])
        })
        .collect::<Result<Vec<_>>>()?;

    ChainSplit { f, pair: &pair, chain: &chain, shifts: &shifts, target, gap_characters, alternate }.run()
}

/// Largest frequency in the window with a coefficient above tolerance.
fn effective_spectrum(f: &TrigFn, tol: f64) -> Result<(i64, i64)> {
    let mut lo = 0i64;
    let mut hi = 0i64;
    for n in f.window() {
        if f.fourier_coeff(n)?.max_abs() > tol {
            lo = lo.min(n);
            hi = hi.max(n);
        }
    }
    Ok((lo, hi))
}

/// Positive frequencies outside `K` (within the window) with nonzero coefficient.
pub fn complementary_violations(f: &TrigFn, k: &LacunarySet) -> Result<Vec<i64>> {
    let tol = hypothesis_tolerance(f)?;
    let mut bad = Vec::new();
    for n in 1..=*f.window().end() {
        if !k.contains(n) && f.fourier_coeff(n)?.max_abs() > tol {
            bad.push(n);
        }
    }
    Ok(bad)
}

/// Negative frequencies (within the window) with nonzero coefficient.
pub fn analytic_violations(f: &TrigFn) -> Result<Vec<i64>> {
    let tol = hypothesis_tolerance(f)?;
    let mut bad = Vec::new();
    for n in *f.window().start()..0 {
        if f.fourier_coeff(n)?.max_abs() > tol {
            bad.push(n);
        }
    }
    Ok(bad)
}

fn lacunary_targets(f: &TrigFn, k: &LacunarySet) -> Result<(Vec<i64>, OpSequence)> {
    let shifts: Vec<i64> = k.elements().iter().map(|&x| x as i64).collect();
    let items = shifts.iter().map(|&n| f.fourier_coeff(n)).collect::<Result<Vec<_>>>()?;
    Ok((shifts, OpSequence::new(f.dim(), items)?))
}

/// `k_0, …, k_J` followed by the minimal successor `2k_J + 1`, which closes
/// the chain for the last term.
fn extended_lacunary(k: &LacunarySet) -> Vec<i64> {
    let mut ks: Vec<i64> = k.elements().iter().map(|&x| x as i64).collect();
    ks.push(k.next_minimal() as i64);
    ks
}

/// Splits `f̂(k_j)` when `f̂` vanishes at positive integers off `K`.
///
/// `A_j` multiplies by `z^{k_j}`; `Q_j` projects onto
/// `A_j M_j = span{z^m h b : 0 ≤ m < k_j}`.
pub fn paley_case2_split(f: &TrigFn, k: &LacunarySet) -> Result<Splitting> {
    let ks = extended_lacunary(k);
    let tol = hypothesis_tolerance(f)?;
    let (lo, _) = effective_spectrum(f, tol)?;
    let m = f.gridsize() as i64;
    let top = *ks.last().expect("nonempty");
    // Characters [0, top) must be distinct and the gaps must not wrap onto negative support.
    if top >= m + lo || 2 * k.max() as i64 >= m {
        return Err(Error::Alias(format!(
            "gridsize {m} is too small for K up to {} with negative support down to {lo}",
            k.max()
        )));
    }
    let bad = complementary_violations(f, k)?;
    if !bad.is_empty() {
        return Err(Error::Hypothesis { what: "positive coefficient off K".into(), offending: bad });
    }
    let pair = generic_factor(f)?;
    let levels: Vec<Vec<i64>> = ks.iter().map(|&kj| (0..kj).collect()).collect();
    let chain = ProjectionChain::build(&pair.h, &levels)?;
    let (shifts, target) = lacunary_targets(f, k)?;

    // A_{j+1} M_j = span{z^n h b : k_{j+1} − k_j ≤ n < k_{j+1}}
    let gap_characters: Vec<i64> =
        (0..k.len()).flat_map(|j| ks[j + 1] - ks[j]..ks[j + 1]).collect();

    // a_j = ⟨g, A_j (P_j − P_{j−1}) h⟩_p, P_j onto M_j = span{z^n h b : −k_j ≤ n < 0}.
    let p_levels: Vec<Vec<i64>> = shifts.iter().map(|&kj| (-kj..0).collect()).collect();
    let p_chain = ProjectionChain::build(&pair.h, &p_levels)?;
    let ph = p_chain.project_all(&pair.h)?;
    let alternate = (0..shifts.len())
        .map(|j| {
            let diff = if j == 0 { ph[0].clone() } else { ph[j].sub(&ph[j - 1])? };
            diff.modulate(shifts[j])
        })
        .collect::<Result<Vec<_>>>()?;

    ChainSplit { f, pair: &pair, chain: &chain, shifts: &shifts, target, gap_characters, alternate }.run()
}

/// Default truncation depth for [`paley_case1_split`]: the effective
/// spectrum bound of `f` plus the widest gap `k_{j+1} − k_j`.
pub fn default_tail_depth(f: &TrigFn, k: &LacunarySet) -> Result<usize> {
    let (_, hi) = effective_spectrum(f, hypothesis_tolerance(f)?)?;
    let ks = extended_lacunary(k);
    let widest = ks.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0);
    Ok((hi + widest) as usize)
}

/// Splits `f̂(k_j)` when `f̂` vanishes on the negative integers.
///
/// The infinite spans `A_{j+1}L_j = span{z^m h b : m < k_{j+1} − k_j}` are
/// truncated at the floor `−tail_depth`; `Q_0 = 0` and `Q_{j+1}` projects
/// onto the truncated `A_{j+1}L_j`.
pub fn paley_case1_split(f: &TrigFn, k: &LacunarySet, tail_depth: usize) -> Result<Splitting> {
    let ks = extended_lacunary(k);
    let floor = -(tail_depth as i64);
    let widths: Vec<i64> = ks.windows(2).map(|w| w[1] - w[0]).collect();
    let widest = *widths.iter().max().expect("nonempty");
    if (tail_depth as i64) < widest {
        return Err(Error::Truncation(format!(
            "tail depth {tail_depth} is below the widest gap {widest}"
        )));
    }
    let bad = analytic_violations(f)?;
    if !bad.is_empty() {
        return Err(Error::Hypothesis { what: "negative coefficient".into(), offending: bad });
    }
    let tol = hypothesis_tolerance(f)?;
    let (_, hi) = effective_spectrum(f, tol)?;
    let m = f.gridsize() as i64;
    // Negative characters down to floor − widest must stay clear of [0, hi] modulo M.
    if tail_depth as i64 + widest >= m - hi || 2 * k.max() as i64 >= m {
        return Err(Error::Alias(format!(
            "gridsize {m} cannot hold tail depth {tail_depth} with gap {widest} and spectrum up to {hi}"
        )));
    }
    let pair = generic_factor(f)?;
    let mut levels: Vec<Vec<i64>> = vec![Vec::new()];
    levels.extend(widths.iter().map(|&w| (floor..w).collect::<Vec<i64>>()));
    let chain = ProjectionChain::build(&pair.h, &levels)?;
    let (shifts, target) = lacunary_targets(f, k)?;

    // A_j L_j = span{z^n h b : floor − (k_{j+1} − k_j) ≤ n < 0}
    let gap_characters: Vec<i64> = (floor - widest..0).collect();

    // Q_j A_j = A_j P_{j−1} with P_{j−1} onto the truncated L_{j−1}; a_0 = 0.
    let mut alternate = vec![pair.h.zeros_like()];
    for j in 1..shifts.len() {
        let l_prev: Vec<i64> = (floor - shifts[j]..-shifts[j - 1]).collect();
        let span = build_module_span(&pair.h, &l_prev)?;
        alternate.push(span.project(&pair.h)?.modulate(shifts[j])?);
    }

    ChainSplit { f, pair: &pair, chain: &chain, shifts: &shifts, target, gap_characters, alternate }.run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqnorm::splitting_value;
    use approx::assert_abs_diff_eq;

    fn one() -> MatrixC {
        MatrixC::identity(1)
    }

    #[test]
    fn empty_characters_give_empty_span() {
        let h = DyadicFn::constant(2, MatrixC::identity(2)).unwrap();
        let span = build_module_span(&h, &[]).unwrap();
        assert_eq!(span.rank(), 0);
        let v = h.modulate(3).unwrap();
        assert_eq!(span.project(&v).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn identity_h_spans_one_frequency_slot() {
        let h = TrigFn::constant(8, MatrixC::identity(2)).unwrap();
        let span = build_module_span(&h, &[3]).unwrap();
        assert_eq!(span.rank(), 4);
        let p = MatrixC::from_real_rows(&[&[1.0, -2.0], &[0.5, 4.0]]);
        let inside = TrigFn::from_coefficients(8, 2, &[(3, p.clone())]).unwrap();
        assert!(span.project(&inside).unwrap().sub(&inside).unwrap().max_abs() < 1e-12);
        let outside = TrigFn::from_coefficients(8, 2, &[(2, p)]).unwrap();
        assert!(span.project(&outside).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn zero_h_gives_rank_zero() {
        let h = DyadicFn::zeros(3, 2).unwrap();
        let span = build_module_span(&h, &[0, 1, 2, 3]).unwrap();
        assert_eq!(span.rank(), 0);
    }

    #[test]
    fn khintchine_single_term() {
        let p = MatrixC::from_real_rows(&[&[1.0, 2.0], &[-1.0, 0.5]]);
        let f = DyadicFn::rademacher_series(2, &[p.clone()]).unwrap();
        let s = khintchine_split(&f, 1).unwrap();
        assert!(s.violations().is_empty(), "{:?}", s.violations());
        let sum = &s.a.items()[0] + &s.b.items()[0];
        assert!((&sum - &p).max_abs() < 1e-10);
        let l1 = l1_s1_norm(&f).unwrap();
        assert!(splitting_value(&s.a, &s.b).unwrap() <= 2.0 * l1 * (1.0 + 1e-6));
    }

    #[test]
    fn khintchine_scalar_two_terms() {
        let f = DyadicFn::rademacher_series(2, &[one(), one()]).unwrap();
        let s = khintchine_split(&f, 2).unwrap();
        assert!(s.violations().is_empty(), "{:?}", s.violations());
        assert_abs_diff_eq!(s.target.items()[0].get(0, 0).re, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.target.items()[1].get(0, 0).re, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.diagnostics.l1_norm, 1.0, epsilon = 1e-14);
        assert!(s.diagnostics.splitting_value <= 2.0 + 1e-6);
    }

    #[test]
    fn khintchine_zero_function() {
        let f = DyadicFn::zeros(3, 2).unwrap();
        let s = khintchine_split(&f, 2).unwrap();
        assert_eq!(s.a.max_abs_diff(&OpSequence::zeros(2, 2)).unwrap(), 0.0);
        assert_eq!(s.b.max_abs_diff(&OpSequence::zeros(2, 2)).unwrap(), 0.0);
    }

    #[test]
    fn khintchine_rejects_non_rademacher_input() {
        let f = DyadicFn::constant(3, MatrixC::identity(2)).unwrap().modulate(3).unwrap();
        match khintchine_split(&f, 2) {
            Err(Error::Hypothesis { offending, .. }) => assert_eq!(offending, vec![3]),
            other => panic!("expected hypothesis error, got {other:?}"),
        }
        let g = DyadicFn::rademacher_series(2, &[one(), one()]).unwrap();
        assert!(matches!(khintchine_split(&g, 2).map(|_| ()), Ok(())));
        assert!(matches!(khintchine_split(&g, 3), Err(Error::Resolution(_))));
    }

    #[test]
    fn case2_single_frequency() {
        let p = MatrixC::from_real_rows(&[&[2.0, 1.0], &[0.0, -1.0]]);
        let k = LacunarySet::new(vec![3]).unwrap();
        let f = TrigFn::from_coefficients(32, 2, &[(3, p.clone())]).unwrap();
        let s = paley_case2_split(&f, &k).unwrap();
        assert!(s.violations().is_empty(), "{:?}", s.violations());
        assert!((&(&s.a.items()[0] + &s.b.items()[0]) - &p).max_abs() < 1e-10);
        let bound = 2.0 * crate::matrix::trace_norm(&p).unwrap() * (1.0 + 1e-6);
        assert!(s.diagnostics.splitting_value <= bound);
    }

    #[test]
    fn case2_rejects_complementary_frequency() {
        let k = LacunarySet::new(vec![1, 3]).unwrap();
        let f = TrigFn::from_coefficients(32, 1, &[(1, one()), (2, one())]).unwrap();
        match paley_case2_split(&f, &k) {
            Err(Error::Hypothesis { offending, .. }) => assert_eq!(offending, vec![2]),
            other => panic!("expected hypothesis error, got {other:?}"),
        }
    }

    #[test]
    fn case1_single_frequency_forces_a0_zero() {
        let p = MatrixC::from_real_rows(&[&[1.0, 0.0], &[2.0, 1.0]]);
        let k = LacunarySet::new(vec![2]).unwrap();
        let f = TrigFn::from_coefficients(40, 2, &[(2, p.clone())]).unwrap();
        let depth = default_tail_depth(&f, &k).unwrap();
        let s = paley_case1_split(&f, &k, depth).unwrap();
        assert!(s.violations().is_empty(), "{:?}", s.violations());
        assert!(s.a.items()[0].max_abs() < 1e-10);
        assert!((&s.b.items()[0] - &p).max_abs() < 1e-10);
    }

    #[test]
    fn case1_rejects_negative_frequency() {
        let k = LacunarySet::new(vec![1]).unwrap();
        let f = TrigFn::from_coefficients(32, 1, &[(1, one()), (-1, one())]).unwrap();
        match paley_case1_split(&f, &k, 8) {
            Err(Error::Hypothesis { offending, .. }) => assert_eq!(offending, vec![-1]),
            other => panic!("expected hypothesis error, got {other:?}"),
        }
    }

    #[test]
    fn case1_rejects_shallow_truncation() {
        let k = LacunarySet::new(vec![1, 5]).unwrap();
        let f = TrigFn::from_coefficients(64, 1, &[(1, one())]).unwrap();
        assert!(matches!(paley_case1_split(&f, &k, 3), Err(Error::Truncation(_))));
    }
}
