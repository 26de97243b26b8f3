//! Column, row and splitting norms of finite operator sequences.
//!
//! The column norm of `(c_j)` is `tr √(Σ c_j* c_j)`, the trace norm of the
//! stacked column `[c_0; c_1; …]`; the row norm is the same for the
//! adjointed sequence. The splitting norm is the infimal convolution
//! `inf { col(a) + row(b) : a + b = c }`.
//!
//! [`triple_norm_solve`] evaluates the splitting norm by accelerated
//! gradient descent on a smoothed objective, and brackets the answer from
//! below with a dual witness (see [`dual_lower_bound`]).

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{hermitian_eigen, MatrixC, C64};
use crate::sample;

/// Finite sequence of equally sized square matrices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SequenceRaw")]
pub struct OpSequence {
    dim: usize,
    items: Vec<MatrixC>,
}

#[derive(Deserialize)]
struct SequenceRaw {
    dim: usize,
    items: Vec<MatrixC>,
}

impl TryFrom<SequenceRaw> for OpSequence {
    type Error = Error;
    fn try_from(raw: SequenceRaw) -> Result<Self> {
        OpSequence::new(raw.dim, raw.items)
    }
}

impl OpSequence {
    pub fn new(dim: usize, items: Vec<MatrixC>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("dimension must be positive".into()));
        }
        if let Some(j) = items.iter().position(|m| m.dim() != dim) {
            return Err(Error::Shape(format!("item {j} has dimension {}, expected {dim}", items[j].dim())));
        }
        Ok(OpSequence { dim, items })
    }

    pub fn zeros(dim: usize, len: usize) -> Self {
        OpSequence { dim, items: vec![MatrixC::zeros(dim); len] }
    }

    /// `d = 1` sequence from complex scalars.
    pub fn scalars(values: &[C64]) -> Self {
        OpSequence { dim: 1, items: values.iter().map(|&z| MatrixC::from_diag(&[z])).collect() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[MatrixC] {
        &self.items
    }

    pub fn into_items(self) -> Vec<MatrixC> {
        self.items
    }

    pub fn adjoints(&self) -> Self {
        OpSequence { dim: self.dim, items: self.items.iter().map(MatrixC::adjoint).collect() }
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim || self.len() != other.len() {
            return Err(Error::Shape(format!(
                "sequences of {}×{}x{} and {}×{}x{}",
                self.len(),
                self.dim,
                self.dim,
                other.len(),
                other.dim,
                other.dim
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(self.zip_map(other, |x, y| x + y))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(self.zip_map(other, |x, y| x - y))
    }

    pub fn scale(&self, s: f64) -> Self {
        OpSequence { dim: self.dim, items: self.items.iter().map(|m| m.scale_real(s)).collect() }
    }

    /// Largest entrywise deviation from `other`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_compatible(other)?;
        Ok(self.items.iter().zip(&other.items).fold(0.0, |m, (x, y)| m.max((x - y).max_abs())))
    }

    /// Real inner product `Re Σ tr(adjoint(other_j)·self_j)`.
    fn real_inner(&self, other: &Self) -> f64 {
        self.items
            .iter()
            .zip(&other.items)
            .map(|(x, y)| crate::matrix::hs_inner(x, y).re)
            .sum()
    }

    fn frobenius_sq(&self) -> f64 {
        self.items.iter().map(|m| m.frobenius().powi(2)).sum()
    }

    fn zip_map(&self, other: &Self, f: impl Fn(&MatrixC, &MatrixC) -> MatrixC) -> Self {
        OpSequence { dim: self.dim, items: self.items.iter().zip(&other.items).map(|(x, y)| f(x, y)).collect() }
    }

    /// `(len·d) × d` block column `[c_0; c_1; …]`.
    fn stacked_column(&self) -> DMatrix<C64> {
        let d = self.dim;
        DMatrix::from_fn(self.len() * d, d, |r, c| self.items[r / d].get(r % d, c))
    }

    /// `d × (len·d)` block row `[c_0, c_1, …]`.
    fn stacked_row(&self) -> DMatrix<C64> {
        let d = self.dim;
        DMatrix::from_fn(d, self.len() * d, |r, c| self.items[c / d].get(r, c % d))
    }
}

fn rectangular_singulars(m: DMatrix<C64>) -> Result<Vec<f64>> {
    if m.is_empty() {
        return Ok(Vec::new());
    }
    let (r, c) = m.shape();
    let s = m.try_svd(false, false, 1e-15, 10_000).ok_or_else(|| {
        Error::Numerical(format!("svd of a {r}x{c} block did not converge"))
    })?;
    Ok(s.singular_values.iter().copied().collect())
}

/// `tr √(Σ c_j* c_j)`
pub fn column_norm(c: &OpSequence) -> Result<f64> {
    Ok(rectangular_singulars(c.stacked_column())?.iter().sum())
}

/// `tr √(Σ c_j c_j*)`
pub fn row_norm(c: &OpSequence) -> Result<f64> {
    Ok(rectangular_singulars(c.stacked_row())?.iter().sum())
}

/// `√‖Σ c_j* c_j‖_op`, the dual of the column norm.
pub fn column_operator_norm(c: &OpSequence) -> Result<f64> {
    Ok(rectangular_singulars(c.stacked_column())?.into_iter().fold(0.0, f64::max))
}

/// `√‖Σ c_j c_j*‖_op`, the dual of the row norm.
pub fn row_operator_norm(c: &OpSequence) -> Result<f64> {
    Ok(rectangular_singulars(c.stacked_row())?.into_iter().fold(0.0, f64::max))
}

/// Objective of the splitting norm at one feasible point: `col(a) + row(b)`.
pub fn splitting_value(a: &OpSequence, b: &OpSequence) -> Result<f64> {
    a.check_compatible(b)?;
    Ok(column_norm(a)? + row_norm(b)?)
}

/// Certified lower bound on the splitting norm of `c` from any witness `x`.
///
/// The dual of an infimal convolution is the maximum of the two dual norms,
/// so `x / max(√‖Σx*x‖, √‖Σxx*‖)` lies in the dual unit ball and its pairing
/// with `c` cannot exceed the splitting norm.
pub fn dual_lower_bound(c: &OpSequence, x: &OpSequence) -> Result<f64> {
    c.check_compatible(x)?;
    let scale = column_operator_norm(x)?.max(row_operator_norm(x)?);
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok(c.real_inner(x) / scale)
}

/// For `d = 1` both column and row norms are the ℓ² norm, and so is the
/// splitting norm.
pub fn scalar_oracle(c: &OpSequence) -> Result<f64> {
    if c.dim() != 1 {
        return Err(Error::Domain(format!("scalar oracle needs dimension 1, got {}", c.dim())));
    }
    Ok(c.items().iter().map(|m| m.get(0, 0).norm_sqr()).sum::<f64>().sqrt())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Target relative duality gap `(value − dual_lower)/(1 + value)`.
    pub tolerance: f64,
    pub max_iter: usize,
    pub seed: u64,
    /// Extra randomized starts tried when the first run does not converge.
    pub restarts: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { tolerance: 1e-4, max_iter: 20_000, seed: 0, restarts: 0 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SplitCertificate {
    pub value: f64,
    pub a: OpSequence,
    pub b: OpSequence,
    pub dual_lower: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl SplitCertificate {
    pub fn gap(&self) -> f64 {
        self.value - self.dual_lower
    }

    pub fn relative_gap(&self) -> f64 {
        self.gap() / (1.0 + self.value)
    }
}

/// Smoothed trace-root `tr √(M + εI)` of a PSD matrix, with `(M + εI)^{-1/2}`.
fn smoothed_root(m: &MatrixC, eps: f64) -> Result<(f64, MatrixC)> {
    let (vals, vecs) = hermitian_eigen(m)?;
    let d = m.dim();
    let mut value = 0.0;
    let mut inv = vecs.as_dmatrix().clone();
    for (j, &v) in vals.iter().enumerate() {
        let r = (v.max(0.0) + eps).sqrt();
        value += r;
        inv.column_mut(j).scale_mut(1.0 / r);
    }
    let inv = MatrixC::from_dmatrix(inv * vecs.as_dmatrix().adjoint()).map_err(|_| {
        Error::Numerical(format!("non-finite inverse root in dimension {d}"))
    })?;
    Ok((value, inv))
}

fn gram_column(a: &OpSequence) -> MatrixC {
    a.items.iter().fold(MatrixC::zeros(a.dim), |acc, x| &acc + &x.adjoint_mul(x))
}

fn gram_row(b: &OpSequence) -> MatrixC {
    b.items.iter().fold(MatrixC::zeros(b.dim), |acc, x| &acc + &x.mul_adjoint(x))
}

/// Smoothed objective and its gradient in `a`, plus the two gradient
/// witnesses `a_j S^{-1/2}` and `R^{-1/2} b_j`.
struct Smoothed {
    value: f64,
    grad: OpSequence,
    col_witness: OpSequence,
    row_witness: OpSequence,
}

fn smoothed_eval(c: &OpSequence, a: &OpSequence, eps: f64) -> Result<Smoothed> {
    let b = c.sub(a)?;
    let (vc, s_inv) = smoothed_root(&gram_column(a), eps)?;
    let (vr, r_inv) = smoothed_root(&gram_row(&b), eps)?;
    let col_witness =
        OpSequence { dim: a.dim, items: a.items.iter().map(|x| x * &s_inv).collect() };
    let row_witness =
        OpSequence { dim: a.dim, items: b.items.iter().map(|x| &r_inv * x).collect() };
    let grad = col_witness.sub(&row_witness)?;
    Ok(Smoothed { value: vc + vr, grad, col_witness, row_witness })
}

fn smoothed_value(c: &OpSequence, a: &OpSequence, eps: f64) -> Result<f64> {
    let b = c.sub(a)?;
    Ok(smoothed_root(&gram_column(a), eps)?.0 + smoothed_root(&gram_row(&b), eps)?.0)
}

struct Best {
    value: f64,
    a: OpSequence,
    dual: f64,
}

impl Best {
    fn offer_primal(&mut self, c: &OpSequence, a: &OpSequence) -> Result<()> {
        let v = splitting_value(a, &c.sub(a)?)?;
        if v < self.value {
            self.value = v;
            self.a = a.clone();
        }
        Ok(())
    }

    fn offer_witness(&mut self, c: &OpSequence, x: &OpSequence) -> Result<()> {
        let lb = dual_lower_bound(c, x)?;
        if lb > self.dual {
            self.dual = lb;
        }
        Ok(())
    }

    fn closed(&self, tol: f64) -> bool {
        self.value - self.dual <= tol * (1.0 + self.value)
    }
}

/// Evaluates the splitting norm of `c`, returning the best feasible split
/// found together with a certified lower bound.
///
/// Minimizes `col(a) + row(c − a)` through the smoothed surrogate
/// `tr √(Σa*a + εI) + tr √(Σbb* + εI)`, with ε stepped down by factors of
/// 100 from `1e-2·s²` (`s` the mean singular scale of `c`). Each stage runs
/// accelerated gradient steps with backtracking and function-value restart,
/// warm-started from the previous stage. Both smoothed gradients are valid
/// dual witnesses; the best lower bound seen is kept.
pub fn triple_norm_solve(c: &OpSequence, opts: &SolveOptions) -> Result<SplitCertificate> {
    triple_norm_solve_from(c, opts, None)
}

/// [`triple_norm_solve`] with an extra feasible split `c = a + (c − a)`
/// offered as a starting candidate.
pub fn triple_norm_solve_from(
    c: &OpSequence,
    opts: &SolveOptions,
    start: Option<&OpSequence>,
) -> Result<SplitCertificate> {
    if let Some(a) = start {
        if a.dim != c.dim || a.len() != c.len() {
            return Err(Error::Shape(format!(
                "start has {} items of dim {}, expected {} of dim {}",
                a.len(),
                a.dim,
                c.len(),
                c.dim
            )));
        }
    }
    if c.is_empty() || c.items.iter().all(|m| m.max_abs() == 0.0) {
        let z = OpSequence::zeros(c.dim, c.len());
        return Ok(SplitCertificate { value: 0.0, a: z.clone(), b: z, dual_lower: 0.0, iterations: 0, converged: true });
    }
    let col_c = column_norm(c)?;
    let row_c = row_norm(c)?;
    let mut best = if col_c <= row_c {
        Best { value: col_c, a: c.clone(), dual: 0.0 }
    } else {
        Best { value: row_c, a: OpSequence::zeros(c.dim, c.len()), dual: 0.0 }
    };
    // c itself, rescaled, is always a witness.
    best.offer_witness(c, c)?;
    if let Some(a) = start {
        best.offer_primal(c, a)?;
    }

    let scale = col_c.max(row_c) / c.dim as f64;
    let mut rng = sample::seeded(opts.seed);
    let mut iterations = 0;
    for attempt in 0..=opts.restarts {
        let init = if attempt == 0 {
            start.cloned().unwrap_or_else(|| c.scale(0.5))
        } else {
            c.scale(rng.random_range(0.1..0.9))
        };
        let budget = opts.max_iter.saturating_sub(iterations);
        if budget == 0 {
            break;
        }
        iterations += descend(c, init, scale, budget, opts.tolerance, &mut best)?;
        if best.closed(opts.tolerance) {
            break;
        }
    }

    let b = c.sub(&best.a)?;
    let value = splitting_value(&best.a, &b)?;
    Ok(SplitCertificate {
        value,
        dual_lower: best.dual.min(value),
        converged: best.closed(opts.tolerance),
        a: best.a,
        b,
        iterations,
    })
}

const EPS_STAGES: [f64; 6] = [1e-2, 1e-4, 1e-6, 1e-8, 1e-10, 1e-12];
const DUAL_EVERY: usize = 5;

fn descend(
    c: &OpSequence,
    start: OpSequence,
    scale: f64,
    budget: usize,
    tol: f64,
    best: &mut Best,
) -> Result<usize> {
    let mut used = 0;
    let mut a = start;
    let s2 = scale * scale;
    for (stage, &rel) in EPS_STAGES.iter().enumerate() {
        let eps = rel * s2;
        // Gradient Lipschitz constant of tr √(X*X + ε) is at most 1/√ε per term.
        let mut lip = 1.0 / eps.sqrt();
        let stage_budget = if stage + 1 == EPS_STAGES.len() {
            budget - used
        } else {
            ((budget - used) / 3).max(1)
        };
        let mut x = a.clone();
        let mut y = a.clone();
        let mut t = 1.0f64;
        let mut f_prev = smoothed_value(c, &x, eps)?;
        let mut stalled = 0;
        for _ in 0..stage_budget {
            used += 1;
            let s = smoothed_eval(c, &y, eps)?;
            let g2 = s.grad.frobenius_sq();
            let (x_new, f_new) = loop {
                let cand = y.sub(&s.grad.scale(1.0 / lip))?;
                let f = smoothed_value(c, &cand, eps)?;
                if f <= s.value - 0.5 * g2 / lip + 1e-15 * (1.0 + s.value.abs()) || lip > 1e18 {
                    break (cand, f);
                }
                lip *= 2.0;
            };
            if used % DUAL_EVERY == 0 {
                best.offer_witness(c, &s.col_witness)?;
                best.offer_witness(c, &s.row_witness)?;
                best.offer_primal(c, &x_new)?;
                if best.closed(tol) {
                    return Ok(used);
                }
            }
            if f_new > f_prev {
                // Momentum overshoot: restart from the last accepted point.
                t = 1.0;
                y = x.clone();
                continue;
            }
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let momentum = (t - 1.0) / t_next;
            let step = x_new.sub(&x)?;
            y = x_new.add(&step.scale(momentum))?;
            t = t_next;
            if f_prev - f_new <= 1e-15 * (1.0 + f_new.abs()) {
                stalled += 1;
                if stalled >= 20 {
                    x = x_new;
                    break;
                }
            } else {
                stalled = 0;
            }
            x = x_new;
            f_prev = f_new;
            lip *= 0.95;
            if used >= budget {
                break;
            }
        }
        let fin = smoothed_eval(c, &x, eps)?;
        best.offer_witness(c, &fin.col_witness)?;
        best.offer_witness(c, &fin.row_witness)?;
        best.offer_primal(c, &x)?;
        a = x;
        if best.closed(tol) || used >= budget {
            break;
        }
    }
    Ok(used)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn re(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn column_norm_examples() {
        let one = OpSequence::new(2, vec![MatrixC::identity(2)]).unwrap();
        assert_abs_diff_eq!(column_norm(&one).unwrap(), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(column_norm(&OpSequence::scalars(&[re(3.0), re(4.0)])).unwrap(), 5.0, epsilon = 1e-12);
        let split = OpSequence::new(
            2,
            vec![MatrixC::from_real_diag(&[1.0, 0.0]), MatrixC::from_real_diag(&[0.0, 1.0])],
        )
        .unwrap();
        assert_abs_diff_eq!(column_norm(&split).unwrap(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn row_norm_examples() {
        let h = OpSequence::new(
            2,
            vec![
                MatrixC::from_real_rows(&[&[1.0, 2.0], &[2.0, -1.0]]),
                MatrixC::from_real_rows(&[&[0.0, 1.0], &[1.0, 3.0]]),
            ],
        )
        .unwrap();
        assert_abs_diff_eq!(row_norm(&h).unwrap(), column_norm(&h).unwrap(), epsilon = 1e-12);
        let single = MatrixC::from_real_rows(&[&[1.0, 2.0], &[0.0, 3.0]]);
        let seq = OpSequence::new(2, vec![single.clone()]).unwrap();
        assert_abs_diff_eq!(
            row_norm(&seq).unwrap(),
            crate::matrix::trace_norm(&single).unwrap(),
            epsilon = 1e-12
        );
        // Column and row norms genuinely differ for non-normal families.
        let e = OpSequence::new(2, vec![MatrixC::unit(2, 0, 0), MatrixC::unit(2, 0, 1)]).unwrap();
        assert_abs_diff_eq!(column_norm(&e).unwrap(), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(row_norm(&e).unwrap(), 2f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn splitting_value_examples() {
        let a = OpSequence::scalars(&[re(3.0), re(0.0)]);
        let b = OpSequence::scalars(&[re(0.0), re(4.0)]);
        let z = OpSequence::zeros(1, 2);
        assert_abs_diff_eq!(splitting_value(&a, &b).unwrap(), 7.0, epsilon = 1e-12);
        assert_abs_diff_eq!(splitting_value(&a, &z).unwrap(), 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(splitting_value(&z, &b).unwrap(), 4.0, epsilon = 1e-12);
        assert!(matches!(splitting_value(&a, &OpSequence::zeros(1, 3)), Err(Error::Shape(_))));
    }

    #[test]
    fn dual_bound_examples() {
        let c = OpSequence::scalars(&[re(3.0), re(4.0)]);
        assert_abs_diff_eq!(dual_lower_bound(&c, &c).unwrap(), 5.0, epsilon = 1e-12);
        assert_eq!(dual_lower_bound(&c, &OpSequence::zeros(1, 2)).unwrap(), 0.0);
    }

    #[test]
    fn scalar_oracle_examples() {
        assert_abs_diff_eq!(scalar_oracle(&OpSequence::scalars(&[re(3.0), re(4.0)])).unwrap(), 5.0);
        assert_abs_diff_eq!(scalar_oracle(&OpSequence::scalars(&[re(1.0)])).unwrap(), 1.0);
        assert_abs_diff_eq!(
            scalar_oracle(&OpSequence::scalars(&[re(1.0), re(1.0)])).unwrap(),
            2f64.sqrt(),
            epsilon = 1e-15
        );
        let m = OpSequence::new(2, vec![MatrixC::identity(2)]).unwrap();
        assert!(matches!(scalar_oracle(&m), Err(Error::Domain(_))));
    }

    #[test]
    fn solve_examples() {
        let opts = SolveOptions::default();
        let c = OpSequence::scalars(&[re(3.0), re(4.0)]);
        let cert = triple_norm_solve(&c, &opts).unwrap();
        assert_abs_diff_eq!(cert.value, 5.0, epsilon = 1e-6);
        assert!(cert.converged);
        assert!(cert.dual_lower <= cert.value + 1e-9);

        let single = MatrixC::from_real_rows(&[&[1.0, 2.0], &[0.0, 3.0]]);
        let s1 = crate::matrix::trace_norm(&single).unwrap();
        let cert = triple_norm_solve(&OpSequence::new(2, vec![single]).unwrap(), &opts).unwrap();
        assert_abs_diff_eq!(cert.value, s1, epsilon = 1e-6);

        let cert = triple_norm_solve(&OpSequence::zeros(3, 4), &opts).unwrap();
        assert_eq!(cert.value, 0.0);
        assert!(cert.a.items().iter().all(|m| m.max_abs() == 0.0));
    }

    #[test]
    fn solve_beats_both_endpoints_on_mixed_family() {
        // col and row norms disagree; the split should do at least as well as either.
        let c = OpSequence::new(
            2,
            vec![MatrixC::unit(2, 0, 0), MatrixC::unit(2, 0, 1), MatrixC::unit(2, 1, 0)],
        )
        .unwrap();
        let cert = triple_norm_solve(&c, &SolveOptions::default()).unwrap();
        let endpoint = column_norm(&c).unwrap().min(row_norm(&c).unwrap());
        assert!(cert.value <= endpoint + 1e-9);
        assert!(cert.dual_lower <= cert.value + 1e-9);
        assert!(cert.relative_gap() <= 1e-2, "gap {}", cert.relative_gap());
        assert!(cert.a.add(&cert.b).unwrap().max_abs_diff(&c).unwrap() < 1e-10);
    }

    #[test]
    fn json_round_trip() {
        let c = OpSequence::scalars(&[re(3.0), re(4.0)]);
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(s, r#"{"dim":1,"items":[[[3.0,0.0]],[[4.0,0.0]]]}"#);
        assert_eq!(serde_json::from_str::<OpSequence>(&s).unwrap(), c);
        assert!(serde_json::from_str::<OpSequence>(r#"{"dim":2,"items":[[[3.0,0.0]]]}"#).is_err());
    }
}
