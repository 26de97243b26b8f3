//! Generic factorization `f = h*·g` of an operator-valued function.
//!
//! Every value of a grid function is a matrix, so the factorization is done
//! cell by cell: from `f(t) = U Σ V*` take `g(t) = V Σ^{1/2} V* = |f(t)|^{1/2}`
//! and `h(t) = V Σ^{1/2} U*`. Then `‖g(t)‖²_{S₂} = ‖h(t)‖²_{S₂} = ‖f(t)‖_{S₁}`,
//! hence `‖g‖² = ‖h‖² = ‖f‖_{L¹(S₁)}`. No smoothness across cells is
//! attempted; singular value crossings may flip factor choices.

use crate::error::Result;
use crate::matrix::{half_factors, svd};
use crate::opfunc::{partial_inner, pointwise_product, GridFn, ProductMode};

#[derive(Clone, Debug)]
pub struct FactorPair<F> {
    pub g: F,
    pub h: F,
}

pub fn generic_factor<F: GridFn>(f: &F) -> Result<FactorPair<F>> {
    let mut g = Vec::with_capacity(f.len());
    let mut h = Vec::with_capacity(f.len());
    for v in f.values() {
        let t = svd(v)?;
        let roots: Vec<f64> = t.singulars.iter().map(|s| s.sqrt()).collect();
        let (hv, gv) = half_factors(&t, &roots);
        h.push(hv);
        g.push(gv);
    }
    Ok(FactorPair { g: f.with_values(g), h: f.with_values(h) })
}

impl<F: GridFn> FactorPair<F> {
    /// `h(t)* g(t)` at every point.
    pub fn product(&self) -> Result<F> {
        pointwise_product(&self.h, &self.g, ProductMode::AdjointLeft)
    }

    /// Largest entrywise deviation of `h*g` from `f`.
    pub fn reconstruction_error(&self, f: &F) -> Result<f64> {
        Ok(self.product()?.sub(f)?.max_abs())
    }

    /// `⟨g, χ·h⟩_p`, which equals the `χ`-coefficient of `f = h*g`.
    pub fn coefficient_via_partial_inner(&self, ch: F::Char) -> Result<crate::matrix::MatrixC> {
        partial_inner(&self.g, &self.h.modulate(ch)?)
    }
}
