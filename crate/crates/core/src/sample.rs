//! Seeded random matrices and functions.
//!
//! All generators draw from a caller-supplied RNG so that a fixed seed gives
//! bit-identical output.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::matrix::{svd, MatrixC, C64};

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard complex Gaussian: real and imaginary parts `N(0, 1/2)`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// `d×d` matrix of independent standard complex Gaussian entries times `scale`.
pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, dim: usize, scale: f64) -> MatrixC {
    MatrixC::from_fn(dim, |_, _| complex_gaussian(rng) * scale)
}

/// Gaussian matrix scaled so that its trace norm is of order one.
pub fn unit_scale_matrix<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> MatrixC {
    gaussian_matrix(rng, dim, (dim as f64).powf(-1.5))
}

/// Real Gaussian matrix, for instances restricted to real scalars.
pub fn real_gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, dim: usize, scale: f64) -> MatrixC {
    MatrixC::from_fn(dim, |_, _| {
        let x: f64 = rng.sample(StandardNormal);
        C64::new(x * scale, 0.0)
    })
}

/// Haar-like unitary from the singular vectors of a Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> MatrixC {
    let g = gaussian_matrix(rng, dim, 1.0);
    let t = svd(&g).expect("svd of a small Gaussian matrix");
    t.left.mul_adjoint(&t.right)
}
