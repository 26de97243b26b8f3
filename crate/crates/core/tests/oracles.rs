//! Library values checked against independent computations: square waves
//! evaluated at cell midpoints, direct trigonometric sums, closed-form 2×2
//! singular values and the scalar ℓ² formula.

use std::f64::consts::PI;

use ncx_core::construct::khintchine_split;
use ncx_core::factorize::generic_factor;
use ncx_core::matrix::{singular_values, MatrixC, C64};
use ncx_core::opfunc::{
    circle_point, l1_s1_norm, rademacher_value, walsh_index_product, walsh_value, DyadicFn, GridFn, TrigFn,
};
use ncx_core::sample::{gaussian_matrix, seeded};
use ncx_core::seqnorm::{
    column_norm, dual_lower_bound, row_norm, scalar_oracle, triple_norm_solve, OpSequence, SolveOptions,
};

/// `r_j(t) = sign sin(2^{j+1} π t)`, sampled at the middle of the cell.
fn square_wave(j: u32, cell: usize, resolution: u32) -> i8 {
    let t = (cell as f64 + 0.5) / (1u64 << resolution) as f64;
    if (2f64.powi(j as i32 + 1) * PI * t).sin() > 0.0 {
        1
    } else {
        -1
    }
}

/// `w_n = Π r_j` over the binary digits of `n`.
fn walsh_oracle(n: usize, cell: usize, resolution: u32) -> i8 {
    (0..resolution).filter(|j| (n >> j) & 1 == 1).map(|j| square_wave(j, cell, resolution)).product()
}

#[test]
fn rademacher_matches_square_waves() {
    assert_eq!(rademacher_value(0, 0, 1).unwrap(), 1);
    assert_eq!(rademacher_value(0, 1, 1).unwrap(), -1);
    let r1: Vec<i8> = (0..4).map(|c| rademacher_value(1, c, 2).unwrap()).collect();
    assert_eq!(r1, vec![1, -1, 1, -1]);
    for res in 1..=7u32 {
        for j in 0..res {
            for c in 0..1usize << res {
                assert_eq!(rademacher_value(j, c, res).unwrap(), square_wave(j, c, res));
            }
        }
    }
}

#[test]
fn walsh_matches_products_of_square_waves() {
    let w3: Vec<i8> = (0..4).map(|c| walsh_value(3, c, 2).unwrap()).collect();
    assert_eq!(w3, vec![1, -1, -1, 1]);
    for res in 1..=6u32 {
        for c in 0..1usize << res {
            assert_eq!(walsh_value(0, c, res).unwrap(), 1);
            for j in 0..res {
                assert_eq!(walsh_value(1 << j, c, res).unwrap(), rademacher_value(j, c, res).unwrap());
            }
            for n in 0..1usize << res {
                assert_eq!(walsh_value(n, c, res).unwrap(), walsh_oracle(n, c, res));
            }
        }
    }
    assert_eq!(walsh_index_product(1, 2), 3);
    assert_eq!(walsh_index_product(5, 3), 6);
    for c in 0..8 {
        assert_eq!(walsh_oracle(5, c, 3) * walsh_oracle(3, c, 3), walsh_oracle(6, c, 3));
    }
}

#[test]
fn scalar_two_term_series() {
    let one = MatrixC::identity(1);
    let f = DyadicFn::rademacher_series(2, &[one.clone(), one]).unwrap();
    let cells: Vec<f64> = (0..4).map(|c| (square_wave(0, c, 2) + square_wave(1, c, 2)) as f64).collect();
    assert_eq!(cells, vec![2.0, 0.0, 0.0, -2.0]);
    for (v, x) in f.values().iter().zip(&cells) {
        assert_eq!(v.get(0, 0), C64::new(*x, 0.0));
    }
    let mean_abs = cells.iter().map(|x| x.abs()).sum::<f64>() / 4.0;
    assert_eq!(l1_s1_norm(&f).unwrap(), mean_abs);

    let s = khintchine_split(&f, 2).unwrap();
    assert!(s.is_valid());
    assert!(s.diagnostics.splitting_value <= 2.0 * mean_abs * (1.0 + 1e-6));
    let ell2 = (1f64 + 1.0).sqrt();
    assert!((scalar_oracle(&s.target).unwrap() - ell2).abs() < 1e-15);
    let cert = triple_norm_solve(&s.target, &SolveOptions::default()).unwrap();
    assert!((cert.value / mean_abs - ell2).abs() <= 1e-6);
}

#[test]
fn trig_samples_and_coefficients_match_direct_sums() {
    let mut rng = seeded(2);
    let m = 19;
    let coeffs: Vec<(i64, MatrixC)> = (-4..=4).map(|n| (n, gaussian_matrix(&mut rng, 2, 1.0))).collect();
    let f = TrigFn::from_coefficients(m, 2, &coeffs).unwrap();
    for (k, v) in f.values().iter().enumerate() {
        let t = -PI + 2.0 * PI * k as f64 / m as f64;
        assert!((circle_point(k, m) - t).abs() < 1e-15);
        let direct = coeffs
            .iter()
            .fold(MatrixC::zeros(2), |acc, (n, c)| &acc + &c.scale(C64::from_polar(1.0, *n as f64 * t)));
        assert!((v - &direct).max_abs() < 1e-12);
    }
    for (n, c) in &coeffs {
        let mut q = MatrixC::zeros(2);
        for (k, v) in f.values().iter().enumerate() {
            let t = -PI + 2.0 * PI * k as f64 / m as f64;
            q = &q + &v.scale(C64::from_polar(1.0 / m as f64, -(*n as f64) * t));
        }
        assert!((&q - c).max_abs() < 1e-12);
        assert!((&f.fourier_coeff(*n).unwrap() - c).max_abs() < 1e-12);
    }
}

#[test]
fn modulation_is_unitary() {
    let mut rng = seeded(8);
    let f = DyadicFn::new(3, 2, (0..8).map(|_| gaussian_matrix(&mut rng, 2, 1.0)).collect()).unwrap();
    for n in 0..8 {
        assert!((f.modulate(n).unwrap().l2_norm() - f.l2_norm()).abs() < 1e-12);
    }
}

/// σ² are the roots of `x² − tr(A*A)x + |det A|²`.
#[test]
fn two_by_two_singular_values_closed_form() {
    let mut rng = seeded(4);
    for _ in 0..100 {
        let a = gaussian_matrix(&mut rng, 2, 1.0);
        let (p, q, r, s) = (a.get(0, 0), a.get(0, 1), a.get(1, 0), a.get(1, 1));
        let tr = p.norm_sqr() + q.norm_sqr() + r.norm_sqr() + s.norm_sqr();
        let det = (p * s - q * r).norm_sqr();
        let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
        let hi = ((tr + disc) / 2.0).sqrt();
        let lo = (det / hi.powi(2)).sqrt();
        let sv = singular_values(&a).unwrap();
        assert!((sv[0] - hi).abs() < 1e-10 * (1.0 + hi));
        assert!((sv[1] - lo).abs() < 1e-10 * (1.0 + hi));
    }
}

#[test]
fn sequence_norm_examples() {
    let c = OpSequence::new(2, vec![MatrixC::from_real_diag(&[1.0, 0.0]), MatrixC::from_real_diag(&[0.0, 1.0])])
        .unwrap();
    assert!((column_norm(&c).unwrap() - 2.0).abs() < 1e-12);
    let mut rng = seeded(5);
    for _ in 0..20 {
        let x = OpSequence::new(3, (0..4).map(|_| gaussian_matrix(&mut rng, 3, 1.0)).collect()).unwrap();
        assert!((row_norm(&x).unwrap() - column_norm(&x.adjoints()).unwrap()).abs() < 1e-12);
    }
    let pair = OpSequence::scalars(&[C64::new(3.0, 0.0), C64::new(4.0, 0.0)]);
    // ‖Σ x_j x_j*‖ = 25 and ⟨c, x⟩ = 25, so the scaled pairing is 25/5.
    assert!((dual_lower_bound(&pair, &pair).unwrap() - 5.0).abs() < 1e-12);
    assert!((scalar_oracle(&pair).unwrap() - 5.0).abs() < 1e-15);
    let ones = OpSequence::scalars(&[C64::new(1.0, 0.0), C64::new(1.0, 0.0)]);
    assert!((scalar_oracle(&ones).unwrap() - 2f64.sqrt()).abs() < 1e-15);
}

#[test]
fn scalar_factors_have_unit_modulus() {
    let f = DyadicFn::rademacher_series(1, &[MatrixC::identity(1)]).unwrap();
    let pair = generic_factor(&f).unwrap();
    for (c, (g, h)) in pair.g.values().iter().zip(pair.h.values()).enumerate() {
        assert!((g.get(0, 0) - C64::new(1.0, 0.0)).norm() < 1e-14);
        let r0 = square_wave(0, c, 1) as f64;
        assert!((h.get(0, 0) - C64::new(r0, 0.0)).norm() < 1e-14);
    }
}
