use ncx_core::factorize::generic_factor;
use ncx_core::matrix::{trace_norm, MatrixC, C64};
use ncx_core::opfunc::{
    l2_s2_inner, partial_inner, walsh_index_product, walsh_value, DyadicFn, GridFn, TrigFn,
};
use ncx_core::sample::{gaussian_matrix, seeded};
use proptest::prelude::*;

fn random_dyadic(seed: u64, resolution: u32, dim: usize) -> DyadicFn {
    let mut rng = seeded(seed);
    let values = (0..1usize << resolution).map(|_| gaussian_matrix(&mut rng, dim, 1.0)).collect();
    DyadicFn::new(resolution, dim, values).unwrap()
}

/// Random trigonometric polynomial with frequencies in `[-bound, bound]`.
fn random_trig(seed: u64, gridsize: usize, dim: usize, bound: i64) -> (TrigFn, Vec<(i64, MatrixC)>) {
    let mut rng = seeded(seed);
    let coeffs: Vec<(i64, MatrixC)> = (-bound..=bound).map(|n| (n, gaussian_matrix(&mut rng, dim, 1.0))).collect();
    (TrigFn::from_coefficients(gridsize, dim, &coeffs).unwrap(), coeffs)
}

#[test]
fn walsh_orthonormality_is_exact() {
    for res in 1..=6u32 {
        let cells = 1usize << res;
        for m in 0..cells {
            for n in 0..cells {
                let s: i64 = (0..cells)
                    .map(|c| (walsh_value(m, c, res).unwrap() * walsh_value(n, c, res).unwrap()) as i64)
                    .sum();
                assert_eq!(s, if m == n { cells as i64 } else { 0 }, "m={m} n={n} N={res}");
            }
        }
    }
}

#[test]
fn walsh_products_follow_xor() {
    for res in 1..=4u32 {
        let cells = 1usize << res;
        for m in 0..cells {
            for n in 0..cells {
                let k = walsh_index_product(m, n);
                for c in 0..cells {
                    assert_eq!(
                        walsh_value(m, c, res).unwrap() * walsh_value(n, c, res).unwrap(),
                        walsh_value(k, c, res).unwrap()
                    );
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parseval_on_the_circle(seed in any::<u64>(), dim in 1usize..4, bound in 0i64..6) {
        let m = 2 * (2 * bound as usize + 2);
        let (u, cu) = random_trig(seed, m, dim, bound);
        let (v, cv) = random_trig(seed ^ 0x5555, m, dim, bound);
        let lhs = l2_s2_inner(&u, &v).unwrap();
        let rhs: C64 = cu.iter().zip(&cv).map(|((_, a), (_, b))| b.adjoint_mul(a).trace()).sum();
        prop_assert!((lhs - rhs).norm() <= 1e-8 * (1.0 + rhs.norm()));
        for (n, c) in &cu {
            prop_assert!((&u.fourier_coeff(*n).unwrap() - c).max_abs() <= 1e-10 * (1.0 + c.max_abs()));
        }
    }

    #[test]
    fn partial_inner_traces_to_scalar_inner(seed in any::<u64>(), dim in 1usize..4, res in 1u32..5) {
        let u = random_dyadic(seed, res, dim);
        let v = random_dyadic(seed.wrapping_add(1), res, dim);
        let p = partial_inner(&u, &v).unwrap();
        let s = l2_s2_inner(&u, &v).unwrap();
        prop_assert!((p.trace() - s).norm() <= 1e-12 * (1.0 + s.norm()));
    }

    #[test]
    fn partial_inner_module_identity(seed in any::<u64>(), dim in 1usize..4, bound in 0i64..4) {
        let m = 4 * (bound as usize + 1);
        let (u, _) = random_trig(seed, m, dim, bound);
        let (v, _) = random_trig(seed.wrapping_add(7), m, dim, bound);
        let b = gaussian_matrix(&mut seeded(seed.wrapping_add(13)), dim, 1.0);
        let lhs = partial_inner(&u.right_mul(&b), &v).unwrap();
        let rhs = &partial_inner(&u, &v).unwrap() * &b;
        prop_assert!((&lhs - &rhs).max_abs() <= 1e-12 * (1.0 + rhs.max_abs()));
    }

    #[test]
    fn dyadic_factorization(seed in any::<u64>(), dim in 1usize..5, res in 1u32..5) {
        let f = random_dyadic(seed, res, dim);
        let pair = generic_factor(&f).unwrap();
        let scale = 1.0 + f.max_abs();
        prop_assert!(pair.reconstruction_error(&f).unwrap() <= 1e-10 * scale);
        for ((g, h), v) in pair.g.values().iter().zip(pair.h.values()).zip(f.values()) {
            let t = trace_norm(v).unwrap();
            prop_assert!((g.frobenius().powi(2) - t).abs() <= 1e-8 * (1.0 + t));
            prop_assert!((h.frobenius().powi(2) - t).abs() <= 1e-8 * (1.0 + t));
        }
        for n in 0..f.cells() {
            let via = pair.coefficient_via_partial_inner(n).unwrap();
            let direct = f.walsh_coeff(n).unwrap();
            prop_assert!((&via - &direct).max_abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn trig_factorization(seed in any::<u64>(), dim in 1usize..4, bound in 0i64..5) {
        let m = 4 * (bound as usize + 1) + 2;
        let (f, _) = random_trig(seed, m, dim, bound);
        let pair = generic_factor(&f).unwrap();
        let scale = 1.0 + f.max_abs();
        prop_assert!(pair.reconstruction_error(&f).unwrap() <= 1e-10 * scale);
        for n in f.window() {
            let via = pair.coefficient_via_partial_inner(n).unwrap();
            let direct = f.fourier_coeff(n).unwrap();
            prop_assert!((&via - &direct).max_abs() <= 1e-10 * scale);
        }
    }
}
