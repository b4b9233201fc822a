use proptest::prelude::*;
use simplexlab::fiveleg::{example1, example3, gauge_transform, lambda_kernel, qosc_matrices, Form, SpectralSystem};
use simplexlab::qseries::{osc_coeff_m, osc_coeff_mbar, weight_w_q, QParams};
use simplexlab::simplex::{verify_mmm2, Coverage, VerifyOptions};
use simplexlab::sites::{DenseMatrix, LocalOp, Space};
use simplexlab::{contract, ComplexTensor, ExponentKernel, IndexDomain, C64};
use std::sync::Arc;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn dense(shape: &[usize], vals: &[(f64, f64)]) -> ComplexTensor {
    let mut k = 0;
    ComplexTensor::from_fn_dense(shape, |_| {
        let (a, b) = vals[k % vals.len()];
        k += 1;
        c(a, b)
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn bracket_is_bilinear_and_symmetric(a in -40i64..40, b in -40i64..40, d in -40i64..40, n in 2u32..9, q in 0.1f64..0.95) {
        for k in [ExponentKernel::root_of_unity(n).unwrap(), ExponentKernel::q_real(c(q, 0.0)).unwrap()] {
            if k.n() == 0 && [a * b, a * d, a * (b + d)].iter().any(|x| x.abs() > 40) {
                continue;
            }
            let lhs = k.bracket_int(a, b + d);
            let rhs = k.bracket_int(a, b) * k.bracket_int(a, d);
            prop_assert!((lhs - rhs).norm() <= 1e-12 * lhs.norm().max(1.0));
            prop_assert!((k.bracket_int(a, b) - k.bracket_int(b, a)).norm() <= 1e-14 * lhs.norm().max(1.0));
        }
    }

    #[test]
    fn root_of_unity_is_periodic(a in -50i64..50, b in -50i64..50, n in 2u32..9) {
        let k = ExponentKernel::root_of_unity(n).unwrap();
        prop_assert_eq!(k.bracket_int(a + n as i64, b), k.bracket_int(a, b));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn contraction_is_associative(v in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 64)) {
        let a = dense(&[4, 4, 4], &v);
        let b = dense(&[4, 4, 4], &v[7..]);
        let d = dense(&[4, 4, 4], &v[13..]);
        // (A·B)·C with A's last axis on B's first, then B's last on C's first
        let ab = contract(&a, &[2], &b, &[0]).unwrap();
        let left = contract(&ab, &[3], &d, &[0]).unwrap();
        let bc = contract(&b, &[2], &d, &[0]).unwrap();
        let right = contract(&a, &[2], &bc, &[0]).unwrap();
        prop_assert!(left.distance(&right).unwrap() <= 1e-13 * left.norm().max(1.0));
    }

    #[test]
    fn disjoint_embeddings_commute(v in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 16), s in 0usize..4) {
        let t = dense(&[2, 2, 2, 2], &v);
        let u = dense(&[2, 2], &v[3..]);
        let (a, b) = (LocalOp::from_tensor(&t).unwrap(), LocalOp::from_tensor(&u).unwrap());
        let space = Space::new(4, 2).unwrap();
        let pair = [[0, 1], [1, 2], [2, 3], [0, 3]][s];
        let other = (0..4).find(|x| !pair.contains(x)).unwrap();
        let (ma, mb) = (DenseMatrix::embed(&space, &a, &pair).unwrap(), DenseMatrix::embed(&space, &b, &[other]).unwrap());
        prop_assert!(ma.matmul(&mb).distance(&mb.matmul(&ma)) <= 1e-14 * ma.norm() * mb.norm());
    }

    #[test]
    fn normal_ordering_inverts(q in 0.1f64..0.9, a in 0i64..=6, cc in 0i64..=6) {
        // u^c v^a = Σ_k m v^{a−k} u^{c−k}, each reordered back with m̄; only the original monomial survives
        let qp = QParams::real(q).unwrap();
        for n in 0..=a.min(cc) {
            let mut total = c(0.0, 0.0);
            let mut scale = 0.0f64;
            for k in 0..=n {
                let t = osc_coeff_m(&qp, a, cc, k).unwrap() * osc_coeff_mbar(&qp, a - k, cc - k, n - k).unwrap();
                scale = scale.max(t.norm());
                total += t;
            }
            let want = if n == 0 { 1.0 } else { 0.0 };
            prop_assert!((total - want).norm() <= 1e-12 * scale.max(1.0), "n={n} total={total}");
        }
    }

    #[test]
    fn truncated_matrices_obey_normal_ordering(q in 0.1f64..0.9, a in 0usize..=4, cc in 0usize..=4) {
        let n = 14;
        let qp = QParams::real(q).unwrap();
        let (u, v) = qosc_matrices(&qp, n).unwrap();
        let to = |t: &ComplexTensor| DenseMatrix { n, data: (0..n * n).map(|x| t.get(&[x / n, x % n]).unwrap()).collect() };
        let (u, v) = (to(&u), to(&v));
        let pow = |m: &DenseMatrix, e: usize| (0..e).fold(DenseMatrix::identity(n), |acc, _| acc.matmul(m));
        let lhs = pow(&u, cc).matmul(&pow(&v, a));
        let mut rhs = DenseMatrix { n, data: vec![c(0.0, 0.0); n * n] };
        for k in 0..=a.min(cc) {
            let t = pow(&v, a - k).matmul(&pow(&u, cc - k));
            let w = osc_coeff_m(&qp, a as i64, cc as i64, k as i64).unwrap();
            for (r, x) in rhs.data.iter_mut().zip(&t.data) {
                *r += w * x;
            }
        }
        // columns whose raised states stay below the top level
        for i in 0..n {
            for j in 0..n - a - cc {
                prop_assert!((lhs.get(i, j) - rhs.get(i, j)).norm() <= 1e-12);
            }
        }
    }

    #[test]
    fn integer_weight_vanishes_beyond_its_order(q in 0.1f64..0.9, m in 0i64..8, extra in 1i64..8) {
        let qp = QParams::real(q).unwrap();
        prop_assert_eq!(weight_w_q(&qp, c(m as f64, 0.0), m + extra), c(0.0, 0.0));
        prop_assert!(weight_w_q(&qp, c(m as f64, 0.0), m).norm() > 0.0);
    }

    #[test]
    fn lambda_kernel_is_the_reordering_coefficient(q in 0.1f64..0.9, a in 0i64..=8, cc in 0i64..=8) {
        let qp = QParams::real(q).unwrap();
        for k in 0..=a.min(cc) {
            let (l, m) = (lambda_kernel(&qp, a, cc, a - k, cc - k), osc_coeff_m(&qp, a, cc, k).unwrap());
            prop_assert!((l - m).norm() <= 1e-13 * m.norm().max(1.0));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    #[test]
    fn example3_mmm2_ignores_spectral_values(seed in 0u64..1000) {
        use rand::SeedableRng;
        let qp = QParams::real(0.5).unwrap();
        let s = SpectralSystem::single().random(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let (m, _) = example3(&qp, 3, &s).unwrap();
        let r = verify_mmm2(&m, &VerifyOptions { coverage: Coverage::Full, seed, ..Default::default() }).unwrap();
        prop_assert!(r.rel_residual <= 1e-10);
    }

    #[test]
    fn gauge_transform_keeps_mmm2(n in 2u32..5, f in proptest::collection::vec((0.5f64..2.0, -3.0f64..3.0), 5)) {
        let k = ExponentKernel::root_of_unity(n).unwrap();
        let m = example1(&k, &IndexDomain::cyclic(n), Form::M2).unwrap();
        let fv: Vec<C64> = f.iter().map(|&(r, t)| C64::from_polar(r, t)).collect();
        let g = gauge_transform(&m, Arc::new(move |x: &[i64]| fv[x[0].rem_euclid(n as i64) as usize])).unwrap();
        let o = VerifyOptions::default();
        let (a, b) = (verify_mmm2(&m, &o).unwrap(), verify_mmm2(&g, &o).unwrap());
        prop_assert!(b.rel_residual <= 1e-12 && (a.rel_residual - b.rel_residual).abs() <= 1e-12);
    }
}
