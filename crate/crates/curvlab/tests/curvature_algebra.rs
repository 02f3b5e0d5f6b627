use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use rand::Rng;

use curvlab::curvature_algebra::{
    act, apply_endo, bianchi_defect, l_operator, model_operator, p_curvature, random_orthogonal, ric, ricci_eigenvalues,
    scal, sec, BlockLayout, CurvOp, Frame,
};
use curvlab::numeric::rng_stream;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn unit(n: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}

/// `⟨R(x, y)y, x⟩` straight from the endomorphism.
fn sec_endo(r: &CurvOp, x: &[f64], y: &[f64]) -> f64 {
    dot(&apply_endo(r, x, y, y).unwrap(), x)
}

/// `Σ_i ⟨R(z, e_i)e_i, z⟩`.
fn ric_endo(r: &CurvOp, z: &[f64]) -> f64 {
    (0..r.n).map(|i| dot(&apply_endo(r, z, &unit(r.n, i), &unit(r.n, i)).unwrap(), z)).sum()
}

/// `Σ_{i≠j} sec(E_i, E_j)` over the orthonormal complement of `P`.
fn p_curv_endo(r: &CurvOp, p: &Frame) -> f64 {
    let c = p.complement();
    let mut s = 0.0;
    for i in 0..c.k() {
        for j in 0..c.k() {
            if i != j {
                s += sec_endo(r, &c.col(i), &c.col(j));
            }
        }
    }
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn matrix_shortcuts_match_endomorphism(seed in any::<u64>(), n in 3usize..=8) {
        let mut rng = rng_stream(seed, 0);
        let r = CurvOp::random_bianchi(n, &mut rng);
        let e = Frame::random(n, 2, &mut rng);
        prop_assert!((sec(&r, &e).unwrap() - sec_endo(&r, &e.col(0), &e.col(1))).abs() <= 1e-10);
        let z = Frame::random(n, 1, &mut rng).col(0);
        prop_assert!((ric(&r, &z).unwrap() - ric_endo(&r, &z)).abs() <= 1e-10);
        let total: f64 = (0..n).map(|i| ric_endo(&r, &unit(n, i))).sum();
        prop_assert!((scal(&r) - total).abs() <= 1e-10);
        let p = rng.random_range(0..=n - 2);
        let pf = Frame::random(n, p, &mut rng);
        prop_assert!((p_curvature(&r, &pf).unwrap() - p_curv_endo(&r, &pf)).abs() <= 1e-10);
    }

    #[test]
    fn scal_is_twice_the_trace(seed in any::<u64>(), n in 2usize..=8) {
        let r = CurvOp::random_symmetric(n, &mut rng_stream(seed, 1));
        prop_assert!((scal(&r) - 2.0 * r.mat.trace()).abs() <= 1e-12 * (1.0 + r.frobenius()));
    }

    #[test]
    fn action_is_equivariant(seed in any::<u64>(), n in 3usize..=7) {
        let mut rng = rng_stream(seed, 2);
        let r = CurvOp::random_bianchi(n, &mut rng);
        let a = random_orthogonal(n, &mut rng);
        let ar = act(&a, &r).unwrap();
        let e = Frame::random(n, 2, &mut rng);
        prop_assert!((sec(&ar, &e).unwrap() - sec(&r, &e.transformed(&a)).unwrap()).abs() <= 1e-10);
        prop_assert!((scal(&ar) - scal(&r)).abs() <= 1e-10);
        for (x, y) in ricci_eigenvalues(&ar).iter().zip(ricci_eigenvalues(&r)) {
            prop_assert!((x - y).abs() <= 1e-10);
        }
        prop_assert!(bianchi_defect(&ar) <= 1e-10);
    }

    #[test]
    fn sec_ignores_rotation_within_the_plane(seed in any::<u64>(), angle in 0.0..std::f64::consts::TAU) {
        let mut rng = rng_stream(seed, 3);
        let r = CurvOp::random_bianchi(5, &mut rng);
        let e = Frame::random(5, 2, &mut rng);
        let (s, c) = angle.sin_cos();
        let (x, y) = (e.col(0), e.col(1));
        let u: Vec<f64> = x.iter().zip(&y).map(|(a, b)| c * a + s * b).collect();
        let v: Vec<f64> = x.iter().zip(&y).map(|(a, b)| -s * a + c * b).collect();
        let rotated = Frame::from_columns(5, &[u, v]).unwrap();
        prop_assert!((sec(&r, &rotated).unwrap() - sec(&r, &e).unwrap()).abs() <= 1e-10);
    }
}

#[test]
fn models_satisfy_bianchi() {
    for n in 2..=8 {
        for q in 0..=n {
            assert!(bianchi_defect(&model_operator(n, q).unwrap()) <= 1e-12, "n={n} q={q}");
        }
    }
}

#[test]
fn model_ricci_spectrum() {
    for n in 2..=8 {
        for q in 0..=n {
            let ev = ricci_eigenvalues(&model_operator(n, q).unwrap());
            for (i, e) in ev.iter().enumerate() {
                let want = if i < n - q { 0.0 } else { q as f64 - 1.0 };
                assert_abs_diff_eq!(*e, want, epsilon = 1e-12);
            }
        }
    }
}

#[test]
fn model_splits_into_lower_model_plus_l() {
    for n in 3..=8 {
        for q in 2..=n {
            let lhs = model_operator(n, q).unwrap();
            let l = l_operator(&BlockLayout::warped(n, q).unwrap()).unwrap();
            let rhs = model_operator(n, q - 1).unwrap().combine(1.0, &l, 1.0);
            assert!(lhs.dist(&rhs) <= 1e-14, "n={n} q={q}");
        }
    }
}

#[test]
fn swap_operator_has_unit_bianchi_defect() {
    // R swaps e1∧e2 and e3∧e4; basis indices 0 and 5 for n = 4
    let mut m = nalgebra::DMatrix::zeros(6, 6);
    m[(0, 5)] = 1.0;
    m[(5, 0)] = 1.0;
    let r = CurvOp::new(4, m).unwrap();
    assert_abs_diff_eq!(bianchi_defect(&r), 1.0, epsilon = 1e-15);
    assert_eq!(apply_endo(&r, &unit(4, 0), &unit(4, 1), &unit(4, 2)).unwrap(), vec![0.0, 0.0, 0.0, -1.0]);
}
