use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use seqgauss::chaos::{cond_exp_chaos, ChaosExpansion, ConditioningSet};
use seqgauss::hermite::{hermite_phys, hermite_prob};
use seqgauss::io::{chaos_from_doc, chaos_to_doc, ChaosDoc};
use seqgauss::seqspace::{
    apply_extended, block_projection, bracket, bullet, inner_a, inner_l2, CovOp, HVec, SeqVec,
    TruncationDims,
};
use seqgauss::wick::dense::{wick_closed_form_dense, wick_functional_dense};
use seqgauss::wick::{kernel_inner_a, wick_power, SymKernel};

fn finite() -> impl Strategy<Value = f64> {
    -3.0..3.0f64
}

fn vector(n: usize) -> impl Strategy<Value = DVector<f64>> {
    prop::collection::vec(finite(), n).prop_map(DVector::from_vec)
}

fn seqvec(m: usize, d: usize) -> impl Strategy<Value = SeqVec> {
    prop::collection::vec(finite(), m * d)
        .prop_map(move |v| SeqVec::from_matrix(DMatrix::from_vec(m, d, v)).unwrap())
}

// B B^T + I keeps the spectrum away from zero.
fn spd(d: usize) -> impl Strategy<Value = CovOp> {
    prop::collection::vec(-1.0..1.0f64, d * d).prop_map(move |v| {
        let b = DMatrix::from_vec(d, d, v);
        CovOp::new(&b * b.transpose() + DMatrix::identity(d, d)).unwrap()
    })
}

fn dims() -> impl Strategy<Value = (usize, usize)> {
    (1usize..=3, 1usize..=5)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn bracket_of_bullet_scales_h((m, d) in dims(), seed in any::<u64>()) {
        let h: Vec<f64> = (0..m).map(|i| ((seed >> i) % 7) as f64 - 3.0).collect();
        let x = DVector::from_fn(d, |k, _| 1.0 / (k + 1) as f64);
        let y = DVector::from_fn(d, |k, _| (k as f64).sin());
        let f = bullet(&HVec::new(h.clone()).unwrap(), &x).unwrap();
        let got = bracket(&f, &y).unwrap();
        let xy = x.dot(&y);
        for (g, hh) in got.as_vector().iter().zip(&h) {
            prop_assert!((g - hh * xy).abs() <= 1e-12 * (1.0 + (hh * xy).abs()));
        }
    }

    #[test]
    fn inner_a_is_symmetric_and_positive(
        (f, g, a) in dims().prop_flat_map(|(m, d)| (seqvec(m, d), seqvec(m, d), spd(d)))
    ) {
        let fg = inner_a(&f, &g, &a).unwrap();
        let gf = inner_a(&g, &f, &a).unwrap();
        prop_assert!((fg - gf).abs() <= 1e-10 * (1.0 + fg.abs()));
        prop_assert!(inner_a(&f, &f, &a).unwrap() >= -1e-12);
        // (f, g)_A = <Af, g>
        let af = apply_extended(&a, &f).unwrap();
        prop_assert!((inner_l2(&af, &g).unwrap() - fg).abs() <= 1e-10 * (1.0 + fg.abs()));
    }

    #[test]
    fn block_projection_is_idempotent_and_self_adjoint(
        (a, cut, x, y) in (2usize..=9).prop_flat_map(|d| (spd(d), 1..d, vector(d), vector(d)))
    ) {
        let b = block_projection(&a, cut).unwrap();
        prop_assert!((&b.p * &b.p - &b.p).amax() <= 1e-10);
        let lhs = a.inner(&b.apply(&x), &y).unwrap();
        let rhs = a.inner(&x, &b.apply(&y)).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
        prop_assert!((&b.pt - b.p.transpose()).amax() == 0.0);
    }

    #[test]
    fn wick_recursion_matches_closed_form(
        n in 1usize..=4,
        (a, w) in (1usize..=3).prop_flat_map(|d| (spd(d), seqvec(1, d))),
    ) {
        let rec = wick_functional_dense(n, &a, &w).unwrap();
        let closed = wick_closed_form_dense(n, &a, &w).unwrap();
        prop_assert!(rec.max_abs_diff(&closed) <= 1e-10 * (1.0 + closed.max_abs()));
    }

    #[test]
    fn wick_power_is_scaled_hermite(
        n in 0usize..=8,
        (a, phi, w) in (1usize..=4).prop_flat_map(|d| (spd(d), seqvec(2, d), seqvec(2, d))),
    ) {
        let s = inner_a(&phi, &phi, &a).unwrap().sqrt();
        prop_assume!(s > 1e-3);
        let expected = s.powi(n as i32) * hermite_prob(n, inner_l2(&phi, &w).unwrap() / s);
        let got = wick_power(&phi, n, &a, &w).unwrap();
        prop_assert!((got - expected).abs() <= 1e-9 * (1.0 + expected.abs()));
    }

    #[test]
    fn kernel_inner_product_of_powers(
        n in 1usize..=5,
        (a, phi, psi) in (1usize..=4).prop_flat_map(|d| (spd(d), seqvec(1, d), seqvec(1, d))),
    ) {
        let k1 = SymKernel::power(1.0, phi.clone(), n);
        let k2 = SymKernel::power(1.0, psi.clone(), n);
        let got = kernel_inner_a(&k1, &k2, &a).unwrap();
        let expected = inner_a(&phi, &psi, &a).unwrap().powi(n as i32);
        prop_assert!((got - expected).abs() <= 1e-9 * (1.0 + expected.abs()));
    }

    #[test]
    fn hermite_conventions_agree(n in 0usize..=12, x in finite()) {
        let prob = hermite_prob(n, x);
        let via_phys = 2f64.powf(-(n as f64) / 2.0) * hermite_phys(n, x / std::f64::consts::SQRT_2);
        prop_assert!((prob - via_phys).abs() <= 1e-9 * (1.0 + prob.abs()));
    }

    #[test]
    fn hermite_three_term_recurrence(n in 1usize..=15, x in finite()) {
        let lhs = hermite_prob(n + 1, x);
        let rhs = x * hermite_prob(n, x) - n as f64 * hermite_prob(n - 1, x);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
    }

    #[test]
    fn conditioning_is_idempotent(
        (a, base, dirs) in (2usize..=4).prop_flat_map(|d| (spd(d), seqvec(2, d), prop::collection::vec(seqvec(2, d), 1..=2))),
        coeff in finite(),
    ) {
        let dims = base.dims();
        let mut e = ChaosExpansion::new(dims);
        e.add_term(coeff, base, 2).unwrap();
        let set = match ConditioningSet::from_spanning(&dirs, &a) {
            Ok(s) => s,
            Err(_) => return Ok(()),
        };
        let once = cond_exp_chaos(&e, &set, &a).unwrap();
        let twice = cond_exp_chaos(&once, &set, &a).unwrap();
        for (k1, k2) in once.kernels().zip(twice.kernels()) {
            for (t1, t2) in k1.terms().iter().zip(k2.terms()) {
                prop_assert!((t1.base.matrix() - t2.base.matrix()).amax() <= 1e-9);
            }
        }
    }

    #[test]
    fn chaos_document_round_trip(
        (b1, b2) in dims().prop_flat_map(|(m, d)| (seqvec(m, d), seqvec(m, d))),
        c in finite(),
    ) {
        let dims = b1.dims();
        let mut e = ChaosExpansion::new(dims);
        e.add_term(c, b1, 1).unwrap();
        e.add_term(-c, b2, 3).unwrap();
        let json = serde_json::to_string(&chaos_to_doc(&e)).unwrap();
        let doc: ChaosDoc = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(chaos_from_doc(&doc, dims).unwrap(), e);
    }
}

#[test]
fn mismatched_dimensions_are_rejected() {
    let f = SeqVec::zeros(TruncationDims::new(2, 3).unwrap());
    assert!(bracket(&f, &DVector::zeros(4)).is_err());
    let a = CovOp::identity(4).unwrap();
    assert!(inner_a(&f, &f, &a).is_err());
    assert!(CovOp::new(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0])).is_err());
}
