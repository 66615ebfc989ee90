use kreisslab_core::constructions::{
    build_bermbmp_shift, build_shields_counterexample, build_tn, build_tz_block, ergces_matrix,
    ergces_power_closed_form, tn_weights, tz_block_matrix, DirectSumParams, ErgcesParams, TnParams,
};
use kreisslab_core::linalg::{Matrix, C64};
use kreisslab_core::norm::{power_norm, NormOptions};
use kreisslab_core::{OperatorSpec, ShiftDirection};
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn eta() -> impl Strategy<Value = f64> {
    0.01f64..0.49
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tn_weight_anchors(n in 1usize..=256, eta in eta()) {
        let w = tn_weights(TnParams::new(n, eta).unwrap()).unwrap();
        let w = w.values();
        let nf = n as f64;
        prop_assert_eq!(w.len(), 2 * n);
        prop_assert!(rel(w[0], 1.0) <= 1e-12);
        prop_assert!(rel(w[n - 1], nf.powf(eta)) <= 1e-12);
        prop_assert!(rel(w[n], nf.powf(eta)) <= 1e-12);
        prop_assert!(rel(w[2 * n - 1], nf.powf(2.0 * eta)) <= 1e-12);
    }

    #[test]
    fn tn_ratio_max_at_first_step(n in 2usize..=128, eta in eta()) {
        let c = build_tn(TnParams::new(n, eta).unwrap()).unwrap();
        let OperatorSpec::WeightedShift(s) = &c.op else { panic!("tn is a shift") };
        let r = s.ratios();
        let q = 2f64.powf(eta);
        // the last step also reaches 2^eta, so only attainment at j = 1 is asserted
        prop_assert!(rel(r[0], q) <= 1e-12);
        prop_assert!(r.iter().all(|&v| v <= q * (1.0 + 1e-12)));
    }

    #[test]
    fn shields_power_chain(n_max in 2usize..=24, eta in 0.43f64..0.49) {
        let c = build_shields_counterexample(DirectSumParams::new(0.15, eta, n_max).unwrap()).unwrap();
        let opts = NormOptions::default();
        for n in 1..=n_max {
            let v = power_norm(&c.op, 2 * n - 1, &opts).unwrap().value;
            let target = (n as f64).powf(2.0 * eta);
            if n == 1 {
                // ||T|| = 2^eta comes from the larger summands
                prop_assert!(v >= target);
            } else {
                prop_assert!(rel(v, target) <= 1e-12);
            }
            if n < n_max {
                let v = power_norm(&c.op, 2 * n, &opts).unwrap().value;
                prop_assert!(v >= ((n + 1) as f64).powf(2.0 * eta) / 2f64.powf(eta) * (1.0 - 1e-12));
            }
        }
    }

    #[test]
    fn bermbmp_forward_norm(alpha in eta(), d in 2usize..40) {
        let c = build_bermbmp_shift(alpha, ShiftDirection::Forward, d).unwrap();
        let svd = c.op.materialize().unwrap().svd_norm();
        prop_assert!(rel(svd, 2f64.powf(alpha)) <= 1e-12);
    }
}

#[test]
fn ergces_closed_form_matches_dense_powering() {
    let p = ErgcesParams::new(20).unwrap();
    let t = ergces_matrix(p);
    let mut power = t.clone();
    for n in 1..=200 {
        let closed = ergces_power_closed_form(p, n).unwrap();
        assert!(closed.sub(&power).max_abs() <= 1e-10, "n = {n}");
        power = t.matmul(&power);
    }
}

#[test]
fn ergces_range_witness() {
    let p = ErgcesParams::new(20).unwrap();
    let mut t_plus_i = ergces_matrix(p);
    for i in 0..=20 {
        t_plus_i[(i, i)] += C64::new(1.0, 0.0);
    }
    for j in 1..=20 {
        let eps = ErgcesParams::epsilon(j);
        let mut x = kreisslab_core::Vector::zeros(21);
        x[j] = C64::new(-1.0 / eps, 0.0);
        let y = t_plus_i.mul_vec(&x);
        let mut expected = kreisslab_core::Vector::basis(21, 0);
        expected[j] = C64::new(-eps, 0.0);
        assert!(y.sub(&expected).norm() <= 1e-12, "j = {j}");
    }
}

#[test]
fn tz_block_power_formula() {
    let d = 8;
    let t = tz_block_matrix(d);
    let mut b = Matrix::zeros(d, d);
    for k in 0..d - 1 {
        b[(k, k + 1)] = C64::new(1.0, 0.0);
    }
    let mut b_minus_i = b.clone();
    for k in 0..d {
        b_minus_i[(k, k)] -= C64::new(1.0, 0.0);
    }
    for n in 1..=6 {
        let tn = t.power(n);
        let bn = b.power(n);
        let corner = b.power(n - 1).matmul(&b_minus_i).scaled(C64::new(n as f64, 0.0));
        for i in 0..d {
            for j in 0..d {
                assert!((tn[(i, j)] - bn[(i, j)]).norm() <= 1e-12);
                assert!((tn[(d + i, d + j)] - bn[(i, j)]).norm() <= 1e-12);
                assert!((tn[(i, d + j)] - corner[(i, j)]).norm() <= 1e-12);
                assert!(tn[(d + i, j)].norm() == 0.0);
            }
        }
    }
    assert!(build_tz_block(1).is_err());
}
