use kreisslab_core::linalg::{Matrix, Vector, C64};
use kreisslab_core::norm::{dense_svd_norm, power_norm, spectral_norm, NormOptions, Power};
use kreisslab_core::{OperatorSpec, ShiftDirection};
use proptest::prelude::*;

fn direction() -> impl Strategy<Value = ShiftDirection> {
    prop_oneof![Just(ShiftDirection::Forward), Just(ShiftDirection::Backward)]
}

fn shift() -> impl Strategy<Value = OperatorSpec> {
    (direction(), prop::collection::vec(0.1f64..3.0, 1..12))
        .prop_map(|(d, r)| OperatorSpec::shift(d, r).unwrap())
}

fn dense() -> impl Strategy<Value = OperatorSpec> {
    (2usize..8, any::<u64>()).prop_map(|(d, seed)| OperatorSpec::dense(Matrix::random(d, d, seed)).unwrap())
}

fn leaf() -> impl Strategy<Value = OperatorSpec> {
    prop_oneof![shift(), dense()]
}

fn any_operator() -> impl Strategy<Value = OperatorSpec> {
    prop_oneof![
        leaf(),
        prop::collection::vec(leaf(), 1..4).prop_map(|s| OperatorSpec::direct_sum(s).unwrap()),
        (leaf(), 0.0f64..std::f64::consts::TAU)
            .prop_map(|(op, t)| OperatorSpec::rotated(C64::from_polar(1.0, t), op).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn adjoint_consistency(op in any_operator(), seed in any::<u64>()) {
        let mut v = Vector::seeded_unit_vectors(op.dim(), 2, seed);
        let y = v.pop().unwrap();
        let x = v.pop().unwrap();
        let lhs = op.apply(&x).unwrap().dot(&y);
        let rhs = x.dot(&op.apply_adjoint(&y).unwrap());
        prop_assert!((lhs - rhs).norm() <= 1e-10);
    }

    #[test]
    fn materialize_matches_apply(op in any_operator()) {
        let m = op.materialize().unwrap();
        for j in 0..op.dim() {
            let e = Vector::basis(op.dim(), j);
            prop_assert!(op.apply(&e).unwrap().sub(&m.column(j)).norm() <= 1e-14);
        }
    }

    #[test]
    fn shift_closed_form_matches_svd(op in shift()) {
        let m = op.materialize().unwrap();
        for k in 1..=op.dim() {
            let closed = power_norm(&op, k, &NormOptions::default()).unwrap().value;
            let svd = m.power(k).svd_norm();
            let scale = closed.abs().max(svd.abs());
            if scale < 1e-14 {
                prop_assert!((closed - svd).abs() < 1e-14);
            } else {
                prop_assert!((closed - svd).abs() <= 1e-8 * scale, "k={} {} vs {}", k, closed, svd);
            }
        }
    }

    #[test]
    fn submultiplicative(op in any_operator(), k in 1usize..6, m in 1usize..6) {
        let opts = NormOptions::with_tol(1e-12);
        let a = power_norm(&op, k, &opts).unwrap().value;
        let b = power_norm(&op, m, &opts).unwrap().value;
        let ab = power_norm(&op, k + m, &opts).unwrap().value;
        prop_assert!(ab <= a * b * (1.0 + 1e-8) + 1e-14, "{} > {} * {}", ab, a, b);
    }

    #[test]
    fn rotation_preserves_norm(op in leaf(), t in 0.0f64..std::f64::consts::TAU) {
        let r = OperatorSpec::rotated(C64::from_polar(1.0, t), op.clone()).unwrap();
        let a = spectral_norm(&op, 1e-13).unwrap().value;
        let b = spectral_norm(&r, 1e-13).unwrap().value;
        prop_assert!((a - b).abs() <= 1e-10 * a.max(1.0));
    }

    #[test]
    fn direct_sum_norm_is_max(parts in prop::collection::vec(shift(), 1..5), k in 1usize..8) {
        let sum = OperatorSpec::direct_sum(parts.clone()).unwrap();
        let opts = NormOptions::default();
        let expected = parts
            .iter()
            .map(|p| power_norm(p, k, &opts).unwrap().value)
            .fold(0.0, f64::max);
        prop_assert_eq!(power_norm(&sum, k, &opts).unwrap().value, expected);
    }

    #[test]
    fn iteration_agrees_with_svd_oracle(op in dense(), k in 1usize..4) {
        let e = power_norm(&op, k, &NormOptions::with_tol(1e-13)).unwrap().value;
        let oracle = dense_svd_norm(&Power { base: &op, exponent: k }).value;
        prop_assert!((e - oracle).abs() <= 1e-9 * oracle.max(1.0));
    }
}
