use kreisslab_core::cesaro::{
    angle_grid, cesaro_identity_residuals, cesaro_mean, cesaro_mean2_forms, rotated_mean_norm_profile_with,
    MeanAccumulator, MeanOrder, ProfileOptions, MEAN2_FORM_TOL,
};
use kreisslab_core::constructions::{
    build_bermbmp_shift, build_ergces, build_tn, catalog_defaults, ErgcesParams, TnParams,
};
use kreisslab_core::linalg::Matrix;
use kreisslab_core::{OperatorSpec, ShiftDirection};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn zeroth_mean_is_identity(d in 1usize..10, seed in any::<u64>()) {
        let op = OperatorSpec::dense(Matrix::random(d, d, seed)).unwrap();
        let m0 = cesaro_mean(&op, 0).unwrap().materialize().unwrap();
        prop_assert_eq!(m0, Matrix::identity(d));
    }

    #[test]
    fn second_mean_forms_agree(seed in any::<u64>(), n in 0usize..=32) {
        let op = OperatorSpec::dense(Matrix::random(8, 8, seed).scaled(0.3.into())).unwrap();
        let (a, b) = cesaro_mean2_forms(&op, n).unwrap();
        let scale = a.max_abs().max(b.max_abs()).max(1.0);
        prop_assert!(a.sub(&b).max_abs() <= MEAN2_FORM_TOL * scale);
    }

}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn shift_means_ignore_rotation(n in 2usize..12, eta in 0.05f64..0.45) {
        let tn = build_tn(TnParams::new(n, eta).unwrap()).unwrap().op;
        let bm = build_bermbmp_shift(eta, ShiftDirection::Forward, 3 * n).unwrap().op;
        let full = ProfileOptions { rotation_shortcut: false, ..ProfileOptions::default() };
        for op in [tn, bm] {
            let p = rotated_mean_norm_profile_with(&op, 16, 64, MeanOrder::First, &full).unwrap();
            for pt in &p.points {
                prop_assert!((pt.sup_lambda - pt.norm_m1).abs() <= 1e-9 * pt.norm_m1.max(1.0));
            }
        }
    }
}

#[test]
fn identity_residuals_on_catalog() {
    for c in catalog_defaults() {
        let r = cesaro_identity_residuals(&c.op, 64).unwrap();
        let worst = r.iter().cloned().fold(0.0, f64::max);
        assert!(worst <= 1e-10, "{}: {worst:e}", c.name);
    }
}

#[test]
fn shortcut_profile_equals_full_profile_for_tn() {
    let op = build_tn(TnParams::new(8, 0.3).unwrap()).unwrap().op;
    let fast = rotated_mean_norm_profile_with(&op, 24, 256, MeanOrder::First, &ProfileOptions::default()).unwrap();
    assert!(fast.rotation_shortcut);
    assert_eq!(fast.angles_evaluated, 1);
    let full = ProfileOptions {
        rotation_shortcut: false,
        ..ProfileOptions::default()
    };
    let slow = rotated_mean_norm_profile_with(&op, 24, 256, MeanOrder::First, &full).unwrap();
    for (a, b) in fast.points.iter().zip(&slow.points) {
        assert!((a.sup_lambda - b.sup_lambda).abs() <= 1e-9);
    }
}

#[test]
fn ergces_even_means_bounded() {
    let p = ErgcesParams::new(20).unwrap();
    let op = build_ergces(p).unwrap().op;
    let mut acc = MeanAccumulator::new(&op).unwrap();
    for k in 0..=128 {
        acc.advance_to(2 * k);
        let m = acc.mean();
        assert!(m.svd_norm() <= 1.5 + 1e-6, "k = {k}");
        for j in 1..=20 {
            assert!(m[(0, j)].norm() <= ErgcesParams::epsilon(j) / 2.0 + 1e-9, "k = {k}, j = {j}");
        }
    }
}

#[test]
fn identity_profile_peaks_at_one() {
    let p = rotated_mean_norm_profile_with(
        &OperatorSpec::identity(3),
        10,
        16,
        MeanOrder::First,
        &ProfileOptions::default(),
    )
    .unwrap();
    assert_eq!(angle_grid(16).len(), 16);
    for pt in &p.points {
        assert!((pt.sup_lambda - 1.0).abs() <= 1e-12);
        assert_eq!(pt.argmax_angle, 0);
    }
}
