use kreisslab_core::cesaro::{rotated_mean_norm_profile_with, MeanOrder, ProfileOptions};
use kreisslab_core::constructions::{build_bermbmp_shift, build_tn, catalog_defaults, TnParams};
use kreisslab_core::kreiss::{
    hilbert_claim_sweep, kb2_constant, kreiss_constant, lemma21_bound, lemma21_r_grid, strong_kreiss_constant,
    tn_claim2_sweep, AnnulusGrid, ClaimStatus,
};
use kreisslab_core::linalg::{Matrix, Vector, C64};
use kreisslab_core::{OperatorSpec, ShiftDirection};
use proptest::prelude::*;

fn small_operator() -> impl Strategy<Value = OperatorSpec> {
    prop_oneof![
        (2usize..10, 0.05f64..0.45).prop_map(|(n, e)| build_tn(TnParams::new(n, e).unwrap()).unwrap().op),
        (2usize..6, any::<u64>()).prop_map(|(d, seed)| {
            // strictly upper triangular, so nilpotent
            let mut m = Matrix::random(d, d, seed);
            for i in 0..d {
                for j in 0..=i {
                    m[(i, j)] = C64::new(0.0, 0.0);
                }
            }
            OperatorSpec::dense(m).unwrap()
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn refining_the_annulus_never_lowers_the_sup(op in small_operator(), levels in 1u32..4, angles_exp in 2u32..5) {
        let angles = 1usize << angles_exp;
        let coarse = kreiss_constant(&op, &AnnulusGrid::geometric(levels, angles).unwrap()).unwrap();
        let finer_r = kreiss_constant(&op, &AnnulusGrid::geometric(levels + 2, angles).unwrap()).unwrap();
        let finer_a = kreiss_constant(&op, &AnnulusGrid::geometric(levels, 2 * angles).unwrap()).unwrap();
        prop_assert!(finer_r.kreiss_c.unwrap() >= coarse.kreiss_c.unwrap());
        prop_assert!(finer_a.kreiss_c.unwrap() >= coarse.kreiss_c.unwrap());
    }

    #[test]
    fn refining_the_angle_grid_never_lowers_mean_sups(op in small_operator(), angles_exp in 1u32..4) {
        let opts = ProfileOptions { rotation_shortcut: false, ..ProfileOptions::default() };
        let a = 1usize << angles_exp;
        for order in [MeanOrder::First, MeanOrder::Second] {
            let coarse = rotated_mean_norm_profile_with(&op, 12, a, order, &opts).unwrap();
            let fine = rotated_mean_norm_profile_with(&op, 16, 2 * a, order, &opts).unwrap();
            for (c, f) in coarse.points.iter().zip(&fine.points) {
                prop_assert!(f.sup_lambda >= c.sup_lambda);
            }
            prop_assert!(fine.sup() >= coarse.sup());
        }
    }

    #[test]
    fn strong_dominates_resolvent_constant(op in small_operator(), k_max in 1usize..5) {
        let grid = AnnulusGrid::geometric(3, 8).unwrap();
        let k = kreiss_constant(&op, &grid).unwrap().kreiss_c.unwrap();
        let s = strong_kreiss_constant(&op, &grid, k_max).unwrap().strong_c.unwrap();
        prop_assert!(s >= k);
    }

    #[test]
    fn rotated_shift_has_the_same_kreiss_constant(n in 2usize..10, eta in 0.05f64..0.45, t in 0.0f64..std::f64::consts::TAU) {
        let op = build_bermbmp_shift(eta, ShiftDirection::Forward, n).unwrap().op;
        let rot = OperatorSpec::rotated(C64::from_polar(1.0, t), op.clone()).unwrap();
        let grid = AnnulusGrid::geometric(4, 16).unwrap();
        let a = kreiss_constant(&op, &grid).unwrap().kreiss_c.unwrap();
        let b = kreiss_constant(&rot, &grid).unwrap().kreiss_c.unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0), "{} vs {}", a, b);
    }
}

#[test]
fn rotated_dense_matches_on_grid_angles() {
    let mut m = Matrix::random(5, 5, 11);
    for i in 0..5 {
        for j in 0..=i {
            m[(i, j)] = C64::new(0.0, 0.0);
        }
    }
    let op = OperatorSpec::dense(m).unwrap();
    let grid = AnnulusGrid::geometric(4, 32).unwrap();
    let a = kreiss_constant(&op, &grid).unwrap().kreiss_c.unwrap();
    let rot = OperatorSpec::rotated(C64::from_polar(1.0, std::f64::consts::TAU * 5.0 / 32.0), op).unwrap();
    let b = kreiss_constant(&rot, &grid).unwrap().kreiss_c.unwrap();
    assert!((a - b).abs() <= 1e-9 * a);
}

#[test]
fn tn_kreiss_constant_is_grid_stable() {
    let op = build_tn(TnParams::new(16, 0.45).unwrap()).unwrap().op;
    let a = kreiss_constant(&op, &AnnulusGrid::geometric(8, 64).unwrap()).unwrap().kreiss_c.unwrap();
    let b = kreiss_constant(&op, &AnnulusGrid::geometric(9, 128).unwrap()).unwrap().kreiss_c.unwrap();
    assert!(b >= a && b <= 1.05 * a, "{a} -> {b}");
}

#[test]
fn power_sum_bound_for_all_eta() {
    for eta in [0.05, 0.15, 0.25, 0.35, 0.45] {
        let sweep = tn_claim2_sweep(eta, 1_000_000).unwrap();
        assert_eq!(sweep.failures, 0, "eta = {eta}: {:?}", sweep.tightest);
    }
}

#[test]
fn orbit_claims_hold_on_the_catalog() {
    for c in catalog_defaults() {
        let angles = if c.op.is_shift_like() { 1 } else { 32 };
        let report = kb2_constant(&c.op, 128, angles).unwrap();
        let cst = report.kb2_normalized_c.unwrap();
        let vectors: Vec<(u64, Vector)> = (0..64u64)
            .map(|s| (s, Vector::seeded_unit_vectors(c.op.dim(), 1, s).pop().unwrap()))
            .collect();
        let results = hilbert_claim_sweep(&c.op, cst, &vectors, 64).unwrap();
        let failed: Vec<_> = results.iter().filter(|r| !r.pass).collect();
        assert!(failed.is_empty(), "{}: {} failures, first {:?}", c.name, failed.len(), failed[0]);
        assert!(results.iter().all(|r| r.status != ClaimStatus::Fail));
    }
}

#[test]
fn lemma21_sqrt_and_linear_sequences() {
    let grid = lemma21_r_grid(12);
    let sqrt: Vec<f64> = (0..=10_000).map(|k| ((k + 1) as f64).sqrt()).collect();
    let r = lemma21_bound(&sqrt, &grid).unwrap();
    assert!(r.hypothesis_holds && r.conclusion.pass && r.failures == 0);
    let linear: Vec<f64> = (0..=10_000).map(|k| k as f64).collect();
    let r = lemma21_bound(&linear, &grid).unwrap();
    assert!(!r.hypothesis_holds);
    assert_eq!(r.conclusion.status, ClaimStatus::HypothesisFails);
}
