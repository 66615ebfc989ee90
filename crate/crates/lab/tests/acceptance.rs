//! Acceptance suite: one PASS/FAIL line per criterion. Exits nonzero if
//! any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use kreisslab::analysis::{growth_fit, shields_lower_bound, GrowthWindow};
use kreisslab::report::to_json_bytes;
use kreisslab::reproduce::{probe_vectors, reproduce, tn_mean_sup, tz_block_ratios, TheoremId, CLAIM2_ETAS};
use kreisslab_core::cesaro::{
    cesaro_identity_residuals, mean_difference_decay, rotated_mean_norm_profile_with, MeanAccumulator, MeanOrder,
    ProfileOptions,
};
use kreisslab_core::constructions::{
    build_bermbmp_shift, build_ergces, build_shields_counterexample, build_tn, catalog_defaults, ergces_matrix,
    ergces_power_closed_form, DirectSumParams, ErgcesParams, TnParams,
};
use kreisslab_core::kreiss::{
    hilbert_claim_sweep, kb2_constant, kreiss_constant, lemma21_bound, lemma21_r_grid, tn_claim2_sweep, AnnulusGrid,
    ClaimId, ClaimStatus, LEMMA21_DIVERGENCE_RATIO,
};
use kreisslab_core::linalg::{Matrix, Vector, C64};
use kreisslab_core::norm::{power_norm, power_norms, spectral_norm, spectral_norm_map, NormOptions, Power};
use kreisslab_core::{OperatorSpec, ShiftDirection};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

type Outcome = Result<(bool, String), String>;
type Criterion = (&'static str, fn() -> Outcome);

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn tn(n: usize, eta: f64) -> Result<OperatorSpec, String> {
    Ok(build_tn(TnParams::new(n, eta).map_err(err)?).map_err(err)?.op)
}

fn c1_exact_norms() -> Outcome {
    let opts = NormOptions::with_tol(1e-12);
    let (mut worst_norm, mut worst_top) = (0.0f64, 0.0f64);
    for eta in [0.25, 0.45] {
        for n in [8, 16, 32, 64] {
            let op = tn(n, eta)?;
            let est = spectral_norm(&op, 1e-12).map_err(err)?.value;
            worst_norm = worst_norm.max(rel(est, 2f64.powf(eta)));
            let k = 2 * n - 1;
            let exact = (n as f64).powf(2.0 * eta);
            let closed = power_norm(&op, k, &opts).map_err(err)?.value;
            let iterated = spectral_norm_map(&Power { base: &op, exponent: k }, &opts).map_err(err)?.value;
            worst_top = worst_top.max(rel(closed, exact)).max(rel(iterated, exact));
        }
    }
    Ok((
        worst_norm <= 1e-9 && worst_top <= 1e-6,
        format!("max rel err ||T_N|| {worst_norm:.2e} (tol 1e-9), ||T_N^(2N-1)|| {worst_top:.2e} (tol 1e-6)"),
    ))
}

fn c2_uniform_means() -> Outcome {
    let mut parts = Vec::new();
    let mut gate = false;
    for eta in [0.25, 0.45] {
        let c: Vec<f64> = [8, 32, 64]
            .iter()
            .map(|&n| tn_mean_sup(n, eta).map(|r| r.0).map_err(err))
            .collect::<Result<_, _>>()?;
        let ok = c[2] <= 1.05 * c[1] && c[2] <= 1.10 * c[0];
        if eta == 0.25 {
            gate = ok;
        }
        parts.push(format!(
            "eta={eta}{}: c*(8)={:.4} c*(32)={:.4} c*(64)={:.4} {}",
            if eta == 0.25 { "" } else { " [info]" },
            c[0],
            c[1],
            c[2],
            if ok { "within" } else { "outside" }
        ));
    }
    Ok((gate, parts.join("; ")))
}

fn c3_shields() -> Outcome {
    let c = build_shields_counterexample(DirectSumParams::new(0.15, 0.45, 64).map_err(err)?).map_err(err)?;
    let series = power_norms(&c.op, 126, 1e-12).map_err(err)?;
    if !series.failures.is_empty() || series.points.len() != 126 {
        return Ok((false, "norm series incomplete".into()));
    }
    let mut fails = 0;
    let mut tight = f64::MAX;
    for p in &series.points {
        let lb = shields_lower_bound(p.k, 0.15);
        if p.estimate.value < lb {
            fails += 1;
        }
        tight = tight.min(p.estimate.value / lb);
    }
    let fit = growth_fit(&series, GrowthWindow { k_min: 16, k_max: 126 }, Some(0.15)).map_err(err)?;
    Ok((
        fails == 0 && (0.85..=0.95).contains(&fit.beta),
        format!(
            "lower bound failures {fails}/126 (min ratio {tight:.4}), beta {:.4} in [0.85, 0.95], rms {:.3e}",
            fit.beta, fit.residual_rms
        ),
    ))
}

fn c4_claims() -> Outcome {
    let ops = [
        ("tn(16,0.45)", tn(16, 0.45)?),
        (
            "bermbmp(fwd,0.45,64)",
            build_bermbmp_shift(0.45, ShiftDirection::Forward, 64).map_err(err)?.op,
        ),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, op) in ops {
        let c = kb2_constant(&op, 256, 256).map_err(err)?.kb2_normalized_c.ok_or("no kb2 constant")?;
        let vectors = probe_vectors(op.dim(), 64, 0x5EED);
        let results = hilbert_claim_sweep(&op, c, &vectors, 64).map_err(err)?;
        let claims = [ClaimId::H1, ClaimId::H2, ClaimId::H3, ClaimId::H4];
        let relevant: Vec<_> = results.iter().filter(|r| claims.contains(&r.claim)).collect();
        let failures = relevant.iter().filter(|r| !r.pass).count();
        let vacuous = relevant.iter().filter(|r| r.status == ClaimStatus::VacuousPass).count();
        ok &= failures == 0 && !relevant.is_empty();
        parts.push(format!(
            "{name}: C={c:.4}, {} instances, {failures} failures, {vacuous} vacuous",
            relevant.len()
        ));
    }
    Ok((ok, parts.join("; ")))
}

fn c5_identities_and_decay() -> Outcome {
    let mut worst = 0.0f64;
    for c in catalog_defaults() {
        let r = cesaro_identity_residuals(&c.op, 64).map_err(err)?;
        worst = r.iter().copied().fold(worst, f64::max);
    }
    let mut ok = worst <= 1e-10;
    let mut parts = vec![format!("max identity residual {worst:.2e} (tol 1e-10)")];
    for (name, op) in [
        ("tn(32,0.45)", tn(32, 0.45)?),
        ("ergces(20)", build_ergces(ErgcesParams::new(20).map_err(err)?).map_err(err)?.op),
    ] {
        let d = mean_difference_decay(&op, &[64, 512]).map_err(err)?;
        ok &= d[1].1 < d[0].1;
        parts.push(format!("{name}: d(512)={:.3e} < d(64)={:.3e}", d[1].1, d[0].1));
    }
    Ok((ok, parts.join("; ")))
}

fn c6_ergces() -> Outcome {
    let p = ErgcesParams::new(20).map_err(err)?;
    let t = ergces_matrix(p);
    let mut dense = Matrix::identity(21);
    let mut closed_diff = 0.0f64;
    let mut norms = vec![0.0];
    for n in 1..=256 {
        dense = t.matmul(&dense);
        if n <= 200 {
            closed_diff = closed_diff.max(ergces_power_closed_form(p, n).map_err(err)?.sub(&dense).max_abs());
        }
        norms.push(dense.svd_norm() / n as f64);
    }
    let op = OperatorSpec::dense(t).map_err(err)?;
    let mut acc = MeanAccumulator::new(&op).map_err(err)?;
    let (mut even_sup, mut entry_fail) = (0.0f64, 0);
    for k in 0..=128 {
        acc.advance_to(2 * k);
        let m = acc.mean();
        even_sup = even_sup.max(m.svd_norm());
        for j in 1..=20 {
            if m[(0, j)].norm() > ErgcesParams::epsilon(j) / 2.0 + 1e-9 {
                entry_fail += 1;
            }
        }
    }
    let ratio = norms[256] / norms[32];
    Ok((
        closed_diff <= 1e-10 && even_sup <= 1.5 + 1e-6 && entry_fail == 0 && ratio < 0.5,
        format!(
            "closed-form diff {closed_diff:.2e}, max even mean {even_sup:.4}, entry failures {entry_fail}, n^-1||T^n|| ratio 256/32 = {ratio:.4}"
        ),
    ))
}

fn c7_tz_block() -> Outcome {
    let ratios = tz_block_ratios(512, 32).map_err(err)?;
    let min = ratios.iter().map(|r| r.1).fold(f64::MAX, f64::min);
    Ok((min >= 1.9, format!("min_(n<=32) n^-1 ||T^n|| lower bound {min:.5} (threshold 1.9)")))
}

fn c8_lemma21() -> Outcome {
    let grid = lemma21_r_grid(12);
    let sqrt: Vec<f64> = (0..=10_000).map(|k| ((k + 1) as f64).sqrt()).collect();
    let good = lemma21_bound(&sqrt, &grid).map_err(err)?;
    let linear: Vec<f64> = (0..=10_000).map(|k| k as f64).collect();
    let bad = lemma21_bound(&linear, &grid).map_err(err)?;
    let growth = bad.b_estimate / bad.b_coarse;
    Ok((
        good.hypothesis_holds && good.failures == 0 && !bad.hypothesis_holds && growth >= LEMMA21_DIVERGENCE_RATIO,
        format!(
            "sqrt(k+1): B={:.4}, {} failures over n<=10^4; a_k=k: sup grows x{growth:.1} under refinement ({})",
            good.b_estimate,
            good.failures,
            if bad.hypothesis_holds { "not detected" } else { "reported as divergent" }
        ),
    ))
}

fn c9_claim2_sum() -> Outcome {
    let mut failures = 0;
    let mut checked = 0;
    let mut tight = f64::MAX;
    for eta in CLAIM2_ETAS {
        let s = tn_claim2_sweep(eta, 1_000_000).map_err(err)?;
        failures += s.failures;
        checked += s.checked;
        tight = tight.min(s.tightest.relative_margin());
    }
    Ok((
        failures == 0 && checked == 5_000_000,
        format!("{checked} instances, {failures} failures, smallest relative margin {tight:.3e}"),
    ))
}

fn runner(cases: u32) -> TestRunner {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::from_seed(RngAlgorithm::ChaCha, &[0x5E; 32]))
}

fn leaf() -> impl Strategy<Value = OperatorSpec> {
    prop_oneof![
        (
            prop_oneof![Just(ShiftDirection::Forward), Just(ShiftDirection::Backward)],
            prop::collection::vec(0.1f64..3.0, 1..12)
        )
            .prop_map(|(d, r)| OperatorSpec::shift(d, r).unwrap()),
        (2usize..8, any::<u64>()).prop_map(|(d, s)| OperatorSpec::dense(Matrix::random(d, d, s)).unwrap()),
    ]
}

fn any_operator() -> impl Strategy<Value = OperatorSpec> {
    prop_oneof![
        leaf(),
        prop::collection::vec(leaf(), 1..4).prop_map(|s| OperatorSpec::direct_sum(s).unwrap()),
        (leaf(), 0.0f64..std::f64::consts::TAU)
            .prop_map(|(op, t)| OperatorSpec::rotated(C64::from_polar(1.0, t), op).unwrap()),
    ]
}

/// Operators with spectral radius below one, as the resolvent grid needs.
fn contraction_like() -> impl Strategy<Value = OperatorSpec> {
    prop_oneof![
        (2usize..10, 0.05f64..0.45).prop_map(|(n, e)| build_tn(TnParams::new(n, e).unwrap()).unwrap().op),
        (2usize..6, any::<u64>()).prop_map(|(d, seed)| {
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

fn battery(name: &str, result: Result<(), String>) -> (bool, String) {
    match result {
        Ok(()) => (true, format!("{name} ok")),
        Err(e) => (false, format!("{name} FAILED: {e}")),
    }
}

fn c10_structural() -> Outcome {
    let mut parts = Vec::new();

    parts.push(battery(
        "adjoint",
        runner(64)
            .run(&(any_operator(), any::<u64>()), |(op, seed)| {
                let mut v = Vector::seeded_unit_vectors(op.dim(), 2, seed);
                let (y, x) = (v.pop().unwrap(), v.pop().unwrap());
                let lhs = op.apply(&x).unwrap().dot(&y);
                let rhs = x.dot(&op.apply_adjoint(&y).unwrap());
                prop_assert!((lhs - rhs).norm() <= 1e-10);
                Ok(())
            })
            .map_err(err),
    ));

    parts.push(battery(
        "submultiplicativity",
        runner(64)
            .run(&(any_operator(), 1usize..6, 1usize..6), |(op, k, m)| {
                let opts = NormOptions::with_tol(1e-12);
                let a = power_norm(&op, k, &opts).unwrap().value;
                let b = power_norm(&op, m, &opts).unwrap().value;
                let ab = power_norm(&op, k + m, &opts).unwrap().value;
                prop_assert!(ab <= a * b * (1.0 + 1e-8) + 1e-14);
                Ok(())
            })
            .map_err(err),
    ));

    parts.push(battery(
        "rotation",
        runner(16)
            .run(&(leaf(), contraction_like(), 0usize..8), |(shift, op, k)| {
                if shift.is_shift_like() {
                    let full = ProfileOptions {
                        rotation_shortcut: false,
                        ..ProfileOptions::default()
                    };
                    let fast = rotated_mean_norm_profile_with(&shift, 8, 8, MeanOrder::First, &ProfileOptions::default()).unwrap();
                    let slow = rotated_mean_norm_profile_with(&shift, 8, 8, MeanOrder::First, &full).unwrap();
                    for (a, b) in fast.points.iter().zip(&slow.points) {
                        prop_assert!((a.sup_lambda - b.sup_lambda).abs() <= 1e-9 * b.sup_lambda.max(1.0));
                        prop_assert!((b.sup_lambda - b.norm_m1).abs() <= 1e-9 * b.norm_m1.max(1.0));
                    }
                }
                let grid = AnnulusGrid::geometric(3, 8).unwrap();
                let lambda = C64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / 8.0);
                let base = kreiss_constant(&op, &grid).unwrap().kreiss_c.unwrap();
                let rotated = OperatorSpec::rotated(lambda, op).unwrap();
                let r = kreiss_constant(&rotated, &grid).unwrap().kreiss_c.unwrap();
                prop_assert!((r - base).abs() <= 1e-9 * base, "{} vs {}", r, base);
                Ok(())
            })
            .map_err(err),
    ));

    parts.push(battery(
        "grid monotonicity",
        runner(12)
            .run(&(contraction_like(), 1u32..4, 2u32..5), |(op, levels, e)| {
                let a = 1usize << e;
                let coarse = kreiss_constant(&op, &AnnulusGrid::geometric(levels, a).unwrap()).unwrap().kreiss_c.unwrap();
                let radial = kreiss_constant(&op, &AnnulusGrid::geometric(levels + 2, a).unwrap()).unwrap().kreiss_c.unwrap();
                let angular = kreiss_constant(&op, &AnnulusGrid::geometric(levels, 2 * a).unwrap()).unwrap().kreiss_c.unwrap();
                prop_assert!(radial >= coarse && angular >= coarse);
                let opts = ProfileOptions {
                    rotation_shortcut: false,
                    ..ProfileOptions::default()
                };
                let m_coarse = rotated_mean_norm_profile_with(&op, 12, a / 2, MeanOrder::Second, &opts).unwrap();
                let m_fine = rotated_mean_norm_profile_with(&op, 12, a, MeanOrder::Second, &opts).unwrap();
                prop_assert!(m_fine.sup() >= m_coarse.sup());
                Ok(())
            })
            .map_err(err),
    ));

    let determinism = (|| {
        for id in [TheoremId::Lemma21, TheoremId::Thm27Claims] {
            let mut cfg = kreisslab::config::RunConfig::new("reproduce");
            cfg.theorem = Some(id.as_str().into());
            let once = to_json_bytes(&kreisslab::commands::run(&cfg).map_err(err)?.0).map_err(err)?;
            let twice = to_json_bytes(&kreisslab::commands::run(&cfg).map_err(err)?.0).map_err(err)?;
            if once != twice {
                return Err(format!("{id} report bytes differ"));
            }
        }
        reproduce(TheoremId::Thm15, 0x5EED).map_err(err)?;
        Ok(())
    })();
    parts.push(battery("report determinism", determinism));

    Ok((parts.iter().all(|p| p.0), parts.into_iter().map(|p| p.1).collect::<Vec<_>>().join(", ")))
}

fn main() -> ExitCode {
    let start = Instant::now();
    let criteria: [Criterion; 10] = [
        ("1 exact TN norms", c1_exact_norms),
        ("2 uniform Cesaro bound for T_N", c2_uniform_means),
        ("3 direct-sum power growth", c3_shields),
        ("4 orbit claims under KB2 constant", c4_claims),
        ("5 mean identities and decay", c5_identities_and_decay),
        ("6 ergodic example", c6_ergces),
        ("7 block example growth", c7_tz_block),
        ("8 sequence lemma oracle", c8_lemma21),
        ("9 power-sum bound", c9_claim2_sum),
        ("10 structural properties", c10_structural),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let t = Instant::now();
        let (pass, detail) = match std::panic::catch_unwind(check) {
            Ok(Ok(r)) => r,
            Ok(Err(e)) => (false, format!("error: {e}")),
            Err(_) => (false, "panicked".to_string()),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "{} criterion {name}: {detail} [{:.1}s]",
            if pass { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64()
        );
    }
    println!(
        "{} of 10 criteria passed in {:.1}s",
        10 - failed,
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
