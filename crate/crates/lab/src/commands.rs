//! Subcommand bodies. Each returns its checks and tables; [`execute`]
//! wraps them into a report and writes the files.

use std::path::PathBuf;

use kreisslab_core::cesaro::{cesaro_identity_residuals, rotated_mean_norm_profile, MeanOrder};
use kreisslab_core::constructions::Construction;
use kreisslab_core::kreiss::{
    hilbert_claim_sweep, kb2_constant, kreiss_constant, strong_kreiss_constant, uniform_kreiss_constant, AnnulusGrid,
    ClaimId, KreissReport,
};
use kreisslab_core::norm::{power_norms, spectral_norm};
use serde_json::json;

use crate::analysis::{growth_fit, GrowthWindow, DEFAULT_WINDOW_START};
use crate::config::{OperatorConfig, RunConfig};
use crate::error::{usage, Result};
use crate::report::{emit_report, Check, Relation, Report, Table};
use crate::reproduce::{method_name, probe_vectors, reproduce, Run, TheoremId};

pub const COMMANDS: [&str; 7] = ["construct", "powers", "cesaro", "kreiss", "claims", "growth", "reproduce"];

/// Orbit vectors per `claims` run.
pub const CLAIM_VECTORS: usize = 64;

/// Runs `cfg.command` and returns the assembled report without writing it.
pub fn run(cfg: &RunConfig) -> Result<(Report, Vec<Table>)> {
    let Run { checks, tables } = match cfg.command.as_str() {
        "reproduce" => {
            let id: TheoremId = cfg
                .theorem
                .as_deref()
                .ok_or_else(|| usage("reproduce needs a result id"))?
                .parse()?;
            reproduce(id, cfg.seed)?
        }
        cmd => {
            let op = operator(cfg)?;
            match cmd {
                "construct" => construct(&op)?,
                "powers" => powers(cfg, &op)?,
                "cesaro" => cesaro(cfg, &op)?,
                "kreiss" => kreiss(cfg, &op)?,
                "claims" => claims(cfg, &op)?,
                "growth" => growth(cfg, &op)?,
                other => return Err(usage(format!("unknown command '{other}'"))),
            }
        }
    };
    Ok((Report::new(cfg.clone(), checks), tables))
}

/// [`run`], then write the report files under `cfg.out`.
pub fn execute(cfg: &RunConfig) -> Result<(Report, Vec<PathBuf>)> {
    let (report, tables) = run(cfg)?;
    let files = emit_report(&report, &tables, &cfg.out, cfg.format)?;
    Ok((report, files))
}

fn operator(cfg: &RunConfig) -> Result<Construction> {
    let op: OperatorConfig = cfg.operator.ok_or_else(|| usage(format!("{} needs --operator", cfg.command)))?;
    op.build()
}

fn construct(c: &Construction) -> Result<Run> {
    let m = c.op.materialize()?;
    let mut entries = Table::new("entries", &["row", "col", "re", "im"]);
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            let z = m[(i, j)];
            if z.re != 0.0 || z.im != 0.0 {
                entries.push(vec![i.into(), j.into(), z.re.into(), z.im.into()]);
            }
        }
    }
    let norm = spectral_norm(&c.op, 1e-12)?.value;
    let check = Check::at_most("construct.norm", "||T|| <= ||T||_F", norm, m.frobenius(), 1e-12)
        .with_params(json!({"operator": c.name, "dim": c.op.dim()}))
        .with_details(json!({"norm": norm, "valid_k_max": c.valid_k_max, "notes": c.notes}));
    Ok(Run {
        checks: vec![check],
        tables: vec![entries],
    })
}

fn powers(cfg: &RunConfig, c: &Construction) -> Result<Run> {
    let series = power_norms(&c.op, cfg.grid.k_max, cfg.tolerances.norm)?;
    let mut table = Table::new("norms", &["k", "norm", "method", "iterations", "residual"]);
    for p in &series.points {
        let e = &p.estimate;
        table.push(vec![
            p.k.into(),
            e.value.into(),
            method_name(e.method).into(),
            e.iterations.into(),
            e.residual.into(),
        ]);
    }
    let failed: Vec<usize> = series.failures.iter().map(|f| f.0).collect();
    let check = Check::holds("powers.converged", "power iteration converged for every k", failed.is_empty())
        .with_params(json!({"operator": c.name, "k_max": cfg.grid.k_max}))
        .with_details(json!({"unconverged_k": failed}))
        .informational();
    Ok(Run {
        checks: vec![check],
        tables: vec![table],
    })
}

fn cesaro(cfg: &RunConfig, c: &Construction) -> Result<Run> {
    let profile = rotated_mean_norm_profile(&c.op, cfg.grid.n_max, cfg.grid.angles, MeanOrder::First)?;
    let mut table = Table::new("means", &["n", "norm_M1", "norm_M2", "sup_lambda"]);
    for p in &profile.points {
        table.push(vec![p.n.into(), p.norm_m1.into(), p.norm_m2.into(), p.sup_lambda.into()]);
    }
    let n = cfg.grid.n_max.clamp(1, 64);
    let residuals = cesaro_identity_residuals(&c.op, n)?;
    let mut checks = vec![Check::sweep(
        "means.identities",
        "||T^n - (n+1)M_n + n M_(n-1)|| and ||(n+2)/(n+1) M_(n+1) - M_n - T^(n+1)/(n+1)|| <= 1e-10",
        Relation::AtMost,
        0.0,
        residuals
            .iter()
            .enumerate()
            .map(|(i, &r)| (json!({"n": i + 1}), r, 1e-10)),
    )
    .with_params(json!({"operator": c.name}))];
    checks.push(
        Check::holds("means.sup", "sup_{n, angle} ||M_n(lambda T)||", true)
            .with_params(json!({"operator": c.name, "n_max": cfg.grid.n_max, "angles": cfg.grid.angles}))
            .with_details(json!({"sup": profile.sup(), "rotation_shortcut": profile.rotation_shortcut}))
            .informational(),
    );
    Ok(Run {
        checks,
        tables: vec![table],
    })
}

fn kreiss(cfg: &RunConfig, c: &Construction) -> Result<Run> {
    let grid = AnnulusGrid::new(cfg.grid.radii.clone(), cfg.grid.angles)?;
    let resolvent = kreiss_constant(&c.op, &grid)?;
    let strong = strong_kreiss_constant(&c.op, &grid, cfg.grid.k_max)?;
    let ukb = uniform_kreiss_constant(&c.op, cfg.grid.n_max, cfg.grid.angles)?;
    let kb2 = kb2_constant(&c.op, cfg.grid.n_max, cfg.grid.angles)?;

    let mut table = Table::new("kreiss", &["constant", "value", "argmax_re", "argmax_im"]);
    let row = |t: &mut Table, name: &str, v: Option<f64>, r: &KreissReport| {
        let (re, im) = r.argmax.unwrap_or((f64::NAN, f64::NAN));
        t.push(vec![name.into(), v.unwrap_or(f64::NAN).into(), re.into(), im.into()]);
    };
    row(&mut table, "kreiss_C", resolvent.kreiss_c, &resolvent);
    row(&mut table, "strong_C", strong.strong_c, &strong);
    row(&mut table, "ukb_C", ukb.ukb_c, &ukb);
    row(&mut table, "kb2_C", kb2.kb2_c, &kb2);
    row(&mut table, "kb2_normalized_C", kb2.kb2_normalized_c, &kb2);

    let params = json!({"operator": c.name});
    let checks = vec![
        Check::at_least(
            "kreiss.strong_dominates",
            "sup_k (|l|-1)^k ||R(l)^k|| >= (|l|-1) ||R(l)||",
            strong.strong_c.unwrap(),
            resolvent.kreiss_c.unwrap(),
            0.0,
        )
        .with_params(params.clone()),
        Check::holds("kreiss.constants", "resolvent, strong, UKB and KB2 constants", true)
            .with_params(params)
            .with_details(json!({"kreiss": resolvent, "strong": strong, "ukb": ukb, "kb2": kb2}))
            .informational(),
    ];
    Ok(Run {
        checks,
        tables: vec![table],
    })
}

fn claims(cfg: &RunConfig, c: &Construction) -> Result<Run> {
    let kb2 = kb2_constant(&c.op, cfg.grid.n_max, cfg.grid.angles)?;
    let constant = kb2.kb2_normalized_c.unwrap();
    let vectors = probe_vectors(c.op.dim(), CLAIM_VECTORS, cfg.seed);
    let results = hilbert_claim_sweep(&c.op, constant, &vectors, cfg.grid.k_max)?;

    let mut table = Table::new("claims", &["claim", "seed", "N", "M", "M1", "M2", "lhs", "bound", "margin", "status"]);
    for r in &results {
        let opt = |v: Option<usize>| v.map_or(crate::report::Cell::Text(String::new()), Into::into);
        table.push(vec![
            r.claim.as_str().into(),
            r.params.seed.unwrap_or(cfg.seed).into(),
            opt(r.params.n),
            opt(r.params.m),
            opt(r.params.m1),
            opt(r.params.m2),
            r.lhs.into(),
            r.bound.into(),
            r.margin.into(),
            serde_json::to_value(r.status)?.as_str().unwrap_or_default().into(),
        ]);
    }
    let mut checks = Vec::new();
    for id in [ClaimId::H1, ClaimId::H2, ClaimId::H3, ClaimId::H4, ClaimId::HFinal] {
        let subset: Vec<_> = results.iter().filter(|r| r.claim == id).copied().collect();
        checks.push(
            Check::from_claims(&format!("claims.{}", id.as_str()), "orbit claim under C = kb2-normalized constant", &subset)
                .with_params(json!({"operator": c.name, "C": constant, "N_max": cfg.grid.k_max})),
        );
    }
    checks.push(
        Check::holds("claims.constant", "kb2-normalized C", true)
            .with_details(serde_json::to_value(&kb2)?)
            .informational(),
    );
    Ok(Run {
        checks,
        tables: vec![table],
    })
}

fn growth(cfg: &RunConfig, c: &Construction) -> Result<Run> {
    // truncations are nilpotent, so powers past dim - 1 may vanish
    let k_max = c
        .valid_k_max
        .map_or(cfg.grid.k_max, |v| v.min(cfg.grid.k_max))
        .min(c.op.dim() - 1);
    let series = power_norms(&c.op, k_max, cfg.tolerances.norm)?;
    let epsilon = match cfg.operator {
        Some(OperatorConfig::Shields { epsilon, .. }) => Some(epsilon),
        _ => None,
    };
    let report = growth_fit(
        &series,
        GrowthWindow {
            k_min: DEFAULT_WINDOW_START.min(k_max),
            k_max,
        },
        epsilon,
    )?;
    let mut table = Table::new("growth", &["k", "norm", "lower_bound", "pass"]);
    for p in &report.lower_bound {
        table.push(vec![p.k.into(), p.norm.into(), p.lower_bound.into(), p.pass.into()]);
    }
    if epsilon.is_none() {
        for &(k, v) in &report.values {
            table.push(vec![k.into(), v.into(), f64::NAN.into(), true.into()]);
        }
    }
    let mut checks = Vec::new();
    if epsilon.is_some() {
        checks.push(Check::sweep(
            "growth.lower_bound",
            "||T^k|| >= (1/3)(k+1)^(1-eps)",
            Relation::AtLeast,
            0.0,
            report.lower_bound.iter().map(|p| (json!({"k": p.k}), p.norm, p.lower_bound)),
        ));
    }
    checks.push(
        Check::holds("growth.fit", "least squares slope of log ||T^k|| on log k", true)
            .with_params(json!({"operator": c.name}))
            .with_details(serde_json::to_value(&report)?)
            .informational(),
    );
    Ok(Run {
        checks,
        tables: vec![table],
    })
}
