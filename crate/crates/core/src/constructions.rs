//! Builders for the concrete operators studied by the lab.
//!
//! Infinite-dimensional objects are truncated; each [`Construction`] carries
//! the range of power indices on which its finite model is trustworthy.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::linalg::{Matrix, C64};
use crate::operator::{OperatorSpec, ShiftDirection, WeightSequence};

/// Open-interval parameters must stay this far from the endpoints.
pub const PARAM_MARGIN: f64 = 1e-6;

fn strictly_inside(x: f64, lo: f64, hi: f64) -> bool {
    x.is_finite() && x >= lo + PARAM_MARGIN && x <= hi - PARAM_MARGIN
}

#[derive(Debug, Clone, PartialEq)]
pub struct Construction {
    pub name: &'static str,
    pub op: OperatorSpec,
    /// Largest power index `k` for which statements about `T^k` carry over
    /// from the untruncated operator.
    pub valid_k_max: Option<usize>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TnParams {
    pub n: usize,
    pub eta: f64,
}

impl TnParams {
    pub fn new(n: usize, eta: f64) -> Result<Self> {
        let p = Self { n, eta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(LabError::invalid("N must be positive"));
        }
        if !strictly_inside(self.eta, 0.0, 0.5) {
            return Err(LabError::invalid(format!(
                "eta = {} must lie in (0, 1/2)",
                self.eta
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectSumParams {
    pub epsilon: f64,
    pub eta: f64,
    pub n_max: usize,
}

impl DirectSumParams {
    pub fn new(epsilon: f64, eta: f64, n_max: usize) -> Result<Self> {
        let p = Self {
            epsilon,
            eta,
            n_max,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !strictly_inside(self.epsilon, 0.0, 1.0) {
            return Err(LabError::invalid(format!(
                "epsilon = {} must lie in (0, 1)",
                self.epsilon
            )));
        }
        let lo = (1.0 - self.epsilon) / 2.0;
        if !strictly_inside(self.eta, lo, 0.5) {
            return Err(LabError::invalid(format!(
                "eta = {} must lie in ({lo}, 1/2)",
                self.eta
            )));
        }
        if self.n_max < 2 {
            return Err(LabError::invalid("N_max must be at least 2"));
        }
        Ok(())
    }
}

/// Basis `e_0..e_J` with `ε_j = 2^{-j}`, `c_j = 1 - ε_j²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErgcesParams {
    pub j: usize,
}

impl ErgcesParams {
    pub fn new(j: usize) -> Result<Self> {
        // beyond 1022 the epsilons stop being normal doubles
        if !(2..=1022).contains(&j) {
            return Err(LabError::invalid(format!("J = {j} must lie in [2, 1022]")));
        }
        Ok(Self { j })
    }

    pub fn epsilon(j: usize) -> f64 {
        0.5f64.powi(j as i32)
    }

    pub fn c(j: usize) -> f64 {
        let e = Self::epsilon(j);
        1.0 - e * e
    }
}

/// `w_j = j^η` for `j ≤ N`, `w_j = N^{2η} / (2N - j + 1)^η` for `j > N`.
pub fn tn_weights(p: TnParams) -> Result<WeightSequence> {
    p.validate()?;
    let n = p.n;
    let nf = n as f64;
    let top = nf.powf(2.0 * p.eta);
    let values = (1..=2 * n)
        .map(|j| {
            if j <= n {
                (j as f64).powf(p.eta)
            } else {
                top / ((2 * n - j + 1) as f64).powf(p.eta)
            }
        })
        .collect();
    WeightSequence::new(values)?.with_provenance(p.eta, n)
}

/// Forward weighted shift on `2N` coordinates climbing from `1` to
/// `N^{2η}` with largest single step `2^η`.
pub fn build_tn(p: TnParams) -> Result<Construction> {
    let weights = tn_weights(p)?;
    Ok(Construction {
        name: "tn",
        op: OperatorSpec::shift_from_weights(ShiftDirection::Forward, weights),
        valid_k_max: None,
        notes: vec![format!("finite model, exact (N={}, eta={})", p.n, p.eta)],
    })
}

/// Direct sum of `T_1, ..., T_{N_max}`.
pub fn build_shields_counterexample(p: DirectSumParams) -> Result<Construction> {
    p.validate()?;
    let summands = (1..=p.n_max)
        .map(|n| build_tn(TnParams { n, eta: p.eta }).map(|c| c.op))
        .collect::<Result<Vec<_>>>()?;
    let k_max = 2 * p.n_max - 2;
    Ok(Construction {
        name: "shields",
        op: OperatorSpec::direct_sum(summands)?,
        valid_k_max: Some(k_max),
        notes: vec![format!(
            "truncated at N_max={}; lower bound (1/3)(k+1)^(1-eps) certified for k <= {k_max}",
            p.n_max
        )],
    })
}

/// Truncated shift with weights `w_j = j^α`, so `r_j = ((j+1)/j)^α`.
pub fn build_bermbmp_shift(alpha: f64, direction: ShiftDirection, d: usize) -> Result<Construction> {
    if !strictly_inside(alpha, 0.0, 0.5) {
        return Err(LabError::invalid(format!("alpha = {alpha} must lie in (0, 1/2)")));
    }
    if d < 2 {
        return Err(LabError::invalid("dimension must be at least 2"));
    }
    let weights = WeightSequence::new((1..=d).map(|j| (j as f64).powf(alpha)).collect())?;
    Ok(Construction {
        name: "bermbmp",
        op: OperatorSpec::shift_from_weights(direction, weights),
        valid_k_max: Some(d - 1),
        notes: vec![format!("truncated to {d} coordinates")],
    })
}

pub fn ergces_matrix(p: ErgcesParams) -> Matrix {
    let d = p.j + 1;
    let mut m = Matrix::zeros(d, d);
    m[(0, 0)] = C64::new(-1.0, 0.0);
    for j in 1..d {
        m[(0, j)] = C64::new(-ErgcesParams::epsilon(j), 0.0);
        m[(j, j)] = C64::new(-ErgcesParams::c(j), 0.0);
    }
    m
}

/// `-(I + ε-row)` with diagonal `c_j`: Cesàro bounded, mean ergodic, and
/// `-1` is an eigenvalue while `T + I` has dense range.
pub fn build_ergces(p: ErgcesParams) -> Result<Construction> {
    let p = ErgcesParams::new(p.j)?;
    Ok(Construction {
        name: "ergces",
        op: OperatorSpec::dense(ergces_matrix(p))?,
        valid_k_max: None,
        notes: vec![format!(
            "truncated to e_0..e_{}; first-row tail beyond J carries mass 2^-{}",
            p.j, p.j
        )],
    })
}

/// `T^n` from its closed form: diagonal `(-c_j)^n` and first row
/// `(-1)^n ε_j (1 - c_j^n) / (1 - c_j)`.
pub fn ergces_power_closed_form(p: ErgcesParams, n: usize) -> Result<Matrix> {
    let p = ErgcesParams::new(p.j)?;
    if n == 0 {
        return Err(LabError::invalid("power index must be at least 1"));
    }
    let d = p.j + 1;
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    let mut m = Matrix::zeros(d, d);
    m[(0, 0)] = C64::new(sign, 0.0);
    for j in 1..d {
        let c = ErgcesParams::c(j);
        m[(j, j)] = C64::new((-c).powi(n as i32), 0.0);
        // 1 - c is exact; expm1/ln_1p keep the geometric sum accurate
        // even when c_j is within a few ulps of 1
        let q = 1.0 - c;
        let geometric = -((n as f64) * (-q).ln_1p()).exp_m1() / q;
        m[(0, j)] = C64::new(sign * ErgcesParams::epsilon(j) * geometric, 0.0);
    }
    Ok(m)
}

/// `(B, B - I; 0, B)` with `B` the `d`-dimensional backward shift.
pub fn tz_block_matrix(d: usize) -> Matrix {
    let mut m = Matrix::zeros(2 * d, 2 * d);
    let one = C64::new(1.0, 0.0);
    for k in 0..d - 1 {
        m[(k, k + 1)] = one;
        m[(k, d + k + 1)] = one;
        m[(d + k, d + k + 1)] = one;
    }
    for k in 0..d {
        m[(k, d + k)] -= one;
    }
    m
}

pub fn build_tz_block(d: usize) -> Result<Construction> {
    if d < 2 {
        return Err(LabError::invalid("block dimension must be at least 2"));
    }
    Ok(Construction {
        name: "tzblock",
        op: OperatorSpec::dense(tz_block_matrix(d))?,
        valid_k_max: Some(d / 16),
        notes: vec![format!(
            "truncated shift blocks of size {d}; power-norm growth trusted only for n << {d}"
        )],
    })
}

/// Desk-scale instance of every catalog operator.
pub fn catalog_defaults() -> Vec<Construction> {
    let ok = "catalog defaults are valid";
    vec![
        build_tn(TnParams { n: 8, eta: 0.3 }).expect(ok),
        build_tn(TnParams { n: 16, eta: 0.45 }).expect(ok),
        build_shields_counterexample(DirectSumParams {
            epsilon: 0.15,
            eta: 0.45,
            n_max: 8,
        })
        .expect(ok),
        build_bermbmp_shift(0.45, ShiftDirection::Forward, 64).expect(ok),
        build_bermbmp_shift(0.3, ShiftDirection::Backward, 32).expect(ok),
        build_ergces(ErgcesParams { j: 20 }).expect(ok),
        build_tz_block(16).expect(ok),
    ]
}
