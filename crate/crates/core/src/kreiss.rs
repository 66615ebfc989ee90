//! Grid estimates of the Kreiss-type constants and checkers for the
//! finite inequalities that bound orbits of Kreiss bounded operators.
//!
//! Every constant here is a supremum over a finite grid, so it is a lower
//! estimate of the true constant. Grids are reported with each result so a
//! run can be reproduced exactly.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cesaro::{angle_grid, rotated_mean_norm_profile_with, MeanOrder, ProfileOptions};
use crate::error::{LabError, Result};
use crate::linalg::{Vector, C64};
use crate::norm::{spectral_norm_map, LinearMap, NormOptions};
use crate::operator::OperatorSpec;
use crate::resolvent::{Resolvent, ScaledResolventPower};

/// Dense eigenvalue checks of the spectral-radius precondition run only
/// below this dimension.
pub const EIGEN_CHECK_CAP: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnulusGrid {
    pub radii: Vec<f64>,
    pub angles: usize,
}

impl AnnulusGrid {
    pub fn new(radii: Vec<f64>, angles: usize) -> Result<Self> {
        if radii.is_empty() || angles == 0 {
            return Err(LabError::invalid("grid needs at least one radius and one angle"));
        }
        if let Some(r) = radii.iter().find(|r| !(r.is_finite() && **r > 1.0 + 1e-9)) {
            return Err(LabError::invalid(format!("radius {r} must exceed 1 + 1e-9")));
        }
        Ok(Self { radii, angles })
    }

    /// Radii `1 + 2^{-m}`, `m = 1..=levels`.
    pub fn geometric(levels: u32, angles: usize) -> Result<Self> {
        Self::new((1..=levels).map(|m| 1.0 + 0.5f64.powi(m as i32)).collect(), angles)
    }

    pub fn points(&self) -> Vec<C64> {
        let unit = angle_grid(self.angles);
        self.radii
            .iter()
            .flat_map(|&r| unit.iter().map(move |u| u * r))
            .collect()
    }
}

impl Default for AnnulusGrid {
    fn default() -> Self {
        Self::geometric(12, 256).expect("default grid is valid")
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct KreissReport {
    #[serde(rename = "kreiss_C")]
    pub kreiss_c: Option<f64>,
    #[serde(rename = "ukb_C")]
    pub ukb_c: Option<f64>,
    #[serde(rename = "kb2_C")]
    pub kb2_c: Option<f64>,
    /// `sup_N N^{-2} ||Σ_{j<N} (N-j) (λT)^j||`
    #[serde(rename = "kb2_normalized_C")]
    pub kb2_normalized_c: Option<f64>,
    #[serde(rename = "strong_C")]
    pub strong_c: Option<f64>,
    pub grid: Option<AnnulusGrid>,
    pub n_max: Option<usize>,
    pub angles: Option<usize>,
    pub k_max: Option<usize>,
    /// `λ` at which the resolvent supremum was attained, as `(re, im)`.
    pub argmax: Option<(f64, f64)>,
    pub rotation_shortcut: bool,
    pub warnings: Vec<String>,
}

/// Spectral radius at most one, from structure where possible.
pub fn certify_spectral_radius(op: &OperatorSpec) -> Result<Option<String>> {
    match op {
        OperatorSpec::WeightedShift(_) => Ok(None),
        OperatorSpec::DirectSum(s) => {
            let mut note = None;
            for x in s.summands() {
                if let Some(n) = certify_spectral_radius(x)? {
                    note = Some(n);
                }
            }
            Ok(note)
        }
        OperatorSpec::RotatedScale { inner, .. } => certify_spectral_radius(inner),
        OperatorSpec::Dense(d) => {
            let m = d.matrix();
            if m.is_upper_triangular() || m.is_lower_triangular() {
                let rho = (0..m.rows()).map(|i| m[(i, i)].norm()).fold(0.0, f64::max);
                return check_rho(rho).map(|_| None);
            }
            if m.rows() >= EIGEN_CHECK_CAP {
                return Ok(Some(format!(
                    "spectral radius not checked (dimension {} >= {EIGEN_CHECK_CAP})",
                    m.rows()
                )));
            }
            check_rho(m.spectral_radius()).map(|_| None)
        }
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if rho > 1.0 + 1e-9 {
        return Err(LabError::invalid(format!(
            "spectral radius {rho} exceeds 1; Kreiss constants are infinite"
        )));
    }
    Ok(())
}

fn resolvent_opts() -> NormOptions {
    NormOptions::with_tol(1e-10)
}

/// `(|λ| - 1) ||(λI - T)^{-1}||`
fn scaled_resolvent_norm(op: &OperatorSpec, lambda: C64, opts: &NormOptions) -> Result<f64> {
    let r = Resolvent::new(op, lambda)?;
    Ok((lambda.norm() - 1.0) * spectral_norm_map(&r, opts)?.value)
}

struct GridSup {
    value: Option<f64>,
    argmax: Option<C64>,
    warnings: Vec<String>,
}

/// Supremum of `f` over grid points, skipping singular points with a
/// warning. Ties resolve to the first grid point.
fn grid_sup<F>(grid: &AnnulusGrid, f: F) -> Result<GridSup>
where
    F: Fn(C64) -> Result<f64> + Sync,
{
    let points = grid.points();
    let values: Vec<(C64, Result<f64>)> = points.par_iter().map(|&l| (l, f(l))).collect();
    let mut out = GridSup {
        value: None,
        argmax: None,
        warnings: Vec::new(),
    };
    for (lambda, v) in values {
        match v {
            Ok(v) => {
                if out.value.is_none_or(|best| v > best) {
                    out.value = Some(v);
                    out.argmax = Some(lambda);
                }
            }
            Err(LabError::Singular) => out
                .warnings
                .push(format!("singular at lambda = {lambda}, point skipped")),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

pub fn kreiss_constant(op: &OperatorSpec, grid: &AnnulusGrid) -> Result<KreissReport> {
    let note = certify_spectral_radius(op)?;
    let opts = resolvent_opts();
    let sup = grid_sup(grid, |l| scaled_resolvent_norm(op, l, &opts))?;
    let mut warnings: Vec<String> = note.into_iter().collect();
    warnings.extend(sup.warnings);
    Ok(KreissReport {
        kreiss_c: sup.value,
        grid: Some(grid.clone()),
        argmax: sup.argmax.map(|z| (z.re, z.im)),
        warnings,
        ..KreissReport::default()
    })
}

/// `sup_{k ≤ k_max} (|λ| - 1)^k ||(λI - T)^{-k}||` over the grid. The
/// `k = 1` term is computed exactly as in [`kreiss_constant`], so on equal
/// grids the strong estimate never falls below the resolvent one.
pub fn strong_kreiss_constant(op: &OperatorSpec, grid: &AnnulusGrid, k_max: usize) -> Result<KreissReport> {
    if k_max == 0 {
        return Err(LabError::invalid("k_max must be at least 1"));
    }
    let note = certify_spectral_radius(op)?;
    let opts = resolvent_opts();
    let sup = grid_sup(grid, |lambda| {
        let mut best = scaled_resolvent_norm(op, lambda, &opts)?;
        let r = Resolvent::new(op, lambda)?;
        for k in 2..=k_max {
            let map = ScaledResolventPower {
                resolvent: &r,
                scale: lambda.norm() - 1.0,
                exponent: k,
            };
            best = best.max(spectral_norm_map(&map, &opts)?.value);
        }
        Ok(best)
    })?;
    let mut warnings: Vec<String> = note.into_iter().collect();
    warnings.extend(sup.warnings);
    Ok(KreissReport {
        strong_c: sup.value,
        grid: Some(grid.clone()),
        k_max: Some(k_max),
        argmax: sup.argmax.map(|z| (z.re, z.im)),
        warnings,
        ..KreissReport::default()
    })
}

pub fn uniform_kreiss_constant(op: &OperatorSpec, n_max: usize, angles: usize) -> Result<KreissReport> {
    uniform_kreiss_constant_with(op, n_max, angles, &ProfileOptions::default())
}

pub fn uniform_kreiss_constant_with(
    op: &OperatorSpec,
    n_max: usize,
    angles: usize,
    opts: &ProfileOptions,
) -> Result<KreissReport> {
    let profile = rotated_mean_norm_profile_with(op, n_max, angles, MeanOrder::First, opts)?;
    Ok(KreissReport {
        ukb_c: Some(profile.sup()),
        n_max: Some(n_max),
        angles: Some(angles),
        rotation_shortcut: profile.rotation_shortcut,
        ..KreissReport::default()
    })
}

pub fn kb2_constant(op: &OperatorSpec, n_max: usize, angles: usize) -> Result<KreissReport> {
    kb2_constant_with(op, n_max, angles, &ProfileOptions::default())
}

/// Fills both `kb2_C = sup ||M_n^{(2)}(λT)||` and the normalization used by
/// the orbit claims, `C = sup_N N^{-2} ||Σ_{j<N} (N-j)(λT)^j||`; since
/// `Σ_{j<N} (N-j) T^j = N(N+1)/2 · M_{N-1}^{(2)}`, the latter is
/// `sup_N (N+1)/(2N) ||M_{N-1}^{(2)}(λT)||` for `N ≤ n_max + 1`.
pub fn kb2_constant_with(
    op: &OperatorSpec,
    n_max: usize,
    angles: usize,
    opts: &ProfileOptions,
) -> Result<KreissReport> {
    let profile = rotated_mean_norm_profile_with(op, n_max, angles, MeanOrder::Second, opts)?;
    let normalized = profile
        .points
        .iter()
        .map(|p| {
            let big_n = (p.n + 1) as f64;
            (big_n + 1.0) / (2.0 * big_n) * p.sup_lambda
        })
        .fold(0.0, f64::max);
    Ok(KreissReport {
        kb2_c: Some(profile.sup()),
        kb2_normalized_c: Some(normalized),
        n_max: Some(n_max),
        angles: Some(angles),
        rotation_shortcut: profile.rotation_shortcut,
        ..KreissReport::default()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ClaimId {
    /// `Σ_{j<N} ||T^j x||² ≤ 16 C² N²`
    H1,
    /// `Σ_{j<M} ||T^N x||² / ||T^{N-j} x||² ≤ 16 C² M²`
    H2,
    /// `Σ_{j<N} 1 / ||T^j x|| ≥ √N / (4C)`
    H3,
    /// `Σ_{M1 ≤ j < M2} ||T^{N-j} x||² / ||T^N x||² ≥ (M2-M1)² / (16 C² M2²)`
    H4,
    /// `||T^N x||² ≤ 2^16 C^6 N² / K` for `2^{K+1} < N ≤ 2^{K+2}`
    #[serde(rename = "H-FINAL")]
    HFinal,
    /// bilinear Cesàro sum against `(j'/j)^η` bounded by `c_1`
    #[serde(rename = "TN-C1")]
    TnC1,
    /// `Σ_{j≤M} j^{-2η} ≤ M^{1-2η} / (1-2η)`
    #[serde(rename = "TN-C2")]
    TnC2,
    /// `a_n ≤ 2e √(B n)`
    L21,
}

impl ClaimId {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::H1 => "H1",
            Self::H2 => "H2",
            Self::H3 => "H3",
            Self::H4 => "H4",
            Self::HFinal => "H-FINAL",
            Self::TnC1 => "TN-C1",
            Self::TnC2 => "TN-C2",
            Self::L21 => "L21",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClaimStatus {
    Pass,
    /// The hypothesis (`T^N x ≠ 0`) does not hold, so nothing is asserted.
    VacuousPass,
    Fail,
    /// The premise itself fails numerically; the conclusion is not judged.
    HypothesisFails,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ClaimParams {
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(rename = "M", skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(rename = "M1", skip_serializing_if = "Option::is_none")]
    pub m1: Option<usize>,
    #[serde(rename = "M2", skip_serializing_if = "Option::is_none")]
    pub m2: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Inequality {
    AtMost,
    AtLeast,
}

/// Relative slack under which a negative margin still passes.
pub const CLAIM_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClaimCheckResult {
    pub claim: ClaimId,
    pub params: ClaimParams,
    pub lhs: f64,
    pub bound: f64,
    /// Slack in the direction of the inequality: `bound - lhs` for upper
    /// bounds, `lhs - bound` for lower bounds.
    pub margin: f64,
    pub status: ClaimStatus,
    pub pass: bool,
}

impl ClaimCheckResult {
    pub fn evaluate(
        claim: ClaimId,
        params: ClaimParams,
        lhs: f64,
        bound: f64,
        kind: Inequality,
        slack: f64,
    ) -> Self {
        let margin = match kind {
            Inequality::AtMost => bound - lhs,
            Inequality::AtLeast => lhs - bound,
        };
        let pass = margin >= -slack * bound.abs();
        Self {
            claim,
            params,
            lhs,
            bound,
            margin,
            status: if pass {
                ClaimStatus::Pass
            } else {
                ClaimStatus::Fail
            },
            pass,
        }
    }

    fn vacuous(claim: ClaimId, params: ClaimParams) -> Self {
        Self {
            claim,
            params,
            lhs: 0.0,
            bound: 0.0,
            margin: 0.0,
            status: ClaimStatus::VacuousPass,
            pass: true,
        }
    }

    /// Margin relative to the bound, for picking the tightest instance.
    pub fn relative_margin(&self) -> f64 {
        if self.bound == 0.0 {
            self.margin
        } else {
            self.margin / self.bound.abs()
        }
    }
}

/// Below this `||T^N x||` counts as zero.
pub const VANISHING_ORBIT: f64 = 1e-300;

/// Orbit norms `||T^j x||`, `j = 0..=len`, of one unit vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Orbit {
    norms: Vec<f64>,
    seed: Option<u64>,
}

impl Orbit {
    pub fn new(op: &OperatorSpec, x: &Vector, len: usize) -> Result<Self> {
        if x.dim() != op.dim() {
            return Err(LabError::Dimension {
                expected: op.dim(),
                got: x.dim(),
            });
        }
        if (x.norm() - 1.0).abs() > 1e-12 {
            return Err(LabError::invalid("orbit start vector must have unit norm"));
        }
        let mut norms = Vec::with_capacity(len + 1);
        let mut y = x.clone();
        norms.push(y.norm());
        for _ in 0..len {
            y = LinearMap::apply(op, &y);
            norms.push(y.norm());
        }
        Ok(Self { norms, seed: None })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    fn at(&self, j: usize) -> Result<f64> {
        self.norms
            .get(j)
            .copied()
            .ok_or_else(|| LabError::invalid(format!("orbit computed only to {}", self.norms.len() - 1)))
    }

    fn vanishes_at(&self, n: usize) -> Result<bool> {
        Ok(self.at(n)? <= VANISHING_ORBIT)
    }

    fn params(&self) -> ClaimParams {
        ClaimParams {
            seed: self.seed,
            ..ClaimParams::default()
        }
    }

    pub fn claim1(&self, c: f64, n: usize) -> Result<ClaimCheckResult> {
        if n == 0 {
            return Err(LabError::invalid("N must be at least 1"));
        }
        self.at(n - 1)?;
        let lhs: f64 = self.norms[..n].iter().map(|v| v * v).sum();
        let nf = n as f64;
        Ok(ClaimCheckResult::evaluate(
            ClaimId::H1,
            ClaimParams {
                n: Some(n),
                ..self.params()
            },
            lhs,
            16.0 * c * c * nf * nf,
            Inequality::AtMost,
            CLAIM_SLACK,
        ))
    }

    pub fn claim2(&self, c: f64, n: usize, m: usize) -> Result<ClaimCheckResult> {
        if !(0 < m && m < n) {
            return Err(LabError::invalid(format!("need 0 < M < N, got M={m} N={n}")));
        }
        let params = ClaimParams {
            n: Some(n),
            m: Some(m),
            ..self.params()
        };
        if self.vanishes_at(n)? {
            return Ok(ClaimCheckResult::vacuous(ClaimId::H2, params));
        }
        let top = self.norms[n] * self.norms[n];
        let lhs: f64 = (0..m)
            .map(|j| {
                let v = self.norms[n - j];
                top / (v * v)
            })
            .sum();
        let mf = m as f64;
        Ok(ClaimCheckResult::evaluate(
            ClaimId::H2,
            params,
            lhs,
            16.0 * c * c * mf * mf,
            Inequality::AtMost,
            CLAIM_SLACK,
        ))
    }

    pub fn claim3(&self, c: f64, n: usize) -> Result<ClaimCheckResult> {
        if n == 0 {
            return Err(LabError::invalid("N must be at least 1"));
        }
        let params = ClaimParams {
            n: Some(n),
            ..self.params()
        };
        if self.vanishes_at(n)? {
            return Ok(ClaimCheckResult::vacuous(ClaimId::H3, params));
        }
        let lhs: f64 = self.norms[..n].iter().map(|v| 1.0 / v).sum();
        Ok(ClaimCheckResult::evaluate(
            ClaimId::H3,
            params,
            lhs,
            (n as f64).sqrt() / (4.0 * c),
            Inequality::AtLeast,
            CLAIM_SLACK,
        ))
    }

    pub fn claim4(&self, c: f64, n: usize, m1: usize, m2: usize) -> Result<ClaimCheckResult> {
        if !(0 < m1 && m1 < m2 && m2 < n) {
            return Err(LabError::invalid(format!(
                "need 0 < M1 < M2 < N, got M1={m1} M2={m2} N={n}"
            )));
        }
        let params = ClaimParams {
            n: Some(n),
            m1: Some(m1),
            m2: Some(m2),
            ..self.params()
        };
        if self.vanishes_at(n)? {
            return Ok(ClaimCheckResult::vacuous(ClaimId::H4, params));
        }
        let top = self.norms[n] * self.norms[n];
        let lhs: f64 = (m1..m2)
            .map(|j| {
                let v = self.norms[n - j];
                v * v / top
            })
            .sum();
        let gap = (m2 - m1) as f64;
        let m2f = m2 as f64;
        Ok(ClaimCheckResult::evaluate(
            ClaimId::H4,
            params,
            lhs,
            gap * gap / (16.0 * c * c * m2f * m2f),
            Inequality::AtLeast,
            CLAIM_SLACK,
        ))
    }

    /// The chained estimate `||T^N x||² ≤ 2^16 C^6 N² / K` with
    /// `2^{K+1} < N ≤ 2^{K+2}`, `K ≥ 1`.
    pub fn final_bound(&self, c: f64, n: usize) -> Result<ClaimCheckResult> {
        if n <= 4 {
            return Err(LabError::invalid("the chained estimate needs N > 4"));
        }
        let k = (usize::BITS - (n - 1).leading_zeros()) as usize - 2;
        let params = ClaimParams {
            n: Some(n),
            m: Some(k),
            ..self.params()
        };
        if self.vanishes_at(n)? {
            return Ok(ClaimCheckResult::vacuous(ClaimId::HFinal, params));
        }
        let v = self.norms[n];
        let nf = n as f64;
        Ok(ClaimCheckResult::evaluate(
            ClaimId::HFinal,
            params,
            v * v,
            65536.0 * c.powi(6) * nf * nf / k as f64,
            Inequality::AtMost,
            CLAIM_SLACK,
        ))
    }
}

fn orbit_for(op: &OperatorSpec, x: &Vector, len: usize) -> Result<Orbit> {
    Orbit::new(op, x, len)
}

pub fn hilbert_claim1(op: &OperatorSpec, c: f64, x: &Vector, n: usize) -> Result<ClaimCheckResult> {
    orbit_for(op, x, n)?.claim1(c, n)
}

pub fn hilbert_claim2(op: &OperatorSpec, c: f64, x: &Vector, n: usize, m: usize) -> Result<ClaimCheckResult> {
    orbit_for(op, x, n)?.claim2(c, n, m)
}

pub fn hilbert_claim3(op: &OperatorSpec, c: f64, x: &Vector, n: usize) -> Result<ClaimCheckResult> {
    orbit_for(op, x, n)?.claim3(c, n)
}

pub fn hilbert_claim4(
    op: &OperatorSpec,
    c: f64,
    x: &Vector,
    n: usize,
    m1: usize,
    m2: usize,
) -> Result<ClaimCheckResult> {
    orbit_for(op, x, n)?.claim4(c, n, m1, m2)
}

/// All four orbit claims plus the chained estimate on every admissible
/// dyadic instance with `N ≤ n_max`: `M ∈ {1, 2, 4, ...}` below `N`, and
/// dyadic pairs `M1 < M2 < N`.
pub fn hilbert_claim_sweep(
    op: &OperatorSpec,
    c: f64,
    vectors: &[(u64, Vector)],
    n_max: usize,
) -> Result<Vec<ClaimCheckResult>> {
    let per_vector: Vec<Vec<ClaimCheckResult>> = vectors
        .par_iter()
        .map(|(seed, x)| {
            let orbit = Orbit::new(op, x, n_max)?.with_seed(*seed);
            let mut out = Vec::new();
            for n in 1..=n_max {
                out.push(orbit.claim1(c, n)?);
                out.push(orbit.claim3(c, n)?);
                let dyadic: Vec<usize> = (0..).map(|e| 1usize << e).take_while(|&m| m < n).collect();
                for &m in &dyadic {
                    out.push(orbit.claim2(c, n, m)?);
                }
                for (i, &m1) in dyadic.iter().enumerate() {
                    for &m2 in &dyadic[i + 1..] {
                        out.push(orbit.claim4(c, n, m1, m2)?);
                    }
                }
                if n > 4 {
                    out.push(orbit.final_bound(c, n)?);
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(per_vector.into_iter().flatten().collect())
}

/// `(n+1)^{-1} Σ_{j ≤ j' ≤ j+n} γ_j δ_{j'} (j'/j)^η ≤ c_1` for non-negative
/// unit vectors `γ, δ` indexed from `j = 1`. The left side is evaluated as
/// a plain double sum.
pub fn tn_claim1_bound(eta: f64, n: usize, gamma: &[f64], delta: &[f64], c1: f64) -> Result<ClaimCheckResult> {
    if gamma.len() != delta.len() {
        return Err(LabError::Dimension {
            expected: gamma.len(),
            got: delta.len(),
        });
    }
    if gamma.iter().chain(delta).any(|v| *v < 0.0) {
        return Err(LabError::invalid("coefficients must be non-negative"));
    }
    let d = gamma.len();
    let mut lhs = 0.0;
    for j in 1..=d {
        for jp in j..=(j + n).min(d) {
            lhs += gamma[j - 1] * delta[jp - 1] * (jp as f64 / j as f64).powf(eta);
        }
    }
    lhs /= (n + 1) as f64;
    Ok(ClaimCheckResult::evaluate(
        ClaimId::TnC1,
        ClaimParams {
            n: Some(n),
            eta: Some(eta),
            ..ClaimParams::default()
        },
        lhs,
        c1,
        Inequality::AtMost,
        CLAIM_SLACK,
    ))
}

/// Slack for the power-sum comparison.
pub const TN_CLAIM2_SLACK: f64 = 1e-12;

fn check_eta(eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta < 0.5) {
        return Err(LabError::invalid(format!("eta = {eta} must lie in (0, 1/2)")));
    }
    Ok(())
}

fn tn_claim2_result(eta: f64, m: usize, sum: f64) -> ClaimCheckResult {
    let e = 1.0 - 2.0 * eta;
    ClaimCheckResult::evaluate(
        ClaimId::TnC2,
        ClaimParams {
            m: Some(m),
            eta: Some(eta),
            ..ClaimParams::default()
        },
        sum,
        (m as f64).powf(e) / e,
        Inequality::AtMost,
        TN_CLAIM2_SLACK,
    )
}

/// Neumaier-compensated running sum.
#[derive(Default)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// `Σ_{j=1}^M j^{-2η} ≤ c_2 M^{1-2η}` with `c_2 = 1/(1-2η)`.
pub fn tn_claim2_bound(eta: f64, m: usize) -> Result<ClaimCheckResult> {
    check_eta(eta)?;
    if m == 0 {
        return Err(LabError::invalid("M must be at least 1"));
    }
    let mut s = CompensatedSum::default();
    for j in 1..=m {
        s.add((j as f64).powf(-2.0 * eta));
    }
    Ok(tn_claim2_result(eta, m, s.value()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimSweep {
    pub checked: usize,
    pub failures: usize,
    /// Instance with the smallest relative margin.
    pub tightest: ClaimCheckResult,
}

/// [`tn_claim2_bound`] for every `M = 1..=m_max` in one pass.
pub fn tn_claim2_sweep(eta: f64, m_max: usize) -> Result<ClaimSweep> {
    check_eta(eta)?;
    if m_max == 0 {
        return Err(LabError::invalid("M must be at least 1"));
    }
    let mut s = CompensatedSum::default();
    let mut failures = 0;
    let mut tightest: Option<ClaimCheckResult> = None;
    for m in 1..=m_max {
        s.add((m as f64).powf(-2.0 * eta));
        let r = tn_claim2_result(eta, m, s.value());
        if !r.pass {
            failures += 1;
        }
        if tightest.is_none_or(|t| r.relative_margin() < t.relative_margin()) {
            tightest = Some(r);
        }
    }
    Ok(ClaimSweep {
        checked: m_max,
        failures,
        tightest: tightest.unwrap(),
    })
}

/// `{1 - 2^{-m} : m = 1..=levels}`
pub fn lemma21_r_grid(levels: u32) -> Vec<f64> {
    (1..=levels).map(|m| 1.0 - 0.5f64.powi(m as i32)).collect()
}

/// Refining the grid may raise the supremum by at most this factor before
/// the hypothesis is declared to fail.
pub const LEMMA21_DIVERGENCE_RATIO: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma21Report {
    /// `sup_r (1-r)² Σ a_k² r^{2k}` over the coarse half of the grid.
    pub b_coarse: f64,
    /// Same over the full grid; the `B` used by the conclusion check.
    pub b_estimate: f64,
    /// Lower bound on the truncated tail term `(1-r)² Σ_{k>K} a_k² r^{2k}`
    /// implied by monotonicity, maximized over the grid.
    pub tail_floor: f64,
    pub hypothesis_holds: bool,
    /// Tightest instance of `a_n ≤ 2e √(B n)` over `n = 1..len`.
    pub conclusion: ClaimCheckResult,
    pub failures: usize,
}

fn lemma21_sup(a2: &[f64], r_grid: &[f64]) -> (f64, f64) {
    let k_last = a2.len() - 1;
    let mut b = 0.0_f64;
    let mut tail = 0.0_f64;
    for &r in r_grid {
        let r2 = r * r;
        let mut s = CompensatedSum::default();
        let mut rk = 1.0;
        for &v in a2 {
            s.add(v * rk);
            rk *= r2;
        }
        let w = (1.0 - r) * (1.0 - r);
        b = b.max(w * s.value());
        tail = tail.max(w * a2[k_last] * rk / (1.0 - r2));
    }
    (b, tail)
}

/// Estimates `B` in `Σ a_k² r^{2k} ≤ B / (1-r)²` over `r_grid` and checks
/// `a_n ≤ 2e √(B n)` for every `n ≥ 1` in range. The hypothesis is judged
/// to fail when the full grid's supremum exceeds the coarse half's by more
/// than [`LEMMA21_DIVERGENCE_RATIO`]; the conclusion is then not judged.
pub fn lemma21_bound(a: &[f64], r_grid: &[f64]) -> Result<Lemma21Report> {
    if a.len() < 2 {
        return Err(LabError::invalid("sequence needs at least two terms"));
    }
    if a.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(LabError::invalid("sequence must be finite and non-negative"));
    }
    if a.windows(2).any(|w| w[1] < w[0]) {
        return Err(LabError::invalid("sequence must be non-decreasing"));
    }
    if r_grid.len() < 2 || r_grid.iter().any(|r| !(*r > 0.0 && *r < 1.0)) {
        return Err(LabError::invalid("r grid needs at least two points in (0, 1)"));
    }
    let mut grid = r_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let a2: Vec<f64> = a.iter().map(|v| v * v).collect();
    let (b_coarse, _) = lemma21_sup(&a2, &grid[..grid.len().div_ceil(2)]);
    let (b, tail_floor) = lemma21_sup(&a2, &grid);
    let hypothesis_holds = b <= LEMMA21_DIVERGENCE_RATIO * b_coarse;

    let two_e = 2.0 * std::f64::consts::E;
    let mut failures = 0;
    let mut tightest: Option<ClaimCheckResult> = None;
    for (n, &an) in a.iter().enumerate().skip(1) {
        let r = ClaimCheckResult::evaluate(
            ClaimId::L21,
            ClaimParams {
                n: Some(n),
                ..ClaimParams::default()
            },
            an,
            two_e * (b * n as f64).sqrt(),
            Inequality::AtMost,
            CLAIM_SLACK,
        );
        if !r.pass {
            failures += 1;
        }
        if tightest.is_none_or(|t| r.relative_margin() < t.relative_margin()) {
            tightest = Some(r);
        }
    }
    let mut conclusion = tightest.unwrap();
    if !hypothesis_holds {
        conclusion.status = ClaimStatus::HypothesisFails;
        conclusion.pass = false;
        failures = 0;
    }
    Ok(Lemma21Report {
        b_coarse,
        b_estimate: b,
        tail_floor,
        hypothesis_holds,
        conclusion,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;

    #[test]
    fn grid_validation() {
        assert!(AnnulusGrid::new(vec![1.0], 4).is_err());
        assert!(AnnulusGrid::new(vec![1.5], 0).is_err());
        assert!(AnnulusGrid::new(vec![], 4).is_err());
        let g = AnnulusGrid::default();
        assert_eq!(g.radii.len(), 12);
        assert_eq!(g.radii[0], 1.5);
        assert_eq!(g.points().len(), 12 * 256);
    }

    #[test]
    fn zero_operator_kreiss_constant() {
        let g = AnnulusGrid::geometric(4, 8).unwrap();
        let r = kreiss_constant(&OperatorSpec::zero(3), &g).unwrap();
        // (|λ|-1)/|λ| is largest at the biggest radius
        assert!((r.kreiss_c.unwrap() - 0.5 / 1.5).abs() < 1e-12);
        let big = AnnulusGrid::new(vec![1.5, 100.0], 4).unwrap();
        let r = kreiss_constant(&OperatorSpec::zero(3), &big).unwrap();
        assert!((r.kreiss_c.unwrap() - 0.99).abs() < 1e-12);
    }

    #[test]
    fn identity_kreiss_constant_is_one() {
        let g = AnnulusGrid::geometric(6, 16).unwrap();
        let r = kreiss_constant(&OperatorSpec::identity(2), &g).unwrap();
        assert!((r.kreiss_c.unwrap() - 1.0).abs() < 1e-12);
        let (re, im) = r.argmax.unwrap();
        assert!(re > 1.0 && im == 0.0);
        let s = strong_kreiss_constant(&OperatorSpec::identity(2), &g, 6).unwrap();
        assert!((s.strong_c.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_operator_strong_constant_is_first_term() {
        let g = AnnulusGrid::geometric(3, 4).unwrap();
        let s = strong_kreiss_constant(&OperatorSpec::zero(2), &g, 5).unwrap();
        assert!((s.strong_c.unwrap() - 0.5 / 1.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_spectral_radius_above_one() {
        let op = OperatorSpec::dense(Matrix::from_real_rows(&[vec![1.5, 0.0], vec![1.0, 0.2]]).unwrap()).unwrap();
        let g = AnnulusGrid::geometric(2, 4).unwrap();
        assert!(kreiss_constant(&op, &g).is_err());
    }

    #[test]
    fn kb2_constants_of_zero_and_identity() {
        let r = kb2_constant(&OperatorSpec::zero(2), 16, 4).unwrap();
        assert!((r.kb2_normalized_c.unwrap() - 1.0).abs() < 1e-12);
        let r = kb2_constant(&OperatorSpec::identity(2), 16, 4).unwrap();
        // (N+1)/(2N) peaks at N = 1
        assert!((r.kb2_normalized_c.unwrap() - 1.0).abs() < 1e-12);
        assert!((r.kb2_c.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_orbit_claims() {
        let op = OperatorSpec::identity(3);
        let x = Vector::basis(3, 0);
        let r = hilbert_claim1(&op, 1.0, &x, 10).unwrap();
        assert_eq!((r.lhs, r.bound), (10.0, 1600.0));
        let r = hilbert_claim2(&op, 1.0, &x, 10, 4).unwrap();
        assert_eq!(r.lhs, 4.0);
        assert!(r.pass);
        let r = hilbert_claim3(&op, 1.0, &x, 9).unwrap();
        assert_eq!((r.lhs, r.bound), (9.0, 0.75));
        let r = hilbert_claim4(&op, 1.0, &x, 10, 2, 6).unwrap();
        assert!(r.pass && r.status == ClaimStatus::Pass);
    }

    #[test]
    fn zero_operator_claims() {
        let op = OperatorSpec::zero(3);
        let x = Vector::basis(3, 1);
        let r = hilbert_claim1(&op, 1.0, &x, 4).unwrap();
        assert_eq!((r.lhs, r.bound), (1.0, 256.0));
        let r = hilbert_claim2(&op, 1.0, &x, 4, 2).unwrap();
        assert_eq!(r.status, ClaimStatus::VacuousPass);
        let r = hilbert_claim3(&op, 1.0, &x, 4).unwrap();
        assert_eq!(r.status, ClaimStatus::VacuousPass);
    }

    #[test]
    fn claim_preconditions() {
        let op = OperatorSpec::identity(2);
        let x = Vector::basis(2, 0);
        assert!(hilbert_claim2(&op, 1.0, &x, 4, 4).is_err());
        assert!(hilbert_claim2(&op, 1.0, &x, 4, 0).is_err());
        assert!(hilbert_claim4(&op, 1.0, &x, 5, 3, 3).is_err());
        assert!(hilbert_claim1(&op, 1.0, &Vector::from_real(&[1.0, 1.0]), 3).is_err());
    }

    #[test]
    fn failing_inequality_is_reported() {
        // C far too small for the identity
        let r = hilbert_claim1(&OperatorSpec::identity(2), 0.01, &Vector::basis(2, 0), 10).unwrap();
        assert!(!r.pass);
        assert_eq!(r.status, ClaimStatus::Fail);
        assert!(r.margin < 0.0);
    }

    #[test]
    fn final_bound_dyadic_index() {
        let orbit = Orbit::new(&OperatorSpec::identity(1), &Vector::basis(1, 0), 17).unwrap();
        // 2^2 < 5 <= 2^3 gives K = 1; 2^3 < 9 <= 2^4 gives K = 2
        assert_eq!(orbit.final_bound(1.0, 5).unwrap().params.m, Some(1));
        assert_eq!(orbit.final_bound(1.0, 8).unwrap().params.m, Some(1));
        assert_eq!(orbit.final_bound(1.0, 9).unwrap().params.m, Some(2));
        assert_eq!(orbit.final_bound(1.0, 16).unwrap().params.m, Some(2));
        assert_eq!(orbit.final_bound(1.0, 17).unwrap().params.m, Some(3));
        assert!(orbit.final_bound(1.0, 4).is_err());
    }

    #[test]
    fn tn_claim2_small_cases() {
        let r = tn_claim2_bound(0.3, 1).unwrap();
        assert_eq!(r.lhs, 1.0);
        assert!((r.bound - 2.5).abs() < 1e-15);
        assert!(r.pass);
        assert!(tn_claim2_bound(0.5, 3).is_err());
        assert!(tn_claim2_bound(0.3, 0).is_err());
    }

    #[test]
    fn lemma21_constant_sequence() {
        let a = vec![1.0; 2000];
        let rep = lemma21_bound(&a, &lemma21_r_grid(6)).unwrap();
        // (1-r)²/(1-r²) = (1-r)/(1+r), largest at r = 1/2
        assert!((rep.b_estimate - 1.0 / 3.0).abs() < 1e-12);
        assert!(rep.hypothesis_holds);
        assert!(rep.conclusion.pass);
    }

    #[test]
    fn lemma21_rejects_bad_sequences() {
        assert!(lemma21_bound(&[1.0, 0.5, 2.0], &lemma21_r_grid(4)).is_err());
        assert!(lemma21_bound(&[-1.0, 0.5], &lemma21_r_grid(4)).is_err());
        assert!(lemma21_bound(&[0.0, 1.0], &[0.5, 1.0]).is_err());
    }
}
