//! Spectral norm estimation.
//!
//! The workhorse is power iteration on `A*A` from a seeded start vector,
//! stopped on the relative Rayleigh-quotient residual. Since the iterate is
//! always a unit vector, `||A v||` never exceeds the true norm, so even an
//! unconverged estimate is a valid lower bound.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::linalg::{Matrix, Vector, C64};
use crate::operator::OperatorSpec;

pub const DEFAULT_SEED: u64 = 0x5EED;
pub const DEFAULT_MAX_ITER: usize = 5000;
/// Below this dimension an unconverged iteration falls back to a full SVD.
pub const DENSE_CROSS_CHECK_CAP: usize = 512;

/// Anything that can apply itself and its adjoint to a vector.
pub trait LinearMap {
    fn dim(&self) -> usize;
    fn apply(&self, x: &Vector) -> Vector;
    fn apply_adjoint(&self, x: &Vector) -> Vector;

    fn to_matrix(&self) -> Matrix {
        let d = self.dim();
        let cols: Vec<Vector> = (0..d).map(|j| self.apply(&Vector::basis(d, j))).collect();
        Matrix::from_columns(&cols)
    }
}

impl LinearMap for OperatorSpec {
    fn dim(&self) -> usize {
        OperatorSpec::dim(self)
    }
    fn apply(&self, x: &Vector) -> Vector {
        self.apply_unchecked(x)
    }
    fn apply_adjoint(&self, x: &Vector) -> Vector {
        self.apply_adjoint_unchecked(x)
    }
}

impl LinearMap for Matrix {
    fn dim(&self) -> usize {
        self.rows()
    }
    fn apply(&self, x: &Vector) -> Vector {
        self.mul_vec(x)
    }
    fn apply_adjoint(&self, x: &Vector) -> Vector {
        self.adjoint().mul_vec(x)
    }
    fn to_matrix(&self) -> Matrix {
        self.clone()
    }
}

/// `A^k` applied by repetition, never formed.
pub struct Power<'a, M: LinearMap + ?Sized> {
    pub base: &'a M,
    pub exponent: usize,
}

impl<M: LinearMap + ?Sized> LinearMap for Power<'_, M> {
    fn dim(&self) -> usize {
        self.base.dim()
    }
    fn apply(&self, x: &Vector) -> Vector {
        let mut y = x.clone();
        for _ in 0..self.exponent {
            y = self.base.apply(&y);
        }
        y
    }
    fn apply_adjoint(&self, x: &Vector) -> Vector {
        let mut y = x.clone();
        for _ in 0..self.exponent {
            y = self.base.apply_adjoint(&y);
        }
        y
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormMethod {
    ClosedForm,
    PowerIteration,
    DenseSvdOracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub value: f64,
    pub method: NormMethod,
    pub residual: f64,
    pub iterations: usize,
}

impl NormEstimate {
    pub fn closed_form(value: f64) -> Self {
        Self {
            value,
            method: NormMethod::ClosedForm,
            residual: 0.0,
            iterations: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub dense_fallback_cap: usize,
}

impl Default for NormOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: DEFAULT_MAX_ITER,
            seed: DEFAULT_SEED,
            dense_fallback_cap: DENSE_CROSS_CHECK_CAP,
        }
    }
}

impl NormOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

pub fn spectral_norm(op: &OperatorSpec, tol: f64) -> Result<NormEstimate> {
    spectral_norm_map(op, &NormOptions::with_tol(tol))
}

/// Largest singular value of `map`.
///
/// Falls back to a dense SVD when iteration stalls and the dimension is at
/// most `dense_fallback_cap`; otherwise returns `Convergence` with the best
/// (lower-bound) estimate.
pub fn spectral_norm_map<M: LinearMap + ?Sized>(map: &M, opts: &NormOptions) -> Result<NormEstimate> {
    match power_iteration(map, opts) {
        Err(LabError::Convergence { .. }) if map.dim() <= opts.dense_fallback_cap => {
            Ok(dense_svd_norm(map))
        }
        other => other,
    }
}

pub fn dense_svd_norm<M: LinearMap + ?Sized>(map: &M) -> NormEstimate {
    NormEstimate {
        value: map.to_matrix().svd_norm(),
        method: NormMethod::DenseSvdOracle,
        residual: 0.0,
        iterations: 0,
    }
}

pub fn power_iteration<M: LinearMap + ?Sized>(map: &M, opts: &NormOptions) -> Result<NormEstimate> {
    if map.dim() == 0 {
        return Ok(NormEstimate::closed_form(0.0));
    }
    let start = Vector::seeded_unit_vectors(map.dim(), 1, opts.seed).pop().unwrap();
    power_iteration_from(map, opts, start).map(|(e, _)| e)
}

/// Power iteration from a given unit start vector; also returns the final
/// iterate, so a sequence of nearby maps can be warm-started.
pub fn power_iteration_from<M: LinearMap + ?Sized>(
    map: &M,
    opts: &NormOptions,
    start: Vector,
) -> Result<(NormEstimate, Vector)> {
    if !(opts.tol > 0.0) {
        return Err(LabError::invalid(format!("tolerance {} must be positive", opts.tol)));
    }
    if start.dim() != map.dim() {
        return Err(LabError::Dimension {
            expected: map.dim(),
            got: start.dim(),
        });
    }
    let mut v = start;
    let mut best = 0.0_f64;
    let mut residual = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let w = map.apply(&v);
        let sigma = w.norm();
        best = best.max(sigma);
        if sigma == 0.0 {
            // a generic start vector only lands in the kernel of the zero map
            return Ok((
                NormEstimate {
                    value: 0.0,
                    method: NormMethod::PowerIteration,
                    residual: 0.0,
                    iterations: it,
                },
                v,
            ));
        }
        let z = map.apply_adjoint(&w);
        let mu = sigma * sigma;
        let mut r = z.clone();
        r.axpy(C64::new(-mu, 0.0), &v);
        residual = r.norm() / mu;
        if residual <= opts.tol {
            return Ok((
                NormEstimate {
                    value: sigma,
                    method: NormMethod::PowerIteration,
                    residual,
                    iterations: it,
                },
                v,
            ));
        }
        let zn = z.norm();
        v = z;
        v.scale_mut(C64::new(1.0 / zn, 0.0));
    }
    Err(LabError::Convergence {
        best,
        residual,
        iterations: opts.max_iter,
    })
}

/// Norm of `op^k` from structure alone, when the structure allows it.
pub fn closed_form_power_norm(op: &OperatorSpec, k: usize) -> Option<f64> {
    match op {
        OperatorSpec::WeightedShift(s) => Some(s.power_norm(k)),
        OperatorSpec::DirectSum(s) => s
            .summands()
            .iter()
            .map(|x| closed_form_power_norm(x, k))
            .try_fold(0.0_f64, |acc, v| v.map(|v| acc.max(v))),
        OperatorSpec::RotatedScale { inner, .. } => closed_form_power_norm(inner, k),
        OperatorSpec::Dense(_) => None,
    }
}

pub fn power_norm(op: &OperatorSpec, k: usize, opts: &NormOptions) -> Result<NormEstimate> {
    if let Some(v) = closed_form_power_norm(op, k) {
        return Ok(NormEstimate::closed_form(v));
    }
    match op {
        OperatorSpec::DirectSum(s) => {
            let mut best: Option<NormEstimate> = None;
            for summand in s.summands() {
                let e = power_norm(summand, k, opts)?;
                if best.is_none_or(|b| e.value > b.value) {
                    best = Some(e);
                }
            }
            Ok(best.expect("direct sums are non-empty"))
        }
        OperatorSpec::RotatedScale { inner, .. } => power_norm(inner, k, opts),
        _ => spectral_norm_map(
            &Power {
                base: op,
                exponent: k,
            },
            opts,
        ),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormPoint {
    pub k: usize,
    #[serde(flatten)]
    pub estimate: NormEstimate,
}

/// `(k, ||T^k||)` for `k = 1..=kmax`, with failures kept alongside.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NormSeries {
    pub points: Vec<NormPoint>,
    pub failures: Vec<(usize, LabError)>,
}

impl NormSeries {
    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.estimate.value).collect()
    }

    pub fn get(&self, k: usize) -> Option<f64> {
        self.points
            .iter()
            .find(|p| p.k == k)
            .map(|p| p.estimate.value)
    }

    pub fn from_values(values: impl IntoIterator<Item = (usize, f64)>) -> Self {
        Self {
            points: values
                .into_iter()
                .map(|(k, v)| NormPoint {
                    k,
                    estimate: NormEstimate::closed_form(v),
                })
                .collect(),
            failures: Vec::new(),
        }
    }
}

pub fn power_norms(op: &OperatorSpec, kmax: usize, tol: f64) -> Result<NormSeries> {
    if kmax == 0 {
        return Err(LabError::invalid("kmax must be at least 1"));
    }
    let opts = NormOptions::with_tol(tol);
    let mut series = NormSeries::default();
    for k in 1..=kmax {
        match power_norm(op, k, &opts) {
            Ok(estimate) => series.points.push(NormPoint { k, estimate }),
            Err(e) => series.failures.push((k, e)),
        }
    }
    Ok(series)
}
