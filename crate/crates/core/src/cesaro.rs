//! Cesàro means `M_n(T) = (n+1)^{-1} Σ_{k≤n} T^k`, second means
//! `M_n^{(2)}(T)`, their rotated profiles, and mean-ergodicity probes.
//!
//! Everything is accumulated incrementally: one application of `T` per
//! column per step, never re-powering from scratch.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::linalg::{Matrix, Vector, C64, ONE};
use crate::norm::{power_iteration_from, spectral_norm_map, NormOptions};
use crate::operator::{OperatorSpec, DENSE_CAP};

/// Running `T^n`, `S_n = Σ_{k≤n} T^k` and `U_n = Σ_{j≤n} S_j`.
///
/// `M_n = S_n / (n+1)` and `M_n^{(2)} = 2 U_n / ((n+1)(n+2))`.
pub struct MeanAccumulator<'a> {
    op: &'a OperatorSpec,
    n: usize,
    power: Matrix,
    sum: Matrix,
    sum2: Matrix,
}

impl<'a> MeanAccumulator<'a> {
    pub fn new(op: &'a OperatorSpec) -> Result<Self> {
        let d = op.dim();
        if d > DENSE_CAP {
            return Err(LabError::Size { dim: d, cap: DENSE_CAP });
        }
        let id = Matrix::identity(d);
        Ok(Self {
            op,
            n: 0,
            power: id.clone(),
            sum: id.clone(),
            sum2: id,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn power(&self) -> &Matrix {
        &self.power
    }

    /// `(n+1) M_n`
    pub fn power_sum(&self) -> &Matrix {
        &self.sum
    }

    pub fn mean(&self) -> Matrix {
        self.sum.scaled(C64::new(1.0 / (self.n + 1) as f64, 0.0))
    }

    pub fn mean2(&self) -> Matrix {
        let n = self.n as f64;
        self.sum2.scaled(C64::new(2.0 / ((n + 1.0) * (n + 2.0)), 0.0))
    }

    pub fn advance(&mut self) {
        self.power = apply_to_columns(self.op, &self.power);
        self.sum.add_scaled(ONE, &self.power);
        self.sum2.add_scaled(ONE, &self.sum);
        self.n += 1;
    }

    pub fn advance_to(&mut self, n: usize) {
        while self.n < n {
            self.advance();
        }
    }
}

fn apply_to_columns(op: &OperatorSpec, m: &Matrix) -> Matrix {
    use crate::norm::LinearMap;
    let cols: Vec<Vector> = (0..m.cols()).map(|j| LinearMap::apply(op, &m.column(j))).collect();
    Matrix::from_columns(&cols)
}

pub fn cesaro_mean(op: &OperatorSpec, n: usize) -> Result<OperatorSpec> {
    let mut acc = MeanAccumulator::new(op)?;
    acc.advance_to(n);
    OperatorSpec::dense(acc.mean())
}

/// Both expressions of the second Cesàro mean: the average of averages
/// `2/((n+1)(n+2)) Σ_j (j+1) M_j` and the triangular weighted power sum
/// `2/((n+1)(n+2)) Σ_j (n+1-j) T^j`.
pub fn cesaro_mean2_forms(op: &OperatorSpec, n: usize) -> Result<(Matrix, Matrix)> {
    let d = op.dim();
    let mut acc = MeanAccumulator::new(op)?;
    let mut averages = Matrix::zeros(d, d);
    let mut weighted = Matrix::zeros(d, d);
    loop {
        let j = acc.n();
        averages.add_scaled(C64::new((j + 1) as f64, 0.0), &acc.mean());
        weighted.add_scaled(C64::new((n + 1 - j) as f64, 0.0), acc.power());
        if j == n {
            break;
        }
        acc.advance();
    }
    let nf = n as f64;
    let scale = C64::new(2.0 / ((nf + 1.0) * (nf + 2.0)), 0.0);
    Ok((averages.scaled(scale), weighted.scaled(scale)))
}

/// Tolerance for agreement of the two second-mean forms, relative to the
/// larger entry.
pub const MEAN2_FORM_TOL: f64 = 1e-12;

pub fn cesaro_mean2(op: &OperatorSpec, n: usize) -> Result<OperatorSpec> {
    let (a, b) = cesaro_mean2_forms(op, n)?;
    let scale = a.max_abs().max(b.max_abs()).max(1.0);
    let gap = a.sub(&b).max_abs();
    if gap > MEAN2_FORM_TOL * scale {
        return Err(LabError::invalid(format!(
            "second-mean forms disagree by {gap:e} at n = {n}"
        )));
    }
    OperatorSpec::dense(a)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MeanOrder {
    First,
    Second,
}

impl MeanOrder {
    pub fn from_int(order: u8) -> Result<Self> {
        match order {
            1 => Ok(Self::First),
            2 => Ok(Self::Second),
            _ => Err(LabError::invalid(format!("mean order {order} must be 1 or 2"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanPoint {
    pub n: usize,
    /// `||M_n(T)||`
    pub norm_m1: f64,
    /// `||M_n^{(2)}(T)||`
    pub norm_m2: f64,
    /// sup over the angle grid of the chosen order's rotated mean norm
    pub sup_lambda: f64,
    /// grid index of the maximizing angle (smallest on ties)
    pub argmax_angle: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanSeries {
    pub order: MeanOrder,
    pub angle_count: usize,
    /// Number of angles actually evaluated; 1 when the rotation shortcut
    /// for weighted shifts applied.
    pub angles_evaluated: usize,
    pub rotation_shortcut: bool,
    pub points: Vec<MeanPoint>,
}

impl MeanSeries {
    pub fn sup(&self) -> f64 {
        self.points.iter().map(|p| p.sup_lambda).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileOptions {
    /// Use unitary equivalence of `λS` and `S` for shift-like operators.
    pub rotation_shortcut: bool,
    pub norm: NormOptions,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        Self {
            rotation_shortcut: true,
            norm: NormOptions::with_tol(1e-11),
        }
    }
}

/// `λ_k = exp(2πik/m)`, `k = 0..m`.
pub fn angle_grid(count: usize) -> Vec<C64> {
    (0..count)
        .map(|k| {
            let theta = 2.0 * PI * k as f64 / count as f64;
            C64::from_polar(1.0, theta)
        })
        .collect()
}

/// Below the fallback cap, a stalled iteration is cut short: a dense SVD
/// costs about as much as `4d` iterations.
pub(crate) fn matrix_norm(m: &Matrix, opts: &NormOptions) -> Result<f64> {
    spectral_norm_map(m, &capped(m, opts)).map(|e| e.value)
}

fn capped(m: &Matrix, opts: &NormOptions) -> NormOptions {
    let mut opts = *opts;
    if m.rows() <= opts.dense_fallback_cap {
        opts.max_iter = opts.max_iter.min(20 + 4 * m.rows());
    }
    opts
}

/// Share of the seeded vector mixed into a warm start, so that no singular
/// direction (say, another block of a direct sum) is missed exactly.
const WARM_MIX: f64 = 1e-2;

/// [`matrix_norm`] started from the previous top singular vector of a
/// nearby matrix.
fn matrix_norm_warm(m: &Matrix, opts: &NormOptions, warm: &mut Option<Vector>) -> Result<f64> {
    let opts = capped(m, opts);
    let seeded = Vector::seeded_unit_vectors(m.rows(), 1, opts.seed).pop().unwrap();
    let start = match warm.take() {
        Some(mut v) => {
            v.axpy(C64::new(WARM_MIX, 0.0), &seeded);
            let n = v.norm();
            v.scale_mut(C64::new(1.0 / n, 0.0));
            v
        }
        None => seeded,
    };
    match power_iteration_from(m, &opts, start) {
        Ok((e, v)) => {
            if e.value > 0.0 {
                *warm = Some(v);
            }
            Ok(e.value)
        }
        Err(LabError::Convergence { .. }) if m.rows() <= opts.dense_fallback_cap => Ok(m.svd_norm()),
        Err(e) => Err(e),
    }
}

pub fn rotated_mean_norm_profile(
    op: &OperatorSpec,
    n_max: usize,
    angle_count: usize,
    order: MeanOrder,
) -> Result<MeanSeries> {
    rotated_mean_norm_profile_with(op, n_max, angle_count, order, &ProfileOptions::default())
}

pub fn rotated_mean_norm_profile_with(
    op: &OperatorSpec,
    n_max: usize,
    angle_count: usize,
    order: MeanOrder,
    opts: &ProfileOptions,
) -> Result<MeanSeries> {
    if angle_count == 0 {
        return Err(LabError::invalid("angle count must be at least 1"));
    }
    let shortcut = opts.rotation_shortcut && op.is_shift_like();
    let grid = angle_grid(angle_count);
    let evaluated = if shortcut { 1 } else { angle_count };

    // per angle: (n, ||M_n||, ||M_n^(2)||) for n = 0..=n_max
    let per_angle: Vec<Vec<(f64, f64)>> = grid[..evaluated]
        .par_iter()
        .enumerate()
        .map(|(k, &lambda)| {
            let rotated;
            let target = if k == 0 {
                op
            } else {
                rotated = OperatorSpec::rotated(lambda, op.clone())?;
                &rotated
            };
            let mut acc = MeanAccumulator::new(target)?;
            let (mut warm1, mut warm2) = (None, None);
            let mut out = Vec::with_capacity(n_max + 1);
            for n in 0..=n_max {
                if n > 0 {
                    acc.advance();
                }
                let want_first = k == 0 || order == MeanOrder::First;
                let want_second = k == 0 || order == MeanOrder::Second;
                let m1 = if want_first {
                    matrix_norm_warm(&acc.mean(), &opts.norm, &mut warm1)?
                } else {
                    f64::NAN
                };
                let m2 = if want_second {
                    matrix_norm_warm(&acc.mean2(), &opts.norm, &mut warm2)?
                } else {
                    f64::NAN
                };
                out.push((m1, m2));
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let points = (0..=n_max)
        .map(|n| {
            let (norm_m1, norm_m2) = per_angle[0][n];
            let mut sup = f64::NEG_INFINITY;
            let mut arg = 0;
            for (k, series) in per_angle.iter().enumerate() {
                let v = match order {
                    MeanOrder::First => series[n].0,
                    MeanOrder::Second => series[n].1,
                };
                if v > sup {
                    sup = v;
                    arg = k;
                }
            }
            MeanPoint {
                n,
                norm_m1,
                norm_m2,
                sup_lambda: sup,
                argmax_angle: arg,
            }
        })
        .collect();

    Ok(MeanSeries {
        order,
        angle_count,
        angles_evaluated: evaluated,
        rotation_shortcut: shortcut,
        points,
    })
}

/// Residuals of `T^n = (n+1) M_n - n M_{n-1}` and
/// `((n+2)/(n+1)) M_{n+1} - M_n = T^{n+1} / (n+1)` for `n = 1..=n_max`,
/// measured in Frobenius norm (an upper bound for the operator norm).
pub fn cesaro_identity_residuals(op: &OperatorSpec, n_max: usize) -> Result<Vec<f64>> {
    if n_max == 0 {
        return Err(LabError::invalid("n must be at least 1"));
    }
    let mut acc = MeanAccumulator::new(op)?;
    let mut prev_mean = acc.mean();
    acc.advance();
    let mut out = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let nf = n as f64;
        let power_n = acc.power().clone();
        let mean_n = acc.mean();
        let mut lhs = mean_n.scaled(C64::new(nf + 1.0, 0.0));
        lhs.add_scaled(C64::new(-nf, 0.0), &prev_mean);
        let r1 = lhs.sub(&power_n).frobenius();

        acc.advance();
        let mean_next = acc.mean();
        let mut lhs = mean_next.scaled(C64::new((nf + 2.0) / (nf + 1.0), 0.0));
        lhs.add_scaled(C64::new(-1.0, 0.0), &mean_n);
        lhs.add_scaled(C64::new(-1.0 / (nf + 1.0), 0.0), acc.power());
        let r2 = lhs.frobenius();

        out.push(r1.max(r2));
        prev_mean = mean_n;
    }
    Ok(out)
}

pub fn cesaro_identity_check(op: &OperatorSpec, n: usize) -> Result<f64> {
    Ok(*cesaro_identity_residuals(op, n)?.last().unwrap())
}

/// `||M_{n+1}(T) - M_n(T)||` at each ladder point.
pub fn mean_difference_decay(op: &OperatorSpec, ladder: &[usize]) -> Result<Vec<(usize, f64)>> {
    check_ladder(ladder)?;
    let opts = NormOptions::with_tol(1e-11);
    let mut acc = MeanAccumulator::new(op)?;
    let mut out = Vec::with_capacity(ladder.len());
    for &n in ladder {
        acc.advance_to(n);
        let m = acc.mean();
        acc.advance();
        let diff = acc.mean().sub(&m);
        out.push((n, matrix_norm(&diff, &opts)?));
    }
    Ok(out)
}

fn check_ladder(ladder: &[usize]) -> Result<()> {
    if ladder.is_empty() || ladder.windows(2).any(|w| w[0] >= w[1]) {
        return Err(LabError::invalid("ladder must be non-empty and strictly increasing"));
    }
    Ok(())
}

pub fn dyadic_ladder(top_exponent: u32) -> Vec<usize> {
    (0..=top_exponent).map(|e| 1usize << e).collect()
}

/// Cauchy-gap tolerance at the ladder top. A reporting heuristic only.
pub const ERGODIC_GAP_TOL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErgodicProbe {
    pub ladder: Vec<usize>,
    /// `gaps[p][i] = ||M_{ladder[i+1]} x_p - M_{ladder[i]} x_p||`
    pub gaps: Vec<Vec<f64>>,
    pub top_gap: f64,
    pub tolerance: f64,
    pub consistent_with_mean_ergodicity: bool,
}

/// Cauchy gaps of `M_n x` along a ladder, for each probe vector.
pub fn ergodic_probe(op: &OperatorSpec, probes: &[Vector], ladder: &[usize]) -> Result<ErgodicProbe> {
    use crate::norm::LinearMap;
    check_ladder(ladder)?;
    if ladder.len() < 2 {
        return Err(LabError::invalid("ladder needs at least two rungs"));
    }
    for x in probes {
        if x.dim() != op.dim() {
            return Err(LabError::Dimension {
                expected: op.dim(),
                got: x.dim(),
            });
        }
        if (x.norm() - 1.0).abs() > 1e-12 {
            return Err(LabError::invalid("probe vectors must have unit norm"));
        }
    }
    let gaps: Vec<Vec<f64>> = probes
        .par_iter()
        .map(|x| {
            let mut power = x.clone();
            let mut sum = x.clone();
            let mut n = 0;
            let mut means = Vec::with_capacity(ladder.len());
            for &target in ladder {
                while n < target {
                    power = LinearMap::apply(op, &power);
                    sum.axpy(ONE, &power);
                    n += 1;
                }
                let mut m = sum.clone();
                m.scale_mut(C64::new(1.0 / (n + 1) as f64, 0.0));
                means.push(m);
            }
            means.windows(2).map(|w| w[1].sub(&w[0]).norm()).collect()
        })
        .collect();
    let top_gap = gaps
        .iter()
        .map(|g| *g.last().unwrap())
        .fold(0.0, f64::max);
    Ok(ErgodicProbe {
        ladder: ladder.to_vec(),
        gaps,
        top_gap,
        tolerance: ERGODIC_GAP_TOL,
        consistent_with_mean_ergodicity: top_gap <= ERGODIC_GAP_TOL,
    })
}
