//! Resolvent solves `(λI - T) y = x` outside the closed unit disc.
//!
//! Triangular structure (shifts, triangular dense blocks) is solved by
//! substitution; anything else goes through a dense LU factorization made
//! once per `λ`.

use nalgebra::{Dyn, LU};

use crate::error::{LabError, Result};
use crate::linalg::{Matrix, Vector, C64, ZERO};
use crate::norm::LinearMap;
use crate::operator::{OperatorSpec, ShiftDirection};

type DenseLu = LU<C64, Dyn, Dyn>;

enum Factor {
    Shift,
    Upper,
    Lower,
    Lu(Box<(DenseLu, DenseLu)>),
    Sum(Vec<Factor>),
    Rotated(Box<Factor>),
}

/// A factored `(λI - T)^{-1}` for one operator and one `λ`.
pub struct Resolvent<'a> {
    op: &'a OperatorSpec,
    lambda: C64,
    factor: Factor,
}

impl<'a> Resolvent<'a> {
    pub fn new(op: &'a OperatorSpec, lambda: C64) -> Result<Self> {
        if !(lambda.norm() > 1.0) {
            return Err(LabError::invalid(format!(
                "resolvent point {lambda} must lie outside the closed unit disc"
            )));
        }
        let factor = factor(op, lambda)?;
        Ok(Self { op, lambda, factor })
    }

    pub fn lambda(&self) -> C64 {
        self.lambda
    }

    pub fn solve(&self, x: &Vector) -> Vector {
        let mut y = x.as_slice().to_vec();
        solve_in_place(self.op, &self.factor, self.lambda, &mut y, false);
        y.into()
    }

    /// `(conj(λ) I - T*)^{-1} x`
    pub fn solve_adjoint(&self, x: &Vector) -> Vector {
        let mut y = x.as_slice().to_vec();
        solve_in_place(self.op, &self.factor, self.lambda, &mut y, true);
        y.into()
    }
}

impl LinearMap for Resolvent<'_> {
    fn dim(&self) -> usize {
        self.op.dim()
    }
    fn apply(&self, x: &Vector) -> Vector {
        self.solve(x)
    }
    fn apply_adjoint(&self, x: &Vector) -> Vector {
        self.solve_adjoint(x)
    }
}

/// `(s · (λI - T)^{-1})^k`; with `s = |λ| - 1` this stays bounded for
/// Kreiss-type operators, so large `k` neither overflows nor underflows.
pub struct ScaledResolventPower<'r, 'a> {
    pub resolvent: &'r Resolvent<'a>,
    pub scale: f64,
    pub exponent: usize,
}

impl LinearMap for ScaledResolventPower<'_, '_> {
    fn dim(&self) -> usize {
        self.resolvent.dim()
    }
    fn apply(&self, x: &Vector) -> Vector {
        let mut y = x.clone();
        for _ in 0..self.exponent {
            y = self.resolvent.solve(&y);
            y.scale_mut(C64::new(self.scale, 0.0));
        }
        y
    }
    fn apply_adjoint(&self, x: &Vector) -> Vector {
        let mut y = x.clone();
        for _ in 0..self.exponent {
            y = self.resolvent.solve_adjoint(&y);
            y.scale_mut(C64::new(self.scale, 0.0));
        }
        y
    }
}

pub fn resolvent_apply(op: &OperatorSpec, lambda: C64, x: &Vector) -> Result<Vector> {
    if x.dim() != op.dim() {
        return Err(LabError::Dimension {
            expected: op.dim(),
            got: x.dim(),
        });
    }
    Ok(Resolvent::new(op, lambda)?.solve(x))
}

fn factor(op: &OperatorSpec, lambda: C64) -> Result<Factor> {
    match op {
        OperatorSpec::WeightedShift(_) => {
            if lambda == ZERO {
                return Err(LabError::Singular);
            }
            Ok(Factor::Shift)
        }
        OperatorSpec::Dense(d) => {
            let a = d.matrix();
            let triangular = if a.is_upper_triangular() {
                Some(Factor::Upper)
            } else if a.is_lower_triangular() {
                Some(Factor::Lower)
            } else {
                None
            };
            if let Some(f) = triangular {
                if (0..a.rows()).any(|i| lambda - a[(i, i)] == ZERO) {
                    return Err(LabError::Singular);
                }
                return Ok(f);
            }
            let shifted = shifted_matrix(a, lambda);
            let lu = shifted.to_nalgebra().lu();
            if !lu.is_invertible() {
                return Err(LabError::Singular);
            }
            let lu_adj = shifted.adjoint().to_nalgebra().lu();
            Ok(Factor::Lu(Box::new((lu, lu_adj))))
        }
        OperatorSpec::DirectSum(s) => Ok(Factor::Sum(
            s.summands()
                .iter()
                .map(|x| factor(x, lambda))
                .collect::<Result<_>>()?,
        )),
        OperatorSpec::RotatedScale { scalar, inner } => Ok(Factor::Rotated(Box::new(factor(
            inner,
            lambda * scalar.conj(),
        )?))),
    }
}

fn shifted_matrix(a: &Matrix, lambda: C64) -> Matrix {
    let mut m = a.scaled(C64::new(-1.0, 0.0));
    for i in 0..m.rows() {
        m[(i, i)] += lambda;
    }
    m
}

fn solve_in_place(op: &OperatorSpec, f: &Factor, lambda: C64, y: &mut [C64], adjoint: bool) {
    match (op, f) {
        (OperatorSpec::WeightedShift(s), Factor::Shift) => {
            let (dir, lam) = if adjoint {
                (s.direction().flip(), lambda.conj())
            } else {
                (s.direction(), lambda)
            };
            let r = s.ratios();
            match dir {
                ShiftDirection::Forward => {
                    // λ y_0 = x_0,  λ y_{j+1} - r_j y_j = x_{j+1}
                    y[0] /= lam;
                    for j in 0..r.len() {
                        y[j + 1] = (y[j + 1] + y[j] * r[j]) / lam;
                    }
                }
                ShiftDirection::Backward => {
                    let d = y.len();
                    y[d - 1] /= lam;
                    for j in (0..r.len()).rev() {
                        y[j] = (y[j] + y[j + 1] * r[j]) / lam;
                    }
                }
            }
        }
        (OperatorSpec::Dense(d), Factor::Upper | Factor::Lower) => {
            let a = d.matrix();
            let upper = matches!(f, Factor::Upper) != adjoint;
            let lam = if adjoint { lambda.conj() } else { lambda };
            // entry (i, j) of (λI - A) or of its adjoint
            let entry = |i: usize, j: usize| {
                let aij = if adjoint { a[(j, i)].conj() } else { a[(i, j)] };
                if i == j {
                    lam - aij
                } else {
                    -aij
                }
            };
            let n = y.len();
            if upper {
                for i in (0..n).rev() {
                    let mut acc = y[i];
                    for j in i + 1..n {
                        acc -= entry(i, j) * y[j];
                    }
                    y[i] = acc / entry(i, i);
                }
            } else {
                for i in 0..n {
                    let mut acc = y[i];
                    for j in 0..i {
                        acc -= entry(i, j) * y[j];
                    }
                    y[i] = acc / entry(i, i);
                }
            }
        }
        (OperatorSpec::Dense(_), Factor::Lu(lus)) => {
            let lu = if adjoint { &lus.1 } else { &lus.0 };
            let rhs = nalgebra::DVector::from_column_slice(y);
            let sol = lu
                .solve(&rhs)
                .expect("factorization checked invertible at construction");
            y.copy_from_slice(sol.as_slice());
        }
        (OperatorSpec::DirectSum(s), Factor::Sum(fs)) => {
            for ((summand, w), sf) in s.summands().iter().zip(s.offsets().windows(2)).zip(fs) {
                solve_in_place(summand, sf, lambda, &mut y[w[0]..w[1]], adjoint);
            }
        }
        (OperatorSpec::RotatedScale { scalar, inner }, Factor::Rotated(fi)) => {
            // λI - μT = μ (λ μ̄ I - T), so the inverse is μ̄ R_T(λ μ̄)
            solve_in_place(inner, fi, lambda * scalar.conj(), y, adjoint);
            let a = if adjoint { *scalar } else { scalar.conj() };
            for z in y.iter_mut() {
                *z *= a;
            }
        }
        _ => unreachable!("factor tree mirrors the operator tree"),
    }
}
