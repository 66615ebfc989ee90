//! Operator representations.
//!
//! Four variants cover everything the lab builds: explicit dense matrices,
//! weighted shifts stored by their ratio lists, orthogonal direct sums and
//! unimodular rotations `λT`. Values are immutable once built.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::linalg::{Matrix, Vector, C64, ZERO};

/// Default cap on the dimension of anything materialized densely.
pub const DENSE_CAP: usize = 4096;

const UNIMODULAR_TOL: f64 = 1e-12;
const ANCHOR_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShiftDirection {
    /// `e_j -> r_j e_{j+1}`
    Forward,
    /// `e_{j+1} -> r_j e_j`, first basis vector maps to zero
    Backward,
}

impl ShiftDirection {
    pub fn flip(self) -> Self {
        match self {
            Self::Forward => Self::Backward,
            Self::Backward => Self::Forward,
        }
    }
}

/// Parameters that produced a two-sided `T_N` weight profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightProvenance {
    pub eta: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSequence {
    values: Vec<f64>,
    provenance: Option<WeightProvenance>,
}

impl WeightSequence {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(LabError::invalid("weight sequence is empty"));
        }
        if let Some(w) = values.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(LabError::invalid(format!("weight {w} is not positive")));
        }
        Ok(Self {
            values,
            provenance: None,
        })
    }

    /// Attach `(η, N)` and check the anchor values `w_1 = 1`,
    /// `w_N = w_{N+1} = N^η`, `w_{2N} = N^{2η}`.
    pub fn with_provenance(mut self, eta: f64, n: usize) -> Result<Self> {
        if !(eta > 0.0 && eta < 0.5) || n == 0 {
            return Err(LabError::invalid(format!("bad provenance eta={eta} N={n}")));
        }
        if self.values.len() != 2 * n {
            return Err(LabError::Dimension {
                expected: 2 * n,
                got: self.values.len(),
            });
        }
        let nf = n as f64;
        let anchors = [
            (0, 1.0),
            (n - 1, nf.powf(eta)),
            (n, nf.powf(eta)),
            (2 * n - 1, nf.powf(2.0 * eta)),
        ];
        for (idx, expected) in anchors {
            let got = self.values[idx];
            if ((got - expected) / expected).abs() > ANCHOR_TOL {
                return Err(LabError::invalid(format!(
                    "weight w_{} = {got}, expected {expected}",
                    idx + 1
                )));
            }
        }
        self.provenance = Some(WeightProvenance { eta, n });
        Ok(self)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn provenance(&self) -> Option<WeightProvenance> {
        self.provenance
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn ratios(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| w[1] / w[0]).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseOp {
    matrix: Matrix,
    // compressed rows: apply costs O(nnz), which matters for sparse block
    // operators stored densely
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<C64>,
}

impl DenseOp {
    fn new(matrix: Matrix) -> Self {
        let mut row_ptr = Vec::with_capacity(matrix.rows() + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for i in 0..matrix.rows() {
            for (j, &a) in matrix.row(i).iter().enumerate() {
                if a != ZERO {
                    col_idx.push(j);
                    values.push(a);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            matrix,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    fn apply_into(&self, x: &[C64], y: &mut [C64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = ZERO;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *yi = acc;
        }
    }

    fn apply_adjoint_into(&self, x: &[C64], y: &mut [C64]) {
        y.fill(ZERO);
        for (i, xi) in x.iter().enumerate() {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                y[self.col_idx[k]] += self.values[k].conj() * xi;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedShift {
    direction: ShiftDirection,
    ratios: Vec<f64>,
    weights: Option<WeightSequence>,
}

impl WeightedShift {
    pub fn direction(&self) -> ShiftDirection {
        self.direction
    }

    pub fn ratios(&self) -> &[f64] {
        &self.ratios
    }

    pub fn weights(&self) -> Option<&WeightSequence> {
        self.weights.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.ratios.len() + 1
    }

    /// Weights `w_j` with `w_{j+1} / w_j = r_j`, taken from the stored
    /// sequence when one exists, otherwise rebuilt from `w_1 = 1`.
    pub fn weight_values(&self) -> Vec<f64> {
        match &self.weights {
            Some(w) => w.values().to_vec(),
            None => {
                let mut w = Vec::with_capacity(self.dim());
                w.push(1.0);
                for r in &self.ratios {
                    let last = *w.last().unwrap();
                    w.push(last * r);
                }
                w
            }
        }
    }

    /// `||S^k|| = max_j w_{j+k} / w_j`, zero once `k` reaches the dimension.
    pub fn power_norm(&self, k: usize) -> f64 {
        let d = self.dim();
        if k == 0 {
            return 1.0;
        }
        if k >= d {
            return 0.0;
        }
        let w = self.weight_values();
        (0..d - k).map(|j| w[j + k] / w[j]).fold(0.0, f64::max)
    }

    fn apply_dir(&self, dir: ShiftDirection, x: &[C64], y: &mut [C64]) {
        y.fill(ZERO);
        match dir {
            ShiftDirection::Forward => {
                for (j, r) in self.ratios.iter().enumerate() {
                    y[j + 1] = x[j] * r;
                }
            }
            ShiftDirection::Backward => {
                for (j, r) in self.ratios.iter().enumerate() {
                    y[j] = x[j + 1] * r;
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectSum {
    summands: Vec<OperatorSpec>,
    offsets: Vec<usize>,
}

impl DirectSum {
    pub fn summands(&self) -> &[OperatorSpec] {
        &self.summands
    }

    /// Offset of each summand's first coordinate, plus the total dimension.
    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    fn blocks(&self) -> impl Iterator<Item = (&OperatorSpec, std::ops::Range<usize>)> {
        self.summands
            .iter()
            .zip(self.offsets.windows(2))
            .map(|(s, w)| (s, w[0]..w[1]))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OperatorSpec {
    Dense(DenseOp),
    WeightedShift(WeightedShift),
    DirectSum(DirectSum),
    RotatedScale { scalar: C64, inner: Box<OperatorSpec> },
}

impl OperatorSpec {
    pub fn dense(matrix: Matrix) -> Result<Self> {
        if !matrix.is_square() || matrix.rows() == 0 {
            return Err(LabError::invalid(format!(
                "dense operator must be square and non-empty, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        if matrix
            .as_slice()
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(LabError::invalid("dense operator has non-finite entries"));
        }
        Ok(Self::Dense(DenseOp::new(matrix)))
    }

    pub fn identity(dim: usize) -> Self {
        Self::Dense(DenseOp::new(Matrix::identity(dim)))
    }

    pub fn zero(dim: usize) -> Self {
        Self::Dense(DenseOp::new(Matrix::zeros(dim, dim)))
    }

    pub fn shift(direction: ShiftDirection, ratios: Vec<f64>) -> Result<Self> {
        if let Some(r) = ratios.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
            return Err(LabError::invalid(format!("shift ratio {r} is not positive")));
        }
        Ok(Self::WeightedShift(WeightedShift {
            direction,
            ratios,
            weights: None,
        }))
    }

    pub fn shift_from_weights(direction: ShiftDirection, weights: WeightSequence) -> Self {
        Self::WeightedShift(WeightedShift {
            direction,
            ratios: weights.ratios(),
            weights: Some(weights),
        })
    }

    pub fn direct_sum(summands: Vec<OperatorSpec>) -> Result<Self> {
        if summands.is_empty() {
            return Err(LabError::invalid("direct sum needs at least one summand"));
        }
        let mut offsets = Vec::with_capacity(summands.len() + 1);
        let mut acc = 0;
        offsets.push(0);
        for s in &summands {
            acc += s.dim();
            offsets.push(acc);
        }
        Ok(Self::DirectSum(DirectSum { summands, offsets }))
    }

    pub fn rotated(scalar: C64, inner: OperatorSpec) -> Result<Self> {
        if (scalar.norm() - 1.0).abs() > UNIMODULAR_TOL {
            return Err(LabError::invalid(format!(
                "rotation scalar {scalar} is not unimodular"
            )));
        }
        Ok(Self::RotatedScale {
            scalar,
            inner: Box::new(inner),
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Dense(d) => d.matrix.rows(),
            Self::WeightedShift(s) => s.dim(),
            Self::DirectSum(s) => *s.offsets.last().unwrap(),
            Self::RotatedScale { inner, .. } => inner.dim(),
        }
    }

    pub fn variant_name(&self) -> &'static str {
        match self {
            Self::Dense(_) => "dense",
            Self::WeightedShift(_) => "weighted-shift",
            Self::DirectSum(_) => "direct-sum",
            Self::RotatedScale { .. } => "rotated-scale",
        }
    }

    /// True for weighted shifts and for direct sums or rotations built only
    /// from them. Such operators are unitarily equivalent to every rotation
    /// `λT`, `|λ| = 1`.
    pub fn is_shift_like(&self) -> bool {
        match self {
            Self::WeightedShift(_) => true,
            Self::DirectSum(s) => s.summands.iter().all(Self::is_shift_like),
            Self::RotatedScale { inner, .. } => inner.is_shift_like(),
            Self::Dense(_) => false,
        }
    }

    fn check_dim(&self, x: &Vector) -> Result<()> {
        if x.dim() != self.dim() {
            return Err(LabError::Dimension {
                expected: self.dim(),
                got: x.dim(),
            });
        }
        Ok(())
    }

    pub fn apply(&self, x: &Vector) -> Result<Vector> {
        self.check_dim(x)?;
        Ok(self.apply_unchecked(x))
    }

    pub fn apply_adjoint(&self, x: &Vector) -> Result<Vector> {
        self.check_dim(x)?;
        Ok(self.apply_adjoint_unchecked(x))
    }

    pub(crate) fn apply_unchecked(&self, x: &Vector) -> Vector {
        let mut y = Vector::zeros(self.dim());
        self.apply_into(x.as_slice(), y.as_mut_slice(), false);
        y
    }

    pub(crate) fn apply_adjoint_unchecked(&self, x: &Vector) -> Vector {
        let mut y = Vector::zeros(self.dim());
        self.apply_into(x.as_slice(), y.as_mut_slice(), true);
        y
    }

    fn apply_into(&self, x: &[C64], y: &mut [C64], adjoint: bool) {
        match self {
            Self::Dense(d) => {
                if adjoint {
                    d.apply_adjoint_into(x, y)
                } else {
                    d.apply_into(x, y)
                }
            }
            Self::WeightedShift(s) => {
                let dir = if adjoint {
                    s.direction.flip()
                } else {
                    s.direction
                };
                s.apply_dir(dir, x, y)
            }
            Self::DirectSum(s) => {
                for (op, range) in s.blocks() {
                    op.apply_into(&x[range.clone()], &mut y[range], adjoint);
                }
            }
            Self::RotatedScale { scalar, inner } => {
                inner.apply_into(x, y, adjoint);
                let a = if adjoint { scalar.conj() } else { *scalar };
                for z in y.iter_mut() {
                    *z *= a;
                }
            }
        }
    }

    pub fn materialize(&self) -> Result<Matrix> {
        self.materialize_capped(DENSE_CAP)
    }

    pub fn materialize_capped(&self, cap: usize) -> Result<Matrix> {
        let d = self.dim();
        if d > cap {
            return Err(LabError::Size { dim: d, cap });
        }
        let mut m = Matrix::zeros(d, d);
        self.write_block(&mut m, 0);
        Ok(m)
    }

    fn write_block(&self, m: &mut Matrix, offset: usize) {
        match self {
            Self::Dense(dense) => {
                let a = &dense.matrix;
                for i in 0..a.rows() {
                    for j in 0..a.cols() {
                        m[(offset + i, offset + j)] = a[(i, j)];
                    }
                }
            }
            Self::WeightedShift(s) => {
                for (j, &r) in s.ratios.iter().enumerate() {
                    let (row, col) = match s.direction {
                        ShiftDirection::Forward => (j + 1, j),
                        ShiftDirection::Backward => (j, j + 1),
                    };
                    m[(offset + row, offset + col)] = C64::new(r, 0.0);
                }
            }
            Self::DirectSum(s) => {
                for (op, range) in s.blocks() {
                    op.write_block(m, offset + range.start);
                }
            }
            Self::RotatedScale { scalar, inner } => {
                inner.write_block(m, offset);
                let d = inner.dim();
                for i in 0..d {
                    for j in 0..d {
                        m[(offset + i, offset + j)] *= scalar;
                    }
                }
            }
        }
    }
}
