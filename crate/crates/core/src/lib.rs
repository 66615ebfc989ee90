pub mod cesaro;
pub mod constructions;
pub mod error;
pub mod kreiss;
pub mod linalg;
pub mod norm;
pub mod operator;
pub mod resolvent;

pub use error::{LabError, Result};
pub use linalg::{Matrix, Vector, C64};
pub use operator::{OperatorSpec, ShiftDirection, WeightSequence};
