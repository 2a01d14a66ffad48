//! Minimal reverse-mode differentiation engine: tensors, a recording tape,
//! Adam and a finite-difference gradient checker.

mod adam;
mod gradcheck;
mod params;
mod real;
mod tape;
mod tensor;

pub use adam::{Adam, AdamConfig};
pub use gradcheck::{gradcheck, gradcheck_where, rel_err, GradCheckReport, REL_ERR_FLOOR};
pub use params::{Grads, ParamId, ParamStore};
pub use real::Real;
pub use tape::{softmax_masked, Tape, Var};
pub use tensor::{MatRef, Tensor};

#[cfg(test)]
mod tests;
