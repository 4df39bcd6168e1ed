//! Reverse-mode differentiation over dense `f64` matrices.
//!
//! A [`Tape`] records every operation executed on it. Calling
//! [`Tape::backward`] on a scalar walks the record in reverse, accumulating
//! gradients into every node that (transitively) depends on a parameter.
//! Only the handful of operations the model, the explainer and the gradient
//! baseline need are provided.

mod adam;
mod tape;

pub use adam::Adam;
pub use tape::{Tape, Var};

pub type Matrix = ndarray::Array2<f64>;
