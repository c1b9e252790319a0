//! Tensor arithmetic with reverse-mode differentiation and a
//! finite-difference gradient oracle.
//!
//! Single-threaded per tape; independent tapes may run on separate threads.

mod tape;
mod tensor;

pub use tape::{finite_diff_grad, relative_error, Gradients, Tape, VarId};
pub use tensor::{dot, matmul, matvec, softmax_slice, NumericError, NumericResult, Tensor};
