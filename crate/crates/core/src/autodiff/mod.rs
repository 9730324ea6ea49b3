//! Reverse-mode differentiable tensor engine and Adam optimizer.

mod adam;
mod check;
mod tape;
mod tensor;

pub use adam::{adam_step, AdamConfig, AdamState, ParamEntry, ParamStore};
pub use check::{finite_diff_check, finite_diff_check_per_tensor, LossBuilder};
pub use tape::{Tape, Var};
pub use tensor::Tensor;
