//! Minimal reverse-mode automatic differentiation.
//!
//! Tensors are 2-D (rows x cols) 64-bit float matrices; scalars are 1x1.
//! Every op records its inputs and a backward closure when any input is
//! tracked, and [`Tensor::backward`] walks the recorded graph in reverse
//! topological order exactly once. Any op producing a non-finite value fails
//! immediately, naming the op.

mod checkpoint;
mod optim;
mod tensor;

pub use checkpoint::{load_tensors, save_tensors, NamedTensor};
pub use optim::{multistep_lr, AdamW, AdamWConfig};
pub use tensor::{finite_difference_grad, gradient_check, Tensor};
