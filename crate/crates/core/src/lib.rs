//! Multi-act dialogue policy toolkit: a small dense-tensor autodiff core,
//! the dialogue-act data model and encodings, four policy model families,
//! training loops, and the evaluation metrics.

pub mod adam;
pub mod data;
pub mod error;
pub mod gradcheck;
pub mod gru;
pub mod init;
pub mod par;
pub mod params;
pub mod tape;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::Tensor;
