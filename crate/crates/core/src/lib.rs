//! Hybrid radiomics + DenseNet feature-fusion image classifier.
//!
//! Handcrafted texture features from a central disk and its peripheral
//! complement are embedded by an MLP, concatenated with a projected DenseNet
//! embedding of the image, and classified by a single affine head.

pub mod dataset;
pub mod error;
mod fsutil;
pub mod metrics;
pub mod model;
pub mod radiomics;
pub mod raster;
pub mod tensor;
pub mod training;

#[doc(hidden)]
pub mod testing;

pub use error::{Error, Result};
