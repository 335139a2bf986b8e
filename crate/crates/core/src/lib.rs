//! Unified handwritten word recognition and keyword spotting engine.
//!
//! The model couples a non-recurrent CTC branch and a Seq2Seq branch over a
//! shared convolutional backbone. The Seq2Seq intermediate vector doubles as
//! a holistic 512-d word descriptor for retrieval, with an optional
//! character-encoder autoencoder path for query-by-string, forced-alignment
//! scoring, and sign-binarized descriptors retrained through a
//! straight-through estimator.
//!
//! Everything runs on CPU over a small reverse-mode autodiff tape
//! ([`graph::Graph`]); kernels are generic over f32 (training) and f64
//! (gradient checking).

pub mod backbone;
pub mod binarize;
pub mod charenc;
pub mod ctc;
pub mod data;
pub mod error;
pub mod eval;
pub mod gradcheck;
pub mod graph;
pub mod gru;
pub mod init;
mod nn_ops;
pub mod optim;
pub mod params;
pub mod scalar;
pub mod seq2seq;
pub mod spotting;
pub mod tensor;
pub mod training;

pub use error::{Error, Result};
pub use graph::{Graph, Mode, Var};
pub use scalar::Scalar;
pub use tensor::Tensor;

/// Descriptor width in floats; fixed by the index and checkpoint formats.
pub const DESCRIPTOR_DIM: usize = 512;
/// Packed binary descriptor width in bytes.
pub const DESCRIPTOR_BYTES: usize = DESCRIPTOR_DIM / 8;
