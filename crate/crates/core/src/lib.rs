//! Aspect-based sentiment classification with an edge-enhanced bidirectional
//! graph convolutional network.
//!
//! The pipeline encodes a tokenized sentence with a Bi-LSTM and a transformer
//! encoder, runs message passing over the sentence's dependency graph with
//! corpus-level relation frequencies as edge weights, masks everything but
//! the aspect span, and classifies the attention-fused representation into
//! negative / neutral / positive.
//!
//! Everything runs on a small reverse-mode autodiff engine in 64-bit floats;
//! training, evaluation, layer sweeps, and ablations are driven by the
//! `eegcn` binary.

pub mod autodiff;
pub mod cli;
pub mod corpus;
pub mod graph;
pub mod model;
pub mod train;
pub mod error;

pub use error::Error;
