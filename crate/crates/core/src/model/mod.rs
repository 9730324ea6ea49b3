//! The classifier: embeddings, Bi-LSTM and transformer encoders, graph
//! convolution over the dependency structure, aspect masking, and fusion.

mod bilstm;
mod config;
mod forward;
mod gcn;
mod head;
mod params;
mod transformer;

pub use bilstm::{bilstm_encode, LstmDirection};
pub use config::{AblationFlags, ModelConfig};
pub use forward::{build_adjacency, forward_pass, ForwardPass, Mode, PreparedExample};
pub use gcn::{bigcn_layer, GcnLayer};
pub use head::{aspect_mask, classify, fuse_representations, retrieval_attention};
pub use params::{ModelParams, TapeParams, EMBEDDING, INIT_BOUND};
pub use transformer::{
    multi_head_attention, positional_encoding, scaled_dot_attention, transformer_encode,
    AttentionHead, EncoderBlock, LN_EPS,
};
