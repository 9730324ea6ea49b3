//! Corpus-level dependency statistics and per-sentence adjacency matrices.

mod adjacency;
mod sdi;

pub use adjacency::{Adjacency, AdjacencyMode};
pub use sdi::SdiTable;
