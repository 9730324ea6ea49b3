//! Dataset ingestion: examples, dependency parses, vocabulary, embeddings.

mod conllu;
mod example;
mod glove;
mod vocab;

pub use conllu::{parse_conllu, parse_conllu_str, DepEdge, DependencyGraph};
pub use example::{
    label_counts, load_examples, load_records, Example, Label, SentenceRecord, NUM_CLASSES,
};
pub use glove::{load_glove, EmbeddingTable};
pub use vocab::{Vocab, PAD_ID, PAD_TOKEN, UNK_ID, UNK_TOKEN};
