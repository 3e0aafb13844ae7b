//! Entity embeddings reinforced with fine-grained semantic type words, and a
//! small entity-linking scorer to evaluate them.
//!
//! The crate is organised as a chain of stages:
//!
//! 1. [`embeddings`]: word2vec binary/text I/O and an in-memory table.
//! 2. [`dictionary`]: mining, seed expansion and the type-word dictionary.
//! 3. [`extraction`]: type words from each entity's first sentence.
//! 4. [`aggregation`]: the semantic embedding and its blend with the entity
//!    embedding.
//! 5. [`linking`]: local and pairwise scores, inference and training.
//! 6. [`eval`]: micro F1, multi-run intervals, convergence, geometry.
//! 7. [`pipeline`]: all of the above driven from one config file.

pub mod aggregation;
pub mod corpus;
pub mod dictionary;
pub mod embeddings;
mod error;
pub mod eval;
pub mod extraction;
pub mod fixtures;
pub mod linking;
pub mod pipeline;
pub mod text;

pub use aggregation::{aggregate, aggregate_table, semantic_embedding, AggregationConfig};
pub use corpus::ArticleRecord;
pub use dictionary::{Category, SemanticTypeDictionary};
pub use embeddings::{load_binary, save_binary, EmbeddingTable, VectorRef};
pub use error::{Error, Result};
pub use extraction::{extract_types, Assignments, EntityTypeAssignment, TypeExtractor};
pub use linking::{LinkingDocument, LinkingModel, LinkingTables, Mention};
