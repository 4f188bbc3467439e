//! Representational analysis of layerwise word embeddings.
//!
//! The crate compares embedding spaces with centered kernel alignment,
//! profiles cosine similarity across classes of word pairs, scores how well
//! word groups cluster in full, PCA and LDA subspaces, builds and validates
//! controlled word-group datasets, and relates grounded/ungrounded model
//! differences through layerwise correlations.

pub mod cluster;
pub mod error;
pub mod groups;
pub mod grounding;
pub mod io;
pub mod metrics;
pub mod model;
pub mod pairs;
pub mod plot;
pub mod report;
pub mod subspace;
pub mod synthetic;

pub use error::{Error, Result};
pub use metrics::{CkaScore, CorrelationResult, IntervalEstimate, SilhouetteScore};
pub use model::{
    ConcretenessLabel, ConcretenessTable, EmbeddingTable, GroupKind, PairClass, PairSet, PhonemicLexicon,
    StaticEmbeddingTable, SynonymSets, TokenRow, WordGroup, WordGroupSet,
};

/// Version string stamped into every report record.
pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");
