//! Reconstruction and analysis of cross-language page-creation cascades.
//!
//! Records of page creations across Wikipedia language editions are grouped
//! by Wikidata item into time-ordered cascades. On top of those the crate
//! offers descriptive statistics ([`analytics`]), a from-scratch LSTM stack
//! ([`seqmodel`]) and the supervised tasks built on it ([`predict`]):
//! will a cascade continue within a timeout, and into which edition.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the double-precision variants used by the command line.

pub mod analytics;
pub mod cascade;
pub mod ids;
pub mod ingest;
pub mod predict;
pub mod scalar;
pub mod seqmodel;
pub mod synth;

pub use cascade::{build_cascades, Cascade, CascadeDataset, Event};
pub use ids::{Edition, ItemId, UnixSeconds};
pub use ingest::{IngestConfig, PageCreationRecord, TopicScores};
pub use scalar::Scalar;

/// Double-precision sequence model.
pub type Model = seqmodel::SequenceModel<f64>;
/// Single-precision sequence model.
pub type ModelF32 = seqmodel::SequenceModel<f32>;
/// Double-precision gradient set.
pub type Gradients = seqmodel::Parameters<f64>;
/// Jaccard similarity matrix in double precision.
pub type JaccardMatrix = analytics::SimilarityMatrix<f64>;
