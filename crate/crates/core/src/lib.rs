//! Classifier-agnostic tooling for measuring and mitigating the
//! influence of demographic terms in commonsense polarity
//! classification.
//!
//! The crate is organized around the stages of the pipeline:
//!
//! - [`corpus`]: JSONL ingestion, validation, annotation agreement,
//!   category statistics, stratified splits.
//! - [`ontology`]: the two-level demographic term hierarchy and
//!   hierarchical generalization.
//! - [`classifier`]: a deterministic bag-of-words reference model, a
//!   remote HTTP backend adapter, and evaluation metrics.
//! - [`polarization`]: masked-vs-unmasked prediction deltas per term
//!   and threshold selection.
//! - [`augment`]: predicate-synonym augmentation from a thesaurus file
//!   or a chat-completions endpoint with a persistent response cache.
//! - [`pipeline`]: the seven experiment strategies end to end,
//!   correlation analysis, and report emission.
//! - [`synth`]: a seeded synthetic corpus generator with planted term
//!   biases, so every pipeline path runs offline.

pub mod augment;
pub mod classifier;
pub mod corpus;
pub mod ontology;
pub mod pipeline;
pub mod polarization;
pub mod synth;
pub mod text;
