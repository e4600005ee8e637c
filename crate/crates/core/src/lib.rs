//! Weakly-supervised fine-grained semantic indexing.
//!
//! The crate builds retrospective benchmarks from taxonomy promotion events,
//! produces weak labels with nine labeling functions, combines them with
//! voting ensembles or a generative label model, trains a logistic
//! regression baseline, and scores predictions with validity-filtered
//! multi-label metrics.

pub mod config;
pub mod corpus;
pub mod datasets;
pub mod ensembles;
pub mod error;
pub mod eval;
pub mod labelers;
pub mod lr;
pub mod manifest;
pub mod pipeline;
pub mod pmid;
pub mod synth;
pub mod text;
pub mod thesaurus;

pub use error::{Error, Result};
pub use pmid::Pmid;
