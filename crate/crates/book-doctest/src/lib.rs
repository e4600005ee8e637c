//! The guide's chapters, one module each, so `cargo test` runs their code
//! listings.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/datasets.md")]
pub mod datasets {}
#[doc = include_str!("../../../book/src/labeling-functions.md")]
pub mod labeling_functions {}
#[doc = include_str!("../../../book/src/ensembles.md")]
pub mod ensembles {}
#[doc = include_str!("../../../book/src/undersampling.md")]
pub mod undersampling {}
#[doc = include_str!("../../../book/src/logistic.md")]
pub mod logistic {}
#[doc = include_str!("../../../book/src/evaluation.md")]
pub mod evaluation {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
