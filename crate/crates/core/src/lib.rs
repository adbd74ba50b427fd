//! Fact checking of short claims against web search evidence.
//!
//! [`querygen`] turns a claim into a search query and [`retrieve`] collects
//! snippets and pages for it. [`features`] scores the evidence against the
//! claim, and [`neural`] and [`svm`] hold the classifiers. [`pipeline`] ties
//! the stages together into experiments and single predictions.
//!
//! The `book/` directory of the repository has a guide with runnable
//! examples.

pub mod embed;
pub mod error;
pub mod features;
pub mod label;
pub mod neural;
pub mod pipeline;
pub mod querygen;
pub mod retrieve;
pub mod svm;
pub mod synth;
pub mod text;

pub use error::{Error, Result};
pub use label::Label;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/queries.md")]
    mod queries {}
    #[doc = include_str!("../../../book/src/retrieval.md")]
    mod retrieval {}
    #[doc = include_str!("../../../book/src/similarity.md")]
    mod similarity {}
    #[doc = include_str!("../../../book/src/models.md")]
    mod models {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
