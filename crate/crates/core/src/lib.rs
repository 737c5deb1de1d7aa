//! Cross-domain text classification with a topic model that groups topics by
//! class label.
//!
//! Topics come in two kinds: *common* topics shared by the source and target
//! domains, and *specific* topics private to one domain. Both kinds are
//! organized into groups, one per class label, and the two domains are
//! aligned at the group level: the specific topics of a group in either
//! domain are tied together only through that group's common topics. Source
//! tokens can be pinned to their document's label (partial supervision),
//! after which a target document's label is read off its group mixture.
//!
//! The crate is organized along the pipeline:
//!
//! - [`corpus`]: tokenization, vocabulary and document encoding.
//! - [`model`]: hyperparameters, assignments, count tables, the exact joint
//!   log-probability and posterior estimates.
//! - [`sampler`]: collapsed Gibbs sampling of `(label, type, topic)` per token.
//! - [`inference`]: target labels, perplexity and topic reports.
//! - [`eval`]: accuracy, paired t-test, logistic regression over topic
//!   features and parameter sweeps.
//! - [`io`]: checkpoints and parameter files.

pub mod corpus;
pub mod error;
pub mod eval;
pub mod inference;
pub mod io;
pub mod model;
pub mod sampler;
pub mod synthetic;

pub use error::{Error, Result};

// The guide's snippets run as doc-tests, one module per chapter.
#[cfg(doctest)]
pub mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/corpus.md")]
    pub mod corpus {}
    #[doc = include_str!("../../../book/src/model.md")]
    pub mod model {}
    #[doc = include_str!("../../../book/src/sampling.md")]
    pub mod sampling {}
    #[doc = include_str!("../../../book/src/inference.md")]
    pub mod inference {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    pub mod evaluation {}
    #[doc = include_str!("../../../book/src/reproducibility.md")]
    pub mod reproducibility {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
