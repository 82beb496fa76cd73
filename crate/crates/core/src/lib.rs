//! Lexical retrieval with BM25, RM3 pseudo-relevance feedback and
//! generative relevance feedback (feedback terms drawn from LLM-written
//! text), plus TREC-style evaluation and grid-search tuning.
//!
//! ```
//! use grf::index::{build_index, Document};
//! use grf::retrieval::{parse_plain_query, search, Bm25Params};
//! use grf::textproc::AnalyzerConfig;
//!
//! let docs = vec![
//!     Ok(Document::new("d1", "Apples and bananas")),
//!     Ok(Document::new("d2", "A banana split")),
//! ];
//! let index = build_index(docs, &AnalyzerConfig::default(), false).unwrap();
//! let query = parse_plain_query("apple", index.analyzer());
//! let ranking = search(&index, "q1", &query, Bm25Params::default(), 10).unwrap();
//! assert_eq!(ranking.doc_ids().collect::<Vec<_>>(), ["d1"]);
//! ```

pub mod error;
pub mod eval;
pub mod feedback;
pub mod fsutil;
pub mod generation;
pub mod index;
pub mod pipeline;
pub mod retrieval;
pub mod textproc;
pub mod tuner;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/text-analysis.md")]
    mod text_analysis {}
    #[doc = include_str!("../../../book/src/indexing.md")]
    mod indexing {}
    #[doc = include_str!("../../../book/src/feedback.md")]
    mod feedback {}
    #[doc = include_str!("../../../book/src/generation.md")]
    mod generation {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/tuning.md")]
    mod tuning {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
