//! Bits-over-Random (BoR): chance-corrected retrieval selectivity.
//!
//! BoR compares an observed success rate against the probability that a
//! uniformly random top-K would have succeeded under the same rule, and reports
//! the ratio on a log2 scale. Zero bits means random-level selectivity; every
//! additional bit doubles it.
//!
//! Crate layout:
//!
//! - [`probability`]: exact hypergeometric baselines plus binomial and Poisson
//!   approximations, with a dual value/log-complement representation.
//! - [`metrics`]: BoR, enrichment factor, ceilings, depth decomposition and the
//!   recall-rule variant.
//! - [`ingest`]: qrels, run and corpus parsers; class-label relevance.
//! - [`evaluator`]: per-query success, macro aggregation, depth sweeps and
//!   bootstrap confidence intervals.
//! - [`bm25`]: a small lexical retriever for desk-scale corpora.
//! - [`simulator`]: Monte Carlo oracle and synthetic datasets.
//! - [`advisor`]: collapse-zone diagnostics and depth recommendations.

pub mod advisor;
pub mod bm25;
pub mod error;
pub mod evaluator;
pub mod ingest;
pub mod metrics;
pub mod numeric;
pub mod probability;
pub mod rng;
pub mod simulator;

pub use error::{BorError, Result};
pub use probability::{BaselineParams, Probability};
