//! Plan similarity metrics and a plan-generation agent pipeline.
//!
//! The library scores a predicted household task plan against a ground-truth
//! plan in two ways:
//!
//! * [`pg2s::pg2s_score`] blends sentence-embedding similarity with
//!   action-frame (verb + nouns) similarity into a single score.
//! * [`kas::kas_score`] measures positional token overlap between the key
//!   action phrases of aligned steps.
//!
//! Supporting modules provide plan I/O ([`plan`]), embedding backends
//! ([`embedding`]), part-of-speech annotation and action-frame extraction
//! ([`annotate`]), controlled plan corruption ([`corruption`]), trial corpus
//! loading and report rendering ([`corpus`]), and a three-stage plan
//! generation pipeline over pluggable model backends ([`agent`]).

pub mod agent;
pub mod annotate;
pub mod config;
pub mod corpus;
pub mod corruption;
pub mod embedding;
pub mod kas;
pub mod pg2s;
pub mod plan;

#[cfg(test)]
pub(crate) mod test_http;
