//! Bibliometric innovation measures over publication corpora.
//!
//! The crate turns line-delimited publication records into three families of
//! per-paper scores and aggregates them into per-country annual series:
//!
//! * **emergence**: keyword areas whose members converge in a random-walk
//!   embedding of the author/keyword hypergraph while the central keyword
//!   grows exponentially and is prevalent in its field;
//! * **prescience**: papers whose keyword (content) or referenced-venue
//!   (context) combination was surprising under a Poisson latent-factor model
//!   of their publication year and became unsurprising two years later;
//! * **disruption**: the CD index over a five-year citation window.
//!
//! [`synthgen`] builds corpora with planted ground truth for all of the above,
//! and [`pipeline`] chains the stages with on-disk artifacts.

pub mod corpus;
pub mod disruption;
pub mod embedding;
pub mod emergence;
pub mod error;
pub mod hypergraph;
pub mod pipeline;
pub mod prescience;
pub mod report;
pub mod select;
pub mod synthgen;
mod seed;

pub use error::{Error, Result};
