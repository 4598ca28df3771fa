//! Quality-plus-diversity subset selection.
//!
//! Picks `k` items out of an embedding dataset so as to maximize
//!
//! ```text
//! F(S) = λ·Q(S) + (1 − λ)·D(S)
//! ```
//!
//! where `Q` sums item quality scores and `D` sums pairwise Euclidean
//! distances over ordered pairs. Three families of selectors are provided:
//!
//! - [`greedy`]: the monolithic greedy (MMR-style) selector,
//! - [`selectors::dgds_select`]: greedy over random partitions followed by a
//!   final greedy over the union of the partition picks,
//! - [`selectors::muss_select`]: multilevel selection that first greedily
//!   picks clusters, then items inside the chosen clusters, then refines the
//!   union (augmented with the global top-k quality items).
//!
//! [`oracle`] enumerates all k-subsets on small instances and checks the
//! approximation guarantees of the selectors against the exact optimum.
//! [`bench`] generates synthetic data and runs reproducible benchmarks.

pub mod bench;
pub mod clustering;
pub mod dataset;
pub mod error;
pub mod greedy;
pub mod objective;
pub mod oracle;
pub mod params;
pub mod seed;
pub mod selectors;

pub use dataset::{distance, Dataset, Item};
pub use error::{Error, Result};
pub use objective::{diversity_sum, marginal_gain, objective, quality_sum, MeanScaled, Objective};
pub use params::{Criterion, ParamsEcho, SelectionParams, SelectionResult, StageTimings};
