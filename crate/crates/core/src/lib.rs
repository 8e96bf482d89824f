//! Sublinear-query estimation of the longest increasing subsequence and the
//! distance to monotonicity of an array that can only be read by queries.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: points, boxes, grids, strips and box chains;
//! - [`oracle`]: query-counted array access and argument-keyed randomness;
//! - [`exact`]: exact LIS and brute-force checkers;
//! - [`splitter`]: splitter search;
//! - [`gridding`]: value nets, grids and longest grid chains;
//! - [`estimator`]: the recursive estimator in its basic and improved forms;
//! - [`distance`]: distance-to-monotonicity intervals;
//! - [`harness`]: generators, the naive baseline, experiments and reports.

pub mod distance;
pub mod error;
pub mod estimator;
pub mod exact;
pub mod gridding;
pub mod harness;
pub mod model;
pub mod oracle;
pub mod splitter;

pub use error::{Error, Result};
pub use model::{
    Box, BoxChain, Grid, Index, IndexInterval, Point, StripDecomposition, Value, ValueInterval,
};
pub use oracle::{Key, Pid, RandomStream, RandomnessLedger, SequenceOracle};
