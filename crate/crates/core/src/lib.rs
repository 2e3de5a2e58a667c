//! Secure distributed matrix factorization.
//!
//! Clients keep their ratings and user factors; the server only ever holds the
//! item factor matrix and receives item-gradient messages. Which items a client
//! reports on is hidden by a two-stage randomized response (a permanent
//! perturbation of the rated-item bit vector followed by fresh per-round
//! sampling), and gradients for unrated items are built from fake prediction
//! errors drawn from a truncated normal whose bound is calibrated to a privacy
//! budget.
//!
//! Module map:
//!
//! - [`data`]: rating ingestion, splits, subsampling, synthetic corpora.
//! - [`mf`]: SGLD matrix factorization primitives and the centralized oracle.
//! - [`rr`]: randomized response samplers and budget solvers.
//! - [`fake`]: error statistics, the `alpha` solver and the truncated sampler.
//! - [`protocol`]: client/server state machines, wire codec and transports.
//! - [`bpr`]: pairwise ranking variant for one-class feedback.
//! - [`eval`]: metrics, the input-perturbation baseline and experiment runner.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bpr;
pub mod data;
pub mod error;
pub mod eval;
pub mod fake;
pub mod mf;
pub mod protocol;
pub mod rng;
pub mod rr;

pub use error::{Error, Result};
