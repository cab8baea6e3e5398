//! Comparing-the-best (CTB) dueling bandits.
//!
//! Arms carry feature vectors and a hidden preference vector `theta` orders
//! them by utility. The pairwise winning spaces of the arms cut the space of
//! preference vectors into cells; CTB scores every cell by the duels it
//! explains and duels the best arms of the two leading cells.
//!
//! The crate provides the cell geometry, explicit and fast CTB, the Bayesian
//! view of CTB with Thompson sampling, RUCB and WS-W baselines, and a seeded
//! simulation harness that writes regret curves as CSV.

pub mod arms;
pub mod baselines;
pub mod bayes;
pub mod cells;
pub mod config;
pub mod error;
pub mod experiment;
pub mod explicit;
pub mod fast;
pub mod harness;
pub mod policy;
pub mod record;

pub use error::{Error, Result};
pub use policy::DuelPolicy;
