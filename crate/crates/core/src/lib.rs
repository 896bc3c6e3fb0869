//! Learning, fitting, evaluating and ranking discrete dynamic Bayesian
//! networks when the variable ordering is unknown.
//!
//! Competing filter rankings (Cramér's V, χ², information gain) each supply
//! a node ordering to K2 for the intra-slice DAG; REVEAL adds the
//! inter-slice edges; EM fits the conditional probability tables through
//! exact junction-tree inference on the unrolled network; bootstrap AP and
//! AUCROC rank the resulting models.
//!
//! The modules follow the pipeline:
//!
//! - [`dataset`]: CSV ingestion, binning, KDIGO labels, splits and balancing
//! - [`ranking`]: contingency statistics and variable orderings
//! - [`structure`]: K2 and REVEAL search, two-slice structures
//! - [`params`]: CPTs, maximum likelihood and EM
//! - [`inference`]: junction trees, unrolled networks, the enumeration oracle
//! - [`eval`]: metrics, bootstrap CIs, operating points, baselines
//! - [`report`]: DOT graphs and the artifact tree
//! - [`synthgen`]: ancestral sampling of ground-truth panels
//! - [`pipeline`]: configuration and end-to-end orchestration

pub mod dataset;
pub mod error;
pub mod eval;
pub mod inference;
pub mod params;
pub mod pipeline;
pub mod ranking;
pub mod report;
pub mod sequences;
pub mod stats;
pub mod structure;
pub mod synthgen;

pub use error::{Error, Result};
