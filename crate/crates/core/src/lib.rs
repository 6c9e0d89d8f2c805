//! Semi-supervised document clustering: tf-idf corpora, K-Means and seeded
//! K-Means, pairwise-constrained K-Means, constraint-quality metrics, an
//! experiment harness and an interactive steering session model.

pub mod clustering;
pub mod constraints;
pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod experiments;
pub mod pckmeans;
pub mod seed;
pub mod sparse;
pub mod steer;

pub use error::{Error, Result};
