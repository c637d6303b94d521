//! Linear classifiers for multivariate repeated-measures data.
//!
//! Four classifiers (LDA with pooled, Kronecker and GEE covariance, and a
//! longitudinal linear SVM), MCD/MVE trimming, scenario samplers, the .632+
//! bootstrap and a Monte-Carlo harness.

pub mod covariance;
pub mod dataset;
pub mod dists;
pub mod error;
pub mod eval;
pub mod gee;
pub mod harness;
pub mod lda;
pub mod linalg;
pub mod lsvm;
pub mod robust;
pub mod scenarios;

pub use dataset::LongitudinalDataset;
pub use error::{Error, Result};
