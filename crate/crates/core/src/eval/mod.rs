//! Performance measures, Mardia's skewness test and the .632+ bootstrap.

pub mod bootstrap;
pub mod mardia;
pub mod metrics;

pub use bootstrap::{bootstrap_632plus, bootstrap_632plus_all, BootstrapEstimate, CiRule, Pipeline};
pub use mardia::{mardia_skewness, MardiaSkewness};
pub use metrics::{confusion_metrics, Measure, MetricSet, POSITIVE_CLASS};
