//! Configuration, data ingestion, the simulation pipeline and the bootstrap
//! table driver.

pub mod bootstrap;
pub mod classifier;
pub mod config;
pub mod csv_io;
pub mod scenario;

pub use bootstrap::{run_bootstrap, BootstrapCell, BootstrapConfig};
pub use classifier::{fit_classifier, ClassifierKind, FittedClassifier};
pub use config::{ClassifierSettings, ScenarioConfig, ToolConfig};
pub use csv_io::{emit_results_csv, emit_roc_points_csv, load_long_csv};
pub use scenario::{run_scenario, ReplicateResult, ScenarioOutput, SummaryRow};
