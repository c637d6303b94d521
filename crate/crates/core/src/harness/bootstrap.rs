//! .632+ bootstrap over every classifier × trimming cell of a reference dataset.

use serde::{Deserialize, Serialize};

use crate::dataset::LongitudinalDataset;
use crate::error::{Error, Result};
use crate::eval::{bootstrap_632plus_all, BootstrapEstimate, Measure};
use crate::harness::classifier::{fit_classifier, ClassifierKind};
use crate::harness::config::ClassifierSettings;
use crate::robust::{trim_dataset_with_starts, TrimMethod, DEFAULT_STARTS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BootstrapConfig {
    pub classifiers: Vec<ClassifierKind>,
    pub trimming: Vec<TrimMethod>,
    pub keep_fraction: f64,
    pub starts: usize,
    pub measures: Vec<Measure>,
    pub b: usize,
    pub alpha: f64,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            classifiers: ClassifierKind::ALL.to_vec(),
            trimming: vec![TrimMethod::None, TrimMethod::Mve, TrimMethod::Mcd],
            keep_fraction: 0.9,
            starts: DEFAULT_STARTS,
            measures: Measure::ALL.to_vec(),
            b: 200,
            alpha: 0.05,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapCell {
    pub classifier: ClassifierKind,
    pub trimming: TrimMethod,
    pub measure: Measure,
    /// `None` marks an NA cell, e.g. trimming could not be computed.
    pub estimate: Option<BootstrapEstimate>,
    pub error: Option<String>,
}

impl BootstrapCell {
    /// `mean (lo, hi)` at three decimals, or `NA`.
    pub fn display(&self) -> String {
        match &self.estimate {
            Some(e) => format!("{:.3} ({:.3}, {:.3})", e.theta_632plus, e.ci.0, e.ci.1),
            None => "NA".into(),
        }
    }
}

/// Pipeline for one cell: trim the training data (per class), fit, predict.
fn pipeline(
    kind: ClassifierKind,
    trimming: TrimMethod,
    cfg: &BootstrapConfig,
    settings: &ClassifierSettings,
    train: &LongitudinalDataset,
    test: &LongitudinalDataset,
    seed: u64,
) -> Result<Vec<u8>> {
    let trimmed = trim_dataset_with_starts(train, cfg.keep_fraction, trimming, seed, cfg.starts)?;
    fit_classifier(kind, &trimmed, settings, seed)?.predict_dataset(test)
}

pub fn run_bootstrap(
    ds: &LongitudinalDataset,
    cfg: &BootstrapConfig,
    settings: &ClassifierSettings,
) -> Result<Vec<BootstrapCell>> {
    if cfg.b < crate::eval::bootstrap::MIN_REPLICATES {
        return Err(Error::InvalidArgument(format!(
            "bootstrap needs B >= {}, got {}",
            crate::eval::bootstrap::MIN_REPLICATES,
            cfg.b
        )));
    }
    if cfg.measures.is_empty() {
        return Err(Error::InvalidArgument("no measures requested".into()));
    }
    let mut cells = Vec::new();
    for &tr in &cfg.trimming {
        for &k in &cfg.classifiers {
            let f = |train: &LongitudinalDataset, test: &LongitudinalDataset, seed: u64| {
                pipeline(k, tr, cfg, settings, train, test, seed)
            };
            match bootstrap_632plus_all(ds, &f, &cfg.measures, cfg.b, cfg.alpha, cfg.seed) {
                Ok(ests) => cells.extend(ests.into_iter().map(|e| BootstrapCell {
                    classifier: k,
                    trimming: tr,
                    measure: e.measure,
                    estimate: Some(e),
                    error: None,
                })),
                Err(e) => cells.extend(cfg.measures.iter().map(|&m| BootstrapCell {
                    classifier: k,
                    trimming: tr,
                    measure: m,
                    estimate: None,
                    error: Some(e.to_string()),
                })),
            }
        }
    }
    Ok(cells)
}
