//! Monte-Carlo runs: simulate, trim the training data, fit, score on a fresh test set.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::LongitudinalDataset;
use crate::dists::rng_from_seed;
use crate::error::Result;
use crate::eval::{confusion_metrics, MetricSet, POSITIVE_CLASS};
use crate::harness::classifier::{fit_classifier, ClassifierKind};
use crate::harness::config::{ClassifierSettings, ResolvedScenario, ScenarioConfig};
use crate::linalg::{mean, std_dev};
use crate::robust::{trim_dataset_with_starts, TrimMethod};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateResult {
    pub replicate: usize,
    pub classifier: ClassifierKind,
    pub trimming: TrimMethod,
    /// `None` when trimming or fitting failed.
    pub metrics: Option<MetricSet>,
    pub converged: bool,
    pub runtime_ms: u64,
    pub error: Option<String>,
}

/// `(mean, sd)` pairs over the successful replicates of one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub classifier: ClassifierKind,
    pub trimming: TrimMethod,
    pub replicates: usize,
    pub failures: usize,
    pub converged: usize,
    pub accuracy: (f64, f64),
    pub youden: (f64, f64),
    pub sensitivity: (f64, f64),
    pub specificity: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOutput {
    pub rows: Vec<ReplicateResult>,
    pub summary: Vec<SummaryRow>,
}

/// SplitMix64 finalizer, used to derive independent stream seeds.
pub fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const DATA_STREAM: u64 = 1;
const TRIM_STREAM: u64 = 2;
const FIT_STREAM: u64 = 3;

/// Replicate seed for a given purpose; independent of trimming method and classifier.
pub fn replicate_seed(seed: u64, replicate: usize, stream: u64) -> u64 {
    mix_seed(mix_seed(seed, replicate as u64), stream)
}

/// Training and test sets for one replicate.
pub fn simulate_replicate(
    cfg: &ScenarioConfig,
    scenario: &ResolvedScenario,
    replicate: usize,
) -> Result<(LongitudinalDataset, LongitudinalDataset)> {
    let mut rng = rng_from_seed(replicate_seed(cfg.seed, replicate, DATA_STREAM));
    let bounds = scenario.bounds.as_ref();
    let mut draw = |n: (usize, usize)| -> Result<LongitudinalDataset> {
        let x0 = cfg.distribution.sample(&scenario.class0, bounds, n.0, &mut rng)?;
        let x1 = cfg.distribution.sample(&scenario.class1, bounds, n.1, &mut rng)?;
        LongitudinalDataset::from_classes(&x0, &x1, scenario.p, scenario.t)
    };
    let train = draw(scenario.n_train)?;
    let test = draw(scenario.n_test)?;
    Ok((train, test))
}

fn evaluate(
    kind: ClassifierKind,
    train: &LongitudinalDataset,
    test: &LongitudinalDataset,
    settings: &ClassifierSettings,
    seed: u64,
) -> Result<(MetricSet, bool)> {
    let fit = fit_classifier(kind, train, settings, seed)?;
    let pred = fit.predict_dataset(test)?;
    Ok((confusion_metrics(&test.labels, &pred, POSITIVE_CLASS)?, fit.converged))
}

/// All rows of one replicate, ordered by trimming method then classifier.
pub fn run_replicate(cfg: &ScenarioConfig, scenario: &ResolvedScenario, replicate: usize) -> Vec<ReplicateResult> {
    let settings = cfg.settings();
    let failed_all = |msg: String| -> Vec<ReplicateResult> {
        cfg.trimming
            .methods
            .iter()
            .flat_map(|&tr| {
                let msg = msg.clone();
                cfg.classifiers.iter().map(move |&k| ReplicateResult {
                    replicate,
                    classifier: k,
                    trimming: tr,
                    metrics: None,
                    converged: false,
                    runtime_ms: 0,
                    error: Some(msg.clone()),
                })
            })
            .collect()
    };
    let (train, test) = match simulate_replicate(cfg, scenario, replicate) {
        Ok(d) => d,
        Err(e) => return failed_all(format!("simulation: {e}")),
    };
    let trim_seed = replicate_seed(cfg.seed, replicate, TRIM_STREAM);
    let fit_seed = replicate_seed(cfg.seed, replicate, FIT_STREAM);
    let mut rows = Vec::with_capacity(cfg.trimming.methods.len() * cfg.classifiers.len());
    for &tr in &cfg.trimming.methods {
        let trimmed = trim_dataset_with_starts(&train, cfg.trimming.keep_fraction, tr, trim_seed, cfg.trimming.starts);
        for &k in &cfg.classifiers {
            let start = Instant::now();
            let outcome = match &trimmed {
                Ok(tds) => evaluate(k, tds, &test, &settings, fit_seed).map_err(|e| e.to_string()),
                Err(e) => Err(format!("trimming: {e}")),
            };
            let runtime_ms = start.elapsed().as_millis() as u64;
            rows.push(match outcome {
                Ok((m, conv)) => ReplicateResult {
                    replicate,
                    classifier: k,
                    trimming: tr,
                    metrics: Some(m),
                    converged: conv,
                    runtime_ms,
                    error: None,
                },
                Err(msg) => ReplicateResult {
                    replicate,
                    classifier: k,
                    trimming: tr,
                    metrics: None,
                    converged: false,
                    runtime_ms,
                    error: Some(msg),
                },
            });
        }
    }
    rows
}

/// Runs every replicate on the current rayon pool; rows come back in replicate order.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioOutput> {
    cfg.validate()?;
    let scenario = cfg.resolve()?;
    let rows: Vec<ReplicateResult> = (0..cfg.replicates)
        .into_par_iter()
        .map(|r| run_replicate(cfg, &scenario, r))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    let summary = summarize(&rows, &cfg.classifiers, &cfg.trimming.methods);
    Ok(ScenarioOutput { rows, summary })
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    match v.len() {
        0 => (f64::NAN, f64::NAN),
        1 => (v[0], f64::NAN),
        _ => (mean(v), std_dev(v)),
    }
}

/// One row per classifier × trimming cell, in configuration order.
pub fn summarize(rows: &[ReplicateResult], classifiers: &[ClassifierKind], methods: &[TrimMethod]) -> Vec<SummaryRow> {
    let mut out = Vec::new();
    for &tr in methods {
        for &k in classifiers {
            let cell: Vec<&ReplicateResult> =
                rows.iter().filter(|r| r.classifier == k && r.trimming == tr).collect();
            let ok: Vec<&MetricSet> = cell.iter().filter_map(|r| r.metrics.as_ref()).collect();
            let col = |f: fn(&MetricSet) -> f64| mean_sd(&ok.iter().map(|m| f(m)).collect::<Vec<_>>());
            out.push(SummaryRow {
                classifier: k,
                trimming: tr,
                replicates: cell.len(),
                failures: cell.len() - ok.len(),
                converged: cell.iter().filter(|r| r.converged).count(),
                accuracy: col(|m| m.accuracy),
                youden: col(|m| m.youden),
                sensitivity: col(|m| m.sensitivity),
                specificity: col(|m| m.specificity),
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> ScenarioConfig {
        ScenarioConfig {
            replicates: 2,
            n_test: (50, 50),
            n_train: Some((30, 30)),
            classifiers: vec![ClassifierKind::LdaPooled],
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn one_row_per_cell() {
        let out = run_scenario(&small_cfg()).unwrap();
        assert_eq!(out.rows.len(), 2);
        assert_eq!(out.rows[1].replicate, 1);
        let acc = out.rows[0].metrics.unwrap().accuracy;
        assert!((0.0..=1.0).contains(&acc));
        assert_eq!(out.summary.len(), 1);
        assert_eq!(out.summary[0].failures, 0);
    }

    #[test]
    fn test_set_is_never_trimmed() {
        let mut cfg = small_cfg();
        cfg.trimming.methods = vec![TrimMethod::Mcd];
        cfg.trimming.starts = 20;
        let out = run_scenario(&cfg).unwrap();
        for r in &out.rows {
            let m = r.metrics.unwrap();
            assert_eq!(m.tp + m.fp + m.tn + m.fn_, 100);
        }
    }

    #[test]
    fn seeds_differ_by_stream_and_replicate() {
        let a = replicate_seed(7, 0, DATA_STREAM);
        assert_ne!(a, replicate_seed(7, 1, DATA_STREAM));
        assert_ne!(a, replicate_seed(7, 0, TRIM_STREAM));
        assert_ne!(a, replicate_seed(8, 0, DATA_STREAM));
    }
}
