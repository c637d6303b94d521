//! .632+ bootstrap estimate of classifier performance with a percentile-type interval.
//!
//! Point estimate: `θ = (1 - w) θ_app + w θ_oob` with `w = 0.632 / (1 - 0.368 R)`,
//! `R = (θ_app - θ_oob) / (θ_app - γ)` clipped to `[0, 1]` and `γ` the
//! no-information value of the measure. Interval: `w_b = θ_bb - θ_app` per
//! resample, `ξ_q` its type-7 quantiles, and `[θ - ξ_{1-α/2}, θ + ξ_{α/2}]`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::LongitudinalDataset;
use crate::dists::rng_from_seed;
use crate::error::{Error, Result};
use crate::eval::metrics::{confusion_metrics, Measure, MetricSet, POSITIVE_CLASS};
use crate::linalg::{mean, quantile_sorted};

pub const MIN_REPLICATES: usize = 50;
pub const MAX_REDRAWS: usize = 10;

/// Something that can be trained on one dataset and label another.
pub trait Pipeline: Sync {
    fn fit_predict(&self, train: &LongitudinalDataset, test: &LongitudinalDataset, seed: u64) -> Result<Vec<u8>>;
}

impl<F> Pipeline for F
where
    F: Fn(&LongitudinalDataset, &LongitudinalDataset, u64) -> Result<Vec<u8>> + Sync,
{
    fn fit_predict(&self, train: &LongitudinalDataset, test: &LongitudinalDataset, seed: u64) -> Result<Vec<u8>> {
        self(train, test, seed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CiRule {
    /// `[θ - ξ_{1-α/2}, θ + ξ_{α/2}]`, endpoints sorted and clamped to `[0, 1]`.
    #[default]
    Displayed,
    /// Basic bootstrap `[θ - ξ_{1-α/2}, θ - ξ_{α/2}]`, clamped to `[0, 1]`.
    Basic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapEstimate {
    pub measure: Measure,
    pub theta_632plus: f64,
    pub apparent: f64,
    pub oob: f64,
    pub gamma: f64,
    pub relative_overfit: f64,
    pub weight_w: f64,
    pub ci: (f64, f64),
    pub ci_basic: (f64, f64),
    pub b_used: usize,
}

/// Per-resample outcome kept for aggregation.
#[derive(Debug, Clone, Copy)]
struct Replicate {
    oob: MetricSet,
    boot: MetricSet,
}

/// No-information value of a measure given true class proportions `p`
/// and predicted proportions `q` (index = class).
pub fn no_information(measure: Measure, p: [f64; 2], q: [f64; 2]) -> f64 {
    match measure {
        Measure::Accuracy => p[0] * q[0] + p[1] * q[1],
        Measure::Youden => 0.0,
        Measure::Sensitivity => q[POSITIVE_CLASS as usize],
        Measure::Specificity => q[1 - POSITIVE_CLASS as usize],
    }
}

pub fn relative_overfit(apparent: f64, oob: f64, gamma: f64) -> f64 {
    let den = apparent - gamma;
    if den <= 0.0 {
        return 0.0;
    }
    ((apparent - oob) / den).clamp(0.0, 1.0)
}

pub fn weight(r: f64) -> f64 {
    0.632 / (1.0 - 0.368 * r)
}

/// Interval endpoints from the sorted optimism weights `w_b`.
pub fn interval(theta: f64, sorted_wb: &[f64], alpha: f64, rule: CiRule) -> (f64, f64) {
    let lo_q = quantile_sorted(sorted_wb, alpha / 2.0);
    let hi_q = quantile_sorted(sorted_wb, 1.0 - alpha / 2.0);
    let (a, b) = match rule {
        CiRule::Displayed => (theta - hi_q, theta + lo_q),
        CiRule::Basic => (theta - hi_q, theta - lo_q),
    };
    let (a, b) = (a.clamp(0.0, 1.0), b.clamp(0.0, 1.0));
    (a.min(b), a.max(b))
}

/// Stratified resample: each class is drawn with replacement at its own size.
fn stratified_resample<R: Rng>(class_idx: &[Vec<usize>; 2], rng: &mut R) -> Vec<usize> {
    let mut out = Vec::with_capacity(class_idx[0].len() + class_idx[1].len());
    for idx in class_idx {
        for _ in 0..idx.len() {
            out.push(idx[rng.random_range(0..idx.len())]);
        }
    }
    out
}

fn run_replicate(
    ds: &LongitudinalDataset,
    class_idx: &[Vec<usize>; 2],
    pipeline: &dyn Pipeline,
    seed: u64,
) -> Option<Replicate> {
    let mut rng = rng_from_seed(seed);
    for _ in 0..=MAX_REDRAWS {
        let sample = stratified_resample(class_idx, &mut rng);
        let mut in_bag = vec![false; ds.n()];
        for &j in &sample {
            in_bag[j] = true;
        }
        let oob: Vec<usize> = (0..ds.n()).filter(|&j| !in_bag[j]).collect();
        let train = ds.select(&sample);
        let test = ds.select(&oob);
        if test.n_class(0) == 0 || test.n_class(1) == 0 || train.n_class(0) == 0 || train.n_class(1) == 0 {
            continue;
        }
        let pred_oob = pipeline.fit_predict(&train, &test, seed).ok()?;
        let pred_boot = pipeline.fit_predict(&train, &train, seed).ok()?;
        return Some(Replicate {
            oob: confusion_metrics(&test.labels, &pred_oob, POSITIVE_CLASS).ok()?,
            boot: confusion_metrics(&train.labels, &pred_boot, POSITIVE_CLASS).ok()?,
        });
    }
    None
}

/// Runs the resamples once and summarizes every requested measure.
pub fn bootstrap_632plus_all(
    ds: &LongitudinalDataset,
    pipeline: &dyn Pipeline,
    measures: &[Measure],
    b: usize,
    alpha: f64,
    seed: u64,
) -> Result<Vec<BootstrapEstimate>> {
    if b < MIN_REPLICATES {
        return Err(Error::InvalidArgument(format!(
            "bootstrap needs B >= {MIN_REPLICATES}, got {b}"
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha {alpha} outside (0, 1)")));
    }
    let class_idx = [ds.class_indices(0), ds.class_indices(1)];
    if class_idx[0].is_empty() || class_idx[1].is_empty() {
        return Err(Error::InvalidArgument("bootstrap needs both classes".into()));
    }
    let pred_app = pipeline.fit_predict(ds, ds, seed)?;
    let app = confusion_metrics(&ds.labels, &pred_app, POSITIVE_CLASS)?;
    let n = ds.n() as f64;
    let p = [class_idx[0].len() as f64 / n, class_idx[1].len() as f64 / n];
    let q1 = pred_app.iter().filter(|&&g| g == 1).count() as f64 / n;
    let q = [1.0 - q1, q1];

    let reps: Vec<Replicate> = (0..b as u64)
        .into_par_iter()
        .map(|r| run_replicate(ds, &class_idx, pipeline, seed.wrapping_add(1 + r)))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    if reps.is_empty() {
        return Err(Error::BootstrapFailed(format!("0 of {b} resamples usable")));
    }

    Ok(measures
        .iter()
        .map(|&m| {
            let apparent = m.of(&app);
            let oob = mean(&reps.iter().map(|r| m.of(&r.oob)).collect::<Vec<_>>());
            let gamma = no_information(m, p, q);
            let rr = relative_overfit(apparent, oob, gamma);
            let w = weight(rr);
            let theta = (1.0 - w) * apparent + w * oob;
            let mut wb: Vec<f64> = reps.iter().map(|r| m.of(&r.boot) - apparent).collect();
            wb.sort_by(|a, b| a.total_cmp(b));
            BootstrapEstimate {
                measure: m,
                theta_632plus: theta,
                apparent,
                oob,
                gamma,
                relative_overfit: rr,
                weight_w: w,
                ci: interval(theta, &wb, alpha, CiRule::Displayed),
                ci_basic: interval(theta, &wb, alpha, CiRule::Basic),
                b_used: reps.len(),
            }
        })
        .collect())
}

pub fn bootstrap_632plus(
    ds: &LongitudinalDataset,
    pipeline: &dyn Pipeline,
    measure: Measure,
    b: usize,
    alpha: f64,
    seed: u64,
) -> Result<BootstrapEstimate> {
    Ok(bootstrap_632plus_all(ds, pipeline, &[measure], b, alpha, seed)?.remove(0))
}
