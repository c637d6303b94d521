use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Class treated as "positive" for sensitivity: class 1.
pub const POSITIVE_CLASS: u8 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub accuracy: f64,
    /// `|sensitivity + specificity - 1|`.
    pub youden: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
    /// No positives in truth, so sensitivity was set to 0.
    pub sensitivity_undefined: bool,
    /// No negatives in truth, so specificity was set to 0.
    pub specificity_undefined: bool,
}

fn ratio(num: usize, den: usize) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

pub fn confusion_metrics(truth: &[u8], pred: &[u8], positive_class: u8) -> Result<MetricSet> {
    if truth.len() != pred.len() {
        return Err(Error::Dimension(format!(
            "{} true labels vs {} predictions",
            truth.len(),
            pred.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::InvalidArgument("no labels to score".into()));
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for (&t, &p) in truth.iter().zip(pred) {
        match (t == positive_class, p == positive_class) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (false, false) => tn += 1,
            (true, false) => fn_ += 1,
        }
    }
    let (sensitivity, su) = ratio(tp, tp + fn_);
    let (specificity, spu) = ratio(tn, tn + fp);
    Ok(MetricSet {
        accuracy: (tp + tn) as f64 / truth.len() as f64,
        youden: (sensitivity + specificity - 1.0).abs(),
        sensitivity,
        specificity,
        tp,
        fp,
        tn,
        fn_,
        sensitivity_undefined: su,
        specificity_undefined: spu,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    Accuracy,
    Youden,
    Sensitivity,
    Specificity,
}

impl Measure {
    pub const ALL: [Measure; 4] = [
        Measure::Accuracy,
        Measure::Youden,
        Measure::Sensitivity,
        Measure::Specificity,
    ];

    pub fn of(self, m: &MetricSet) -> f64 {
        match self {
            Measure::Accuracy => m.accuracy,
            Measure::Youden => m.youden,
            Measure::Sensitivity => m.sensitivity,
            Measure::Specificity => m.specificity,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Measure::Accuracy => "accuracy",
            Measure::Youden => "youden",
            Measure::Sensitivity => "sensitivity",
            Measure::Specificity => "specificity",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == s)
    }

    /// Whether the measure needs both classes in the evaluation set.
    pub fn needs_both_classes(self) -> bool {
        !matches!(self, Measure::Accuracy)
    }
}
