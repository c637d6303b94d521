//! The four classifiers behind one fit/predict interface.

use serde::{Deserialize, Serialize};

use crate::covariance::{kronecker_params, pooled_params};
use crate::dataset::LongitudinalDataset;
use crate::error::{Error, Result};
use crate::gee::{fit_joint_gee, gee_lda_params, GeeDesign};
use crate::harness::config::ClassifierSettings;
use crate::lda::{lda_train, LdaModel};
use crate::lsvm::{select_c_grid, LsvmClassifier};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    LdaPooled,
    LdaKp,
    LdaGee,
    Lsvm,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 4] = [
        ClassifierKind::LdaPooled,
        ClassifierKind::LdaKp,
        ClassifierKind::LdaGee,
        ClassifierKind::Lsvm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::LdaPooled => "lda_pooled",
            ClassifierKind::LdaKp => "lda_kp",
            ClassifierKind::LdaGee => "lda_gee",
            ClassifierKind::Lsvm => "lsvm",
        }
    }
}

impl std::str::FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown classifier '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FittedModel {
    Lda(LdaModel),
    Lsvm(LsvmClassifier),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedClassifier {
    pub classifier: ClassifierKind,
    pub p: usize,
    pub t: usize,
    pub model: FittedModel,
    /// Iterative fits (flip-flop, GEE, LSVM alternation) reached their tolerance.
    pub converged: bool,
}

impl FittedClassifier {
    pub fn predict(&self, x: &[f64]) -> u8 {
        match &self.model {
            FittedModel::Lda(m) => m.predict(x),
            FittedModel::Lsvm(m) => m.predict(x),
        }
    }

    pub fn predict_dataset(&self, ds: &LongitudinalDataset) -> Result<Vec<u8>> {
        if ds.p != self.p || ds.t != self.t {
            return Err(Error::Dimension(format!(
                "model expects p={}, t={} but data has p={}, t={}",
                self.p, self.t, ds.p, ds.t
            )));
        }
        let mut row = vec![0.0; ds.dim()];
        Ok((0..ds.n())
            .map(|j| {
                for (k, v) in row.iter_mut().enumerate() {
                    *v = ds.x[(j, k)];
                }
                self.predict(&row)
            })
            .collect())
    }
}

/// Fits one classifier. `seed` drives the LSVM cross-validation folds.
pub fn fit_classifier(
    kind: ClassifierKind,
    train: &LongitudinalDataset,
    settings: &ClassifierSettings,
    seed: u64,
) -> Result<FittedClassifier> {
    if train.n_class(0) < 2 || train.n_class(1) < 2 {
        return Err(Error::InvalidArgument("each class needs at least 2 training subjects".into()));
    }
    let (model, converged) = match kind {
        ClassifierKind::LdaPooled => {
            let params = pooled_params(train, settings.priors.lda_pooled)?;
            (FittedModel::Lda(lda_train(&params)?), true)
        }
        ClassifierKind::LdaKp => {
            let ff = settings.flipflop;
            let (params, conv) = kronecker_params(train, settings.priors.lda_kp, ff.tol, ff.max_iter)?;
            (FittedModel::Lda(lda_train(&params)?), conv)
        }
        ClassifierKind::LdaGee => {
            let design = GeeDesign::new(train.p, train.t);
            let (x0, x1) = (train.class_matrix(0), train.class_matrix(1));
            let f0 = fit_joint_gee(&x0, design, &settings.gee)?;
            let f1 = fit_joint_gee(&x1, design, &settings.gee)?;
            let params = gee_lda_params(&f0, x0.nrows(), &f1, x1.nrows(), settings.priors.lda_gee)?;
            (FittedModel::Lda(lda_train(&params)?), f0.converged && f1.converged)
        }
        ClassifierKind::Lsvm => {
            let opts = settings.svm.options();
            let c = select_c_grid(train, &settings.svm.c_grid, settings.svm.folds, seed, &opts)?;
            let clf = LsvmClassifier::fit(train, c, &opts)?;
            let conv = clf.model.converged;
            (FittedModel::Lsvm(clf), conv)
        }
    };
    Ok(FittedClassifier { classifier: kind, p: train.p, t: train.t, model, converged })
}
