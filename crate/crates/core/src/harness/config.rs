//! Scenario configuration, read from TOML. Every field has a default, so a
//! file naming only `preset` and `replicates` is a complete config.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::covariance::PriorRule;
use crate::dists::{Distribution, MvnParams, TruncationBounds};
use crate::error::{Error, Result};
use crate::gee::GeeOptions;
use crate::harness::classifier::ClassifierKind;
use crate::lsvm::{default_c_grid, LsvmOptions};
use crate::robust::TrimMethod;
use crate::scenarios::{Preset, ScenarioParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmConfig {
    pub c_grid: Vec<f64>,
    pub folds: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub threshold: f64,
    pub qp_tol: f64,
    pub qp_max_iter: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        let o = LsvmOptions::default();
        Self {
            c_grid: default_c_grid(),
            folds: 5,
            tol: o.tol,
            max_iter: o.max_iter,
            threshold: o.threshold,
            qp_tol: o.qp_tol,
            qp_max_iter: o.qp_max_iter,
        }
    }
}

impl SvmConfig {
    pub fn options(&self) -> LsvmOptions {
        LsvmOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            qp_tol: self.qp_tol,
            qp_max_iter: self.qp_max_iter,
            threshold: self.threshold,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlipFlopConfig {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FlipFlopConfig {
    fn default() -> Self {
        Self { tol: 1e-4, max_iter: 100 }
    }
}

/// Prior rule per LDA variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorConfig {
    pub lda_pooled: PriorRule,
    pub lda_kp: PriorRule,
    pub lda_gee: PriorRule,
}

impl Default for PriorConfig {
    fn default() -> Self {
        Self {
            lda_pooled: PriorRule::Empirical,
            lda_kp: PriorRule::Empirical,
            lda_gee: PriorRule::Equal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrimmingConfig {
    pub methods: Vec<TrimMethod>,
    pub keep_fraction: f64,
    /// Random starts for the FAST-MCD / FAST-MVE search.
    pub starts: usize,
}

impl Default for TrimmingConfig {
    fn default() -> Self {
        Self {
            methods: vec![TrimMethod::None],
            keep_fraction: 0.9,
            starts: crate::robust::DEFAULT_STARTS,
        }
    }
}

/// Everything a classifier needs besides its training data.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierSettings {
    pub svm: SvmConfig,
    pub flipflop: FlipFlopConfig,
    pub gee: GeeOptions,
    pub priors: PriorConfig,
}

/// Settings file for the `bootstrap`, `fit` and `predict` workflows.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToolConfig {
    pub bootstrap: crate::harness::bootstrap::BootstrapConfig,
    pub svm: SvmConfig,
    pub flipflop: FlipFlopConfig,
    pub gee: GeeOptions,
    pub priors: PriorConfig,
}

impl ToolConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn settings(&self) -> ClassifierSettings {
        ClassifierSettings {
            svm: self.svm.clone(),
            flipflop: self.flipflop,
            gee: self.gee,
            priors: self.priors,
        }
    }
}

/// Explicit scenario parameters, matrices given as lists of rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomParams {
    pub p: usize,
    pub t: usize,
    pub mean0: Vec<f64>,
    pub mean1: Vec<f64>,
    pub cov0: Vec<Vec<f64>>,
    /// Defaults to `cov0`.
    pub cov1: Option<Vec<Vec<f64>>>,
    pub lower: Option<Vec<f64>>,
    pub upper: Option<Vec<f64>>,
}

fn rows_to_matrix(rows: &[Vec<f64>], d: usize, what: &str) -> Result<DMatrix<f64>> {
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(Error::Config(format!("{what} must be {d}x{d}")));
    }
    Ok(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
}

impl CustomParams {
    fn resolve(&self) -> Result<(MvnParams, MvnParams, Option<TruncationBounds>)> {
        let d = self.p * self.t;
        if d == 0 {
            return Err(Error::Config("p and t must be positive".into()));
        }
        if self.mean0.len() != d || self.mean1.len() != d {
            return Err(Error::Config(format!("means must have length p*t = {d}")));
        }
        let cov0 = rows_to_matrix(&self.cov0, d, "cov0")?;
        let cov1 = match &self.cov1 {
            Some(c) => rows_to_matrix(c, d, "cov1")?,
            None => cov0.clone(),
        };
        let c0 = MvnParams::new(DVector::from_vec(self.mean0.clone()), cov0)?;
        let c1 = MvnParams::new(DVector::from_vec(self.mean1.clone()), cov1)?;
        let bounds = match (&self.lower, &self.upper) {
            (Some(lo), Some(hi)) => Some(TruncationBounds::new(
                DVector::from_vec(lo.clone()),
                DVector::from_vec(hi.clone()),
            )?),
            (None, None) => None,
            _ => return Err(Error::Config("give both lower and upper bounds or neither".into())),
        };
        Ok((c0, c1, bounds))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: Option<String>,
    pub preset: Option<Preset>,
    pub params: Option<CustomParams>,
    pub distribution: Distribution,
    /// Defaults to the preset's reference sizes.
    pub n_train: Option<(usize, usize)>,
    pub n_test: (usize, usize),
    pub classifiers: Vec<ClassifierKind>,
    pub replicates: usize,
    pub seed: u64,
    pub trimming: TrimmingConfig,
    pub svm: SvmConfig,
    pub flipflop: FlipFlopConfig,
    pub gee: GeeOptions,
    pub priors: PriorConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            name: None,
            preset: Some(Preset::Dataset1),
            params: None,
            distribution: Distribution::Normal,
            n_train: None,
            n_test: (1000, 1000),
            classifiers: vec![ClassifierKind::LdaPooled, ClassifierKind::LdaKp, ClassifierKind::LdaGee],
            replicates: 100,
            seed: 1,
            trimming: TrimmingConfig::default(),
            svm: SvmConfig::default(),
            flipflop: FlipFlopConfig::default(),
            gee: GeeOptions::default(),
            priors: PriorConfig::default(),
        }
    }
}

/// Sampling parameters after resolving preset or explicit values.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedScenario {
    pub p: usize,
    pub t: usize,
    pub class0: MvnParams,
    pub class1: MvnParams,
    pub bounds: Option<TruncationBounds>,
    pub n_train: (usize, usize),
    pub n_test: (usize, usize),
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn for_preset(preset: Preset, distribution: Distribution) -> Self {
        Self {
            preset: Some(preset),
            distribution,
            ..Self::default()
        }
    }

    pub fn settings(&self) -> ClassifierSettings {
        ClassifierSettings {
            svm: self.svm.clone(),
            flipflop: self.flipflop,
            gee: self.gee,
            priors: self.priors,
        }
    }

    pub fn label(&self) -> String {
        if let Some(n) = &self.name {
            return n.clone();
        }
        let base = match (&self.params, self.preset) {
            (Some(_), _) => "custom",
            (None, Some(p)) => p.name(),
            (None, None) => "unset",
        };
        format!("{base}-{}", self.distribution.name())
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::Config("replicates must be at least 1".into()));
        }
        if self.n_test.0 == 0 || self.n_test.1 == 0 {
            return Err(Error::Config("n_test needs at least 1 subject per class".into()));
        }
        let k = self.trimming.keep_fraction;
        if !(k > 0.5 && k <= 1.0) {
            return Err(Error::Config(format!("keep_fraction {k} outside (0.5, 1]")));
        }
        if self.trimming.methods.is_empty() || self.classifiers.is_empty() {
            return Err(Error::Config("need at least one trimming method and one classifier".into()));
        }
        if self.svm.c_grid.is_empty() || self.svm.c_grid.iter().any(|&c| !(c > 0.0)) {
            return Err(Error::Config("svm.c_grid must be nonempty and positive".into()));
        }
        if self.svm.folds < 2 {
            return Err(Error::Config("svm.folds must be at least 2".into()));
        }
        self.resolve().map(|_| ())
    }

    pub fn resolve(&self) -> Result<ResolvedScenario> {
        let (p, t, class0, class1, bounds, default_n) = match (&self.params, self.preset) {
            (Some(c), _) => {
                let (c0, c1, b) = c.resolve()?;
                (c.p, c.t, c0, c1, b, None)
            }
            (None, Some(preset)) => {
                let ScenarioParams { p, t, class0, class1, bounds, n_train } = preset.params();
                (p, t, class0, class1, Some(bounds), Some(n_train))
            }
            (None, None) => return Err(Error::Config("need either preset or params".into())),
        };
        let n_train = self
            .n_train
            .or(default_n)
            .ok_or_else(|| Error::Config("n_train is required with explicit params".into()))?;
        if n_train.0 < 2 || n_train.1 < 2 {
            return Err(Error::Config("n_train needs at least 2 subjects per class".into()));
        }
        if self.distribution == Distribution::Truncnorm && bounds.is_none() {
            return Err(Error::Config("truncnorm needs lower and upper bounds".into()));
        }
        Ok(ResolvedScenario { p, t, class0, class1, bounds, n_train, n_test: self.n_test })
    }
}
