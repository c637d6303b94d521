//! Longitudinal linear SVM.
//!
//! Each subject is collapsed to `x̃ = Σ_k β_k x_k` (a p-vector) with `β_1 = 1`.
//! Fitting alternates a standard soft-margin dual in α at fixed β with a
//! closed-form β update at fixed α.
//!
//! Labels: class 0 is the positive class (`y = +1`), class 1 is `y = -1`.

pub mod qp;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dataset::LongitudinalDataset;
use crate::dists::rng_from_seed;
use crate::error::{Error, Result};
use crate::linalg::Cholesky;
use qp::{solve_qp_warm, QpOptions, QpProblem};

pub fn label_to_sign(class: u8) -> f64 {
    if class == 0 {
        1.0
    } else {
        -1.0
    }
}

pub fn sign_to_label(y: f64) -> u8 {
    if y > 0.0 {
        0
    } else {
        1
    }
}

/// Per-coordinate training mean and standard deviation (divisor n - 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: DVector<f64>,
    pub sd: DVector<f64>,
}

impl Standardizer {
    pub fn fit(x: &DMatrix<f64>) -> Result<Self> {
        let n = x.nrows();
        if n < 2 {
            return Err(Error::InvalidArgument("standardization needs n >= 2".into()));
        }
        let mean = crate::linalg::col_means(x);
        let sd = DVector::from_fn(x.ncols(), |c, _| {
            let m = mean[c];
            (x.column(c).iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        });
        if let Some(c) = sd.iter().position(|&s| !(s > 0.0)) {
            return Err(Error::ZeroVariance(c));
        }
        Ok(Self { mean, sd })
    }

    pub fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(x.nrows(), x.ncols(), |i, c| (x[(i, c)] - self.mean[c]) / self.sd[c])
    }

    pub fn apply_row(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(c, v)| (v - self.mean[c]) / self.sd[c])
            .collect()
    }
}

pub fn standardize(train: &LongitudinalDataset) -> Result<(LongitudinalDataset, Standardizer)> {
    let s = Standardizer::fit(&train.x)?;
    let mut out = train.clone();
    out.x = s.apply(&train.x);
    Ok((out, s))
}

/// Block `(k1, k2)` is the n×n matrix `X_{k1} X_{k2}ᵀ` with `X_k` the label-signed
/// n×p slice at time k.
pub fn build_gram_blocks(ds: &LongitudinalDataset) -> Vec<Vec<DMatrix<f64>>> {
    let slices: Vec<DMatrix<f64>> = (0..ds.t).map(|k| signed_slice(ds, k)).collect();
    (0..ds.t)
        .map(|k1| (0..ds.t).map(|k2| &slices[k1] * slices[k2].transpose()).collect())
        .collect()
}

fn signed_slice(ds: &LongitudinalDataset, k: usize) -> DMatrix<f64> {
    DMatrix::from_fn(ds.n(), ds.p, |j, l| label_to_sign(ds.labels[j]) * ds.value(j, l, k))
}

/// `Σ_k β_k x_{jk}` for every subject, as an n×p matrix.
fn collapse(ds: &LongitudinalDataset, beta: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(ds.n(), ds.p, |j, l| {
        (0..ds.t).map(|k| beta[k] * ds.value(j, l, k)).sum::<f64>()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LsvmOptions {
    /// Stop when successive `α_m` differ by less than this (Euclidean).
    pub tol: f64,
    pub max_iter: usize,
    pub qp_tol: f64,
    pub qp_max_iter: usize,
    /// Decision threshold on h(x); class 1 (`y = -1`) iff `h(x) < threshold`.
    pub threshold: f64,
}

impl Default for LsvmOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 100,
            qp_tol: 1e-8,
            qp_max_iter: 1_000_000,
            threshold: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LsvmModel {
    pub alpha: DVector<f64>,
    pub beta: DVector<f64>,
    pub w: DVector<f64>,
    pub b: f64,
    pub c_reg: f64,
    pub threshold: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Dual objective after each α-step.
    pub dual_objectives: Vec<f64>,
}

fn alpha_problem(xt: &DMatrix<f64>, y: &DVector<f64>, c_reg: f64) -> QpProblem {
    let n = xt.nrows();
    let k = xt * xt.transpose();
    QpProblem {
        q: DMatrix::from_fn(n, n, |i, j| y[i] * y[j] * k[(i, j)]),
        linear: DVector::from_element(n, -1.0),
        lo: DVector::zeros(n),
        hi: DVector::from_element(n, c_reg),
        eq: Some((y.clone(), 0.0)),
    }
}

/// Minimizes `½ βᵀMβ` with `β_1 = 1`, where `M = V Vᵀ` and `V_k = Σ_j α_j y_j x_{jk}`.
fn beta_step(ds: &LongitudinalDataset, alpha: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
    let (t, p) = (ds.t, ds.p);
    let mut beta = DVector::from_element(t, 1.0);
    if t == 1 {
        return beta;
    }
    let v = DMatrix::from_fn(t, p, |k, l| {
        (0..ds.n()).map(|j| alpha[j] * y[j] * ds.value(j, l, k)).sum::<f64>()
    });
    let m = &v * v.transpose();
    let r = t - 1;
    let mrr = m.view((1, 1), (r, r)).into_owned();
    let rhs = -m.view((1, 0), (r, 1)).into_owned();
    let chol = Cholesky::new(&mrr).or_else(|_| {
        let mut reg = mrr.clone();
        for i in 0..r {
            reg[(i, i)] += 1e-10;
        }
        Cholesky::new(&reg)
    });
    if let Ok(chol) = chol {
        let sol = chol.solve_vec(&DVector::from_column_slice(rhs.as_slice()));
        for i in 0..r {
            beta[i + 1] = sol[i];
        }
    }
    beta
}

/// Fits on data that is already standardized.
pub fn fit_lsvm(ds: &LongitudinalDataset, c_reg: f64, opts: &LsvmOptions) -> Result<LsvmModel> {
    if !(c_reg > 0.0) {
        return Err(Error::InvalidArgument(format!("C must be positive, got {c_reg}")));
    }
    if ds.n_class(0) == 0 || ds.n_class(1) == 0 {
        return Err(Error::InvalidArgument("LSVM needs both classes".into()));
    }
    let n = ds.n();
    let y = DVector::from_iterator(n, ds.labels.iter().map(|&g| label_to_sign(g)));
    let qp_opts = QpOptions {
        tol: opts.qp_tol,
        max_iter: opts.qp_max_iter,
    };
    let mut beta = DVector::from_element(ds.t, 1.0);
    let mut alpha = DVector::zeros(n);
    let mut prev_am: Option<DVector<f64>> = None;
    let mut converged = false;
    let mut iterations = 0;
    let mut dual_objectives = Vec::new();
    for it in 1..=opts.max_iter.max(1) {
        iterations = it;
        let xt = collapse(ds, beta.as_slice());
        let sol = solve_qp_warm(&alpha_problem(&xt, &y, c_reg), Some(&alpha), qp_opts)?;
        alpha = sol.x;
        dual_objectives.push(sol.objective);
        debug_assert!(alpha.dot(&y).abs() <= 1e-8 * (1.0 + c_reg * n as f64));
        beta = beta_step(ds, &alpha, &y);
        let am = alpha_m(&alpha, &beta);
        if let Some(prev) = &prev_am {
            if (&am - prev).norm() < opts.tol {
                converged = true;
                break;
            }
        }
        prev_am = Some(am);
    }
    let xt = collapse(ds, beta.as_slice());
    let w = DVector::from_fn(ds.p, |l, _| (0..n).map(|j| y[j] * alpha[j] * xt[(j, l)]).sum());
    let b = (0..n).map(|j| xt.row(j).dot(&w.transpose()) - y[j]).sum::<f64>() / n as f64;
    Ok(LsvmModel {
        alpha,
        beta,
        w,
        b,
        c_reg,
        threshold: opts.threshold,
        converged,
        iterations,
        dual_objectives,
    })
}

/// `(α, β_2 α, ..., β_t α)`, stacked.
pub fn alpha_m(alpha: &DVector<f64>, beta: &DVector<f64>) -> DVector<f64> {
    let n = alpha.len();
    DVector::from_fn(n * beta.len(), |i, _| beta[i / n] * alpha[i % n])
}

impl LsvmModel {
    /// `h(x) = wᵀ(Σ_k β_k x_k) + b` for a standardized time-major vector.
    pub fn decision(&self, x: &[f64]) -> f64 {
        let p = self.w.len();
        let mut h = self.b;
        for (k, bk) in self.beta.iter().enumerate() {
            for l in 0..p {
                h += self.w[l] * bk * x[k * p + l];
            }
        }
        h
    }

    pub fn predict_sign(&self, x: &[f64]) -> f64 {
        if self.decision(x) < self.threshold {
            -1.0
        } else {
            1.0
        }
    }

    pub fn predict(&self, x: &[f64]) -> u8 {
        sign_to_label(self.predict_sign(x))
    }

    /// Subjects whose multipliers are nonzero.
    pub fn support_vectors(&self, tol: f64) -> Vec<usize> {
        (0..self.alpha.len()).filter(|&j| self.alpha[j] > tol).collect()
    }
}

/// Standardizes with training statistics, then fits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LsvmClassifier {
    pub model: LsvmModel,
    pub standardizer: Standardizer,
}

impl LsvmClassifier {
    pub fn fit(train: &LongitudinalDataset, c_reg: f64, opts: &LsvmOptions) -> Result<Self> {
        let (std_ds, standardizer) = standardize(train)?;
        Ok(Self {
            model: fit_lsvm(&std_ds, c_reg, opts)?,
            standardizer,
        })
    }

    pub fn predict(&self, x: &[f64]) -> u8 {
        self.model.predict(&self.standardizer.apply_row(x))
    }
}

/// Predicts an unstandardized subject with the stored training statistics.
pub fn lsvm_predict(model: &LsvmModel, x: &[f64], train_standardization: &Standardizer) -> u8 {
    model.predict(&train_standardization.apply_row(x))
}

/// `10^-3 ... 10^3` in 13 log-spaced steps.
pub fn default_c_grid() -> Vec<f64> {
    (0..13).map(|i| 10f64.powf(-3.0 + 0.5 * i as f64)).collect()
}

/// Stratified fold assignment: each class is shuffled and dealt round-robin.
pub fn stratified_folds(labels: &[u8], folds: usize, seed: u64) -> Vec<usize> {
    let mut rng = rng_from_seed(seed);
    let mut assign = vec![0; labels.len()];
    for class in [0u8, 1] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&j| labels[j] == class).collect();
        idx.shuffle(&mut rng);
        for (pos, j) in idx.into_iter().enumerate() {
            assign[j] = pos % folds;
        }
    }
    assign
}

/// Cross-validated accuracy per grid value (`None` where every fold was skipped).
pub fn cv_accuracies(
    ds: &LongitudinalDataset,
    grid: &[f64],
    folds: usize,
    seed: u64,
    opts: &LsvmOptions,
) -> Result<Vec<Option<f64>>> {
    if grid.is_empty() || grid.iter().any(|&c| !(c > 0.0)) {
        return Err(Error::InvalidArgument("C grid must be nonempty and positive".into()));
    }
    if folds < 2 {
        return Err(Error::InvalidArgument("need at least 2 folds".into()));
    }
    let assign = stratified_folds(&ds.labels, folds, seed);
    let mut out = Vec::with_capacity(grid.len());
    for &c in grid {
        let mut accs = Vec::new();
        for f in 0..folds {
            let train_idx: Vec<usize> = (0..ds.n()).filter(|&j| assign[j] != f).collect();
            let test_idx: Vec<usize> = (0..ds.n()).filter(|&j| assign[j] == f).collect();
            let train = ds.select(&train_idx);
            if test_idx.is_empty() || train.n_class(0) == 0 || train.n_class(1) == 0 {
                continue;
            }
            let test = ds.select(&test_idx);
            if test.n_class(0) == 0 || test.n_class(1) == 0 {
                continue;
            }
            let Ok(clf) = LsvmClassifier::fit(&train, c, opts) else {
                continue;
            };
            let correct = (0..test.n())
                .filter(|&j| clf.predict(test.x.row(j).transpose().as_slice()) == test.labels[j])
                .count();
            accs.push(correct as f64 / test.n() as f64);
        }
        out.push(if accs.is_empty() { None } else { Some(crate::linalg::mean(&accs)) });
    }
    Ok(out)
}

/// Grid value with the best cross-validated accuracy; ties go to the smallest C.
pub fn select_c_grid(
    ds: &LongitudinalDataset,
    grid: &[f64],
    folds: usize,
    seed: u64,
    opts: &LsvmOptions,
) -> Result<f64> {
    if grid.len() == 1 {
        if !(grid[0] > 0.0) {
            return Err(Error::InvalidArgument("C must be positive".into()));
        }
        return Ok(grid[0]);
    }
    let accs = cv_accuracies(ds, grid, folds, seed, opts)?;
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&a, &b| grid[a].total_cmp(&grid[b]));
    let mut best: Option<(f64, f64)> = None;
    for i in order {
        if let Some(a) = accs[i] {
            if best.is_none_or(|(_, ba)| a > ba) {
                best = Some((grid[i], a));
            }
        }
    }
    best.map(|(c, _)| c)
        .ok_or_else(|| Error::InvalidArgument("every cross-validation fold was skipped".into()))
}
