//! Pooled and Kronecker-structured covariance estimation.
//!
//! Kronecker covariances follow the time-major layout of
//! [`LongitudinalDataset`]: `Σ = Σ_t ⊗ Σ_p`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::LongitudinalDataset;
use crate::error::{Error, Result};
use crate::linalg::{self, center_rows, col_means, covariance, symmetrize, Cholesky};

pub use crate::linalg::kron;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KroneckerCov {
    pub sigma_t: DMatrix<f64>,
    pub sigma_p: DMatrix<f64>,
}

impl KroneckerCov {
    pub fn t(&self) -> usize {
        self.sigma_t.nrows()
    }

    pub fn p(&self) -> usize {
        self.sigma_p.nrows()
    }

    pub fn full(&self) -> DMatrix<f64> {
        kron(&self.sigma_t, &self.sigma_p)
    }

    /// Rescales so that `sigma_t[0,0] = 1`, leaving the product unchanged.
    pub fn normalized(mut self) -> Self {
        let c = self.sigma_t[(0, 0)];
        if c > 0.0 {
            self.sigma_t /= c;
            self.sigma_p *= c;
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CovarianceModel {
    Unstructured(DMatrix<f64>),
    Kronecker(KroneckerCov),
}

impl CovarianceModel {
    pub fn dim(&self) -> usize {
        match self {
            CovarianceModel::Unstructured(m) => m.nrows(),
            CovarianceModel::Kronecker(k) => k.p() * k.t(),
        }
    }

    pub fn full(&self) -> DMatrix<f64> {
        match self {
            CovarianceModel::Unstructured(m) => m.clone(),
            CovarianceModel::Kronecker(k) => k.full(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriorRule {
    #[default]
    Empirical,
    Equal,
}

impl PriorRule {
    pub fn priors(self, n0: usize, n1: usize) -> (f64, f64) {
        match self {
            PriorRule::Equal => (0.5, 0.5),
            PriorRule::Empirical => {
                let n = (n0 + n1) as f64;
                (n0 as f64 / n, n1 as f64 / n)
            }
        }
    }
}

/// Everything the LDA rule needs: class means, shared covariance, priors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupParams {
    pub mu0: DVector<f64>,
    pub mu1: DVector<f64>,
    pub cov: CovarianceModel,
    pub priors: (f64, f64),
}

impl GroupParams {
    pub fn validate(&self) -> Result<()> {
        let d = self.mu0.len();
        if self.mu1.len() != d || self.cov.dim() != d {
            return Err(Error::Dimension("group parameter dimensions differ".into()));
        }
        let (a, b) = self.priors;
        if !(a > 0.0 && b > 0.0 && (a + b - 1.0).abs() < 1e-12) {
            return Err(Error::InvalidArgument(format!("invalid priors ({a}, {b})")));
        }
        Ok(())
    }
}

/// `((n0-1) S0 + (n1-1) S1) / (n0 + n1 - 2)`.
pub fn pooled_covariance(
    cov0: &DMatrix<f64>,
    n0: usize,
    cov1: &DMatrix<f64>,
    n1: usize,
) -> Result<DMatrix<f64>> {
    if cov0.shape() != cov1.shape() || !cov0.is_square() {
        return Err(Error::Dimension(format!(
            "pooling {:?} with {:?}",
            cov0.shape(),
            cov1.shape()
        )));
    }
    if n0 < 2 || n1 < 2 {
        return Err(Error::InvalidArgument("each class needs at least 2 subjects".into()));
    }
    let (w0, w1) = ((n0 - 1) as f64, (n1 - 1) as f64);
    let mut s = (cov0 * w0 + cov1 * w1) / (w0 + w1);
    symmetrize(&mut s);
    Ok(s)
}

/// Free parameters of an unstructured vs Kronecker covariance.
pub fn kronecker_param_count(p: usize, t: usize) -> (usize, usize) {
    let d = p * t;
    (d * (d + 1) / 2, p * (p + 1) / 2 + t * (t + 1) / 2)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlipFlopFit {
    pub cov: KroneckerCov,
    pub iterations: usize,
    pub converged: bool,
    /// Profile log-likelihood (constants dropped) after each iteration.
    pub log_likelihood: Vec<f64>,
}

/// Matrix-normal log-likelihood of centered data under `Σ_t ⊗ Σ_p`, without the `2π` term.
pub fn kronecker_log_likelihood(
    data_centered: &DMatrix<f64>,
    p: usize,
    t: usize,
    cov: &KroneckerCov,
) -> Result<f64> {
    let n = data_centered.nrows() as f64;
    let ct = Cholesky::new(&cov.sigma_t)?;
    let cp = Cholesky::new(&cov.sigma_p)?;
    let ti = ct.inverse();
    let pi = cp.inverse();
    let mut tr = 0.0;
    for row in data_centered.row_iter() {
        let xj = crate::dataset::row_to_tp(row.iter().cloned(), p, t);
        let m = &ti * &xj * &pi;
        tr += m.component_mul(&xj).sum();
    }
    Ok(-0.5 * n * (p as f64 * ct.log_det() + t as f64 * cp.log_det()) - 0.5 * tr)
}

/// Maximum-likelihood Kronecker factors by alternating closed-form updates,
/// starting from `Σ_p = I`.
pub fn flip_flop(
    data_centered: &DMatrix<f64>,
    p: usize,
    t: usize,
    tol: f64,
    max_iter: usize,
) -> Result<FlipFlopFit> {
    flip_flop_from(data_centered, p, t, DMatrix::identity(p, p), tol, max_iter)
}

pub fn flip_flop_from(
    data_centered: &DMatrix<f64>,
    p: usize,
    t: usize,
    init_sigma_p: DMatrix<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<FlipFlopFit> {
    let n = data_centered.nrows();
    if data_centered.ncols() != p * t {
        return Err(Error::Dimension(format!(
            "flip-flop expects {} columns, got {}",
            p * t,
            data_centered.ncols()
        )));
    }
    if n * p <= t || n * t <= p {
        return Err(Error::InvalidArgument(format!(
            "flip-flop needs n*p > t and n*t > p (n={n}, p={p}, t={t})"
        )));
    }
    if init_sigma_p.shape() != (p, p) {
        return Err(Error::Dimension("initial Σ_p has wrong shape".into()));
    }
    let subjects: Vec<DMatrix<f64>> = data_centered
        .row_iter()
        .map(|r| crate::dataset::row_to_tp(r.iter().cloned(), p, t))
        .collect();

    let mut sigma_p = init_sigma_p;
    let mut sigma_t = DMatrix::identity(t, t);
    let mut prev: Option<DMatrix<f64>> = None;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for it in 1..=max_iter.max(1) {
        iterations = it;
        let pinv = Cholesky::new(&sigma_p)
            .map_err(|_| Error::FlipFlopSingular { iteration: it })?
            .inverse();
        let mut st = DMatrix::zeros(t, t);
        for xj in &subjects {
            st += xj * &pinv * xj.transpose();
        }
        st /= (n * p) as f64;
        symmetrize(&mut st);

        let tinv = Cholesky::new(&st)
            .map_err(|_| Error::FlipFlopSingular { iteration: it })?
            .inverse();
        let mut sp = DMatrix::zeros(p, p);
        for xj in &subjects {
            sp += xj.transpose() * &tinv * xj;
        }
        sp /= (n * t) as f64;
        symmetrize(&mut sp);
        Cholesky::new(&sp).map_err(|_| Error::FlipFlopSingular { iteration: it })?;

        sigma_t = st;
        sigma_p = sp;
        let cur = KroneckerCov {
            sigma_t: sigma_t.clone(),
            sigma_p: sigma_p.clone(),
        };
        trace.push(kronecker_log_likelihood(data_centered, p, t, &cur)?);
        let full = cur.full();
        if let Some(prev) = &prev {
            if (&full - prev).norm() <= tol {
                converged = true;
                break;
            }
        }
        prev = Some(full);
    }

    Ok(FlipFlopFit {
        cov: KroneckerCov { sigma_t, sigma_p }.normalized(),
        iterations,
        converged,
        log_likelihood: trace,
    })
}

/// Class means, pooled unstructured covariance (divisor n_i - 1 per class).
pub fn pooled_params(ds: &LongitudinalDataset, priors: PriorRule) -> Result<GroupParams> {
    let (x0, x1) = (ds.class_matrix(0), ds.class_matrix(1));
    let (n0, n1) = (x0.nrows(), x1.nrows());
    if n0 < 2 || n1 < 2 {
        return Err(Error::InvalidArgument("each class needs at least 2 subjects".into()));
    }
    let cov = pooled_covariance(&covariance(&x0, 1), n0, &covariance(&x1, 1), n1)?;
    Ok(GroupParams {
        mu0: col_means(&x0),
        mu1: col_means(&x1),
        cov: CovarianceModel::Unstructured(cov),
        priors: priors.priors(n0, n1),
    })
}

/// Per-class flip-flop, factors pooled with `(n_i - 1)` weights.
pub fn kronecker_params(
    ds: &LongitudinalDataset,
    priors: PriorRule,
    tol: f64,
    max_iter: usize,
) -> Result<(GroupParams, bool)> {
    let (x0, x1) = (ds.class_matrix(0), ds.class_matrix(1));
    let (n0, n1) = (x0.nrows(), x1.nrows());
    if n0 < 2 || n1 < 2 {
        return Err(Error::InvalidArgument("each class needs at least 2 subjects".into()));
    }
    let (m0, m1) = (col_means(&x0), col_means(&x1));
    let f0 = flip_flop(&center_rows(&x0, &m0), ds.p, ds.t, tol, max_iter)?;
    let f1 = flip_flop(&center_rows(&x1, &m1), ds.p, ds.t, tol, max_iter)?;
    let cov = KroneckerCov {
        sigma_t: pooled_covariance(&f0.cov.sigma_t, n0, &f1.cov.sigma_t, n1)?,
        sigma_p: pooled_covariance(&f0.cov.sigma_p, n0, &f1.cov.sigma_p, n1)?,
    };
    Ok((
        GroupParams {
            mu0: m0,
            mu1: m1,
            cov: CovarianceModel::Kronecker(cov),
            priors: priors.priors(n0, n1),
        },
        f0.converged && f1.converged,
    ))
}

/// Smallest eigenvalue check used in error messages.
pub fn min_eigenvalue(c: &DMatrix<f64>) -> f64 {
    linalg::smallest_eigenvalue(c)
}
