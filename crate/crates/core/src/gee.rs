//! Joint GEE for multivariate longitudinal outcomes with identity link,
//! a (1, time) design per variable and a Kronecker working correlation.
//!
//! Internally vectors are variable-major (index `l*t + k`) so the working
//! correlation reads `R_p ⊗ R_t`. Everything returned in [`GeeFit`] is
//! converted back to the time-major layout used by the rest of the crate.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::covariance::{pooled_covariance, CovarianceModel, GroupParams, PriorRule};
use crate::dataset::{cov_variable_to_time_major, time_to_variable_major, variable_to_time_major};
use crate::error::{Error, Result};
use crate::linalg::{kron, symmetrize, Cholesky};

const CORR_CLIP: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GeeDesign {
    pub p: usize,
    pub t: usize,
}

impl GeeDesign {
    pub fn new(p: usize, t: usize) -> Self {
        Self { p, t }
    }

    /// Block-diagonal `pt × 2p` design (variable-major rows); block `l` is `(1_t, (1..t)ᵀ)`.
    pub fn z(&self) -> DMatrix<f64> {
        let (p, t) = (self.p, self.t);
        let mut z = DMatrix::zeros(p * t, 2 * p);
        for l in 0..p {
            for k in 0..t {
                z[(l * t + k, 2 * l)] = 1.0;
                z[(l * t + k, 2 * l + 1)] = (k + 1) as f64;
            }
        }
        z
    }
}

/// How the variance diagonal `A` is formed from residuals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceRule {
    /// One variance per variable, pooled over time points.
    PerVariable,
    /// One variance per (variable, time) coordinate.
    #[default]
    PerCoordinate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorkingCorrelation {
    #[default]
    Unstructured,
    Independence,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeeOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub variance: VarianceRule,
    pub working: WorkingCorrelation,
}

impl Default for GeeOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 50,
            variance: VarianceRule::PerCoordinate,
            working: WorkingCorrelation::Unstructured,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeeFit {
    pub p: usize,
    pub t: usize,
    /// `(intercept_1, slope_1, ..., intercept_p, slope_p)`.
    pub beta: DVector<f64>,
    pub r_p: DMatrix<f64>,
    pub r_t: DMatrix<f64>,
    pub psi: f64,
    /// Variance diagonal, time-major.
    pub a_diag: DVector<f64>,
    /// `Zβ`, time-major.
    pub fitted_mu: DVector<f64>,
    /// `ψ A^{1/2} (R_p ⊗ R_t) A^{1/2}`, reordered to time-major.
    pub model_cov: DMatrix<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Residuals vanished in some variable; `psi` and the covariance are unusable.
    pub degenerate: bool,
}

struct Moments {
    a: Vec<f64>,
    r_p: DMatrix<f64>,
    r_t: DMatrix<f64>,
    psi: f64,
    degenerate: bool,
}

fn unit_diag(m: &mut DMatrix<f64>) {
    let d: Vec<f64> = m.diagonal().iter().map(|v| v.sqrt()).collect();
    let n = m.nrows();
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] /= d[i] * d[j];
        }
    }
    symmetrize(m);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = if i == j {
                1.0
            } else {
                m[(i, j)].clamp(-CORR_CLIP, CORR_CLIP)
            };
        }
    }
}

/// Residual moments at the current β. `resid` rows are variable-major.
fn moments(resid: &DMatrix<f64>, scale: &[f64], p: usize, t: usize, opts: &GeeOptions) -> Moments {
    let n = resid.nrows();
    let mut a = vec![0.0; p * t];
    for l in 0..p {
        match opts.variance {
            VarianceRule::PerVariable => {
                let mut s = 0.0;
                for j in 0..n {
                    for k in 0..t {
                        s += resid[(j, l * t + k)].powi(2);
                    }
                }
                let v = s / (n * t) as f64;
                a[l * t..(l + 1) * t].iter_mut().for_each(|x| *x = v);
            }
            VarianceRule::PerCoordinate => {
                for k in 0..t {
                    let c = l * t + k;
                    a[c] = resid.column(c).iter().map(|r| r * r).sum::<f64>() / n as f64;
                }
            }
        }
    }
    let degenerate = a
        .iter()
        .zip(scale)
        .any(|(&v, &s)| !(v > 1e-24 * s.max(1.0)));
    if degenerate {
        return Moments {
            a,
            r_p: DMatrix::identity(p, p),
            r_t: DMatrix::identity(t, t),
            psi: 0.0,
            degenerate,
        };
    }
    let sd: Vec<f64> = a.iter().map(|v| v.sqrt()).collect();
    let mut rp = DMatrix::zeros(p, p);
    let mut rt = DMatrix::zeros(t, t);
    let mut ss = 0.0;
    let mut e = vec![0.0; p * t];
    for j in 0..n {
        for c in 0..p * t {
            e[c] = resid[(j, c)] / sd[c];
            ss += e[c] * e[c];
        }
        for l in 0..p {
            for m in 0..p {
                let mut s = 0.0;
                for k in 0..t {
                    s += e[l * t + k] * e[m * t + k];
                }
                rp[(l, m)] += s;
            }
        }
        for k in 0..t {
            for m in 0..t {
                let mut s = 0.0;
                for l in 0..p {
                    s += e[l * t + k] * e[l * t + m];
                }
                rt[(k, m)] += s;
            }
        }
    }
    rp /= (n * t) as f64;
    rt /= (n * p) as f64;
    unit_diag(&mut rp);
    unit_diag(&mut rt);
    if opts.working == WorkingCorrelation::Independence {
        rp = DMatrix::identity(p, p);
        rt = DMatrix::identity(t, t);
    }
    let psi = ss / (n * p * t - 2 * p) as f64;
    Moments {
        a,
        r_p: rp,
        r_t: rt,
        psi,
        degenerate,
    }
}

/// Variable-major working covariance `ψ A^{1/2} (R_p ⊗ R_t) A^{1/2}`.
fn working_cov(m: &Moments) -> DMatrix<f64> {
    let mut v = kron(&m.r_p, &m.r_t);
    let d = v.nrows();
    let sd: Vec<f64> = m.a.iter().map(|x| x.sqrt()).collect();
    for i in 0..d {
        for j in 0..d {
            v[(i, j)] *= m.psi * sd[i] * sd[j];
        }
    }
    v
}

/// Per-variable least squares on the mean profile; the exact GLS solution under independence.
fn ols_beta(xbar: &[f64], p: usize, t: usize) -> DVector<f64> {
    let mut beta = DVector::zeros(2 * p);
    let kbar = (t + 1) as f64 / 2.0;
    let skk: f64 = (1..=t).map(|k| (k as f64 - kbar).powi(2)).sum();
    for l in 0..p {
        let y = &xbar[l * t..(l + 1) * t];
        let ybar = y.iter().sum::<f64>() / t as f64;
        let sxy: f64 = y
            .iter()
            .enumerate()
            .map(|(k, v)| ((k + 1) as f64 - kbar) * (v - ybar))
            .sum();
        let slope = if skk > 0.0 { sxy / skk } else { 0.0 };
        beta[2 * l] = ybar - slope * kbar;
        beta[2 * l + 1] = slope;
    }
    beta
}

/// Fits one class. `class_data` rows are time-major `p*t` vectors.
pub fn fit_joint_gee(class_data: &DMatrix<f64>, design: GeeDesign, opts: &GeeOptions) -> Result<GeeFit> {
    let (p, t) = (design.p, design.t);
    let n = class_data.nrows();
    if class_data.ncols() != p * t {
        return Err(Error::Dimension(format!(
            "GEE expects {} columns, got {}",
            p * t,
            class_data.ncols()
        )));
    }
    if n < 3 || t < 2 {
        return Err(Error::InvalidArgument(format!(
            "GEE needs n >= 3 and t >= 2 (n={n}, t={t})"
        )));
    }
    let d = p * t;
    let y = DMatrix::from_fn(n, d, |j, c| class_data[(j, (c % t) * p + c / t)]);
    let xbar: Vec<f64> = (0..d).map(|c| y.column(c).sum() / n as f64).collect();
    let scale: Vec<f64> = (0..d)
        .map(|c| y.column(c).iter().map(|v| v * v).sum::<f64>() / n as f64)
        .collect();
    let z = design.z();
    let xbar_v = DVector::from_column_slice(&xbar);

    let resid_at = |beta: &DVector<f64>| {
        let mu = &z * beta;
        DMatrix::from_fn(n, d, |j, c| y[(j, c)] - mu[c])
    };

    let mut beta = ols_beta(&xbar, p, t);
    let mut converged = false;
    let mut iterations = 0;
    let mut mom = moments(&resid_at(&beta), &scale, p, t, opts);
    if !mom.degenerate {
        for it in 1..=opts.max_iter {
            iterations = it;
            let v = working_cov(&mom);
            let chol = Cholesky::new(&v).map_err(|_| Error::SingularCovariance {
                smallest_eigenvalue: crate::linalg::smallest_eigenvalue(&v),
            })?;
            let vz = chol.solve_mat(&z);
            let info = z.tr_mul(&vz);
            let score = vz.tr_mul(&(&xbar_v - &z * &beta));
            let step = Cholesky::new(&info)?.solve_vec(&score);
            beta += &step;
            mom = moments(&resid_at(&beta), &scale, p, t, opts);
            if step.amax() < opts.tol {
                converged = true;
                break;
            }
            if mom.degenerate {
                break;
            }
        }
    } else {
        converged = true;
    }

    let fitted_v = &z * &beta;
    let model_cov = if mom.degenerate {
        DMatrix::zeros(d, d)
    } else {
        cov_variable_to_time_major(&working_cov(&mom), p, t)
    };
    Ok(GeeFit {
        p,
        t,
        a_diag: DVector::from_vec(variable_to_time_major(&mom.a, p, t)),
        fitted_mu: DVector::from_vec(variable_to_time_major(fitted_v.as_slice(), p, t)),
        beta,
        r_p: mom.r_p,
        r_t: mom.r_t,
        psi: mom.psi,
        model_cov,
        iterations,
        converged,
        degenerate: mom.degenerate,
    })
}

impl GeeFit {
    /// Robust sandwich covariance of β̂ (dimension 2p), for diagnostics.
    pub fn sandwich(&self, class_data: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let (p, t) = (self.p, self.t);
        if self.degenerate {
            return Err(Error::SingularCovariance {
                smallest_eigenvalue: 0.0,
            });
        }
        let z = GeeDesign::new(p, t).z();
        let v = cov_time_to_variable_major(&self.model_cov, p, t);
        let chol = Cholesky::new(&v)?;
        let vz = chol.solve_mat(&z);
        let n = class_data.nrows();
        let bread = z.tr_mul(&vz) * n as f64;
        let mu = &z * &self.beta;
        let mut meat = DMatrix::zeros(2 * p, 2 * p);
        for row in class_data.row_iter() {
            let flat: Vec<f64> = row.iter().cloned().collect();
            let yv = DVector::from_vec(time_to_variable_major(&flat, p, t));
            let u = vz.tr_mul(&(yv - &mu));
            meat += &u * u.transpose();
        }
        let binv = Cholesky::new(&bread)?.inverse();
        let mut s = &binv * meat * &binv;
        symmetrize(&mut s);
        Ok(s)
    }
}

fn cov_time_to_variable_major(c: &DMatrix<f64>, p: usize, t: usize) -> DMatrix<f64> {
    let d = p * t;
    let perm: Vec<usize> = (0..d).map(|i| (i % t) * p + i / t).collect();
    DMatrix::from_fn(d, d, |i, j| c[(perm[i], perm[j])])
}

/// Class means from the fitted marginal means; model covariances pooled with `(n_i - 1)` weights.
pub fn gee_lda_params(
    fit0: &GeeFit,
    n0: usize,
    fit1: &GeeFit,
    n1: usize,
    priors: PriorRule,
) -> Result<GroupParams> {
    if fit0.fitted_mu.len() != fit1.fitted_mu.len() {
        return Err(Error::Dimension("GEE fits differ in dimension".into()));
    }
    let cov = pooled_covariance(&fit0.model_cov, n0, &fit1.model_cov, n1)?;
    Ok(GroupParams {
        mu0: fit0.fitted_mu.clone(),
        mu1: fit1.fitted_mu.clone(),
        cov: CovarianceModel::Unstructured(cov),
        priors: priors.priors(n0, n1),
    })
}
