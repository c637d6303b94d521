//! Two-class linear discriminant rule shared by the pooled, Kronecker and GEE variants.
//!
//! A subject is assigned to class 0 when
//! `(x - (μ0+μ1)/2)ᵀ Σ⁻¹ (μ0 - μ1) > ln(π1/π0)`; equality goes to class 1.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::covariance::{CovarianceModel, GroupParams};
use crate::dataset::row_to_tp;
use crate::error::Result;
use crate::linalg::cholesky_cov;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaModel {
    pub direction: DVector<f64>,
    pub midpoint: DVector<f64>,
    pub threshold: f64,
    /// Set when μ0 = μ1, so the direction is zero and every subject lands in class 1.
    pub degenerate: bool,
}

pub fn lda_train(params: &GroupParams) -> Result<LdaModel> {
    params.validate()?;
    let diff = &params.mu0 - &params.mu1;
    let direction = match &params.cov {
        CovarianceModel::Unstructured(s) => cholesky_cov(s)?.solve_vec(&diff),
        CovarianceModel::Kronecker(k) => {
            // (Σt ⊗ Σp)⁻¹ vec_r(D) = vec_r(Σt⁻¹ D Σp⁻¹)
            let (p, t) = (k.p(), k.t());
            let ct = cholesky_cov(&k.sigma_t)?;
            let cp = cholesky_cov(&k.sigma_p)?;
            let d = row_to_tp(diff.iter().cloned(), p, t);
            let left = ct.solve_mat(&d);
            let both = cp.solve_mat(&left.transpose()).transpose();
            DVector::from_iterator(p * t, both.row_iter().flat_map(|r| r.iter().cloned().collect::<Vec<_>>()))
        }
    };
    let (pi0, pi1) = params.priors;
    Ok(LdaModel {
        degenerate: diff.iter().all(|&v| v == 0.0),
        direction,
        midpoint: (&params.mu0 + &params.mu1) * 0.5,
        threshold: (pi1 / pi0).ln(),
    })
}

impl LdaModel {
    /// `(x - midpoint)ᵀ direction`.
    pub fn statistic(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(self.midpoint.iter())
            .zip(self.direction.iter())
            .map(|((xi, mi), di)| (xi - mi) * di)
            .sum()
    }

    pub fn predict(&self, x: &[f64]) -> u8 {
        if self.statistic(x) > self.threshold {
            0
        } else {
            1
        }
    }
}

pub fn lda_predict(model: &LdaModel, x: &[f64]) -> u8 {
    model.predict(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::KroneckerCov;
    use nalgebra::DMatrix;

    fn toy() -> GroupParams {
        GroupParams {
            mu0: DVector::from_vec(vec![1.0, 0.0]),
            mu1: DVector::from_vec(vec![-1.0, 0.0]),
            cov: CovarianceModel::Unstructured(DMatrix::identity(2, 2)),
            priors: (0.5, 0.5),
        }
    }

    #[test]
    fn toy_rule() {
        let m = lda_train(&toy()).unwrap();
        assert_eq!(m.direction.as_slice(), &[2.0, 0.0]);
        assert_eq!(m.midpoint.as_slice(), &[0.0, 0.0]);
        assert_eq!(m.threshold, 0.0);
        assert!(!m.degenerate);
        assert_eq!(m.predict(&[0.5, 0.0]), 0);
        assert!((m.statistic(&[0.5, 0.0]) - 1.0).abs() < 1e-15);
        assert_eq!(m.predict(&[1.0, 0.0]), 0);
        assert_eq!(m.predict(&[0.0, 0.0]), 1);
    }

    #[test]
    fn kronecker_identity_matches_unstructured() {
        let mut g = GroupParams {
            mu0: DVector::from_vec(vec![1.0, 0.5, -0.2, 0.3]),
            mu1: DVector::from_vec(vec![0.0, 0.1, 0.2, -0.3]),
            cov: CovarianceModel::Unstructured(DMatrix::identity(4, 4)),
            priors: (0.3, 0.7),
        };
        let a = lda_train(&g).unwrap();
        g.cov = CovarianceModel::Kronecker(KroneckerCov {
            sigma_t: DMatrix::identity(2, 2),
            sigma_p: DMatrix::identity(2, 2),
        });
        let b = lda_train(&g).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn kronecker_direction_matches_full_solve() {
        let st = DMatrix::from_row_slice(2, 2, &[1.0, 0.6, 0.6, 1.4]);
        let sp = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.1, 0.3, 1.0, -0.2, 0.1, -0.2, 0.8]);
        let mu0 = DVector::from_vec(vec![0.3, -1.0, 0.2, 0.8, 0.0, 1.1]);
        let mu1 = DVector::zeros(6);
        let k = CovarianceModel::Kronecker(KroneckerCov {
            sigma_t: st.clone(),
            sigma_p: sp.clone(),
        });
        let full = CovarianceModel::Unstructured(crate::linalg::kron(&st, &sp));
        let mk = |cov| GroupParams {
            mu0: mu0.clone(),
            mu1: mu1.clone(),
            cov,
            priors: (0.5, 0.5),
        };
        let a = lda_train(&mk(k)).unwrap();
        let b = lda_train(&mk(full)).unwrap();
        assert!((a.direction - b.direction).abs().max() < 1e-12);
    }

    #[test]
    fn equal_means_flagged() {
        let mut g = toy();
        g.mu1 = g.mu0.clone();
        let m = lda_train(&g).unwrap();
        assert!(m.degenerate);
        assert_eq!(m.predict(&[3.0, 3.0]), 1);
    }

    #[test]
    fn singular_cov_reports_eigenvalue() {
        let mut g = toy();
        g.cov = CovarianceModel::Unstructured(DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]));
        let e = lda_train(&g).unwrap_err();
        assert!(matches!(e, crate::Error::SingularCovariance { .. }), "{e}");
    }
}
