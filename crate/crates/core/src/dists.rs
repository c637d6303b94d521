//! Samplers for the normal, lognormal and box-truncated normal scenarios.
//!
//! Lognormal parameters are on the log scale: a draw is `exp(z)` with
//! `z ~ N(mean, cov)`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{is_symmetric, Cholesky};

/// Consecutive rejections tolerated before the box is declared too improbable.
pub const MAX_CONSECUTIVE_REJECTIONS: u64 = 1_000_000;

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MvnParams {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl MvnParams {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let p = Self { mean, cov };
        p.validate()?;
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.mean.len();
        if d == 0 || self.cov.shape() != (d, d) {
            return Err(Error::Dimension(format!(
                "mean length {d} vs cov {:?}",
                self.cov.shape()
            )));
        }
        if !is_symmetric(&self.cov, 1e-10) {
            return Err(Error::InvalidArgument("covariance not symmetric".into()));
        }
        Cholesky::new(&self.cov).map(|_| ())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationBounds {
    pub lower: DVector<f64>,
    pub upper: DVector<f64>,
}

impl TruncationBounds {
    pub fn new(lower: DVector<f64>, upper: DVector<f64>) -> Result<Self> {
        let b = Self { lower, upper };
        b.validate()?;
        Ok(b)
    }

    /// The same interval `[lo, hi]` in every coordinate.
    pub fn uniform(d: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(DVector::from_element(d, lo), DVector::from_element(d, hi))
    }

    pub fn validate(&self) -> Result<()> {
        if self.lower.len() != self.upper.len() {
            return Err(Error::Dimension("bound lengths differ".into()));
        }
        if let Some(k) = (0..self.lower.len()).find(|&k| !(self.lower[k] < self.upper[k])) {
            return Err(Error::InvalidArgument(format!(
                "lower bound not below upper bound in coordinate {k}"
            )));
        }
        Ok(())
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .enumerate()
            .all(|(k, &v)| v >= self.lower[k] && v <= self.upper[k])
    }
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    Ok(())
}

fn draw_into<R: Rng + ?Sized>(mean: &DVector<f64>, l: &DMatrix<f64>, z: &mut [f64], out: &mut [f64], rng: &mut R) {
    let d = mean.len();
    for v in z.iter_mut() {
        *v = rng.sample(StandardNormal);
    }
    for i in 0..d {
        let mut s = mean[i];
        for k in 0..=i {
            s += l[(i, k)] * z[k];
        }
        out[i] = s;
    }
}

/// n i.i.d. rows from `N(mean, cov)` via the Cholesky factor of `cov`.
pub fn sample_mvn<R: Rng + ?Sized>(params: &MvnParams, n: usize, rng: &mut R) -> Result<DMatrix<f64>> {
    check_n(n)?;
    params.validate()?;
    let chol = Cholesky::new(&params.cov)?;
    let d = params.dim();
    let mut out = DMatrix::zeros(n, d);
    let mut z = vec![0.0; d];
    let mut row = vec![0.0; d];
    for i in 0..n {
        draw_into(&params.mean, chol.l(), &mut z, &mut row, rng);
        for k in 0..d {
            out[(i, k)] = row[k];
        }
    }
    Ok(out)
}

pub fn sample_mv_lognormal<R: Rng + ?Sized>(
    params: &MvnParams,
    n: usize,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    let mut x = sample_mvn(params, n, rng)?;
    x.apply(|v| *v = v.exp());
    Ok(x)
}

/// Rejection sampler: propose full MVN vectors, keep those inside the box.
pub fn sample_mv_truncnorm<R: Rng + ?Sized>(
    params: &MvnParams,
    bounds: &TruncationBounds,
    n: usize,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    check_n(n)?;
    params.validate()?;
    bounds.validate()?;
    if bounds.lower.len() != params.dim() {
        return Err(Error::Dimension("bounds and mean differ in length".into()));
    }
    let chol = Cholesky::new(&params.cov)?;
    let d = params.dim();
    let mut out = DMatrix::zeros(n, d);
    let mut z = vec![0.0; d];
    let mut row = vec![0.0; d];
    for i in 0..n {
        let mut rejected = 0u64;
        loop {
            draw_into(&params.mean, chol.l(), &mut z, &mut row, rng);
            if bounds.contains(&row) {
                break;
            }
            rejected += 1;
            if rejected >= MAX_CONSECUTIVE_REJECTIONS {
                return Err(Error::TruncationTooImprobable);
            }
        }
        for k in 0..d {
            out[(i, k)] = row[k];
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Distribution {
    Normal,
    Lognormal,
    Truncnorm,
}

impl Distribution {
    pub fn name(self) -> &'static str {
        match self {
            Distribution::Normal => "normal",
            Distribution::Lognormal => "lognormal",
            Distribution::Truncnorm => "truncnorm",
        }
    }

    pub fn sample<R: Rng + ?Sized>(
        self,
        params: &MvnParams,
        bounds: Option<&TruncationBounds>,
        n: usize,
        rng: &mut R,
    ) -> Result<DMatrix<f64>> {
        match self {
            Distribution::Normal => sample_mvn(params, n, rng),
            Distribution::Lognormal => sample_mv_lognormal(params, n, rng),
            Distribution::Truncnorm => {
                let b = bounds.ok_or_else(|| {
                    Error::Config("truncnorm distribution requires bounds".into())
                })?;
                sample_mv_truncnorm(params, b, n, rng)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{col_means, covariance};

    fn iso(d: usize) -> MvnParams {
        MvnParams::new(DVector::zeros(d), DMatrix::identity(d, d)).unwrap()
    }

    #[test]
    fn identity_moments() {
        let x = sample_mvn(&iso(2), 100_000, &mut rng_from_seed(1)).unwrap();
        let m = col_means(&x);
        let c = covariance(&x, 1);
        assert!(m.abs().max() < 0.02);
        assert!((c - DMatrix::<f64>::identity(2, 2)).abs().max() < 0.05);
    }

    #[test]
    fn negative_eigenvalue_rejected() {
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let p = MvnParams {
            mean: DVector::zeros(2),
            cov,
        };
        assert!(matches!(
            sample_mvn(&p, 5, &mut rng_from_seed(0)),
            Err(Error::NotPositiveDefinite { minor: 2, .. })
        ));
    }

    #[test]
    fn degenerate_lognormal_rejected() {
        let p = MvnParams {
            mean: DVector::zeros(1),
            cov: DMatrix::zeros(1, 1),
        };
        assert!(sample_mv_lognormal(&p, 3, &mut rng_from_seed(0)).is_err());
    }

    #[test]
    fn lognormal_median_and_mean() {
        let x = sample_mv_lognormal(&iso(2), 100_000, &mut rng_from_seed(2)).unwrap();
        for k in 0..2 {
            let col: Vec<f64> = x.column(k).iter().cloned().collect();
            assert!((crate::linalg::quantile(&col, 0.5) - 1.0).abs() < 0.05);
        }
        let x1 = sample_mv_lognormal(&iso(1), 100_000, &mut rng_from_seed(3)).unwrap();
        let m = x1.mean();
        assert!((m - 0.5f64.exp()).abs() < 0.1, "{m}");
    }

    #[test]
    fn half_normal_mean() {
        let b = TruncationBounds::uniform(1, 0.0, 1e6).unwrap();
        let x = sample_mv_truncnorm(&iso(1), &b, 100_000, &mut rng_from_seed(4)).unwrap();
        let expect = (2.0 / std::f64::consts::PI).sqrt();
        assert!((x.mean() - expect).abs() < 0.02);
        assert!(x.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn improbable_box_errors() {
        let b = TruncationBounds::uniform(1, 40.0, 41.0).unwrap();
        assert_eq!(
            sample_mv_truncnorm(&iso(1), &b, 1, &mut rng_from_seed(5)).unwrap_err(),
            Error::TruncationTooImprobable
        );
    }

    #[test]
    fn same_seed_same_draws() {
        let a = sample_mvn(&iso(3), 50, &mut rng_from_seed(9)).unwrap();
        let b = sample_mvn(&iso(3), 50, &mut rng_from_seed(9)).unwrap();
        assert_eq!(a, b);
    }
}
