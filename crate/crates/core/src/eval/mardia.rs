use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::linalg::{center_rows, col_means, covariance, cholesky_cov};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MardiaSkewness {
    pub b1p: f64,
    /// `n * b1p / 6`.
    pub chi2: f64,
    pub df: usize,
    pub pvalue: f64,
}

pub fn skewness_df(d: usize) -> usize {
    d * (d + 1) * (d + 2) / 6
}

/// Mardia's multivariate skewness with the maximum-likelihood covariance (divisor n).
pub fn mardia_skewness(data: &DMatrix<f64>) -> Result<MardiaSkewness> {
    let (n, d) = data.shape();
    if n <= d {
        return Err(Error::InvalidArgument(format!(
            "Mardia skewness needs n > d (n={n}, d={d})"
        )));
    }
    let s = covariance(data, 0);
    let chol = cholesky_cov(&s)?;
    let c = center_rows(data, &col_means(data));
    // G = C S⁻¹ Cᵀ; b1p = Σ G_ij³ / n²
    let sinv_ct = chol.solve_mat(&c.transpose());
    let g = &c * sinv_ct;
    let b1p = g.iter().map(|v| v.powi(3)).sum::<f64>() / (n * n) as f64;
    let chi2 = n as f64 * b1p / 6.0;
    let df = skewness_df(d);
    let pvalue = ChiSquared::new(df as f64)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?
        .sf(chi2);
    Ok(MardiaSkewness { b1p, chi2, df, pvalue })
}
