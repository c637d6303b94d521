//! Reference scenario parameters: class means and pooled covariance for the
//! three reference datasets (two CORE-OM groupings with p=4, t=2 and one
//! CASP-19 grouping with p=4, t=4), all in time-major layout.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dists::{MvnParams, TruncationBounds};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Preset {
    #[serde(rename = "dataset1")]
    Dataset1,
    #[serde(rename = "dataset2")]
    Dataset2,
    #[serde(rename = "dataset3")]
    Dataset3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioParams {
    pub p: usize,
    pub t: usize,
    pub class0: MvnParams,
    pub class1: MvnParams,
    /// Score range used by the truncated-normal scenario.
    pub bounds: TruncationBounds,
    /// Training sizes (n0, n1) of the reference data.
    pub n_train: (usize, usize),
}

const DS1_MU0: [f64; 8] = [1.75, 1.58, 1.36, 0.32, 1.05, 1.03, 0.91, 0.16];
const DS1_MU1: [f64; 8] = [1.93, 1.82, 1.53, 0.42, 1.15, 1.19, 1.04, 0.2];
#[rustfmt::skip]
const DS1_SIGMA: [f64; 64] = [
    0.85, 0.41, 0.34, 0.15, 0.40, 0.26, 0.23, 0.03,
    0.41, 0.53, 0.26, 0.14, 0.20, 0.36, 0.20, 0.06,
    0.34, 0.26, 0.36, 0.11, 0.16, 0.18, 0.23, 0.02,
    0.15, 0.14, 0.11, 0.16, 0.08, 0.11, 0.09, 0.06,
    0.40, 0.20, 0.16, 0.08, 0.34, 0.16, 0.14, 0.03,
    0.26, 0.36, 0.18, 0.11, 0.16, 0.30, 0.16, 0.05,
    0.23, 0.20, 0.23, 0.09, 0.14, 0.16, 0.22, 0.03,
    0.03, 0.06, 0.02, 0.06, 0.03, 0.05, 0.03, 0.06,
];

const DS2_MU0: [f64; 8] = [1.16, 1.31, 1.06, 0.26, 0.88, 0.92, 0.79, 0.27];
const DS2_MU1: [f64; 8] = [2.04, 1.81, 1.55, 0.4, 1.16, 1.16, 1.03, 0.15];
#[rustfmt::skip]
const DS2_SIGMA: [f64; 64] = [
    0.73, 0.34, 0.28, 0.13, 0.37, 0.24, 0.20, 0.05,
    0.34, 0.51, 0.22, 0.14, 0.18, 0.35, 0.18, 0.07,
    0.28, 0.22, 0.33, 0.10, 0.14, 0.17, 0.22, 0.04,
    0.13, 0.14, 0.10, 0.16, 0.07, 0.11, 0.09, 0.07,
    0.37, 0.18, 0.14, 0.07, 0.34, 0.15, 0.13, 0.04,
    0.24, 0.35, 0.17, 0.11, 0.15, 0.30, 0.16, 0.06,
    0.20, 0.18, 0.22, 0.09, 0.13, 0.16, 0.22, 0.04,
    0.05, 0.07, 0.04, 0.07, 0.04, 0.06, 0.04, 0.06,
];

const DS3_MU0: [f64; 16] = [
    2.84, 2.59, 2.96, 2.75, 2.71, 2.58, 2.96, 2.70, 2.67, 2.61, 2.96, 2.70, 2.67, 2.62, 2.95, 2.68,
];
const DS3_MU1: [f64; 16] = [
    2.09, 2.13, 2.67, 2.06, 1.88, 2.07, 2.63, 2.0, 1.86, 2.07, 2.62, 1.96, 1.85, 2.06, 2.61, 1.94,
];
#[rustfmt::skip]
const DS3_SIGMA: [f64; 256] = [
    0.31, 0.15, 0.10, 0.18, 0.19, 0.12, 0.10, 0.16, 0.18, 0.12, 0.09, 0.15, 0.18, 0.13, 0.10, 0.16,
    0.15, 0.25, 0.08, 0.13, 0.11, 0.15, 0.06, 0.11, 0.11, 0.14, 0.06, 0.10, 0.11, 0.14, 0.07, 0.10,
    0.10, 0.08, 0.18, 0.16, 0.08, 0.06, 0.11, 0.11, 0.07, 0.06, 0.11, 0.11, 0.08, 0.06, 0.11, 0.11,
    0.18, 0.13, 0.16, 0.32, 0.15, 0.11, 0.13, 0.22, 0.14, 0.11, 0.13, 0.22, 0.16, 0.12, 0.14, 0.22,
    0.19, 0.11, 0.08, 0.15, 0.31, 0.16, 0.11, 0.19, 0.21, 0.14, 0.09, 0.17, 0.20, 0.14, 0.10, 0.17,
    0.12, 0.15, 0.06, 0.11, 0.16, 0.25, 0.08, 0.14, 0.13, 0.17, 0.07, 0.12, 0.13, 0.16, 0.07, 0.12,
    0.10, 0.06, 0.11, 0.13, 0.11, 0.08, 0.17, 0.16, 0.10, 0.07, 0.12, 0.13, 0.10, 0.07, 0.12, 0.13,
    0.16, 0.11, 0.11, 0.22, 0.19, 0.14, 0.16, 0.31, 0.17, 0.12, 0.13, 0.23, 0.17, 0.12, 0.14, 0.24,
    0.18, 0.11, 0.07, 0.14, 0.21, 0.13, 0.10, 0.17, 0.31, 0.16, 0.10, 0.19, 0.22, 0.14, 0.11, 0.18,
    0.12, 0.14, 0.06, 0.11, 0.14, 0.17, 0.07, 0.12, 0.16, 0.24, 0.08, 0.14, 0.14, 0.17, 0.08, 0.13,
    0.09, 0.06, 0.11, 0.13, 0.09, 0.07, 0.12, 0.13, 0.10, 0.08, 0.19, 0.16, 0.10, 0.07, 0.13, 0.14,
    0.15, 0.10, 0.11, 0.22, 0.17, 0.12, 0.13, 0.23, 0.19, 0.14, 0.16, 0.33, 0.19, 0.13, 0.15, 0.26,
    0.18, 0.11, 0.08, 0.16, 0.20, 0.13, 0.10, 0.17, 0.22, 0.14, 0.10, 0.19, 0.34, 0.18, 0.13, 0.22,
    0.13, 0.14, 0.06, 0.12, 0.14, 0.16, 0.07, 0.12, 0.14, 0.17, 0.07, 0.13, 0.18, 0.26, 0.09, 0.16,
    0.10, 0.07, 0.11, 0.14, 0.10, 0.07, 0.12, 0.14, 0.11, 0.08, 0.13, 0.15, 0.13, 0.09, 0.19, 0.18,
    0.16, 0.10, 0.11, 0.22, 0.17, 0.12, 0.13, 0.24, 0.18, 0.13, 0.14, 0.26, 0.22, 0.16, 0.18, 0.36,
];

fn build(
    p: usize,
    t: usize,
    mu0: &[f64],
    mu1: &[f64],
    sigma: &[f64],
    upper: f64,
    n_train: (usize, usize),
) -> Result<ScenarioParams> {
    let d = p * t;
    let cov = DMatrix::from_row_slice(d, d, sigma);
    Ok(ScenarioParams {
        p,
        t,
        class0: MvnParams::new(DVector::from_column_slice(mu0), cov.clone())?,
        class1: MvnParams::new(DVector::from_column_slice(mu1), cov)?,
        bounds: TruncationBounds::uniform(d, 0.0, upper)?,
        n_train,
    })
}

impl Preset {
    pub fn params(self) -> ScenarioParams {
        let r = match self {
            Preset::Dataset1 => build(4, 2, &DS1_MU0, &DS1_MU1, &DS1_SIGMA, 4.0, (93, 93)),
            Preset::Dataset2 => build(4, 2, &DS2_MU0, &DS2_MU1, &DS2_SIGMA, 4.0, (42, 142)),
            Preset::Dataset3 => build(4, 4, &DS3_MU0, &DS3_MU1, &DS3_SIGMA, 3.0, (254, 1682)),
        };
        r.expect("built-in scenario parameters are valid")
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::Dataset1 => "dataset1",
            Preset::Dataset2 => "dataset2",
            Preset::Dataset3 => "dataset3",
        }
    }
}
