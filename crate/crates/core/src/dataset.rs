use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// n subjects measured on p variables at t time points, with binary labels.
///
/// Rows of `x` are flat vectors of length `p * t` in time-major order:
/// entry `k * p + l` holds variable `l` at time `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LongitudinalDataset {
    pub x: DMatrix<f64>,
    pub labels: Vec<u8>,
    pub p: usize,
    pub t: usize,
    pub variable_names: Vec<String>,
}

impl LongitudinalDataset {
    pub fn new(x: DMatrix<f64>, labels: Vec<u8>, p: usize, t: usize) -> Result<Self> {
        let names = (1..=p).map(|l| format!("v{l}")).collect();
        Self::with_names(x, labels, p, t, names)
    }

    pub fn with_names(
        x: DMatrix<f64>,
        labels: Vec<u8>,
        p: usize,
        t: usize,
        variable_names: Vec<String>,
    ) -> Result<Self> {
        if p == 0 || t == 0 {
            return Err(Error::InvalidArgument("p and t must be positive".into()));
        }
        if x.ncols() != p * t {
            return Err(Error::Dimension(format!(
                "expected {} columns (p={p}, t={t}), got {}",
                p * t,
                x.ncols()
            )));
        }
        if x.nrows() != labels.len() {
            return Err(Error::Dimension(format!(
                "{} rows but {} labels",
                x.nrows(),
                labels.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&g| g > 1) {
            return Err(Error::Data(format!("non-binary label {bad}")));
        }
        if variable_names.len() != p {
            return Err(Error::Dimension(format!(
                "{} variable names for p={p}",
                variable_names.len()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("non-finite value".into()));
        }
        Ok(Self {
            x,
            labels,
            p,
            t,
            variable_names,
        })
    }

    /// Stacks class-0 rows above class-1 rows.
    pub fn from_classes(x0: &DMatrix<f64>, x1: &DMatrix<f64>, p: usize, t: usize) -> Result<Self> {
        if x0.ncols() != x1.ncols() {
            return Err(Error::Dimension("class blocks differ in width".into()));
        }
        let (n0, n1) = (x0.nrows(), x1.nrows());
        let mut x = DMatrix::zeros(n0 + n1, x0.ncols());
        x.rows_mut(0, n0).copy_from(x0);
        x.rows_mut(n0, n1).copy_from(x1);
        let mut labels = vec![0u8; n0];
        labels.extend(std::iter::repeat_n(1u8, n1));
        Self::new(x, labels, p, t)
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        self.p * self.t
    }

    pub fn n_class(&self, class: u8) -> usize {
        self.labels.iter().filter(|&&g| g == class).count()
    }

    pub fn class_indices(&self, class: u8) -> Vec<usize> {
        (0..self.n()).filter(|&j| self.labels[j] == class).collect()
    }

    /// Rows belonging to one class, in original order.
    pub fn class_matrix(&self, class: u8) -> DMatrix<f64> {
        self.x.select_rows(&self.class_indices(class))
    }

    /// Subset of subjects (duplicates allowed, order kept).
    pub fn select(&self, idx: &[usize]) -> Self {
        Self {
            x: self.x.select_rows(idx),
            labels: idx.iter().map(|&j| self.labels[j]).collect(),
            p: self.p,
            t: self.t,
            variable_names: self.variable_names.clone(),
        }
    }

    /// Value of variable `l` at time `k` for subject `j` (all zero-based).
    pub fn value(&self, j: usize, l: usize, k: usize) -> f64 {
        self.x[(j, k * self.p + l)]
    }

    /// The t×p matrix form of one subject.
    pub fn subject_matrix(&self, j: usize) -> DMatrix<f64> {
        row_to_tp(self.x.row(j).iter().cloned(), self.p, self.t)
    }
}

/// Reshapes a time-major flat vector into a t×p matrix.
pub fn row_to_tp(v: impl Iterator<Item = f64>, p: usize, t: usize) -> DMatrix<f64> {
    let data: Vec<f64> = v.collect();
    DMatrix::from_row_slice(t, p, &data)
}

/// Converts a time-major vector (index `k*p + l`) to variable-major (index `l*t + k`).
pub fn time_to_variable_major(v: &[f64], p: usize, t: usize) -> Vec<f64> {
    let mut out = vec![0.0; p * t];
    for k in 0..t {
        for l in 0..p {
            out[l * t + k] = v[k * p + l];
        }
    }
    out
}

pub fn variable_to_time_major(v: &[f64], p: usize, t: usize) -> Vec<f64> {
    let mut out = vec![0.0; p * t];
    for k in 0..t {
        for l in 0..p {
            out[k * p + l] = v[l * t + k];
        }
    }
    out
}

/// Permutes a pt×pt covariance from variable-major to time-major ordering.
pub fn cov_variable_to_time_major(c: &DMatrix<f64>, p: usize, t: usize) -> DMatrix<f64> {
    let d = p * t;
    let perm: Vec<usize> = (0..d).map(|i| (i % p) * t + i / p).collect();
    DMatrix::from_fn(d, d, |i, j| c[(perm[i], perm[j])])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_round_trip() {
        let v: Vec<f64> = (0..6).map(f64::from).collect();
        let vm = time_to_variable_major(&v, 3, 2);
        assert_eq!(vm, vec![0.0, 3.0, 1.0, 4.0, 2.0, 5.0]);
        assert_eq!(variable_to_time_major(&vm, 3, 2), v);
    }

    #[test]
    fn kron_order_swaps_under_layout_change() {
        use crate::linalg::kron;
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 2.0]);
        let b = DMatrix::from_row_slice(3, 3, &[1.0, 0.1, 0.2, 0.1, 3.0, 0.4, 0.2, 0.4, 2.0]);
        // variable-major B⊗A equals time-major A⊗B
        let vm = kron(&b, &a);
        let tm = cov_variable_to_time_major(&vm, 3, 2);
        assert_eq!(tm, kron(&a, &b));
    }

    #[test]
    fn subject_matrix_is_t_by_p() {
        let x = DMatrix::from_row_slice(1, 6, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let ds = LongitudinalDataset::new(x, vec![0], 3, 2).unwrap();
        let m = ds.subject_matrix(0);
        assert_eq!(m.shape(), (2, 3));
        assert_eq!(m[(1, 0)], 4.0);
        assert_eq!(ds.value(0, 2, 1), 6.0);
    }

    #[test]
    fn rejects_non_binary_labels() {
        let x = DMatrix::zeros(2, 2);
        assert!(LongitudinalDataset::new(x, vec![0, 2], 1, 2).is_err());
    }
}
