//! MCD and MVE subset estimators used to trim outlying training subjects.
//!
//! Instances with `n <= 12` are searched exhaustively. Larger ones use random
//! `(d+1)`-subset starts followed by concentration steps (FAST-MCD style).
//! Ties between equal objectives go to the lexicographically smallest kept set.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::dataset::LongitudinalDataset;
use crate::dists::rng_from_seed;
use crate::error::{Error, Result};
use crate::linalg::{symmetrize, Cholesky};

pub const EXHAUSTIVE_MAX_N: usize = 12;
pub const DEFAULT_STARTS: usize = 500;
const SHORT_CSTEPS: usize = 2;
const REFINE_TOP: usize = 10;
const REFINE_MAX_ITER: usize = 100;
const REFINE_TOL: f64 = 1e-12;
/// MVE swap search is skipped when `h * (n - h)` exceeds this.
const MVE_SWAP_MAX_PAIRS: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrimMethod {
    #[default]
    None,
    Mve,
    Mcd,
}

impl TrimMethod {
    pub fn name(self) -> &'static str {
        match self {
            TrimMethod::None => "none",
            TrimMethod::Mve => "mve",
            TrimMethod::Mcd => "mcd",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [TrimMethod::None, TrimMethod::Mve, TrimMethod::Mcd].into_iter().find(|m| m.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrimResult {
    /// Sorted row indices of the chosen subset.
    pub kept_indices: Vec<usize>,
    pub location: DVector<f64>,
    /// Subset covariance (divisor `h - 1`).
    pub scatter: DMatrix<f64>,
    /// `ln det(scatter)` for MCD; log-volume of the covering ellipsoid for MVE.
    pub objective: f64,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Objective {
    Mcd,
    Mve,
}

struct Subset {
    idx: Vec<usize>,
    obj: f64,
}

struct Fit {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    chol: Cholesky,
}

fn fit_subset(data: &DMatrix<f64>, idx: &[usize]) -> Option<Fit> {
    let d = data.ncols();
    let h = idx.len();
    if h < 2 {
        return None;
    }
    let mut mean = DVector::zeros(d);
    for &i in idx {
        mean += data.row(i).transpose();
    }
    mean /= h as f64;
    let mut cov = DMatrix::zeros(d, d);
    let mut diff = DVector::zeros(d);
    for &i in idx {
        for k in 0..d {
            diff[k] = data[(i, k)] - mean[k];
        }
        cov.ger(1.0, &diff, &diff, 1.0);
    }
    cov /= (h - 1) as f64;
    symmetrize(&mut cov);
    let chol = Cholesky::new(&cov).ok()?;
    // reject numerically singular subsets
    let min_pivot = chol.l().diagonal().min();
    let max_pivot = chol.l().diagonal().max();
    if !(min_pivot > 1e-7 * max_pivot) {
        return None;
    }
    Some(Fit { mean, cov, chol })
}

fn distances(data: &DMatrix<f64>, fit: &Fit) -> Vec<f64> {
    let d = data.ncols();
    let mut buf = vec![0.0; d];
    (0..data.nrows())
        .map(|i| {
            for k in 0..d {
                buf[k] = data[(i, k)] - fit.mean[k];
            }
            fit.chol.quad_form_inv(&buf)
        })
        .collect()
}

fn objective_of(data: &DMatrix<f64>, idx: &[usize], kind: Objective) -> Option<(f64, Fit)> {
    let fit = fit_subset(data, idx)?;
    let obj = match kind {
        Objective::Mcd => fit.chol.log_det(),
        Objective::Mve => {
            let d = data.ncols();
            let mut buf = vec![0.0; d];
            let mut dmax = 0.0f64;
            for &i in idx {
                for k in 0..d {
                    buf[k] = data[(i, k)] - fit.mean[k];
                }
                dmax = dmax.max(fit.chol.quad_form_inv(&buf));
            }
            0.5 * (d as f64 * dmax.ln() + fit.chol.log_det())
        }
    };
    Some((obj, fit))
}

/// Indices of the `h` smallest distances, ties by index, returned sorted.
fn closest(dist: &[f64], h: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..dist.len()).collect();
    order.sort_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(a.cmp(&b)));
    let mut kept = order[..h].to_vec();
    kept.sort_unstable();
    kept
}

fn better(a: &Subset, b: &Subset) -> bool {
    match a.obj.total_cmp(&b.obj) {
        Ordering::Less => true,
        Ordering::Greater => false,
        Ordering::Equal => a.idx < b.idx,
    }
}

fn check_args(data: &DMatrix<f64>, h: usize) -> Result<()> {
    let (n, d) = data.shape();
    if n <= d + 1 {
        return Err(Error::InvalidArgument(format!(
            "subset search needs n > d + 1 (n={n}, d={d})"
        )));
    }
    if h <= d || h > n {
        return Err(Error::InvalidArgument(format!(
            "subset size h={h} must satisfy d < h <= n (d={d}, n={n})"
        )));
    }
    if h < (n + d + 1) / 2 {
        return Err(Error::InvalidArgument(format!(
            "subset size h={h} below the breakdown bound (n+d+1)/2 for n={n}, d={d}"
        )));
    }
    for k in 0..d {
        let c = data.column(k);
        if c.iter().all(|&v| v == c[0]) {
            return Err(Error::DegenerateVariable);
        }
    }
    Ok(())
}

fn finish(data: &DMatrix<f64>, best: Option<Subset>) -> Result<TrimResult> {
    let best = best.ok_or(Error::DegenerateVariable)?;
    let fit = fit_subset(data, &best.idx).ok_or(Error::DegenerateVariable)?;
    Ok(TrimResult {
        kept_indices: best.idx,
        location: fit.mean,
        scatter: fit.cov,
        objective: best.obj,
    })
}

/// Lexicographic successor of a sorted h-combination of `0..n`.
fn next_combination(c: &mut [usize], n: usize) -> bool {
    let h = c.len();
    let mut i = h;
    while i > 0 {
        i -= 1;
        if c[i] < n - h + i {
            c[i] += 1;
            for j in (i + 1)..h {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn exhaustive(data: &DMatrix<f64>, h: usize, kind: Objective) -> Result<TrimResult> {
    check_args(data, h)?;
    let n = data.nrows();
    let mut c: Vec<usize> = (0..h).collect();
    let mut best: Option<Subset> = None;
    loop {
        if let Some((obj, _)) = objective_of(data, &c, kind) {
            let cand = Subset { idx: c.clone(), obj };
            if best.as_ref().is_none_or(|b| better(&cand, b)) {
                best = Some(cand);
            }
        }
        if !next_combination(&mut c, n) {
            break;
        }
    }
    finish(data, best)
}

pub fn exhaustive_mcd(data: &DMatrix<f64>, h: usize) -> Result<TrimResult> {
    exhaustive(data, h, Objective::Mcd)
}

pub fn exhaustive_mve(data: &DMatrix<f64>, h: usize) -> Result<TrimResult> {
    exhaustive(data, h, Objective::Mve)
}

/// Random elemental start grown until its covariance is nonsingular, then
/// the h nearest points under that fit.
fn initial_subset(data: &DMatrix<f64>, h: usize, rng: &mut rand_chacha::ChaCha8Rng) -> Option<Vec<usize>> {
    let (n, d) = data.shape();
    let mut perm: Vec<usize> = sample(rng, n, n).into_vec();
    let mut size = d + 1;
    loop {
        let idx = &perm[..size];
        if let Some(fit) = fit_subset(data, idx) {
            return Some(closest(&distances(data, &fit), h));
        }
        size += 1;
        if size > h {
            perm.clear();
            return None;
        }
    }
}

/// One concentration step; `None` when the subset is singular.
fn c_step(data: &DMatrix<f64>, idx: &[usize], h: usize, kind: Objective) -> Option<Subset> {
    let fit = fit_subset(data, idx)?;
    let next = closest(&distances(data, &fit), h);
    let (obj, _) = objective_of(data, &next, kind)?;
    Some(Subset { idx: next, obj })
}

fn concentrate(data: &DMatrix<f64>, mut cur: Subset, h: usize, kind: Objective, steps: usize, tol: f64) -> Subset {
    for _ in 0..steps {
        match c_step(data, &cur.idx, h, kind) {
            Some(next) if cur.obj - next.obj > tol => cur = next,
            Some(next) if next.obj <= cur.obj && better(&next, &cur) => {
                cur = next;
                break;
            }
            _ => break,
        }
    }
    cur
}

/// Best-improvement single swaps until no swap lowers the objective.
fn swap_search(data: &DMatrix<f64>, mut cur: Subset, kind: Objective) -> Subset {
    let n = data.nrows();
    loop {
        let inside = cur.idx.clone();
        let outside: Vec<usize> = (0..n).filter(|i| inside.binary_search(i).is_err()).collect();
        let mut best: Option<Subset> = None;
        for (pos, _) in inside.iter().enumerate() {
            for &o in &outside {
                let mut cand = inside.clone();
                cand[pos] = o;
                cand.sort_unstable();
                if let Some((obj, _)) = objective_of(data, &cand, kind) {
                    let s = Subset { idx: cand, obj };
                    if better(&s, &cur) && best.as_ref().is_none_or(|b| better(&s, b)) {
                        best = Some(s);
                    }
                }
            }
        }
        match best {
            Some(b) if b.obj < cur.obj - REFINE_TOL => cur = b,
            _ => return cur,
        }
    }
}

fn randomized(data: &DMatrix<f64>, h: usize, n_starts: usize, seed: u64, kind: Objective) -> Result<TrimResult> {
    check_args(data, h)?;
    let n = data.nrows();
    let mut rng = rng_from_seed(seed);
    let mut pool: Vec<Subset> = Vec::new();
    for _ in 0..n_starts.max(1) {
        let Some(idx) = initial_subset(data, h, &mut rng) else {
            continue;
        };
        let Some((obj, _)) = objective_of(data, &idx, kind) else {
            continue;
        };
        let s = concentrate(data, Subset { idx, obj }, h, kind, SHORT_CSTEPS, 0.0);
        if !pool.iter().any(|q| q.idx == s.idx) {
            pool.push(s);
        }
    }
    pool.sort_by(|a, b| a.obj.total_cmp(&b.obj).then_with(|| a.idx.cmp(&b.idx)));
    pool.truncate(REFINE_TOP);
    let swap = kind == Objective::Mve && h * (n - h) <= MVE_SWAP_MAX_PAIRS;
    let mut best: Option<Subset> = None;
    for s in pool {
        let mut s = concentrate(data, s, h, kind, REFINE_MAX_ITER, REFINE_TOL);
        if swap {
            s = swap_search(data, s, kind);
        }
        if best.as_ref().is_none_or(|b| better(&s, b)) {
            best = Some(s);
        }
    }
    finish(data, best)
}

/// Randomized MCD search regardless of n.
pub fn fast_mcd(data: &DMatrix<f64>, h: usize, n_starts: usize, seed: u64) -> Result<TrimResult> {
    randomized(data, h, n_starts, seed, Objective::Mcd)
}

/// Randomized MVE search regardless of n.
pub fn fast_mve(data: &DMatrix<f64>, h: usize, n_starts: usize, seed: u64) -> Result<TrimResult> {
    randomized(data, h, n_starts, seed, Objective::Mve)
}

pub fn mcd_trim(data: &DMatrix<f64>, h: usize, n_starts: usize, seed: u64) -> Result<TrimResult> {
    if data.nrows() <= EXHAUSTIVE_MAX_N {
        exhaustive_mcd(data, h)
    } else {
        fast_mcd(data, h, n_starts, seed)
    }
}

pub fn mve_trim(data: &DMatrix<f64>, h: usize, n_starts: usize, seed: u64) -> Result<TrimResult> {
    if data.nrows() <= EXHAUSTIVE_MAX_N {
        exhaustive_mve(data, h)
    } else {
        fast_mve(data, h, n_starts, seed)
    }
}

/// `ceil(keep_fraction * n)`, guarded against representation error.
pub fn subset_size(keep_fraction: f64, n: usize) -> usize {
    ((keep_fraction * n as f64) - 1e-9).ceil().max(0.0) as usize
}

/// Trims each class separately and returns the kept rows in original order.
pub fn trim_dataset(
    ds: &LongitudinalDataset,
    keep_fraction: f64,
    method: TrimMethod,
    seed: u64,
) -> Result<LongitudinalDataset> {
    trim_dataset_with_starts(ds, keep_fraction, method, seed, DEFAULT_STARTS)
}

pub fn trim_dataset_with_starts(
    ds: &LongitudinalDataset,
    keep_fraction: f64,
    method: TrimMethod,
    seed: u64,
    n_starts: usize,
) -> Result<LongitudinalDataset> {
    if !(keep_fraction > 0.5 && keep_fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "keep_fraction {keep_fraction} outside (0.5, 1]"
        )));
    }
    if method == TrimMethod::None || keep_fraction == 1.0 {
        return Ok(ds.clone());
    }
    let mut kept = Vec::with_capacity(ds.n());
    for class in [0u8, 1] {
        let rows = ds.class_indices(class);
        let x = ds.x.select_rows(&rows);
        let h = subset_size(keep_fraction, rows.len());
        let class_seed = seed.wrapping_add(class as u64);
        let res = match method {
            TrimMethod::Mcd => mcd_trim(&x, h, n_starts, class_seed)?,
            TrimMethod::Mve => mve_trim(&x, h, n_starts, class_seed)?,
            TrimMethod::None => unreachable!(),
        };
        kept.extend(res.kept_indices.iter().map(|&i| rows[i]));
    }
    kept.sort_unstable();
    Ok(ds.select(&kept))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn outlier_config() -> DMatrix<f64> {
        DMatrix::from_row_slice(
            5,
            2,
            &[0.0, 0.0, 1.0, 0.1, 0.2, 1.0, 0.9, 1.1, 100.0, 100.0],
        )
    }

    #[test]
    fn combinations_enumerate_binomial() {
        let mut c = vec![0, 1, 2];
        let mut count = 1;
        while next_combination(&mut c, 6) {
            count += 1;
        }
        assert_eq!(count, 20);
    }

    #[test]
    fn outlier_excluded() {
        let x = outlier_config();
        assert_eq!(mcd_trim(&x, 4, 10, 0).unwrap().kept_indices, vec![0, 1, 2, 3]);
        assert_eq!(mve_trim(&x, 4, 10, 0).unwrap().kept_indices, vec![0, 1, 2, 3]);
    }

    #[test]
    fn full_subset_is_classical() {
        let x = outlier_config();
        let r = mcd_trim(&x, 5, 10, 0).unwrap();
        assert_eq!(r.kept_indices, vec![0, 1, 2, 3, 4]);
        let m = crate::linalg::col_means(&x);
        let c = crate::linalg::covariance(&x, 1);
        assert!((r.location - m).amax() < 1e-12);
        assert!((r.scatter - c).amax() < 1e-9);
        let v = mve_trim(&x, 5, 10, 0).unwrap();
        assert_eq!(v.kept_indices.len(), 5);
    }

    #[test]
    fn too_few_points() {
        let x = DMatrix::from_row_slice(3, 2, &[0.0, 1.0, 2.0, 0.5, 1.0, 3.0]);
        assert!(mve_trim(&x, 3, 10, 0).is_err());
    }

    #[test]
    fn constant_column_errors() {
        let x = DMatrix::from_fn(8, 2, |i, j| if j == 0 { i as f64 } else { 1.0 });
        assert_eq!(mcd_trim(&x, 6, 10, 0).unwrap_err(), Error::DegenerateVariable);
        assert_eq!(
            Error::DegenerateVariable.to_string(),
            "degenerate variable: unique quantiles undeterminable"
        );
    }

    #[test]
    fn subset_sizes() {
        assert_eq!(subset_size(0.9, 42), 38);
        assert_eq!(subset_size(0.9, 142), 128);
        assert_eq!(subset_size(0.9, 100), 90);
        assert_eq!(subset_size(0.9, 93), 84);
    }
}
