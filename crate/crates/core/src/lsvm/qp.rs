//! Dense convex QP with box bounds and at most one linear equality:
//!
//! ```text
//! min ½ xᵀQx + cᵀx   s.t.  lo ≤ x ≤ hi,  aᵀx = s
//! ```
//!
//! Solved by SMO-style pairwise updates on `u_i = a_i x_i`. The first index
//! of each pair is the maximal KKT violator, the second maximizes the
//! second-order objective decrease. Coordinates with `a_i = 0` are free
//! of the equality and get single-coordinate Newton steps.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::is_symmetric;

const ETA_FLOOR: f64 = 1e-12;
/// SMO iterations between Newton steps on the free set.
const NEWTON_EVERY: usize = 20;
const NEWTON_MAX_FREE: usize = 400;

#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem {
    pub q: DMatrix<f64>,
    pub linear: DVector<f64>,
    pub lo: DVector<f64>,
    pub hi: DVector<f64>,
    /// `(a, s)` for the constraint `aᵀx = s`.
    pub eq: Option<(DVector<f64>, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub x: DVector<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Largest KKT violation at exit.
    pub violation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QpOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for QpOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 1_000_000,
        }
    }
}

impl QpProblem {
    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.q * x)) + self.linear.dot(x)
    }

    fn validate(&self) -> Result<()> {
        let n = self.dim();
        if self.q.shape() != (n, n) || self.lo.len() != n || self.hi.len() != n {
            return Err(Error::Dimension("QP component sizes differ".into()));
        }
        if let Some((a, _)) = &self.eq {
            if a.len() != n {
                return Err(Error::Dimension("equality vector has wrong length".into()));
            }
        }
        if !is_symmetric(&self.q, 1e-10) {
            return Err(Error::InvalidArgument("Q not symmetric".into()));
        }
        if let Some(i) = (0..n).find(|&i| !(self.lo[i] <= self.hi[i])) {
            return Err(Error::Infeasible(format!("empty box in coordinate {i}")));
        }
        Ok(())
    }

    /// Clips `start` into the box, then repairs the equality greedily.
    fn feasible_point(&self, start: Option<&DVector<f64>>) -> Result<DVector<f64>> {
        let n = self.dim();
        let mut x = DVector::from_fn(n, |i, _| {
            let v = start.map_or(0.0, |s| s[i]);
            v.clamp(self.lo[i], self.hi[i])
        });
        if let Some((a, s)) = &self.eq {
            let mut r = s - a.dot(&x);
            for i in 0..n {
                if r == 0.0 {
                    break;
                }
                if a[i] == 0.0 {
                    continue;
                }
                let target = (x[i] + r / a[i]).clamp(self.lo[i], self.hi[i]);
                r -= a[i] * (target - x[i]);
                x[i] = target;
            }
            let scale = 1.0 + s.abs() + a.iter().zip(x.iter()).map(|(ai, xi)| (ai * xi).abs()).sum::<f64>();
            if r.abs() > 1e-10 * scale {
                return Err(Error::Infeasible(format!(
                    "equality unreachable inside the box (residual {r:.3e})"
                )));
            }
        }
        Ok(x)
    }
}

/// Equality-preserving Newton step restricted to coordinates strictly inside
/// the box, cut back to stay feasible. Low-rank `Q` leaves flat faces where
/// pairwise steps zigzag; along those the ridge-regularized step runs straight
/// to a bound. Returns whether the objective decreased.
fn newton_step(problem: &QpProblem, x: &mut DVector<f64>, g: &mut DVector<f64>) -> bool {
    let (q, lo, hi) = (&problem.q, &problem.lo, &problem.hi);
    let free: Vec<usize> = (0..x.len()).filter(|&k| x[k] > lo[k] && x[k] < hi[k]).collect();
    let f = free.len();
    if f == 0 || f > NEWTON_MAX_FREE {
        return false;
    }
    let eq = problem.eq.as_ref().map(|(a, _)| a);
    let m = f + usize::from(eq.is_some());
    let diag_max = free.iter().map(|&k| q[(k, k)].abs()).fold(0.0, f64::max);
    let ridge = 1e-10 * (1.0 + diag_max);
    let mut kkt = DMatrix::zeros(m, m);
    let mut rhs = DVector::zeros(m);
    for (r, &i) in free.iter().enumerate() {
        for (c, &j) in free.iter().enumerate() {
            kkt[(r, c)] = q[(i, j)];
        }
        kkt[(r, r)] += ridge;
        rhs[r] = -g[i];
        if let Some(a) = eq {
            kkt[(r, f)] = a[i];
            kkt[(f, r)] = a[i];
        }
    }
    let Some(sol) = kkt.lu().solve(&rhs) else {
        return false;
    };
    let d = sol.rows(0, f);
    if d.iter().any(|v| !v.is_finite()) {
        return false;
    }
    let mut step = 1.0f64;
    for (r, &k) in free.iter().enumerate() {
        if d[r] > 0.0 {
            step = step.min((hi[k] - x[k]) / d[r]);
        } else if d[r] < 0.0 {
            step = step.min((lo[k] - x[k]) / d[r]);
        }
    }
    if !(step > 0.0) {
        return false;
    }
    let mut gd = 0.0;
    let mut dqd = 0.0;
    for (r, &i) in free.iter().enumerate() {
        gd += g[i] * d[r];
        for (c, &j) in free.iter().enumerate() {
            dqd += d[r] * q[(i, j)] * d[c];
        }
    }
    if !(step * gd + 0.5 * step * step * dqd < 0.0) {
        return false;
    }
    for (r, &k) in free.iter().enumerate() {
        let old = x[k];
        x[k] = snap(old + step * d[r], lo[k], hi[k]);
        let dx = x[k] - old;
        if dx != 0.0 {
            for i in 0..x.len() {
                g[i] += q[(i, k)] * dx;
            }
        }
    }
    true
}

/// Clamps into `[lo, hi]` and pins values within rounding distance of a bound,
/// so a coordinate cannot linger just inside it and stall the pair selection.
fn snap(v: f64, lo: f64, hi: f64) -> f64 {
    let eps = 1e-12 * (1.0 + (hi - lo).abs());
    if v <= lo + eps {
        lo
    } else if v >= hi - eps {
        hi
    } else {
        v
    }
}

pub fn solve_qp(problem: &QpProblem, opts: QpOptions) -> Result<QpSolution> {
    solve_qp_warm(problem, None, opts)
}

pub fn solve_qp_warm(problem: &QpProblem, warm: Option<&DVector<f64>>, opts: QpOptions) -> Result<QpSolution> {
    problem.validate()?;
    let n = problem.dim();
    let q = &problem.q;
    let mut x = problem.feasible_point(warm)?;
    let mut g = q * &x + &problem.linear;
    let ones = DVector::from_element(n, 0.0);
    let a = problem.eq.as_ref().map_or(&ones, |(a, _)| a);
    let (lo, hi) = (&problem.lo, &problem.hi);

    let mut iterations = 0;
    let mut violation;
    loop {
        // pair with a_i != 0: u_i = a_i x_i lives in [min(a lo, a hi), max(..)]
        let mut i_up = usize::MAX;
        let mut g_up = f64::INFINITY;
        let mut i_low = usize::MAX;
        let mut g_low = f64::NEG_INFINITY;
        let mut single = usize::MAX;
        let mut single_v = 0.0;
        for k in 0..n {
            let ak = a[k];
            if ak == 0.0 || problem.eq.is_none() {
                let can_up = x[k] < hi[k];
                let can_down = x[k] > lo[k];
                let v = if g[k] < 0.0 && can_up {
                    -g[k]
                } else if g[k] > 0.0 && can_down {
                    g[k]
                } else {
                    0.0
                };
                if v > single_v {
                    single_v = v;
                    single = k;
                }
                continue;
            }
            let gk = g[k] / ak;
            // can u_k increase? x moves by +1/a_k
            let u_can_up = if ak > 0.0 { x[k] < hi[k] } else { x[k] > lo[k] };
            let u_can_down = if ak > 0.0 { x[k] > lo[k] } else { x[k] < hi[k] };
            if u_can_up && gk < g_up {
                g_up = gk;
                i_up = k;
            }
            if u_can_down && gk > g_low {
                g_low = gk;
                i_low = k;
            }
        }
        let pair_v = if i_up != usize::MAX && i_low != usize::MAX {
            (g_low - g_up).max(0.0)
        } else {
            0.0
        };
        violation = pair_v.max(single_v);
        if violation <= opts.tol || iterations >= opts.max_iter {
            break;
        }
        iterations += 1;

        if iterations % NEWTON_EVERY == 0 && newton_step(problem, &mut x, &mut g) {
            continue;
        }

        if pair_v >= single_v {
            // i is the maximal violator; j maximizes the second-order decrease
            let i = i_up;
            let ai = a[i];
            let mut j = i_low;
            let mut best_gain = f64::NEG_INFINITY;
            for k in 0..n {
                let ak = a[k];
                if ak == 0.0 {
                    continue;
                }
                let gk = g[k] / ak;
                let u_can_down = if ak > 0.0 { x[k] > lo[k] } else { x[k] < hi[k] };
                if !u_can_down || gk <= g_up {
                    continue;
                }
                let eta = (q[(i, i)] / (ai * ai) + q[(k, k)] / (ak * ak) - 2.0 * q[(i, k)] / (ai * ak)).max(ETA_FLOOR);
                let gain = (gk - g_up).powi(2) / eta;
                if gain > best_gain {
                    best_gain = gain;
                    j = k;
                }
            }
            let g_low = g[j] / a[j];
            let (ai, aj) = (a[i], a[j]);
            let eta = (q[(i, i)] / (ai * ai) + q[(j, j)] / (aj * aj) - 2.0 * q[(i, j)] / (ai * aj)).max(ETA_FLOOR);
            // room for u_i to grow and u_j to shrink
            let room_i = if ai > 0.0 { (hi[i] - x[i]) * ai } else { (lo[i] - x[i]) * ai };
            let room_j = if aj > 0.0 { (x[j] - lo[j]) * aj } else { (x[j] - hi[j]) * aj };
            let delta = ((g_low - g_up) / eta).min(room_i).min(room_j).max(0.0);
            let dxi = delta / ai;
            let dxj = -delta / aj;
            let (old_i, old_j) = (x[i], x[j]);
            x[i] = snap(x[i] + dxi, lo[i], hi[i]);
            x[j] = snap(x[j] + dxj, lo[j], hi[j]);
            let (dxi, dxj) = (x[i] - old_i, x[j] - old_j);
            for k in 0..n {
                g[k] += q[(k, i)] * dxi + q[(k, j)] * dxj;
            }
        } else {
            let k = single;
            let qkk = q[(k, k)];
            let target = if qkk > ETA_FLOOR {
                x[k] - g[k] / qkk
            } else if g[k] < 0.0 {
                hi[k]
            } else {
                lo[k]
            };
            let target = if target.is_finite() { target } else if g[k] < 0.0 { hi[k] } else { lo[k] };
            let nx = snap(target, lo[k], hi[k]);
            let dx = nx - x[k];
            if !dx.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "unbounded direction in coordinate {k}"
                )));
            }
            x[k] = nx;
            for m in 0..n {
                g[m] += q[(m, k)] * dx;
            }
        }
    }

    Ok(QpSolution {
        objective: problem.objective(&x),
        converged: violation <= opts.tol,
        x,
        iterations,
        violation,
    })
}
