//! Exact solve of the continuous problem left once every region is fixed.
//!
//! `max sum_i theta_i x_i^2 + c_i x_i` over boxes with a few `<=` rows. The
//! dual is a piecewise-quadratic function of one multiplier per row; it is
//! minimized by projected Newton steps with an exact line search along the
//! breakpoints of its derivative.

use crate::instance::{objective_value, Instance, Interval, LeRow, Region};

use super::best_on;

/// Curvature used in place of zero when mapping multipliers to `x`.
const MIN_CURVATURE: f64 = 1e-10;
const FEAS_TOL: f64 = 1e-10;
const MAX_ITERS: usize = 500;

#[derive(Debug, Clone, PartialEq)]
pub enum FixedOutcome {
    /// `value` is the full objective at `x`; `bound` is a dual bound no
    /// smaller than it.
    Optimal {
        x: Vec<f64>,
        value: f64,
        bound: f64,
    },
    Infeasible,
    /// No convergence; `bound` is still a valid upper bound.
    Unresolved {
        bound: f64,
    },
}

/// Best spend changes for a fixed region assignment.
pub fn solve_fixed(inst: &Instance, regions: &[Region]) -> FixedOutcome {
    assert_eq!(regions.len(), inst.n());
    let mut boxes = Vec::with_capacity(inst.n());
    for (i, &r) in regions.iter().enumerate() {
        boxes.push(match r {
            Region::Stay => Interval::new(0.0, 0.0),
            _ => match inst.region(i).get(r) {
                Some(iv) => iv,
                None => return FixedOutcome::Infeasible,
            },
        });
    }
    let qp = BoxQp {
        theta: inst.activities().iter().map(|a| a.theta).collect(),
        c: inst.activities().iter().map(|a| a.phi).collect(),
        boxes,
        rows: inst.coupling_rows(),
    };
    match qp.solve() {
        QpOutcome::Optimal { x, bound } => {
            let value = objective_value(inst, &x);
            let bound = (bound + inst.baseline_revenue()).max(value);
            FixedOutcome::Optimal { x, value, bound }
        }
        QpOutcome::Infeasible => FixedOutcome::Infeasible,
        QpOutcome::Unresolved { bound } => FixedOutcome::Unresolved {
            bound: bound + inst.baseline_revenue(),
        },
    }
}

enum QpOutcome {
    Optimal { x: Vec<f64>, bound: f64 },
    Infeasible,
    Unresolved { bound: f64 },
}

struct BoxQp {
    theta: Vec<f64>,
    c: Vec<f64>,
    boxes: Vec<Interval>,
    rows: Vec<LeRow>,
}

impl BoxQp {
    fn curvature(&self, i: usize) -> f64 {
        self.theta[i].min(-MIN_CURVATURE)
    }

    fn prices(&self, lam: &[f64]) -> Vec<f64> {
        (0..self.theta.len())
            .map(|i| {
                self.rows
                    .iter()
                    .zip(lam)
                    .map(|(r, l)| l * r.coeffs[i])
                    .sum()
            })
            .collect()
    }

    fn x_at(&self, i: usize, p: f64) -> f64 {
        self.boxes[i].clamp((p - self.c[i]) / (2.0 * self.curvature(i)))
    }

    fn slacks(&self, x: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|r| r.rhs - r.activity(x)).collect()
    }

    /// Dual function with the true curvature; an upper bound for any `lam >= 0`.
    fn dual_bound(&self, lam: &[f64], p: &[f64]) -> f64 {
        let inner: f64 = (0..self.theta.len())
            .map(|i| best_on(self.theta[i], self.c[i] - p[i], self.boxes[i]).1)
            .sum();
        inner
            + self
                .rows
                .iter()
                .zip(lam)
                .map(|(r, l)| l * r.rhs)
                .sum::<f64>()
    }

    fn solve(&self) -> QpOutcome {
        for r in &self.rows {
            let lowest: f64 = r
                .coeffs
                .iter()
                .zip(&self.boxes)
                .map(|(&a, b)| if a > 0.0 { a * b.lo } else { a * b.hi })
                .sum();
            if lowest > r.rhs + FEAS_TOL * (1.0 + r.rhs.abs()) {
                return QpOutcome::Infeasible;
            }
        }
        let k = self.rows.len();
        let n = self.theta.len();
        let mut lam = vec![0.0; k];
        let mut best_bound = f64::INFINITY;

        for _ in 0..MAX_ITERS {
            let p = self.prices(&lam);
            let x: Vec<f64> = (0..n).map(|i| self.x_at(i, p[i])).collect();
            let grad = self.slacks(&x);
            best_bound = best_bound.min(self.dual_bound(&lam, &p));

            let pg: Vec<f64> = grad
                .iter()
                .zip(&lam)
                .map(|(&g, &l)| if l <= 0.0 && g > 0.0 { 0.0 } else { g })
                .collect();
            if pg.iter().all(|g| g.abs() <= FEAS_TOL) {
                return QpOutcome::Optimal {
                    x,
                    bound: best_bound,
                };
            }

            let d = self.direction(&lam, &p, &grad, &pg);
            match self.line_search(&lam, &p, &d) {
                Step::Unbounded => return QpOutcome::Infeasible,
                Step::To(t) => {
                    if t <= 0.0 {
                        break;
                    }
                    for (l, dk) in lam.iter_mut().zip(&d) {
                        *l = (*l + t * dk).max(0.0);
                    }
                }
            }
        }
        QpOutcome::Unresolved { bound: best_bound }
    }

    /// Projected Newton direction on the current piece of the dual.
    fn direction(&self, lam: &[f64], p: &[f64], grad: &[f64], pg: &[f64]) -> Vec<f64> {
        let k = self.rows.len();
        let interior: Vec<usize> = (0..self.theta.len())
            .filter(|&i| {
                let b = self.boxes[i];
                let raw = (p[i] - self.c[i]) / (2.0 * self.curvature(i));
                b.lo < b.hi && raw > b.lo && raw < b.hi
            })
            .collect();
        let mut free: Vec<usize> = (0..k).filter(|&j| pg[j] != 0.0).collect();
        loop {
            if free.is_empty() {
                break;
            }
            let m = free.len();
            let mut h = vec![vec![0.0; m]; m];
            for &i in &interior {
                let w = 1.0 / (-2.0 * self.curvature(i));
                for (a, &ra) in free.iter().enumerate() {
                    for (b, &rb) in free.iter().enumerate() {
                        h[a][b] += w * self.rows[ra].coeffs[i] * self.rows[rb].coeffs[i];
                    }
                }
            }
            let scale = (0..m).map(|a| h[a][a]).fold(0.0, f64::max).max(1.0);
            for (a, row) in h.iter_mut().enumerate() {
                row[a] += 1e-12 * scale;
            }
            let rhs: Vec<f64> = free.iter().map(|&j| -grad[j]).collect();
            let Some(sol) = solve_dense(h, rhs) else {
                break;
            };
            let blocked: Vec<usize> = free
                .iter()
                .zip(&sol)
                .filter(|(&j, &v)| lam[j] <= 0.0 && v < 0.0)
                .map(|(&j, _)| j)
                .collect();
            if blocked.is_empty() {
                let mut d = vec![0.0; k];
                for (&j, v) in free.iter().zip(sol) {
                    d[j] = v;
                }
                let slope: f64 = d.iter().zip(grad).map(|(a, b)| a * b).sum();
                if slope < 0.0 {
                    return d;
                }
                break;
            }
            free.retain(|j| !blocked.contains(j));
        }
        pg.iter().map(|g| -g).collect()
    }

    /// Exact minimizer of the dual along `lam + t d`, `t >= 0`, keeping
    /// multipliers nonnegative.
    fn line_search(&self, lam: &[f64], p: &[f64], d: &[f64]) -> Step {
        let n = self.theta.len();
        let q: Vec<f64> = (0..n)
            .map(|i| {
                self.rows
                    .iter()
                    .zip(d)
                    .map(|(r, dk)| dk * r.coeffs[i])
                    .sum()
            })
            .collect();
        let db: f64 = self.rows.iter().zip(d).map(|(r, dk)| dk * r.rhs).sum();
        let slope = |t: f64| -> f64 {
            db - (0..n)
                .map(|i| q[i] * self.x_at(i, p[i] + t * q[i]))
                .sum::<f64>()
        };

        let t_max = lam
            .iter()
            .zip(d)
            .filter(|(_, &dk)| dk < 0.0)
            .map(|(&l, &dk)| l / -dk)
            .fold(f64::INFINITY, f64::min);

        let mut bps: Vec<f64> = Vec::new();
        for i in 0..n {
            let b = self.boxes[i];
            if q[i] == 0.0 || b.lo >= b.hi {
                continue;
            }
            let two_theta = 2.0 * self.curvature(i);
            for end in [b.lo, b.hi] {
                let t = (two_theta * end - (p[i] - self.c[i])) / q[i];
                if t > 0.0 && t < t_max {
                    bps.push(t);
                }
            }
        }
        bps.sort_by(f64::total_cmp);
        if t_max.is_finite() {
            bps.push(t_max);
        }

        // first breakpoint where the slope is nonnegative
        let idx = bps.partition_point(|&t| slope(t) < 0.0);
        if idx == bps.len() {
            if t_max.is_finite() {
                return Step::To(t_max);
            }
            let tail = bps.last().copied().unwrap_or(0.0);
            let s_tail = slope(tail);
            let s_far = slope(tail + 1.0);
            if s_far > s_tail {
                return Step::To(tail + (-s_tail / (s_far - s_tail)));
            }
            if s_tail < -FEAS_TOL {
                return Step::Unbounded;
            }
            return Step::To(tail);
        }
        let hi = bps[idx];
        let lo = if idx == 0 { 0.0 } else { bps[idx - 1] };
        let (s_lo, s_hi) = (slope(lo), slope(hi));
        if s_hi <= s_lo {
            return Step::To(hi);
        }
        Step::To(lo + (hi - lo) * (-s_lo / (s_hi - s_lo)))
    }
}

enum Step {
    To(f64),
    Unbounded,
}

/// Gaussian elimination with partial pivoting.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}
