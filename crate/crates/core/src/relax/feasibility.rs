//! Infeasibility certificates for relaxed nodes.
//!
//! For weights `w >= 0` on the coupling rows, let `F(w)` be the least value of
//! `w^T (A x - b)` over the node's relaxed set (hull rows plus cardinality).
//! `F(w) > 0` proves the node has no feasible point. `F` is concave and
//! positively homogeneous, so it is searched over the unit simplex.

use crate::instance::{Instance, LeRow};

use super::NodeState;

const ITERS: usize = 120;

struct Probe<'a> {
    inst: &'a Instance,
    node: &'a NodeState,
    rows: Vec<LeRow>,
}

impl Probe<'_> {
    /// `F(w)` and a supergradient.
    fn eval(&self, w: &[f64]) -> (f64, Vec<f64>) {
        let n = self.inst.n();
        let mut x = vec![0.0; n];
        let mut value = 0.0;
        let mut scale = 0.0;
        let mut free: Vec<(f64, usize, f64)> = Vec::new();
        for (i, xi) in x.iter_mut().enumerate() {
            let price: f64 = self
                .rows
                .iter()
                .zip(w)
                .map(|(r, wk)| wk * r.coeffs[i])
                .sum();
            let open = self.node.open(self.inst, i);
            let hull = match open.fixed {
                Some((_, Some(iv))) => {
                    let (v, at) = lowest(price, iv.lo, iv.hi);
                    value += v;
                    scale += v.abs();
                    *xi = at;
                    continue;
                }
                Some((_, None)) => continue,
                None => match (open.left, open.right) {
                    (None, None) => continue,
                    (Some(l), None) => (l.lo, l.hi),
                    (None, Some(r)) => (r.lo, r.hi),
                    (Some(l), Some(r)) => (l.lo, r.hi),
                },
            };
            let (v, at) = lowest(price, hull.0, hull.1);
            if v < 0.0 {
                free.push((v, i, at));
            }
        }
        let room = self.inst.m().saturating_sub(self.node.fixed_changes());
        if free.len() > room {
            free.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            free.truncate(room);
        }
        for (v, i, at) in free {
            value += v;
            scale += v.abs();
            x[i] = at;
        }
        let mut grad = Vec::with_capacity(self.rows.len());
        for (r, wk) in self.rows.iter().zip(w) {
            value -= wk * r.rhs;
            scale += (wk * r.rhs).abs();
            grad.push(r.activity(&x) - r.rhs);
        }
        (value - 1e-9 * (1.0 + scale), grad)
    }
}

fn lowest(price: f64, lo: f64, hi: f64) -> (f64, f64) {
    let (a, b) = (price * lo, price * hi);
    if a <= b {
        (a, lo)
    } else {
        (b, hi)
    }
}

/// Euclidean projection onto `{w >= 0, sum w = 1}`.
fn project_simplex(v: &mut [f64]) {
    let mut u: Vec<f64> = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    let mut tau = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        acc += uj;
        let t = (acc - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            tau = t;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - tau).max(0.0);
    }
}

/// Whether the node's relaxation provably has no point satisfying the
/// coupling rows. `hint` is an optional weight direction to try first.
pub fn relaxed_infeasible(inst: &Instance, node: &NodeState, hint: Option<&[f64]>) -> bool {
    let probe = Probe {
        inst,
        node,
        rows: inst.coupling_rows(),
    };
    let k = probe.rows.len();
    let mut starts: Vec<Vec<f64>> = (0..k)
        .map(|j| (0..k).map(|i| (i == j) as u8 as f64).collect())
        .collect();
    if let Some(h) = hint {
        let total: f64 = h.iter().map(|v| v.max(0.0)).sum();
        if total > 0.0 {
            starts.insert(0, h.iter().map(|v| v.max(0.0) / total).collect());
        }
    }
    starts.push(vec![1.0 / k as f64; k]);
    for start in &starts {
        if probe.eval(start).0 > 0.0 {
            return true;
        }
    }
    if k == 1 {
        return false;
    }
    let mut w = starts[0].clone();
    for t in 0..ITERS {
        let (v, g) = probe.eval(&w);
        if v > 0.0 {
            return true;
        }
        let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        let step = 0.5 / ((t + 1) as f64).sqrt();
        for (wi, gi) in w.iter_mut().zip(&g) {
            *wi += step * gi / norm;
        }
        project_simplex(&mut w);
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{Activity, LinearConstraint, Region, Sense};

    fn act(id: &str) -> Activity {
        Activity {
            id: id.into(),
            s: 5.0,
            l: 1.0,
            u: 10.0,
            delta: 1.0,
            theta: -1.0,
            phi: 1.0,
            psi: 0.0,
        }
    }

    #[test]
    fn simplex_projection() {
        let mut v = vec![0.2, 0.2, 0.2];
        project_simplex(&mut v);
        assert!(v.iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-12));
        let mut v = vec![3.0, -1.0];
        project_simplex(&mut v);
        assert_eq!(v, vec![1.0, 0.0]);
    }

    #[test]
    fn combined_rows_certify() {
        // each row alone is satisfiable on [-4, 5]^2
        let extras = vec![
            LinearConstraint {
                coeffs: vec![1.0, -1.0],
                sense: Sense::Ge,
                rhs: 4.0,
            },
            LinearConstraint {
                coeffs: vec![0.0, 1.0],
                sense: Sense::Ge,
                rhs: 2.0,
            },
        ];
        // needs x1 >= 6 > 5
        let inst = Instance::new(vec![act("a"), act("b")], 3.0, 2, extras).unwrap();
        assert!(relaxed_infeasible(&inst, &NodeState::root(&inst), None));
    }

    #[test]
    fn cap_matters() {
        // one activity can add at most 5
        let extras = vec![LinearConstraint {
            coeffs: vec![1.0, 1.0],
            sense: Sense::Ge,
            rhs: 7.0,
        }];
        let inst = Instance::new(vec![act("a"), act("b")], 3.0, 1, extras.clone()).unwrap();
        assert!(relaxed_infeasible(&inst, &NodeState::root(&inst), None));
        let inst = Instance::new(vec![act("a"), act("b")], 3.0, 2, extras).unwrap();
        let root = NodeState::root(&inst);
        assert!(!relaxed_infeasible(&inst, &root, None));
        let stay = root.child(&inst, 0, Region::Stay).unwrap();
        assert!(relaxed_infeasible(&inst, &stay, None));
    }
}
