//! Lagrangian bounds for branch-and-bound nodes.
//!
//! The coupling rows (budget, extras, cardinality) are dualized. What remains
//! separates by activity, and each activity's piece is solved in closed form
//! over the convex hull of its open regions:
//!
//! * MIQP relaxation: the indicator needed to reach `x` is `x / u^R` for
//!   `x > 0` and `x / l^L` for `x < 0`, so the inner problem is a concave
//!   quadratic in `x` with a kink at zero.
//! * Perspective relaxation: with `x = t w` the objective
//!   `theta x^2 / t + c x - mu t` equals `t (theta w^2 + c w - mu)`, linear in
//!   `t`. The optimum sits at `t = 0` or `t = 1`, with `w` ranging over the hull
//!   of the open regions.
//!
//! Any nonnegative multipliers give a valid upper bound, so the bound does not
//! depend on the subgradient method converging.

mod feasibility;
mod fixed;
mod node;

pub use feasibility::relaxed_infeasible;
pub use fixed::{solve_fixed, FixedOutcome};
pub use node::{ActivityStatus, NodeState, OpenRegions};

use crate::instance::{Activity, Instance, Interval, LeRow, RegionBounds};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Formulation {
    /// Big-M-free MIQP with the plain quadratic objective.
    Miqp,
    /// Perspective objective, the relaxation of the MISOCP.
    Perspective,
}

impl Formulation {
    pub fn label(self) -> &'static str {
        match self {
            Formulation::Miqp => "miqp",
            Formulation::Perspective => "persp",
        }
    }
}

/// Maximizer of one activity's Lagrangian term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActivityChoice {
    pub x: f64,
    pub z_left: f64,
    pub z_right: f64,
    /// Term value without `psi`.
    pub value: f64,
}

impl ActivityChoice {
    const STAY: ActivityChoice = ActivityChoice {
        x: 0.0,
        z_left: 0.0,
        z_right: 0.0,
        value: 0.0,
    };

    pub fn z_change(&self) -> f64 {
        self.z_left + self.z_right
    }
}

/// Maximizes `theta x^2 + c x` on an interval.
pub(crate) fn best_on(theta: f64, c: f64, iv: Interval) -> (f64, f64) {
    let x = if theta < 0.0 {
        iv.clamp(-c / (2.0 * theta))
    } else if c > 0.0 {
        iv.hi
    } else if c < 0.0 {
        iv.lo
    } else {
        iv.clamp(0.0)
    };
    (x, theta * x * x + c * x)
}

/// Maximizes one activity's Lagrangian term
/// `f(x) - psi - price * x - mu * (z^L + z^R)` over the node's open regions
/// with indicators relaxed to `[0, 1]`.
///
/// `price` is the multiplier-weighted column of the coupling rows for this
/// activity; `mu >= 0` prices the cardinality row. For the perspective
/// formulation the quadratic term is `theta x^2 / (z^L + z^R)`.
pub fn per_activity_argmax(
    a: &Activity,
    rb: &RegionBounds,
    status: ActivityStatus,
    price: f64,
    mu: f64,
    form: Formulation,
) -> ActivityChoice {
    let c = a.phi - price;
    let open = OpenRegions::of(rb, status);
    if let Some(fixed) = open.fixed {
        return match fixed.1 {
            None => ActivityChoice::STAY,
            Some(iv) => {
                let (x, v) = best_on(a.theta, c, iv);
                let left = fixed.0 == crate::instance::Region::Left;
                ActivityChoice {
                    x,
                    z_left: left as u8 as f64,
                    z_right: (!left) as u8 as f64,
                    value: v - mu,
                }
            }
        };
    }
    match form {
        Formulation::Miqp => miqp_free(a.theta, c, mu, open.left, open.right),
        Formulation::Perspective => perspective_free(a.theta, c, mu, open.left, open.right),
    }
}

fn miqp_free(
    theta: f64,
    c: f64,
    mu: f64,
    left: Option<Interval>,
    right: Option<Interval>,
) -> ActivityChoice {
    let mut best = ActivityChoice::STAY;
    if let Some(r) = right.filter(|r| r.hi > 0.0) {
        let (x, v) = best_on(theta, c - mu / r.hi, Interval::new(0.0, r.hi));
        if v > best.value && x > 0.0 {
            let z = if mu > 0.0 {
                x / r.hi
            } else {
                (x / r.lo).min(1.0)
            };
            best = ActivityChoice {
                x,
                z_left: 0.0,
                z_right: z,
                value: v,
            };
        }
    }
    if let Some(l) = left.filter(|l| l.lo < 0.0) {
        let (x, v) = best_on(theta, c - mu / l.lo, Interval::new(l.lo, 0.0));
        if v > best.value && x < 0.0 {
            let z = if mu > 0.0 {
                x / l.lo
            } else {
                (x / l.hi).min(1.0)
            };
            best = ActivityChoice {
                x,
                z_left: z,
                z_right: 0.0,
                value: v,
            };
        }
    }
    best
}

fn perspective_free(
    theta: f64,
    c: f64,
    mu: f64,
    left: Option<Interval>,
    right: Option<Interval>,
) -> ActivityChoice {
    let hull = match (left, right) {
        (None, None) => return ActivityChoice::STAY,
        (Some(l), None) => l,
        (None, Some(r)) => r,
        (Some(l), Some(r)) => Interval::new(l.lo, r.hi),
    };
    let (w, q) = best_on(theta, c, hull);
    let value = q - mu;
    if value <= 0.0 {
        return ActivityChoice::STAY;
    }
    let (z_left, z_right) = match (left, right) {
        (_, Some(r)) if w >= r.lo => (0.0, 1.0),
        (Some(l), _) if w <= l.hi => (1.0, 0.0),
        (Some(l), Some(r)) => {
            // w lies strictly between the regions; any split with
            // alpha in [lo_alpha, hi_alpha] reproduces it.
            let lo_alpha = (w - l.hi) / (r.hi - l.hi);
            let hi_alpha = (w - l.lo) / (r.lo - l.lo);
            let alpha = (0.5 * (lo_alpha + hi_alpha)).clamp(0.0, 1.0);
            (1.0 - alpha, alpha)
        }
        _ => unreachable!("w lies in the only open region"),
    };
    ActivityChoice {
        x: w,
        z_left,
        z_right,
        value,
    }
}

/// Dual multipliers: one per coupling row (budget first, then extras in
/// `<=` form) and one for the cardinality row.
#[derive(Debug, Clone, PartialEq)]
pub struct Multipliers {
    pub rows: Vec<f64>,
    pub card: f64,
}

impl Multipliers {
    pub fn zeros(inst: &Instance) -> Self {
        Self {
            rows: vec![0.0; 1 + inst.extra_rows().len()],
            card: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelaxParams {
    pub max_iters: usize,
    /// Stop after this many iterations without improving the bound.
    pub stall_iters: usize,
    /// Projected-subgradient norm treated as zero.
    pub tol: f64,
    /// Known achievable objective (incumbent). Used as the step target, and
    /// the solve stops once the bound drops to it.
    pub target: Option<f64>,
}

impl Default for RelaxParams {
    fn default() -> Self {
        Self {
            max_iters: 500,
            stall_iters: 50,
            tol: 1e-9,
            target: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelaxResult {
    /// Lowest Lagrangian value seen; always an upper bound on the node optimum.
    pub upper_bound: f64,
    pub primal_x: Vec<f64>,
    pub primal_z_left: Vec<f64>,
    pub primal_z_right: Vec<f64>,
    /// Multipliers achieving `upper_bound`.
    pub multipliers: Multipliers,
    /// A zero projected subgradient was found, so the bound equals the
    /// relaxation optimum.
    pub converged: bool,
    /// The bound fell to the target.
    pub reached_target: bool,
    pub iterations: usize,
}

impl RelaxResult {
    pub fn z_change(&self, i: usize) -> f64 {
        self.primal_z_left[i] + self.primal_z_right[i]
    }
}

struct Lagrangian<'a> {
    inst: &'a Instance,
    node: &'a NodeState,
    form: Formulation,
    rows: Vec<LeRow>,
    psi_total: f64,
}

struct Evaluation {
    value: f64,
    choices: Vec<ActivityChoice>,
    /// Subgradient: row slacks followed by the cardinality slack.
    slack: Vec<f64>,
}

impl<'a> Lagrangian<'a> {
    fn new(inst: &'a Instance, node: &'a NodeState, form: Formulation) -> Self {
        Self {
            inst,
            node,
            form,
            rows: inst.coupling_rows(),
            psi_total: inst.baseline_revenue(),
        }
    }

    fn evaluate(&self, mult: &Multipliers) -> Evaluation {
        let n = self.inst.n();
        let mut choices = Vec::with_capacity(n);
        let mut value = self.psi_total;
        for i in 0..n {
            let price: f64 = self
                .rows
                .iter()
                .zip(&mult.rows)
                .map(|(r, l)| l * r.coeffs[i])
                .sum();
            let ch = per_activity_argmax(
                self.inst.activity(i),
                self.inst.region(i),
                self.node.status[i],
                price,
                mult.card,
                self.form,
            );
            value += ch.value;
            choices.push(ch);
        }
        let x: Vec<f64> = choices.iter().map(|c| c.x).collect();
        let mut slack: Vec<f64> = self.rows.iter().map(|r| r.rhs - r.activity(&x)).collect();
        let z_total: f64 = choices.iter().map(|c| c.z_change()).sum();
        slack.push(self.inst.m() as f64 - z_total);
        value += self
            .rows
            .iter()
            .zip(&mult.rows)
            .map(|(r, l)| l * r.rhs)
            .sum::<f64>();
        value += mult.card * self.inst.m() as f64;
        Evaluation {
            value,
            choices,
            slack,
        }
    }
}

/// Bounds a node starting from zero multipliers.
pub fn solve_node_relaxation(
    inst: &Instance,
    node: &NodeState,
    form: Formulation,
    params: &RelaxParams,
) -> RelaxResult {
    solve_node_relaxation_from(inst, node, form, params, &Multipliers::zeros(inst))
}

/// Projected subgradient descent on the Lagrangian dual with Polyak steps,
/// starting from `start`. The starting point is always evaluated, so a child
/// started from its parent's multipliers never bounds above the parent.
pub fn solve_node_relaxation_from(
    inst: &Instance,
    node: &NodeState,
    form: Formulation,
    params: &RelaxParams,
    start: &Multipliers,
) -> RelaxResult {
    let lag = Lagrangian::new(inst, node, form);
    let mut mult = start.clone();
    let mut best: Option<(f64, Multipliers, Vec<ActivityChoice>)> = None;
    let mut stall = 0usize;
    let mut agility = 1.0;
    let mut converged = false;
    let mut reached_target = false;
    let mut iterations = 0;

    while iterations < params.max_iters {
        iterations += 1;
        let eval = lag.evaluate(&mult);
        let improved = best
            .as_ref()
            .is_none_or(|(b, _, _)| eval.value < *b - 1e-12 * (1.0 + b.abs()));
        if improved {
            best = Some((eval.value, mult.clone(), eval.choices.clone()));
            stall = 0;
        } else {
            stall += 1;
            if stall.is_multiple_of(10) {
                agility *= 0.5;
            }
        }
        let best_value = best.as_ref().map(|b| b.0).unwrap();

        if let Some(t) = params.target {
            if best_value <= t + params.tol * (1.0 + t.abs()) {
                reached_target = true;
                break;
            }
        }

        let mut lambdas: Vec<f64> = mult.rows.clone();
        lambdas.push(mult.card);
        let dir: Vec<f64> = eval
            .slack
            .iter()
            .zip(&lambdas)
            .map(|(&g, &l)| if l <= 0.0 && g > 0.0 { 0.0 } else { g })
            .collect();
        let norm2: f64 = dir.iter().map(|g| g * g).sum();
        if norm2.sqrt() <= params.tol {
            if improved || eval.value <= best_value {
                best = Some((eval.value, mult.clone(), eval.choices));
            }
            converged = true;
            break;
        }
        if stall >= params.stall_iters {
            break;
        }

        let estimate = match params.target {
            Some(t) if t < best_value => t,
            _ => best_value - 0.05 * (1.0 + best_value.abs()),
        };
        let step = agility * (eval.value - estimate).max(0.0) / norm2;
        for (l, g) in lambdas.iter_mut().zip(&dir) {
            *l = (*l - step * g).max(0.0);
        }
        mult.card = lambdas.pop().unwrap();
        mult.rows = lambdas;
    }

    let (upper_bound, multipliers, choices) = best.expect("at least one evaluation");
    RelaxResult {
        upper_bound,
        primal_x: choices.iter().map(|c| c.x).collect(),
        primal_z_left: choices.iter().map(|c| c.z_left).collect(),
        primal_z_right: choices.iter().map(|c| c.z_right).collect(),
        multipliers,
        converged,
        reached_target,
        iterations,
    }
}

/// Root bounds for both formulations. The perspective solve starts from the
/// MIQP's best multipliers, where its Lagrangian is pointwise no larger.
pub fn root_bounds(inst: &Instance) -> (f64, f64) {
    root_bounds_with(inst, &RelaxParams::default())
}

pub fn root_bounds_with(inst: &Instance, params: &RelaxParams) -> (f64, f64) {
    let root = NodeState::root(inst);
    let miqp = solve_node_relaxation(inst, &root, Formulation::Miqp, params);
    let persp = solve_node_relaxation_from(
        inst,
        &root,
        Formulation::Perspective,
        params,
        &miqp.multipliers,
    );
    (miqp.upper_bound, persp.upper_bound)
}
