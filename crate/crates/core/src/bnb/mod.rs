//! Best-bound branch-and-bound over region assignments.
//!
//! Nodes fix activities to `L`, `S` or `R`. Each open node is bounded by the
//! Lagrangian relaxation of the chosen formulation; leaves are solved exactly.

mod oracle;
mod round;

pub use oracle::{brute_force, brute_force_with_cap, OracleError, DEFAULT_ORACLE_CAP};
pub use round::{round_incumbent, round_incumbent_at};

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::time::Instant;

use serde::Serialize;

use crate::hull::{check_minlp_feasible, DEFAULT_TOL};
use crate::instance::{Instance, Region, Solution};
use crate::relax::{
    relaxed_infeasible, solve_fixed, solve_node_relaxation_from, ActivityStatus, FixedOutcome,
    Formulation, Multipliers, NodeState, RelaxParams,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NodeSelection {
    #[default]
    BestBound,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveParams {
    pub formulation: Formulation,
    /// Seconds.
    pub time_limit: f64,
    /// Relative gap at which the search stops.
    pub gap_tol: f64,
    pub node_limit: Option<usize>,
    pub node_selection: NodeSelection,
    pub seed: u64,
    pub relax: RelaxParams,
}

impl Default for SolveParams {
    fn default() -> Self {
        Self {
            formulation: Formulation::Perspective,
            time_limit: 100.0,
            gap_tol: 0.0,
            node_limit: None,
            node_selection: NodeSelection::BestBound,
            seed: 0,
            relax: RelaxParams::default(),
        }
    }
}

impl SolveParams {
    pub fn with_formulation(form: Formulation) -> Self {
        Self {
            formulation: form,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Status {
    #[serde(rename = "optimal")]
    Optimal,
    #[serde(rename = "gap-limit")]
    GapLimit,
    #[serde(rename = "time-limit")]
    TimeLimit,
    #[serde(rename = "node-limit")]
    NodeLimit,
    #[serde(rename = "infeasible")]
    Infeasible,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Optimal => "optimal",
            Status::GapLimit => "gap-limit",
            Status::TimeLimit => "time-limit",
            Status::NodeLimit => "node-limit",
            Status::Infeasible => "infeasible",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveResult {
    pub incumbent: Option<Solution>,
    pub upper_bound: f64,
    pub gap: f64,
    /// Nodes branched on.
    pub nodes: usize,
    /// Seconds.
    pub wall_time: f64,
    pub status: Status,
}

impl SolveResult {
    pub fn objective(&self) -> Option<f64> {
        self.incumbent.as_ref().map(|s| s.objective)
    }
}

pub fn relative_gap(upper: f64, incumbent: f64) -> f64 {
    ((upper - incumbent) / incumbent.abs().max(1.0)).max(0.0)
}

struct Open {
    bound: f64,
    id: u64,
    node: NodeState,
    z_left: Vec<f64>,
    z_right: Vec<f64>,
    multipliers: Multipliers,
}

impl PartialEq for Open {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Open {}

impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Open {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound
            .total_cmp(&other.bound)
            .then_with(|| other.id.cmp(&self.id))
    }
}

struct Search<'a> {
    inst: &'a Instance,
    params: &'a SolveParams,
    incumbent: Option<Solution>,
    heap: BinaryHeap<Open>,
    next_id: u64,
    /// Largest bound of leaves the exact solve could not close.
    stuck: f64,
}

impl<'a> Search<'a> {
    fn incumbent_value(&self) -> f64 {
        self.incumbent
            .as_ref()
            .map_or(f64::NEG_INFINITY, |s| s.objective)
    }

    fn prune_tol(&self) -> f64 {
        let inc = self.incumbent_value();
        self.params.gap_tol.max(1e-9)
            * if inc.is_finite() {
                inc.abs().max(1.0)
            } else {
                1.0
            }
    }

    fn closes(&self, bound: f64) -> bool {
        bound <= self.incumbent_value() + self.prune_tol()
    }

    fn offer(&mut self, sol: Solution) {
        let report = check_minlp_feasible(self.inst, &sol, DEFAULT_TOL);
        assert!(
            report.is_feasible(),
            "incumbent candidate fails the MINLP check: {report}"
        );
        if sol.objective > self.incumbent_value() {
            self.incumbent = Some(sol);
        }
    }

    fn try_offer(&mut self, sol: Solution) {
        if check_minlp_feasible(self.inst, &sol, DEFAULT_TOL).is_feasible() {
            self.offer(sol);
        }
    }

    /// Bounds `node` and queues it unless it is closed.
    fn evaluate(&mut self, node: NodeState, start: &Multipliers, parent_bound: f64) {
        if let Some(assign) = node.assignment() {
            match solve_fixed(self.inst, &assign) {
                FixedOutcome::Optimal { x, .. } => {
                    self.try_offer(Solution::new(self.inst, x, assign))
                }
                FixedOutcome::Infeasible => {}
                FixedOutcome::Unresolved { bound } => {
                    let bound = bound.min(parent_bound);
                    if !self.closes(bound) {
                        self.stuck = self.stuck.max(bound);
                    }
                }
            }
            return;
        }
        let relax_params = RelaxParams {
            target: Some(self.incumbent_value()).filter(|v| v.is_finite()),
            ..self.params.relax.clone()
        };
        let r = solve_node_relaxation_from(
            self.inst,
            &node,
            self.params.formulation,
            &relax_params,
            start,
        );
        if relaxed_infeasible(self.inst, &node, Some(&r.multipliers.rows)) {
            return;
        }
        if let Some(sol) = round_incumbent_at(self.inst, &node, &r) {
            self.offer(sol);
        }
        let bound = r.upper_bound.min(parent_bound);
        if self.closes(bound) {
            return;
        }
        let id = self.next_id;
        self.next_id += 1;
        self.heap.push(Open {
            bound,
            id,
            node,
            z_left: r.primal_z_left,
            z_right: r.primal_z_right,
            multipliers: r.multipliers,
        });
    }

    fn global_bound(&self) -> f64 {
        let open = self.heap.peek().map_or(f64::NEG_INFINITY, |o| o.bound);
        open.max(self.stuck).max(self.incumbent_value())
    }
}

/// Activity to branch on: most fractional `z^L + z^R`, lowest index on ties;
/// otherwise the first unfixed activity with a fractional side indicator;
/// otherwise the first unfixed activity.
fn branching_activity(open: &Open) -> usize {
    let unfixed: Vec<usize> = (0..open.node.status.len())
        .filter(|&i| !matches!(open.node.status[i], ActivityStatus::Fixed(_)))
        .collect();
    let frac = |v: f64| (v - v.round()).abs();
    let mut best: Option<(usize, f64)> = None;
    for &i in &unfixed {
        let f = frac(open.z_left[i] + open.z_right[i]);
        if f > 1e-9 && best.is_none_or(|(_, b)| f > b) {
            best = Some((i, f));
        }
    }
    if let Some((i, _)) = best {
        return i;
    }
    unfixed
        .iter()
        .copied()
        .find(|&i| frac(open.z_left[i]) > 1e-9 || frac(open.z_right[i]) > 1e-9)
        .unwrap_or(unfixed[0])
}

/// Solves the instance from the unchanged plan as first incumbent.
pub fn branch_and_bound(inst: &Instance, params: &SolveParams) -> SolveResult {
    branch_and_bound_from(inst, params, None)
}

/// As [`branch_and_bound`], seeding the incumbent with `initial` when it is
/// feasible.
pub fn branch_and_bound_from(
    inst: &Instance,
    params: &SolveParams,
    initial: Option<&Solution>,
) -> SolveResult {
    let started = Instant::now();
    let mut search = Search {
        inst,
        params,
        incumbent: None,
        heap: BinaryHeap::new(),
        next_id: 0,
        stuck: f64::NEG_INFINITY,
    };
    search.try_offer(Solution::baseline(inst));
    if let Some(s) = initial {
        if s.x.len() == inst.n() {
            search.try_offer(Solution::new(inst, s.x.clone(), s.region.clone()));
        }
    }

    search.evaluate(
        NodeState::root(inst),
        &Multipliers::zeros(inst),
        f64::INFINITY,
    );

    let mut nodes = 0usize;
    let mut reported = f64::INFINITY;
    let mut status = None;
    loop {
        reported = reported.min(search.global_bound());
        let Some(top) = search.heap.peek() else { break };
        if search.closes(top.bound) {
            search.heap.clear();
            continue;
        }
        let inc = search.incumbent_value();
        if params.gap_tol > 0.0 && inc.is_finite() && relative_gap(reported, inc) <= params.gap_tol
        {
            status = Some(Status::GapLimit);
            break;
        }
        if started.elapsed().as_secs_f64() >= params.time_limit {
            status = Some(Status::TimeLimit);
            break;
        }
        if params.node_limit.is_some_and(|l| nodes >= l) {
            status = Some(Status::NodeLimit);
            break;
        }
        let open = search.heap.pop().unwrap();
        nodes += 1;
        let i = branching_activity(&open);
        for region in [Region::Left, Region::Stay, Region::Right] {
            if let Some(child) = open.node.child(inst, i, region) {
                search.evaluate(child, &open.multipliers, open.bound);
            }
        }
    }

    let inc = search.incumbent_value();
    let upper_bound = reported.max(inc);
    let status = match status {
        Some(s) => s,
        None if search.incumbent.is_none() && search.stuck == f64::NEG_INFINITY => {
            Status::Infeasible
        }
        None if search.closes(search.stuck) => Status::Optimal,
        None => Status::GapLimit,
    };
    let gap = match (&search.incumbent, status) {
        (_, Status::Infeasible) => 0.0,
        (None, _) => f64::INFINITY,
        (Some(s), _) => relative_gap(upper_bound, s.objective),
    };
    SolveResult {
        incumbent: search.incumbent,
        upper_bound: if status == Status::Infeasible {
            f64::NEG_INFINITY
        } else {
            upper_bound
        },
        gap,
        nodes,
        wall_time: started.elapsed().as_secs_f64(),
        status,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{Activity, LinearConstraint, Sense};

    fn act(
        id: &str,
        s: f64,
        l: f64,
        u: f64,
        delta: f64,
        theta: f64,
        phi: f64,
        psi: f64,
    ) -> Activity {
        Activity {
            id: id.into(),
            s,
            l,
            u,
            delta,
            theta,
            phi,
            psi,
        }
    }

    fn symmetric() -> Instance {
        // R = [0.5, 3], L absent
        let a = act("a1", 1.0, 1.0, 4.0, 0.5, -1.0, 4.0, 0.0);
        let b = act("a2", 1.0, 1.0, 4.0, 0.5, -1.0, 4.0, 0.0);
        Instance::new(vec![a, b], 100.0, 1, vec![]).unwrap()
    }

    #[test]
    fn zero_cap_is_baseline() {
        let a = act("a1", 5.0, 1.0, 10.0, 1.0, -1.0, 4.0, 2.5);
        let inst = Instance::new(vec![a], 1.5, 0, vec![]).unwrap();
        for form in [Formulation::Miqp, Formulation::Perspective] {
            let r = branch_and_bound(&inst, &SolveParams::with_formulation(form));
            assert_eq!(r.status, Status::Optimal);
            assert_eq!(r.objective(), Some(2.5));
            assert!(r.nodes <= 1);
        }
    }

    #[test]
    fn symmetric_pair_picks_one() {
        let inst = symmetric();
        for form in [Formulation::Miqp, Formulation::Perspective] {
            let r = branch_and_bound(&inst, &SolveParams::with_formulation(form));
            assert_eq!(r.status, Status::Optimal);
            let sol = r.incumbent.unwrap();
            assert!((sol.objective - 4.0).abs() < 1e-9);
            assert_eq!(sol.changes(), 1);
            assert!(sol.x.iter().any(|&x| (x - 2.0).abs() < 1e-9));
        }
    }

    #[test]
    fn unsatisfiable_extra_is_infeasible() {
        let a = act("a1", 5.0, 1.0, 10.0, 1.0, -1.0, 4.0, 0.0);
        // x >= 6 but u - s = 5
        let extras = vec![LinearConstraint {
            coeffs: vec![1.0],
            sense: Sense::Ge,
            rhs: 6.0,
        }];
        let inst = Instance::new(vec![a], 3.0, 1, extras).unwrap();
        let r = branch_and_bound(&inst, &SolveParams::default());
        assert_eq!(r.status, Status::Infeasible);
        assert!(r.incumbent.is_none());
    }

    #[test]
    fn budget_cut_needs_a_decrease() {
        // rho < 1 makes x = 0 infeasible
        let a = act("a1", 5.0, 1.0, 10.0, 1.0, -1.0, 4.0, 0.0);
        let b = act("a2", 5.0, 1.0, 10.0, 1.0, -1.0, 1.0, 0.0);
        let inst = Instance::new(vec![a, b], 0.9, 1, vec![]).unwrap();
        let r = branch_and_bound(&inst, &SolveParams::default());
        assert_eq!(r.status, Status::Optimal);
        let sol = r.incumbent.unwrap();
        // cut of 1 falls on the activity with the smaller marginal loss
        assert_eq!(sol.region, vec![Region::Stay, Region::Left]);
        assert!((sol.x[1] + 1.0).abs() < 1e-9);
    }

    #[test]
    fn time_limit_zero_stops() {
        let inst = symmetric();
        let p = SolveParams {
            time_limit: 0.0,
            ..SolveParams::default()
        };
        let r = branch_and_bound(&inst, &p);
        assert!(matches!(r.status, Status::TimeLimit | Status::Optimal));
        assert!(r.incumbent.is_some());
    }
}
