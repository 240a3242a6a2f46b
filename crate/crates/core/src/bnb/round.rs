use crate::hull::{check_minlp_feasible, DEFAULT_TOL};
use crate::instance::{Instance, Region, Solution};
use crate::relax::{solve_fixed, ActivityStatus, FixedOutcome, NodeState, RelaxResult};

/// Rounds a relaxation point to a region assignment and re-solves the spend
/// changes exactly. Returns `None` unless the result passes the MINLP check.
pub fn round_incumbent(inst: &Instance, relax: &RelaxResult) -> Option<Solution> {
    round_incumbent_at(inst, &NodeState::root(inst), relax)
}

/// As [`round_incumbent`], keeping the fixings of `node`.
pub fn round_incumbent_at(
    inst: &Instance,
    node: &NodeState,
    relax: &RelaxResult,
) -> Option<Solution> {
    let n = inst.n();
    let mut region = vec![Region::Stay; n];
    let mut movable: Vec<(f64, usize)> = Vec::new();
    let mut fixed_changes = 0;
    for i in 0..n {
        if let ActivityStatus::Fixed(r) = node.status[i] {
            region[i] = r;
            fixed_changes += r.is_change() as usize;
            continue;
        }
        let open = node.open(inst, i);
        let (zl, zr) = (relax.primal_z_left[i], relax.primal_z_right[i]);
        if zl + zr <= 0.5 {
            continue;
        }
        let pick = if zl > zr { Region::Left } else { Region::Right };
        let pick = match (pick, open.left.is_some(), open.right.is_some()) {
            (Region::Left, true, _) | (Region::Right, _, true) => pick,
            (_, true, false) => Region::Left,
            (_, false, true) => Region::Right,
            _ => continue,
        };
        region[i] = pick;
        movable.push((zl + zr, i));
    }
    let room = inst.m().saturating_sub(fixed_changes);
    if movable.len() > room {
        movable.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        for &(_, i) in &movable[room..] {
            region[i] = Region::Stay;
        }
    }
    let FixedOutcome::Optimal { x, .. } = solve_fixed(inst, &region) else {
        return None;
    };
    let sol = Solution::new(inst, x, region);
    check_minlp_feasible(inst, &sol, DEFAULT_TOL)
        .is_feasible()
        .then_some(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Activity;
    use crate::relax::Multipliers;

    fn inst() -> Instance {
        let acts = (1..=3)
            .map(|k| Activity {
                id: format!("a{k}"),
                s: 5.0,
                l: 1.0,
                u: 10.0,
                delta: 1.0,
                theta: -1.0,
                phi: k as f64,
                psi: 1.0,
            })
            .collect();
        Instance::new(acts, 1.5, 2, vec![]).unwrap()
    }

    fn relax(x: Vec<f64>, zl: Vec<f64>, zr: Vec<f64>, inst: &Instance) -> RelaxResult {
        RelaxResult {
            upper_bound: 0.0,
            primal_x: x,
            primal_z_left: zl,
            primal_z_right: zr,
            multipliers: Multipliers::zeros(inst),
            converged: false,
            reached_target: false,
            iterations: 0,
        }
    }

    #[test]
    fn integral_point_comes_back() {
        let i = inst();
        // x = phi / 2 is each activity's unconstrained optimum; budget 7.5
        let r = relax(vec![0.0, 1.0, 1.5], vec![0.0; 3], vec![0.0, 1.0, 1.0], &i);
        let sol = round_incumbent(&i, &r).unwrap();
        assert_eq!(sol.x, vec![0.0, 1.0, 1.5]);
        assert_eq!(sol.region, vec![Region::Stay, Region::Right, Region::Right]);
    }

    #[test]
    fn half_indicators_round_to_stay() {
        let i = inst();
        let r = relax(vec![0.5; 3], vec![0.0; 3], vec![0.5; 3], &i);
        let sol = round_incumbent(&i, &r).unwrap();
        assert_eq!(sol.objective, 3.0);
        assert_eq!(sol.changes(), 0);
    }

    #[test]
    fn cap_keeps_largest_indicators() {
        let i = inst();
        let r = relax(vec![1.0; 3], vec![0.0; 3], vec![0.9, 0.7, 0.8], &i);
        let sol = round_incumbent(&i, &r).unwrap();
        assert_eq!(sol.region, vec![Region::Right, Region::Stay, Region::Right]);
    }
}
