//! Exhaustive reference solver for small budget-only instances.

use std::time::Instant;

use thiserror::Error;

use crate::instance::{Instance, Interval, Region, Solution};

use super::{SolveResult, Status};

pub const DEFAULT_ORACLE_CAP: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("unsupported instance: {0}")]
    Unsupported(String),
}

/// Exact optimum by enumerating every assignment with at most `m` changes.
/// Each assignment is solved by bisection on the budget multiplier to `tol`.
pub fn brute_force(inst: &Instance, tol: f64) -> Result<SolveResult, OracleError> {
    brute_force_with_cap(inst, tol, DEFAULT_ORACLE_CAP)
}

pub fn brute_force_with_cap(
    inst: &Instance,
    tol: f64,
    cap: usize,
) -> Result<SolveResult, OracleError> {
    if !inst.extras().is_empty() {
        return Err(OracleError::Unsupported("extra constraints present".into()));
    }
    if inst.n() > cap {
        return Err(OracleError::Unsupported(format!(
            "{} activities exceed the cap of {cap}",
            inst.n()
        )));
    }
    let started = Instant::now();
    let n = inst.n();
    let options: Vec<Vec<(Region, Interval)>> = (0..n)
        .map(|i| {
            let mut v = vec![(Region::Stay, Interval::new(0.0, 0.0))];
            for r in [Region::Left, Region::Right] {
                if let Some(iv) = inst.region(i).get(r) {
                    v.push((r, iv));
                }
            }
            v
        })
        .collect();

    let mut best: Option<Solution> = None;
    let mut visited = 0usize;
    let mut pick = vec![0usize; n];
    loop {
        let changes = pick.iter().filter(|&&k| k > 0).count();
        if changes <= inst.m() {
            visited += 1;
            let boxes: Vec<Interval> = (0..n).map(|i| options[i][pick[i]].1).collect();
            if let Some(x) = budget_optimum(inst, &boxes, tol) {
                let region = (0..n).map(|i| options[i][pick[i]].0).collect();
                let sol = Solution::new(inst, x, region);
                if best.as_ref().is_none_or(|b| sol.objective > b.objective) {
                    best = Some(sol);
                }
            }
        }
        // odometer step
        let mut i = 0;
        while i < n {
            pick[i] += 1;
            if pick[i] < options[i].len() {
                break;
            }
            pick[i] = 0;
            i += 1;
        }
        if i == n {
            break;
        }
    }

    let (status, upper_bound) = match &best {
        Some(s) => (Status::Optimal, s.objective),
        None => (Status::Infeasible, f64::NEG_INFINITY),
    };
    Ok(SolveResult {
        incumbent: best,
        upper_bound,
        gap: 0.0,
        nodes: visited,
        wall_time: started.elapsed().as_secs_f64(),
        status,
    })
}

fn response(theta: f64, phi: f64, lambda: f64, b: Interval) -> f64 {
    if theta < 0.0 {
        b.clamp((lambda - phi) / (2.0 * theta))
    } else if phi > lambda {
        b.hi
    } else if phi < lambda {
        b.lo
    } else {
        b.clamp(0.0)
    }
}

/// Maximizes the separable revenue over `boxes` subject to the budget row.
fn budget_optimum(inst: &Instance, boxes: &[Interval], tol: f64) -> Option<Vec<f64>> {
    let acts = inst.activities();
    let budget = inst.budget_rhs();
    let at = |lambda: f64| -> Vec<f64> {
        acts.iter()
            .zip(boxes)
            .map(|(a, &b)| response(a.theta, a.phi, lambda, b))
            .collect()
    };
    let total = |x: &[f64]| x.iter().sum::<f64>();

    if total(&boxes.iter().map(|b| b.lo).collect::<Vec<_>>()) > budget + 1e-12 {
        return None;
    }
    let free = at(0.0);
    if total(&free) <= budget {
        return Some(free);
    }
    let mut hi = 1.0;
    while total(&at(hi)) > budget {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    while hi - lo > tol * (1.0 + hi) {
        let mid = 0.5 * (lo + hi);
        if total(&at(mid)) > budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // blend the two sides so the budget holds with equality
    let (x_lo, x_hi) = (at(lo), at(hi));
    let (s_lo, s_hi) = (total(&x_lo), total(&x_hi));
    let w = if s_lo > s_hi {
        ((budget - s_hi) / (s_lo - s_hi)).clamp(0.0, 1.0)
    } else {
        0.0
    };
    Some(
        x_lo.iter()
            .zip(&x_hi)
            .map(|(a, b)| w * a + (1.0 - w) * b)
            .collect(),
    )
}
