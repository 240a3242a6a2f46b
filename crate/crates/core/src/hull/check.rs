//! Feasibility against the original absolute-value formulation.

use std::fmt;

use crate::instance::{Instance, Region, Sense, Solution};

/// Absolute tolerance applied to each row.
pub const DEFAULT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub enum FeasibilityViolation {
    /// `l - s <= x <= u - s`
    SpendBounds {
        activity: usize,
        x: f64,
    },
    /// `sum x <= (rho - 1) sum s`
    Budget {
        lhs: f64,
        rhs: f64,
    },
    /// `delta * z <= |x|`
    MinimumChange {
        activity: usize,
        x: f64,
        delta: f64,
    },
    /// `|x| <= M z`
    BigM {
        activity: usize,
        x: f64,
        big_m: f64,
    },
    /// `sum z <= m`
    Cardinality {
        changes: usize,
        m: usize,
    },
    Extra {
        index: usize,
        lhs: f64,
        rhs: f64,
    },
    /// The labelled region does not exist or does not contain `x`.
    Region {
        activity: usize,
        region: Region,
        x: f64,
    },
}

impl fmt::Display for FeasibilityViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use FeasibilityViolation::*;
        match self {
            SpendBounds { activity, x } => {
                write!(f, "activity {activity}: change {x} outside spend bounds")
            }
            Budget { lhs, rhs } => write!(f, "budget: {lhs} > {rhs}"),
            MinimumChange { activity, x, delta } => {
                write!(
                    f,
                    "activity {activity}: minimum-change violation |{x}| < {delta}"
                )
            }
            BigM { activity, x, big_m } => {
                write!(f, "activity {activity}: |{x}| exceeds M*z = {big_m}")
            }
            Cardinality { changes, m } => {
                write!(f, "cardinality violation: {changes} changes > {m}")
            }
            Extra { index, lhs, rhs } => write!(f, "extra constraint {index}: {lhs} vs {rhs}"),
            Region {
                activity,
                region,
                x,
            } => write!(f, "activity {activity}: x = {x} not in region {region}"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeasibilityReport {
    pub violations: Vec<FeasibilityViolation>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for FeasibilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("feasible");
        }
        for (k, v) in self.violations.iter().enumerate() {
            if k > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks a solution against the absolute-value model: spend bounds, budget,
/// minimum change and big-M with `z_i = [region_i != S]`, cardinality and
/// extras, plus consistency of `x` with the labelled region.
///
/// `M` is per activity, the largest `|x_i|` its bounds allow.
pub fn check_minlp_feasible(inst: &Instance, sol: &Solution, tol: f64) -> FeasibilityReport {
    use FeasibilityViolation::*;
    assert_eq!(sol.x.len(), inst.n(), "solution length");
    let mut violations = Vec::new();

    for (i, (a, &x)) in inst.activities().iter().zip(&sol.x).enumerate() {
        if x < a.l - a.s - tol || x > a.u - a.s + tol {
            violations.push(SpendBounds { activity: i, x });
        }
        let z = sol.region[i].is_change() as u8 as f64;
        if a.delta * z > x.abs() + tol {
            violations.push(MinimumChange {
                activity: i,
                x,
                delta: a.delta,
            });
        }
        let big_m = a.radius() * z;
        if x.abs() > big_m + tol {
            violations.push(BigM {
                activity: i,
                x,
                big_m,
            });
        }
        let in_region = inst
            .region(i)
            .get(sol.region[i])
            .is_some_and(|r| r.contains(x, tol));
        if !in_region {
            violations.push(Region {
                activity: i,
                region: sol.region[i],
                x,
            });
        }
    }

    let lhs: f64 = sol.x.iter().sum();
    let rhs = inst.budget_rhs();
    if lhs > rhs + tol {
        violations.push(Budget { lhs, rhs });
    }

    let changes = sol.changes();
    if changes > inst.m() {
        violations.push(Cardinality {
            changes,
            m: inst.m(),
        });
    }

    for (index, row) in inst.extras().iter().enumerate() {
        let lhs: f64 = row.coeffs.iter().zip(&sol.x).map(|(c, v)| c * v).sum();
        let ok = match row.sense {
            Sense::Le => lhs <= row.rhs + tol,
            Sense::Ge => lhs >= row.rhs - tol,
        };
        if !ok {
            violations.push(Extra {
                index,
                lhs,
                rhs: row.rhs,
            });
        }
    }
    FeasibilityReport { violations }
}
