//! Convex-hull machinery for semi-continuous variables with several ranges.
//!
//! A variable `x` that is either `0` or lies in one of `n` closed ranges
//! `[l^k, u^k]` is described by indicators `z^k` and an activation `t`:
//!
//! ```text
//! l^1 z^1 + ... + l^n z^n <= x <= u^1 z^1 + ... + u^n z^n
//! z^1 + ... + z^n <= 1
//! z^1 + ... + z^n  = t
//! ```
//!
//! With `z` relaxed to `[0, 1]` these rows describe the convex hull of the
//! disjunction. Paired with the perspective `t * f(x / t)` of the objective
//! they give the tightest separable relaxation.

mod check;
mod model;

pub use check::{check_minlp_feasible, FeasibilityReport, FeasibilityViolation, DEFAULT_TOL};
pub use model::{
    build_miqp, build_misocp, ActivityVars, ConeRow, ModelIr, QuadTerm, Row, RowSense, VarKind,
    Variable,
};

use thiserror::Error;

use crate::instance::Interval;

/// The nonzero ranges of a semi-continuous variable; zero is always allowed.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RangeSet {
    pub ranges: Vec<Interval>,
}

impl RangeSet {
    pub fn new(ranges: Vec<Interval>) -> Self {
        Self { ranges }
    }

    pub fn includes_zero(&self) -> bool {
        true
    }

    pub fn len(&self) -> usize {
        self.ranges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }
}

/// A variable slot inside a [`HullBlock`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HullVar {
    X,
    /// Indicator of the k-th range.
    Z(usize),
    /// Activation `t = sum_k z^k`.
    T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HullRowKind {
    /// `sum_k l^k z^k - x <= 0`
    Lower,
    /// `x - sum_k u^k z^k <= 0`
    Upper,
    /// `sum_k z^k <= 1`
    Choice,
    /// `sum_k z^k - t = 0`
    Link,
    /// `x = 0`, emitted when there are no ranges.
    FixX,
    /// `t = 0`, emitted when there are no ranges.
    FixT,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HullRow {
    pub kind: HullRowKind,
    pub terms: Vec<(HullVar, f64)>,
    pub sense: RowSense,
    pub rhs: f64,
}

impl HullRow {
    fn activity(&self, x: f64, z: &[f64], t: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(v, c)| {
                c * match v {
                    HullVar::X => x,
                    HullVar::Z(k) => z[k],
                    HullVar::T => t,
                }
            })
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HullBlock {
    pub ranges: RangeSet,
    pub rows: Vec<HullRow>,
}

impl HullBlock {
    pub fn arity(&self) -> usize {
        self.ranges.len()
    }

    /// Whether `(x, z, t)` satisfies every row within `tol`.
    pub fn satisfied(&self, x: f64, z: &[f64], t: f64, tol: f64) -> bool {
        assert_eq!(z.len(), self.arity());
        self.rows
            .iter()
            .all(|r| r.sense.holds(r.activity(x, z, t), r.rhs, tol))
    }

    /// Range of `x` the rows allow for fixed indicators, with `t` taken as
    /// `sum z`. `None` if the indicators themselves violate the rows.
    pub fn x_range(&self, z: &[f64]) -> Option<Interval> {
        assert_eq!(z.len(), self.arity());
        let t: f64 = z.iter().sum();
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for row in &self.rows {
            let x_coef: f64 = row
                .terms
                .iter()
                .filter(|(v, _)| *v == HullVar::X)
                .map(|(_, c)| c)
                .sum();
            let rest = row.activity(0.0, z, t);
            if x_coef == 0.0 {
                if !row.sense.holds(rest, row.rhs, 1e-12) {
                    return None;
                }
                continue;
            }
            // x_coef * x + rest (sense) rhs
            let bound = (row.rhs - rest) / x_coef;
            let (upper, lower) = match (row.sense, x_coef > 0.0) {
                (RowSense::Eq, _) => (true, true),
                (RowSense::Le, true) | (RowSense::Ge, false) => (true, false),
                (RowSense::Le, false) | (RowSense::Ge, true) => (false, true),
            };
            if upper {
                hi = hi.min(bound);
            }
            if lower {
                lo = lo.max(bound);
            }
        }
        (lo <= hi).then_some(Interval { lo, hi })
    }
}

/// Hull rows for a variable that is zero or in one of `rs.ranges`.
pub fn hull_block(rs: &RangeSet) -> HullBlock {
    let n = rs.len();
    let rows = if n == 0 {
        vec![
            HullRow {
                kind: HullRowKind::FixX,
                terms: vec![(HullVar::X, 1.0)],
                sense: RowSense::Eq,
                rhs: 0.0,
            },
            HullRow {
                kind: HullRowKind::FixT,
                terms: vec![(HullVar::T, 1.0)],
                sense: RowSense::Eq,
                rhs: 0.0,
            },
        ]
    } else {
        let zs = |f: &dyn Fn(&Interval) -> f64| -> Vec<(HullVar, f64)> {
            rs.ranges
                .iter()
                .enumerate()
                .map(|(k, r)| (HullVar::Z(k), f(r)))
                .collect()
        };
        let mut lower = zs(&|r| r.lo);
        lower.push((HullVar::X, -1.0));
        let mut upper = vec![(HullVar::X, 1.0)];
        upper.extend(zs(&|r| -r.hi));
        let mut link = zs(&|_| 1.0);
        link.push((HullVar::T, -1.0));
        vec![
            HullRow {
                kind: HullRowKind::Lower,
                terms: lower,
                sense: RowSense::Le,
                rhs: 0.0,
            },
            HullRow {
                kind: HullRowKind::Upper,
                terms: upper,
                sense: RowSense::Le,
                rhs: 0.0,
            },
            HullRow {
                kind: HullRowKind::Choice,
                terms: zs(&|_| 1.0),
                sense: RowSense::Le,
                rhs: 1.0,
            },
            HullRow {
                kind: HullRowKind::Link,
                terms: link,
                sense: RowSense::Eq,
                rhs: 0.0,
            },
        ]
    };
    HullBlock {
        ranges: rs.clone(),
        rows,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("perspective undefined at z = 0 with x = {x} (x must be 0)")]
pub struct PerspectiveDomainError {
    pub x: f64,
}

/// `theta * x^2 / z + phi * x + psi`, the perspective-scaled quadratic revenue.
///
/// At `z = 0` the quadratic part is taken as `0` (requires `x = 0`). `psi` is
/// not scaled by `z`, so the value agrees with the plain revenue whenever `z`
/// is 0 or 1.
pub fn perspective_value(
    theta: f64,
    phi: f64,
    psi: f64,
    x: f64,
    z: f64,
) -> Result<f64, PerspectiveDomainError> {
    if z == 0.0 {
        return if x == 0.0 {
            Ok(psi)
        } else {
            Err(PerspectiveDomainError { x })
        };
    }
    Ok(theta * x * x / z + phi * x + psi)
}
