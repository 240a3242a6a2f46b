//! Solver-agnostic model representation and the MIQP / MISOCP builders.

use std::collections::HashMap;

use crate::instance::{Instance, Region};

use super::{hull_block, HullRowKind, HullVar, RangeSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSense {
    Le,
    Ge,
    Eq,
}

impl RowSense {
    pub fn holds(self, lhs: f64, rhs: f64, tol: f64) -> bool {
        match self {
            RowSense::Le => lhs <= rhs + tol,
            RowSense::Ge => lhs >= rhs - tol,
            RowSense::Eq => (lhs - rhs).abs() <= tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub name: String,
    pub terms: Vec<(usize, f64)>,
    pub sense: RowSense,
    pub rhs: f64,
}

/// `coeff * v_i * v_j` in the objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadTerm {
    pub i: usize,
    pub j: usize,
    pub coeff: f64,
}

/// Rotated cone row `v_e * v_z >= coeff * v_x^2` with `coeff >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeRow {
    pub name: String,
    pub e: usize,
    pub z: usize,
    pub x: usize,
    pub coeff: f64,
}

/// Variable indices belonging to one activity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ActivityVars {
    pub x: usize,
    pub z_left: usize,
    pub z_right: usize,
    /// `z^{LR}`, MISOCP only.
    pub z_change: Option<usize>,
    /// Epigraph variable, MISOCP only.
    pub e: Option<usize>,
}

/// A maximization model: linear rows, a quadratic objective and optional
/// rotated-cone rows.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModelIr {
    pub name: String,
    pub variables: Vec<Variable>,
    pub rows: Vec<Row>,
    pub quadratic: Vec<QuadTerm>,
    pub linear: Vec<(usize, f64)>,
    pub constant: f64,
    pub cones: Vec<ConeRow>,
    /// Flat charge added to the objective when an indicator is on. The
    /// spend-adjustment models leave this empty.
    pub fixed_charges: Vec<(usize, f64)>,
    pub activity_vars: Vec<ActivityVars>,
}

impl ModelIr {
    fn add_var(&mut self, name: String, kind: VarKind, lower: f64, upper: f64) -> usize {
        self.variables.push(Variable {
            name,
            kind,
            lower,
            upper,
        });
        self.variables.len() - 1
    }

    fn add_row(&mut self, name: String, terms: Vec<(usize, f64)>, sense: RowSense, rhs: f64) {
        let terms = terms.into_iter().filter(|&(_, c)| c != 0.0).collect();
        self.rows.push(Row {
            name,
            terms,
            sense,
            rhs,
        });
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn name_map(&self) -> HashMap<&str, usize> {
        self.variables
            .iter()
            .enumerate()
            .map(|(k, v)| (v.name.as_str(), k))
            .collect()
    }

    pub fn binaries(&self) -> impl Iterator<Item = &Variable> {
        self.variables.iter().filter(|v| v.kind == VarKind::Binary)
    }

    pub fn objective_at(&self, values: &[f64]) -> f64 {
        let quad: f64 = self
            .quadratic
            .iter()
            .map(|q| q.coeff * values[q.i] * values[q.j])
            .sum();
        let lin: f64 = self.linear.iter().map(|&(k, c)| c * values[k]).sum();
        let charges: f64 = self.fixed_charges.iter().map(|&(k, c)| c * values[k]).sum();
        quad + lin + charges + self.constant
    }

    pub fn row_activity(&self, row: &Row, values: &[f64]) -> f64 {
        row.terms.iter().map(|&(k, c)| c * values[k]).sum()
    }

    /// Names of every bound, integrality, row or cone violated at `values`.
    pub fn violations(&self, values: &[f64], tol: f64) -> Vec<String> {
        let mut out = Vec::new();
        for (v, &val) in self.variables.iter().zip(values) {
            if val < v.lower - tol || val > v.upper + tol {
                out.push(format!("bound {}", v.name));
            }
            if v.kind == VarKind::Binary && (val - val.round()).abs() > tol {
                out.push(format!("integrality {}", v.name));
            }
        }
        for row in &self.rows {
            if !row
                .sense
                .holds(self.row_activity(row, values), row.rhs, tol)
            {
                out.push(row.name.clone());
            }
        }
        for c in &self.cones {
            let x = values[c.x];
            if values[c.e] * values[c.z] < c.coeff * x * x - tol {
                out.push(c.name.clone());
            }
        }
        out
    }

    /// Full variable vector for an integer point given by spend changes and
    /// regions. In MISOCP models `e` is set to its binding value.
    pub fn lift(&self, inst: &Instance, x: &[f64], region: &[Region]) -> Vec<f64> {
        let mut values = vec![0.0; self.variables.len()];
        for (i, vars) in self.activity_vars.iter().enumerate() {
            values[vars.x] = x[i];
            values[vars.z_left] = (region[i] == Region::Left) as u8 as f64;
            values[vars.z_right] = (region[i] == Region::Right) as u8 as f64;
            let on = region[i].is_change();
            if let Some(k) = vars.z_change {
                values[k] = on as u8 as f64;
            }
            if let Some(k) = vars.e {
                values[k] = if on {
                    -inst.activity(i).theta * x[i] * x[i]
                } else {
                    0.0
                };
            }
        }
        values
    }
}

fn var_name(prefix: &str, i: usize) -> String {
    format!("{prefix}_{}", i + 1)
}

/// Shared part of both formulations: spend-change variables, indicator pairs
/// with domains from the region table, hull rows, budget, extras and the
/// cardinality row.
fn build_common(inst: &Instance, with_change: bool) -> ModelIr {
    let mut model = ModelIr::default();
    let n = inst.n();

    for i in 0..n {
        let a = inst.activity(i);
        let rb = inst.region(i);
        let x = model.add_var(var_name("x", i), VarKind::Continuous, a.l - a.s, a.u - a.s);
        let zl_hi = if rb.left.is_some() { 1.0 } else { 0.0 };
        let zr_hi = if rb.right.is_some() { 1.0 } else { 0.0 };
        let z_left = model.add_var(var_name("zL", i), VarKind::Binary, 0.0, zl_hi);
        let z_right = model.add_var(var_name("zR", i), VarKind::Binary, 0.0, zr_hi);
        let z_change = with_change
            .then(|| model.add_var(var_name("zLR", i), VarKind::Binary, 0.0, zl_hi.max(zr_hi)));
        let e = with_change
            .then(|| model.add_var(var_name("e", i), VarKind::Continuous, 0.0, f64::INFINITY));
        model.activity_vars.push(ActivityVars {
            x,
            z_left,
            z_right,
            z_change,
            e,
        });
    }

    model.add_row(
        "budget".into(),
        model.activity_vars.iter().map(|v| (v.x, 1.0)).collect(),
        RowSense::Le,
        inst.budget_rhs(),
    );

    for i in 0..n {
        let vars = model.activity_vars[i];
        let rb = inst.region(i);
        let mut slots = Vec::new();
        let mut ranges = Vec::new();
        for (range, z) in [(rb.left, vars.z_left), (rb.right, vars.z_right)] {
            if let Some(r) = range {
                ranges.push(r);
                slots.push(z);
            }
        }
        let block = hull_block(&RangeSet::new(ranges));
        for row in &block.rows {
            let name = match row.kind {
                HullRowKind::Lower => "lo",
                HullRowKind::Upper => "up",
                HullRowKind::Choice => "pick",
                HullRowKind::Link => "link",
                HullRowKind::FixX => "fix",
                HullRowKind::FixT => "fixlr",
            };
            let mapped: Option<Vec<(usize, f64)>> = row
                .terms
                .iter()
                .map(|&(v, c)| {
                    let k = match v {
                        HullVar::X => Some(vars.x),
                        HullVar::Z(k) => Some(slots[k]),
                        HullVar::T => vars.z_change,
                    };
                    k.map(|k| (k, c))
                })
                .collect();
            // Rows on `t` only exist when `z^{LR}` is a model variable.
            if let Some(terms) = mapped {
                model.add_row(var_name(name, i), terms, row.sense, row.rhs);
            }
        }
    }

    for (k, row) in inst.extras().iter().enumerate() {
        let sense = match row.sense {
            crate::instance::Sense::Le => RowSense::Le,
            crate::instance::Sense::Ge => RowSense::Ge,
        };
        let terms = model
            .activity_vars
            .iter()
            .zip(&row.coeffs)
            .map(|(v, &c)| (v.x, c))
            .collect();
        model.add_row(format!("extra_{}", k + 1), terms, sense, row.rhs);
    }

    let card = model
        .activity_vars
        .iter()
        .flat_map(|v| [(v.z_left, 1.0), (v.z_right, 1.0)])
        .collect();
    model.add_row("card".into(), card, RowSense::Le, inst.m() as f64);

    model.constant = inst.baseline_revenue();
    model
}

/// Big-M-free MIQP: quadratic objective over spend changes with indicator
/// pairs selecting `L`, `S` or `R`.
pub fn build_miqp(inst: &Instance) -> ModelIr {
    let mut model = build_common(inst, false);
    model.name = "miqp".into();
    for (i, a) in inst.activities().iter().enumerate() {
        let v = model.activity_vars[i];
        if a.theta != 0.0 {
            model.quadratic.push(QuadTerm {
                i: v.x,
                j: v.x,
                coeff: a.theta,
            });
        }
        if a.phi != 0.0 {
            model.linear.push((v.x, a.phi));
        }
    }
    model
}

/// Perspective reformulation as a MISOCP: each `theta x^2` is replaced by
/// `-e` with the rotated cone `e * z^{LR} >= -theta * x^2`.
pub fn build_misocp(inst: &Instance) -> ModelIr {
    let mut model = build_common(inst, true);
    model.name = "misocp".into();
    for (i, a) in inst.activities().iter().enumerate() {
        let v = model.activity_vars[i];
        let e = v.e.expect("misocp has e");
        model.linear.push((e, -1.0));
        if a.phi != 0.0 {
            model.linear.push((v.x, a.phi));
        }
        model.cones.push(ConeRow {
            name: var_name("qc", i),
            e,
            z: v.z_change.expect("misocp has zLR"),
            x: v.x,
            coeff: -a.theta,
        });
    }
    model
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{Activity, Instance};

    fn single(theta: f64) -> Instance {
        let a = Activity {
            id: "a".into(),
            s: 5.0,
            l: 1.0,
            u: 10.0,
            delta: 2.0,
            theta,
            phi: 1.0,
            psi: 0.5,
        };
        Instance::new(vec![a], 1.5, 1, vec![]).unwrap()
    }

    fn row<'a>(m: &'a ModelIr, name: &str) -> &'a Row {
        m.rows.iter().find(|r| r.name == name).unwrap()
    }

    #[test]
    fn miqp_single_activity() {
        let m = build_miqp(&single(-1.0));
        assert_eq!(m.variables.len(), 3);
        assert_eq!(m.binaries().count(), 2);
        let names: Vec<_> = m.rows.iter().map(|r| r.name.as_str()).collect();
        assert_eq!(names, ["budget", "lo_1", "up_1", "pick_1", "card"]);
        let b = row(&m, "budget");
        assert_eq!(b.terms, vec![(0, 1.0)]);
        assert!((b.rhs - 2.5).abs() < 1e-15);
        assert_eq!(row(&m, "lo_1").terms, vec![(1, -4.0), (2, 2.0), (0, -1.0)]);
        assert_eq!(row(&m, "up_1").terms, vec![(0, 1.0), (1, 2.0), (2, -5.0)]);
        assert_eq!(row(&m, "pick_1").terms, vec![(1, 1.0), (2, 1.0)]);
        assert_eq!(row(&m, "card").terms, vec![(1, 1.0), (2, 1.0)]);
        assert_eq!(row(&m, "card").rhs, 1.0);
        assert_eq!(
            m.quadratic,
            vec![QuadTerm {
                i: 0,
                j: 0,
                coeff: -1.0
            }]
        );
        assert_eq!(m.constant, 0.5);
        assert!(m.cones.is_empty());
    }

    #[test]
    fn absent_region_fixes_indicator() {
        let a = Activity {
            id: "a".into(),
            s: 9.0,
            l: 1.0,
            u: 10.0,
            delta: 2.0,
            theta: -1.0,
            phi: 1.0,
            psi: 0.0,
        };
        let m = build_miqp(&Instance::new(vec![a], 1.0, 1, vec![]).unwrap());
        let zr = &m.variables[m.var_index("zR_1").unwrap()];
        assert_eq!((zr.lower, zr.upper), (0.0, 0.0));
    }

    #[test]
    fn zero_cap_forces_stay() {
        let m = build_miqp(&single(-1.0).with_m(0).unwrap());
        let card = row(&m, "card");
        assert_eq!(card.rhs, 0.0);
        // with both indicators at 0 the hull rows pin x to 0
        let p = m.lift(&single(-1.0), &[0.0], &[Region::Stay]);
        assert!(m.violations(&p, 0.0).is_empty());
        let mut q = p.clone();
        q[0] = 0.01;
        assert!(!m.violations(&q, 1e-9).is_empty());
    }

    #[test]
    fn misocp_single_activity() {
        let inst = single(-1.0);
        let m = build_misocp(&inst);
        assert_eq!(m.variables.len(), 5);
        assert_eq!(row(&m, "link_1").terms, vec![(1, 1.0), (2, 1.0), (3, -1.0)]);
        assert_eq!(m.cones.len(), 1);
        let c = &m.cones[0];
        assert_eq!((c.e, c.z, c.x, c.coeff), (4, 3, 0, 1.0));
        assert!(m.quadratic.is_empty());
        assert_eq!(m.linear, vec![(4, -1.0), (0, 1.0)]);
    }

    #[test]
    fn binding_epigraph_matches_quadratic() {
        let inst = single(-3.0);
        let m = build_misocp(&inst);
        let p = m.lift(&inst, &[2.0], &[Region::Right]);
        assert_eq!(p[m.activity_vars[0].e.unwrap()], 12.0);
        assert!(m.violations(&p, 1e-12).is_empty());
        let miqp = build_miqp(&inst);
        let q = miqp.lift(&inst, &[2.0], &[Region::Right]);
        assert_eq!(m.objective_at(&p), miqp.objective_at(&q));
    }

    #[test]
    fn flat_revenue_cone_degenerates() {
        let inst = single(0.0);
        let m = build_misocp(&inst);
        assert_eq!(m.cones[0].coeff, 0.0);
        let p = m.lift(&inst, &[2.0], &[Region::Right]);
        assert_eq!(p[m.activity_vars[0].e.unwrap()], 0.0);
        assert!(m.violations(&p, 0.0).is_empty());
    }
}
