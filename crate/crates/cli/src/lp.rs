//! CPLEX-style LP text for a [`ModelIr`].

use std::fmt::Write as _;

use mmo::hull::{ModelIr, RowSense, VarKind};

/// Shortest round-trip decimal, with `-0` printed as `0`.
pub fn num(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else {
        format!("{v}")
    }
}

fn push_term(out: &mut String, first: &mut bool, coeff: f64, body: &str) {
    if *first {
        if coeff < 0.0 {
            let _ = write!(out, "- {} {body}", num(-coeff));
        } else {
            let _ = write!(out, "{} {body}", num(coeff));
        }
        *first = false;
    } else if coeff < 0.0 {
        let _ = write!(out, " - {} {body}", num(-coeff));
    } else {
        let _ = write!(out, " + {} {body}", num(coeff));
    }
}

fn linear_expr(model: &ModelIr, terms: &[(usize, f64)]) -> String {
    let mut out = String::new();
    let mut first = true;
    for &(k, c) in terms {
        push_term(&mut out, &mut first, c, &model.variables[k].name);
    }
    if first {
        // an empty row still needs a term
        let _ = write!(out, "0 {}", model.variables[0].name);
    }
    out
}

fn sense(s: RowSense) -> &'static str {
    match s {
        RowSense::Le => "<=",
        RowSense::Ge => ">=",
        RowSense::Eq => "=",
    }
}

/// Writes the model. Quadratic objective coefficients are doubled inside
/// `[ ... ] / 2`, so the text denotes exactly the model's objective.
pub fn write_lp(model: &ModelIr) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "\\ {}", model.name);
    out.push_str("Maximize\n obj: ");

    let mut linear = model.linear.clone();
    linear.extend(model.fixed_charges.iter().copied());
    let mut obj = linear_expr_opt(model, &linear);
    if !model.quadratic.is_empty() {
        let mut q = String::new();
        let mut first = true;
        for t in &model.quadratic {
            let body = if t.i == t.j {
                format!("{} ^2", model.variables[t.i].name)
            } else {
                format!(
                    "{} * {}",
                    model.variables[t.i].name, model.variables[t.j].name
                )
            };
            push_term(&mut q, &mut first, 2.0 * t.coeff, &body);
        }
        if obj.is_empty() {
            obj = format!("[ {q} ] / 2");
        } else {
            obj = format!("{obj} + [ {q} ] / 2");
        }
    }
    if model.constant != 0.0 || obj.is_empty() {
        let c = model.constant;
        obj = match (obj.is_empty(), c < 0.0) {
            (true, _) => num(c),
            (false, true) => format!("{obj} - {}", num(-c)),
            (false, false) => format!("{obj} + {}", num(c)),
        };
    }
    out.push_str(&obj);
    out.push('\n');

    out.push_str("Subject To\n");
    for row in &model.rows {
        let _ = writeln!(
            out,
            " {}: {} {} {}",
            row.name,
            linear_expr(model, &row.terms),
            sense(row.sense),
            num(row.rhs)
        );
    }
    for c in model.cones.iter().filter(|c| c.coeff != 0.0) {
        let v = |k: usize| model.variables[k].name.as_str();
        let _ = writeln!(
            out,
            " {}: [ {} {} ^2 - {} * {} ] <= 0",
            c.name,
            num(c.coeff),
            v(c.x),
            v(c.e),
            v(c.z)
        );
    }

    out.push_str("Bounds\n");
    for v in &model.variables {
        match (v.lower.is_finite(), v.upper.is_finite()) {
            (true, true) if v.lower == v.upper => {
                let _ = writeln!(out, " {} = {}", v.name, num(v.lower));
            }
            (true, true) => {
                let _ = writeln!(out, " {} <= {} <= {}", num(v.lower), v.name, num(v.upper));
            }
            (true, false) => {
                let _ = writeln!(out, " {} >= {}", v.name, num(v.lower));
            }
            (false, true) => {
                let _ = writeln!(out, " -inf <= {} <= {}", v.name, num(v.upper));
            }
            (false, false) => {
                let _ = writeln!(out, " {} free", v.name);
            }
        }
    }

    let binaries: Vec<&str> = model
        .variables
        .iter()
        .filter(|v| v.kind == VarKind::Binary)
        .map(|v| v.name.as_str())
        .collect();
    if !binaries.is_empty() {
        out.push_str("Binary\n");
        for b in binaries {
            let _ = writeln!(out, " {b}");
        }
    }
    out.push_str("End\n");
    out
}

fn linear_expr_opt(model: &ModelIr, terms: &[(usize, f64)]) -> String {
    if terms.is_empty() {
        String::new()
    } else {
        linear_expr(model, terms)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use mmo::hull::{build_miqp, build_misocp};
    use mmo::instance::{Activity, Instance};

    fn single() -> Instance {
        let a = Activity {
            id: "a".into(),
            s: 5.0,
            l: 1.0,
            u: 10.0,
            delta: 2.0,
            theta: -1.5,
            phi: 4.0,
            psi: 0.5,
        };
        Instance::new(vec![a], 1.5, 1, vec![]).unwrap()
    }

    #[test]
    fn miqp_single_activity_text() {
        let text = write_lp(&build_miqp(&single()));
        let expected = "\\ miqp
Maximize
 obj: 4 x_1 + [ - 3 x_1 ^2 ] / 2 + 0.5
Subject To
 budget: 1 x_1 <= 2.5
 lo_1: - 4 zL_1 + 2 zR_1 - 1 x_1 <= 0
 up_1: 1 x_1 + 2 zL_1 - 5 zR_1 <= 0
 pick_1: 1 zL_1 + 1 zR_1 <= 1
 card: 1 zL_1 + 1 zR_1 <= 1
Bounds
 -4 <= x_1 <= 5
 0 <= zL_1 <= 1
 0 <= zR_1 <= 1
Binary
 zL_1
 zR_1
End
";
        assert_eq!(text, expected);
    }

    #[test]
    fn misocp_has_cone_rows() {
        let text = write_lp(&build_misocp(&single()));
        assert!(text.contains(" qc_1: [ 1.5 x_1 ^2 - e_1 * zLR_1 ] <= 0\n"));
        assert!(text.contains(" e_1 >= 0\n"));
        assert!(text.contains(" link_1: 1 zL_1 + 1 zR_1 - 1 zLR_1 = 0\n"));
        assert!(!text.contains('['.to_string().repeat(2).as_str()));
    }

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-7, 123456.789, -0.0] {
            let s = num(v);
            assert_eq!(s.parse::<f64>().unwrap(), if v == 0.0 { 0.0 } else { v });
        }
    }
}
