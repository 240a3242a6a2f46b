//! Minimal reader for the LP text emitted by `mmo export`, written without
//! reference to the writer so that the two can be checked against each other.

#![allow(dead_code)]

use std::collections::HashMap;

#[derive(Debug, Default)]
pub struct Expr {
    pub linear: Vec<(String, f64)>,
    /// `(a, b, c)` for `c a b`; squares have `a == b`.
    pub quadratic: Vec<(String, String, f64)>,
    pub constant: f64,
}

impl Expr {
    pub fn eval(&self, at: &HashMap<String, f64>) -> f64 {
        let v = |name: &String| {
            *at.get(name)
                .unwrap_or_else(|| panic!("unknown variable {name}"))
        };
        let lin: f64 = self.linear.iter().map(|(n, c)| c * v(n)).sum();
        let quad: f64 = self.quadratic.iter().map(|(a, b, c)| c * v(a) * v(b)).sum();
        lin + quad + self.constant
    }
}

#[derive(Debug)]
pub struct ParsedRow {
    pub name: String,
    pub expr: Expr,
    pub sense: String,
    pub rhs: f64,
}

#[derive(Debug, Default)]
pub struct ParsedLp {
    pub objective: Expr,
    pub rows: Vec<ParsedRow>,
    pub bounds: HashMap<String, (f64, f64)>,
    pub binaries: Vec<String>,
}

fn number(tok: &str) -> Option<f64> {
    match tok {
        "inf" | "+inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        _ => tok.parse().ok(),
    }
}

/// Parses `c v`, `c v ^2`, `c v * w`, bare constants and `[ ... ] / 2` groups.
fn parse_expr(tokens: &[&str]) -> Expr {
    let mut e = Expr::default();
    let mut k = 0;
    let mut sign = 1.0;
    let mut scale = 1.0;
    let mut in_bracket = false;
    let mut bracket: Vec<(String, String, f64)> = Vec::new();
    while k < tokens.len() {
        match tokens[k] {
            "+" => sign = 1.0,
            "-" => sign = -1.0,
            "[" => {
                in_bracket = true;
                scale = sign;
                sign = 1.0;
            }
            "]" => {
                in_bracket = false;
                let div: f64 = if tokens.get(k + 1) == Some(&"/") {
                    k += 2;
                    tokens[k].parse().unwrap()
                } else {
                    1.0
                };
                for (a, b, c) in bracket.drain(..) {
                    e.quadratic.push((a, b, scale * c / div));
                }
                sign = 1.0;
            }
            tok => {
                // a bare variable carries an implicit unit coefficient
                let (coeff, var) = match number(tok) {
                    Some(c) => {
                        let next = tokens.get(k + 1).copied();
                        let is_var = next.is_some_and(|t| {
                            !matches!(t, "+" | "-" | "]" | "[" | "/") && number(t).is_none()
                        });
                        if is_var {
                            k += 1;
                            (c, next)
                        } else {
                            (c, None)
                        }
                    }
                    None => (1.0, Some(tok)),
                };
                match var {
                    None => {
                        assert!(!in_bracket);
                        e.constant += sign * coeff;
                    }
                    Some(var) => match tokens.get(k + 1).copied() {
                        Some("^2") => {
                            bracket.push((var.to_string(), var.to_string(), sign * coeff));
                            k += 1;
                        }
                        Some("*") => {
                            bracket.push((
                                var.to_string(),
                                tokens[k + 2].to_string(),
                                sign * coeff,
                            ));
                            k += 2;
                        }
                        _ => {
                            assert!(!in_bracket);
                            e.linear.push((var.to_string(), sign * coeff));
                        }
                    },
                }
                sign = 1.0;
            }
        }
        k += 1;
    }
    e
}

pub fn parse_lp(text: &str) -> ParsedLp {
    let mut lp = ParsedLp::default();
    let mut section = "";
    for line in text.lines() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('\\') {
            continue;
        }
        match t {
            "Maximize" | "Subject To" | "Bounds" | "Binary" | "End" => {
                section = match t {
                    "Maximize" => "obj",
                    "Subject To" => "rows",
                    "Bounds" => "bounds",
                    "Binary" => "bin",
                    _ => "end",
                };
                continue;
            }
            _ => {}
        }
        let tokens: Vec<&str> = t.split_whitespace().collect();
        match section {
            "obj" => {
                assert!(tokens[0].ends_with(':'));
                lp.objective = parse_expr(&tokens[1..]);
            }
            "rows" => {
                let name = tokens[0].trim_end_matches(':').to_string();
                let pos = tokens
                    .iter()
                    .position(|t| matches!(*t, "<=" | ">=" | "="))
                    .unwrap();
                lp.rows.push(ParsedRow {
                    name,
                    expr: parse_expr(&tokens[1..pos]),
                    sense: tokens[pos].to_string(),
                    rhs: number(tokens[pos + 1]).unwrap(),
                });
            }
            "bounds" => {
                let b = match tokens.as_slice() {
                    [v, "free"] => (v.to_string(), (f64::NEG_INFINITY, f64::INFINITY)),
                    [v, "=", x] => (v.to_string(), (number(x).unwrap(), number(x).unwrap())),
                    [v, ">=", x] => (v.to_string(), (number(x).unwrap(), f64::INFINITY)),
                    [v, "<=", x] => (v.to_string(), (0.0, number(x).unwrap())),
                    [lo, "<=", v, "<=", hi] => {
                        (v.to_string(), (number(lo).unwrap(), number(hi).unwrap()))
                    }
                    other => panic!("bad bound line {other:?}"),
                };
                lp.bounds.insert(b.0, b.1);
            }
            "bin" => lp.binaries.extend(tokens.iter().map(|s| s.to_string())),
            _ => panic!("text after End: {t}"),
        }
    }
    lp
}
