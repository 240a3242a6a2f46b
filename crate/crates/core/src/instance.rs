//! Problem data: activities, region preprocessing, validation and the
//! canonical JSON document format.
//!
//! An activity's spend change `x = y - s` is restricted to at most three
//! disjoint pieces: a decrease region `L`, the no-change point `S = {0}` and an
//! increase region `R`. Which pieces exist follows directly from the spend
//! bounds and the minimum change `delta`; see [`compute_regions`].

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A closed interval `[lo, hi]` of spend changes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "empty interval [{lo}, {hi}]");
        Self { lo, hi }
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        x >= self.lo - tol && x <= self.hi + tol
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.max(self.lo).min(self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// The three places a spend change can land.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Region {
    #[serde(rename = "L")]
    Left,
    #[serde(rename = "S")]
    Stay,
    #[serde(rename = "R")]
    Right,
}

impl Region {
    pub const ALL: [Region; 3] = [Region::Left, Region::Stay, Region::Right];

    pub fn is_change(self) -> bool {
        self != Region::Stay
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Region::Left => "L",
            Region::Stay => "S",
            Region::Right => "R",
        })
    }
}

/// One marketing activity.
///
/// Revenue as a function of the spend change is `theta*x^2 + phi*x + psi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Activity {
    pub id: String,
    /// Baseline spend.
    pub s: f64,
    /// Spend lower bound.
    pub l: f64,
    /// Spend upper bound.
    pub u: f64,
    /// Minimum nonzero change in spend.
    pub delta: f64,
    pub theta: f64,
    pub phi: f64,
    pub psi: f64,
}

impl Activity {
    /// Revenue of this activity at spend change `x`.
    pub fn revenue(&self, x: f64) -> f64 {
        self.theta * x * x + self.phi * x + self.psi
    }

    /// Largest possible `|x|`; the tightest valid big-M for this activity.
    pub fn radius(&self) -> f64 {
        (self.l - self.s).abs().max((self.u - self.s).abs())
    }

    fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (name, v) in [
            ("s", self.s),
            ("l", self.l),
            ("u", self.u),
            ("delta", self.delta),
            ("theta", self.theta),
            ("phi", self.phi),
            ("psi", self.psi),
        ] {
            if !v.is_finite() {
                out.push(format!("{name} is not finite"));
            }
        }
        if !out.is_empty() {
            return out;
        }
        if self.s < 0.0 {
            out.push(format!("baseline spend s = {} is negative", self.s));
        }
        if self.l > self.s {
            out.push(format!(
                "lower bound l = {} exceeds baseline s = {}",
                self.l, self.s
            ));
        }
        if self.s > self.u {
            out.push(format!(
                "baseline s = {} exceeds upper bound u = {}",
                self.s, self.u
            ));
        }
        if self.theta > 0.0 {
            out.push(format!(
                "theta = {} is positive (revenue must be concave)",
                self.theta
            ));
        }
        if self.delta < 0.0 {
            out.push(format!("minimum change delta = {} is negative", self.delta));
        }
        out
    }
}

/// Feasible pieces of one activity's spend change.
///
/// `S` always exists, so only `L` and `R` are stored. An absent region means
/// its indicator is fixed to zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionBounds {
    pub left: Option<Interval>,
    pub right: Option<Interval>,
}

impl RegionBounds {
    pub fn get(&self, region: Region) -> Option<Interval> {
        match region {
            Region::Left => self.left,
            Region::Stay => Some(Interval::new(0.0, 0.0)),
            Region::Right => self.right,
        }
    }

    pub fn exists(&self, region: Region) -> bool {
        self.get(region).is_some()
    }

    /// Number of regions, counting `S`.
    pub fn count(&self) -> usize {
        1 + self.left.is_some() as usize + self.right.is_some() as usize
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid activity {id}: {}", .problems.join("; "))]
pub struct InvalidActivity {
    pub id: String,
    pub problems: Vec<String>,
}

/// Splits an activity's spend range into the `L`/`S`/`R` regions.
///
/// `L = [l - s, -delta]` exists iff `l - s <= -delta`, and
/// `R = [delta, u - s]` exists iff `delta <= u - s`.
pub fn compute_regions(a: &Activity) -> Result<RegionBounds, InvalidActivity> {
    let problems = a.problems();
    if !problems.is_empty() {
        return Err(InvalidActivity {
            id: a.id.clone(),
            problems,
        });
    }
    let down = a.l - a.s;
    let up = a.u - a.s;
    let left = (down <= -a.delta).then(|| Interval::new(down, -a.delta));
    let right = (a.delta <= up).then(|| Interval::new(a.delta, up));
    Ok(RegionBounds { left, right })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Le,
    Ge,
}

/// An extra linear constraint `sum_i coeffs[i] * x_i (<= | >=) rhs` over
/// spend changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearConstraint {
    pub coeffs: Vec<f64>,
    pub sense: Sense,
    pub rhs: f64,
}

/// A coupling row in `<=` form: `sum_i coeffs[i] * x_i <= rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct LeRow {
    pub coeffs: Vec<f64>,
    pub rhs: f64,
}

impl LeRow {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().zip(x).map(|(a, v)| a * v).sum()
    }
}

/// One entry of a [`ValidationReport`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub activity: Option<String>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.activity {
            Some(id) => write!(f, "activity {id}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.violations.iter().enumerate() {
            if k > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema error: field `{field}`: {message}")]
    Schema { field: String, message: String },
    #[error("invalid instance: {0}")]
    Invalid(ValidationReport),
}

/// The on-disk document. Field order here is the canonical key order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDoc {
    pub rho: f64,
    pub m: usize,
    pub activities: Vec<Activity>,
    pub extras: Vec<LinearConstraint>,
}

/// Checks every activity and instance invariant, collecting all violations.
pub fn validate(doc: &InstanceDoc) -> ValidationReport {
    let mut violations = Vec::new();
    let n = doc.activities.len();
    let global = |message: String| Violation {
        activity: None,
        message,
    };

    if n == 0 {
        violations.push(global("instance has no activities".into()));
    }
    if !(doc.rho.is_finite() && doc.rho > 0.0) {
        violations.push(global(format!(
            "budget ratio rho = {} must be finite and positive",
            doc.rho
        )));
    }
    if doc.m > n {
        violations.push(global(format!(
            "cardinality cap exceeds activity count (m = {}, n = {n})",
            doc.m
        )));
    }
    let mut ids: Vec<&str> = Vec::with_capacity(n);
    for a in &doc.activities {
        if a.id.is_empty() {
            violations.push(global("activity with empty id".into()));
        }
        ids.push(&a.id);
        for message in a.problems() {
            violations.push(Violation {
                activity: Some(a.id.clone()),
                message,
            });
        }
    }
    ids.sort_unstable();
    for w in ids.windows(2) {
        if w[0] == w[1] && !w[0].is_empty() {
            violations.push(Violation {
                activity: Some(w[0].to_string()),
                message: "duplicate id".into(),
            });
        }
    }
    for (k, row) in doc.extras.iter().enumerate() {
        if row.coeffs.len() != n {
            violations.push(global(format!(
                "extra constraint {k} has {} coefficients, expected {n}",
                row.coeffs.len()
            )));
        }
        if !row.rhs.is_finite() || row.coeffs.iter().any(|c| !c.is_finite()) {
            violations.push(global(format!("extra constraint {k} has non-finite data")));
        }
    }
    ValidationReport { violations }
}

/// A validated problem instance.
///
/// Activities are kept sorted by id (extra-constraint coefficients permuted
/// along with them) and their regions are computed once at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    activities: Vec<Activity>,
    rho: f64,
    m: usize,
    extras: Vec<LinearConstraint>,
    regions: Vec<RegionBounds>,
    extra_rows: Vec<LeRow>,
}

impl Instance {
    pub fn new(
        activities: Vec<Activity>,
        rho: f64,
        m: usize,
        extras: Vec<LinearConstraint>,
    ) -> Result<Self, InstanceError> {
        Self::from_doc(InstanceDoc {
            rho,
            m,
            activities,
            extras,
        })
    }

    pub fn from_doc(doc: InstanceDoc) -> Result<Self, InstanceError> {
        let report = validate(&doc);
        if !report.is_valid() {
            return Err(InstanceError::Invalid(report));
        }
        let InstanceDoc {
            rho,
            m,
            activities,
            extras,
        } = doc;

        let mut order: Vec<usize> = (0..activities.len()).collect();
        order.sort_by(|&a, &b| activities[a].id.cmp(&activities[b].id));
        let activities: Vec<Activity> = order.iter().map(|&k| activities[k].clone()).collect();
        let extras: Vec<LinearConstraint> = extras
            .into_iter()
            .map(|c| LinearConstraint {
                coeffs: order.iter().map(|&k| c.coeffs[k]).collect(),
                ..c
            })
            .collect();

        let regions = activities
            .iter()
            .map(|a| compute_regions(a).expect("validated"))
            .collect();
        let extra_rows = extras
            .iter()
            .map(|c| match c.sense {
                Sense::Le => LeRow {
                    coeffs: c.coeffs.clone(),
                    rhs: c.rhs,
                },
                Sense::Ge => LeRow {
                    coeffs: c.coeffs.iter().map(|v| -v).collect(),
                    rhs: -c.rhs,
                },
            })
            .collect();
        Ok(Self {
            activities,
            rho,
            m,
            extras,
            regions,
            extra_rows,
        })
    }

    pub fn to_doc(&self) -> InstanceDoc {
        InstanceDoc {
            rho: self.rho,
            m: self.m,
            activities: self.activities.clone(),
            extras: self.extras.clone(),
        }
    }

    pub fn n(&self) -> usize {
        self.activities.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn activities(&self) -> &[Activity] {
        &self.activities
    }

    pub fn activity(&self, i: usize) -> &Activity {
        &self.activities[i]
    }

    pub fn regions(&self) -> &[RegionBounds] {
        &self.regions
    }

    pub fn region(&self, i: usize) -> &RegionBounds {
        &self.regions[i]
    }

    /// Extra constraints as given in the document.
    pub fn extras(&self) -> &[LinearConstraint] {
        &self.extras
    }

    /// Extra constraints normalized to `<=` form.
    pub fn extra_rows(&self) -> &[LeRow] {
        &self.extra_rows
    }

    /// Right-hand side of the budget row `sum_i x_i <= (rho - 1) * sum_i s_i`.
    pub fn budget_rhs(&self) -> f64 {
        (self.rho - 1.0) * self.activities.iter().map(|a| a.s).sum::<f64>()
    }

    /// Budget row followed by the normalized extras.
    pub fn coupling_rows(&self) -> Vec<LeRow> {
        let mut rows = Vec::with_capacity(1 + self.extra_rows.len());
        rows.push(LeRow {
            coeffs: vec![1.0; self.n()],
            rhs: self.budget_rhs(),
        });
        rows.extend(self.extra_rows.iter().cloned());
        rows
    }

    /// Sum of constant revenue terms; the revenue of the unchanged plan.
    pub fn baseline_revenue(&self) -> f64 {
        self.activities.iter().map(|a| a.psi).sum()
    }

    /// Same data with a different cardinality cap.
    pub fn with_m(&self, m: usize) -> Result<Self, InstanceError> {
        let mut doc = self.to_doc();
        doc.m = m;
        Self::from_doc(doc)
    }

    /// Same activities and cap with the extra constraints dropped.
    pub fn budget_only(&self) -> Self {
        let mut out = self.clone();
        out.extras.clear();
        out.extra_rows.clear();
        out
    }
}

/// Parses an instance document and validates it.
pub fn load_json(bytes: &[u8]) -> Result<Instance, InstanceError> {
    let doc: InstanceDoc = serde_json::from_slice(bytes).map_err(classify_json_error)?;
    Instance::from_doc(doc)
}

/// Canonical serialization: schema key order, activities by id, two-space
/// indentation, trailing newline.
pub fn save_json(inst: &Instance) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(&inst.to_doc()).expect("instance serializes");
    out.push(b'\n');
    out
}

fn classify_json_error(err: serde_json::Error) -> InstanceError {
    let message = err.to_string();
    let field = |prefix: &str| -> Option<String> {
        let rest = message.strip_prefix(prefix)?;
        let rest = rest.strip_prefix('`')?;
        Some(rest[..rest.find('`')?].to_string())
    };
    if let Some(f) = field("missing field ").or_else(|| field("unknown field ")) {
        return InstanceError::Schema { field: f, message };
    }
    InstanceError::Parse {
        line: err.line(),
        column: err.column(),
        message,
    }
}

/// A candidate plan: spend changes plus the region each activity is in.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Solution {
    pub x: Vec<f64>,
    pub region: Vec<Region>,
    pub objective: f64,
    /// New spend levels `s + x`.
    pub y: Vec<f64>,
}

impl Solution {
    /// Builds a solution, computing objective and spend levels.
    ///
    /// An activity labelled `L` or `R` whose change is exactly zero (possible
    /// only when `delta = 0`) is relabelled `S` so that no indicator is set
    /// without need.
    pub fn new(inst: &Instance, x: Vec<f64>, mut region: Vec<Region>) -> Self {
        assert_eq!(x.len(), inst.n());
        assert_eq!(region.len(), inst.n());
        for (r, &v) in region.iter_mut().zip(&x) {
            if v == 0.0 {
                *r = Region::Stay;
            }
        }
        let objective = objective_value(inst, &x);
        let y = inst
            .activities()
            .iter()
            .zip(&x)
            .map(|(a, v)| a.s + v)
            .collect();
        Self {
            x,
            region,
            objective,
            y,
        }
    }

    /// The unchanged plan.
    pub fn baseline(inst: &Instance) -> Self {
        Self::new(inst, vec![0.0; inst.n()], vec![Region::Stay; inst.n()])
    }

    pub fn changes(&self) -> usize {
        self.region.iter().filter(|r| r.is_change()).count()
    }
}

/// Total revenue `sum_i theta_i x_i^2 + phi_i x_i + psi_i`.
pub fn objective_value(inst: &Instance, x: &[f64]) -> f64 {
    inst.activities()
        .iter()
        .zip(x)
        .map(|(a, &v)| a.revenue(v))
        .sum()
}
