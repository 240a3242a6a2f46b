//! Revenue against the cardinality cap.

use std::fmt::Write as _;

use anyhow::{bail, Result};
use mmo::bnb::{branch_and_bound_from, SolveParams, Status};
use mmo::instance::{Instance, Solution};

use crate::lp::num;

#[derive(Debug, Clone, PartialEq)]
pub struct ParetoPoint {
    pub m: usize,
    pub m_fraction: f64,
    pub revenue: Option<f64>,
    /// Revenue over revenue at `m = n`; empty unless the latter is positive.
    pub revenue_fraction: Option<f64>,
    pub status: Status,
}

/// `0, step, 2 step, ...` below `n`, then `n`, with `step = ceil(n / 20)`
/// unless given.
pub fn default_grid(n: usize, step: Option<usize>) -> Vec<usize> {
    let step = step.unwrap_or(n.div_ceil(20)).max(1);
    let mut g: Vec<usize> = (0..n).step_by(step).collect();
    g.push(n);
    g
}

/// Solves once per cap in increasing order, seeding each solve with the
/// previous incumbent, which stays feasible as the cap grows.
pub fn run_sweep(
    inst: &Instance,
    grid: &[usize],
    params: &SolveParams,
) -> Result<Vec<ParetoPoint>> {
    let mut grid = grid.to_vec();
    grid.sort_unstable();
    grid.dedup();
    let n = inst.n();
    let mut prev: Option<Solution> = None;
    let mut points = Vec::with_capacity(grid.len());
    for &m in &grid {
        if m > n {
            bail!("cap {m} exceeds the activity count {n}");
        }
        let sub = inst.with_m(m)?;
        let r = branch_and_bound_from(&sub, params, prev.as_ref());
        if let Some(s) = &r.incumbent {
            prev = Some(s.clone());
        }
        points.push(ParetoPoint {
            m,
            m_fraction: m as f64 / n as f64,
            revenue: r.objective(),
            revenue_fraction: None,
            status: r.status,
        });
    }
    let top = points
        .iter()
        .find(|p| p.m == n)
        .and_then(|p| p.revenue)
        .filter(|&v| v > 0.0);
    if let Some(top) = top {
        for p in &mut points {
            p.revenue_fraction = p.revenue.map(|v| v / top);
        }
    }
    check_monotone(&points)?;
    Ok(points)
}

/// Feasible sets are nested in `m`, so a drop in revenue is a solver bug.
pub fn check_monotone(points: &[ParetoPoint]) -> Result<()> {
    let mut best: Option<(usize, f64)> = None;
    for p in points {
        let Some(v) = p.revenue else { continue };
        if let Some((m0, v0)) = best {
            if v < v0 - 1e-9 * v0.abs().max(1.0) {
                bail!(
                    "revenue decreased from {v0} at m = {m0} to {v} at m = {}",
                    p.m
                );
            }
        }
        best = Some((p.m, v));
    }
    Ok(())
}

pub const HEADER: &str = "m,m_fraction,revenue,revenue_fraction,status";

pub fn sweep_csv(points: &[ParetoPoint]) -> String {
    let mut out = format!("{HEADER}\n");
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            p.m,
            num(p.m_fraction),
            p.revenue.map(num).unwrap_or_default(),
            p.revenue_fraction.map(num).unwrap_or_default(),
            p.status
        );
    }
    out
}

/// Smallest cap whose revenue reaches `level` of the maximum.
pub fn knee(points: &[ParetoPoint], level: f64) -> Option<&ParetoPoint> {
    points
        .iter()
        .find(|p| p.revenue_fraction.is_some_and(|f| f >= level))
}

/// Single-polyline chart of revenue fraction against cap fraction.
pub fn sweep_svg(points: &[ParetoPoint]) -> String {
    let (w, h, pad) = (640.0, 400.0, 50.0);
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter_map(|p| p.revenue_fraction.map(|f| (p.m_fraction, f)))
        .collect();
    let ymin = pts.iter().map(|p| p.1).fold(0.0f64, f64::min);
    let ymax = pts.iter().map(|p| p.1).fold(1.0f64, f64::max);
    let sx = |x: f64| pad + x * (w - 2.0 * pad);
    let sy = |y: f64| h - pad - (y - ymin) / (ymax - ymin).max(1e-12) * (h - 2.0 * pad);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<path d="M{x0} {y0} L{x1} {y0} M{x0} {y0} L{x0} {y1}" stroke="black" fill="none"/>"#,
        x0 = sx(0.0),
        y0 = sy(ymin),
        x1 = sx(1.0),
        y1 = sy(ymax)
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="14">changed activities (fraction of n)</text>"#,
        w / 2.0,
        h - 12.0
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{}" text-anchor="middle" font-size="14" transform="rotate(-90 16 {})">revenue (fraction of maximum)</text>"#,
        h / 2.0,
        h / 2.0
    );
    for (v, label) in [(0.0, "0"), (1.0, "1")] {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{label}</text>"#,
            sx(v),
            sy(ymin) + 18.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="end" font-size="12">{}</text>"#,
        sx(0.0) - 6.0,
        sy(ymin) + 4.0,
        num(ymin)
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="end" font-size="12">{}</text>"#,
        sx(0.0) - 6.0,
        sy(ymax) + 4.0,
        num(ymax)
    );
    let coords: Vec<String> = pts
        .iter()
        .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
        .collect();
    let _ = writeln!(
        out,
        r#"<polyline points="{}" stroke="steelblue" stroke-width="2" fill="none"/>"#,
        coords.join(" ")
    );
    out.push_str("</svg>\n");
    out
}
