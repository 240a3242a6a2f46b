//! Batch comparison of the two formulations.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use mmo::bnb::{branch_and_bound, SolveParams};
use mmo::instance::load_json;
use mmo::relax::Formulation;
use rayon::prelude::*;

use crate::lp::num;
use crate::manifest::ManifestEntry;

pub const HEADER: &str = "corr,n,eps,xi,seed,form,status,objective,bound,gap,nodes,time_s";
pub const SUMMARY_HEADER: &str = "group,value,instances,gap_miqp,gap_persp,time_ratio,node_ratio";

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRun {
    pub form: Formulation,
    /// Solver status, or `error` when the instance could not be loaded.
    pub status: String,
    pub objective: Option<f64>,
    pub bound: Option<f64>,
    pub gap: Option<f64>,
    pub nodes: Option<usize>,
    pub time_s: Option<f64>,
}

impl BenchRun {
    fn completed(&self) -> bool {
        self.status != "error"
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub entry: ManifestEntry,
    pub runs: Vec<BenchRun>,
}

impl BenchRecord {
    fn run(&self, form: Formulation) -> Option<&BenchRun> {
        self.runs.iter().find(|r| r.form == form && r.completed())
    }

    fn ratio(&self, f: impl Fn(&BenchRun) -> Option<f64>) -> Option<f64> {
        let base = f(self.run(Formulation::Miqp)?)?;
        let other = f(self.run(Formulation::Perspective)?)?;
        (base > 0.0).then(|| other / base)
    }

    /// Perspective over MIQP run time.
    pub fn time_ratio(&self) -> Option<f64> {
        self.ratio(|r| r.time_s)
    }

    /// Perspective over MIQP node count.
    pub fn node_ratio(&self) -> Option<f64> {
        self.ratio(|r| r.nodes.map(|n| n as f64))
    }
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

fn solve_entry(entry: &ManifestEntry, form: Formulation, params: &SolveParams) -> BenchRun {
    let loaded = std::fs::read(&entry.path)
        .map_err(|e| e.to_string())
        .and_then(|b| load_json(&b).map_err(|e| e.to_string()));
    match loaded {
        Err(_) => BenchRun {
            form,
            status: "error".into(),
            objective: None,
            bound: None,
            gap: None,
            nodes: None,
            time_s: None,
        },
        Ok(inst) => {
            let p = SolveParams {
                formulation: form,
                ..params.clone()
            };
            let r = branch_and_bound(&inst, &p);
            BenchRun {
                form,
                status: r.status.as_str().into(),
                objective: r.objective(),
                bound: finite(r.upper_bound),
                gap: finite(r.gap),
                nodes: Some(r.nodes),
                time_s: Some(r.wall_time),
            }
        }
    }
}

/// Solves every entry with each formulation. Records come back in manifest
/// order whatever the thread count.
pub fn run_bench(
    entries: &[ManifestEntry],
    forms: &[Formulation],
    params: &SolveParams,
    threads: usize,
) -> Vec<BenchRecord> {
    let work = || {
        entries
            .par_iter()
            .map(|e| BenchRecord {
                entry: e.clone(),
                runs: forms.iter().map(|&f| solve_entry(e, f, params)).collect(),
            })
            .collect()
    };
    match rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
    {
        Ok(pool) => pool.install(work),
        Err(_) => work(),
    }
}

pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let k = values.len();
    Some(if k % 2 == 1 {
        values[k / 2]
    } else {
        0.5 * (values[k / 2 - 1] + values[k / 2])
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// Data rows, then a blank line and the grouped medians. Without records
/// only the header is written.
pub fn bench_csv(records: &[BenchRecord], forms: &[Formulation]) -> String {
    let mut out = String::new();
    out.push_str(HEADER);
    out.push('\n');
    for rec in records {
        let e = &rec.entry;
        for run in &rec.runs {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                e.corr,
                e.n,
                num(e.eps),
                num(e.xi),
                e.seed,
                run.form.label(),
                run.status,
                opt(run.objective),
                opt(run.bound),
                opt(run.gap),
                run.nodes.map(|n| n.to_string()).unwrap_or_default(),
                run.time_s.map(|t| format!("{t:.6}")).unwrap_or_default(),
            );
        }
    }
    if records.is_empty() {
        return out;
    }

    out.push('\n');
    out.push_str(SUMMARY_HEADER);
    out.push('\n');
    let mut groups: Vec<(String, String, Vec<&BenchRecord>)> =
        vec![("all".into(), String::new(), records.iter().collect())];
    let keyed = |key: &str,
                 f: &dyn Fn(&ManifestEntry) -> String|
     -> Vec<(String, String, Vec<&BenchRecord>)> {
        let mut map: BTreeMap<String, Vec<&BenchRecord>> = BTreeMap::new();
        for r in records {
            map.entry(f(&r.entry)).or_default().push(r);
        }
        map.into_iter()
            .map(|(v, rs)| (key.to_string(), v, rs))
            .collect()
    };
    groups.extend(keyed("corr", &|e| e.corr.to_string()));
    groups.extend(keyed("n", &|e| format!("{:08}", e.n)));
    groups.extend(keyed("eps", &|e| num(e.eps)));
    groups.extend(keyed("xi", &|e| num(e.xi)));

    for (key, value, rs) in groups {
        let value = if key == "n" {
            value.trim_start_matches('0').to_string()
        } else {
            value
        };
        let gap = |form: Formulation| -> Option<f64> {
            if !forms.contains(&form) {
                return None;
            }
            let mut v: Vec<f64> = rs
                .iter()
                .filter_map(|r| r.run(form).and_then(|x| x.gap))
                .collect();
            median(&mut v)
        };
        let mut times: Vec<f64> = rs.iter().filter_map(|r| r.time_ratio()).collect();
        let mut nodes: Vec<f64> = rs.iter().filter_map(|r| r.node_ratio()).collect();
        let _ = writeln!(
            out,
            "{key},{value},{},{},{},{},{}",
            rs.len(),
            opt(gap(Formulation::Miqp)),
            opt(gap(Formulation::Perspective)),
            opt(median(&mut times)),
            opt(median(&mut nodes)),
        );
    }
    out
}
