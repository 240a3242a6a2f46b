mod common;

use std::collections::HashMap;
use std::path::Path;
use std::process::{Command, Output};

use common::parse_lp;
use mmo::gen::{generate, Correlation, GenConfig};
use mmo::hull::{build_miqp, build_misocp};
use mmo::instance::{save_json, Instance};
use mmo_cli::bench::{median, HEADER};

fn mmo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mmo"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_instance(dir: &Path, name: &str, inst: &Instance) -> String {
    let p = dir.join(name);
    std::fs::write(&p, save_json(inst)).unwrap();
    p.to_str().unwrap().to_string()
}

fn gen_dir(dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["gen", "--out", dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    mmo(&args)
}

#[test]
fn gen_writes_requested_count() {
    let dir = tempfile::tempdir().unwrap();
    let o = gen_dir(
        dir.path(),
        &[
            "--corr", "strong", "--n", "10", "--eps", "0.2", "--xi", "0.5", "--seed", "7",
            "--count", "3",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    let json = std::fs::read_dir(dir.path())
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().unwrap() == "json")
        .count();
    assert_eq!(json, 3);
    let manifest = stdout(&o);
    assert_eq!(manifest.lines().next().unwrap(), "path,corr,n,eps,xi,seed");
    assert_eq!(manifest.lines().count(), 4);
}

#[test]
fn scaled_published_grid_has_27_cells() {
    let dir = tempfile::tempdir().unwrap();
    let o = gen_dir(dir.path(), &["--paper-grid", "--scale-n", "10"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 28);
}

#[test]
fn gen_without_sizes_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = gen_dir(
        dir.path(),
        &["--corr", "strong", "--eps", "0.2", "--xi", "0.5"],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--n"));
}

#[test]
fn zero_cap_returns_baseline_revenue() {
    let dir = tempfile::tempdir().unwrap();
    let inst = generate(&GenConfig::new(Correlation::Weak, 10, 0.2, 0.5, 3))
        .budget_only()
        .with_m(0)
        .unwrap();
    let path = write_instance(dir.path(), "m0.json", &inst);
    let o = mmo(&["solve", &path]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let obj: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("objective: "))
        .unwrap()
        .parse()
        .unwrap();
    let psi: f64 = inst.activities().iter().map(|a| a.psi).sum();
    assert_eq!(obj, psi);
}

#[test]
fn both_forms_agree_and_json_report_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let inst = generate(&GenConfig::new(Correlation::Uncorrelated, 8, 0.2, 0.5, 11)).budget_only();
    let path = write_instance(dir.path(), "a.json", &inst);
    let mut objs = Vec::new();
    for form in ["miqp", "persp"] {
        let report = dir.path().join(format!("{form}.json"));
        let o = mmo(&[
            "solve",
            &path,
            "--form",
            form,
            "--out",
            report.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
        let v: serde_json::Value =
            serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
        assert_eq!(v["status"], "optimal");
        objs.push(v["incumbent"]["objective"].as_f64().unwrap());
    }
    assert!((objs[0] - objs[1]).abs() <= 1e-6 * objs[0].abs().max(1.0));
}

#[test]
fn forced_time_limit_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let inst = generate(&GenConfig::new(Correlation::Weak, 60, 0.2, 0.5, 5)).budget_only();
    let path = write_instance(dir.path(), "hard.json", &inst);
    let o = mmo(&["solve", &path, "--time-limit", "0"]);
    assert_eq!(o.status.code(), Some(2), "{}", stdout(&o));
    let gap = stdout(&o)
        .lines()
        .find_map(|l| l.strip_prefix("gap: ").map(str::to_string))
        .unwrap();
    assert!(gap == "-" || gap.parse::<f64>().unwrap() > 0.0);
}

#[test]
fn unreadable_instance_exits_1() {
    let o = mmo(&["solve", "/nonexistent/instance.json"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn empty_manifest_gives_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("manifest.csv");
    std::fs::write(&m, "path,corr,n,eps,xi,seed\n").unwrap();
    let o = mmo(&["bench", m.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), format!("{HEADER}\n"));
}

fn data_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .skip(1)
        .take_while(|l| !l.is_empty())
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn bench_rows_and_hand_computed_medians() {
    let dir = tempfile::tempdir().unwrap();
    assert!(gen_dir(
        dir.path(),
        &[
            "--corr",
            "weak,strong",
            "--n",
            "8",
            "--eps",
            "0.05,0.2",
            "--xi",
            "0.5,1",
            "--count",
            "2",
            "--seed",
            "9"
        ]
    )
    .status
    .success());
    let m = dir.path().join("manifest.csv");
    let o = mmo(&[
        "bench",
        m.to_str().unwrap(),
        "--threads",
        "2",
        "--time-limit",
        "10",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 32);
    assert_eq!(text.lines().next().unwrap(), HEADER);

    let mut gaps: HashMap<&str, Vec<f64>> = HashMap::new();
    let mut nodes: HashMap<String, (f64, f64)> = HashMap::new();
    for r in &rows {
        assert!(matches!(r[6].as_str(), "optimal" | "infeasible"), "{r:?}");
        if let Ok(g) = r[9].parse::<f64>() {
            gaps.entry(if r[5] == "miqp" { "miqp" } else { "persp" })
                .or_default()
                .push(g);
        }
        let k = nodes.entry(r[4].clone()).or_default();
        let v: f64 = r[10].parse().unwrap();
        if r[5] == "miqp" {
            k.0 = v
        } else {
            k.1 = v
        }
    }
    let mut ratios: Vec<f64> = nodes
        .values()
        .filter(|(b, _)| *b > 0.0)
        .map(|(b, p)| p / b)
        .collect();
    let summary = text.lines().find(|l| l.starts_with("all,")).unwrap();
    let cols: Vec<&str> = summary.split(',').collect();
    assert_eq!(cols[2], "16");
    match median(&mut ratios) {
        Some(m) => assert!((cols[6].parse::<f64>().unwrap() - m).abs() < 1e-12),
        None => assert_eq!(cols[6], ""),
    }
    let mg = median(gaps.get_mut("miqp").unwrap()).unwrap();
    assert!((cols[3].parse::<f64>().unwrap() - mg).abs() < 1e-12);
    for key in [
        "corr,weak,",
        "corr,strong,",
        "n,8,",
        "eps,0.05,",
        "eps,0.2,",
        "xi,0.5,",
        "xi,1,",
    ] {
        assert!(
            text.lines().any(|l| l.starts_with(key)),
            "missing group {key}"
        );
    }
}

#[test]
fn bench_is_deterministic_apart_from_times() {
    let dir = tempfile::tempdir().unwrap();
    gen_dir(
        dir.path(),
        &[
            "--corr",
            "uncorrelated",
            "--n",
            "8",
            "--eps",
            "0.2",
            "--xi",
            "0.5",
            "--count",
            "4",
            "--seed",
            "1",
        ],
    );
    let m = dir.path().join("manifest.csv");
    let strip = |o: Output| -> Vec<String> {
        data_rows(&stdout(&o))
            .into_iter()
            .map(|mut r| {
                r.pop();
                r.join(",")
            })
            .collect()
    };
    let a = strip(mmo(&["bench", m.to_str().unwrap()]));
    let b = strip(mmo(&["bench", m.to_str().unwrap()]));
    assert_eq!(a, b);
}

#[test]
fn sweep_is_monotone_and_starts_at_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let inst = generate(&GenConfig::new(Correlation::Strong, 10, 0.2, 1.0, 21)).budget_only();
    let path = write_instance(dir.path(), "s.json", &inst);
    let svg = dir.path().join("s.svg");
    let o = mmo(&["sweep", &path, "--svg", svg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("knee"));
    let text = stdout(&o);
    let rows: Vec<Vec<&str>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(rows.len(), 11);
    let revenue: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert!(revenue.windows(2).all(|w| w[1] >= w[0] - 1e-9));
    let psi: f64 = inst.activities().iter().map(|a| a.psi).sum();
    assert_eq!(revenue[0], psi);
    assert_eq!(rows[10][3], "1");
    assert!(std::fs::read_to_string(&svg).unwrap().contains("<polyline"));
}

#[test]
fn export_counts() {
    let dir = tempfile::tempdir().unwrap();
    let inst = generate(&GenConfig::new(Correlation::Weak, 6, 0.1, 0.5, 4));
    let path = write_instance(dir.path(), "e.json", &inst);
    let o = mmo(&["export", &path, "--form", "misocp"]);
    assert_eq!(o.status.code(), Some(0));
    let lp = parse_lp(&stdout(&o));
    let cones = build_misocp(&inst)
        .cones
        .iter()
        .filter(|c| c.coeff != 0.0)
        .count();
    let negative = inst.activities().iter().filter(|a| a.theta < 0.0).count();
    assert_eq!(
        lp.rows.iter().filter(|r| r.name.starts_with("qc_")).count(),
        cones
    );
    assert_eq!(cones, negative);
    let miqp = build_miqp(&inst);
    let out = dir.path().join("m.lp");
    assert!(mmo(&["export", &path, "--out", out.to_str().unwrap()])
        .status
        .success());
    let lp = parse_lp(&std::fs::read_to_string(out).unwrap());
    assert_eq!(lp.rows.len(), miqp.rows.len());
    assert_eq!(lp.binaries.len(), 2 * inst.n());
}
