//! Argument parsing and the subcommands.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use mmo::bnb::{branch_and_bound, SolveParams, SolveResult, Status};
use mmo::gen::{batch_configs, generate, Correlation, GenGrid};
use mmo::hull::{build_miqp, build_misocp};
use mmo::instance::{load_json, save_json, Instance};
use mmo::relax::Formulation;
use serde::Serialize;

use crate::bench::{bench_csv, run_bench};
use crate::lp::{num, write_lp};
use crate::manifest::{read_manifest, write_manifest, ManifestEntry};
use crate::sweep::{default_grid, knee, run_sweep, sweep_csv, sweep_svg};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormArg {
    Miqp,
    #[value(alias = "misocp")]
    Persp,
}

impl From<FormArg> for Formulation {
    fn from(f: FormArg) -> Self {
        match f {
            FormArg::Miqp => Formulation::Miqp,
            FormArg::Persp => Formulation::Perspective,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "mmo",
    version,
    about = "Marketing-mix optimization with regional spend changes"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Global {
    /// Base seed for instance generation.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for `bench`.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,
    /// Seconds per solve.
    #[arg(long, global = true, default_value_t = 100.0)]
    pub time_limit: f64,
    /// Relative optimality gap at which a solve stops.
    #[arg(long, global = true, default_value_t = 0.0)]
    pub gap_tol: f64,
    #[arg(long, global = true, value_enum)]
    pub form: Option<FormArg>,
    /// Output file or directory, depending on the command.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate random instances and a manifest.
    Gen(GenArgs),
    /// Solve one instance.
    Solve(SolveArgs),
    /// Write an instance's model in LP format.
    Export(ExportArgs),
    /// Solve every instance in a manifest and summarize.
    Bench(BenchArgs),
    /// Trace revenue against the cap on changed activities.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_delimiter = ',', required_unless_present = "paper_grid")]
    pub corr: Vec<Correlation>,
    #[arg(long, value_delimiter = ',', required_unless_present = "paper_grid")]
    pub n: Vec<usize>,
    #[arg(long, value_delimiter = ',', required_unless_present = "paper_grid")]
    pub eps: Vec<f64>,
    #[arg(long, value_delimiter = ',', required_unless_present = "paper_grid")]
    pub xi: Vec<f64>,
    /// Instances per grid cell.
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    /// Use the published grid; explicit lists override its axes.
    #[arg(long)]
    pub paper_grid: bool,
    /// Replace the size axis by this single value.
    #[arg(long)]
    pub scale_n: Option<usize>,
    #[arg(long, default_value_t = 1.01)]
    pub rho: f64,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    pub instance: PathBuf,
    #[arg(long)]
    pub node_limit: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    pub instance: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    pub manifest: PathBuf,
    #[arg(long)]
    pub node_limit: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    pub instance: PathBuf,
    /// Cap increment; defaults to ceil(n / 20).
    #[arg(long)]
    pub step: Option<usize>,
    /// Also draw the curve as SVG.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

pub fn exit_code(status: Status) -> i32 {
    match status {
        Status::Optimal | Status::GapLimit => 0,
        Status::TimeLimit | Status::NodeLimit => 2,
        Status::Infeasible => 3,
    }
}

fn params(g: &Global, form: Formulation, node_limit: Option<usize>) -> Result<SolveParams> {
    if g.time_limit.is_nan() || g.time_limit < 0.0 {
        bail!("--time-limit must be non-negative");
    }
    if g.gap_tol.is_nan() || g.gap_tol < 0.0 {
        bail!("--gap-tol must be non-negative");
    }
    Ok(SolveParams {
        time_limit: g.time_limit,
        gap_tol: g.gap_tol,
        node_limit,
        seed: g.seed,
        ..SolveParams::with_formulation(form)
    })
}

fn load(path: &Path) -> Result<Instance> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    load_json(&bytes).with_context(|| format!("loading {}", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

/// Runs a parsed command and returns the process exit code.
pub fn run(cli: Cli) -> Result<i32> {
    let g = &cli.global;
    match cli.command {
        Command::Gen(a) => gen(g, &a),
        Command::Solve(a) => solve(g, &a),
        Command::Export(a) => {
            let inst = load(&a.instance)?;
            let model = match g.form.unwrap_or(FormArg::Miqp) {
                FormArg::Miqp => build_miqp(&inst),
                FormArg::Persp => build_misocp(&inst),
            };
            emit(g.out.as_deref(), &write_lp(&model))?;
            Ok(0)
        }
        Command::Bench(a) => {
            let entries = read_manifest(&a.manifest)?;
            let forms: Vec<Formulation> = match g.form {
                Some(f) => vec![f.into()],
                None => vec![Formulation::Miqp, Formulation::Perspective],
            };
            let p = params(g, Formulation::Perspective, a.node_limit)?;
            let records = run_bench(&entries, &forms, &p, g.threads);
            emit(g.out.as_deref(), &bench_csv(&records, &forms))?;
            Ok(0)
        }
        Command::Sweep(a) => {
            let inst = load(&a.instance)?;
            let form = g
                .form
                .map(Formulation::from)
                .unwrap_or(Formulation::Perspective);
            let grid = default_grid(inst.n(), a.step);
            let points = run_sweep(&inst, &grid, &params(g, form, None)?)?;
            emit(g.out.as_deref(), &sweep_csv(&points))?;
            match knee(&points, 0.995) {
                Some(k) => eprintln!("knee: m = {} ({} of n)", k.m, num(k.m_fraction)),
                None => eprintln!("knee: none"),
            }
            if let Some(svg) = &a.svg {
                fs::write(svg, sweep_svg(&points))
                    .with_context(|| format!("writing {}", svg.display()))?;
            }
            Ok(0)
        }
    }
}

fn gen(g: &Global, a: &GenArgs) -> Result<i32> {
    let mut grid = if a.paper_grid {
        GenGrid::published(g.seed)
    } else {
        GenGrid {
            correlations: vec![],
            ns: vec![],
            epsilons: vec![],
            xis: vec![],
            base_seed: g.seed,
            rho: a.rho,
        }
    };
    grid.rho = a.rho;
    if !a.corr.is_empty() {
        grid.correlations = a.corr.clone();
    }
    if !a.n.is_empty() {
        grid.ns = a.n.clone();
    }
    if !a.eps.is_empty() {
        grid.epsilons = a.eps.clone();
    }
    if !a.xi.is_empty() {
        grid.xis = a.xi.clone();
    }
    if let Some(n) = a.scale_n {
        grid.ns = vec![n];
    }
    if grid.ns.contains(&0) {
        bail!("--n must be positive");
    }
    if grid
        .epsilons
        .iter()
        .chain(&grid.xis)
        .any(|v| !(0.0..=1.0).contains(v))
    {
        bail!("--eps and --xi must lie in [0, 1]");
    }
    let dir = g.out.clone().unwrap_or_else(|| PathBuf::from("instances"));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;

    let mut entries = Vec::new();
    for cell in batch_configs(&grid, a.count) {
        let c = &cell.config;
        let name = format!(
            "{}_n{}_e{}_x{}_c{:03}_r{:02}.json",
            c.correlation,
            c.n,
            num(c.epsilon),
            num(c.xi),
            cell.index,
            cell.replicate
        );
        let inst = generate(c);
        fs::write(dir.join(&name), save_json(&inst)).with_context(|| format!("writing {name}"))?;
        entries.push(ManifestEntry {
            path: name.into(),
            corr: c.correlation,
            n: c.n,
            eps: c.epsilon,
            xi: c.xi,
            seed: c.seed,
        });
    }
    let manifest = write_manifest(&entries)?;
    fs::write(dir.join("manifest.csv"), &manifest)?;
    print!("{manifest}");
    eprintln!("wrote {} instances to {}", entries.len(), dir.display());
    Ok(0)
}

#[derive(Serialize)]
struct Report<'a> {
    formulation: &'static str,
    #[serde(flatten)]
    result: &'a SolveResult,
}

pub fn report_text(form: Formulation, r: &SolveResult) -> String {
    let opt = |v: Option<f64>| v.map(num).unwrap_or_else(|| "-".into());
    let fin = |v: f64| if v.is_finite() { num(v) } else { "-".into() };
    let mut s = format!(
        "formulation: {}\nstatus: {}\nobjective: {}\nbound: {}\ngap: {}\nnodes: {}\ntime_s: {:.6}\n",
        form.label(),
        r.status,
        opt(r.objective()),
        fin(r.upper_bound),
        fin(r.gap),
        r.nodes,
        r.wall_time
    );
    if let Some(sol) = &r.incumbent {
        s.push_str(&format!("changes: {}\n", sol.changes()));
    }
    s
}

fn solve(g: &Global, a: &SolveArgs) -> Result<i32> {
    let inst = load(&a.instance)?;
    let form = g
        .form
        .map(Formulation::from)
        .unwrap_or(Formulation::Perspective);
    let r = branch_and_bound(&inst, &params(g, form, a.node_limit)?);
    print!("{}", report_text(form, &r));
    if let Some(out) = &g.out {
        let json = serde_json::to_string_pretty(&Report {
            formulation: form.label(),
            result: &r,
        })?;
        fs::write(out, json).with_context(|| format!("writing {}", out.display()))?;
    }
    Ok(exit_code(r.status))
}
