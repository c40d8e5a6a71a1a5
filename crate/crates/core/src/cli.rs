//! Command-line front end: derivation, golden verification, the end-to-end
//! pipeline, σ tables, Benney densities and SC sampling.
//!
//! Exit codes: 0 success, 1 verification mismatch, 2 internal inconsistency.
//! Data goes to `--out` (or stdout) and is byte-identical for any thread count;
//! timings go to stderr.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::{json, Value};
use thiserror::Error;

use crate::algebra::Coeff;
use crate::benney_sc::{conserved_densities, fix_residue, sample_text, sc_sample, SlitConfig, Vertex, DEFAULT_TOL};
use crate::curve::{CurveC45, Sheet};
use crate::pole::{derive_u0_relations, phi2_pole_expansion, reparam_to_w1, Phi2Pole, TaylorTable, U0Options, U0Relations, DEFAULT_W1_ORDER};
use crate::psi_lambda::{assemble_lambda, bdef_series, phi2_quotient, solve_b_vector, solve_psi, PointData, B_SERIES_ORDER, DEFAULT_SIGMA_DEPTH};
use crate::sigma::{BuildOptions, SigmaExpansion};
use crate::strata::{derive_stratum, parse_golden, RelationSet, DEFAULT_XI_ORDER};

pub const RELTHET4: &str = include_str!("../data/relthet4.txt");
pub const APPENDIX_B: &str = include_str!("../data/appendix_b.txt");
pub const APPENDIX_C: &str = include_str!("../data/appendix_c.txt");

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{stage}: {msg}")]
    Internal { stage: &'static str, msg: String },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid input: {0}")]
    Input(String),
}

impl CliError {
    fn at<E: std::fmt::Display>(stage: &'static str) -> impl Fn(E) -> CliError {
        move |e| CliError::Internal { stage, msg: e.to_string() }
    }
}

#[derive(Parser, Debug)]
#[command(name = "tetragonal", version, about = "σ-function stratum calculus for the (4,5) curve and Benney slit maps")]
pub struct Cli {
    #[command(flatten)]
    pub run: RunConfig,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Clone, Debug)]
pub struct RunConfig {
    /// Order of the ξ-expansion used in the descent.
    #[arg(long, global = true, default_value_t = DEFAULT_XI_ORDER)]
    pub xi_order: u32,
    /// Order of the w1-expansion about u0.
    #[arg(long, global = true, default_value_t = DEFAULT_W1_ORDER)]
    pub w1_order: u32,
    /// Highest C_k of the σ table.
    #[arg(long, global = true, default_value_t = DEFAULT_SIGMA_DEPTH)]
    pub depth: i32,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output file (default: stdout).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { xi_order: DEFAULT_XI_ORDER, w1_order: DEFAULT_W1_ORDER, depth: DEFAULT_SIGMA_DEPTH, threads: None, out: None }
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Descend from σ = 0 to the given stratum and write its relation set.
    Derive {
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=4))]
        level: u8,
    },
    /// Check a golden relation corpus against derived relations.
    Verify {
        target: Target,
        /// Previously derived relation file (level 4 for relthet4, level 1 otherwise).
        #[arg(long)]
        relations: Option<PathBuf>,
        /// Replacement corpus file.
        #[arg(long)]
        golden: Option<PathBuf>,
    },
    /// Θ^[1], u0 relations, Ψ, B and λ(p) in one run.
    Pipeline {
        /// Previously derived level-1 relation file.
        #[arg(long)]
        relations: Option<PathBuf>,
    },
    /// Build the σ expansion table C15..C_depth.
    SigmaExpand,
    /// Conserved densities H_0..H_n of the Benney moments.
    Benney {
        #[arg(long, default_value_t = 6)]
        n: usize,
    },
    /// Sample λ(p) on a grid of the upper half plane.
    ScSample(ScArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Target {
    #[value(name = "relthet4")]
    RelThet4,
    #[value(name = "appendixB")]
    AppendixB,
    #[value(name = "appendixC")]
    AppendixC,
}

#[derive(Args, Clone, Debug)]
pub struct ScArgs {
    /// Eight vertices p̂ (α = 1/4 each), comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub vertices: Option<Vec<f64>>,
    /// Six slit ends v̂; the last is reset by the residue condition.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub ends: Option<Vec<f64>>,
    #[arg(long, default_value_t = -10.0, allow_hyphen_values = true)]
    pub re_min: f64,
    #[arg(long, default_value_t = 10.0, allow_hyphen_values = true)]
    pub re_max: f64,
    #[arg(long, default_value_t = 0.0)]
    pub im_min: f64,
    #[arg(long, default_value_t = 5.0)]
    pub im_max: f64,
    #[arg(long, default_value_t = 41)]
    pub nx: usize,
    #[arg(long, default_value_t = 11)]
    pub ny: usize,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
}

/// Text output and exit code of one command.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub output: String,
    pub code: i32,
}

impl Outcome {
    fn ok(output: String) -> Outcome {
        Outcome { output, code: 0 }
    }
}

fn stamp(stage: &str, t: Instant) {
    eprintln!("[{stage}] {:.2}s", t.elapsed().as_secs_f64());
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

fn relations_for(level: u8, file: Option<&Path>, cfg: &RunConfig) -> Result<RelationSet, CliError> {
    if let Some(p) = file {
        let set = RelationSet::from_text(&read(p)?).map_err(CliError::at("relations file"))?;
        if set.level != level {
            return Err(CliError::Input(format!("{} holds level {}, expected {level}", p.display(), set.level)));
        }
        return Ok(set);
    }
    let t = Instant::now();
    let (set, _) = derive_stratum(level, cfg.xi_order).map_err(CliError::at("descent"))?;
    stamp("descent", t);
    Ok(set)
}

/// Relation set text for `derive`.
pub fn cmd_derive(level: u8, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let t = Instant::now();
    let (set, reports) = derive_stratum(level, cfg.xi_order).map_err(CliError::at("descent"))?;
    for (k, r) in reports.iter().enumerate() {
        eprintln!("[level {}] {} rules, {} side relations, {:.2}s", 4 - k, r.rules, r.side, r.seconds);
    }
    stamp("derive", t);
    Ok(Outcome::ok(set.to_text()))
}

fn per_rule(label: String, line: usize, lhs: String, rhs: String, diff: String) -> Value {
    json!({ "where": label, "line": line, "lhs": lhs, "rhs": rhs, "reduced_difference": diff })
}

/// Golden check; one failure entry per rule that does not reduce to `0 = 0`.
pub fn cmd_verify(target: Target, relations: Option<&Path>, golden: Option<&Path>, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let corpus = match golden {
        Some(p) => read(p)?,
        None => match target {
            Target::RelThet4 => RELTHET4,
            Target::AppendixB => APPENDIX_B,
            Target::AppendixC => APPENDIX_C,
        }
        .to_string(),
    };
    let mut failures = Vec::new();
    let mut checked = 0;
    match target {
        Target::RelThet4 | Target::AppendixB => {
            let level = if target == Target::RelThet4 { 4 } else { 1 };
            let set = relations_for(level, relations, cfg)?;
            for g in parse_golden(&corpus, None).map_err(CliError::at("golden corpus"))? {
                checked += 1;
                if !set.proves(&g.lhs, &g.rhs) {
                    let d = set.reduce(&g.lhs.sub(&g.rhs));
                    failures.push(per_rule(format!("level {level}"), g.line, g.lhs.to_string(), g.rhs.to_string(), d.to_string()));
                }
            }
        }
        Target::AppendixC => {
            let t1 = relations_for(1, relations, cfg)?;
            for sheet in Sheet::all() {
                let (_, rels) = point_relations(&t1, sheet, cfg)?;
                for g in parse_golden(&corpus, Some(sheet.index())).map_err(CliError::at("golden corpus"))? {
                    checked += 1;
                    if !rels.set.proves(&g.lhs, &g.rhs) {
                        let d = rels.set.reduce(&g.lhs.sub(&g.rhs));
                        failures.push(per_rule(format!("sheet {}", sheet.index()), g.line, g.lhs.to_string(), g.rhs.to_string(), d.to_string()));
                    }
                }
            }
        }
    }
    let code = if failures.is_empty() { 0 } else { 1 };
    let name = target.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default();
    let report = json!({ "target": name, "checked": checked, "failed": failures.len(), "failures": failures });
    Ok(Outcome { output: pretty(&report), code })
}

fn point_relations(t1: &RelationSet, sheet: Sheet, cfg: &RunConfig) -> Result<(TaylorTable, U0Relations), CliError> {
    let w = reparam_to_w1(&CurveC45::new(), sheet, cfg.w1_order as i32).map_err(CliError::at("w1 reparametrization"))?;
    let table = TaylorTable::new(&w, cfg.w1_order).map_err(CliError::at("Taylor table"))?;
    let opts = U0Options { w1_order: cfg.w1_order, ..U0Options::default() };
    let rels = derive_u0_relations(t1, &table, &opts).map_err(CliError::at("u0 relations"))?;
    Ok((table, rels))
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

fn coeff(c: &Coeff) -> String {
    c.to_string()
}

/// Every headline quantity of the reduction, each with a short description.
pub fn cmd_pipeline(relations: Option<&Path>, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let t1 = relations_for(1, relations, cfg)?;
    let t = Instant::now();
    let mut sheets: Vec<(TaylorTable, U0Relations, Phi2Pole)> = Vec::new();
    for sheet in Sheet::all() {
        let (table, rels) = point_relations(&t1, sheet, cfg)?;
        let pole = phi2_pole_expansion(&rels, &table).map_err(CliError::at("φ2 pole expansion"))?;
        sheets.push((table, rels, pole));
    }
    stamp("u0 relations", t);
    let t = Instant::now();
    let sig = SigmaExpansion::build(cfg.depth, BuildOptions::default()).map_err(CliError::at("σ expansion"))?;
    stamp("σ expansion", t);

    let t = Instant::now();
    let points: Vec<PointData<'_>> = sheets.iter().map(|(t, r, p)| PointData { relations: r, table: t, phi2: p }).collect();
    let psi = solve_psi(&t1, &points, &sig).map_err(CliError::at("Ψ"))?;
    let a1 = sheets[0].2.a1.clone();
    let series = bdef_series(&sig, &CurveC45::new(), &phi2_quotient(&a1), &psi.quotient(), B_SERIES_ORDER).map_err(CliError::at("B series"))?;
    let b = solve_b_vector(series).map_err(CliError::at("B vector"))?;
    let (table, rels, pole) = &sheets[0];
    let lambda = assemble_lambda(&psi, &b, rels, table, pole).map_err(CliError::at("λ assembly"))?;
    stamp("Ψ, B, λ", t);

    let poles: Vec<Value> = sheets
        .iter()
        .map(|(_, _, p)| {
            json!({
                "sheet": p.sheet.index(),
                "double_pole": coeff(&p.double_pole),
                "residue_constant": coeff(&p.residue_const),
                "residue_a1_coefficient": coeff(&p.residue_a1),
                "a1": coeff(&p.a1),
            })
        })
        .collect();
    let consistent = sheets.iter().all(|(_, _, p)| p.a1 == a1);
    let report = json!({
        "config": { "xi_order": cfg.xi_order, "w1_order": cfg.w1_order, "depth": cfg.depth },
        "theta1": { "rules": t1.len(), "side_relations": t1.side.len() },
        "phi2_poles": { "what": "double pole and residue of φ2 at u0 on each sheet; A1 removes the residue", "sheets": poles },
        "a1": { "what": "zero-residue value of A1", "value": coeff(&a1) },
        "psi": {
            "what": "Ψ with D1 Ψ cancelling the poles of φ2",
            "value": psi.quotient().to_string(),
            "fixed_at_origin": psi.fixed_at_origin.iter().map(|(s, c)| format!("eta{} = {}", s.to_string().trim_start_matches("sigma"), c)).collect::<Vec<_>>(),
            "discarded": psi.discarded.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
        },
        "b": {
            "what": "constant vector B of the Abelian identity",
            "values": b.b.iter().enumerate().map(|(i, x)| json!({ "index": i + 1, "value": x.to_string() })).collect::<Vec<_>>(),
        },
        "lambda": {
            "what": "the slit map in σ-functions",
            "formula": lambda.to_text(),
            "k": coeff(&lambda.constants.k),
            "weights_consistent": lambda.weights_consistent(),
        },
    });
    let code = if consistent && lambda.weights_consistent() { 0 } else { 2 };
    Ok(Outcome { output: pretty(&report), code })
}

/// σ table in its storage format; open coefficient counts go to stderr.
pub fn cmd_sigma_expand(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let t = Instant::now();
    let sig = SigmaExpansion::build(cfg.depth, BuildOptions::default()).map_err(CliError::at("σ expansion"))?;
    stamp("σ expansion", t);
    for (k, n) in sig.open_flags() {
        eprintln!("C{k}: {n} free coefficients set to zero");
    }
    Ok(Outcome::ok(sig.to_text()))
}

pub fn cmd_benney(n: usize) -> Outcome {
    let h = conserved_densities(n);
    let v: Vec<Value> = h.iter().enumerate().map(|(k, p)| json!({ "n": k, "density": p.to_string() })).collect();
    Outcome::ok(pretty(&json!({ "densities": v })))
}

pub fn sc_config(args: &ScArgs) -> Result<SlitConfig, CliError> {
    let mut cfg = SlitConfig::desk();
    if let Some(v) = &args.vertices {
        if v.len() != 8 {
            return Err(CliError::Input(format!("expected 8 vertices, got {}", v.len())));
        }
        cfg.vertices = v.iter().map(|&x| Vertex::new(x, 1, 4)).collect();
    }
    if let Some(e) = &args.ends {
        if e.len() != 6 {
            return Err(CliError::Input(format!("expected 6 slit ends, got {}", e.len())));
        }
        cfg.ends = e.clone();
    }
    fix_residue(&cfg, 5).map_err(|e| CliError::Input(e.to_string()))
}

/// Tab-separated λ samples on an `nx × ny` grid.
pub fn cmd_sc_sample(args: &ScArgs) -> Result<Outcome, CliError> {
    let cfg = sc_config(args)?;
    let step = |lo: f64, hi: f64, n: usize, k: usize| if n <= 1 { lo } else { lo + (hi - lo) * k as f64 / (n - 1) as f64 };
    let mut pts = Vec::with_capacity(args.nx * args.ny);
    for j in 0..args.ny {
        for i in 0..args.nx {
            pts.push(Complex64::new(step(args.re_min, args.re_max, args.nx, i), step(args.im_min, args.im_max, args.ny, j)));
        }
    }
    let res = sc_sample(&cfg, &pts, args.tol);
    let failed = res.iter().filter(|r| r.is_err()).count();
    if failed > 0 {
        eprintln!("{failed} points did not meet the tolerance");
    }
    let head = format!(
        "# vertices {}\n# ends {}\n",
        cfg.vertices.iter().map(|v| v.p.to_string()).collect::<Vec<_>>().join(","),
        cfg.ends.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
    );
    Ok(Outcome { output: head + &sample_text(&pts, &res), code: if failed > 0 { 2 } else { 0 } })
}

/// Runs one parsed command inside a pool of the requested size.
pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.run.threads {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(CliError::at("thread pool"))?;
    pool.install(|| match &cli.command {
        Command::Derive { level } => cmd_derive(*level, &cli.run),
        Command::Verify { target, relations, golden } => cmd_verify(*target, relations.as_deref(), golden.as_deref(), &cli.run),
        Command::Pipeline { relations } => cmd_pipeline(relations.as_deref(), &cli.run),
        Command::SigmaExpand => cmd_sigma_expand(&cli.run),
        Command::Benney { n } => Ok(cmd_benney(*n)),
        Command::ScSample(a) => cmd_sc_sample(a),
    })
}

/// Binary entry point; returns the process exit code.
pub fn main() -> i32 {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(o) => {
            let written = match &cli.run.out {
                Some(p) => std::fs::write(p, &o.output).map_err(|source| CliError::Io { path: p.display().to_string(), source }),
                None => {
                    use std::io::Write as _;
                    std::io::stdout().lock().write_all(o.output.as_bytes()).map_err(|source| CliError::Io { path: "stdout".into(), source })
                }
            };
            match written {
                Ok(()) => o.code,
                Err(e) => {
                    eprintln!("error: {e}");
                    2
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

