//! `curvlab`: membership checks, stability tables, bending and disc
//! deformation pipelines, and the acceptance suite.
//!
//! Exit codes: 0 all checks pass, 1 a check failed, 2 bad input.

mod export;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use curvlab::bending::{bend_ratio, build_bent_curve, classify, flat_model_check, model_constants, Ambient, BendParams, ClassTag};
use curvlab::conditions::{surgery_codim_scan, Condition, ConeOptions, DEFAULT_SEED};
use curvlab::curvature_algebra::{model_operator, CurvOp};
use curvlab::disc_deformations::{standardize, ConeOpening, DiscOptions, RotMetric};
use curvlab::fixtures::load_fixtures;
use curvlab::verify::{run_suite, VerifyConfig, CRITERIA};
use curvlab::warped_metrics::{torpedo_profile, TorpedoMode, TorpedoParams};
use curvlab::CurvError;

#[derive(Parser)]
#[command(name = "curvlab", version, about = "Curvature conditions, bending curves and torpedo standardization")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Membership margin of one curvature operator.
    Check(CheckArgs),
    /// Minimal surgery codimension over a range of dimensions or parameters.
    Stability(StabilityArgs),
    /// Build a bending curve and evaluate the bent metric along it.
    Bend(BendArgs),
    /// Standardize a disc metric to a torpedo and record the deformation.
    Deform(DeformArgs),
    /// Run the acceptance suite.
    Verify(VerifyArgs),
    /// Convert a curve CSV or disc metric JSON to SVG or CSV.
    Export(export::ExportArgs),
}

#[derive(Args)]
struct SeedArgs {
    /// Seed for randomized searches; overrides the config file and CURVLAB_SEED.
    #[arg(long)]
    seed: Option<u64>,
}

impl SeedArgs {
    /// Flag, then environment, then config file, then the built-in default.
    fn resolve(&self, config: Option<u64>) -> Result<u64, Fail> {
        if let Some(s) = self.seed {
            return Ok(s);
        }
        if let Ok(v) = std::env::var("CURVLAB_SEED") {
            return parse_seed(&v).map_err(|e| Fail::Input(format!("CURVLAB_SEED: {e}")));
        }
        Ok(config.unwrap_or(DEFAULT_SEED))
    }
}

fn parse_seed(v: &str) -> Result<u64, String> {
    let v = v.trim();
    match v.strip_prefix("0x") {
        Some(hex) => u64::from_str_radix(hex, 16).map_err(|e| e.to_string()),
        None => v.parse().map_err(|e: std::num::ParseIntError| e.to_string()),
    }
}

#[derive(Args)]
struct ConditionArgs {
    /// Builtin condition: psc, sec_pos, p_curv, k_pos_ric, ric_lt, scal_lt.
    #[arg(long)]
    condition: String,
    /// Condition parameter as name=value, e.g. p=1 or k=3. Repeatable.
    #[arg(long = "param", value_parser = parse_param)]
    params: Vec<(String, f64)>,
}

impl ConditionArgs {
    fn build(&self, n: usize, seed: u64) -> Result<Condition, Fail> {
        let params: BTreeMap<String, f64> = self.params.iter().cloned().collect();
        Ok(Condition::builtin(&self.condition, n, &params)?.with_seed(seed))
    }
}

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected name=value, got {s:?}"))?;
    let v: f64 = v.trim().parse().map_err(|_| format!("parameter {k:?} needs a number, got {v:?}"))?;
    Ok((k.trim().to_string(), v))
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    cond: ConditionArgs,
    /// Ambient dimension; implied by model and file operators.
    #[arg(long)]
    n: Option<usize>,
    /// identity, zero, model:n=N,q=Q, or a path to an operator JSON file.
    #[arg(long)]
    operator: String,
    #[command(flatten)]
    seed: SeedArgs,
}

#[derive(Args)]
struct StabilityArgs {
    #[command(flatten)]
    cond: ConditionArgs,
    /// Dimension or inclusive range, e.g. 7 or 5..8.
    #[arg(long, value_parser = parse_range)]
    n: (usize, usize),
    /// Sweep one integer parameter over an inclusive range, e.g. k=2..7.
    #[arg(long, value_parser = parse_sweep)]
    sweep: Option<(String, (usize, usize))>,
    /// Expected codimensions, one per row, e.g. 3,3,3,3.
    #[arg(long, value_delimiter = ',')]
    expect: Option<Vec<usize>>,
    /// Sampled directions per cone radius.
    #[arg(long, default_value_t = 512)]
    directions: usize,
    /// Write the table as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    seed: SeedArgs,
}

fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let num = |x: &str| x.trim().parse::<usize>().map_err(|_| format!("not an integer: {x:?}"));
    match s.split_once("..") {
        Some((a, b)) => {
            let (a, b) = (num(a)?, num(b)?);
            if a > b {
                return Err(format!("empty range {s}"));
            }
            Ok((a, b))
        }
        None => num(s).map(|a| (a, a)),
    }
}

fn parse_sweep(s: &str) -> Result<(String, (usize, usize)), String> {
    let (k, r) = s.split_once('=').ok_or_else(|| format!("expected name=a..b, got {s:?}"))?;
    Ok((k.trim().to_string(), parse_range(r)?))
}

#[derive(Args)]
struct BendArgs {
    #[command(flatten)]
    cond: ConditionArgs,
    #[arg(long)]
    n: usize,
    /// Fiber sphere dimension plus one; the tube has codimension q.
    #[arg(long)]
    q: usize,
    /// flat or torpedo:mu=M. A flat ambient has zero scalar curvature, so
    /// its margins start at 0 and the run cannot pass.
    #[arg(long, default_value = "torpedo:mu=1")]
    ambient: String,
    #[arg(long, default_value_t = 1.0)]
    rbar: f64,
    #[arg(long, default_value_t = 0.05)]
    r_target: f64,
    /// Defaults to the cone radius at the tube model.
    #[arg(long)]
    rho: Option<f64>,
    /// Defaults to the norm of the warped L operator.
    #[arg(long)]
    c2: Option<f64>,
    #[arg(long, default_value_t = 0.1)]
    theta0: f64,
    /// Samples per curve piece.
    #[arg(long, default_value_t = 16)]
    per_segment: usize,
    /// Curve CSV with columns s, theta, kappa, r, t.
    #[arg(long)]
    out: PathBuf,
    /// Margin trace as JSON lines.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[command(flatten)]
    seed: SeedArgs,
}

#[derive(Args)]
struct DeformArgs {
    #[command(flatten)]
    cond: ConditionArgs,
    /// Disc metric JSON, or fixture:STEM:INDEX for a shipped fixture.
    #[arg(long)]
    input: String,
    #[arg(long, default_value_t = 4096)]
    grid_n: usize,
    /// Parameter samples per stage.
    #[arg(long, default_value_t = 11)]
    samples: usize,
    /// Trace as JSON lines.
    #[arg(long)]
    trace: PathBuf,
    /// Final metric JSON.
    #[arg(long)]
    profile: PathBuf,
    #[command(flatten)]
    seed: SeedArgs,
}

/// Contents of `verify --config`.
#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    seed: Option<u64>,
    grid_n: Option<usize>,
    criteria: Option<Vec<u32>>,
}

#[derive(Args)]
struct VerifyArgs {
    /// JSON run configuration with optional seed, grid_n, criteria.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Criteria to run, e.g. 1,3,4; all by default.
    #[arg(long, value_delimiter = ',')]
    criteria: Option<Vec<u32>>,
    #[arg(long)]
    grid_n: Option<usize>,
    /// Write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    seed: SeedArgs,
}

/// Why a command did not succeed; maps onto exit codes 2 and 1.
#[derive(Debug)]
pub enum Fail {
    Input(String),
    Check(String),
}

impl From<CurvError> for Fail {
    fn from(e: CurvError) -> Self {
        match e {
            CurvError::Domain(_)
            | CurvError::Dimension { .. }
            | CurvError::NotOrthonormal(_)
            | CurvError::NotOrthogonal(_)
            | CurvError::Asymmetric(_)
            | CurvError::Parse(_) => Fail::Input(e.to_string()),
            _ => Fail::Check(e.to_string()),
        }
    }
}

pub fn read_input(path: &Path) -> Result<String, Fail> {
    fs::read_to_string(path).map_err(|e| Fail::Input(format!("{}: {e}", path.display())))
}

pub fn read_json(path: &Path) -> Result<serde_json::Value, Fail> {
    serde_json::from_str(&read_input(path)?).map_err(|e| Fail::Input(format!("{}: {e}", path.display())))
}

pub fn write_output(path: &Path, contents: &str) -> Result<(), Fail> {
    fs::write(path, contents).map_err(|e| Fail::Input(format!("{}: {e}", path.display())))
}

/// `Ok(true)` when every check passed.
type Outcome = Result<bool, Fail>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Check(a) => cmd_check(&a),
        Cmd::Stability(a) => cmd_stability(&a),
        Cmd::Bend(a) => cmd_bend(&a),
        Cmd::Deform(a) => cmd_deform(&a),
        Cmd::Verify(a) => cmd_verify(&a),
        Cmd::Export(a) => export::cmd_export(&a),
    };
    match res {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Fail::Check(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Fail::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn parse_operator(spec: &str, n: Option<usize>) -> Result<CurvOp, Fail> {
    let need_n = || n.ok_or_else(|| Fail::Input(format!("operator {spec:?} needs --n")));
    let op = match spec {
        "identity" => CurvOp::identity(need_n()?),
        "zero" => CurvOp::zero(need_n()?),
        _ => match spec.strip_prefix("model:") {
            Some(rest) => {
                let mut kv = BTreeMap::new();
                for part in rest.split(',') {
                    let (k, v) = parse_param(part).map_err(Fail::Input)?;
                    if v < 0.0 || v.fract() != 0.0 {
                        return Err(Fail::Input(format!("model {k} must be a non-negative integer")));
                    }
                    kv.insert(k, v as usize);
                }
                let get = |k: &str| kv.get(k).copied().ok_or_else(|| Fail::Input(format!("model operator needs {k}=")));
                model_operator(get("n")?, get("q")?)?
            }
            None => CurvOp::from_json(&read_json(Path::new(spec))?)?,
        },
    };
    if let Some(n) = n {
        if n != op.n {
            return Err(Fail::Input(format!("--n {n} disagrees with operator dimension {}", op.n)));
        }
    }
    Ok(op)
}

fn cmd_check(a: &CheckArgs) -> Outcome {
    let op = parse_operator(&a.operator, a.n)?;
    let c = a.cond.build(op.n, a.seed.resolve(None)?)?;
    let m = c.membership(&op)?;
    println!("{} n={} {} margin={}", c.name(), op.n, if m.inside { "in" } else { "out" }, m.margin);
    Ok(m.inside)
}

#[derive(Serialize)]
struct StabilityRow {
    condition: String,
    n: usize,
    codim: Option<usize>,
    expected: Option<usize>,
    refuted_below: bool,
    monotone: bool,
    radii: Vec<f64>,
}

fn cmd_stability(a: &StabilityArgs) -> Outcome {
    let seed = a.seed.resolve(None)?;
    let opts = ConeOptions { directions: a.directions, seed, ..ConeOptions::default() };
    let mut conds = Vec::new();
    for n in a.n.0..=a.n.1 {
        match &a.sweep {
            None => conds.push(a.cond.build(n, seed)?),
            Some((name, (lo, hi))) => {
                for v in *lo..=*hi {
                    let mut args = ConditionArgs { condition: a.cond.condition.clone(), params: a.cond.params.clone() };
                    args.params.retain(|(k, _)| k != name);
                    args.params.push((name.clone(), v as f64));
                    conds.push(args.build(n, seed)?);
                }
            }
        }
    }
    if let Some(e) = &a.expect {
        if e.len() != conds.len() {
            return Err(Fail::Input(format!("--expect has {} entries for {} rows", e.len(), conds.len())));
        }
    }
    let mut rows = Vec::new();
    let mut ok = true;
    println!("{:<16} {:>3} {:>6} {:>8} {:>10}", "condition", "n", "codim", "expected", "refuted");
    for (i, c) in conds.iter().enumerate() {
        let scan = surgery_codim_scan(c, &opts)?;
        let expected = a.expect.as_ref().map(|e| e[i]);
        let row_ok = scan.codim.is_some() && scan.monotone && expected.is_none_or(|e| scan.codim == Some(e));
        ok &= row_ok;
        let show = |x: Option<usize>| x.map_or("-".to_string(), |v| v.to_string());
        println!(
            "{:<16} {:>3} {:>6} {:>8} {:>10}{}",
            c.name(),
            c.n,
            show(scan.codim),
            show(expected),
            scan.refuted_below,
            if row_ok { "" } else { "  MISMATCH" }
        );
        rows.push(StabilityRow {
            condition: c.name(),
            n: c.n,
            codim: scan.codim,
            expected,
            refuted_below: scan.refuted_below,
            monotone: scan.monotone,
            radii: scan.rows.iter().map(|r| r.radius).collect(),
        });
    }
    if let Some(out) = &a.out {
        write_output(out, &(serde_json::to_string_pretty(&rows).expect("plain data") + "\n"))?;
    }
    Ok(ok)
}

fn parse_ambient(spec: &str, rbar: f64) -> Result<Ambient, Fail> {
    if spec == "flat" {
        return Ok(Ambient::Flat);
    }
    let rest = spec
        .strip_prefix("torpedo:")
        .ok_or_else(|| Fail::Input(format!("ambient must be flat or torpedo:mu=M, got {spec:?}")))?;
    let (k, mu) = parse_param(rest).map_err(Fail::Input)?;
    if k != "mu" {
        return Err(Fail::Input(format!("torpedo ambient takes mu=, got {k}=")));
    }
    // the profile must cover every radius the curve visits
    let delta = 2.0 * mu.max(rbar);
    Ok(Ambient::Profile(torpedo_profile(TorpedoParams::new(mu, delta)?, TorpedoMode::Mollified)?))
}

fn cmd_bend(a: &BendArgs) -> Outcome {
    let seed = a.seed.resolve(None)?;
    let c = a.cond.build(a.n, seed)?;
    if a.q < 2 || a.q > a.n {
        return Err(Fail::Input(format!("need 2 <= q <= n, got q={}, n={}", a.q, a.n)));
    }
    let ambient = parse_ambient(&a.ambient, a.rbar)?;
    let (rho, c2) = match (a.rho, a.c2) {
        (Some(r), Some(c2)) => (r, c2),
        (r, c2) => {
            let (mr, mc) = model_constants(&c, a.q, &ConeOptions { seed, ..ConeOptions::default() })?;
            (r.unwrap_or(mr), c2.unwrap_or(mc))
        }
    };
    let p = BendParams::new(rho, c2, a.theta0, a.rbar, a.r_target)?;
    let bent = build_bent_curve(&p)?;
    let knots = bent.curve.knots(a.per_segment);
    let sample = bent.curve.sample(&knots);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["s", "theta", "kappa", "r", "t"]).map_err(|e| Fail::Input(e.to_string()))?;
    for i in 0..sample.len() {
        let row = [sample.s[i], sample.theta[i], sample.kappa[i], sample.r[i], sample.t[i]];
        w.write_record(row.iter().map(|x| format!("{x:.17e}"))).map_err(|e| Fail::Input(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Fail::Input(e.to_string()))?;
    write_output(&a.out, &String::from_utf8(bytes).expect("ascii csv"))?;

    let class = classify(&sample);
    let ratio = bend_ratio(&bent.curve, &p, &knots);
    let k = a.n - a.q;
    let rep = flat_model_check(&bent.curve, k, a.q, &c, &ambient, a.per_segment)?;
    if let Some(path) = &a.trace {
        let mut out = String::new();
        for s in &rep.samples {
            out.push_str(&serde_json::json!({"s": s.s, "margin": s.margin, "condition": rep.condition}).to_string());
            out.push('\n');
        }
        write_output(path, &out)?;
    }
    let tilde = class.tag == ClassTag::GammaTildeB && class.partition.is_some();
    println!("rho={rho:.6} C2={c2:.6} theta0={} steps={} (bound {})", p.theta0, bent.report.steps, bent.report.step_bound);
    println!("class {:?}{}", class.tag, class.partition.map_or(String::new(), |pt| {
        let pt: Vec<String> = pt.iter().map(|x| format!("{x:.6e}")).collect();
        format!(" partition [{}]", pt.join(", "))
    }));
    println!("bending ratio {ratio:.4} (<= 1 required)");
    println!("{} min margin {:.6e} at s={:.6e} over {} samples", rep.condition, rep.min_margin, rep.argmin_s, rep.samples.len());
    Ok(tilde && ratio <= 1.0 && rep.min_margin > 0.0)
}

fn load_metric(spec: &str) -> Result<RotMetric, Fail> {
    if let Some(rest) = spec.strip_prefix("fixture:") {
        let (stem, idx) = rest
            .split_once(':')
            .ok_or_else(|| Fail::Input(format!("expected fixture:STEM:INDEX, got {spec:?}")))?;
        let idx: usize = idx.parse().map_err(|_| Fail::Input(format!("fixture index {idx:?} is not an integer")))?;
        let list = load_fixtures(stem)?;
        return list
            .into_iter()
            .nth(idx)
            .ok_or_else(|| Fail::Input(format!("fixture set {stem:?} has no entry {idx}")));
    }
    Ok(RotMetric::from_json(&read_json(Path::new(spec))?)?)
}

fn cmd_deform(a: &DeformArgs) -> Outcome {
    let seed = a.seed.resolve(None)?;
    let g = load_metric(&a.input)?;
    let c = a.cond.build(g.n, seed)?;
    let opts = DiscOptions {
        grid_n: a.grid_n,
        samples: a.samples,
        cone: ConeOptions { seed, ..ConeOptions::default() },
        ..DiscOptions::default()
    };
    let opening = ConeOpening::compute(&c, g.q, &opts.cone)?;
    let rep = standardize(&g, &c, opening, &opts)?;
    write_output(&a.trace, &rep.trace.to_jsonl())?;
    // pulled-back profiles have no closed form, so the file holds samples
    let fin = rep.final_metric.sampled(a.grid_n)?.to_json()?;
    write_output(&a.profile, &(serde_json::to_string_pretty(&fin).expect("plain data") + "\n"))?;
    println!("{} q={} n={} sigma={:.6e} delta*={:.6e}", rep.condition, g.q, g.n, rep.plan.sigma, rep.delta_star);
    println!("trace: {} samples, min margin {:.6e}", rep.trace.samples.len(), rep.trace.min_margin());
    println!("torpedo on [0, sigma] within {:.3e}; final metric within {:.3e}", rep.sigma_torpedo_defect, rep.final_torpedo_defect);
    println!("boundary defect {:.3e}", rep.trace.max_boundary_defect());
    for cl in rep.phi_clauses.failures().into_iter().chain(rep.psi_clauses.failures()) {
        println!("clause {} fails by {:.3e}", cl.name, cl.worst);
    }
    Ok(rep.passes())
}

fn cmd_verify(a: &VerifyArgs) -> Outcome {
    let file: RunConfig = match &a.config {
        Some(p) => serde_json::from_value(read_json(p)?).map_err(|e| Fail::Input(format!("{}: {e}", p.display())))?,
        None => RunConfig::default(),
    };
    let defaults = VerifyConfig::default();
    let cfg = VerifyConfig {
        seed: a.seed.resolve(file.seed)?,
        grid_n: a.grid_n.or(file.grid_n).unwrap_or(defaults.grid_n),
    };
    let ids = a.criteria.clone().or(file.criteria).unwrap_or_else(|| CRITERIA.to_vec());
    if let Some(bad) = ids.iter().find(|i| !CRITERIA.contains(i)) {
        return Err(Fail::Input(format!("no criterion {bad}")));
    }
    let report = run_suite(&cfg, &ids);
    for c in &report.checks {
        println!("{}", c.line());
    }
    println!("{} passed, {} failed", report.summary.passed, report.summary.failed);
    if let Some(out) = &a.out {
        write_output(out, &(report.to_json() + "\n"))?;
    }
    Ok(report.all_pass())
}
