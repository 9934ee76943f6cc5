//! `wardrop` — command-line front end for wardrop-kit.
//!
//! Exit status: 0 success, 2 a verifier found violations, 1 any error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use wardrop_kit::compose::{
    check_structural_conditions, embed_common_od, embed_sp, product, union, ConstrainedRoutingGame,
};
use wardrop_kit::diagnostics::{
    comonotone_representation, region_sweep, verify_comonotone, verify_mes, SweepPlan,
};
use wardrop_kit::singleton::break_points;
use wardrop_kit::solver::{beckmann_gradient_check, solve_beckmann, solve_mes, verify_wardrop};
use wardrop_kit::{fixtures, jsonfmt, CongestionGame, DemandVector, LoadProfile, SolverConfig};

type AnyResult<T> = Result<T, String>;

#[derive(Parser)]
#[command(name = "wardrop", version, about = "Wardrop equilibria, monotone selection and demand-space regions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Minimize the Beckmann potential at one demand.
    Solve(SolveArgs),
    /// Monotone (minimal-norm) equilibrium via the regularization ladder.
    Mes(SolveArgs),
    /// Region map of a singleton game as CSV.
    Regions(RegionsArgs),
    /// Break points of the water-filling curve of a class's resources.
    Breakpoints(BreakpointsArgs),
    /// Check that equilibrium loads never decrease along a demand sweep.
    VerifyMes(VerifyArgs),
    /// Check that a resource family moves in one direction across a sweep.
    VerifyComonotone(ComonotoneArgs),
    /// Product or union of two games.
    Combine(CombineArgs),
    /// Embed a game into a routing game.
    Embed(EmbedArgs),
    /// Validate a routing game and check its structural conditions.
    CheckCrg(CrgArgs),
    /// Compare finite differences of the potential with equilibrium costs.
    GradientCheck(GradientArgs),
}

#[derive(Args)]
struct Input {
    /// Game definition (JSON). Bundled fixture names such as `fisk.json` resolve
    /// when no such file exists.
    #[arg(long, conflicts_with = "crg")]
    game: Option<PathBuf>,
    /// Constrained routing game (JSON), used through its strategy form.
    #[arg(long)]
    crg: Option<PathBuf>,
}

#[derive(Args)]
struct Tuning {
    /// Relative duality-gap tolerance.
    #[arg(long)]
    gap_tol: Option<f64>,
    /// Iteration budget per solve.
    #[arg(long)]
    max_iter: Option<usize>,
}

#[derive(Args)]
struct Output {
    /// Write the main artifact here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    input: Input,
    /// Demand per commodity, comma separated.
    #[arg(long)]
    demand: String,
    /// Wardrop residual tolerance for the post-solve check.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[command(flatten)]
    tuning: Tuning,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct Sweep {
    /// Box of commodity ranges `h:lo:hi,...`; other commodities sit at `--demand`.
    #[arg(long = "box", conflicts_with = "chain")]
    bounds: Option<String>,
    /// Samples per varying axis of `--box`.
    #[arg(long, default_value_t = 21)]
    grid: usize,
    /// One-axis chain `h:lo:hi:steps`.
    #[arg(long)]
    chain: Option<String>,
    /// Base demand for commodities not swept (default 0).
    #[arg(long)]
    demand: Option<String>,
    /// Jitter interior grid values with this seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct RegionsArgs {
    #[command(flatten)]
    input: Input,
    #[command(flatten)]
    sweep: Sweep,
    /// Write the label legend (JSON) here; printed to stdout when `--out` is set.
    #[arg(long)]
    legend: Option<PathBuf>,
    #[command(flatten)]
    tuning: Tuning,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct BreakpointsArgs {
    #[command(flatten)]
    input: Input,
    /// Commodity ids forming the class, comma separated.
    #[arg(long)]
    class: String,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    input: Input,
    #[command(flatten)]
    sweep: Sweep,
    /// Allowed load decrease (default `1e-6·(1 + max load)`).
    #[arg(long)]
    tol: Option<f64>,
    #[command(flatten)]
    tuning: Tuning,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct ComonotoneArgs {
    #[command(flatten)]
    input: Input,
    #[command(flatten)]
    sweep: Sweep,
    /// Resource ids of the family (default all).
    #[arg(long)]
    resources: Option<String>,
    /// Allowed negative product (default `1e-6·(1 + max load)²`).
    #[arg(long)]
    tol: Option<f64>,
    #[command(flatten)]
    tuning: Tuning,
    #[command(flatten)]
    output: Output,
}

#[derive(Clone, Copy, ValueEnum)]
enum CombineOp {
    Product,
    Union,
}

#[derive(Args)]
struct CombineArgs {
    op: CombineOp,
    /// The two factor games, in order.
    #[arg(long, num_args = 1, required = true)]
    game: Vec<PathBuf>,
    #[command(flatten)]
    output: Output,
}

#[derive(Clone, Copy, ValueEnum)]
enum EmbedKind {
    /// Singleton or product game into a routing game on a series-parallel network.
    Sp,
    /// Multi-OD routing game into a common-OD one.
    CommonOd,
}

#[derive(Args)]
struct EmbedArgs {
    kind: EmbedKind,
    #[command(flatten)]
    input: Input,
    /// Write the strategy correspondence (JSON) here.
    #[arg(long)]
    witness: Option<PathBuf>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct CrgArgs {
    #[arg(long)]
    crg: PathBuf,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct GradientArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long)]
    demand: String,
    /// Finite-difference step.
    #[arg(long, default_value_t = 1e-4)]
    step: f64,
    /// Largest acceptable residual.
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
    #[command(flatten)]
    output: Output,
}

/// Whether a verifier-style command passed.
enum Status {
    Ok,
    Violated,
}

fn main() -> ExitCode {
    // clap exits with 2 on usage errors, which is reserved for violations here.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    match run(cli.command) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Violated) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn configure_threads() -> AnyResult<()> {
    let Ok(v) = std::env::var("WARDROP_KIT_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| format!("WARDROP_KIT_THREADS must be a positive integer, got {v:?}"))?;
    if n == 0 {
        return Err("WARDROP_KIT_THREADS must be positive".into());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn run(command: Command) -> AnyResult<Status> {
    match command {
        Command::Solve(a) => solve(a, false),
        Command::Mes(a) => solve(a, true),
        Command::Regions(a) => regions(a),
        Command::Breakpoints(a) => breakpoints(a),
        Command::VerifyMes(a) => verify_mes_cmd(a),
        Command::VerifyComonotone(a) => comonotone(a),
        Command::Combine(a) => combine(a),
        Command::Embed(a) => embed(a),
        Command::CheckCrg(a) => check_crg(a),
        Command::GradientCheck(a) => gradient(a),
    }
}

fn solve(a: SolveArgs, mes: bool) -> AnyResult<Status> {
    let game = a.input.game()?;
    let demand = parse_demand(&a.demand, &game)?;
    let config = a.tuning.config()?;
    let report = if mes {
        solve_mes(&game, &demand, &config)
    } else {
        solve_beckmann(&game, &demand, &config)
    }
    .map_err(|e| e.to_string())?;
    let check = verify_wardrop(&game, &demand, &report, a.tol).map_err(|e| e.to_string())?;
    let mut doc = report.to_json_value(&game);
    let obj = doc.as_object_mut().expect("report is an object");
    obj.insert("selection".into(), serde_json::to_value(&report.selection).expect("selection serializes"));
    obj.insert(
        "wardrop".into(),
        json!({ "pass": check.pass, "max_residual": check.max_residual }),
    );
    a.output.emit_json(&doc)?;
    Ok(if check.pass { Status::Ok } else { Status::Violated })
}

fn regions(a: RegionsArgs) -> AnyResult<Status> {
    let game = a.input.game()?;
    let plan = a.sweep.plan(&game)?;
    let map = region_sweep(&game, &plan, &a.tuning.config()?).map_err(|e| e.to_string())?;
    let csv = map.to_csv().map_err(|e| e.to_string())?;
    let legend = to_json(&map.legend_json())?;
    a.output.emit(&csv)?;
    match (&a.legend, &a.output.out) {
        (Some(p), _) => write_file(p, &legend)?,
        (None, Some(_)) => print!("{legend}"),
        (None, None) => {}
    }
    if !map.failures.is_empty() {
        return Err(format!("{} demand points failed to solve (see legend)", map.failures.len()));
    }
    Ok(Status::Ok)
}

fn breakpoints(a: BreakpointsArgs) -> AnyResult<Status> {
    let game = a.input.game()?;
    if !game.is_singleton() {
        return Err("breakpoints needs a singleton game".into());
    }
    let mut resources: Vec<usize> = Vec::new();
    for id in split_list(&a.class) {
        let h = game
            .commodity_index(id)
            .ok_or_else(|| format!("unknown commodity {id:?}"))?;
        resources.extend(game.feasible_resources(h));
    }
    resources.sort_unstable();
    resources.dedup();
    let class: Vec<_> = resources.iter().map(|&r| game.resources()[r].clone()).collect();
    let bp = break_points(&class).map_err(|e| e.to_string())?;
    a.output.emit_json(&bp)?;
    Ok(Status::Ok)
}

fn verify_mes_cmd(a: VerifyArgs) -> AnyResult<Status> {
    let game = a.input.game()?;
    let plan = a.sweep.plan(&game)?;
    let verdict = verify_mes(&game, &plan, &a.tuning.config()?, a.tol).map_err(|e| e.to_string())?;
    let mut doc = serde_json::to_value(&verdict).expect("verdict serializes");
    doc["tolerance"] = match a.tol {
        Some(t) => json!(t),
        None => json!("1e-6*(1 + max load) per pair"),
    };
    a.output.emit_json(&doc)?;
    verdict_status(verdict.pass, verdict.inconclusive.len())
}

fn comonotone(a: ComonotoneArgs) -> AnyResult<Status> {
    let game = a.input.game()?;
    let points = a.sweep.plan(&game)?.points().map_err(|e| e.to_string())?;
    let subset: Vec<usize> = match &a.resources {
        None => (0..game.num_resources()).collect(),
        Some(list) => split_list(list)
            .map(|id| game.resource_index(id).ok_or_else(|| format!("unknown resource {id:?}")))
            .collect::<AnyResult<_>>()?,
    };
    let config = a.tuning.config()?;
    let mut samples: Vec<(DemandVector, LoadProfile)> = Vec::with_capacity(points.len());
    for p in points {
        let mu = DemandVector::new(p).map_err(|e| e.to_string())?;
        let r = solve_mes(&game, &mu, &config).map_err(|e| format!("at demand {:?}: {e}", mu.as_slice()))?;
        samples.push((mu, r.loads));
    }
    let max = samples
        .iter()
        .flat_map(|s| s.1.as_slice().iter())
        .fold(0.0f64, |m, &v| m.max(v.abs()));
    let slack = a.tol.unwrap_or(1e-6 * (1.0 + max) * (1.0 + max));
    let verdict = verify_comonotone(&samples, &subset, slack).map_err(|e| e.to_string())?;
    let mut doc = serde_json::to_value(&verdict).expect("verdict serializes");
    if verdict.pass {
        let tables = comonotone_representation(&samples, &subset, slack).map_err(|e| e.to_string())?;
        doc["representation"] = serde_json::to_value(tables).expect("tables serialize");
    }
    doc["tolerance"] = json!(slack);
    doc["resources"] = json!(subset.iter().map(|&r| &game.resources()[r].id).collect::<Vec<_>>());
    a.output.emit_json(&doc)?;
    Ok(if verdict.pass { Status::Ok } else { Status::Violated })
}

fn combine(a: CombineArgs) -> AnyResult<Status> {
    let [g1, g2] = a.game.as_slice() else {
        return Err(format!("combine takes exactly two --game files, got {}", a.game.len()));
    };
    let (g1, g2) = (load_game(g1)?, load_game(g2)?);
    let g = match a.op {
        CombineOp::Product => product(&g1, &g2),
        CombineOp::Union => union(&g1, &g2),
    }
    .map_err(|e| e.to_string())?;
    a.output.emit_json(&g.to_def())?;
    Ok(Status::Ok)
}

fn embed(a: EmbedArgs) -> AnyResult<Status> {
    match a.kind {
        EmbedKind::Sp => {
            let game = a.input.game()?;
            let (crg, witness) = embed_sp(&game).map_err(|e| e.to_string())?;
            if let Some(p) = &a.witness {
                write_file(p, &to_json(&witness)?)?;
            }
            a.output.emit_json(&crg)?;
        }
        EmbedKind::CommonOd => {
            let path = a.input.crg.as_ref().ok_or("embed common-od needs --crg")?;
            let crg = embed_common_od(&load_crg(path)?).map_err(|e| e.to_string())?;
            a.output.emit_json(&crg)?;
        }
    }
    Ok(Status::Ok)
}

fn check_crg(a: CrgArgs) -> AnyResult<Status> {
    let crg = load_crg(&a.crg)?;
    let mut doc = json!({ "valid": true, "common_od": crg.is_common_od() });
    let mut status = Status::Ok;
    if crg.is_common_od() {
        let c = check_structural_conditions(&crg).map_err(|e| e.to_string())?;
        if !c.all_hold() {
            status = Status::Violated;
        }
        doc["all_hold"] = json!(c.all_hold());
        doc["conditions"] = serde_json::to_value(c).expect("conditions serialize");
    }
    a.output.emit_json(&doc)?;
    Ok(status)
}

fn gradient(a: GradientArgs) -> AnyResult<Status> {
    let game = a.input.game()?;
    let demand = parse_demand(&a.demand, &game)?;
    let res = beckmann_gradient_check(&game, &demand, a.step).map_err(|e| e.to_string())?;
    let max = res.iter().fold(0.0f64, |m, &v| m.max(v));
    let pass = max <= a.tol;
    let residuals: serde_json::Map<String, Value> = game
        .commodities()
        .iter()
        .zip(&res)
        .map(|(c, &r)| (c.id.clone(), json!(r)))
        .collect();
    a.output
        .emit_json(&json!({ "pass": pass, "max_residual": max, "residuals": residuals }))?;
    Ok(if pass { Status::Ok } else { Status::Violated })
}

fn verdict_status(pass: bool, inconclusive: usize) -> AnyResult<Status> {
    if !pass {
        Ok(Status::Violated)
    } else if inconclusive > 0 {
        Err(format!("{inconclusive} sweep points did not converge"))
    } else {
        Ok(Status::Ok)
    }
}

impl Input {
    fn game(&self) -> AnyResult<CongestionGame> {
        match (&self.game, &self.crg) {
            (Some(p), _) => load_game(p),
            (None, Some(p)) => load_crg(p)?.to_game().map_err(|e| format!("{}: {e}", p.display())),
            (None, None) => Err("one of --game or --crg is required".into()),
        }
    }
}

impl Tuning {
    fn config(&self) -> AnyResult<SolverConfig> {
        let mut c = SolverConfig::default();
        if let Some(t) = self.gap_tol {
            c.gap_tol = t;
        }
        if let Some(n) = self.max_iter {
            c.max_iterations = n;
        }
        c.validate().map_err(|e| e.to_string())?;
        Ok(c)
    }
}

impl Output {
    fn emit(&self, text: &str) -> AnyResult<()> {
        match &self.out {
            Some(p) => write_file(p, text),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }

    fn emit_json<T: serde::Serialize + ?Sized>(&self, value: &T) -> AnyResult<()> {
        self.emit(&to_json(value)?)
    }
}

impl Sweep {
    fn plan(&self, game: &CongestionGame) -> AnyResult<SweepPlan> {
        let n = game.num_commodities();
        let base = match &self.demand {
            Some(d) => parse_demand(d, game)?.as_slice().to_vec(),
            None => vec![0.0; n],
        };
        let commodity = |id: &str| {
            game.commodity_index(id)
                .ok_or_else(|| format!("unknown commodity {id:?}"))
        };
        let plan = if let Some(spec) = &self.chain {
            let parts: Vec<&str> = spec.split(':').collect();
            let [h, lo, hi, steps] = parts.as_slice() else {
                return Err(format!("--chain expects h:lo:hi:steps, got {spec:?}"));
            };
            SweepPlan::chain(&base, commodity(h)?, num(lo)?, num(hi)?, count(steps)?)
        } else if let Some(spec) = &self.bounds {
            let mut bounds: Vec<(f64, f64)> = base.iter().map(|&v| (v, v)).collect();
            for item in split_list(spec) {
                let parts: Vec<&str> = item.split(':').collect();
                let [h, lo, hi] = parts.as_slice() else {
                    return Err(format!("--box entries are h:lo:hi, got {item:?}"));
                };
                bounds[commodity(h)?] = (num(lo)?, num(hi)?);
            }
            SweepPlan::uniform(bounds, self.grid)
        } else {
            return Err("a sweep needs --box or --chain".into());
        };
        let plan = plan.map_err(|e| e.to_string())?;
        Ok(match self.seed {
            Some(s) => plan.with_jitter(s),
            None => plan,
        })
    }
}

fn num(s: &str) -> AnyResult<f64> {
    s.trim().parse().map_err(|_| format!("not a number: {s:?}"))
}

fn count(s: &str) -> AnyResult<usize> {
    s.trim().parse().map_err(|_| format!("not a count: {s:?}"))
}

fn split_list(s: &str) -> impl Iterator<Item = &str> {
    s.split(',').map(str::trim).filter(|t| !t.is_empty())
}

fn parse_demand(s: &str, game: &CongestionGame) -> AnyResult<DemandVector> {
    let values = split_list(s).map(num).collect::<AnyResult<Vec<f64>>>()?;
    let d = DemandVector::new(values).map_err(|e| e.to_string())?;
    d.check_for(game).map_err(|e| e.to_string())?;
    Ok(d)
}

/// Reads a definition file, falling back to a bundled fixture of the same name.
fn read_source(path: &Path) -> AnyResult<String> {
    match fs::read_to_string(path) {
        Ok(s) => Ok(s),
        Err(e) => {
            let bundled = path
                .file_name()
                .and_then(|n| n.to_str())
                .and_then(|n| n.strip_suffix(".json"))
                .filter(|_| e.kind() == std::io::ErrorKind::NotFound)
                .and_then(fixtures::by_name);
            bundled
                .map(str::to_owned)
                .ok_or_else(|| format!("{}: {e}", path.display()))
        }
    }
}

fn load_game(path: &Path) -> AnyResult<CongestionGame> {
    CongestionGame::from_json(&read_source(path)?).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_crg(path: &Path) -> AnyResult<ConstrainedRoutingGame> {
    ConstrainedRoutingGame::from_json(&read_source(path)?).map_err(|e| format!("{}: {e}", path.display()))
}

fn to_json<T: serde::Serialize + ?Sized>(value: &T) -> AnyResult<String> {
    let mut s = jsonfmt::to_string_pretty(value).map_err(|e| e.to_string())?;
    s.push('\n');
    Ok(s)
}

fn write_file(path: &Path, text: &str) -> AnyResult<()> {
    fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))
}
