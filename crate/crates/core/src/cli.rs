//! Command-line front end.
//!
//! Subcommands: `solve` (exact or heuristic), `check`, `bound`, `gen`,
//! `emit`, `import`, and `bench`. Machine-readable results go to stdout
//! (or `--out`), diagnostics to stderr. Exit codes: 0 success, 1 usage
//! or unreadable input, 2 infeasible input or violations, 3 an internal
//! limit stopped a proof (budget or size cap).

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::emit::{emit_milp, import_milp_solution, EmitterConfig, ImportError, SecMode};
use crate::exact::{root_bound, solve_exact, Budget, SolveStatus};
use crate::heuristic::{construct, ruin_recreate, SearchConfig};
use crate::instance::{generate, from_benchmark_text, GenConfig, Instance};
use crate::solution::Solution;
use crate::time::Minutes;

pub const CSV_HEADER: &str = "instance,s,m,solver,status,lb,ub,wall_ms,seed";

#[derive(Parser)]
#[command(
    name = "pdsvrp",
    about = "Solvers for truck-and-coupled-drone delivery scheduling (PDSTSP-c / PDSVRP-c)",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve an instance and report bounds and the best solution.
    Solve(SolveArgs),
    /// Validate a solution file against an instance.
    Check(CheckArgs),
    /// Print the root lower bound and its components.
    Bound(BoundArgs),
    /// Generate a random instance.
    Gen(GenArgs),
    /// Write the MILP for an instance in LP format.
    Emit(EmitArgs),
    /// Turn an external solver's variable assignment into a solution.
    Import(ImportArgs),
    /// Run a solver over a directory of instances and emit a CSV table.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SolverKind {
    Exact,
    Heuristic,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct FleetArgs {
    /// Override the instance's truck count.
    #[arg(long)]
    s: Option<usize>,
    /// Override the instance's drone count.
    #[arg(long)]
    m: Option<usize>,
}

#[derive(Args)]
struct SolveArgs {
    instance: PathBuf,
    #[arg(long, value_enum, default_value = "exact")]
    solver: SolverKind,
    #[command(flatten)]
    fleet: FleetArgs,
    /// Seed for the heuristic (and the exact solver's warm start).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Heuristic iterations.
    #[arg(long, default_value_t = 2000)]
    iters: u64,
    /// Heuristic ruin fraction in (0, 1].
    #[arg(long, default_value_t = 0.3)]
    ruin: f64,
    #[arg(long = "time-limit-ms")]
    time_limit_ms: Option<u64>,
    /// Node budget for the exact search.
    #[arg(long = "max-nodes")]
    max_nodes: Option<u64>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    instance: PathBuf,
    solution: PathBuf,
    #[command(flatten)]
    fleet: FleetArgs,
}

#[derive(Args)]
struct BoundArgs {
    instance: PathBuf,
    #[command(flatten)]
    fleet: FleetArgs,
    /// Commit a mission before bounding: customer=group, repeatable.
    #[arg(long = "fly", value_name = "CUSTOMER=GROUP")]
    fly: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    /// Customer count.
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 3)]
    m: usize,
    #[arg(long, default_value_t = 1)]
    s: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    name: Option<String>,
    /// Fraction of customers that only a truck can serve.
    #[arg(long = "truck-only-frac")]
    truck_only_frac: Option<f64>,
    /// Square side length for customer coordinates, km.
    #[arg(long = "area-km")]
    area_km: Option<f64>,
    /// Largest minimum group size to draw.
    #[arg(long = "q-hi")]
    q_hi: Option<usize>,
    /// Cap on the maximum group size offered.
    #[arg(long = "p-cap")]
    p_cap: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EmitArgs {
    instance: PathBuf,
    #[command(flatten)]
    fleet: FleetArgs,
    /// Explicit subtour rows: none, pairs (sizes 2-3), or all:K (K <= 5).
    #[arg(long, default_value = "none", value_parser = parse_sec)]
    sec: SecMode,
    /// Leave out the fleet-work valid inequality row.
    #[arg(long = "no-va")]
    no_va: bool,
    /// Big-M for the timing rows (minutes); defaults to the safe horizon.
    #[arg(long = "big-m")]
    big_m: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ImportArgs {
    instance: PathBuf,
    /// File of "name value" lines from an external solver.
    assignment: PathBuf,
    #[command(flatten)]
    fleet: FleetArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Directory of instance files (.json, or .txt benchmark listings).
    dir: PathBuf,
    #[arg(long, value_enum, default_value = "exact")]
    solver: SolverKind,
    #[command(flatten)]
    fleet: FleetArgs,
    /// Seeds to run per instance; repeat the flag for multi-seed rows.
    #[arg(long = "seed")]
    seeds: Vec<u64>,
    #[arg(long, default_value_t = 2000)]
    iters: u64,
    #[arg(long, default_value_t = 0.3)]
    ruin: f64,
    #[arg(long = "time-limit-ms")]
    time_limit_ms: Option<u64>,
    #[arg(long = "max-nodes")]
    max_nodes: Option<u64>,
    /// Leave wall_ms cells empty so reruns are byte-identical.
    #[arg(long = "redact-timing")]
    redact_timing: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_sec(text: &str) -> Result<SecMode, String> {
    match text {
        "none" => Ok(SecMode::None),
        "pairs" => Ok(SecMode::PairsAndTriples),
        _ => match text.strip_prefix("all:") {
            Some(num) => num
                .parse::<usize>()
                .map(SecMode::AllUpTo)
                .map_err(|_| format!("bad subset size {num:?}")),
            None => Err(format!("expected none, pairs, or all:K, got {text:?}")),
        },
    }
}

/// One result row; the CSV and JSON faces of a solver run. Missing
/// values (no bound proven, redacted timing) become empty CSV cells.
#[derive(Clone, Debug, Serialize)]
pub struct RunRecord {
    pub instance: String,
    pub lb: Option<Minutes>,
    pub m: usize,
    pub s: usize,
    pub seed: u64,
    pub solver: String,
    pub status: String,
    pub ub: Option<Minutes>,
    pub wall_ms: Option<u64>,
}

impl RunRecord {
    pub fn csv_row(&self) -> String {
        let cell = |v: &Option<Minutes>| v.map(|x| x.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{}",
            csv_escape(&self.instance),
            self.s,
            self.m,
            self.solver,
            self.status,
            cell(&self.lb),
            cell(&self.ub),
            self.wall_ms.map(|x| x.to_string()).unwrap_or_default(),
            self.seed,
        )
    }
}

fn csv_escape(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// Full single-run report for `solve --format json`.
#[derive(Serialize)]
struct SolveReport<'a> {
    gap_pct: Option<f64>,
    instance: &'a str,
    lb: Option<Minutes>,
    m: usize,
    nodes: Option<u64>,
    s: usize,
    seed: u64,
    solution: &'a Solution,
    solver: &'a str,
    status: &'a str,
    time_best_ms: Option<u64>,
    time_ms: u64,
    ub: Minutes,
}

struct Failure {
    code: i32,
    msg: String,
}

impl Failure {
    fn usage(msg: impl Into<String>) -> Failure {
        Failure { code: 1, msg: msg.into() }
    }
    fn infeasible(msg: impl Into<String>) -> Failure {
        Failure { code: 2, msg: msg.into() }
    }
}

type CmdResult = Result<i32, Failure>;

fn read_to_string(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))
}

fn load_instance(path: &Path, fleet: &FleetArgs) -> Result<Instance, Failure> {
    let text = read_to_string(path)?;
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "instance".to_string());
    let inst = if path.extension().is_some_and(|e| e == "json") {
        Instance::from_json(&text)
            .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?
    } else {
        from_benchmark_text(&stem, &text)
            .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?
    };
    apply_fleet(inst, fleet)
}

fn apply_fleet(inst: Instance, fleet: &FleetArgs) -> Result<Instance, Failure> {
    match (fleet.s, fleet.m) {
        (None, None) => Ok(inst),
        (s, m) => inst
            .with_fleet(s.unwrap_or_else(|| inst.s()), m.unwrap_or_else(|| inst.m()))
            .map_err(|e| Failure::usage(format!("fleet override: {e}"))),
    }
}

/// Send the payload to `--out` when given, stdout otherwise.
fn deliver(out: &Option<PathBuf>, payload: &str) -> Result<(), Failure> {
    match out {
        Some(path) => {
            std::fs::write(path, payload)
                .map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))?;
            eprintln!("wrote {}", path.display());
            Ok(())
        }
        None => {
            print!("{payload}");
            Ok(())
        }
    }
}

fn gap_pct(lb: Minutes, ub: Minutes) -> f64 {
    if ub.is_zero() {
        0.0
    } else {
        100.0 * (ub - lb).as_f64() / ub.as_f64()
    }
}

struct RunOutput {
    record: RunRecord,
    nodes: Option<u64>,
    time_best_ms: Option<u64>,
    solution: Solution,
    exit: i32,
}

fn run_solver(
    inst: &Instance,
    solver: SolverKind,
    seed: u64,
    iters: u64,
    ruin: f64,
    time_limit_ms: Option<u64>,
    max_nodes: Option<u64>,
) -> Result<RunOutput, Failure> {
    let started = Instant::now();
    match solver {
        SolverKind::Exact => {
            let budget = Budget { max_nodes, max_millis: time_limit_ms };
            let out = solve_exact(inst, budget);
            let status = match out.status {
                SolveStatus::Optimal => "optimal",
                SolveStatus::Feasible => "feasible",
                SolveStatus::Infeasible => "infeasible",
                SolveStatus::BudgetExhausted => "budget_exhausted",
            };
            let exit = match out.status {
                SolveStatus::Optimal => 0,
                SolveStatus::Infeasible => 2,
                _ => 3,
            };
            Ok(RunOutput {
                record: RunRecord {
                    instance: inst.name().to_string(),
                    lb: Some(out.lb),
                    m: inst.m(),
                    s: inst.s(),
                    seed,
                    solver: "exact".to_string(),
                    status: status.to_string(),
                    ub: Some(out.ub),
                    wall_ms: Some(started.elapsed().as_millis() as u64),
                },
                nodes: Some(out.stats.nodes),
                time_best_ms: Some(out.stats.time_best_ms),
                solution: out.incumbent,
                exit,
            })
        }
        SolverKind::Heuristic => {
            let cfg = SearchConfig {
                seed,
                iterations: iters,
                ruin_fraction: ruin,
                time_limit_ms,
            };
            let init = construct(inst);
            let best = ruin_recreate(inst, &init, &cfg)
                .map_err(|e| Failure::usage(format!("heuristic: {e}")))?;
            let ub = best.evaluate(inst).expect("heuristic output is clean").makespan;
            Ok(RunOutput {
                record: RunRecord {
                    instance: inst.name().to_string(),
                    lb: None,
                    m: inst.m(),
                    s: inst.s(),
                    seed,
                    solver: "heuristic".to_string(),
                    status: "feasible".to_string(),
                    ub: Some(ub),
                    wall_ms: Some(started.elapsed().as_millis() as u64),
                },
                nodes: None,
                time_best_ms: None,
                solution: best,
                exit: 0,
            })
        }
    }
}

fn cmd_solve(args: &SolveArgs) -> CmdResult {
    let inst = load_instance(&args.instance, &args.fleet)?;
    let run = run_solver(
        &inst,
        args.solver,
        args.seed,
        args.iters,
        args.ruin,
        args.time_limit_ms,
        args.max_nodes,
    )?;
    let payload = match args.format {
        Format::Json => {
            let report = SolveReport {
                gap_pct: run.record.lb.map(|lb| gap_pct(lb, run.record.ub.unwrap())),
                instance: &run.record.instance,
                lb: run.record.lb,
                m: run.record.m,
                nodes: run.nodes,
                s: run.record.s,
                seed: run.record.seed,
                solution: &run.solution,
                solver: &run.record.solver,
                status: &run.record.status,
                time_best_ms: run.time_best_ms,
                time_ms: run.record.wall_ms.unwrap_or(0),
                ub: run.record.ub.unwrap(),
            };
            let mut text = serde_json::to_string_pretty(&report).expect("serializable");
            text.push('\n');
            text
        }
        Format::Csv => format!("{CSV_HEADER}\n{}\n", run.record.csv_row()),
    };
    deliver(&args.out, &payload)?;
    Ok(run.exit)
}

fn cmd_check(args: &CheckArgs) -> CmdResult {
    let inst = load_instance(&args.instance, &args.fleet)?;
    let text = read_to_string(&args.solution)?;
    let sol = Solution::from_json(&text)
        .map_err(|e| Failure::usage(format!("{}: {e}", args.solution.display())))?;
    let violations = sol.check(&inst);
    if violations.is_empty() {
        let makespan = sol.evaluate(&inst).expect("checker-clean").makespan;
        println!("feasible, makespan={makespan}");
        Ok(0)
    } else {
        for v in &violations {
            eprintln!("violation: {v}");
        }
        println!("infeasible, violations={}", violations.len());
        Ok(2)
    }
}

fn cmd_bound(args: &BoundArgs) -> CmdResult {
    let inst = load_instance(&args.instance, &args.fleet)?;
    let mut forced = BTreeMap::new();
    for pair in &args.fly {
        let (c, k) = pair
            .split_once('=')
            .and_then(|(c, k)| Some((c.parse().ok()?, k.parse().ok()?)))
            .ok_or_else(|| Failure::usage(format!("bad --fly {pair:?}, want CUSTOMER=GROUP")))?;
        forced.insert(c, k);
    }
    // A commitment naming a customer or group the instance does not
    // offer is a mistaken invocation, not an infeasibility.
    let report = root_bound(&inst, &forced)
        .map_err(|e| Failure::usage(format!("bound: {e}")))?;
    // The work-mode arithmetic, spelled out for auditing.
    let total_work: Minutes = forced
        .iter()
        .map(|(&j, &k)| inst.drone_time(j, k).expect("validated") * k as i64)
        .fold(Minutes::ZERO, |a, b| a + b);
    #[derive(Serialize)]
    struct BoundOut<'a> {
        bound: Minutes,
        dominant: &'a crate::exact::BoundSource,
        longest_mission: Minutes,
        m: usize,
        total_drone_work: Minutes,
        truck: Minutes,
        va: Minutes,
    }
    let out = BoundOut {
        bound: report.bound,
        dominant: &report.dominant,
        longest_mission: report.longest_mission,
        m: inst.m(),
        total_drone_work: total_work,
        truck: report.truck,
        va: report.va,
    };
    let mut text = serde_json::to_string_pretty(&out).expect("serializable");
    text.push('\n');
    deliver(&args.out, &text)?;
    Ok(0)
}

fn cmd_gen(args: &GenArgs) -> CmdResult {
    let mut cfg = GenConfig::new(args.n, args.m, args.s);
    cfg.name = args.name.clone();
    if let Some(f) = args.truck_only_frac {
        cfg.truck_only_frac = f;
    }
    if let Some(a) = args.area_km {
        cfg.area_km = a;
    }
    if let Some(q) = args.q_hi {
        cfg.q_hi = q;
    }
    if let Some(p) = args.p_cap {
        cfg.p_cap = p;
    }
    let inst = generate(&cfg, args.seed)
        .map_err(|e| Failure::usage(format!("gen: {e}")))?;
    deliver(&args.out, &inst.to_json())?;
    Ok(0)
}

fn cmd_emit(args: &EmitArgs) -> CmdResult {
    let inst = load_instance(&args.instance, &args.fleet)?;
    let big_m = match args.big_m {
        None => None,
        Some(v) => Some(
            Minutes::from_f64(v)
                .ok_or_else(|| Failure::usage(format!("bad --big-m {v}")))?,
        ),
    };
    let cfg = EmitterConfig {
        include_va: !args.no_va,
        sec_mode: args.sec,
        big_m,
        s: args.fleet.s,
    };
    let text = emit_milp(&inst, &cfg).map_err(|e| Failure::usage(format!("emit: {e}")))?;
    deliver(&args.out, &text)?;
    Ok(0)
}

fn cmd_import(args: &ImportArgs) -> CmdResult {
    let inst = load_instance(&args.instance, &args.fleet)?;
    let text = read_to_string(&args.assignment)?;
    let sol = import_milp_solution(&text, &inst).map_err(|e| match e {
        ImportError::Parse { .. } | ImportError::UnknownVariable(_) => {
            Failure::usage(format!("import: {e}"))
        }
        other => Failure::infeasible(format!("import: {other}")),
    })?;
    let makespan = sol.evaluate(&inst).expect("import output is clean").makespan;
    eprintln!("imported solution, makespan={makespan}");
    deliver(&args.out, &sol.to_json())?;
    Ok(0)
}

fn cmd_bench(args: &BenchArgs) -> CmdResult {
    let entries = std::fs::read_dir(&args.dir)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", args.dir.display())))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| {
            p.extension()
                .is_some_and(|ext| ext == "json" || ext == "txt" || ext == "dat")
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Failure::usage(format!(
            "no instance files (.json/.txt/.dat) in {}",
            args.dir.display()
        )));
    }
    let seeds = if args.seeds.is_empty() { vec![0] } else { args.seeds.clone() };

    let mut records = Vec::new();
    for path in &paths {
        let inst = load_instance(path, &args.fleet)?;
        for &seed in &seeds {
            let run = run_solver(
                &inst,
                args.solver,
                seed,
                args.iters,
                args.ruin,
                args.time_limit_ms,
                args.max_nodes,
            )?;
            let mut record = run.record;
            if args.redact_timing {
                record.wall_ms = None;
            }
            eprintln!(
                "{}: {} seed {} -> {}",
                record.instance, record.solver, record.seed, record.status
            );
            records.push(record);
        }
    }
    records.sort_by(|a, b| (&a.instance, a.seed).cmp(&(&b.instance, b.seed)));

    let mut csv = String::new();
    let _ = writeln!(csv, "{CSV_HEADER}");
    for r in &records {
        let _ = writeln!(csv, "{}", r.csv_row());
    }
    deliver(&args.out, &csv)?;
    Ok(0)
}

/// Parse `argv` and run one subcommand; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are successful exits, not usage errors.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.cmd {
        Cmd::Solve(a) => cmd_solve(a),
        Cmd::Check(a) => cmd_check(a),
        Cmd::Bound(a) => cmd_bound(a),
        Cmd::Gen(a) => cmd_gen(a),
        Cmd::Emit(a) => cmd_emit(a),
        Cmd::Import(a) => cmd_import(a),
        Cmd::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            f.code
        }
    }
}
