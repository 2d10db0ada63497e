//! `q4dr`: generate instances, solve them, verify and plot solutions, and run
//! the benchmark matrix.
//!
//! Exit codes: 0 ok, 1 violations found, 2 bad input, 3 solver failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use q4dr_core::bench::{bench_csv, bench_table, run_bench, BenchConfig};
use q4dr_core::geojson::solution_geojson;
use q4dr_core::instance::{
    generate_instance, load_instance, save_instance, GeneratorConfig, Instance, InstanceError, UseCase,
};
use q4dr_core::pipeline::{run_pipeline, verify_solution, PipelineConfig, PipelineError, RoutingPolicy, Solution};
use q4dr_core::qaoa::{EvalMode, QaoaConfig};
use q4dr_core::solvers::{format_trace, solver_registry, SolverConfig, SolverKind};

#[derive(Parser)]
#[command(name = "q4dr", version, about = "Two-phase drone routing: QAOA clustering, then per-cluster routing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic instance named UC{X}_{Y}.
    Generate(GenerateArgs),
    /// Cluster and route an instance, writing solution JSON.
    Solve(SolveArgs),
    /// Check a solution against its instance.
    Verify(VerifyArgs),
    /// Run the use case x size benchmark matrix.
    Bench(BenchArgs),
    /// Write a GeoJSON map of a solution.
    Plot(PlotArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    use_case: UseCase,
    #[arg(long)]
    n: usize,
    #[arg(long, env = "Q4DR_SEED", default_value_t = 0)]
    seed: u64,
    /// Defaults to UC{X}_{Y}.json in the working directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0.2)]
    asymmetry: f64,
    #[arg(long, default_value_t = 0.05)]
    forbidden_fraction: f64,
}

#[derive(Args, Clone)]
struct SolveFlags {
    #[arg(long, default_value_t = 3)]
    depth: usize,
    #[arg(long, default_value_t = 50)]
    max_iter: usize,
    /// Master seed for clustering and routing.
    #[arg(long, env = "Q4DR_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "cobyla")]
    optimizer: String,
    /// Estimate energies from this many shots instead of exact amplitudes.
    #[arg(long)]
    shots: Option<usize>,
    #[arg(long, default_value_t = 4)]
    threads: usize,
    #[arg(long, default_value_t = 10_000)]
    sweeps: usize,
    #[arg(long, default_value_t = 8)]
    restarts: usize,
    #[arg(long)]
    t_hi: Option<f64>,
    #[arg(long)]
    t_lo: Option<f64>,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    /// `auto` routes clusters of up to 13 nodes exactly, larger ones with
    /// the portfolio; any solver name forces that solver.
    #[arg(long, default_value = "auto")]
    solver: String,
    #[command(flatten)]
    flags: SolveFlags,
    /// Solution JSON path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a GeoJSON map here.
    #[arg(long)]
    plot_out: Option<PathBuf>,
    /// Write the solver restart trace here.
    #[arg(long)]
    trace_out: Option<PathBuf>,
    /// Include phase wall times in the solution.
    #[arg(long)]
    timings: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    solution: PathBuf,
    /// Defaults to the instance path recorded in the solution.
    #[arg(long)]
    instance: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long)]
    solution: PathBuf,
    #[arg(long)]
    instance: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Routing solver per cluster; `auto` skips the sampler for small clusters.
    #[arg(long, default_value = "portfolio")]
    solver: String,
    #[command(flatten)]
    flags: SolveFlags,
    #[arg(long, value_delimiter = ',', default_values_t = [12, 16, 22])]
    sizes: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values = ["uc1", "uc2", "uc3"])]
    use_cases: Vec<UseCase>,
    /// CSV report path.
    #[arg(long, default_value = "bench.csv")]
    out: PathBuf,
    /// Also write every instance and solution JSON into this directory.
    #[arg(long)]
    solutions_dir: Option<PathBuf>,
}

enum Failure {
    Violations(usize),
    Input(String),
    Solver(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Violations(_) => 1,
            Failure::Input(_) => 2,
            Failure::Solver(_) => 3,
        }
    }
}

impl From<InstanceError> for Failure {
    fn from(e: InstanceError) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Json(_) | PipelineError::Io { .. } => Failure::Input(e.to_string()),
            _ => Failure::Solver(e.to_string()),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn write_file(path: &Path, text: &str) -> CmdResult {
    fs::write(path, text).map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display())))
}

fn policy(name: &str) -> Result<RoutingPolicy, Failure> {
    if name == "auto" {
        return Ok(RoutingPolicy::Auto);
    }
    let reg = solver_registry();
    if reg.contains(name) {
        Ok(RoutingPolicy::Named(name.to_string()))
    } else {
        let known: Vec<&str> = reg.names().collect();
        Err(Failure::Input(format!(
            "unknown solver `{name}`; expected auto or one of {}",
            known.join(", ")
        )))
    }
}

fn pipeline_config(flags: &SolveFlags, solver: &str) -> Result<PipelineConfig, Failure> {
    let qaoa = QaoaConfig {
        depth: flags.depth,
        max_iter: flags.max_iter,
        seed: flags.seed,
        eval_mode: flags.shots.map_or(EvalMode::Exact, |shots| EvalMode::Sampled { shots }),
        optimizer: flags.optimizer.clone(),
    };
    qaoa.validate().map_err(|e| Failure::Input(e.to_string()))?;
    let solver_cfg = SolverConfig {
        kind: solver.parse().unwrap_or(SolverKind::Portfolio),
        threads: flags.threads,
        sweeps: flags.sweeps,
        restarts: flags.restarts,
        t_hi: flags.t_hi,
        t_lo: flags.t_lo,
        seed: flags.seed,
    };
    solver_cfg.validate().map_err(|e| Failure::Input(e.to_string()))?;
    Ok(PipelineConfig {
        qaoa,
        solver: solver_cfg,
        policy: policy(solver)?,
        ..PipelineConfig::default()
    })
}

fn cmd_generate(args: GenerateArgs) -> CmdResult {
    let gen = GeneratorConfig {
        asymmetry: args.asymmetry,
        forbidden_fraction: args.forbidden_fraction,
        ..GeneratorConfig::default()
    };
    let inst = generate_instance(args.use_case, args.n, args.seed, &gen)?;
    let out = args.out.unwrap_or_else(|| PathBuf::from(format!("{}.json", inst.name())));
    save_instance(&inst, &out)?;
    println!("wrote {} ({} locations) to {}", inst.name(), inst.location_count(), out.display());
    Ok(())
}

fn cmd_solve(args: SolveArgs) -> CmdResult {
    let inst = load_instance(&args.instance)?;
    let mut cfg = pipeline_config(&args.flags, &args.solver)?;
    cfg.record_timings = args.timings;
    cfg.instance_path = Some(args.instance.display().to_string());
    let run = run_pipeline(&inst, &cfg)?;
    let sol = &run.solution;
    info!(
        "{}: clusters {}/{}, total cost {:.1} m",
        inst.name(),
        sol.partition.a.len(),
        sol.partition.b.len(),
        sol.total_cost
    );
    match &args.out {
        Some(path) => write_file(path, &(sol.to_json() + "\n"))?,
        None => println!("{}", sol.to_json()),
    }
    if let Some(path) = &args.plot_out {
        let geo = serde_json::to_string_pretty(&solution_geojson(sol, &inst)).expect("json value");
        write_file(path, &(geo + "\n"))?;
    }
    if let Some(path) = &args.trace_out {
        let mut text = String::new();
        for (r, res) in run.results.iter().enumerate() {
            text.push_str(&format!("# route {r} solver={}\n", res.solver));
            text.push_str(&format_trace(&res.trace));
        }
        write_file(path, &text)?;
    }
    Ok(())
}

/// Explicit path, else the one recorded in the solution, tried as given and
/// then relative to the solution file.
fn resolve_instance(explicit: Option<&Path>, sol: &Solution, sol_path: &Path) -> Result<Instance, Failure> {
    if let Some(p) = explicit {
        return Ok(load_instance(p)?);
    }
    let recorded = sol
        .instance
        .path
        .as_ref()
        .ok_or_else(|| Failure::Input("solution records no instance path; pass --instance".into()))?;
    let recorded = PathBuf::from(recorded);
    let candidate = if recorded.is_relative() && !recorded.exists() {
        sol_path.parent().map(|d| d.join(&recorded)).unwrap_or(recorded)
    } else {
        recorded
    };
    Ok(load_instance(candidate)?)
}

fn cmd_verify(args: VerifyArgs) -> CmdResult {
    let sol = Solution::load(&args.solution)?;
    let inst = resolve_instance(args.instance.as_deref(), &sol, &args.solution)?;
    let violations = verify_solution(&sol, &inst);
    if violations.is_empty() {
        println!("ok: {} routes, total cost {:.3}", sol.routes.len(), sol.total_cost);
        return Ok(());
    }
    for v in &violations {
        println!("violation: {v}");
    }
    Err(Failure::Violations(violations.len()))
}

fn cmd_plot(args: PlotArgs) -> CmdResult {
    let sol = Solution::load(&args.solution)?;
    let inst = resolve_instance(args.instance.as_deref(), &sol, &args.solution)?;
    let geo = solution_geojson(&sol, &inst);
    write_file(&args.out, &(serde_json::to_string_pretty(&geo).expect("json value") + "\n"))?;
    let count = geo["features"].as_array().map_or(0, Vec::len);
    println!("wrote {count} features to {}", args.out.display());
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> CmdResult {
    let cfg = BenchConfig {
        use_cases: args.use_cases.clone(),
        sizes: args.sizes.clone(),
        seed: args.flags.seed,
        pipeline: pipeline_config(&args.flags, &args.solver)?,
        generator: GeneratorConfig::default(),
    };
    let cells = run_bench(&cfg);
    write_file(&args.out, &bench_csv(&cells))?;
    print!("{}", bench_table(&cells));
    if let Some(dir) = &args.solutions_dir {
        fs::create_dir_all(dir).map_err(|e| Failure::Input(format!("cannot create {}: {e}", dir.display())))?;
        for cell in &cells {
            if let Some(inst) = &cell.instance {
                save_instance(inst, dir.join(format!("{}.json", cell.name())))?;
            }
            if let Ok(res) = &cell.outcome {
                res.solution.save(dir.join(format!("{}.solution.json", cell.name())))?;
            }
        }
    }
    let failed = cells.iter().filter(|c| c.outcome.is_err()).count();
    let invalid: usize = cells
        .iter()
        .filter_map(|c| c.outcome.as_ref().ok())
        .map(|r| r.violations.len())
        .sum();
    if invalid > 0 {
        return Err(Failure::Violations(invalid));
    }
    if failed > 0 {
        return Err(Failure::Solver(format!("{failed} benchmark cells failed")));
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Plot(a) => cmd_plot(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Violations(k) => eprintln!("{k} violation(s) found"),
                Failure::Input(m) => eprintln!("error: {m}"),
                Failure::Solver(m) => eprintln!("solver failure: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}
