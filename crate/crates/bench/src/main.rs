//! `tsd-bench`: deterministic benchmark runner for the gradient-method
//! laboratory.
//!
//! Subcommands: `run` (quadratic experiment grids, optionally from a JSON
//! plan file with flags overriding plan fields), `general` (Wolfe-searched
//! methods on built-in nonquadratic objectives), `verify` (registered
//! acceptance suites), and `gen-problem` (emit one generated problem as
//! JSON).
//!
//! Exit codes: 0 success, 1 criterion failure, 2 usage error, 3 I/O error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tsd_bench::error::BenchError;
use tsd_bench::general::{builtin_objective, run_general};
use tsd_bench::methods::method_from_parts;
use tsd_bench::plan::{execute_plan, ExperimentPlan};
use tsd_bench::suites::{run_suite, SUITE_IDS};
use tsd_core::analysis::trajectory_export;
use tsd_core::quadprob::{generate_problem, problem_to_json, SpectrumSet};
use tsd_core::solvers::MethodId;
use tsd_core::WolfeParams64;

#[derive(Parser)]
#[command(
    name = "tsd-bench",
    about = "Benchmark harness for triangle steepest descent and classical gradient methods"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a grid of quadratic experiments and write summary CSVs.
    Run(RunArgs),
    /// Run a Wolfe-searched method on a built-in nonquadratic objective.
    General(GeneralArgs),
    /// Run a registered verification suite.
    Verify(VerifyArgs),
    /// Generate one quadratic problem and print or write it as JSON.
    GenProblem(GenProblemArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON plan file; flags below override its fields.
    #[arg(long)]
    plan: Option<PathBuf>,
    /// Spectrum set ids (1-5).
    #[arg(long, value_delimiter = ',')]
    set: Vec<u8>,
    /// Problem dimensions.
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    /// Condition numbers.
    #[arg(long, value_delimiter = ',')]
    kappa: Vec<f64>,
    /// Stopping tolerances.
    #[arg(long, value_delimiter = ',')]
    eps: Vec<f64>,
    /// Stopping rule: rel2 (||g|| <= eps ||g0||) or absinf (||g||_inf < eps).
    #[arg(long = "eps-kind")]
    eps_kind: Option<String>,
    /// Methods: tsd, sd, bb1, bb2, cabb, csd.
    #[arg(long, value_delimiter = ',')]
    method: Vec<String>,
    /// Cycle parameters for tsd (each j crosses with `--method tsd`).
    #[arg(long, value_delimiter = ',')]
    j: Vec<u32>,
    /// Reuse counts for csd (each m crosses with `--method csd`).
    #[arg(long, value_delimiter = ',')]
    m: Vec<u32>,
    /// Problem generation seeds.
    #[arg(long, value_delimiter = ',')]
    seed: Vec<u64>,
    /// Starting points per problem.
    #[arg(long)]
    starts: Option<usize>,
    /// Iteration cap per run.
    #[arg(long = "max-iter")]
    max_iter: Option<usize>,
    /// Summary CSV path (aggregate CSV lands next to it).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write one trajectory CSV per cell.
    #[arg(long)]
    trajectory: bool,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct GeneralArgs {
    /// One of: rosenbrock2d, extrosenbrock, quartic, negsqnorm.
    #[arg(long)]
    objective: String,
    /// Dimension for the sized objective families.
    #[arg(long)]
    n: Option<usize>,
    /// Method: tsd, sd, bb1, or bb2.
    #[arg(long, default_value = "tsd")]
    method: String,
    /// Cycle parameter when the method is tsd.
    #[arg(long)]
    j: Option<u32>,
    /// Infinity-norm gradient tolerance.
    #[arg(long, default_value_t = 1e-6)]
    eps: f64,
    /// Iteration cap.
    #[arg(long = "max-iter", default_value_t = 10_000)]
    max_iter: usize,
    /// Write the full run record as JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the run's trajectory CSV here.
    #[arg(long)]
    trajectory: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Suite id; `all` runs every suite.
    suite: String,
}

#[derive(Args)]
struct GenProblemArgs {
    #[arg(long)]
    set: u8,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    kappa: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

const EXIT_CRITERION: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;

fn error_exit_code(e: &BenchError) -> u8 {
    match e {
        BenchError::Io(_) => EXIT_IO,
        _ => EXIT_USAGE,
    }
}

fn build_plan(args: &RunArgs) -> Result<ExperimentPlan, BenchError> {
    let mut plan = match &args.plan {
        Some(path) => ExperimentPlan::from_json(&std::fs::read_to_string(path)?)?,
        None => ExperimentPlan {
            seed: 0,
            set_ids: Vec::new(),
            dims: Vec::new(),
            kappas: Vec::new(),
            problem_seeds: Vec::new(),
            methods: Vec::new(),
            eps: Vec::new(),
            eps_kind: "rel2".to_string(),
            max_iterations: 100_000,
            starts: 10,
            out: None,
            trajectory: false,
        },
    };
    if !args.set.is_empty() {
        plan.set_ids = args.set.clone();
    }
    if !args.n.is_empty() {
        plan.dims = args.n.clone();
    }
    if !args.kappa.is_empty() {
        plan.kappas = args.kappa.clone();
    }
    if !args.eps.is_empty() {
        plan.eps = args.eps.clone();
    }
    if let Some(kind) = &args.eps_kind {
        plan.eps_kind = kind.clone();
    }
    if !args.seed.is_empty() {
        plan.problem_seeds = args.seed.clone();
    }
    if let Some(starts) = args.starts {
        plan.starts = starts;
    }
    if let Some(cap) = args.max_iter {
        plan.max_iterations = cap;
    }
    if let Some(out) = &args.out {
        plan.out = Some(out.clone());
    }
    if args.trajectory {
        plan.trajectory = true;
    }
    if !args.method.is_empty() {
        // expand method names against the j / m grids
        let mut methods = Vec::new();
        for name in &args.method {
            match name.as_str() {
                "tsd" if !args.j.is_empty() => {
                    for &j in &args.j {
                        method_from_parts("tsd", Some(j))?;
                        methods.push(format!("tsd({j})"));
                    }
                }
                "csd" if !args.m.is_empty() => {
                    for &m in &args.m {
                        method_from_parts("csd", Some(m))?;
                        methods.push(format!("csd({m})"));
                    }
                }
                other => {
                    let id = method_from_parts(other, None)?;
                    methods.push(id.label());
                }
            }
        }
        plan.methods = methods;
    }
    Ok(plan)
}

fn cmd_run(args: &RunArgs) -> Result<(), (u8, String)> {
    let plan = build_plan(args).map_err(|e| (error_exit_code(&e), e.to_string()))?;
    let (output, summary, _aggregate) = execute_plan(&plan, args.jobs)
        .map_err(|e| (error_exit_code(&e), e.to_string()))?;
    if plan.out.is_none() {
        print!("{summary}");
    } else {
        eprintln!(
            "wrote {} cells in {:.3} s to {}",
            output.cells.len(),
            output.total_time_s,
            plan.out.as_ref().unwrap().display()
        );
    }
    Ok(())
}

fn cmd_general(args: &GeneralArgs) -> Result<(), (u8, String)> {
    let usage = |e: BenchError| (error_exit_code(&e), e.to_string());
    let builtin = builtin_objective(&args.objective, args.n).map_err(usage)?;
    let method = method_from_parts(&args.method, args.j).map_err(usage)?;
    if matches!(method, MethodId::CaBb | MethodId::Csd { .. }) {
        return Err((
            EXIT_USAGE,
            format!("{} is not available for general objectives", method.label()),
        ));
    }
    if args.eps <= 0.0 {
        return Err((EXIT_USAGE, "eps must be positive".to_string()));
    }
    let rec = run_general(
        &builtin,
        None,
        method,
        args.eps,
        args.max_iter,
        &WolfeParams64::default(),
    )
    .map_err(usage)?;
    println!(
        "{} {} -> {} in {} iterations ({} fevals, {} gevals, {} fallbacks), final |g|_inf = {:.3e}",
        builtin.name,
        method.label(),
        rec.status.name(),
        rec.total_iterations,
        rec.function_evals,
        rec.gradient_evals,
        rec.combined_fallbacks,
        rec.final_entry().grad_norm_inf
    );
    if let Some(out) = &args.out {
        std::fs::write(out, rec.to_json()).map_err(|e| (EXIT_IO, e.to_string()))?;
    }
    if let Some(path) = &args.trajectory {
        std::fs::write(path, trajectory_export(&rec)).map_err(|e| (EXIT_IO, e.to_string()))?;
    }
    Ok(())
}

fn cmd_verify(args: &VerifyArgs) -> Result<(), (u8, String)> {
    if !SUITE_IDS.contains(&args.suite.as_str()) {
        return Err((
            EXIT_USAGE,
            format!(
                "unknown suite '{}'; available: {}",
                args.suite,
                SUITE_IDS.join(", ")
            ),
        ));
    }
    let results = run_suite(&args.suite).map_err(|e| (error_exit_code(&e), e.to_string()))?;
    let mut all = true;
    for r in &results {
        println!("{}", r.report_line());
        all &= r.passed;
    }
    if all {
        Ok(())
    } else {
        Err((EXIT_CRITERION, "one or more criteria failed".to_string()))
    }
}

fn cmd_gen_problem(args: &GenProblemArgs) -> Result<(), (u8, String)> {
    let spec = SpectrumSet {
        set_id: args.set,
        kappa: args.kappa,
        n: args.n,
        seed: args.seed,
    };
    let problem = generate_problem::<f64>(&spec).map_err(|e| (EXIT_USAGE, e.to_string()))?;
    let text = problem_to_json(&spec, &problem);
    match &args.out {
        Some(path) => std::fs::write(path, text).map_err(|e| (EXIT_IO, e.to_string()))?,
        None => println!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::General(args) => cmd_general(args),
        Command::Verify(args) => cmd_verify(args),
        Command::GenProblem(args) => cmd_gen_problem(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, message)) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}
