//! Experiment plans: a grid of (problem, starting point, tolerance,
//! method) cells executed deterministically and summarized as CSV.
//!
//! Rerunning a plan produces byte-identical CSV bodies: row order is the
//! deterministic plan order (problems x starts x tolerances x methods),
//! every random draw is seeded, and the wall-time column is zeroed in plan
//! outputs — measured timing lives only in `#` header comments.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use tsd_core::analysis::trajectory_export;
use tsd_core::quadprob::{generate_problem, SpectrumSet, ToleranceKind, ToleranceSpec};
use tsd_core::solvers::{solve_quadratic, MethodId, RunStatus, SolverConfig, CSV_HEADER};
use tsd_core::QuadraticProblem64;

use crate::error::BenchError;
use crate::methods::parse_method_spec;
use crate::seedmix::start_seed;

fn default_max_iterations() -> usize {
    100_000
}

fn default_starts() -> usize {
    10
}

fn default_eps_kind() -> String {
    "rel2".to_string()
}

/// JSON-serializable experiment grid. Methods are spec strings
/// (`tsd(10)`, `sd`, `csd(2)`, ...); the grid is the full cross product
/// of problems, starting points, tolerances and methods.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    /// Master seed mixed into every starting-point stream.
    #[serde(default)]
    pub seed: u64,
    pub set_ids: Vec<u8>,
    pub dims: Vec<usize>,
    pub kappas: Vec<f64>,
    pub problem_seeds: Vec<u64>,
    pub methods: Vec<String>,
    pub eps: Vec<f64>,
    #[serde(default = "default_eps_kind")]
    pub eps_kind: String,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_starts")]
    pub starts: usize,
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Additionally write one trajectory CSV per cell next to `out`.
    #[serde(default)]
    pub trajectory: bool,
}

impl ExperimentPlan {
    pub fn from_json(text: &str) -> Result<Self, BenchError> {
        serde_json::from_str(text).map_err(|e| BenchError::Json(e.to_string()))
    }

    pub fn parsed_methods(&self) -> Result<Vec<MethodId>, BenchError> {
        self.methods.iter().map(|s| parse_method_spec(s)).collect()
    }

    pub fn tolerance_kind(&self) -> Result<ToleranceKind, BenchError> {
        match self.eps_kind.as_str() {
            "rel2" => Ok(ToleranceKind::RelativeGradNorm2),
            "absinf" => Ok(ToleranceKind::AbsoluteGradNormInf),
            other => Err(BenchError::InvalidPlan(format!(
                "eps_kind must be rel2 or absinf, got {other}"
            ))),
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let grids: [(&str, bool); 6] = [
            ("set_ids", self.set_ids.is_empty()),
            ("dims", self.dims.is_empty()),
            ("kappas", self.kappas.is_empty()),
            ("problem_seeds", self.problem_seeds.is_empty()),
            ("methods", self.methods.is_empty()),
            ("eps", self.eps.is_empty()),
        ];
        for (name, empty) in grids {
            if empty {
                return Err(BenchError::InvalidPlan(format!("{name} must be nonempty")));
            }
        }
        if self.starts == 0 {
            return Err(BenchError::InvalidPlan("starts must be >= 1".into()));
        }
        if self.max_iterations == 0 {
            return Err(BenchError::InvalidPlan("max_iterations must be >= 1".into()));
        }
        for &e in &self.eps {
            if !(e > 0.0) || !e.is_finite() {
                return Err(BenchError::InvalidPlan(format!("eps {e} must be positive")));
            }
        }
        self.parsed_methods()?;
        self.tolerance_kind()?;
        for (&set_id, &n) in self
            .set_ids
            .iter()
            .flat_map(|s| self.dims.iter().map(move |n| (s, n)))
        {
            for &kappa in &self.kappas {
                SpectrumSet {
                    set_id,
                    kappa,
                    n,
                    seed: 0,
                }
                .validate()?;
            }
        }
        Ok(())
    }
}

/// Scalar summary of one executed cell, in plan order.
#[derive(Debug, Clone)]
pub struct CellSummary {
    pub set_id: u8,
    pub n: usize,
    pub kappa: f64,
    pub problem_seed: u64,
    pub start_index: usize,
    pub method: MethodId,
    pub eps: f64,
    pub status: RunStatus,
    pub iterations: usize,
    pub function_evals: usize,
    pub gradient_evals: usize,
    pub time_s: f64,
    /// Full summary row with the time column zeroed for determinism.
    pub row_zero_time: String,
}

#[derive(Debug, Clone)]
pub struct PlanOutput {
    pub cells: Vec<CellSummary>,
    pub total_time_s: f64,
}

fn run_cell(
    plan: &ExperimentPlan,
    problem: &QuadraticProblem64,
    spec: &SpectrumSet,
    start_index: usize,
    method: MethodId,
    eps: f64,
    kind: ToleranceKind,
) -> Result<CellSummary, BenchError> {
    let mut rng = ChaCha8Rng::seed_from_u64(start_seed(
        plan.seed,
        spec.seed,
        start_index as u64,
    ));
    let x0: Vec<f64> = (0..spec.n)
        .map(|_| -10.0 + 20.0 * rng.random::<f64>())
        .collect();
    let mut cfg = SolverConfig::new(
        method,
        ToleranceSpec { kind, epsilon: eps },
        plan.max_iterations,
    );
    cfg.record_trajectory = false;
    let mut rec = solve_quadratic(problem, &x0, &cfg)?;
    rec.problem.set_id = Some(spec.set_id);
    rec.problem.seed = Some(spec.seed);
    rec.problem.kappa = Some(spec.kappa);
    if plan.trajectory {
        let dir = plan
            .out
            .as_deref()
            .and_then(Path::parent)
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or_else(|| Path::new("."));
        let name = format!(
            "traj_{}_set{}_n{}_k{:e}_seed{}_x{}_eps{:e}.csv",
            method.label().replace(['(', ')'], "-"),
            spec.set_id,
            spec.n,
            spec.kappa,
            spec.seed,
            start_index,
            eps
        );
        // rerun with trajectory recording only when asked: keeps the
        // default path at O(1) memory per iterate
        let mut tcfg = cfg.clone();
        tcfg.record_trajectory = true;
        let trec = solve_quadratic(problem, &x0, &tcfg)?;
        std::fs::write(dir.join(name), trajectory_export(&trec))?;
    }
    Ok(CellSummary {
        set_id: spec.set_id,
        n: spec.n,
        kappa: spec.kappa,
        problem_seed: spec.seed,
        start_index,
        method,
        eps,
        status: rec.status,
        iterations: rec.total_iterations,
        function_evals: rec.function_evals,
        gradient_evals: rec.gradient_evals,
        time_s: rec.wall_time_seconds,
        row_zero_time: rec.to_csv_row_with_time(0.0),
    })
}

/// Executes every cell of the plan, optionally on `jobs` worker threads.
/// Cell results come back in deterministic plan order regardless of
/// completion order.
pub fn run_plan(plan: &ExperimentPlan, jobs: Option<usize>) -> Result<PlanOutput, BenchError> {
    plan.validate()?;
    let methods = plan.parsed_methods()?;
    let kind = plan.tolerance_kind()?;

    let mut instances = Vec::new();
    for &set_id in &plan.set_ids {
        for &n in &plan.dims {
            for &kappa in &plan.kappas {
                for &seed in &plan.problem_seeds {
                    let spec = SpectrumSet {
                        set_id,
                        kappa,
                        n,
                        seed,
                    };
                    instances.push((spec, generate_problem::<f64>(&spec)?));
                }
            }
        }
    }

    let mut cells = Vec::new();
    for (spec, problem) in &instances {
        for start_index in 0..plan.starts {
            for &eps in &plan.eps {
                for &method in &methods {
                    cells.push((spec, problem, start_index, method, eps));
                }
            }
        }
    }

    let started = std::time::Instant::now();
    let execute = |chunk: &[(&SpectrumSet, &QuadraticProblem64, usize, MethodId, f64)]| {
        chunk
            .iter()
            .map(|&(spec, problem, start, method, eps)| {
                run_cell(plan, problem, spec, start, method, eps, kind)
            })
            .collect::<Result<Vec<_>, _>>()
    };
    let results = match jobs {
        Some(1) => execute(&cells)?,
        _ => {
            use rayon::prelude::*;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs.unwrap_or(0))
                .build()
                .map_err(|e| BenchError::InvalidPlan(e.to_string()))?;
            pool.install(|| {
                cells
                    .par_iter()
                    .map(|&(spec, problem, start, method, eps)| {
                        run_cell(plan, problem, spec, start, method, eps, kind)
                    })
                    .collect::<Result<Vec<_>, _>>()
            })?
        }
    };
    Ok(PlanOutput {
        cells: results,
        total_time_s: started.elapsed().as_secs_f64(),
    })
}

/// Deterministic summary CSV: `#` comment header with measured timing,
/// then one schema row per cell with the time column zeroed.
pub fn summary_csv(plan: &ExperimentPlan, output: &PlanOutput) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "# plan seed {} | cells {} | measured total wall time {:.6} s\n",
        plan.seed,
        output.cells.len(),
        output.total_time_s
    ));
    out.push_str("# per-row time_s is zeroed so reruns are byte-identical\n");
    out.push_str(CSV_HEADER);
    out.push('\n');
    for cell in &output.cells {
        out.push_str(&cell.row_zero_time);
        out.push('\n');
    }
    out
}

pub const AGGREGATE_HEADER: &str =
    "method,j_or_m,set_id,n,kappa,seed,eps_kind,eps,starts,converged,mean_iters,median_iters";

/// Per-(problem, tolerance, method) aggregates over starting points:
/// convergence count, mean and median iterations.
pub fn aggregate_csv(plan: &ExperimentPlan, output: &PlanOutput) -> String {
    use std::collections::BTreeMap;
    // key preserves plan order via first-seen index
    let mut order: Vec<String> = Vec::new();
    let mut groups: BTreeMap<String, Vec<&CellSummary>> = BTreeMap::new();
    for cell in &output.cells {
        let key = format!(
            "{}|{}|{}|{}|{:e}|{}",
            cell.method.label(),
            cell.set_id,
            cell.n,
            cell.problem_seed,
            cell.kappa,
            cell.eps
        );
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(cell);
    }
    let mut out = String::from(AGGREGATE_HEADER);
    out.push('\n');
    for key in order {
        let members = &groups[&key];
        let first = members[0];
        let mut iters: Vec<usize> = members.iter().map(|c| c.iterations).collect();
        iters.sort_unstable();
        let mean = iters.iter().sum::<usize>() as f64 / iters.len() as f64;
        let median = if iters.len() % 2 == 1 {
            iters[iters.len() / 2] as f64
        } else {
            (iters[iters.len() / 2 - 1] + iters[iters.len() / 2]) as f64 / 2.0
        };
        let converged = members
            .iter()
            .filter(|c| c.status == RunStatus::Converged)
            .count();
        out.push_str(&format!(
            "{},{},{},{},{:.16e},{},{},{:.16e},{},{},{:.6},{:.6}\n",
            first.method.name(),
            first
                .method
                .cycle_parameter()
                .map(|c| c.to_string())
                .unwrap_or_default(),
            first.set_id,
            first.n,
            first.kappa,
            first.problem_seed,
            plan.eps_kind,
            first.eps,
            members.len(),
            converged,
            mean,
            median
        ));
    }
    out
}

/// `runs.csv` -> `runs_aggregate.csv`
pub fn aggregate_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".to_string());
    let ext = out
        .extension()
        .map(|e| format!(".{}", e.to_string_lossy()))
        .unwrap_or_default();
    out.with_file_name(format!("{stem}_aggregate{ext}"))
}

/// Runs the plan and writes the summary and aggregate CSVs to `plan.out`
/// (or returns them without touching the filesystem when `out` is unset).
pub fn execute_plan(
    plan: &ExperimentPlan,
    jobs: Option<usize>,
) -> Result<(PlanOutput, String, String), BenchError> {
    let output = run_plan(plan, jobs)?;
    let summary = summary_csv(plan, &output);
    let aggregate = aggregate_csv(plan, &output);
    if let Some(out) = &plan.out {
        std::fs::write(out, &summary)?;
        std::fs::write(aggregate_path(out), &aggregate)?;
    }
    Ok((output, summary, aggregate))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_plan() -> ExperimentPlan {
        ExperimentPlan {
            seed: 7,
            set_ids: vec![1],
            dims: vec![100],
            kappas: vec![1e2],
            problem_seeds: vec![7],
            methods: vec!["sd".into(), "tsd(10)".into()],
            eps: vec![1e-6],
            eps_kind: "rel2".into(),
            max_iterations: 100_000,
            starts: 2,
            out: None,
            trajectory: false,
        }
    }

    #[test]
    fn tiny_plan_row_and_aggregate_counts() {
        let plan = tiny_plan();
        let (output, summary, aggregate) = execute_plan(&plan, Some(1)).unwrap();
        assert_eq!(output.cells.len(), 4);
        let body: Vec<&str> = summary
            .lines()
            .filter(|l| !l.starts_with('#'))
            .collect();
        assert_eq!(body.len(), 1 + 4); // header + 4 summary rows
        let agg: Vec<&str> = aggregate.lines().collect();
        assert_eq!(agg.len(), 1 + 2); // header + 2 aggregate rows
    }

    #[test]
    fn rerun_is_byte_identical() {
        let plan = tiny_plan();
        let (_, s1, a1) = execute_plan(&plan, Some(1)).unwrap();
        let (_, s2, a2) = execute_plan(&plan, None).unwrap(); // parallel rerun
        let body = |s: &str| {
            s.lines()
                .filter(|l| !l.starts_with('#'))
                .collect::<Vec<_>>()
                .join("\n")
        };
        assert_eq!(body(&s1), body(&s2));
        assert_eq!(a1, a2);
    }

    #[test]
    fn starts_share_problems_across_methods() {
        // both methods in the same cell see identical starting points, so
        // their iteration-0 gradient norms agree row by row
        let plan = tiny_plan();
        let (output, _, _) = execute_plan(&plan, Some(1)).unwrap();
        for pair in output.cells.chunks(2) {
            assert_eq!(pair[0].start_index, pair[1].start_index);
            assert!(pair[0].method != pair[1].method);
        }
    }

    #[test]
    fn aggregates_match_members_recomputed() {
        let plan = tiny_plan();
        let (output, _, aggregate) = execute_plan(&plan, Some(1)).unwrap();
        for line in aggregate.lines().skip(1) {
            let fields: Vec<&str> = line.split(',').collect();
            let method = fields[0];
            let mean: f64 = fields[10].parse().unwrap();
            let members: Vec<&CellSummary> = output
                .cells
                .iter()
                .filter(|c| c.method.name() == method)
                .collect();
            let expect =
                members.iter().map(|c| c.iterations).sum::<usize>() as f64 / members.len() as f64;
            assert!((mean - expect).abs() < 1e-9);
        }
    }

    #[test]
    fn invalid_plans_rejected() {
        let mut p = tiny_plan();
        p.methods.clear();
        assert!(p.validate().is_err());
        let mut p = tiny_plan();
        p.eps = vec![-1.0];
        assert!(p.validate().is_err());
        let mut p = tiny_plan();
        p.eps_kind = "l2".into();
        assert!(p.validate().is_err());
        let mut p = tiny_plan();
        p.set_ids = vec![3];
        p.dims = vec![7]; // set 3 needs n % 5 == 0
        assert!(p.validate().is_err());
        let mut p = tiny_plan();
        p.starts = 0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn aggregate_path_naming() {
        assert_eq!(
            aggregate_path(Path::new("out/runs.csv")),
            PathBuf::from("out/runs_aggregate.csv")
        );
        assert_eq!(
            aggregate_path(Path::new("runs")),
            PathBuf::from("runs_aggregate")
        );
    }
}
