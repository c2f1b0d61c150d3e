//! The `run` command: one solve per memory value, then traces, a summary
//! and plots.

use std::collections::BTreeMap;
use std::sync::Mutex;
use std::time::Instant;

use log::info;
use pmm_core::problems::{
    build_lmi_feasibility, build_pd_feasibility, gen_lmi, gen_sharp_l1, gen_socp, uniform_cones, Instance,
};
use pmm_core::solver::pmm_solve_observed;
use pmm_core::{ProblemSpec, SeededRng, SolveResult, SolverConfig, Status};
use serde::Serialize;

use crate::config::{ProblemConfig, RunConfig};
use crate::output::{trace_csv, write_atomic};
use crate::plot::{log_plot, Series};
use crate::CliError;

pub struct Problem {
    pub name: String,
    pub spec: ProblemSpec,
    pub x1: Vec<f64>,
}

pub fn build_problem(cfg: &ProblemConfig) -> Result<Problem, CliError> {
    let usage = |e: &dyn std::fmt::Display| CliError::Usage(e.to_string());
    Ok(match cfg {
        ProblemConfig::Socp { seed, n, p, cones } => {
            let dims = uniform_cones(*n, *cones).map_err(|e| usage(&e))?;
            let inst = gen_socp(*seed, *n, *p, &dims).map_err(|e| usage(&e))?;
            socp_problem(&inst, format!("socp n={n} p={p} l={cones} seed={seed}"))?
        }
        ProblemConfig::Lmi { seed, q, k, rank } => {
            let inst = gen_lmi(*seed, *q, *k).map_err(|e| usage(&e))?;
            lmi_problem(&inst, *rank, format!("lmi q={q} k={k} r={rank} seed={seed}"))?
        }
        ProblemConfig::SharpL1 { n, seed } => {
            let (spec, _) = gen_sharp_l1(*n).map_err(|e| usage(&e))?;
            Problem {
                name: format!("sharp-l1 n={n} seed={seed}"),
                x1: SeededRng::new(*seed).normal_vec(*n),
                spec,
            }
        }
        ProblemConfig::CustomFromFile { path, rank } => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read instance {}: {e}", path.display())))?;
            let inst: Instance = serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("invalid instance {}: {e}", path.display())))?;
            let name = format!("{} from {}", inst.metadata().generator, path.display());
            match &inst {
                Instance::Socp(i) => socp_problem(i, name)?,
                Instance::Lmi(i) => lmi_problem(i, *rank, name)?,
            }
        }
    })
}

fn socp_problem(inst: &pmm_core::problems::ConeProgramInstance, name: String) -> Result<Problem, CliError> {
    let spec = build_pd_feasibility(inst).map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(Problem {
        x1: vec![0.0; spec.dim],
        spec,
        name,
    })
}

fn lmi_problem(inst: &pmm_core::problems::LmiInstance, rank: usize, name: String) -> Result<Problem, CliError> {
    let spec = build_lmi_feasibility(inst, rank).map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(Problem {
        x1: vec![0.0; spec.dim],
        spec,
        name,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub memory: usize,
    pub status: Option<Status>,
    pub iterations: usize,
    pub final_violation: Option<f64>,
    pub wall_ms: f64,
    pub trace_file: Option<String>,
    pub diagnostic: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub problem: String,
    pub dim: usize,
    pub config: RunConfig,
    pub workers: usize,
    pub runs: Vec<RunSummary>,
}

pub fn trace_file_name(memory: usize) -> String {
    format!("trace_M{memory}.csv")
}

/// Runs the sweep; returns the summary and whether every run avoided solver
/// failure.
pub fn run(cfg: &RunConfig) -> Result<(Summary, bool), CliError> {
    cfg.validate()?;
    let workers = cfg.effective_workers()?;
    let problem = build_problem(&cfg.problem)?;
    info!("{}: dimension {}, {} runs on {workers} workers", problem.name, problem.spec.dim, cfg.memory.len());

    let slots: Vec<Mutex<Option<(Result<SolveResult, String>, f64)>>> =
        cfg.memory.iter().map(|_| Mutex::new(None)).collect();
    let next = Mutex::new(0usize);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let idx = {
                    let mut n = next.lock().expect("queue lock");
                    let i = *n;
                    *n += 1;
                    i
                };
                let Some(&memory) = cfg.memory.get(idx) else { break };
                let solver = SolverConfig {
                    memory,
                    epsilon: cfg.epsilon,
                    max_iterations: cfg.max_iterations,
                    variant: cfg.variant,
                    record_iterates: false,
                };
                let start = Instant::now();
                let result = pmm_solve_observed(&problem.spec, &solver, &problem.x1, &mut |_| {}).map_err(|e| e.to_string());
                let ms = start.elapsed().as_secs_f64() * 1e3;
                *slots[idx].lock().expect("slot lock") = Some((result, ms));
            });
        }
    });

    let mut runs = Vec::new();
    let mut ok = true;
    let mut by_iteration = Vec::new();
    let mut by_time = Vec::new();
    for (slot, &memory) in slots.into_iter().zip(&cfg.memory) {
        let (result, wall_ms) = slot.into_inner().expect("slot lock").expect("every run finishes");
        match result {
            Ok(r) => {
                let file = trace_file_name(memory);
                write_atomic(&cfg.output_dir.join(&file), trace_csv(&r.trace).as_bytes())?;
                info!("M={memory}: {:?} after {} iterations, violation {:e}", r.status, r.iterations, r.final_violation());
                if r.status == Status::NumericalFailure {
                    ok = false;
                }
                let label = format!("M={memory}");
                by_iteration.push(Series {
                    label: label.clone(),
                    points: r.trace.iter().map(|t| (t.k as f64, t.violation)).collect(),
                });
                by_time.push(Series {
                    label,
                    points: r.trace.iter().map(|t| (t.elapsed_ms / 1e3, t.violation)).collect(),
                });
                runs.push(RunSummary {
                    memory,
                    status: Some(r.status),
                    iterations: r.iterations,
                    final_violation: Some(r.final_violation()).filter(|v| v.is_finite()),
                    wall_ms,
                    trace_file: Some(file),
                    diagnostic: r.diagnostic,
                });
            }
            Err(e) => {
                ok = false;
                runs.push(RunSummary {
                    memory,
                    status: None,
                    iterations: 0,
                    final_violation: None,
                    wall_ms,
                    trace_file: None,
                    diagnostic: Some(e),
                });
            }
        }
    }

    let dir = &cfg.output_dir;
    write_atomic(
        &dir.join("violation_vs_iteration.svg"),
        log_plot(&problem.name, "iteration", "max violation", &by_iteration).as_bytes(),
    )?;
    write_atomic(
        &dir.join("violation_vs_time.svg"),
        log_plot(&problem.name, "time (s)", "max violation", &by_time).as_bytes(),
    )?;
    let summary = Summary {
        problem: problem.name,
        dim: problem.spec.dim,
        config: cfg.clone(),
        workers,
        runs,
    };
    let json = serde_json::to_string_pretty(&summary).map_err(|e| CliError::Io(e.to_string()))?;
    write_atomic(&dir.join("summary.json"), json.as_bytes())?;
    Ok((summary, ok))
}

/// Iterations per memory value, for quick comparisons.
pub fn iterations_by_memory(summary: &Summary) -> BTreeMap<usize, usize> {
    summary.runs.iter().map(|r| (r.memory, r.iterations)).collect()
}
