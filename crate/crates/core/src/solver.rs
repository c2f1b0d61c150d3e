//! The Polyak minorant method: minorants at the current point, projection
//! onto their sublevel set, repeat until the true violation is small.

use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use log::{debug, info};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{dist2, dot, DenseMatrix};
use crate::minorant::{AffineCut, CutPool};
use crate::oracle::{Oracle, OracleError};
use crate::projection::{assemble, EqualityConstraints, ProjectionError, ProjectionProblem};

/// Tolerance on `‖A x − b‖∞` below which `x` counts as satisfying the
/// equalities.
pub const EQUALITY_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("oracle failed at iteration {iteration}: {source}")]
    Oracle {
        iteration: usize,
        #[source]
        source: OracleError,
    },
}

pub type DomainTest = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

/// `minimize f_0(x) s.t. f_i(x) ≤ 0, A x = b, x ∈ Ω` with known optimal value.
#[derive(Clone)]
pub struct ProblemSpec {
    pub dim: usize,
    /// `None` is the zero function, which turns the problem into a
    /// feasibility problem.
    pub objective: Option<Arc<dyn Oracle>>,
    pub constraints: Vec<Arc<dyn Oracle>>,
    pub equalities: Arc<EqualityConstraints>,
    pub f_star: f64,
    /// Membership test for the domain of the objective; `None` is all of R^n.
    pub domain: Option<DomainTest>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("dim", &self.dim)
            .field("has_objective", &self.objective.is_some())
            .field("constraints", &self.constraints.len())
            .field("equalities", &self.equalities.count())
            .field("f_star", &self.f_star)
            .finish()
    }
}

impl ProblemSpec {
    pub fn feasibility(dim: usize) -> Self {
        Self {
            dim,
            objective: None,
            constraints: Vec::new(),
            equalities: Arc::new(EqualityConstraints::none(dim)),
            f_star: 0.0,
            domain: None,
        }
    }

    pub fn minimize(objective: Arc<dyn Oracle>, f_star: f64) -> Self {
        let dim = objective.dim();
        Self {
            objective: Some(objective),
            f_star,
            ..Self::feasibility(dim)
        }
    }

    pub fn with_constraint(mut self, c: Arc<dyn Oracle>) -> Self {
        self.constraints.push(c);
        self
    }

    pub fn with_equalities(mut self, a: DenseMatrix, b: Vec<f64>) -> Result<Self, SolverError> {
        self.equalities = Arc::new(
            EqualityConstraints::new(a, b).map_err(|e| SolverError::InvalidProblem(e.to_string()))?,
        );
        Ok(self)
    }

    pub fn with_domain(mut self, domain: DomainTest) -> Self {
        self.domain = Some(domain);
        self
    }

    pub fn is_feasibility(&self) -> bool {
        self.objective.is_none()
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |what: &str, d: usize| {
            Err(SolverError::InvalidProblem(format!(
                "{what} acts on R^{d}, problem dimension is {}",
                self.dim
            )))
        };
        if let Some(o) = &self.objective {
            if o.dim() != self.dim {
                return bad("objective", o.dim());
            }
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if c.dim() != self.dim {
                return bad(&format!("constraint {i}"), c.dim());
            }
        }
        if self.equalities.dim() != self.dim {
            return bad("A", self.equalities.dim());
        }
        if !self.f_star.is_finite() {
            return Err(SolverError::InvalidProblem("f_star must be finite".into()));
        }
        Ok(())
    }

    fn in_domain(&self, x: &[f64]) -> bool {
        self.domain.as_ref().map_or(true, |d| d(x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    #[default]
    Standard,
    Alternating,
    PolyakFastPath,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub memory: usize,
    pub epsilon: f64,
    pub max_iterations: usize,
    pub variant: Variant,
    /// Keep each iterate in the trace.
    pub record_iterates: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            memory: 0,
            epsilon: 1e-6,
            max_iterations: 5000,
            variant: Variant::Standard,
            record_iterates: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.epsilon > 0.0) {
            return Err(SolverError::InvalidConfig(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.max_iterations == 0 {
            return Err(SolverError::InvalidConfig("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

/// One row of the trace. `violation` is measured at `x^k`; the remaining
/// fields describe the projection that produced `x^{k+1}` and are zero on
/// the final record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    pub violation: f64,
    pub step_norm: f64,
    pub cuts_total: usize,
    pub qp_iterations: usize,
    pub solve_ms: f64,
    pub elapsed_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub iterate: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Solved,
    IterationCap,
    NumericalFailure,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveResult {
    pub x: Vec<f64>,
    pub trace: Vec<IterationRecord>,
    pub status: Status,
    /// Projections performed.
    pub iterations: usize,
    pub diagnostic: Option<String>,
}

impl SolveResult {
    pub fn final_violation(&self) -> f64 {
        self.trace.last().map_or(f64::INFINITY, |r| r.violation)
    }
}

/// What an observer sees after each projection.
pub struct IterationView<'a> {
    pub k: usize,
    pub x: &'a [f64],
    pub x_next: &'a [f64],
    pub problem: &'a ProjectionProblem,
}

/// Test parameters of a `G`-Lipschitz, `μ`-sharp function.
#[derive(Debug, Clone, Copy)]
pub struct SharpnessTestConfig {
    pub mu: f64,
    pub lipschitz: f64,
}

impl SharpnessTestConfig {
    pub fn new(mu: f64, lipschitz: f64) -> Result<Self, SolverError> {
        if !(mu > 0.0 && mu <= lipschitz) {
            return Err(SolverError::InvalidConfig(format!(
                "need 0 < mu <= G, got mu = {mu}, G = {lipschitz}"
            )));
        }
        Ok(Self { mu, lipschitz })
    }

    /// Per-iteration contraction of the distance to the solution set.
    pub fn rate(&self) -> f64 {
        let r = self.mu / self.lipschitz;
        (1.0 - r * r).sqrt()
    }
}

struct Evaluation {
    violation: f64,
    objective: Option<CutPool>,
    constraints: Vec<CutPool>,
}

fn oracle_err(iteration: usize) -> impl Fn(OracleError) -> SolverError {
    move |source| SolverError::Oracle { iteration, source }
}

/// Minorants of every function at `x` together with the true violation.
fn evaluate(spec: &ProblemSpec, x: &[f64], k: usize) -> Result<Evaluation, SolverError> {
    let in_domain = spec.in_domain(x);
    let objective = match (&spec.objective, in_domain) {
        (Some(o), true) => Some(o.minorant(x).map_err(oracle_err(k))?),
        _ => None,
    };
    let constraints = spec
        .constraints
        .iter()
        .map(|c| c.minorant(x))
        .collect::<Result<Vec<_>, _>>()
        .map_err(oracle_err(k))?;
    let violation = if !in_domain || spec.equalities.residual(x) > EQUALITY_TOLERANCE {
        f64::INFINITY
    } else {
        let f0 = objective.as_ref().map_or(0.0, |p| p.tight_value);
        constraints
            .iter()
            .map(|p| p.tight_value)
            .fold(f0 - spec.f_star, f64::max)
    };
    Ok(Evaluation {
        violation,
        objective,
        constraints,
    })
}

/// `max{f_0(x) − f★, f_1(x), …, f_m(x)}` when `x ∈ Ω` and `A x = b`, else `+∞`.
pub fn violation(spec: &ProblemSpec, x: &[f64]) -> Result<f64, SolverError> {
    if !spec.in_domain(x) || spec.equalities.residual(x) > EQUALITY_TOLERANCE {
        return Ok(f64::INFINITY);
    }
    let f0 = match &spec.objective {
        Some(o) => o.value(x).map_err(oracle_err(0))?,
        None => 0.0,
    };
    let mut v = f0 - spec.f_star;
    for c in &spec.constraints {
        v = v.max(c.value(x).map_err(oracle_err(0))?);
    }
    Ok(v)
}

/// The subgradient step `x − ((f(x) − f★)/‖g‖²) g`; `None` when `g = 0`,
/// in which case `x` minimizes the function.
pub fn polyak_step(x: &[f64], fx: f64, f_star: f64, g: &[f64]) -> Option<Vec<f64>> {
    let gg = dot(g, g);
    if gg == 0.0 {
        return None;
    }
    let t = (fx - f_star) / gg;
    Some(x.iter().zip(g).map(|(xi, gi)| xi - t * gi).collect())
}

pub fn pmm_solve(spec: &ProblemSpec, config: &SolverConfig, x1: &[f64]) -> Result<SolveResult, SolverError> {
    pmm_solve_observed(spec, config, x1, &mut |_| {})
}

/// Alternating projections onto the objective and constraint sublevel sets.
pub fn pmm_alternating(spec: &ProblemSpec, config: &SolverConfig, x1: &[f64]) -> Result<SolveResult, SolverError> {
    let config = SolverConfig {
        variant: Variant::Alternating,
        ..config.clone()
    };
    pmm_solve_observed(spec, &config, x1, &mut |_| {})
}

/// Runs the method selected by `config.variant`, calling `observe` after
/// each projection.
pub fn pmm_solve_observed(
    spec: &ProblemSpec,
    config: &SolverConfig,
    x1: &[f64],
    observe: &mut dyn FnMut(&IterationView),
) -> Result<SolveResult, SolverError> {
    spec.validate()?;
    config.validate()?;
    if x1.len() != spec.dim {
        return Err(SolverError::InvalidProblem(format!(
            "x1 has length {}, problem dimension is {}",
            x1.len(),
            spec.dim
        )));
    }
    if x1.iter().any(|v| !v.is_finite()) {
        return Err(SolverError::InvalidProblem("x1 must be finite".into()));
    }
    if config.variant == Variant::PolyakFastPath {
        return polyak_fast_path(spec, config, x1);
    }

    let start = Instant::now();
    let no_equalities = Arc::new(EqualityConstraints::none(spec.dim));
    let mut objective_pool = CutPool::new(spec.dim, config.memory);
    let mut constraint_pools: Vec<CutPool> = spec
        .constraints
        .iter()
        .map(|_| CutPool::new(spec.dim, config.memory))
        .collect();
    let mut trace = Vec::new();
    let mut x = x1.to_vec();
    let mut diagnostic = None;
    let mut status = Status::IterationCap;

    for k in 1..=config.max_iterations + 1 {
        let eval = evaluate(spec, &x, k)?;
        let mut record = IterationRecord {
            k,
            violation: eval.violation,
            step_norm: 0.0,
            cuts_total: 0,
            qp_iterations: 0,
            solve_ms: 0.0,
            elapsed_ms: 0.0,
            iterate: config.record_iterates.then(|| x.clone()),
        };
        if eval.violation <= config.epsilon {
            status = Status::Solved;
            record.elapsed_ms = ms(start);
            trace.push(record);
            break;
        }
        if k > config.max_iterations {
            record.elapsed_ms = ms(start);
            trace.push(record);
            break;
        }

        match eval.objective {
            Some(fresh) => objective_pool.absorb(&fresh, k).map_err(|e| oracle_err(k)(e.into()))?,
            None if spec.objective.is_some() && objective_pool.is_empty() => {
                let floor = CutPool::single_cut(AffineCut::constant(spec.dim, spec.f_star), spec.f_star);
                objective_pool.absorb(&floor, k).map_err(|e| oracle_err(k)(e.into()))?;
            }
            None => {}
        }
        for (pool, fresh) in constraint_pools.iter_mut().zip(&eval.constraints) {
            pool.absorb(fresh, k).map_err(|e| oracle_err(k)(e.into()))?;
        }

        let objective = spec.objective.as_ref().map(|_| &objective_pool);
        let constraints: Vec<&CutPool> = constraint_pools.iter().collect();
        let assembled = match (config.variant, k % 2) {
            (Variant::Alternating, 0) => assemble(objective, &[], spec.f_star, &no_equalities, &x),
            (Variant::Alternating, _) => assemble(None, &constraints, spec.f_star, &spec.equalities, &x),
            _ => assemble(objective, &constraints, spec.f_star, &spec.equalities, &x),
        };
        let t0 = Instant::now();
        let outcome = assembled.and_then(|p| p.project().map(|r| (p, r)));
        record.solve_ms = ms(t0);
        let (problem, projection) = match outcome {
            Ok(v) => v,
            Err(e) => {
                diagnostic = Some(match e {
                    ProjectionError::EmptyTargetSet => format!(
                        "iteration {k}: projection target is empty; inconsistent minorants or incorrect f_star"
                    ),
                    other => format!("iteration {k}: {other}"),
                });
                status = Status::NumericalFailure;
                record.elapsed_ms = ms(start);
                trace.push(record);
                break;
            }
        };
        record.step_norm = dist2(&x, &projection.x_next);
        record.cuts_total = problem.f.rows()
            + problem
                .lift
                .iter()
                .flat_map(|l| &l.blocks)
                .map(|b| b.cuts.len())
                .sum::<usize>();
        record.qp_iterations = projection.qp.iterations;
        record.elapsed_ms = ms(start);
        debug!(
            "k={k} v={:.3e} step={:.3e} cuts={} qp={} route={:?}",
            record.violation, record.step_norm, record.cuts_total, record.qp_iterations, projection.route
        );
        observe(&IterationView {
            k,
            x: &x,
            x_next: &projection.x_next,
            problem: &problem,
        });
        trace.push(record);
        x = projection.x_next;
    }

    let iterations = trace.len().saturating_sub(1);
    info!(
        "{:?} after {iterations} projections, violation {:.3e}",
        status,
        trace.last().map_or(f64::NAN, |r| r.violation)
    );
    Ok(SolveResult {
        x,
        trace,
        status,
        iterations,
        diagnostic,
    })
}

fn polyak_fast_path(spec: &ProblemSpec, config: &SolverConfig, x1: &[f64]) -> Result<SolveResult, SolverError> {
    let Some(objective) = &spec.objective else {
        return Err(SolverError::InvalidConfig("the Polyak fast path needs an objective".into()));
    };
    if !spec.constraints.is_empty() || spec.equalities.count() > 0 {
        return Err(SolverError::InvalidConfig(
            "the Polyak fast path applies only without constraints or equalities".into(),
        ));
    }
    let start = Instant::now();
    let mut x = x1.to_vec();
    let mut trace = Vec::new();
    let mut status = Status::IterationCap;
    let mut diagnostic = None;
    for k in 1..=config.max_iterations + 1 {
        let in_domain = spec.in_domain(&x);
        let pool = if in_domain {
            Some(objective.minorant(&x).map_err(oracle_err(k))?)
        } else {
            None
        };
        let violation = pool.as_ref().map_or(f64::INFINITY, |p| p.tight_value - spec.f_star);
        let mut record = IterationRecord {
            k,
            violation,
            step_norm: 0.0,
            cuts_total: 0,
            qp_iterations: 0,
            solve_ms: 0.0,
            elapsed_ms: 0.0,
            iterate: config.record_iterates.then(|| x.clone()),
        };
        if violation <= config.epsilon || k > config.max_iterations {
            if violation <= config.epsilon {
                status = Status::Solved;
            }
            record.elapsed_ms = ms(start);
            trace.push(record);
            break;
        }
        let Some(pool) = pool else {
            diagnostic = Some(format!("iteration {k}: iterate left the objective domain"));
            status = Status::NumericalFailure;
            trace.push(record);
            break;
        };
        let t0 = Instant::now();
        let g = pool.linearize(&x).coeff;
        let Some(next) = polyak_step(&x, pool.tight_value, spec.f_star, &g) else {
            diagnostic = Some(format!(
                "iteration {k}: zero subgradient with f(x) - f_star = {violation:e}; f_star is too low"
            ));
            status = Status::NumericalFailure;
            trace.push(record);
            break;
        };
        record.solve_ms = ms(t0);
        record.step_norm = dist2(&x, &next);
        record.cuts_total = 1;
        record.elapsed_ms = ms(start);
        trace.push(record);
        x = next;
    }
    let iterations = trace.len().saturating_sub(1);
    Ok(SolveResult {
        x,
        trace,
        status,
        iterations,
        diagnostic,
    })
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atoms::{AffineArg, Atom, ExprNode};
    use crate::linalg::norm2;
    use crate::rng::SeededRng;

    fn norm1(n: usize) -> Arc<dyn Oracle> {
        Arc::new(ExprNode::atom(Atom::Norm1, AffineArg::identity(n)))
    }

    fn config(memory: usize) -> SolverConfig {
        SolverConfig {
            memory,
            epsilon: 1e-9,
            max_iterations: 200,
            record_iterates: true,
            ..SolverConfig::default()
        }
    }

    #[test]
    fn violation_examples() {
        let box_constraint: Arc<dyn Oracle> = Arc::new(ExprNode::WeightedSum(vec![
            (1.0, ExprNode::atom(Atom::NormInf, AffineArg::identity(3))),
            (1.0, ExprNode::affine(vec![0.0; 3], -1.0)),
        ]));
        let spec = ProblemSpec::feasibility(3).with_constraint(box_constraint);
        assert_eq!(violation(&spec, &[0.0, 0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(violation(&spec, &[2.0, 0.0, 0.0]).unwrap(), 1.0);
        let spec = spec
            .with_equalities(DenseMatrix::from_rows(&[vec![1.0, 1.0, 1.0]], 3).unwrap(), vec![1.0])
            .unwrap();
        assert_eq!(violation(&spec, &[0.0, 0.0, 0.0]).unwrap(), f64::INFINITY);
    }

    #[test]
    fn outside_domain_is_infinite() {
        let spec = ProblemSpec::minimize(norm1(2), 0.0).with_domain(Arc::new(|x: &[f64]| x[0] >= 0.0));
        assert_eq!(violation(&spec, &[-1.0, 0.0]).unwrap(), f64::INFINITY);
        assert_eq!(violation(&spec, &[1.0, 0.0]).unwrap(), 1.0);
    }

    #[test]
    fn polyak_step_examples() {
        assert_eq!(polyak_step(&[2.0], 2.0, 0.0, &[1.0]).unwrap(), vec![0.0]);
        assert_eq!(polyak_step(&[1.0, 1.0], 2.0, 0.0, &[1.0, 1.0]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(polyak_step(&[3.0, -1.0], 5.0, 5.0, &[1.0, 2.0]).unwrap(), vec![3.0, -1.0]);
        assert!(polyak_step(&[0.0], 0.0, 0.0, &[0.0]).is_none());
    }

    #[test]
    fn solved_at_start_gives_one_record() {
        let spec = ProblemSpec::minimize(norm1(2), 0.0);
        let r = pmm_solve(&spec, &config(0), &[0.0, 0.0]).unwrap();
        assert_eq!(r.status, Status::Solved);
        assert_eq!(r.trace.len(), 1);
        assert_eq!(r.iterations, 0);
    }

    #[test]
    fn absolute_value_in_one_step() {
        let spec = ProblemSpec::minimize(norm1(1), 0.0);
        let r = pmm_solve(&spec, &config(0), &[2.0]).unwrap();
        assert_eq!(r.status, Status::Solved);
        let iterates: Vec<f64> = r.trace.iter().map(|t| t.iterate.as_ref().unwrap()[0]).collect();
        assert_eq!(iterates, vec![2.0, 0.0]);
    }

    #[test]
    fn polyak_equivalence() {
        let mut rng = SeededRng::new(5);
        let n = 20;
        let spec = ProblemSpec::minimize(norm1(n), 0.0);
        let x1 = rng.normal_vec(n);
        let cfg = SolverConfig {
            epsilon: 1e-300,
            max_iterations: 50,
            ..config(0)
        };
        let pmm = pmm_solve(&spec, &cfg, &x1).unwrap();
        let fast = pmm_solve(
            &spec,
            &SolverConfig {
                variant: Variant::PolyakFastPath,
                ..cfg.clone()
            },
            &x1,
        )
        .unwrap();
        assert_eq!(pmm.trace.len(), fast.trace.len());
        for (a, b) in pmm.trace.iter().zip(&fast.trace) {
            let (xa, xb) = (a.iterate.as_ref().unwrap(), b.iterate.as_ref().unwrap());
            assert!(dist2(xa, xb) <= 1e-8, "k={} {}", a.k, dist2(xa, xb));
        }
    }

    #[test]
    fn sharpness_rate_on_l1() {
        let n = 8;
        let sharp = SharpnessTestConfig::new(1.0, (n as f64).sqrt()).unwrap();
        let mut rng = SeededRng::new(9);
        for memory in [0, 3] {
            let spec = ProblemSpec::minimize(norm1(n), 0.0);
            let r = pmm_solve(&spec, &config(memory), &rng.normal_vec(n)).unwrap();
            let dists: Vec<f64> = r.trace.iter().map(|t| norm2(t.iterate.as_ref().unwrap())).collect();
            for w in dists.windows(2) {
                assert!(w[1] <= (sharp.rate() + 1e-6) * w[0], "{} > {} * {}", w[1], sharp.rate(), w[0]);
            }
        }
    }

    #[test]
    fn sharpness_config_validates() {
        assert!(SharpnessTestConfig::new(2.0, 1.0).is_err());
        assert!(SharpnessTestConfig::new(0.0, 1.0).is_err());
    }

    #[test]
    fn alternating_feasibility_even_steps_are_identity() {
        // ‖x‖∞ ≤ 1 from (3, −2)
        let c: Arc<dyn Oracle> = Arc::new(ExprNode::WeightedSum(vec![
            (1.0, ExprNode::atom(Atom::NormInf, AffineArg::identity(2))),
            (1.0, ExprNode::affine(vec![0.0; 2], -1.0)),
        ]));
        let spec = ProblemSpec::feasibility(2).with_constraint(c);
        let r = pmm_alternating(&spec, &config(0), &[3.0, -2.0]).unwrap();
        assert_eq!(r.status, Status::Solved);
        for rec in r.trace.iter().filter(|t| t.k % 2 == 0 && t.violation > 1e-9) {
            assert_eq!(rec.step_norm, 0.0);
        }
    }

    #[test]
    fn alternating_two_dimensional_toy() {
        let f0: Arc<dyn Oracle> = Arc::new(ExprNode::affine(vec![1.0, 0.0], 0.0));
        let f1: Arc<dyn Oracle> = Arc::new(ExprNode::affine(vec![-1.0, 0.0], -1.0));
        let spec = ProblemSpec::minimize(f0, -1.0).with_constraint(f1);
        let r = pmm_alternating(&spec, &config(0), &[2.0, 3.0]).unwrap();
        assert_eq!(r.status, Status::Solved);
        assert!(dist2(&r.x, &[-1.0, 3.0]) < 1e-12);
        // k=1 projects onto x1 ≥ −1 (no move), k=2 onto x1 ≤ −1.
        assert_eq!(r.trace[0].step_norm, 0.0);
        assert!((r.trace[1].step_norm - 3.0).abs() < 1e-12);
    }

    #[test]
    fn empty_target_set_is_reported() {
        // f★ below the true minimum of |x| + 1
        let f: Arc<dyn Oracle> = Arc::new(ExprNode::WeightedSum(vec![
            (1.0, ExprNode::atom(Atom::Norm1, AffineArg::identity(1))),
            (1.0, ExprNode::affine(vec![0.0], 1.0)),
        ]));
        let spec = ProblemSpec::minimize(f, 0.0);
        let r = pmm_solve(&spec, &config(5), &[2.0]).unwrap();
        assert_eq!(r.status, Status::NumericalFailure);
        assert!(r.diagnostic.unwrap().contains("incorrect f_star"));
    }

    #[test]
    fn equality_persists_after_first_projection() {
        let mut rng = SeededRng::new(12);
        let n = 6;
        let a = DenseMatrix::new(2, n, rng.normal_vec(2 * n)).unwrap();
        let x0 = rng.normal_vec(n);
        let b = a.matvec(&x0);
        let f: Arc<dyn Oracle> = Arc::new(ExprNode::atom(
            Atom::Norm1,
            AffineArg::Map {
                matrix: DenseMatrix::identity(n),
                offset: x0.iter().map(|v| -v).collect(),
            },
        ));
        let spec = ProblemSpec::minimize(f, 0.0).with_equalities(a.clone(), b.clone()).unwrap();
        let r = pmm_solve(&spec, &config(2), &vec![0.0; n]).unwrap();
        assert_eq!(r.status, Status::Solved);
        for rec in &r.trace[1..] {
            let x = rec.iterate.as_ref().unwrap();
            let res = a.matvec(x).iter().zip(&b).fold(0.0f64, |m, (u, v)| m.max((u - v).abs()));
            assert!(res <= 1e-8);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let spec = ProblemSpec::minimize(norm1(2), 0.0);
        assert!(pmm_solve(&spec, &config(0), &[1.0]).is_err());
        assert!(pmm_solve(&spec, &config(0), &[f64::NAN, 0.0]).is_err());
        let bad = SolverConfig {
            epsilon: 0.0,
            ..config(0)
        };
        assert!(pmm_solve(&spec, &bad, &[1.0, 1.0]).is_err());
        let fast = SolverConfig {
            variant: Variant::PolyakFastPath,
            ..config(0)
        };
        let constrained = spec.clone().with_constraint(norm1(2));
        assert!(pmm_solve(&constrained, &fast, &[1.0, 1.0]).is_err());
    }
}
