//! Euclidean projection of the current iterate onto the polyhedral set cut
//! out by the iteration's minorants and the equality constraints.

mod active_set;
pub mod qp;

use std::sync::{Arc, OnceLock};

use thiserror::Error;

pub use qp::{qp_solve, QpError, QpOptions, QpSolution, QpStatus};

use crate::linalg::{axpy, dot, norm2, null_space_basis, Cholesky, DenseMatrix};
use crate::minorant::{AffineCut, CutPool};
use crate::rng::SeededRng;

/// Absolute slack allowed on a constant row before the target set is
/// declared empty.
pub const ROW_TOLERANCE: f64 = 1e-8;
const ZERO_ROW: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProjectionError {
    #[error("the target set is empty (inconsistent minorants or a wrong optimal value)")]
    EmptyTargetSet,
    #[error("projection failed numerically: {0}")]
    NumericalFailure(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("the dual route does not handle epigraph variables")]
    LiftedProblem,
}

impl From<QpError> for ProjectionError {
    fn from(e: QpError) -> Self {
        match e {
            QpError::Dimension(s) => ProjectionError::Dimension(s),
        }
    }
}

/// The equality system `A x = b`, with factorizations cached across
/// iterations.
#[derive(Debug)]
pub struct EqualityConstraints {
    a: DenseMatrix,
    b: Vec<f64>,
    gram: Option<Cholesky>,
    null_basis: OnceLock<Option<DenseMatrix>>,
}

impl EqualityConstraints {
    pub fn new(a: DenseMatrix, b: Vec<f64>) -> Result<Self, ProjectionError> {
        if a.rows() != b.len() {
            return Err(ProjectionError::Dimension(format!(
                "A has {} rows but b has length {}",
                a.rows(),
                b.len()
            )));
        }
        let gram = if a.rows() > 0 {
            Some(Cholesky::factor(&a.gram()).map_err(|e| {
                ProjectionError::NumericalFailure(format!("equality rows are not independent: {e}"))
            })?)
        } else {
            None
        };
        Ok(Self {
            a,
            b,
            gram,
            null_basis: OnceLock::new(),
        })
    }

    pub fn none(dim: usize) -> Self {
        Self {
            a: DenseMatrix::zeros(0, dim),
            b: Vec::new(),
            gram: None,
            null_basis: OnceLock::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.a.cols()
    }

    pub fn count(&self) -> usize {
        self.a.rows()
    }

    pub fn a(&self) -> &DenseMatrix {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    /// `‖A x − b‖∞`.
    pub fn residual(&self, x: &[f64]) -> f64 {
        if self.count() == 0 {
            return 0.0;
        }
        self.a
            .matvec(x)
            .iter()
            .zip(&self.b)
            .fold(0.0, |m, (ax, b)| m.max((ax - b).abs()))
    }

    /// Projection onto `{A x = b}` and the multiplier `(AAᵀ)⁻¹(A y − b)`.
    pub fn project_with_multiplier(&self, y: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let Some(gram) = &self.gram else {
            return (y.to_vec(), Vec::new());
        };
        let r: Vec<f64> = self.a.matvec(y).iter().zip(&self.b).map(|(ax, b)| ax - b).collect();
        let nu = gram.solve(&r);
        let mut x = y.to_vec();
        axpy(-1.0, &self.a.matvec_t(&nu), &mut x);
        (x, nu)
    }

    pub fn project(&self, y: &[f64]) -> Vec<f64> {
        self.project_with_multiplier(y).0
    }

    fn gram_solve(&self, r: &[f64]) -> Vec<f64> {
        match &self.gram {
            Some(g) => g.solve(r),
            None => Vec::new(),
        }
    }

    /// Rows form an orthonormal basis of `null(A)`.
    fn null_basis(&self) -> Option<&DenseMatrix> {
        self.null_basis
            .get_or_init(|| null_space_basis(&self.a).ok())
            .as_ref()
    }
}

/// One block of a lifted pool: `t ≥ c_j(x)` for each cut, and `t ≥ 0` when
/// clipped.
#[derive(Debug, Clone)]
pub struct LiftBlock {
    pub weight: f64,
    pub clip_at_zero: bool,
    pub cuts: Vec<AffineCut>,
}

/// `affine(x) + Σ_b weight_b · t_b ≤ level` with one epigraph scalar per block.
#[derive(Debug, Clone)]
pub struct LiftedConstraint {
    pub affine: AffineCut,
    pub blocks: Vec<LiftBlock>,
    pub level: f64,
}

impl LiftedConstraint {
    fn value(&self, x: &[f64]) -> f64 {
        let mut v = self.affine.eval(x);
        for block in &self.blocks {
            let mut inner = block.cuts.iter().map(|c| c.eval(x)).fold(f64::NEG_INFINITY, f64::max);
            if block.clip_at_zero {
                inner = inner.max(0.0);
            }
            v += block.weight * inner;
        }
        v
    }
}

/// The set `{F x ≤ g, A x = b, lifted constraints}` and the point to project.
#[derive(Debug, Clone)]
pub struct ProjectionProblem {
    pub f: DenseMatrix,
    pub g: Vec<f64>,
    pub equalities: Arc<EqualityConstraints>,
    pub anchor: Vec<f64>,
    pub lift: Vec<LiftedConstraint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Dual,
    Primal,
}

#[derive(Debug, Clone)]
pub struct Projection {
    pub x_next: Vec<f64>,
    pub qp: QpSolution,
    pub route: Route,
}

impl ProjectionProblem {
    pub fn dim(&self) -> usize {
        self.anchor.len()
    }

    pub fn is_lifted(&self) -> bool {
        !self.lift.is_empty()
    }

    pub fn epigraph_count(&self) -> usize {
        self.lift.iter().map(|l| l.blocks.len()).sum()
    }

    /// Cut rows plus equality rows: the size of the reduced dual system.
    pub fn reduced_size(&self) -> usize {
        self.f.rows() + self.equalities.count()
    }

    /// Whether `x` satisfies every constraint within `tol`.
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        let fx = self.f.matvec(x);
        fx.iter().zip(&self.g).all(|(a, g)| *a <= g + tol)
            && self.equalities.residual(x) <= tol
            && self.lift.iter().all(|l| l.value(x) <= l.level + tol)
    }

    /// The dual route pays off when the reduced system is no larger than
    /// the primal one.
    pub fn prefers_dual(&self) -> bool {
        !self.is_lifted() && self.reduced_size() <= self.dim()
    }

    pub fn project(&self) -> Result<Projection, ProjectionError> {
        if self.prefers_dual() {
            project_dual(self)
        } else {
            project_primal(self)
        }
    }
}

fn combine(base: &AffineCut, weight: f64, cut: &AffineCut) -> AffineCut {
    let mut coeff = base.coeff.clone();
    axpy(weight, &cut.coeff, &mut coeff);
    AffineCut {
        coeff,
        offset: base.offset + weight * cut.offset,
        birth_iter: cut.birth_iter,
    }
}

/// Stacks the cuts of one pool as rows `a·x ≤ level − β`, lifting only when
/// two or more blocks are genuinely piecewise.
fn add_pool(
    rows: &mut Vec<Vec<f64>>,
    g: &mut Vec<f64>,
    lift: &mut Vec<LiftedConstraint>,
    pool: &CutPool,
    level: f64,
) {
    let mut affine = AffineCut::constant(pool.dim(), 0.0);
    let mut piecewise = Vec::new();
    for block in &pool.blocks {
        if block.weight == 0.0 || block.cuts.is_empty() {
            continue;
        }
        if block.cuts.len() == 1 && !block.clip_at_zero {
            affine = combine(&affine, block.weight, &block.cuts[0]);
        } else {
            piecewise.push(block);
        }
    }
    let mut push = |cut: &AffineCut| {
        rows.push(cut.coeff.clone());
        g.push(level - cut.offset);
    };
    match piecewise.as_slice() {
        [] => push(&affine),
        [block] => {
            for cut in &block.cuts {
                push(&combine(&affine, block.weight, cut));
            }
            if block.clip_at_zero {
                push(&affine);
            }
        }
        blocks => lift.push(LiftedConstraint {
            affine,
            blocks: blocks
                .iter()
                .map(|b| LiftBlock {
                    weight: b.weight,
                    clip_at_zero: b.clip_at_zero,
                    cuts: b.cuts.clone(),
                })
                .collect(),
            level,
        }),
    }
}

/// Builds the projection problem for one iteration: objective cuts at level
/// `f_star`, constraint cuts at level 0.
pub fn assemble(
    objective: Option<&CutPool>,
    constraints: &[&CutPool],
    f_star: f64,
    equalities: &Arc<EqualityConstraints>,
    anchor: &[f64],
) -> Result<ProjectionProblem, ProjectionError> {
    let n = anchor.len();
    if equalities.dim() != n {
        return Err(ProjectionError::Dimension(format!(
            "equalities act on R^{} but the anchor is in R^{n}",
            equalities.dim()
        )));
    }
    let pools = objective
        .map(|p| (p, f_star))
        .into_iter()
        .chain(constraints.iter().map(|p| (*p, 0.0)));
    let mut rows = Vec::new();
    let mut g = Vec::new();
    let mut lift = Vec::new();
    for (pool, level) in pools {
        if pool.dim() != n {
            return Err(ProjectionError::Dimension(format!(
                "pool on R^{} with anchor in R^{n}",
                pool.dim()
            )));
        }
        add_pool(&mut rows, &mut g, &mut lift, pool, level);
    }
    let f = DenseMatrix::from_rows(&rows, n).map_err(|e| ProjectionError::Dimension(e.to_string()))?;
    Ok(ProjectionProblem {
        f,
        g,
        equalities: Arc::clone(equalities),
        anchor: anchor.to_vec(),
        lift,
    })
}

/// Violations of a unit-norm row below this are rounding noise.
fn rounding_slack(x_norm: f64, level: f64) -> f64 {
    4.0 * f64::EPSILON * (x_norm + level.abs())
}

/// Unit-norm copies of the nonzero rows of `F x ≤ g`.
struct NormalizedRows {
    c: DenseMatrix,
    d: Vec<f64>,
    /// Original row index and `1 / ‖F_i‖` for each kept row.
    kept: Vec<(usize, f64)>,
}

fn normalize_rows(f: &DenseMatrix, g: &[f64]) -> Result<NormalizedRows, ProjectionError> {
    let mut data = Vec::new();
    let mut d = Vec::new();
    let mut kept = Vec::new();
    for (i, &gi) in g.iter().enumerate() {
        let row = f.row(i);
        let norm = norm2(row);
        if !norm.is_finite() || !gi.is_finite() {
            return Err(ProjectionError::NumericalFailure(format!("non-finite cut in row {i}")));
        }
        if norm <= ZERO_ROW {
            if gi < -ROW_TOLERANCE {
                return Err(ProjectionError::EmptyTargetSet);
            }
            continue;
        }
        data.extend(row.iter().map(|v| v / norm));
        d.push(gi / norm);
        kept.push((i, 1.0 / norm));
    }
    let c = DenseMatrix::new(kept.len(), f.cols(), data).map_err(|e| ProjectionError::Dimension(e.to_string()))?;
    Ok(NormalizedRows { c, d, kept })
}

/// Projection through the dual of the reduced problem in the cut
/// multipliers, with the equality multipliers eliminated in closed form.
///
/// Only Gram matrices of the cut and equality rows are formed; no `n × n`
/// matrix appears.
pub fn project_dual(p: &ProjectionProblem) -> Result<Projection, ProjectionError> {
    if p.is_lifted() {
        return Err(ProjectionError::LiftedProblem);
    }
    check_dims(p)?;
    let eq = &p.equalities;
    let rows = normalize_rows(&p.f, &p.g)?;
    let q = rows.kept.len();
    let x_a = eq.project(&p.anchor);
    let mut c_tilde = rows.c.matvec(&x_a);
    axpy(-1.0, &rows.d, &mut c_tilde);

    let mut lambda = vec![0.0; q];
    let mut kkt = 0.0;
    let mut iterations = 0;
    let x_norm = norm2(&x_a);
    for (c, d) in c_tilde.iter_mut().zip(&rows.d) {
        if *c > 0.0 && *c <= rounding_slack(x_norm, *d) {
            *c = 0.0;
        }
    }
    if c_tilde.iter().any(|&v| v > 0.0) {
        let mut s = rows.c.gram();
        if eq.count() > 0 {
            let fa = rows.c.mul_transpose(eq.a()).map_err(|e| ProjectionError::Dimension(e.to_string()))?;
            let y: Vec<Vec<f64>> = (0..q).map(|i| eq.gram_solve(fa.row(i))).collect();
            for i in 0..q {
                for j in i..q {
                    let v = s[(i, j)] - 0.5 * (dot(fa.row(i), &y[j]) + dot(fa.row(j), &y[i]));
                    s[(i, j)] = v;
                    s[(j, i)] = v;
                }
            }
        }
        // The problem is homogeneous in (c̃, λ): solve at unit violation.
        let sigma = c_tilde.iter().fold(0.0f64, |m, &v| m.max(v));
        let c_unit: Vec<f64> = c_tilde.iter().map(|v| v / sigma).collect();
        let sol = active_set::box_dual(&s, &c_unit);
        iterations = sol.iterations;
        lambda = sol.primal;
        kkt = sol.kkt_residual;
        if sol.status != QpStatus::Optimal || !(kkt <= QpOptions::default().tolerance) {
            return match project_primal(p) {
                Err(ProjectionError::EmptyTargetSet) => Err(ProjectionError::EmptyTargetSet),
                _ if sol.status == QpStatus::Infeasible => Err(ProjectionError::EmptyTargetSet),
                _ => Err(ProjectionError::NumericalFailure(format!(
                    "reduced dual stopped at KKT residual {kkt:e} ({:?})",
                    sol.status
                ))),
            };
        }
        lambda.iter_mut().for_each(|l| *l *= sigma);
    }

    let mut w = vec![0.0; p.dim()];
    let mut ineq_duals = vec![0.0; p.f.rows()];
    for (k, &(i, inv_norm)) in rows.kept.iter().enumerate() {
        axpy(lambda[k], rows.c.row(k), &mut w);
        ineq_duals[i] = lambda[k] * inv_norm;
    }
    let mut y = p.anchor.clone();
    axpy(-1.0, &w, &mut y);
    let (x_next, eq_duals) = eq.project_with_multiplier(&y);
    Ok(Projection {
        qp: QpSolution {
            primal: x_next.clone(),
            ineq_duals,
            eq_duals,
            kkt_residual: kkt,
            iterations,
            status: QpStatus::Optimal,
        },
        x_next,
        route: Route::Dual,
    })
}

/// A random feasible instance for cross-checking the two routes, with the
/// feasible point used to build it.
///
/// Dimensions are small; some instances repeat a cut row or have more cuts
/// than variables.
pub fn sample_problem(rng: &mut SeededRng) -> (ProjectionProblem, Vec<f64>) {
    let n = rng.range_inclusive(2, 10);
    let q = rng.range_inclusive(1, 12);
    let p = rng.range_inclusive(0, 5.min(n - 1));
    let x0 = rng.normal_vec(n);
    let mut f = DenseMatrix::new(q, n, rng.normal_vec(q * n)).expect("sized data");
    if q > 1 && rng.uniform() < 0.2 {
        let row = f.row(0).to_vec();
        f.row_mut(q - 1).copy_from_slice(&row);
    }
    let g: Vec<f64> = f.matvec(&x0).iter().map(|v| v + rng.uniform()).collect();
    let a = DenseMatrix::new(p, n, rng.normal_vec(p * n)).expect("sized data");
    let b = a.matvec(&x0);
    let anchor: Vec<f64> = rng.normal_vec(n).iter().map(|v| 3.0 * v).collect();
    let problem = ProjectionProblem {
        f,
        g,
        equalities: Arc::new(EqualityConstraints::new(a, b).expect("random rows are independent")),
        anchor,
        lift: Vec::new(),
    };
    (problem, x0)
}

fn check_dims(p: &ProjectionProblem) -> Result<(), ProjectionError> {
    let n = p.dim();
    if p.f.cols() != n || p.f.rows() != p.g.len() || p.equalities.dim() != n {
        return Err(ProjectionError::Dimension(format!(
            "F is {}x{} with {} levels, anchor in R^{n}",
            p.f.rows(),
            p.f.cols(),
            p.g.len()
        )));
    }
    if p.anchor.iter().any(|v| !v.is_finite()) {
        return Err(ProjectionError::NumericalFailure("non-finite anchor".into()));
    }
    Ok(())
}

/// One inequality of the primal QP, kept in both coordinate systems.
struct PrimalRow {
    /// Coefficients on `(u, t)`.
    reduced: Vec<f64>,
    rhs: f64,
    /// Coefficients on `x`, for recovering multipliers.
    on_x: Vec<f64>,
    /// Original cut row and its inverse norm, for plain rows.
    origin: Option<(usize, f64)>,
}

/// Projection by solving the QP in `x` directly, restricted to the affine
/// subspace `{A x = b}` and lifted with one epigraph scalar per block when a
/// pool has several piecewise blocks.
pub fn project_primal(p: &ProjectionProblem) -> Result<Projection, ProjectionError> {
    check_dims(p)?;
    let n = p.dim();
    let eq = &p.equalities;
    let x_a = eq.project(&p.anchor);
    let basis = if eq.count() > 0 {
        Some(eq.null_basis().ok_or_else(|| {
            ProjectionError::NumericalFailure("equality rows are rank deficient".into())
        })?)
    } else {
        None
    };
    let u_dim = basis.map_or(n, |z| z.rows());
    let t_dim = p.epigraph_count();
    let dim = u_dim + t_dim;
    let reduce = |coeff: &[f64]| match basis {
        Some(z) => z.matvec(coeff),
        None => coeff.to_vec(),
    };

    let rows = normalize_rows(&p.f, &p.g)?;
    let mut qp_rows: Vec<PrimalRow> = Vec::new();
    for (k, &origin) in rows.kept.iter().enumerate() {
        let a = rows.c.row(k);
        let mut reduced = reduce(a);
        reduced.resize(dim, 0.0);
        qp_rows.push(PrimalRow {
            reduced,
            rhs: rows.d[k] - dot(a, &x_a),
            on_x: a.to_vec(),
            origin: Some(origin),
        });
    }
    let mut t0 = u_dim;
    for constraint in &p.lift {
        for (bi, block) in constraint.blocks.iter().enumerate() {
            for cut in &block.cuts {
                let mut reduced = reduce(&cut.coeff);
                reduced.resize(dim, 0.0);
                reduced[t0 + bi] = -1.0;
                qp_rows.push(PrimalRow {
                    reduced,
                    rhs: -cut.offset - dot(&cut.coeff, &x_a),
                    on_x: cut.coeff.clone(),
                    origin: None,
                });
            }
            if block.clip_at_zero {
                let mut reduced = vec![0.0; dim];
                reduced[t0 + bi] = -1.0;
                qp_rows.push(PrimalRow {
                    reduced,
                    rhs: 0.0,
                    on_x: vec![0.0; n],
                    origin: None,
                });
            }
        }
        let mut reduced = reduce(&constraint.affine.coeff);
        reduced.resize(dim, 0.0);
        for (bi, block) in constraint.blocks.iter().enumerate() {
            reduced[t0 + bi] = block.weight;
        }
        qp_rows.push(PrimalRow {
            reduced,
            rhs: constraint.level - constraint.affine.offset - dot(&constraint.affine.coeff, &x_a),
            on_x: constraint.affine.coeff.clone(),
            origin: None,
        });
        t0 += constraint.blocks.len();
    }

    // Rows that vanish on the subspace are constants.
    let mut live = Vec::new();
    for (idx, row) in qp_rows.iter().enumerate() {
        let norm = norm2(&row.reduced);
        if norm <= ZERO_ROW * norm2(&row.on_x).max(1.0) {
            if row.rhs < -ROW_TOLERANCE {
                return Err(ProjectionError::EmptyTargetSet);
            }
        } else {
            live.push((idx, 1.0 / norm));
        }
    }

    let mut ineq_duals = vec![0.0; p.f.rows() + qp_rows.len() - rows.kept.len()];
    let mut x_next = x_a.clone();
    let mut kkt = 0.0;
    let mut iterations = 0;
    // Largest violation at x_a; the QP is homogeneous in it.
    let x_norm = norm2(&x_a);
    let sigma = live
        .iter()
        .map(|&(idx, _)| &qp_rows[idx])
        .filter(|row| row.origin.is_some())
        .map(|row| (-row.rhs, rounding_slack(x_norm, row.rhs + dot(&row.on_x, &x_a))))
        .chain(p.lift.iter().map(|l| (l.value(&x_a) - l.level, rounding_slack(x_norm, l.level))))
        .filter(|(v, slack)| v > slack)
        .fold(0.0f64, |m, (v, _)| m.max(v));
    if !live.is_empty() && dim > 0 && sigma > 0.0 {
        let mut c = DenseMatrix::zeros(live.len(), dim);
        let mut d = Vec::with_capacity(live.len());
        for (r, &(idx, s)) in live.iter().enumerate() {
            for (dst, src) in c.row_mut(r).iter_mut().zip(&qp_rows[idx].reduced) {
                *dst = src * s;
            }
            d.push(qp_rows[idx].rhs * s / sigma);
        }
        let mut h = DenseMatrix::zeros(dim, dim);
        for i in 0..u_dim {
            h[(i, i)] = 1.0;
        }
        let sol = if t_dim == 0 {
            active_set::project_origin(&c, &d)
        } else {
            qp_solve(&h, &vec![0.0; dim], &c, &d, &DenseMatrix::zeros(0, dim), &[], &QpOptions::default())?
        };
        match sol.status {
            QpStatus::Optimal => {}
            QpStatus::Infeasible => return Err(ProjectionError::EmptyTargetSet),
            status => {
                return Err(ProjectionError::NumericalFailure(format!(
                    "primal QP ended with {status:?} at KKT residual {:e}",
                    sol.kkt_residual
                )))
            }
        }
        kkt = sol.kkt_residual;
        iterations = sol.iterations;
        let u: Vec<f64> = sol.primal[..u_dim].iter().map(|v| v * sigma).collect();
        let u = &u[..];
        match basis {
            Some(z) => axpy(1.0, &z.matvec_t(u), &mut x_next),
            None => axpy(1.0, u, &mut x_next),
        }
        let mut extra = p.f.rows();
        let mut lifted_of = vec![usize::MAX; qp_rows.len()];
        for (idx, row) in qp_rows.iter().enumerate() {
            if row.origin.is_none() {
                lifted_of[idx] = extra;
                extra += 1;
            }
        }
        for (r, &(idx, s)) in live.iter().enumerate() {
            let z = sol.ineq_duals[r].max(0.0) * s * sigma;
            match qp_rows[idx].origin {
                Some((i, inv_norm)) => ineq_duals[i] = z * inv_norm,
                None => ineq_duals[lifted_of[idx]] = z,
            }
        }
    }
    // Undo rounding drift off the affine subspace.
    let x_next = eq.project(&x_next);

    // ν from x = anchor − Σ λ_r a_r − Aᵀν.
    let eq_duals = if eq.count() > 0 {
        let mut y = p.anchor.clone();
        axpy(-1.0, &x_next, &mut y);
        let mut dual_idx = 0;
        for row in &qp_rows {
            let lam = match row.origin {
                Some((i, inv_norm)) => ineq_duals[i] / inv_norm,
                None => {
                    let v = ineq_duals[p.f.rows() + dual_idx];
                    dual_idx += 1;
                    v
                }
            };
            if lam != 0.0 {
                axpy(-lam, &row.on_x, &mut y);
            }
        }
        eq.gram_solve(&eq.a().matvec(&y))
    } else {
        Vec::new()
    };

    Ok(Projection {
        qp: QpSolution {
            primal: x_next.clone(),
            ineq_duals,
            eq_duals,
            kkt_residual: kkt,
            iterations,
            status: QpStatus::Optimal,
        },
        x_next,
        route: Route::Primal,
    })
}
