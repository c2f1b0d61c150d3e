//! Dual active-set solver for projection problems with an identity Hessian.
//!
//! Both entry points solve `min ½‖u‖² s.t. Cu ≤ d` by adding violated rows one
//! at a time and dropping rows whose multiplier would turn negative, in the
//! manner of Goldfarb and Idnani. [`project_origin`] works on the rows
//! directly with an orthonormal basis of the active rows; [`box_dual`] only
//! sees the Gram matrix `S = CCᵀ` and the violations `c = -d`, which makes it
//! a solver for `min ½λᵀSλ − cᵀλ, λ ≥ 0`.

use super::qp::{QpSolution, QpStatus};
use crate::linalg::{axpy, dot, norm_inf, DenseMatrix};

enum Rows<'a> {
    Primal { c: &'a DenseMatrix, d: &'a [f64] },
    Gram { s: &'a DenseMatrix, c: &'a [f64] },
}

impl Rows<'_> {
    fn len(&self) -> usize {
        match self {
            Rows::Primal { d, .. } => d.len(),
            Rows::Gram { c, .. } => c.len(),
        }
    }

    fn rhs(&self, i: usize) -> f64 {
        match self {
            Rows::Primal { d, .. } => d[i],
            Rows::Gram { c, .. } => c[i],
        }
    }

    fn sq_norm(&self, i: usize) -> f64 {
        match self {
            Rows::Primal { c, .. } => dot(c.row(i), c.row(i)),
            Rows::Gram { s, .. } => s[(i, i)],
        }
    }

    /// Threshold on the squared orthogonal part below which a row counts as
    /// dependent on the active rows.
    fn dependence(&self) -> f64 {
        match self {
            Rows::Primal { .. } => 1e-20,
            Rows::Gram { .. } => 1e-14,
        }
    }

    /// Row violations `(Cu − d)` at `u = −Cᵀλ`, and `‖u‖`.
    fn violations(&self, lambda: &[f64]) -> (Vec<f64>, f64) {
        match self {
            Rows::Primal { c, d } => {
                let u: Vec<f64> = c.matvec_t(lambda).iter().map(|v| -v).collect();
                let cu = c.matvec(&u);
                let v = cu.iter().zip(d.iter()).map(|(a, b)| a - b).collect();
                (v, dot(&u, &u).sqrt())
            }
            Rows::Gram { s, c } => {
                let sl = s.matvec(lambda);
                let u2 = dot(lambda, &sl).max(0.0);
                (c.iter().zip(&sl).map(|(a, b)| a - b).collect(), u2.sqrt())
            }
        }
    }
}

/// `R` factor (by columns) of the active rows, plus the orthonormal basis on
/// the primal side.
struct Factor {
    r: Vec<Vec<f64>>,
    q: Vec<Vec<f64>>,
}

struct Split {
    /// Coordinates of the new row in the active basis.
    h: Vec<f64>,
    /// Orthogonal part, primal side only.
    z: Vec<f64>,
    zz: f64,
}

impl Factor {
    fn split(&self, rows: &Rows, active: &[usize], p: usize) -> Split {
        match rows {
            Rows::Primal { c, .. } => {
                let mut z = c.row(p).to_vec();
                let mut h = vec![0.0; self.q.len()];
                for _ in 0..2 {
                    for (hj, qj) in h.iter_mut().zip(&self.q) {
                        let a = dot(qj, &z);
                        axpy(-a, qj, &mut z);
                        *hj += a;
                    }
                }
                let zz = dot(&z, &z);
                Split { h, z, zz }
            }
            Rows::Gram { s, .. } => {
                // Forward substitution with Rᵀ.
                let mut h = vec![0.0; active.len()];
                for j in 0..active.len() {
                    let col = &self.r[j];
                    let acc = s[(active[j], p)] - dot(&col[..j], &h[..j]);
                    h[j] = acc / col[j];
                }
                let zz = s[(p, p)] - dot(&h, &h);
                Split { h, z: Vec::new(), zz }
            }
        }
    }

    fn append(&mut self, split: Split) {
        let norm = split.zz.max(f64::MIN_POSITIVE).sqrt();
        if !split.z.is_empty() {
            self.q.push(split.z.iter().map(|v| v / norm).collect());
        }
        let mut col = split.h;
        col.push(norm);
        self.r.push(col);
    }

    fn rebuild(&mut self, rows: &Rows, active: &[usize]) {
        self.r.clear();
        self.q.clear();
        for (j, &i) in active.iter().enumerate() {
            let split = self.split(rows, &active[..j], i);
            self.append(split);
        }
    }

    /// Solves `R x = h` by back substitution.
    fn back_solve(&self, h: &[f64]) -> Vec<f64> {
        let k = h.len();
        let mut x = h.to_vec();
        for j in (0..k).rev() {
            x[j] /= self.r[j][j];
            let xj = x[j];
            for (i, xi) in x.iter_mut().enumerate().take(j) {
                *xi -= self.r[j][i] * xj;
            }
        }
        x
    }
}

fn solve(rows: Rows) -> (Vec<f64>, usize, QpStatus) {
    let q = rows.len();
    let mut lambda = vec![0.0; q];
    let mut active: Vec<usize> = Vec::new();
    let mut factor = Factor { r: Vec::new(), q: Vec::new() };
    let limit = 50 * q + 1000;
    let mut iterations = 0;
    loop {
        let (v, u_norm) = rows.violations(&lambda);
        let candidate = (0..q)
            .filter(|i| !active.contains(i))
            .map(|i| (i, v[i] - 1e-12 * (1.0 + u_norm + rows.rhs(i).abs())))
            .filter(|&(_, excess)| excess > 0.0)
            .max_by(|a, b| a.1.total_cmp(&b.1));
        let Some((p, _)) = candidate else {
            return (lambda, iterations, QpStatus::Optimal);
        };
        let mut vp = v[p];
        loop {
            iterations += 1;
            if iterations > limit {
                return (lambda, iterations, QpStatus::IterationLimit);
            }
            let split = factor.split(&rows, &active, p);
            let r = factor.back_solve(&split.h);
            let mut block: Option<(usize, f64)> = None;
            for (idx, &rj) in r.iter().enumerate() {
                if rj > 1e-14 {
                    let t = lambda[active[idx]] / rj;
                    if block.is_none_or(|(_, best)| t < best) {
                        block = Some((idx, t));
                    }
                }
            }
            let dependent = split.zz <= rows.dependence() * rows.sq_norm(p).max(f64::MIN_POSITIVE);
            let full = if dependent { f64::INFINITY } else { vp / split.zz };
            let partial = block.map_or(f64::INFINITY, |(_, t)| t);
            if !full.is_finite() && !partial.is_finite() {
                return (lambda, iterations, QpStatus::Infeasible);
            }
            let t = full.min(partial);
            for (&i, &rj) in active.iter().zip(&r) {
                lambda[i] = (lambda[i] - t * rj).max(0.0);
            }
            lambda[p] += t;
            if full <= partial {
                factor.append(split);
                active.push(p);
                break;
            }
            let (k, _) = block.expect("partial step has a blocking row");
            if !dependent {
                vp -= t * split.zz;
            }
            lambda[active[k]] = 0.0;
            active.remove(k);
            factor.rebuild(&rows, &active);
        }
    }
}

/// Natural residual `max(v⁺, min(λ, |v|))`, which does not grow with `λ`.
fn kkt(v: &[f64], lambda: &[f64], scale: f64) -> f64 {
    let worst = v
        .iter()
        .zip(lambda)
        .fold(0.0f64, |m, (vi, li)| m.max(*vi).max(-li).max(li.min(vi.abs())));
    worst / scale
}

/// Minimizes `½‖u‖²` subject to `Cu ≤ d`.
///
/// `primal` holds `u` and `ineq_duals` the multipliers, so `u = −Cᵀλ`.
pub fn project_origin(c: &DenseMatrix, d: &[f64]) -> QpSolution {
    let rows = Rows::Primal { c, d };
    let (lambda, iterations, status) = solve(rows);
    let u: Vec<f64> = c.matvec_t(&lambda).iter().map(|v| -v).collect();
    let v: Vec<f64> = c.matvec(&u).iter().zip(d).map(|(a, b)| a - b).collect();
    QpSolution {
        kkt_residual: kkt(&v, &lambda, 1.0 + norm_inf(d)),
        primal: u,
        ineq_duals: lambda,
        eq_duals: Vec::new(),
        iterations,
        status,
    }
}

/// Minimizes `½λᵀSλ − cᵀλ` over `λ ≥ 0` for a positive semidefinite `S`.
///
/// `primal` holds `λ`; `ineq_duals` holds the reduced gradient `Sλ − c`.
pub fn box_dual(s: &DenseMatrix, c: &[f64]) -> QpSolution {
    let (lambda, iterations, status) = solve(Rows::Gram { s, c });
    let mut g = s.matvec(&lambda);
    axpy(-1.0, c, &mut g);
    let v: Vec<f64> = g.iter().map(|x| -x).collect();
    QpSolution {
        kkt_residual: kkt(&v, &lambda, 1.0 + norm_inf(c)),
        primal: lambda,
        ineq_duals: g,
        eq_duals: Vec::new(),
        iterations,
        status,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;

    #[test]
    fn single_halfspace() {
        let c = DenseMatrix::new(1, 2, vec![1.0, 0.0]).unwrap();
        let sol = project_origin(&c, &[-2.0]);
        assert_eq!(sol.status, QpStatus::Optimal);
        assert!((sol.primal[0] + 2.0).abs() < 1e-15 && sol.primal[1].abs() < 1e-15);
        assert!((sol.ineq_duals[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn parallel_rows_are_dropped() {
        // x ≤ -1 then x ≤ -2: the first row leaves the active set.
        let c = DenseMatrix::new(2, 1, vec![1.0, 1.0]).unwrap();
        let sol = project_origin(&c, &[-1.0, -2.0]);
        assert_eq!(sol.status, QpStatus::Optimal);
        assert!((sol.primal[0] + 2.0).abs() < 1e-14);
        assert_eq!(sol.ineq_duals[0], 0.0);
    }

    #[test]
    fn detects_infeasibility() {
        let c = DenseMatrix::new(2, 1, vec![1.0, -1.0]).unwrap();
        assert_eq!(project_origin(&c, &[-1.0, -1.0]).status, QpStatus::Infeasible);
        let s = c.gram();
        assert_eq!(box_dual(&s, &[1.0, 1.0]).status, QpStatus::Infeasible);
    }

    #[test]
    fn both_forms_agree_with_qp_solver() {
        let mut rng = SeededRng::new(17);
        for _ in 0..40 {
            let n = 2 + (rng.next_u64() % 8) as usize;
            let m = 1 + (rng.next_u64() % 12) as usize;
            let data: Vec<f64> = (0..m * n).map(|_| rng.normal()).collect();
            let c = DenseMatrix::new(m, n, data).unwrap();
            let x0 = rng.normal_vec(n);
            let d: Vec<f64> = c.matvec(&x0).iter().map(|v| v + rng.normal().abs()).collect();
            let primal = project_origin(&c, &d);
            assert_eq!(primal.status, QpStatus::Optimal);
            assert!(primal.kkt_residual < 1e-8, "{}", primal.kkt_residual);

            let neg_d: Vec<f64> = d.iter().map(|v| -v).collect();
            let dual = box_dual(&c.gram(), &neg_d);
            assert_eq!(dual.status, QpStatus::Optimal);
            let u: Vec<f64> = c.matvec_t(&dual.primal).iter().map(|v| -v).collect();

            let reference = super::super::qp_solve(
                &DenseMatrix::identity(n),
                &vec![0.0; n],
                &c,
                &d,
                &DenseMatrix::zeros(0, n),
                &[],
                &Default::default(),
            )
            .unwrap();
            for i in 0..n {
                assert!((primal.primal[i] - reference.primal[i]).abs() < 1e-7);
                assert!((u[i] - reference.primal[i]).abs() < 1e-7);
            }
        }
    }
}
