//! Dense convex QP solver: primal-dual interior point method with
//! Mehrotra predictor-corrector steps.
//!
//! Solves
//!
//! ```text
//! minimize    ½ xᵀ H x + fᵀ x
//! subject to  C x ≤ d,  E x = e
//! ```
//!
//! with `H` positive semidefinite. Each iteration factors the reduced matrix
//! `H + Cᵀ W C` (plus a tiny diagonal shift) by Cholesky and eliminates the
//! equality multipliers through the Schur complement `E K⁻¹ Eᵀ`.

use serde::Serialize;
use thiserror::Error;

use crate::linalg::{axpy, dot, norm_inf, Cholesky, DenseMatrix, Lu};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QpError {
    #[error("QP dimension mismatch: {0}")]
    Dimension(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum QpStatus {
    Optimal,
    /// A Farkas ray certifies that the constraints admit no point.
    Infeasible,
    IterationLimit,
    NumericalFailure,
}

#[derive(Debug, Clone, Serialize)]
pub struct QpSolution {
    pub primal: Vec<f64>,
    pub ineq_duals: Vec<f64>,
    pub eq_duals: Vec<f64>,
    /// Largest of the stationarity, primal feasibility, dual feasibility and
    /// complementarity residuals (∞-norms), divided by `1 + data norm`.
    pub kkt_residual: f64,
    pub iterations: usize,
    pub status: QpStatus,
}

impl QpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == QpStatus::Optimal
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QpOptions {
    pub max_iterations: usize,
    /// Residual at or below which the result is reported optimal.
    pub tolerance: f64,
    /// Residual at which iteration stops early.
    pub target: f64,
    /// Margin a Farkas ray must exhibit before infeasibility is declared.
    pub infeasibility_margin: f64,
    /// Re-solve on the final active set as an equality-constrained QP.
    pub polish: bool,
}

impl Default for QpOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            tolerance: 1e-8,
            target: 1e-13,
            infeasibility_margin: 1e-6,
            polish: true,
        }
    }
}

struct Problem<'a> {
    h: &'a DenseMatrix,
    f: &'a [f64],
    c: &'a DenseMatrix,
    d: &'a [f64],
    e_mat: &'a DenseMatrix,
    e: &'a [f64],
    /// Nonzero pattern of each inequality row.
    c_rows: Vec<Vec<(usize, f64)>>,
    scale: f64,
}

impl Problem<'_> {
    fn n(&self) -> usize {
        self.f.len()
    }

    fn mi(&self) -> usize {
        self.d.len()
    }

    fn me(&self) -> usize {
        self.e.len()
    }

    fn c_times(&self, x: &[f64]) -> Vec<f64> {
        self.c_rows
            .iter()
            .map(|row| row.iter().map(|&(j, v)| v * x[j]).sum())
            .collect()
    }

    fn c_t_times(&self, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        for (row, &zi) in self.c_rows.iter().zip(z) {
            if zi != 0.0 {
                for &(j, v) in row {
                    out[j] += v * zi;
                }
            }
        }
        out
    }

    /// Unscaled residual components at `(x, z, y)`.
    fn residuals(&self, x: &[f64], z: &[f64], y: &[f64]) -> Residuals {
        let mut stat = self.h.matvec(x);
        axpy(1.0, self.f, &mut stat);
        axpy(1.0, &self.c_t_times(z), &mut stat);
        if self.me() > 0 {
            axpy(1.0, &self.e_mat.matvec_t(y), &mut stat);
        }
        let cx = self.c_times(x);
        let mut primal: f64 = 0.0;
        let mut comp: f64 = 0.0;
        for i in 0..self.mi() {
            let slack = self.d[i] - cx[i];
            primal = primal.max(-slack);
            comp = comp.max((z[i] * slack).abs());
        }
        if self.me() > 0 {
            let ex = self.e_mat.matvec(x);
            for (a, b) in ex.iter().zip(self.e) {
                primal = primal.max((a - b).abs());
            }
        }
        let dual = z.iter().fold(0.0f64, |m, &v| m.max(-v));
        Residuals {
            stationarity: norm_inf(&stat),
            primal,
            dual,
            complementarity: comp,
        }
    }

    fn kkt(&self, x: &[f64], z: &[f64], y: &[f64]) -> f64 {
        let r = self.residuals(x, z, y);
        r.stationarity.max(r.primal).max(r.dual).max(r.complementarity) / self.scale
    }

    /// Farkas test: `Cᵀz + Eᵀy ≈ 0`, `z ≥ 0`, `dᵀz + eᵀy < 0` after
    /// normalizing the multipliers.
    fn certifies_infeasible(&self, z: &[f64], y: &[f64], margin: f64) -> bool {
        let norm = norm_inf(z).max(norm_inf(y));
        if !(norm > 1e6 * self.scale) {
            return false;
        }
        let zn: Vec<f64> = z.iter().map(|v| v.max(0.0) / norm).collect();
        let yn: Vec<f64> = y.iter().map(|v| v / norm).collect();
        let mut ray = self.c_t_times(&zn);
        if self.me() > 0 {
            axpy(1.0, &self.e_mat.matvec_t(&yn), &mut ray);
        }
        let gap = dot(self.d, &zn) + dot(self.e, &yn);
        norm_inf(&ray) <= 1e-9 * self.scale && gap < -margin
    }
}

struct Residuals {
    stationarity: f64,
    primal: f64,
    dual: f64,
    complementarity: f64,
}

/// Factorization of the Newton system for one interior-point iteration.
struct NewtonSystem {
    k: Cholesky,
    /// `K⁻¹ Eᵀ`, column per equality row.
    k_inv_et: Vec<Vec<f64>>,
    schur: Option<Cholesky>,
}

impl NewtonSystem {
    fn factor(p: &Problem, w: &[f64]) -> Option<Self> {
        let n = p.n();
        let mut k = p.h.clone();
        for (row, &wi) in p.c_rows.iter().zip(w) {
            for &(a, va) in row {
                let s = wi * va;
                for &(b, vb) in row {
                    k[(a, b)] += s * vb;
                }
            }
        }
        let diag_max = (0..n).fold(0.0f64, |m, i| m.max(k[(i, i)].abs())).max(1.0);
        let mut shift = 1e-14 * diag_max;
        let chol = loop {
            let mut ks = k.clone();
            for i in 0..n {
                ks[(i, i)] += shift;
            }
            match Cholesky::factor(&ks) {
                Ok(c) => break c,
                Err(_) if shift < 1e-4 * diag_max => shift *= 100.0,
                Err(_) => return None,
            }
        };
        let me = p.me();
        if me == 0 {
            return Some(Self {
                k: chol,
                k_inv_et: Vec::new(),
                schur: None,
            });
        }
        let k_inv_et: Vec<Vec<f64>> = (0..me).map(|i| chol.solve(p.e_mat.row(i))).collect();
        let mut s = DenseMatrix::zeros(me, me);
        for i in 0..me {
            for j in i..me {
                let v = dot(p.e_mat.row(i), &k_inv_et[j]);
                s[(i, j)] = v;
                s[(j, i)] = v;
            }
        }
        let s_max = (0..me).fold(0.0f64, |m, i| m.max(s[(i, i)].abs())).max(f64::MIN_POSITIVE);
        let mut shift = 0.0;
        let schur = loop {
            let mut ss = s.clone();
            for i in 0..me {
                ss[(i, i)] += shift;
            }
            match Cholesky::factor(&ss) {
                Ok(c) => break c,
                Err(_) if shift == 0.0 => shift = 1e-14 * s_max,
                Err(_) if shift < 1e-6 * s_max => shift *= 100.0,
                Err(_) => return None,
            }
        };
        Some(Self {
            k: chol,
            k_inv_et,
            schur: Some(schur),
        })
    }

    /// Solves `K dx + Eᵀ dy = rx`, `E dx = re`.
    fn solve(&self, p: &Problem, rx: &[f64], re: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let k_inv_rx = self.k.solve(rx);
        match &self.schur {
            None => (k_inv_rx, Vec::new()),
            Some(schur) => {
                let rhs: Vec<f64> = (0..p.me())
                    .map(|i| dot(p.e_mat.row(i), &k_inv_rx) - re[i])
                    .collect();
                let dy = schur.solve(&rhs);
                let mut dx = k_inv_rx;
                for (col, &dyi) in self.k_inv_et.iter().zip(&dy) {
                    axpy(-dyi, col, &mut dx);
                }
                (dx, dy)
            }
        }
    }
}

fn max_step(v: &[f64], dv: &[f64]) -> f64 {
    v.iter()
        .zip(dv)
        .filter(|(_, &d)| d < 0.0)
        .map(|(&x, &d)| -x / d)
        .fold(1.0, f64::min)
}

/// Solves the convex QP `min ½xᵀHx + fᵀx s.t. Cx ≤ d, Ex = e`.
///
/// Use a `0 × n` matrix for an absent constraint family. A solution is always
/// returned; inspect `status` for failure.
pub fn qp_solve(
    h: &DenseMatrix,
    f: &[f64],
    c_ineq: &DenseMatrix,
    d: &[f64],
    c_eq: &DenseMatrix,
    e: &[f64],
    opts: &QpOptions,
) -> Result<QpSolution, QpError> {
    let n = f.len();
    if h.rows() != n || h.cols() != n {
        return Err(QpError::Dimension(format!("H is {}x{}, expected {n}x{n}", h.rows(), h.cols())));
    }
    if c_ineq.cols() != n || c_ineq.rows() != d.len() {
        return Err(QpError::Dimension(format!(
            "inequalities {}x{} with {} right-hand sides",
            c_ineq.rows(),
            c_ineq.cols(),
            d.len()
        )));
    }
    if c_eq.cols() != n || c_eq.rows() != e.len() {
        return Err(QpError::Dimension(format!(
            "equalities {}x{} with {} right-hand sides",
            c_eq.rows(),
            c_eq.cols(),
            e.len()
        )));
    }
    let c_rows: Vec<Vec<(usize, f64)>> = (0..c_ineq.rows())
        .map(|i| {
            c_ineq
                .row(i)
                .iter()
                .enumerate()
                .filter(|(_, &v)| v != 0.0)
                .map(|(j, &v)| (j, v))
                .collect()
        })
        .collect();
    let scale = 1.0
        + [h.max_abs(), norm_inf(f), c_ineq.max_abs(), norm_inf(d), c_eq.max_abs(), norm_inf(e)]
            .into_iter()
            .fold(0.0, f64::max);
    let p = Problem {
        h,
        f,
        c: c_ineq,
        d,
        e_mat: c_eq,
        e,
        c_rows,
        scale,
    };
    let _ = p.c;
    Ok(interior_point(&p, opts))
}

fn interior_point(p: &Problem, opts: &QpOptions) -> QpSolution {
    let (n, mi, me) = (p.n(), p.mi(), p.me());

    // Starting point: solve the KKT system with unit weights, then shift the
    // slacks into the positive orthant.
    let ones = vec![1.0; mi];
    let Some(sys) = NewtonSystem::factor(p, &ones) else {
        return failed(n, mi, me, QpStatus::NumericalFailure, 0);
    };
    let mut rhs = p.c_t_times(d_owned(p).as_slice());
    for (r, fi) in rhs.iter_mut().zip(p.f) {
        *r -= fi;
    }
    let (mut x, mut y) = sys.solve(p, &rhs, p.e);
    let cx = p.c_times(&x);
    let mut s: Vec<f64> = p.d.iter().zip(&cx).map(|(d, c)| d - c).collect();
    let shift = s.iter().fold(0.0f64, |m, &v| m.max(-v));
    s.iter_mut().for_each(|v| *v = (*v + shift).max(0.0) + 1.0);
    let mut z = vec![1.0; mi];

    let mut best = (f64::INFINITY, x.clone(), z.clone(), y.clone());
    let mut iterations = 0;
    let mut stall = 0;

    loop {
        let kkt = p.kkt(&x, &z, &y);
        if kkt < best.0 {
            if kkt < 0.5 * best.0 {
                stall = 0;
            } else {
                stall += 1;
            }
            best = (kkt, x.clone(), z.clone(), y.clone());
        } else {
            stall += 1;
        }
        if kkt <= opts.target || iterations >= opts.max_iterations || (stall >= 8 && best.0 <= opts.tolerance) {
            break;
        }
        if p.certifies_infeasible(&z, &y, opts.infeasibility_margin) {
            return QpSolution {
                primal: x,
                ineq_duals: z,
                eq_duals: y,
                kkt_residual: kkt,
                iterations,
                status: QpStatus::Infeasible,
            };
        }
        iterations += 1;

        // rd = Hx + f + Cᵀz + Eᵀy, re = Ex − e, ri = Cx + s − d
        let mut rd = p.h.matvec(&x);
        axpy(1.0, p.f, &mut rd);
        axpy(1.0, &p.c_t_times(&z), &mut rd);
        let re: Vec<f64> = if me > 0 {
            p.e_mat.matvec(&x).iter().zip(p.e).map(|(a, b)| a - b).collect()
        } else {
            Vec::new()
        };
        if me > 0 {
            axpy(1.0, &p.e_mat.matvec_t(&y), &mut rd);
        }
        let cx = p.c_times(&x);
        let ri: Vec<f64> = (0..mi).map(|i| cx[i] + s[i] - p.d[i]).collect();
        let mu = if mi > 0 { dot(&s, &z) / mi as f64 } else { 0.0 };

        let w: Vec<f64> = z.iter().zip(&s).map(|(zi, si)| zi / si).collect();
        let Some(sys) = NewtonSystem::factor(p, &w) else {
            break;
        };
        let neg_re: Vec<f64> = re.iter().map(|v| -v).collect();

        // Direction for complementarity right-hand side rc (target s∘z = −rc + s∘z).
        let direction = |rc: &[f64]| {
            // dz = W C dx + (Z ri − rc)/s
            let tmp: Vec<f64> = (0..mi).map(|i| (z[i] * ri[i] - rc[i]) / s[i]).collect();
            let mut rx: Vec<f64> = rd.iter().map(|v| -v).collect();
            axpy(-1.0, &p.c_t_times(&tmp), &mut rx);
            let (dx, dy) = sys.solve(p, &rx, &neg_re);
            let cdx = p.c_times(&dx);
            let dz: Vec<f64> = (0..mi).map(|i| w[i] * cdx[i] + tmp[i]).collect();
            let ds: Vec<f64> = (0..mi).map(|i| -ri[i] - cdx[i]).collect();
            (dx, dy, dz, ds)
        };

        if mi == 0 {
            let (dx, dy, _, _) = direction(&[]);
            axpy(1.0, &dx, &mut x);
            axpy(1.0, &dy, &mut y);
            continue;
        }

        let rc_aff: Vec<f64> = s.iter().zip(&z).map(|(a, b)| a * b).collect();
        let (_, _, dz_a, ds_a) = direction(&rc_aff);
        let alpha_aff = max_step(&s, &ds_a).min(max_step(&z, &dz_a));
        let mu_aff = (0..mi)
            .map(|i| (s[i] + alpha_aff * ds_a[i]) * (z[i] + alpha_aff * dz_a[i]))
            .sum::<f64>()
            / mi as f64;
        let sigma = if mu > 0.0 { (mu_aff / mu).clamp(0.0, 1.0).powi(3) } else { 0.0 };
        let rc: Vec<f64> = (0..mi)
            .map(|i| s[i] * z[i] + ds_a[i] * dz_a[i] - sigma * mu)
            .collect();
        let (dx, dy, dz, ds) = direction(&rc);
        let alpha = (0.995 * max_step(&s, &ds).min(max_step(&z, &dz))).min(1.0);
        if !(alpha > 0.0) || dx.iter().any(|v| !v.is_finite()) {
            break;
        }
        axpy(alpha, &dx, &mut x);
        axpy(alpha, &dy, &mut y);
        axpy(alpha, &dz, &mut z);
        axpy(alpha, &ds, &mut s);
        for v in s.iter_mut().chain(z.iter_mut()) {
            *v = v.max(1e-300);
        }
    }

    let (mut kkt, mut x, mut z, mut y) = best;
    if opts.polish && kkt.is_finite() {
        if let Some((px, pz, py)) = polish(p, &x, &z) {
            let pk = p.kkt(&px, &pz, &py);
            if pk <= kkt {
                (kkt, x, z, y) = (pk, px, pz, py);
            }
        }
    }
    let status = if kkt <= opts.tolerance {
        QpStatus::Optimal
    } else if iterations >= opts.max_iterations {
        QpStatus::IterationLimit
    } else {
        QpStatus::NumericalFailure
    };
    QpSolution {
        primal: x,
        ineq_duals: z,
        eq_duals: y,
        kkt_residual: kkt,
        iterations,
        status,
    }
}

/// Solves the KKT system with the rows whose multiplier exceeds their slack
/// held as equalities.
fn polish(p: &Problem, x: &[f64], z: &[f64]) -> Option<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let (n, me) = (p.n(), p.me());
    let cx = p.c_times(x);
    let active: Vec<usize> = (0..p.mi()).filter(|&i| z[i] > p.d[i] - cx[i]).collect();
    let size = n + active.len() + me;
    let mut kkt = DenseMatrix::zeros(size, size);
    let mut rhs = vec![0.0; size];
    for i in 0..n {
        kkt.row_mut(i)[..n].copy_from_slice(p.h.row(i));
        rhs[i] = -p.f[i];
    }
    for (a, &i) in active.iter().enumerate() {
        for &(j, v) in &p.c_rows[i] {
            kkt[(n + a, j)] = v;
            kkt[(j, n + a)] = v;
        }
        rhs[n + a] = p.d[i];
    }
    for k in 0..me {
        let r = n + active.len() + k;
        for (j, &v) in p.e_mat.row(k).iter().enumerate() {
            kkt[(r, j)] = v;
            kkt[(j, r)] = v;
        }
        rhs[r] = p.e[k];
    }
    let sol = Lu::factor(&kkt).ok()?.solve(&rhs);
    if sol.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let zmax = norm_inf(z).max(1.0);
    let mut pz = vec![0.0; p.mi()];
    for (a, &i) in active.iter().enumerate() {
        let v = sol[n + a];
        if v < -1e-12 * zmax {
            return None;
        }
        pz[i] = v.max(0.0);
    }
    Some((sol[..n].to_vec(), pz, sol[n + active.len()..].to_vec()))
}

fn d_owned(p: &Problem) -> Vec<f64> {
    p.d.to_vec()
}

fn failed(n: usize, mi: usize, me: usize, status: QpStatus, iterations: usize) -> QpSolution {
    QpSolution {
        primal: vec![0.0; n],
        ineq_duals: vec![0.0; mi],
        eq_duals: vec![0.0; me],
        kkt_residual: f64::INFINITY,
        iterations,
        status,
    }
}
