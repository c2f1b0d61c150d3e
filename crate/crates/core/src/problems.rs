//! Seeded test instances: a primal-dual second-order cone feasibility
//! problem, a Lyapunov-type LMI, and `‖x‖₁` as a sharp test function.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::atoms::{soc_project, AffineArg, Atom, AtomError, EigVariant, ExprNode};
use crate::linalg::{self, DenseMatrix, Lu, SymMatrix};
use crate::oracle::Oracle;
use crate::rng::{SeededRng, ALGORITHM_ID};
use crate::solver::{ProblemSpec, SharpnessTestConfig, SolverError};

pub const SCHEMA_VERSION: u32 = 1;
pub const SOCP_GENERATOR: &str = "socp-primal-dual/v1";
pub const LMI_GENERATOR: &str = "lmi-lyapunov/v1";

/// Attempts allowed before giving up on drawing an invertible `F`.
const MAX_LMI_ATTEMPTS: u32 = 16;

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("invalid dimensions: {0}")]
    Dimensions(String),
    #[error(transparent)]
    Atom(#[from] AtomError),
    #[error(transparent)]
    Linalg(#[from] linalg::LinalgError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("no invertible transform found after {0} attempts")]
    Singular(u32),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceMetadata {
    pub schema_version: u32,
    pub generator: String,
    pub rng: String,
    pub seed: u64,
    pub dims: BTreeMap<String, usize>,
    /// Draws of the random transform needed (LMI only; 1 otherwise).
    pub attempts: u32,
    /// 2-norm condition number of the random transform, when there is one.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub condition: Option<f64>,
}

impl InstanceMetadata {
    fn new(generator: &str, seed: u64, dims: &[(&str, usize)]) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            generator: generator.to_string(),
            rng: ALGORITHM_ID.to_string(),
            seed,
            dims: dims.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            attempts: 1,
            condition: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeCertificate {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub s: Vec<f64>,
}

/// Data of `min cᵀu s.t. Au = b, u ∈ K` with `K` a product of second-order
/// cones, plus the primal-dual pair it was built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeProgramInstance {
    pub metadata: InstanceMetadata,
    pub a: DenseMatrix,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub cone_dims: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub certificate: Option<ConeCertificate>,
}

impl ConeProgramInstance {
    pub fn n(&self) -> usize {
        self.c.len()
    }

    pub fn p(&self) -> usize {
        self.b.len()
    }

    fn check(&self) -> Result<(), ProblemError> {
        let (n, p) = (self.n(), self.p());
        if self.a.rows() != p || self.a.cols() != n {
            return Err(ProblemError::Dimensions(format!(
                "A is {}x{}, expected {p}x{n}",
                self.a.rows(),
                self.a.cols()
            )));
        }
        check_cone_dims(n, &self.cone_dims)
    }
}

fn check_cone_dims(n: usize, dims: &[usize]) -> Result<(), ProblemError> {
    if dims.is_empty() || dims.iter().any(|&d| d < 2) {
        return Err(ProblemError::Dimensions(format!("cone dimensions {dims:?} must each be at least 2")));
    }
    let total: usize = dims.iter().sum();
    if total != n {
        return Err(ProblemError::Dimensions(format!("cone dimensions sum to {total}, expected {n}")));
    }
    Ok(())
}

/// Projection onto the product cone; each block's last coordinate is `t`.
pub fn project_product_cone(z: &[f64], dims: &[usize]) -> Vec<f64> {
    let mut out = Vec::with_capacity(z.len());
    let mut start = 0;
    for &d in dims {
        let (s, t) = z[start..start + d].split_at(d - 1);
        let (ps, pt) = soc_project(s, t[0]);
        out.extend(ps);
        out.push(pt);
        start += d;
    }
    out
}

/// Draws, in order: `z ∈ R^n`, `A` row-major, `v ∈ R^p`.
pub fn gen_socp(seed: u64, n: usize, p: usize, cone_dims: &[usize]) -> Result<ConeProgramInstance, ProblemError> {
    check_cone_dims(n, cone_dims)?;
    let mut rng = SeededRng::new(seed);
    let z = rng.normal_vec(n);
    let a = DenseMatrix::new(p, n, rng.normal_vec(p * n))?;
    let v = rng.normal_vec(p);
    let u = project_product_cone(&z, cone_dims);
    let s: Vec<f64> = u.iter().zip(&z).map(|(ui, zi)| ui - zi).collect();
    let b = a.matvec(&u);
    let mut c = a.matvec_t(&v);
    linalg::axpy(1.0, &s, &mut c);
    Ok(ConeProgramInstance {
        metadata: InstanceMetadata::new(SOCP_GENERATOR, seed, &[("n", n), ("p", p), ("l", cone_dims.len())]),
        a,
        b,
        c,
        cone_dims: cone_dims.to_vec(),
        certificate: Some(ConeCertificate { u, v, s }),
    })
}

/// `l` cones of equal dimension `n / l`.
pub fn uniform_cones(n: usize, l: usize) -> Result<Vec<usize>, ProblemError> {
    if l == 0 || n % l != 0 {
        return Err(ProblemError::Dimensions(format!("{n} variables do not split into {l} equal cones")));
    }
    Ok(vec![n / l; l])
}

/// Feasibility problem in `x = (u, v, s) ∈ R^{2n+p}`: cone distances of
/// each `u` block, then of each `s` block, and the equalities
/// `s + Aᵀv = c`, `Au = b`, `−cᵀu + bᵀv = 0`.
pub fn build_pd_feasibility(inst: &ConeProgramInstance) -> Result<ProblemSpec, ProblemError> {
    inst.check()?;
    let (n, p) = (inst.n(), inst.p());
    let dim = 2 * n + p;
    let (v0, s0) = (n, n + p);
    let mut spec = ProblemSpec::feasibility(dim);
    for base in [0, s0] {
        let mut start = base;
        for &d in &inst.cone_dims {
            let dist: Arc<dyn Oracle> = Arc::new(ExprNode::atom(Atom::SocDistance, AffineArg::slice(dim, start, d)));
            spec = spec.with_constraint(dist);
            start += d;
        }
    }
    let mut eq = DenseMatrix::zeros(n + p + 1, dim);
    let mut rhs = Vec::with_capacity(n + p + 1);
    for j in 0..n {
        eq[(j, s0 + j)] = 1.0;
        for i in 0..p {
            eq[(j, v0 + i)] = inst.a[(i, j)];
        }
        rhs.push(inst.c[j]);
    }
    for i in 0..p {
        eq.row_mut(n + i)[..n].copy_from_slice(inst.a.row(i));
        rhs.push(inst.b[i]);
    }
    for j in 0..n {
        eq[(n + p, j)] = -inst.c[j];
    }
    for i in 0..p {
        eq[(n + p, v0 + i)] = inst.b[i];
    }
    rhs.push(0.0);
    Ok(spec.with_equalities(eq, rhs)?)
}

/// `(u, v, s)` stacked as a point of the feasibility problem.
pub fn pd_certificate_point(inst: &ConeProgramInstance) -> Option<Vec<f64>> {
    inst.certificate
        .as_ref()
        .map(|c| c.u.iter().chain(&c.v).chain(&c.s).copied().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmiInstance {
    pub metadata: InstanceMetadata,
    pub order: usize,
    pub matrices: Vec<DenseMatrix>,
    /// A point with `X ⪰ I` and every `A_iᵀX + XA_i ⪯ 0`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub certificate: Option<DenseMatrix>,
}

fn perturbed_seed(seed: u64, attempt: u32) -> u64 {
    seed.wrapping_add(u64::from(attempt).wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

/// Draws, in order: `B_1, C_1, …, B_k, C_k`, then `F`, all row-major. A
/// singular `F` is redrawn from a stream seeded with a perturbed seed.
pub fn gen_lmi(seed: u64, q: usize, k: usize) -> Result<LmiInstance, ProblemError> {
    if q == 0 || k == 0 {
        return Err(ProblemError::Dimensions(format!("need q >= 1 and k >= 1, got q = {q}, k = {k}")));
    }
    let mut rng = SeededRng::new(seed);
    let mut tilde = Vec::with_capacity(k);
    for _ in 0..k {
        let b = DenseMatrix::new(q, q, rng.normal_vec(q * q))?;
        let c = DenseMatrix::new(q, q, rng.normal_vec(q * q))?;
        let mut t = b.gram();
        t.scale(-1.0);
        for i in 0..q {
            for j in 0..q {
                t[(i, j)] += c[(i, j)] - c[(j, i)];
            }
        }
        tilde.push(t);
    }
    let mut attempts = 1;
    let (f, lu) = loop {
        let f = DenseMatrix::new(q, q, rng.normal_vec(q * q))?;
        match Lu::factor(&f) {
            Ok(lu) => break (f, lu),
            Err(_) if attempts < MAX_LMI_ATTEMPTS => {
                rng = SeededRng::new(perturbed_seed(seed, attempts));
                attempts += 1;
            }
            Err(_) => return Err(ProblemError::Singular(attempts)),
        }
    };
    let f_inv = lu.inverse();
    let matrices = tilde
        .iter()
        .map(|t| f_inv.matmul(&t.matmul(&f)?))
        .collect::<Result<Vec<_>, _>>()?;
    let ftf = f.transpose().matmul(&f)?;
    let eig = linalg::sym_eig(&SymMatrix::symmetric_part(&ftf)?)?;
    let (lmax, lmin) = (eig.values[0], *eig.values.last().unwrap());
    let mut x_feas = ftf;
    x_feas.scale(1.0 / lmin);
    let mut metadata = InstanceMetadata::new(LMI_GENERATOR, seed, &[("q", q), ("k", k)]);
    metadata.attempts = attempts;
    metadata.condition = Some((lmax / lmin).sqrt());
    Ok(LmiInstance {
        metadata,
        order: q,
        matrices,
        certificate: Some(x_feas),
    })
}

/// `AᵀX + XA` for symmetric `X`.
pub fn lyapunov(a: &DenseMatrix, x: &SymMatrix) -> Result<SymMatrix, ProblemError> {
    let xa = x.to_dense().matmul(a)?;
    let mut s = xa.transpose();
    for i in 0..s.rows() {
        for j in 0..s.cols() {
            s[(i, j)] += xa[(i, j)];
        }
    }
    Ok(SymMatrix::from_upper(&s)?)
}

/// Feasibility problem in `svec(X)`: `λ_max(I − X) ≤ 0` and
/// `λ_max(A_iᵀX + XA_i) ≤ 0`, each minorized by the top `rank` eigenvectors.
pub fn build_lmi_feasibility(inst: &LmiInstance, rank: usize) -> Result<ProblemSpec, ProblemError> {
    let q = inst.order;
    if rank == 0 || rank > q {
        return Err(ProblemError::Dimensions(format!("eigen minorant rank {rank} outside 1..={q}")));
    }
    if inst.matrices.iter().any(|a| a.rows() != q || a.cols() != q) {
        return Err(ProblemError::Dimensions(format!("every A_i must be {q}x{q}")));
    }
    let n = linalg::packed_len(q);
    let atom = Atom::MaxEig(EigVariant::Diag { rank });
    let mut neg = DenseMatrix::identity(n);
    neg.scale(-1.0);
    let lower: Arc<dyn Oracle> = Arc::new(ExprNode::atom(
        atom,
        AffineArg::Map {
            matrix: neg,
            offset: SymMatrix::identity(q).svec(),
        },
    ));
    let mut spec = ProblemSpec::feasibility(n).with_constraint(lower);
    for a in &inst.matrices {
        let arg = AffineArg::symmetric_map(q, |x| lyapunov(a, x).expect("square operands"), None)?;
        let c: Arc<dyn Oracle> = Arc::new(ExprNode::atom(atom, arg));
        spec = spec.with_constraint(c);
    }
    Ok(spec)
}

/// `minimize ‖x‖₁` with `f★ = 0`; sharp with `μ = 1` and Lipschitz with
/// `G = √n`.
pub fn gen_sharp_l1(n: usize) -> Result<(ProblemSpec, SharpnessTestConfig), ProblemError> {
    if n == 0 {
        return Err(ProblemError::Dimensions("n must be at least 1".into()));
    }
    let f: Arc<dyn Oracle> = Arc::new(ExprNode::atom(Atom::Norm1, AffineArg::identity(n)));
    Ok((ProblemSpec::minimize(f, 0.0), SharpnessTestConfig::new(1.0, (n as f64).sqrt())?))
}

/// A generated instance as written to disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Instance {
    Socp(ConeProgramInstance),
    Lmi(LmiInstance),
}

impl Instance {
    pub fn metadata(&self) -> &InstanceMetadata {
        match self {
            Instance::Socp(i) => &i.metadata,
            Instance::Lmi(i) => &i.metadata,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atoms::soc_distance;
    use crate::linalg::{dot, norm_inf};
    use crate::solver::violation;

    fn cone_dist(x: &[f64], dims: &[usize]) -> f64 {
        let mut start = 0;
        let mut worst: f64 = 0.0;
        for &d in dims {
            let (s, t) = x[start..start + d].split_at(d - 1);
            worst = worst.max(soc_distance(s, t[0]));
            start += d;
        }
        worst
    }

    #[test]
    fn socp_certificate_identities() {
        for seed in 0..20 {
            let inst = gen_socp(seed, 40, 15, &uniform_cones(40, 4).unwrap()).unwrap();
            let cert = inst.certificate.as_ref().unwrap();
            let scale = 1.0 + norm_inf(&cert.u) * norm_inf(&cert.s);
            assert!(dot(&cert.s, &cert.u).abs() <= 1e-9 * scale);
            let (cu, bv) = (dot(&inst.c, &cert.u), dot(&inst.b, &cert.v));
            assert!((cu - bv).abs() <= 1e-9 * (1.0 + cu.abs().max(bv.abs())));
            assert!(cone_dist(&cert.u, &inst.cone_dims) <= 1e-10);
            assert!(cone_dist(&cert.s, &inst.cone_dims) <= 1e-10);
        }
    }

    #[test]
    fn socp_is_deterministic() {
        let a = gen_socp(7, 20, 5, &[10, 10]).unwrap();
        let b = gen_socp(7, 20, 5, &[10, 10]).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert_ne!(a, gen_socp(8, 20, 5, &[10, 10]).unwrap());
    }

    #[test]
    fn socp_full_scale_dims_accepted() {
        let inst = gen_socp(1, 500, 200, &uniform_cones(500, 10).unwrap()).unwrap();
        assert_eq!(inst.a.rows(), 200);
        assert_eq!(inst.cone_dims, vec![50; 10]);
    }

    #[test]
    fn socp_rejects_bad_cones() {
        assert!(gen_socp(1, 10, 2, &[5, 4]).is_err());
        assert!(gen_socp(1, 10, 2, &[9, 1]).is_err());
    }

    #[test]
    fn pd_feasibility_examples() {
        let inst = gen_socp(3, 20, 6, &[10, 10]).unwrap();
        let spec = build_pd_feasibility(&inst).unwrap();
        assert_eq!(spec.constraints.len(), 4);
        assert_eq!(spec.dim, 46);
        assert_eq!(spec.equalities.count(), 27);
        let x = pd_certificate_point(&inst).unwrap();
        assert!(violation(&spec, &x).unwrap() <= 1e-9);
        assert_eq!(violation(&spec, &vec![0.0; 46]).unwrap(), f64::INFINITY);
    }

    #[test]
    fn lmi_construction_identities() {
        for seed in 0..20 {
            let inst = gen_lmi(seed, 6, 3).unwrap();
            let x = SymMatrix::symmetric_part(inst.certificate.as_ref().unwrap()).unwrap();
            let mut i_minus_x = SymMatrix::identity(6);
            for r in 0..6 {
                for c in r..6 {
                    i_minus_x.set(r, c, i_minus_x.get(r, c) - x.get(r, c));
                }
            }
            assert!(linalg::sym_eig(&i_minus_x).unwrap().values[0] <= 1e-8);
            for a in &inst.matrices {
                let l = lyapunov(a, &x).unwrap();
                assert!(linalg::sym_eig(&l).unwrap().values[0] <= 1e-8);
            }
        }
    }

    #[test]
    fn tilde_matrices_have_nonpositive_symmetric_part() {
        // Rebuild Ã_1 = F A_1 F⁻¹ and check Ãᵀ + Ã ⪯ 0.
        let inst = gen_lmi(11, 5, 2).unwrap();
        let mut rng = SeededRng::new(11);
        for _ in 0..4 {
            rng.normal_vec(25);
        }
        let f = DenseMatrix::new(5, 5, rng.normal_vec(25)).unwrap();
        let f_inv = Lu::factor(&f).unwrap().inverse();
        let t = f.matmul(&inst.matrices[0].matmul(&f_inv).unwrap()).unwrap();
        let l = lyapunov(&t, &SymMatrix::identity(5)).unwrap();
        assert!(linalg::sym_eig(&l).unwrap().values[0] <= 1e-8);
    }

    #[test]
    fn lmi_spec_examples() {
        let inst = gen_lmi(2, 4, 3).unwrap();
        let spec = build_lmi_feasibility(&inst, 2).unwrap();
        assert_eq!(spec.dim, 10);
        assert_eq!(spec.constraints.len(), 4);
        let x = SymMatrix::symmetric_part(inst.certificate.as_ref().unwrap()).unwrap().svec();
        assert!(violation(&spec, &x).unwrap() <= 1e-8);
        let zero = vec![0.0; 10];
        assert!((spec.constraints[0].value(&zero).unwrap() - 1.0).abs() < 1e-12);
        let two_i = SymMatrix::from_diag(&[2.0; 4]).svec();
        assert!((spec.constraints[0].value(&two_i).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn lmi_full_scale_dims() {
        let inst = gen_lmi(0, 20, 10).unwrap();
        let spec = build_lmi_feasibility(&inst, 2).unwrap();
        assert_eq!(spec.dim, 210);
        assert_eq!(spec.constraints.len(), 11);
    }

    #[test]
    fn lmi_rejects_bad_rank() {
        let inst = gen_lmi(2, 3, 1).unwrap();
        assert!(build_lmi_feasibility(&inst, 0).is_err());
        assert!(build_lmi_feasibility(&inst, 4).is_err());
    }

    #[test]
    fn sharp_l1_examples() {
        let (spec, sharp) = gen_sharp_l1(3).unwrap();
        let f = spec.objective.as_ref().unwrap();
        assert_eq!(f.value(&[1.0, 0.0, 0.0]).unwrap(), 1.0);
        let pool = f.minorant(&[1.0, -2.0, 0.0]).unwrap();
        assert_eq!(pool.linearize(&[1.0, -2.0, 0.0]).coeff, vec![1.0, -1.0, 0.0]);
        assert_eq!(sharp.mu, 1.0);
        assert!((sharp.lipschitz - 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn instance_json_round_trip() {
        let inst = Instance::Lmi(gen_lmi(4, 3, 2).unwrap());
        let text = serde_json::to_string(&inst).unwrap();
        assert!(text.contains("\"kind\":\"lmi\""));
        let back: Instance = serde_json::from_str(&text).unwrap();
        assert_eq!(back, inst);
    }
}
