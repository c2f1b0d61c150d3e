//! Convex atoms, a small disciplined-convex expression tree, and minorant
//! construction by replacing each atom with subgradient cuts.
//!
//! Every atom takes an affine argument `y = G x + h` (or a contiguous slice of
//! `x`), so the composition rule only has to be checked at weighted-sum and
//! max nodes. Cuts are built in the atom's argument space and pulled back to
//! `x` through the affine map.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, dot, norm2, DenseMatrix, LinalgError, SymMatrix};
use crate::minorant::{AffineCut, CutBlock, CutPool, MinorantError};
use crate::oracle::{Oracle, OracleError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AtomError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Minorant(#[from] MinorantError),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("expression is not DCP-convex: {0}")]
    NotDcp(DcpViolation),
}

/// Affine argument of an atom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AffineArg {
    /// `y = x[start .. start + len]`, with `x ∈ R^input_dim`.
    Slice {
        input_dim: usize,
        start: usize,
        len: usize,
    },
    /// `y = matrix · x + offset`.
    Map { matrix: DenseMatrix, offset: Vec<f64> },
}

impl AffineArg {
    pub fn slice(input_dim: usize, start: usize, len: usize) -> Self {
        Self::Slice {
            input_dim,
            start,
            len,
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::slice(dim, 0, dim)
    }

    /// Matrix representation of `x ↦ svec(L(smat(x)) + C)` for a linear map
    /// `L` on symmetric `order × order` matrices.
    pub fn symmetric_map(
        order: usize,
        map: impl Fn(&SymMatrix) -> SymMatrix,
        constant: Option<&SymMatrix>,
    ) -> Result<Self, AtomError> {
        let n = linalg::packed_len(order);
        let mut matrix = DenseMatrix::zeros(n, n);
        let mut basis = vec![0.0; n];
        for j in 0..n {
            basis[j] = 1.0;
            let image = map(&SymMatrix::smat(&basis)?).svec();
            basis[j] = 0.0;
            if image.len() != n {
                return Err(AtomError::Dimension(format!(
                    "symmetric map of order {order} produced {} coordinates",
                    image.len()
                )));
            }
            for (i, v) in image.into_iter().enumerate() {
                matrix[(i, j)] = v;
            }
        }
        let offset = match constant {
            Some(c) if c.dim() == order => c.svec(),
            Some(c) => {
                return Err(AtomError::Dimension(format!(
                    "constant of order {} for map of order {order}",
                    c.dim()
                )))
            }
            None => vec![0.0; n],
        };
        Ok(Self::Map { matrix, offset })
    }

    pub fn input_dim(&self) -> usize {
        match self {
            Self::Slice { input_dim, .. } => *input_dim,
            Self::Map { matrix, .. } => matrix.cols(),
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            Self::Slice { len, .. } => *len,
            Self::Map { matrix, .. } => matrix.rows(),
        }
    }

    fn check(&self) -> Result<(), String> {
        match self {
            Self::Slice {
                input_dim,
                start,
                len,
            } if start + len > *input_dim => Err(format!(
                "slice {start}..{} exceeds input dimension {input_dim}",
                start + len
            )),
            Self::Map { matrix, offset } if offset.len() != matrix.rows() => Err(format!(
                "offset of length {} for a map with {} outputs",
                offset.len(),
                matrix.rows()
            )),
            _ => Ok(()),
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Self::Slice { start, len, .. } => x[*start..start + len].to_vec(),
            Self::Map { matrix, offset } => {
                let mut y = matrix.matvec(x);
                linalg::axpy(1.0, offset, &mut y);
                y
            }
        }
    }

    /// Pulls the affine function `y ↦ w·y + c` back to `x`.
    pub fn pullback(&self, w: &[f64], c: f64) -> AffineCut {
        match self {
            Self::Slice {
                input_dim, start, ..
            } => {
                let mut coeff = vec![0.0; *input_dim];
                coeff[*start..start + w.len()].copy_from_slice(w);
                AffineCut {
                    coeff,
                    offset: c,
                    birth_iter: 0,
                }
            }
            Self::Map { matrix, offset } => AffineCut {
                coeff: matrix.matvec_t(w),
                offset: c + dot(w, offset),
                birth_iter: 0,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EigVariant {
    /// One cut `vᵀ X v` from a top eigenvector.
    SingleVector,
    /// Cuts `v_jᵀ X v_j` for the top `rank` eigenvectors; their maximum is
    /// `max diag(Vᵀ X V)`.
    Diag { rank: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Atom {
    /// Euclidean distance from `(s, t)` to the second-order cone
    /// `{‖s‖₂ ≤ t}`, with `t` the last coordinate.
    SocDistance,
    /// Largest eigenvalue of `smat(y)`.
    MaxEig(EigVariant),
    Norm2,
    Norm1,
    NormInf,
}

impl Atom {
    pub fn is_nonnegative(&self) -> bool {
        !matches!(self, Atom::MaxEig(_))
    }

    fn check_arg_dim(&self, d: usize) -> Result<(), String> {
        match self {
            Atom::SocDistance if d < 2 => Err(format!("cone argument of dimension {d} < 2")),
            Atom::MaxEig(_) if linalg::dim_from_packed_len(d).map_or(true, |q| q == 0) => {
                Err(format!("{d} is not the svec length of a nonempty symmetric matrix"))
            }
            Atom::MaxEig(EigVariant::Diag { rank: 0 }) => Err("eigen minorant rank 0".into()),
            _ => Ok(()),
        }
    }

    pub fn value(&self, y: &[f64]) -> Result<f64, AtomError> {
        Ok(match self {
            Atom::SocDistance => {
                let (s, t) = split_cone(y);
                soc_distance(s, t)
            }
            Atom::MaxEig(_) => linalg::sym_eig(&SymMatrix::smat(y)?)?.values[0],
            Atom::Norm2 => norm2(y),
            Atom::Norm1 => y.iter().map(|v| v.abs()).sum(),
            Atom::NormInf => linalg::norm_inf(y),
        })
    }

    /// Value at `y` and cuts `y' ↦ w·y' + c` in argument space whose maximum
    /// is a minorant of the atom at `y`.
    pub fn local_cuts(&self, y: &[f64]) -> Result<(f64, Vec<(Vec<f64>, f64)>), AtomError> {
        let with_subgradient = |value: f64, g: Vec<f64>| {
            let c = value - dot(&g, y);
            (value, vec![(g, c)])
        };
        Ok(match self {
            Atom::SocDistance => {
                let (s, t) = split_cone(y);
                let (d, g) = soc_dist_subgrad(s, t);
                with_subgradient(d, g)
            }
            Atom::MaxEig(variant) => {
                let eig = linalg::sym_eig(&SymMatrix::smat(y)?)?;
                let rank = match variant {
                    EigVariant::SingleVector => 1,
                    EigVariant::Diag { rank } => (*rank).min(eig.values.len()),
                };
                let cuts = (0..rank).map(|j| (outer_svec(&eig.vector(j)), 0.0)).collect();
                (eig.values[0], cuts)
            }
            Atom::Norm2 => {
                let v = norm2(y);
                let g = if v > 0.0 { y.iter().map(|c| c / v).collect() } else { vec![0.0; y.len()] };
                with_subgradient(v, g)
            }
            Atom::Norm1 => {
                let g = y.iter().map(|&c| sign(c)).collect();
                with_subgradient(y.iter().map(|c| c.abs()).sum(), g)
            }
            Atom::NormInf => {
                let mut g = vec![0.0; y.len()];
                let v = linalg::norm_inf(y);
                if v > 0.0 {
                    if let Some(i) = y.iter().position(|c| c.abs() == v) {
                        g[i] = sign(y[i]);
                    }
                }
                with_subgradient(v, g)
            }
        })
    }
}

/// Sign with `sign(0) = 0`.
fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn split_cone(y: &[f64]) -> (&[f64], f64) {
    let (s, t) = y.split_at(y.len() - 1);
    (s, t[0])
}

/// `svec(v vᵀ)`, so that `svec(v vᵀ)·svec(X) = vᵀ X v`.
pub fn outer_svec(v: &[f64]) -> Vec<f64> {
    let q = v.len();
    let mut out = Vec::with_capacity(linalg::packed_len(q));
    for i in 0..q {
        for j in i..q {
            let p = v[i] * v[j];
            out.push(if i == j { p } else { std::f64::consts::SQRT_2 * p });
        }
    }
    out
}

/// Euclidean projection of `(s, t)` onto the second-order cone.
pub fn soc_project(s: &[f64], t: f64) -> (Vec<f64>, f64) {
    let ns = norm2(s);
    if ns <= t {
        (s.to_vec(), t)
    } else if ns <= -t {
        (vec![0.0; s.len()], 0.0)
    } else {
        let a = 0.5 * (ns + t);
        (s.iter().map(|v| a * v / ns).collect(), a)
    }
}

pub fn soc_distance(s: &[f64], t: f64) -> f64 {
    let ns = norm2(s);
    if ns <= t {
        0.0
    } else if ns <= -t {
        (ns * ns + t * t).sqrt()
    } else {
        (ns - t) / std::f64::consts::SQRT_2
    }
}

/// Distance to the second-order cone and a subgradient, packed as `(s, t)`.
pub fn soc_dist_subgrad(s: &[f64], t: f64) -> (f64, Vec<f64>) {
    let ns = norm2(s);
    let mut g = vec![0.0; s.len() + 1];
    if ns <= t {
        return (0.0, g);
    }
    let d = soc_distance(s, t);
    if ns <= -t {
        for (gi, si) in g.iter_mut().zip(s) {
            *gi = si / d;
        }
        g[s.len()] = t / d;
    } else {
        // Unit normal at the boundary projection, free of cancellation.
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for (gi, si) in g.iter_mut().zip(s) {
            *gi = h * si / ns;
        }
        g[s.len()] = -h;
    }
    (d, g)
}

/// Value of `λ_max` at `L(smat(x))` and the pulled-back eigenvector cuts.
pub fn maxeig_minorant(
    variant: EigVariant,
    arg: &AffineArg,
    x: &[f64],
) -> Result<(f64, Vec<AffineCut>), AtomError> {
    let atom = Atom::MaxEig(variant);
    atom.check_arg_dim(arg.output_dim()).map_err(AtomError::Dimension)?;
    let (value, local) = atom.local_cuts(&arg.apply(x))?;
    let cuts = local.iter().map(|(w, c)| arg.pullback(w, *c)).collect();
    Ok((value, cuts))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Curvature {
    Affine,
    Convex,
    Concave,
    Unknown,
}

impl Curvature {
    fn negate(self) -> Self {
        match self {
            Self::Convex => Self::Concave,
            Self::Concave => Self::Convex,
            other => other,
        }
    }

    fn add(self, other: Self) -> Self {
        use Curvature::*;
        match (self, other) {
            (Unknown, _) | (_, Unknown) => Unknown,
            (Affine, c) | (c, Affine) => c,
            (a, b) if a == b => a,
            _ => Unknown,
        }
    }

    pub fn is_convex(self) -> bool {
        matches!(self, Self::Affine | Self::Convex)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Nonnegative,
    Nonpositive,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Monotonicity {
    Nondecreasing,
    Nonincreasing,
    None,
}

/// Where and why an expression fails the composition rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DcpViolation {
    /// Child indices from the root to the offending node.
    pub path: Vec<usize>,
    pub reason: String,
}

impl fmt::Display for DcpViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "node {:?}: {}", self.path, self.reason)
    }
}

/// Expression tree over `x ∈ R^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ExprNode {
    /// `coeff·x + offset`
    Affine { coeff: Vec<f64>, offset: f64 },
    Atom { atom: Atom, arg: AffineArg },
    /// `Σ weight_i · child_i`
    WeightedSum(Vec<(f64, ExprNode)>),
    Max(Vec<ExprNode>),
}

impl ExprNode {
    pub fn affine(coeff: Vec<f64>, offset: f64) -> Self {
        Self::Affine { coeff, offset }
    }

    pub fn atom(atom: Atom, arg: AffineArg) -> Self {
        Self::Atom { atom, arg }
    }

    pub fn dim(&self) -> Option<usize> {
        match self {
            Self::Affine { coeff, .. } => Some(coeff.len()),
            Self::Atom { arg, .. } => Some(arg.input_dim()),
            Self::WeightedSum(terms) => terms.first().and_then(|(_, c)| c.dim()),
            Self::Max(children) => children.first().and_then(ExprNode::dim),
        }
    }

    fn children(&self) -> Vec<&ExprNode> {
        match self {
            Self::WeightedSum(terms) => terms.iter().map(|(_, c)| c).collect(),
            Self::Max(children) => children.iter().collect(),
            _ => Vec::new(),
        }
    }

    /// Curvature implied by the composition rule; `Unknown` if the rule fails
    /// here or below.
    pub fn curvature(&self) -> Curvature {
        match self {
            Self::Affine { .. } => Curvature::Affine,
            Self::Atom { .. } => Curvature::Convex,
            Self::WeightedSum(terms) => terms.iter().fold(Curvature::Affine, |acc, (w, child)| {
                let c = child.curvature();
                let term = if c == Curvature::Affine || *w == 0.0 {
                    Curvature::Affine
                } else if *w > 0.0 {
                    c
                } else {
                    c.negate()
                };
                acc.add(term)
            }),
            Self::Max(children) => {
                if children.iter().all(|c| c.curvature().is_convex()) {
                    if children.iter().all(|c| c.curvature() == Curvature::Affine) && children.len() == 1 {
                        Curvature::Affine
                    } else {
                        Curvature::Convex
                    }
                } else {
                    Curvature::Unknown
                }
            }
        }
    }

    pub fn sign(&self) -> Sign {
        match self {
            Self::Affine { coeff, offset } if coeff.iter().all(|&c| c == 0.0) => {
                if *offset >= 0.0 {
                    Sign::Nonnegative
                } else {
                    Sign::Nonpositive
                }
            }
            Self::Affine { .. } => Sign::Unknown,
            Self::Atom { atom, .. } if atom.is_nonnegative() => Sign::Nonnegative,
            Self::Atom { .. } => Sign::Unknown,
            Self::WeightedSum(terms) => {
                let signs: Vec<Sign> = terms
                    .iter()
                    .map(|(w, c)| match (c.sign(), *w >= 0.0) {
                        (Sign::Nonnegative, true) | (Sign::Nonpositive, false) => Sign::Nonnegative,
                        (Sign::Nonpositive, true) | (Sign::Nonnegative, false) => Sign::Nonpositive,
                        _ => Sign::Unknown,
                    })
                    .collect();
                if signs.iter().all(|s| *s == Sign::Nonnegative) {
                    Sign::Nonnegative
                } else if signs.iter().all(|s| *s == Sign::Nonpositive) {
                    Sign::Nonpositive
                } else {
                    Sign::Unknown
                }
            }
            Self::Max(children) => {
                if children.iter().any(|c| c.sign() == Sign::Nonnegative) {
                    Sign::Nonnegative
                } else if children.iter().all(|c| c.sign() == Sign::Nonpositive) {
                    Sign::Nonpositive
                } else {
                    Sign::Unknown
                }
            }
        }
    }

    /// Monotonicity of this node's operator in argument `i`.
    pub fn monotonicity(&self, i: usize) -> Monotonicity {
        match self {
            Self::WeightedSum(terms) => match terms.get(i) {
                Some((w, _)) if *w >= 0.0 => Monotonicity::Nondecreasing,
                Some(_) => Monotonicity::Nonincreasing,
                None => Monotonicity::None,
            },
            Self::Max(_) => Monotonicity::Nondecreasing,
            _ => Monotonicity::None,
        }
    }

    pub fn value(&self, x: &[f64]) -> Result<f64, AtomError> {
        match self {
            Self::Affine { coeff, offset } => Ok(dot(coeff, x) + offset),
            Self::Atom { atom, arg } => atom.value(&arg.apply(x)),
            Self::WeightedSum(terms) => terms.iter().try_fold(0.0, |acc, (w, c)| Ok(acc + w * c.value(x)?)),
            Self::Max(children) => children
                .iter()
                .try_fold(f64::NEG_INFINITY, |acc, c| Ok(acc.max(c.value(x)?))),
        }
    }
}

/// Checks the composition rule at every node and that the root is convex.
pub fn dcp_verify(root: &ExprNode) -> Result<(), DcpViolation> {
    let dim = root.dim().ok_or_else(|| DcpViolation {
        path: Vec::new(),
        reason: "empty expression".into(),
    })?;
    let mut path = Vec::new();
    verify_node(root, dim, &mut path)?;
    if !root.curvature().is_convex() {
        return Err(DcpViolation {
            path: Vec::new(),
            reason: format!("root expression is {:?}, not convex", root.curvature()),
        });
    }
    Ok(())
}

fn verify_node(node: &ExprNode, dim: usize, path: &mut Vec<usize>) -> Result<(), DcpViolation> {
    let fail = |path: &Vec<usize>, reason: String| DcpViolation {
        path: path.clone(),
        reason,
    };
    match node {
        ExprNode::Affine { coeff, offset } => {
            if coeff.len() != dim {
                return Err(fail(path, format!("affine leaf of dimension {}", coeff.len())));
            }
            if !offset.is_finite() || coeff.iter().any(|c| !c.is_finite()) {
                return Err(fail(path, "non-finite affine data".into()));
            }
        }
        ExprNode::Atom { atom, arg } => {
            arg.check().map_err(|r| fail(path, r))?;
            if arg.input_dim() != dim {
                return Err(fail(path, format!("atom argument over dimension {}", arg.input_dim())));
            }
            atom.check_arg_dim(arg.output_dim()).map_err(|r| fail(path, r))?;
        }
        ExprNode::WeightedSum(_) | ExprNode::Max(_) => {
            let children = node.children();
            if children.is_empty() {
                return Err(fail(path, "operator without arguments".into()));
            }
            for (i, child) in children.iter().enumerate() {
                path.push(i);
                verify_node(child, dim, path)?;
                path.pop();
            }
            for (i, child) in children.iter().enumerate() {
                if let ExprNode::WeightedSum(terms) = node {
                    if !terms[i].0.is_finite() {
                        return Err(fail(path, format!("non-finite weight on argument {i}")));
                    }
                }
                let c = child.curvature();
                let convex_ok = match (c, node.monotonicity(i)) {
                    (Curvature::Affine, _) => true,
                    (Curvature::Convex, Monotonicity::Nondecreasing) => true,
                    (Curvature::Concave, Monotonicity::Nonincreasing) => true,
                    _ => false,
                };
                let concave_ok = match (c, node.monotonicity(i)) {
                    (Curvature::Affine, _) => true,
                    (Curvature::Concave, Monotonicity::Nondecreasing) => true,
                    (Curvature::Convex, Monotonicity::Nonincreasing) => true,
                    _ => false,
                };
                let is_max = matches!(node, ExprNode::Max(_));
                if !convex_ok && (is_max || !concave_ok) {
                    return Err(fail(
                        path,
                        format!("argument {i} is {c:?} but the operator is {:?} in it", node.monotonicity(i)),
                    ));
                }
            }
            if node.curvature() == Curvature::Unknown {
                return Err(fail(path, "sum mixes convex and concave terms".into()));
            }
        }
    }
    Ok(())
}

struct MinorantBuilder<'a> {
    z: &'a [f64],
    affine: AffineCut,
    has_affine: bool,
    blocks: Vec<CutBlock>,
}

impl<'a> MinorantBuilder<'a> {
    fn new(z: &'a [f64]) -> Self {
        Self {
            z,
            affine: AffineCut::constant(z.len(), 0.0),
            has_affine: false,
            blocks: Vec::new(),
        }
    }

    fn visit(&mut self, node: &ExprNode, scale: f64) -> Result<(), AtomError> {
        let not_dcp = |reason: &str| {
            AtomError::NotDcp(DcpViolation {
                path: Vec::new(),
                reason: reason.into(),
            })
        };
        match node {
            ExprNode::Affine { coeff, offset } => {
                linalg::axpy(scale, coeff, &mut self.affine.coeff);
                self.affine.offset += scale * offset;
                self.has_affine = true;
            }
            ExprNode::Atom { atom, arg } => {
                if scale < 0.0 {
                    return Err(not_dcp("convex atom under a negative weight"));
                }
                if scale > 0.0 {
                    let (_, local) = atom.local_cuts(&arg.apply(self.z))?;
                    let cuts = local.iter().map(|(w, c)| arg.pullback(w, *c)).collect();
                    self.blocks
                        .push(CutBlock::with_cuts(scale, atom.is_nonnegative(), cuts)?);
                }
            }
            ExprNode::WeightedSum(terms) => {
                for (w, child) in terms {
                    self.visit(child, scale * w)?;
                }
            }
            ExprNode::Max(children) => {
                if scale < 0.0 {
                    return Err(not_dcp("max under a negative weight"));
                }
                if scale > 0.0 {
                    let mut cuts = Vec::new();
                    for child in children {
                        let mut sub = MinorantBuilder::new(self.z);
                        sub.visit(child, 1.0)?;
                        cuts.extend(sub.into_max_cuts());
                    }
                    self.blocks.push(CutBlock::with_cuts(scale, false, cuts)?);
                }
            }
        }
        Ok(())
    }

    /// Expresses the built minorant as a maximum of affine cuts: exactly when
    /// it has at most one block, otherwise by its linearization at the anchor.
    fn into_max_cuts(self) -> Vec<AffineCut> {
        let affine = self.affine;
        match self.blocks.len() {
            0 => vec![affine],
            1 => {
                let b = &self.blocks[0];
                let shift = |c: &AffineCut| {
                    let mut out = c.scaled(b.weight);
                    linalg::axpy(1.0, &affine.coeff, &mut out.coeff);
                    out.offset += affine.offset;
                    out
                };
                let mut cuts: Vec<AffineCut> = b.cuts.iter().map(shift).collect();
                if b.clip_at_zero {
                    cuts.push(affine.clone());
                }
                cuts
            }
            _ => {
                let pool = CutPool::from_blocks(self.z.len(), self.blocks, f64::NAN)
                    .expect("cuts built over the anchor dimension");
                let mut lin = pool.linearize(self.z);
                linalg::axpy(1.0, &affine.coeff, &mut lin.coeff);
                lin.offset += affine.offset;
                vec![lin]
            }
        }
    }

    fn into_blocks(self) -> Vec<CutBlock> {
        let mut blocks = Vec::with_capacity(self.blocks.len() + 1);
        if self.has_affine {
            blocks.push(CutBlock {
                weight: 1.0,
                cuts: vec![self.affine],
                clip_at_zero: false,
            });
        }
        blocks.extend(self.blocks);
        blocks
    }
}

/// Minorant of a DCP-convex expression at `z`: weighted atoms become blocks of
/// subgradient cuts (clipped at zero for nonnegative atoms), affine leaves are
/// collected into one exact block, and max nodes merge their arguments' cuts
/// into a single block.
pub fn dcp_minorant(root: &ExprNode, z: &[f64]) -> Result<CutPool, AtomError> {
    dcp_verify(root).map_err(AtomError::NotDcp)?;
    let dim = root.dim().unwrap_or(0);
    if z.len() != dim {
        return Err(AtomError::Dimension(format!("anchor of length {} for dimension {dim}", z.len())));
    }
    let value = root.value(z)?;
    let mut builder = MinorantBuilder::new(z);
    builder.visit(root, 1.0)?;
    Ok(CutPool::from_blocks(dim, builder.into_blocks(), value)?)
}

impl Oracle for ExprNode {
    fn dim(&self) -> usize {
        ExprNode::dim(self).unwrap_or(0)
    }

    fn value(&self, x: &[f64]) -> Result<f64, OracleError> {
        Ok(ExprNode::value(self, x)?)
    }

    fn minorant(&self, z: &[f64]) -> Result<CutPool, OracleError> {
        Ok(dcp_minorant(self, z)?)
    }
}
