//! Dense real linear algebra: vectors as slices, row-major matrices, packed
//! symmetric matrices with isometric vectorization, Cholesky and LU
//! factorizations, and a cyclic Jacobi symmetric eigensolver.

use std::f64::consts::SQRT_2;
use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix is not positive definite (pivot {index} = {pivot:e})")]
    NotSpd { index: usize, pivot: f64 },
    #[error("matrix is singular to working precision (pivot {index})")]
    Singular { index: usize },
    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error("non-finite entry in input")]
    NonFinite,
}

pub type Result<T> = std::result::Result<T, LinalgError>;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(LinalgError::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diag(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = x;
        }
        m
    }

    /// Builds a matrix from rows; an empty slice gives a 0x`cols` matrix.
    pub fn from_rows(rows: &[Vec<f64>], cols: usize) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(LinalgError::Dimension(format!(
                    "row {i} has {} entries, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// `A x`
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "matvec dimension mismatch");
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `Aᵀ y`
    pub fn matvec_t(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.rows, "matvec_t dimension mismatch");
        let mut out = vec![0.0; self.cols];
        for (i, &yi) in y.iter().enumerate() {
            if yi != 0.0 {
                axpy(yi, self.row(i), &mut out);
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(LinalgError::Dimension(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a != 0.0 {
                    axpy(a, other.row(k), out_row);
                }
            }
        }
        Ok(out)
    }

    /// `A Bᵀ` without forming the transpose; rows of both operands are the
    /// vectors being paired, so this is the cross-Gram matrix.
    pub fn mul_transpose(&self, other: &Self) -> Result<Self> {
        if self.cols != other.cols {
            return Err(LinalgError::Dimension(format!(
                "{}x{} times ({}x{})ᵀ",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.rows);
        for i in 0..self.rows {
            for j in 0..other.rows {
                out[(i, j)] = dot(self.row(i), other.row(j));
            }
        }
        Ok(out)
    }

    /// `A Aᵀ`, exploiting symmetry.
    pub fn gram(&self) -> Self {
        let n = self.rows;
        let mut out = Self::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = dot(self.row(i), self.row(j));
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        out
    }

    pub fn scale(&mut self, alpha: f64) {
        self.data.iter_mut().for_each(|x| *x *= alpha);
    }

    pub fn frobenius(&self) -> f64 {
        norm2(&self.data)
    }

    pub fn max_abs(&self) -> f64 {
        norm_inf(&self.data)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl TryFrom<Vec<Vec<f64>>> for DenseMatrix {
    type Error = LinalgError;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        Self::from_rows(&rows, cols)
    }
}

impl From<DenseMatrix> for Vec<Vec<f64>> {
    fn from(m: DenseMatrix) -> Self {
        m.to_rows()
    }
}

/// Lower-triangular Cholesky factor `M = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: DenseMatrix,
}

impl Cholesky {
    pub fn factor(m: &DenseMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(LinalgError::Dimension("Cholesky of non-square matrix".into()));
        }
        let n = m.rows();
        let mut l = DenseMatrix::zeros(n, n);
        for j in 0..n {
            let mut d = m[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(LinalgError::NotSpd { index: j, pivot: d });
            }
            let d = d.sqrt();
            l[(j, j)] = d;
            for i in (j + 1)..n {
                let s = m[(i, j)] - dot(&l.row(i)[..j], &l.row(j)[..j]);
                l[(i, j)] = s / d;
            }
        }
        Ok(Self { l })
    }

    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.dim();
        assert_eq!(x.len(), n, "Cholesky solve dimension mismatch");
        for i in 0..n {
            let s = x[i] - dot(&self.l.row(i)[..i], &x[..i]);
            x[i] = s / self.l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (i + 1)..n {
                s -= self.l[(k, i)] * x[k];
            }
            x[i] = s / self.l[(i, i)];
        }
    }
}

/// Solves `M x = rhs` for symmetric positive definite `M`.
pub fn spd_solve(m: &DenseMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    if rhs.len() != m.rows() {
        return Err(LinalgError::Dimension(format!(
            "rhs of length {} for a {}x{} system",
            rhs.len(),
            m.rows(),
            m.cols()
        )));
    }
    Ok(Cholesky::factor(m)?.solve(rhs))
}

/// Orthonormal basis of the null space of a full-row-rank `A` (p×n),
/// returned as the rows of an `(n − p) × n` matrix.
///
/// Uses Householder QR of `Aᵀ`; fails with `Singular` when `A` is rank
/// deficient.
pub fn null_space_basis(a: &DenseMatrix) -> Result<DenseMatrix> {
    let (p, n) = (a.rows(), a.cols());
    if p > n {
        return Err(LinalgError::Dimension(format!("{p} rows exceed {n} columns")));
    }
    // Columns of Aᵀ are rows of A; reflect them in place.
    let mut cols: Vec<Vec<f64>> = (0..p).map(|i| a.row(i).to_vec()).collect();
    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(p);
    let scale = a.max_abs();
    for k in 0..p {
        let x = &cols[k][k..];
        let alpha = norm2(x);
        if !(alpha > 1e-12 * scale * (n as f64).sqrt()) {
            return Err(LinalgError::Singular { index: k });
        }
        let mut v = x.to_vec();
        v[0] += if x[0] >= 0.0 { alpha } else { -alpha };
        let vn = norm2(&v);
        v.iter_mut().for_each(|e| *e /= vn);
        for col in cols.iter_mut().skip(k) {
            let tail = &mut col[k..];
            let s = 2.0 * dot(&v, tail);
            axpy(-s, &v, tail);
        }
        reflectors.push(v);
    }
    let mut basis = DenseMatrix::zeros(n - p, n);
    for j in p..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        for (k, v) in reflectors.iter().enumerate().rev() {
            let tail = &mut e[k..];
            let s = 2.0 * dot(v, tail);
            axpy(-s, v, tail);
        }
        basis.row_mut(j - p).copy_from_slice(&e);
    }
    Ok(basis)
}

/// LU factorization with partial pivoting, `P A = L U`.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: DenseMatrix,
    perm: Vec<usize>,
}

impl Lu {
    pub fn factor(a: &DenseMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(LinalgError::Dimension("LU of non-square matrix".into()));
        }
        let n = a.rows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.max_abs().max(f64::MIN_POSITIVE);
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold((k, -1.0), |best, c| if c.1 > best.1 { c } else { best });
            if pmax <= 1e-14 * scale {
                return Err(LinalgError::Singular { index: k });
            }
            if p != k {
                for j in 0..n {
                    lu.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = lu[(k, k)];
            for i in (k + 1)..n {
                let f = lu[(i, k)] / pivot;
                lu[(i, k)] = f;
                if f != 0.0 {
                    for j in (k + 1)..n {
                        lu[(i, j)] -= f * lu[(k, j)];
                    }
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.lu.rows();
        let mut x: Vec<f64> = self.perm.iter().map(|&p| rhs[p]).collect();
        for i in 0..n {
            let s = dot(&self.lu.row(i)[..i], &x[..i]);
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s = dot(&self.lu.row(i)[i + 1..], &x[i + 1..]);
            x[i] = (x[i] - s) / self.lu[(i, i)];
        }
        x
    }

    pub fn inverse(&self) -> DenseMatrix {
        let n = self.lu.rows();
        let mut inv = DenseMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|x| *x = 0.0);
            e[j] = 1.0;
            let col = self.solve(&e);
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        inv
    }
}

/// Symmetric matrix stored as its packed upper triangle, row by row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymMatrix {
    dim: usize,
    packed: Vec<f64>,
}

pub fn packed_len(dim: usize) -> usize {
    dim * (dim + 1) / 2
}

/// Inverse of [`packed_len`], if `len` is a triangular number.
pub fn dim_from_packed_len(len: usize) -> Option<usize> {
    let q = ((((8 * len + 1) as f64).sqrt() - 1.0) / 2.0).round() as usize;
    (packed_len(q) == len).then_some(q)
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            packed: vec![0.0; packed_len(dim)],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut s = Self::zeros(dim);
        for i in 0..dim {
            s.set(i, i, 1.0);
        }
        s
    }

    pub fn from_diag(d: &[f64]) -> Self {
        let mut s = Self::zeros(d.len());
        for (i, &x) in d.iter().enumerate() {
            s.set(i, i, x);
        }
        s
    }

    /// Reads the upper triangle of a square matrix; the lower triangle is
    /// ignored.
    pub fn from_upper(m: &DenseMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(LinalgError::Dimension("symmetric matrix must be square".into()));
        }
        let mut s = Self::zeros(m.rows());
        for i in 0..m.rows() {
            for j in i..m.cols() {
                s.set(i, j, m[(i, j)]);
            }
        }
        Ok(s)
    }

    /// `(M + Mᵀ)/2`
    pub fn symmetric_part(m: &DenseMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(LinalgError::Dimension("symmetric matrix must be square".into()));
        }
        let mut s = Self::zeros(m.rows());
        for i in 0..m.rows() {
            for j in i..m.cols() {
                s.set(i, j, 0.5 * (m[(i, j)] + m[(j, i)]));
            }
        }
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.packed[packed_index(self.dim, i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = packed_index(self.dim, i, j);
        self.packed[k] = v;
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for j in i..self.dim {
                let v = self.get(i, j);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }

    pub fn frobenius(&self) -> f64 {
        norm2(&self.svec())
    }

    pub fn is_finite(&self) -> bool {
        self.packed.iter().all(|x| x.is_finite())
    }

    /// Isometric vectorization: the upper triangle row by row with
    /// off-diagonal entries scaled by √2, so `⟨svec(S), svec(T)⟩ = tr(S T)`.
    pub fn svec(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.packed.len());
        for i in 0..self.dim {
            for j in i..self.dim {
                let v = self.get(i, j);
                out.push(if i == j { v } else { SQRT_2 * v });
            }
        }
        out
    }

    /// Inverse of [`SymMatrix::svec`].
    pub fn smat(v: &[f64]) -> Result<Self> {
        let dim = dim_from_packed_len(v.len()).ok_or_else(|| {
            LinalgError::Dimension(format!("{} is not a triangular number", v.len()))
        })?;
        let mut s = Self::zeros(dim);
        let mut k = 0;
        for i in 0..dim {
            for j in i..dim {
                s.set(i, j, if i == j { v[k] } else { v[k] / SQRT_2 });
                k += 1;
            }
        }
        Ok(s)
    }
}

/// Position of `(min(i,j), max(i,j))` in the packed upper triangle.
pub fn packed_index(dim: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    debug_assert!(j < dim);
    i * dim - i * (i + 1) / 2 + j
}

/// Symmetric eigendecomposition with eigenvalues sorted in descending order
/// and eigenvectors stored as the matching columns of `vectors`.
#[derive(Debug, Clone)]
pub struct EigDecomposition {
    pub values: Vec<f64>,
    pub vectors: DenseMatrix,
}

impl EigDecomposition {
    pub fn vector(&self, j: usize) -> Vec<f64> {
        self.vectors.column(j)
    }
}

const JACOBI_MAX_SWEEPS: usize = 100;
const JACOBI_REL_TOL: f64 = 1e-12;

/// Cyclic Jacobi eigensolver.
pub fn sym_eig(s: &SymMatrix) -> Result<EigDecomposition> {
    let n = s.dim();
    if n == 0 {
        return Err(LinalgError::Dimension("eigendecomposition of 0x0 matrix".into()));
    }
    if !s.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let mut a = s.to_dense();
    let mut v = DenseMatrix::identity(n);
    let target = JACOBI_REL_TOL * s.frobenius();

    let off_norm = |a: &DenseMatrix| -> f64 {
        let mut acc = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                acc += 2.0 * a[(i, j)] * a[(i, j)];
            }
        }
        acc.sqrt()
    };

    let mut converged = off_norm(&a) <= target;
    let mut sweeps = 0;
    while !converged {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(LinalgError::NoConvergence { sweeps });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - sn * akq;
                    a[(k, q)] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - sn * aqk;
                    a[(q, k)] = sn * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - sn * vkq;
                    v[(k, q)] = sn * vkp + c * vkq;
                }
            }
        }
        converged = off_norm(&a) <= target;
    }

    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort keeps the sweep order among equal eigenvalues.
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = DenseMatrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        for k in 0..n {
            vectors[(k, col)] = v[(k, src)];
        }
    }
    Ok(EigDecomposition { values, vectors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;

    fn random_sym(rng: &mut SeededRng, n: usize) -> SymMatrix {
        let mut s = SymMatrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                s.set(i, j, rng.normal());
            }
        }
        s
    }

    fn check_decomposition(s: &SymMatrix, eig: &EigDecomposition) {
        let n = s.dim();
        let m = s.to_dense();
        let sv = m.matmul(&eig.vectors).unwrap();
        let mut resid = 0.0;
        let mut ortho = 0.0;
        for i in 0..n {
            for j in 0..n {
                let r = sv[(i, j)] - eig.vectors[(i, j)] * eig.values[j];
                resid += r * r;
                let g = dot(&eig.vector(i), &eig.vector(j)) - if i == j { 1.0 } else { 0.0 };
                ortho += g * g;
            }
        }
        assert!(resid.sqrt() <= 1e-10 * (1.0 + m.frobenius()), "residual {}", resid.sqrt());
        assert!(ortho.sqrt() <= 1e-10, "orthogonality {}", ortho.sqrt());
        assert!(eig.values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn identity_spectrum() {
        let eig = sym_eig(&SymMatrix::identity(3)).unwrap();
        assert_eq!(eig.values, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn diagonal_spectrum() {
        let eig = sym_eig(&SymMatrix::from_diag(&[3.0, 1.0])).unwrap();
        assert_eq!(eig.values, vec![3.0, 1.0]);
        assert_eq!(eig.vector(0)[0].abs(), 1.0);
        assert_eq!(eig.vector(1)[1].abs(), 1.0);
    }

    #[test]
    fn swap_matrix_spectrum() {
        let mut s = SymMatrix::zeros(2);
        s.set(0, 1, 1.0);
        let eig = sym_eig(&s).unwrap();
        assert!((eig.values[0] - 1.0).abs() < 1e-15);
        assert!((eig.values[1] + 1.0).abs() < 1e-15);
        check_decomposition(&s, &eig);
    }

    #[test]
    fn zero_matrix_is_already_diagonal() {
        let eig = sym_eig(&SymMatrix::zeros(4)).unwrap();
        assert_eq!(eig.values, vec![0.0; 4]);
    }

    #[test]
    fn random_decompositions() {
        let mut rng = SeededRng::new(11);
        for trial in 0..120 {
            let n = 1 + trial % 20;
            let s = random_sym(&mut rng, n);
            let eig = sym_eig(&s).unwrap();
            check_decomposition(&s, &eig);
            // Deterministic for identical input.
            let again = sym_eig(&s).unwrap();
            assert_eq!(eig.values, again.values);
            assert_eq!(eig.vectors, again.vectors);
        }
    }

    #[test]
    fn rejects_non_finite() {
        let mut s = SymMatrix::zeros(2);
        s.set(0, 0, f64::NAN);
        assert_eq!(sym_eig(&s).unwrap_err(), LinalgError::NonFinite);
    }

    #[test]
    fn svec_definition() {
        let mut s = SymMatrix::zeros(2);
        s.set(0, 0, 2.0);
        s.set(0, 1, 3.0);
        s.set(1, 1, 5.0);
        assert_eq!(s.svec(), vec![2.0, SQRT_2 * 3.0, 5.0]);
        let i2 = SymMatrix::identity(2).svec();
        assert_eq!(i2, vec![1.0, 0.0, 1.0]);
        assert_eq!(norm2(&i2), SymMatrix::identity(2).to_dense().frobenius());
    }

    #[test]
    fn svec_inner_product_is_trace() {
        let mut rng = SeededRng::new(3);
        for _ in 0..50 {
            let s = random_sym(&mut rng, 5);
            let t = random_sym(&mut rng, 5);
            let st = s.to_dense().matmul(&t.to_dense()).unwrap();
            let trace: f64 = (0..5).map(|i| st[(i, i)]).sum();
            let ip = dot(&s.svec(), &t.svec());
            assert!((ip - trace).abs() <= 1e-12 * (1.0 + trace.abs()));
        }
    }

    #[test]
    fn smat_rejects_bad_length() {
        assert!(matches!(SymMatrix::smat(&[1.0, 2.0]), Err(LinalgError::Dimension(_))));
        assert_eq!(SymMatrix::smat(&[]).unwrap().dim(), 0);
    }

    #[test]
    fn packed_indexing_covers_triangle() {
        for dim in 1..7 {
            let mut seen = vec![false; packed_len(dim)];
            for i in 0..dim {
                for j in i..dim {
                    let k = packed_index(dim, i, j);
                    assert!(!seen[k]);
                    seen[k] = true;
                    assert_eq!(k, packed_index(dim, j, i));
                }
            }
            assert!(seen.into_iter().all(|b| b));
        }
    }

    #[test]
    fn spd_solve_examples() {
        let x = spd_solve(&DenseMatrix::identity(3), &[1.0, -2.0, 3.0]).unwrap();
        assert_eq!(x, vec![1.0, -2.0, 3.0]);
        let x = spd_solve(&DenseMatrix::from_diag(&[2.0, 4.0]), &[2.0, 8.0]).unwrap();
        assert!((x[0] - 1.0).abs() <= 1e-15 && (x[1] - 2.0).abs() <= 1e-15);
    }

    #[test]
    fn spd_solve_random_residual() {
        let mut rng = SeededRng::new(5);
        for _ in 0..20 {
            let b = DenseMatrix::new(8, 8, (0..64).map(|_| rng.normal()).collect()).unwrap();
            let mut m = b.gram();
            for i in 0..8 {
                m[(i, i)] += 0.1;
            }
            let rhs: Vec<f64> = (0..8).map(|_| rng.normal()).collect();
            let x = spd_solve(&m, &rhs).unwrap();
            let r = sub(&m.matvec(&x), &rhs);
            assert!(norm2(&r) <= 1e-10 * (1.0 + norm2(&rhs)));
        }
    }

    #[test]
    fn spd_solve_rejects_indefinite() {
        let m = DenseMatrix::from_diag(&[1.0, -1.0]);
        assert!(matches!(spd_solve(&m, &[1.0, 1.0]), Err(LinalgError::NotSpd { index: 1, .. })));
    }

    #[test]
    fn null_space_basis_is_orthonormal_and_annihilated() {
        let mut rng = SeededRng::new(31);
        for &(p, n) in &[(0, 4), (1, 5), (3, 7), (6, 6), (4, 12)] {
            let a = DenseMatrix::new(p, n, rng.normal_vec(p * n)).unwrap();
            let z = null_space_basis(&a).unwrap();
            assert_eq!(z.rows(), n - p);
            let zzt = z.gram();
            for i in 0..n - p {
                for j in 0..n - p {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((zzt[(i, j)] - expect).abs() < 1e-12);
                }
                assert!(norm_inf(&a.matvec(z.row(i))) < 1e-12);
            }
        }
    }

    #[test]
    fn null_space_basis_rejects_rank_deficiency() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 6.0]], 3).unwrap();
        assert!(matches!(null_space_basis(&a), Err(LinalgError::Singular { index: 1 })));
    }

    #[test]
    fn lu_inverse_round_trip() {
        let mut rng = SeededRng::new(9);
        let a = DenseMatrix::new(6, 6, (0..36).map(|_| rng.normal()).collect()).unwrap();
        let inv = Lu::factor(&a).unwrap().inverse();
        let prod = a.matmul(&inv).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((prod[(i, j)] - e).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn lu_detects_singular() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]], 2).unwrap();
        assert!(matches!(Lu::factor(&a), Err(LinalgError::Singular { .. })));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn svec_smat_round_trip(entries in proptest::collection::vec(-1e3f64..1e3, 15)) {
                let mut s = SymMatrix::zeros(5);
                let mut k = 0;
                for i in 0..5 {
                    for j in i..5 {
                        s.set(i, j, entries[k]);
                        k += 1;
                    }
                }
                let back = SymMatrix::smat(&s.svec()).unwrap();
                for i in 0..5 {
                    for j in i..5 {
                        let (a, b) = (s.get(i, j), back.get(i, j));
                        prop_assert!((a - b).abs() <= f64::EPSILON * a.abs());
                    }
                }
                let fro = s.to_dense().frobenius();
                prop_assert!((norm2(&s.svec()) - fro).abs() <= 1e-12 * (1.0 + fro));
            }
        }
    }
}
