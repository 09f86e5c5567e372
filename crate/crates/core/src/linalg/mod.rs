//! Dense complex linear algebra on small multipartite operators.
//!
//! # Index convention
//!
//! An operator on `H_0 ⊗ H_1 ⊗ … ⊗ H_{n-1}` with `dims = [d_0, …, d_{n-1}]`
//! is stored as a `D × D` matrix, `D = Π d_i`. Subsystem `i` is the `i`-th
//! tensor factor from the left, and a row (or column) index decomposes
//! most-significant-first:
//!
//! ```text
//! index(i_0, …, i_{n-1}) = Σ_k i_k · Π_{l>k} d_l
//! ```
//!
//! For `dims = [2, 2]` the basis order is `|00⟩, |01⟩, |10⟩, |11⟩`, so row 1
//! is `|0⟩_A |1⟩_B` and row 2 is `|1⟩_A |0⟩_B`.

mod real;

pub use real::{
    cholesky, cholesky_solve, lower_triangular_inverse, max_eigenvalue, min_eigenvalue, symmetric_eig,
    RealMatrix, SymmetricEig, JACOBI_TOL,
};

use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Default Hermiticity tolerance on `‖M − M†‖_max`.
pub const HERM_TOL: f64 = 1e-10;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!("{} entries for a {rows}x{cols} matrix", data.len())));
        }
        if !data.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_real(m: &RealMatrix) -> Self {
        Self::from_fn(m.rows(), m.cols(), |i, j| C64::new(m[(i, j)], 0.0))
    }

    /// Builds a matrix from `rows` nested slices of `(re, im)` pairs.
    pub fn from_pairs(rows: &[Vec<[f64; 2]>]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::Shape("ragged matrix rows".into()));
        }
        let data = rows.iter().flat_map(|r| r.iter().map(|[re, im]| C64::new(*re, *im))).collect();
        Self::new(n, m, data)
    }

    /// Column vector from a slice.
    pub fn column_vector(v: &[C64]) -> Self {
        Self { rows: v.len(), cols: 1, data: v.to_vec() }
    }

    /// `|v⟩⟨v|`.
    pub fn outer(v: &[C64]) -> Self {
        Self::from_fn(v.len(), v.len(), |i, j| v[i] * v[j].conj())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul shape");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let brow = &other.data[k * other.cols..(k + 1) * other.cols];
                let orow = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (o, b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// `Tr(A† B)`.
    pub fn inner(&self, other: &Self) -> C64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a.conj() * b).sum()
    }

    /// `Tr(A B)` without forming the product.
    pub fn trace_product(&self, other: &Self) -> C64 {
        assert_eq!((self.cols, self.rows), (other.rows, other.cols));
        let mut s = ZERO;
        for i in 0..self.rows {
            for k in 0..self.cols {
                s += self[(i, k)] * other[(k, i)];
            }
        }
        s
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }

    /// `‖M − M†‖_max`.
    pub fn hermiticity_deviation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// `(M + M†)/2`.
    pub fn hermitian_part(&self) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| (self[(i, j)] + self[(j, i)].conj()) * 0.5)
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        (0..self.rows).map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum()).collect()
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Kronecker product; row and column counts multiply.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let rows = a.rows * b.rows;
    let cols = a.cols * b.cols;
    ComplexMatrix::from_fn(rows, cols, |i, j| a[(i / b.rows, j / b.cols)] * b[(i % b.rows, j % b.cols)])
}

/// Kronecker product of a list of factors, left to right.
pub fn kron_all<'a>(factors: impl IntoIterator<Item = &'a ComplexMatrix>) -> ComplexMatrix {
    let mut out = ComplexMatrix::identity(1);
    for f in factors {
        out = kron(&out, f);
    }
    out
}

/// Square complex matrix tagged with its tensor factorization.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    dims: Vec<usize>,
    matrix: ComplexMatrix,
}

impl HermitianOperator {
    pub fn new(dims: Vec<usize>, matrix: ComplexMatrix) -> Result<Self> {
        Self::with_tolerance(dims, matrix, HERM_TOL)
    }

    pub fn with_tolerance(dims: Vec<usize>, matrix: ComplexMatrix, herm_tol: f64) -> Result<Self> {
        check_dims(&dims, &matrix)?;
        if !matrix.is_finite() {
            return Err(Error::NonFinite);
        }
        let deviation = matrix.hermiticity_deviation();
        if deviation > herm_tol {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self { dims, matrix })
    }

    /// For results of operations that are Hermitian by construction; only
    /// rounding-level asymmetry is removed.
    pub(crate) fn from_parts(dims: Vec<usize>, matrix: ComplexMatrix) -> Self {
        debug_assert_eq!(dims.iter().product::<usize>(), matrix.rows);
        Self { dims, matrix: matrix.hermitian_part() }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn side(&self) -> usize {
        self.matrix.rows
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// Same matrix, different factorization of the same total dimension.
    pub fn with_dims(&self, dims: Vec<usize>) -> Result<Self> {
        check_dims(&dims, &self.matrix)?;
        Ok(Self { dims, matrix: self.matrix.clone() })
    }

    /// `U M U†`, keeping the dims.
    pub fn conjugate_by(&self, u: &ComplexMatrix) -> Result<Self> {
        if u.rows != self.side() || u.cols != self.side() {
            return Err(Error::Shape(format!("unitary of side {} for operator of side {}", u.rows, self.side())));
        }
        Ok(Self::from_parts(self.dims.clone(), u.matmul(&self.matrix).matmul(&u.adjoint())))
    }

    /// Tensor product, concatenating the factorizations.
    pub fn tensor(&self, other: &Self) -> Self {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Self::from_parts(dims, kron(&self.matrix, &other.matrix))
    }
}

fn check_dims(dims: &[usize], matrix: &ComplexMatrix) -> Result<()> {
    if dims.is_empty() || dims.iter().any(|&d| d == 0) {
        return Err(Error::Shape(format!("invalid dims {dims:?}")));
    }
    let side: usize = dims.iter().product();
    if !matrix.is_square() || matrix.rows != side {
        return Err(Error::Shape(format!(
            "dims {dims:?} need a {side}x{side} matrix, got {}x{}",
            matrix.rows, matrix.cols
        )));
    }
    Ok(())
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * dims[i + 1];
    }
    s
}

fn digits(mut index: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for i in (0..dims.len()).rev() {
        out[i] = index % dims[i];
        index /= dims[i];
    }
    out
}

fn check_index(index: usize, count: usize) -> Result<()> {
    if index >= count {
        return Err(Error::IndexOutOfRange { index, count });
    }
    Ok(())
}

/// Traces out the subsystems listed in `traced`. Tracing everything yields
/// the 1×1 operator `[Tr(op)]` with dims `[1]`.
pub fn partial_trace(op: &HermitianOperator, traced: &[usize]) -> Result<HermitianOperator> {
    let dims = &op.dims;
    for &t in traced {
        check_index(t, dims.len())?;
    }
    let is_traced: Vec<bool> = (0..dims.len()).map(|i| traced.contains(&i)).collect();
    let kept_dims: Vec<usize> = (0..dims.len()).filter(|&i| !is_traced[i]).map(|i| dims[i]).collect();
    let traced_dims: Vec<usize> = (0..dims.len()).filter(|&i| is_traced[i]).map(|i| dims[i]).collect();
    let kept_side: usize = kept_dims.iter().product();
    let traced_side: usize = traced_dims.iter().product();

    // groups[t] lists (kept index, full index) for traced multi-index t.
    let mut groups: Vec<Vec<(usize, usize)>> = vec![Vec::with_capacity(kept_side); traced_side];
    for full in 0..op.side() {
        let d = digits(full, dims);
        let (mut k, mut t) = (0, 0);
        for i in 0..dims.len() {
            if is_traced[i] {
                t = t * dims[i] + d[i];
            } else {
                k = k * dims[i] + d[i];
            }
        }
        groups[t].push((k, full));
    }

    let mut out = ComplexMatrix::zeros(kept_side, kept_side);
    for group in &groups {
        for &(k1, f1) in group {
            for &(k2, f2) in group {
                out[(k1, k2)] += op.matrix[(f1, f2)];
            }
        }
    }
    let out_dims = if kept_dims.is_empty() { vec![1] } else { kept_dims };
    Ok(HermitianOperator::from_parts(out_dims, out))
}

/// Keeps only the listed subsystems (in their original order).
pub fn reduce_to(op: &HermitianOperator, kept: &[usize]) -> Result<HermitianOperator> {
    for &k in kept {
        check_index(k, op.dims.len())?;
    }
    let traced: Vec<usize> = (0..op.dims.len()).filter(|i| !kept.contains(i)).collect();
    partial_trace(op, &traced)
}

/// Transposes tensor factor `index`.
pub fn partial_transpose(op: &HermitianOperator, index: usize) -> Result<HermitianOperator> {
    check_index(index, op.dims.len())?;
    let stride = strides(&op.dims)[index];
    let d = op.dims[index];
    let side = op.side();
    let out = ComplexMatrix::from_fn(side, side, |r, c| {
        let dr = (r / stride) % d;
        let dc = (c / stride) % d;
        let r2 = r - dr * stride + dc * stride;
        let c2 = c - dc * stride + dr * stride;
        op.matrix[(r2, c2)]
    });
    Ok(HermitianOperator::from_parts(op.dims.clone(), out))
}

/// Computes `P M P†` where `P` moves tensor factor `perm[j]` of the input to
/// position `j` of the output. Factors that move must share a dimension.
pub fn permutation_conjugate(op: &HermitianOperator, perm: &[usize]) -> Result<HermitianOperator> {
    let n = op.dims.len();
    if perm.len() != n {
        return Err(Error::Shape(format!("permutation of length {} for {n} subsystems", perm.len())));
    }
    let mut seen = vec![false; n];
    for &p in perm {
        check_index(p, n)?;
        if std::mem::replace(&mut seen[p], true) {
            return Err(Error::Shape(format!("{perm:?} is not a permutation")));
        }
    }
    let moved: Vec<usize> = (0..n).filter(|&j| perm[j] != j).collect();
    if moved.iter().any(|&j| op.dims[perm[j]] != op.dims[j]) {
        return Err(Error::UnequalDimensions(moved.iter().map(|&j| op.dims[j]).collect()));
    }
    let map = permutation_index_map(&op.dims, perm);
    let side = op.side();
    let out = ComplexMatrix::from_fn(side, side, |r, c| op.matrix[(map[r], map[c])]);
    Ok(HermitianOperator::from_parts(op.dims.clone(), out))
}

/// Convenience: exchange factors `i` and `j`.
pub fn swap_subsystems(op: &HermitianOperator, i: usize, j: usize) -> Result<HermitianOperator> {
    let mut perm: Vec<usize> = (0..op.dims.len()).collect();
    check_index(i, perm.len())?;
    check_index(j, perm.len())?;
    perm.swap(i, j);
    permutation_conjugate(op, &perm)
}

/// `map[out_index] = in_index` for the factor permutation `perm` (equal dims).
pub(crate) fn permutation_index_map(dims: &[usize], perm: &[usize]) -> Vec<usize> {
    let st = strides(dims);
    let side: usize = dims.iter().product();
    (0..side)
        .map(|out| {
            let d = digits(out, dims);
            // output digit j carries input factor perm[j]
            (0..dims.len()).map(|j| d[j] * st[perm[j]]).sum()
        })
        .collect()
}

/// Eigenvalues ascending with orthonormal eigenvectors as columns.
#[derive(Clone, Debug)]
pub struct HermitianEig {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

/// Hermitian eigendecomposition through Jacobi on the real embedding.
///
/// Every eigenvalue of `H` appears twice in the embedding; within each
/// cluster of (numerically) equal embedded eigenvalues the complex vectors
/// `u + iv` span the complex eigenspace, and a pivoted Gram-Schmidt picks
/// an orthonormal basis of it.
pub fn hermitian_eig(op: &HermitianOperator) -> Result<HermitianEig> {
    let deviation = op.matrix.hermiticity_deviation();
    if deviation > HERM_TOL {
        return Err(Error::NotHermitian { deviation });
    }
    Ok(hermitian_eig_matrix(&op.matrix))
}

pub(crate) fn hermitian_eig_matrix(m: &ComplexMatrix) -> HermitianEig {
    let n = m.rows;
    let emb = embed_matrix(m);
    let eig = symmetric_eig(&emb);
    let scale = eig.values.iter().fold(1e-300_f64, |a, v| a.max(v.abs()));
    let tol = 1e-10 * scale.max(1e-300);

    let mut chosen: Vec<Vec<C64>> = Vec::with_capacity(n);
    let mut start = 0;
    while start < 2 * n {
        let mut end = start + 1;
        while end < 2 * n && eig.values[end] - eig.values[end - 1] <= tol {
            end += 1;
        }
        let want = ((end - start) + 1) / 2;
        let mut candidates: Vec<Vec<C64>> = (start..end)
            .map(|c| (0..n).map(|i| C64::new(eig.vectors[(i, c)], eig.vectors[(n + i, c)])).collect())
            .collect();
        for cand in candidates.iter_mut() {
            orthogonalize(cand, &chosen);
        }
        for _ in 0..want {
            if chosen.len() == n {
                break;
            }
            let (best, norm) = candidates
                .iter()
                .enumerate()
                .map(|(i, c)| (i, vec_norm(c)))
                .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if norm <= 1e-8 {
                break;
            }
            let mut v = candidates.swap_remove(best);
            orthogonalize(&mut v, &chosen);
            let nv = vec_norm(&v);
            v.iter_mut().for_each(|z| *z /= nv);
            for cand in candidates.iter_mut() {
                orthogonalize(cand, std::slice::from_ref(&v));
            }
            chosen.push(v);
        }
        start = end;
    }
    debug_assert_eq!(chosen.len(), n, "eigenvector extraction lost dimensions");

    let mut pairs: Vec<(f64, Vec<C64>)> = chosen
        .into_iter()
        .map(|v| {
            let mv = m.apply(&v);
            let rq: f64 = v.iter().zip(&mv).map(|(a, b)| (a.conj() * b).re).sum();
            (rq, v)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let values: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let vectors = ComplexMatrix::from_fn(n, pairs.len(), |i, j| pairs[j].1[i]);
    HermitianEig { values, vectors }
}

fn vec_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn orthogonalize(v: &mut [C64], basis: &[Vec<C64>]) {
    for _ in 0..2 {
        for b in basis {
            let c: C64 = b.iter().zip(v.iter()).map(|(x, y)| x.conj() * y).sum();
            for (x, y) in v.iter_mut().zip(b) {
                *x -= c * y;
            }
        }
    }
}

/// Eigenvalues only, ascending.
pub fn eigenvalues(op: &HermitianOperator) -> Result<Vec<f64>> {
    Ok(hermitian_eig(op)?.values)
}

/// `H = A + iB ↦ [[A, −B], [B, A]]`.
pub fn real_embedding(op: &HermitianOperator) -> Result<RealMatrix> {
    let deviation = op.matrix.hermiticity_deviation();
    if deviation > HERM_TOL {
        return Err(Error::NotHermitian { deviation });
    }
    Ok(embed_matrix(&op.matrix))
}

pub(crate) fn embed_matrix(m: &ComplexMatrix) -> RealMatrix {
    let (r, c) = (m.rows, m.cols);
    RealMatrix::from_fn(2 * r, 2 * c, |i, j| {
        let z = m[(i % r, j % c)];
        match (i < r, j < c) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

/// Inverse of [`real_embedding`]: reads `A` and `B` off the blocks (averaging
/// the redundant copies) and attaches `dims`.
pub fn from_real_embedding(m: &RealMatrix, dims: Vec<usize>) -> Result<HermitianOperator> {
    if !m.is_square() || m.rows() % 2 != 0 {
        return Err(Error::Shape(format!("real embedding must be square with even side, got {}x{}", m.rows(), m.cols())));
    }
    let n = m.rows() / 2;
    let c = ComplexMatrix::from_fn(n, n, |i, j| {
        let re = 0.5 * (m[(i, j)] + m[(n + i, n + j)]);
        let im = 0.5 * (m[(n + i, j)] - m[(i, n + j)]);
        C64::new(re, im)
    });
    check_dims(&dims, &c)?;
    HermitianOperator::new(dims, c)
}
