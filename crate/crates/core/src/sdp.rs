//! Dense semidefinite feasibility over real symmetric variables.
//!
//! A problem is a list of affine equalities `Tr(A_i X) = b_i` on a real
//! symmetric `D × D` variable. [`solve_feasibility`] computes
//!
//! ```text
//! t* = max t   s.t.  Tr(A_i X) = b_i,  X ⪰ t·I
//! ```
//!
//! The equalities are eliminated first: Gram-Schmidt on the constraint
//! matrices (in `svec` coordinates, where the Euclidean product is the
//! Frobenius product) yields the minimum-norm particular solution `X₀` and
//! an orthonormal basis `F_j` of the free directions, so every candidate is
//! `X(z) = X₀ + Σ z_j F_j`. The concave function `λ_min(X(z))` is then
//! maximized by following the log-det smoothing
//!
//! ```text
//! φ_μ(z, t) = t/μ + log det(X(z) − t·I)
//! ```
//!
//! with damped Newton steps while `μ` shrinks. At a centered point
//! `W = μ (X − tI)⁻¹` is PSD, has unit trace and is orthogonal to every
//! `F_j`, so it lies in the span of the `A_i`; its coefficients `y` satisfy
//! `y·b = t + μD`. When `t* < 0` that is a Farkas certificate after a sign
//! flip: `Σ y_i A_i ⪯ 0` and `y·b > 0` rule out any PSD solution.
//! Certificates are always re-checked with [`verify_farkas`] before being
//! returned.

use crate::error::{Error, Result};
use crate::linalg::{
    cholesky, cholesky_solve, lower_triangular_inverse, max_eigenvalue, min_eigenvalue, RealMatrix,
};

pub const FEAS_TOL: f64 = 1e-8;
pub const MARGIN_TOL: f64 = 1e-7;
pub const MAX_ITERATIONS: usize = 5000;

const SYMMETRY_TOL: f64 = 1e-12;
const DEPENDENCE_TOL: f64 = 1e-10;
const AFFINE_TOL: f64 = 1e-9;
const GAP_TOL: f64 = 1e-11;
const MU_FACTOR: f64 = 0.2;
const UNBOUNDED_T: f64 = 1e8;

/// Real symmetric matrix stored as upper-triangle triplets `(i, j, v)` with
/// `i ≤ j`; each off-diagonal triplet stands for both `(i, j)` and `(j, i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseSymmetric {
    side: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl SparseSymmetric {
    pub fn new(side: usize) -> Self {
        Self { side, entries: Vec::new() }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    /// Adds `v` at `(i, j)` and `(j, i)`.
    pub fn push(&mut self, i: usize, j: usize, v: f64) {
        assert!(i < self.side && j < self.side, "entry ({i}, {j}) outside side {}", self.side);
        if v != 0.0 {
            self.entries.push((i.min(j), i.max(j), v));
        }
    }

    /// Accepts a dense matrix symmetric within `1e-12`; entries below
    /// `drop_below` in magnitude are discarded.
    pub fn from_dense(m: &RealMatrix, drop_below: f64) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::InvalidProblem(format!("constraint matrix is {}x{}", m.rows(), m.cols())));
        }
        let asym = m.asymmetry();
        if asym > SYMMETRY_TOL {
            return Err(Error::InvalidProblem(format!("constraint matrix asymmetric by {asym:e}")));
        }
        let mut s = Self::new(m.rows());
        for i in 0..m.rows() {
            for j in i..m.cols() {
                let v = 0.5 * (m[(i, j)] + m[(j, i)]);
                if v.abs() > drop_below {
                    s.push(i, j, v);
                }
            }
        }
        Ok(s)
    }

    pub fn to_dense(&self) -> RealMatrix {
        let mut m = RealMatrix::zeros(self.side, self.side);
        for &(i, j, v) in &self.entries {
            m[(i, j)] += v;
            if i != j {
                m[(j, i)] += v;
            }
        }
        m
    }

    /// `Tr(A X)` for a (symmetric) dense `X`.
    pub fn trace_with(&self, x: &RealMatrix) -> f64 {
        self.entries
            .iter()
            .map(|&(i, j, v)| if i == j { v * x[(i, i)] } else { v * (x[(i, j)] + x[(j, i)]) })
            .sum()
    }

    fn add_svec(&self, out: &mut [f64], scale: f64) {
        let s2 = std::f64::consts::SQRT_2;
        for &(i, j, v) in &self.entries {
            let k = svec_index(self.side, i, j);
            out[k] += if i == j { scale * v } else { scale * s2 * v };
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        let mut v = vec![0.0; svec_len(self.side)];
        self.add_svec(&mut v, 1.0);
        norm(&v)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub matrix: SparseSymmetric,
    pub rhs: f64,
}

impl Constraint {
    pub fn new(matrix: SparseSymmetric, rhs: f64) -> Self {
        Self { matrix, rhs }
    }
}

/// `Tr(A_i X) = b_i` for `i = 1..m` over real symmetric `X` of side `side`.
#[derive(Clone, Debug, PartialEq)]
pub struct SdpProblem {
    side: usize,
    constraints: Vec<Constraint>,
}

impl SdpProblem {
    pub fn new(side: usize, constraints: Vec<Constraint>) -> Result<Self> {
        if side == 0 {
            return Err(Error::InvalidProblem("variable side must be positive".into()));
        }
        if constraints.is_empty() {
            return Err(Error::InvalidProblem("at least one constraint is required".into()));
        }
        for (k, c) in constraints.iter().enumerate() {
            if c.matrix.side != side {
                return Err(Error::InvalidProblem(format!(
                    "constraint {k} has side {} for a variable of side {side}",
                    c.matrix.side
                )));
            }
            if !c.rhs.is_finite() || c.matrix.entries.iter().any(|e| !e.2.is_finite()) {
                return Err(Error::NonFinite);
            }
        }
        Ok(Self { side, constraints })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn with_constraint(&self, c: Constraint) -> Result<Self> {
        let mut cs = self.constraints.clone();
        cs.push(c);
        Self::new(self.side, cs)
    }

    /// Restricts the variable to `X = U Y Uᵀ` for a basis `U` (side × r) with
    /// orthonormal columns, giving an equivalent problem in `Y` on that face.
    pub fn restrict(&self, basis: &RealMatrix) -> Result<Self> {
        if basis.rows() != self.side {
            return Err(Error::Shape(format!("face basis has {} rows for side {}", basis.rows(), self.side)));
        }
        let ut = basis.transpose();
        let cs = self
            .constraints
            .iter()
            .map(|c| {
                let reduced = ut.matmul(&c.matrix.to_dense()).matmul(basis).symmetrized();
                Ok(Constraint::new(SparseSymmetric::from_dense(&reduced, 1e-15)?, c.rhs))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(basis.cols(), cs)
    }

    /// Max over constraints of `|Tr(A_i X) − b_i|`.
    pub fn residual(&self, x: &RealMatrix) -> f64 {
        self.constraints.iter().fold(0.0, |m, c| m.max((c.matrix.trace_with(x) - c.rhs).abs()))
    }

    /// `Σ y_i A_i` as a dense matrix.
    pub fn combine(&self, y: &[f64]) -> RealMatrix {
        let mut z = RealMatrix::zeros(self.side, self.side);
        for (c, &w) in self.constraints.iter().zip(y) {
            if w == 0.0 {
                continue;
            }
            for &(i, j, v) in &c.matrix.entries {
                z[(i, j)] += w * v;
                if i != j {
                    z[(j, i)] += w * v;
                }
            }
        }
        z
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum SdpStatus {
    Feasible,
    Infeasible,
    Borderline,
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub status: SdpStatus,
    pub witness: Option<RealMatrix>,
    pub certificate: Option<Vec<f64>>,
    /// `λ_min` of the final iterate, `t*` up to the duality gap.
    pub margin: f64,
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct SdpSettings {
    pub feas_tol: f64,
    pub margin_tol: f64,
    pub max_iterations: usize,
}

impl Default for SdpSettings {
    fn default() -> Self {
        Self { feas_tol: FEAS_TOL, margin_tol: MARGIN_TOL, max_iterations: MAX_ITERATIONS }
    }
}

pub fn verify_primal(x: &RealMatrix, problem: &SdpProblem) -> Result<bool> {
    verify_primal_with(x, problem, FEAS_TOL)
}

pub fn verify_primal_with(x: &RealMatrix, problem: &SdpProblem, feas_tol: f64) -> Result<bool> {
    if x.rows() != problem.side || x.cols() != problem.side {
        return Err(Error::Shape(format!("{}x{} matrix for side {}", x.rows(), x.cols(), problem.side)));
    }
    if !x.is_finite() || x.asymmetry() > SYMMETRY_TOL * x.max_abs().max(1.0) {
        return Ok(false);
    }
    Ok(problem.residual(x) <= feas_tol && min_eigenvalue(x) >= -feas_tol)
}

pub fn verify_farkas(y: &[f64], problem: &SdpProblem) -> Result<bool> {
    verify_farkas_with(y, problem, FEAS_TOL, MARGIN_TOL)
}

/// True iff `λ_max(Σ y_i A_i) ≤ feas_tol·‖y‖` and `y·b ≥ margin_tol·‖y‖`
/// with `y ≠ 0`.
pub fn verify_farkas_with(y: &[f64], problem: &SdpProblem, feas_tol: f64, margin_tol: f64) -> Result<bool> {
    if y.len() != problem.len() {
        return Err(Error::Shape(format!("certificate of length {} for {} constraints", y.len(), problem.len())));
    }
    let ny = norm(y);
    if !(ny > 0.0) || !ny.is_finite() {
        return Ok(false);
    }
    let yb: f64 = y.iter().zip(&problem.constraints).map(|(w, c)| w * c.rhs).sum();
    if yb < margin_tol * ny {
        return Ok(false);
    }
    Ok(max_eigenvalue(&problem.combine(y)) <= feas_tol * ny)
}

pub fn solve_feasibility(problem: &SdpProblem) -> Result<SdpSolution> {
    solve_feasibility_with(problem, &SdpSettings::default())
}

pub fn solve_feasibility_with(problem: &SdpProblem, settings: &SdpSettings) -> Result<SdpSolution> {
    let elim = Elimination::new(problem)?;
    let n = problem.side;
    let x0 = smat(n, &elim.x0);
    let directions: Vec<RealMatrix> = elim.null_basis().iter().map(|f| smat(n, f)).collect();
    let barrier = Barrier { side: n, x0, directions };

    let mut z = vec![0.0; barrier.directions.len()];
    let lam0 = min_eigenvalue(&barrier.x0);
    let delta = (barrier.x0.frobenius_norm() / (n as f64).sqrt()).max(1e-8);
    let mut t = lam0 - delta;
    let mut mu = {
        let l = cholesky(&barrier.slack(&z, t)).expect("shifted start is interior");
        let li = lower_triangular_inverse(&l);
        1.0 / li.dot(&li)
    };

    let mut iterations = 0;
    loop {
        iterations += barrier.center(&mut z, &mut t, mu, settings.max_iterations - iterations);
        if iterations >= settings.max_iterations || mu * n as f64 <= GAP_TOL || t > UNBOUNDED_T {
            break;
        }
        mu *= MU_FACTOR;
    }

    let x = barrier.point(&z);
    let margin = min_eigenvalue(&x);
    let residual = problem.residual(&x);

    if margin > settings.margin_tol && verify_primal_with(&x, problem, settings.feas_tol)? {
        return Ok(SdpSolution { status: SdpStatus::Feasible, witness: Some(x), certificate: None, margin, iterations, residual });
    }

    let certificate = barrier
        .dual_matrix(&z, t, mu)
        .map(|w| elim.certificate_from(problem, &w))
        .filter(|y| verify_farkas_with(y, problem, settings.feas_tol, settings.margin_tol).unwrap_or(false));
    let status = if certificate.is_some() { SdpStatus::Infeasible } else { SdpStatus::Borderline };
    Ok(SdpSolution { status, witness: None, certificate, margin, iterations, residual })
}

fn svec_len(n: usize) -> usize {
    n * (n + 1) / 2
}

fn svec_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i <= j);
    // rows before i hold n, n-1, ..., n-i+1 entries
    i * n - i * i.saturating_sub(1) / 2 + (j - i)
}

fn svec(m: &RealMatrix) -> Vec<f64> {
    let n = m.rows();
    let s2 = std::f64::consts::SQRT_2;
    let mut out = Vec::with_capacity(svec_len(n));
    for i in 0..n {
        for j in i..n {
            out.push(if i == j { m[(i, i)] } else { s2 * 0.5 * (m[(i, j)] + m[(j, i)]) });
        }
    }
    out
}

fn smat(n: usize, v: &[f64]) -> RealMatrix {
    let s2 = std::f64::consts::SQRT_2;
    let mut m = RealMatrix::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        for j in i..n {
            if i == j {
                m[(i, i)] = v[k];
            } else {
                m[(i, j)] = v[k] / s2;
                m[(j, i)] = v[k] / s2;
            }
            k += 1;
        }
    }
    m
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Orthonormalized constraint span and the particular solution.
struct Elimination {
    len: usize,
    q: Vec<Vec<f64>>,
    /// `q_j = Σ_l transform[j][l] · a_{independent[l]}`
    transform: Vec<Vec<f64>>,
    independent: Vec<usize>,
    x0: Vec<f64>,
}

impl Elimination {
    fn new(problem: &SdpProblem) -> Result<Self> {
        let len = svec_len(problem.side);
        let mut q: Vec<Vec<f64>> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let mut transform: Vec<Vec<f64>> = Vec::new();
        let mut independent = Vec::new();

        for (idx, c) in problem.constraints.iter().enumerate() {
            let mut a = vec![0.0; len];
            c.matrix.add_svec(&mut a, 1.0);
            let na = norm(&a);
            let mut coeffs = vec![0.0; q.len()];
            for _ in 0..2 {
                for (j, qj) in q.iter().enumerate() {
                    let cj = dot(qj, &a);
                    axpy(&mut a, -cj, qj);
                    coeffs[j] += cj;
                }
            }
            let res = norm(&a);
            let rhs_res = c.rhs - dot(&coeffs, &beta);
            if res <= DEPENDENCE_TOL * na.max(f64::MIN_POSITIVE) {
                if rhs_res.abs() > AFFINE_TOL * (1.0 + c.rhs.abs()) {
                    return Err(Error::InconsistentAffine { constraint: idx, residual: rhs_res });
                }
                continue;
            }
            a.iter_mut().for_each(|v| *v /= res);
            let r = q.len();
            let mut row = vec![0.0; r + 1];
            for (j, cj) in coeffs.iter().enumerate() {
                for (l, tl) in transform[j].iter().enumerate() {
                    row[l] -= cj * tl;
                }
            }
            row.iter_mut().for_each(|v| *v /= res);
            row[r] = 1.0 / res;
            q.push(a);
            beta.push(rhs_res / res);
            transform.push(row);
            independent.push(idx);
        }

        let mut x0 = vec![0.0; len];
        for (qj, bj) in q.iter().zip(&beta) {
            axpy(&mut x0, *bj, qj);
        }
        Ok(Self { len, q, transform, independent, x0 })
    }

    /// Orthonormal basis of the orthogonal complement of the constraint span,
    /// by pivoted Gram-Schmidt on the columns of `I − QᵀQ`.
    fn null_basis(&self) -> Vec<Vec<f64>> {
        let want = self.len - self.q.len();
        if want == 0 {
            return Vec::new();
        }
        let mut cols: Vec<Vec<f64>> = (0..self.len)
            .map(|k| {
                let mut e = vec![0.0; self.len];
                e[k] = 1.0;
                for qj in &self.q {
                    let c = qj[k];
                    if c != 0.0 {
                        axpy(&mut e, -c, qj);
                    }
                }
                e
            })
            .collect();
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(want);
        while basis.len() < want && !cols.is_empty() {
            let (best, nb) = cols
                .iter()
                .enumerate()
                .map(|(i, c)| (i, norm(c)))
                .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if nb < 1e-8 {
                break;
            }
            let mut v = cols.swap_remove(best);
            for _ in 0..2 {
                for u in self.q.iter().chain(basis.iter()) {
                    let c = dot(u, &v);
                    axpy(&mut v, -c, u);
                }
            }
            let nv = norm(&v);
            v.iter_mut().for_each(|x| *x /= nv);
            for c in cols.iter_mut() {
                let d = dot(&v, c);
                axpy(c, -d, &v);
            }
            basis.push(v);
        }
        basis
    }

    /// Coefficients `y` (one per constraint) with `Σ y_i a_i = P_span(w)`.
    fn coefficients(&self, m: usize, w: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; m];
        for (j, qj) in self.q.iter().enumerate() {
            let cj = dot(qj, w);
            for (l, tl) in self.transform[j].iter().enumerate() {
                y[self.independent[l]] += cj * tl;
            }
        }
        y
    }

    fn contains(&self, w: &[f64]) -> bool {
        let mut r = w.to_vec();
        for qj in &self.q {
            let c = dot(qj, &r);
            axpy(&mut r, -c, qj);
        }
        norm(&r) <= 1e-9 * norm(w).max(1.0)
    }

    /// Turns the smoothed dual matrix into a Farkas candidate: project onto
    /// the constraint span, shift by a multiple of the identity (when the
    /// identity is representable) so the combination is PSD, then flip sign.
    fn certificate_from(&self, problem: &SdpProblem, w: &RealMatrix) -> Vec<f64> {
        let m = problem.len();
        let mut y = self.coefficients(m, &svec(w));
        let identity = svec(&RealMatrix::identity(problem.side));
        if self.contains(&identity) {
            let z = problem.combine(&y);
            let lam = min_eigenvalue(&z);
            let shift = (-lam).max(0.0) + 1e-12 * z.frobenius_norm().max(1e-300);
            let yi = self.coefficients(m, &identity);
            axpy(&mut y, shift, &yi);
        }
        let ny = norm(&y);
        if ny > 0.0 {
            y.iter_mut().for_each(|v| *v = -*v / ny);
        }
        y
    }
}

struct Barrier {
    side: usize,
    x0: RealMatrix,
    directions: Vec<RealMatrix>,
}

impl Barrier {
    fn point(&self, z: &[f64]) -> RealMatrix {
        let mut x = self.x0.clone();
        for (f, &zj) in self.directions.iter().zip(z) {
            if zj != 0.0 {
                for (a, b) in x.as_mut_slice().iter_mut().zip(f.as_slice()) {
                    *a += zj * b;
                }
            }
        }
        x
    }

    fn slack(&self, z: &[f64], t: f64) -> RealMatrix {
        let mut s = self.point(z);
        for i in 0..self.side {
            s[(i, i)] -= t;
        }
        s
    }

    fn value(&self, z: &[f64], t: f64, mu: f64) -> Option<f64> {
        let l = cholesky(&self.slack(z, t))?;
        let logdet: f64 = (0..self.side).map(|i| l[(i, i)].ln()).sum::<f64>() * 2.0;
        Some(t / mu + logdet)
    }

    fn dual_matrix(&self, z: &[f64], t: f64, mu: f64) -> Option<RealMatrix> {
        let l = cholesky(&self.slack(z, t))?;
        let li = lower_triangular_inverse(&l);
        Some(li.transpose().matmul(&li).scale(mu))
    }

    /// Newton direction for `φ_μ` in `(z, t)`; returns `(direction, decrement²)`.
    fn newton(&self, z: &[f64], t: f64, mu: f64) -> Option<(Vec<f64>, f64)> {
        let l = cholesky(&self.slack(z, t))?;
        let li = lower_triangular_inverse(&l);
        let lit = li.transpose();
        let nz = self.directions.len();
        let mut scaled: Vec<RealMatrix> = self.directions.iter().map(|f| li.matmul(f).matmul(&lit)).collect();
        scaled.push(li.matmul(&lit).scale(-1.0));

        let dim = nz + 1;
        let mut grad: Vec<f64> = scaled.iter().map(|g| g.trace()).collect();
        grad[nz] += 1.0 / mu;
        let mut gram = RealMatrix::zeros(dim, dim);
        for j in 0..dim {
            for k in j..dim {
                let v = scaled[j].dot(&scaled[k]);
                gram[(j, k)] = v;
                gram[(k, j)] = v;
            }
        }
        let scale = (0..dim).fold(0.0_f64, |m, i| m.max(gram[(i, i)]));
        let mut ridge = 0.0;
        let chol = loop {
            let mut g = gram.clone();
            for i in 0..dim {
                g[(i, i)] += ridge;
            }
            if let Some(c) = cholesky(&g) {
                break c;
            }
            ridge = if ridge == 0.0 { 1e-14 * scale.max(1e-300) } else { ridge * 100.0 };
            if ridge > scale {
                return None;
            }
        };
        let dir = cholesky_solve(&chol, &grad);
        let dec2 = dot(&grad, &dir);
        Some((dir, dec2))
    }

    /// Damped Newton centering at fixed `μ`. Returns the number of steps.
    fn center(&self, z: &mut Vec<f64>, t: &mut f64, mu: f64, budget: usize) -> usize {
        let nz = z.len();
        let mut steps = 0;
        while steps < budget {
            let Some((dir, dec2)) = self.newton(z, *t, mu) else { break };
            steps += 1;
            if !(dec2 > 1e-12) {
                break;
            }
            let Some(phi) = self.value(z, *t, mu) else { break };
            let mut alpha = 1.0;
            let mut accepted = false;
            while alpha > 1e-12 {
                let zn: Vec<f64> = z.iter().zip(&dir).map(|(a, d)| a + alpha * d).collect();
                let tn = *t + alpha * dir[nz];
                if let Some(v) = self.value(&zn, tn, mu) {
                    if v >= phi + 0.25 * alpha * dec2 {
                        *z = zn;
                        *t = tn;
                        accepted = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if !accepted || *t > UNBOUNDED_T {
                break;
            }
            if dec2 < 1e-9 {
                break;
            }
        }
        steps
    }
}
