//! Symmetric-extension feasibility: does `ρ_AB` extend to
//! `ρ'_{A B₁ … B_k}` whose `A B_i` marginals all equal `ρ`?
//!
//! Two notions are supported. [`Variant::PermutationInvariant`] asks for
//! `ρ'` invariant under every permutation of the `B` parties (imposed
//! through the transpositions `(B₁ B_j)`, which generate the symmetric
//! group) plus `Tr_{B₂…B_k} ρ' = ρ`. [`Variant::EqualMarginals`] only asks
//! that every `A B_i` marginal is `ρ`.
//!
//! The complex Hermitian variable is handed to the real solver through its
//! real embedding `[[A, −B], [B, A]]`; structure constraints keep the real
//! variable inside the image of the embedding. Hermitian matrix equalities
//! are expanded on the normalized generalized Gell-Mann basis.
//!
//! When `ρ` is rank deficient every extension lives on the face
//! `∩_i (supp ρ)_{A B_i} ⊗ (rest)`, so the full problem has `t* = 0`. A
//! Borderline full solve is then retried on that face before giving up.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::entanglement::{negativity, PPT_TOL};
use crate::error::{Error, Result};
use crate::linalg::{
    embed_matrix, from_real_embedding, hermitian_eig_matrix, permutation_conjugate,
    permutation_index_map, ComplexMatrix, HermitianOperator, RealMatrix, C64,
};
use crate::sdp::{self, Constraint, SdpProblem, SdpSolution, SdpStatus, SparseSymmetric};
use crate::states::{bush_rumsfeld, werner, DensityMatrix};

/// Default cap on the complex variable side `d_A · d_B^k`.
pub const DEFAULT_MAX_DIM: usize = 256;
/// Entrywise tolerance for marginal and symmetry checks on extensions.
pub const EXTENSION_TOL: f64 = 1e-7;
/// Bisection width for [`extendibility_threshold`].
pub const THRESHOLD_WIDTH: f64 = 1e-4;
const KERNEL_TOL: f64 = 1e-9;
const FACE_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Variant {
    PermutationInvariant,
    EqualMarginals,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::PermutationInvariant => "perm",
            Variant::EqualMarginals => "marginals",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "perm" | "permutation" | "PermutationInvariant" => Ok(Variant::PermutationInvariant),
            "marginals" | "EqualMarginals" => Ok(Variant::EqualMarginals),
            other => Err(Error::InvalidExtension(format!("unknown variant {other:?}"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExtensionProblem {
    rho: DensityMatrix,
    k: usize,
    variant: Variant,
}

impl ExtensionProblem {
    pub fn new(rho: DensityMatrix, k: usize, variant: Variant) -> Result<Self> {
        Self::with_cap(rho, k, variant, DEFAULT_MAX_DIM)
    }

    pub fn with_cap(rho: DensityMatrix, k: usize, variant: Variant, cap: usize) -> Result<Self> {
        let dims = rho.dims();
        if dims.len() != 2 || dims[0] < 2 || dims[1] < 2 {
            return Err(Error::InvalidExtension(format!("need a bipartite state with d_A, d_B >= 2, got dims {dims:?}")));
        }
        if k < 2 {
            return Err(Error::InvalidExtension(format!("extension count k = {k} must be at least 2")));
        }
        let dim = variable_dim(dims[0], dims[1], k).filter(|&d| d <= cap);
        match dim {
            Some(_) => Ok(Self { rho, k, variant }),
            None => Err(Error::DimensionCap {
                dim: variable_dim(dims[0], dims[1], k).unwrap_or(usize::MAX),
                cap,
            }),
        }
    }

    pub fn rho(&self) -> &DensityMatrix {
        &self.rho
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn d_a(&self) -> usize {
        self.rho.dims()[0]
    }

    pub fn d_b(&self) -> usize {
        self.rho.dims()[1]
    }

    /// `[d_A, d_B, …, d_B]` with `k` copies of `d_B`.
    pub fn extension_dims(&self) -> Vec<usize> {
        extension_dims(self.d_a(), self.d_b(), self.k)
    }

    /// Complex side `d_A · d_B^k`.
    pub fn complex_side(&self) -> usize {
        self.extension_dims().iter().product()
    }
}

fn variable_dim(d_a: usize, d_b: usize, k: usize) -> Option<usize> {
    let mut dim = d_a;
    for _ in 0..k {
        dim = dim.checked_mul(d_b)?;
    }
    Some(dim)
}

fn extension_dims(d_a: usize, d_b: usize, k: usize) -> Vec<usize> {
    let mut dims = vec![d_a];
    dims.extend(std::iter::repeat(d_b).take(k));
    dims
}

/// Normalized generalized Gell-Mann basis of `d × d` Hermitian matrices,
/// `Tr(G_a G_b) = δ_ab`, as sparse entry lists. Order: `I/√d`, symmetric
/// off-diagonals `(j,k)` for `j < k` in row order, antisymmetric
/// off-diagonals in the same order, then the diagonal elements `l = 1…d−1`.
pub fn gell_mann_basis(d: usize) -> Vec<Vec<(usize, usize, C64)>> {
    let mut basis = Vec::with_capacity(d * d);
    let s = 1.0 / (d as f64).sqrt();
    basis.push((0..d).map(|i| (i, i, C64::new(s, 0.0))).collect());
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for j in 0..d {
        for k in (j + 1)..d {
            basis.push(vec![(j, k, C64::new(h, 0.0)), (k, j, C64::new(h, 0.0))]);
        }
    }
    for j in 0..d {
        for k in (j + 1)..d {
            basis.push(vec![(j, k, C64::new(0.0, -h)), (k, j, C64::new(0.0, h))]);
        }
    }
    for l in 1..d {
        let c = 1.0 / ((l * (l + 1)) as f64).sqrt();
        let mut e: Vec<(usize, usize, C64)> = (0..l).map(|m| (m, m, C64::new(c, 0.0))).collect();
        e.push((l, l, C64::new(-(l as f64) * c, 0.0)));
        basis.push(e);
    }
    basis
}

pub fn gell_mann_matrices(d: usize) -> Vec<ComplexMatrix> {
    gell_mann_basis(d)
        .into_iter()
        .map(|entries| {
            let mut m = ComplexMatrix::zeros(d, d);
            for (i, j, v) in entries {
                m[(i, j)] += v;
            }
            m
        })
        .collect()
}

/// Sparse entries of `G ⊗ I` on `dims` with `G` acting on the ordered
/// subsystem list `positions`.
fn lift_entries(local: &[(usize, usize, C64)], dims: &[usize], positions: &[usize]) -> Vec<(usize, usize, C64)> {
    let n = dims.len();
    let mut strides = vec![1usize; n];
    for i in (0..n.saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * dims[i + 1];
    }
    let local_dims: Vec<usize> = positions.iter().map(|&p| dims[p]).collect();
    let others: Vec<usize> = (0..n).filter(|i| !positions.contains(i)).collect();
    let other_count: usize = others.iter().map(|&i| dims[i]).product();

    let offset = |local_index: usize| -> usize {
        let mut rem = local_index;
        let mut off = 0;
        for (slot, &p) in positions.iter().enumerate().rev() {
            off += (rem % local_dims[slot]) * strides[p];
            rem /= local_dims[slot];
        }
        off
    };
    let mut out = Vec::with_capacity(local.len() * other_count);
    for o in 0..other_count {
        let mut rem = o;
        let mut base = 0;
        for &p in others.iter().rev() {
            base += (rem % dims[p]) * strides[p];
            rem /= dims[p];
        }
        for &(r, c, v) in local {
            out.push((base + offset(r), base + offset(c), v));
        }
    }
    out
}

/// Real embedding of a sparse Hermitian operator as an upper-triangle
/// sparse symmetric matrix of side `2n`.
fn embed_sparse(entries: &[(usize, usize, C64)], n: usize) -> SparseSymmetric {
    let mut s = SparseSymmetric::new(2 * n);
    for &(i, j, v) in entries {
        if i <= j {
            s.push(i, j, v.re);
            s.push(n + i, n + j, v.re);
        }
        s.push(i, n + j, -v.im);
    }
    s
}

/// `Tr(G X) = value` for Hermitian `G` (given by entries), as a real
/// constraint `Tr(R(G) Y) = 2·value`.
fn hermitian_constraint(entries: &[(usize, usize, C64)], n: usize, value: f64) -> Constraint {
    Constraint::new(embed_sparse(entries, n), 2.0 * value)
}

fn expectation(entries: &[(usize, usize, C64)], rho: &ComplexMatrix) -> f64 {
    // Tr(G ρ) = Σ G_ij ρ_ji
    entries.iter().map(|&(i, j, v)| (v * rho[(j, i)]).re).sum()
}

/// Real SDP for an extension problem together with the sizes of each
/// constraint group, in order.
#[derive(Clone, Debug)]
pub struct ExtensionSdp {
    pub problem: SdpProblem,
    pub groups: Vec<(String, usize)>,
}

pub fn build_extension_sdp(p: &ExtensionProblem) -> Result<ExtensionSdp> {
    let dims = p.extension_dims();
    let n: usize = dims.iter().product();
    let d_ab = p.d_a() * p.d_b();
    let mut constraints = Vec::new();
    let mut groups = Vec::new();

    // unit trace: Tr Y = 2 Tr X = 2
    let mut id = SparseSymmetric::new(2 * n);
    for i in 0..2 * n {
        id.push(i, i, 1.0);
    }
    constraints.push(Constraint::new(id, 2.0));
    groups.push(("trace".to_string(), 1));

    // Y = [[P, Q], [R, S]] represents a Hermitian matrix iff P = S and Q = −Qᵀ
    let before = constraints.len();
    for i in 0..n {
        for j in i..n {
            let mut c = SparseSymmetric::new(2 * n);
            let w = if i == j { 1.0 } else { 0.5 };
            c.push(i, j, w);
            c.push(n + i, n + j, -w);
            constraints.push(Constraint::new(c, 0.0));
            let mut c = SparseSymmetric::new(2 * n);
            c.push(i, n + j, 0.5);
            if i != j {
                c.push(j, n + i, 0.5);
            }
            constraints.push(Constraint::new(c, 0.0));
        }
    }
    groups.push(("hermitian_structure".to_string(), constraints.len() - before));

    let local_basis = gell_mann_basis(d_ab);
    let marginal_group = |b_pos: usize, constraints: &mut Vec<Constraint>| {
        for g in &local_basis {
            let lifted = lift_entries(g, &dims, &[0, b_pos]);
            constraints.push(hermitian_constraint(&lifted, n, expectation(g, p.rho.matrix())));
        }
    };

    match p.variant {
        Variant::PermutationInvariant => {
            let full_basis = gell_mann_basis(n);
            for j in 2..=p.k {
                let mut perm: Vec<usize> = (0..dims.len()).collect();
                perm.swap(1, j);
                let map = permutation_index_map(&dims, &perm);
                let before = constraints.len();
                let inverse = invert(&map);
                for h in &full_basis {
                    // an off-diagonal element and its image give the same equality up to sign
                    let (r0, c0) = (h[0].0, h[0].1);
                    if r0 != c0 {
                        let (r1, c1) = (inverse[r0].min(inverse[c0]), inverse[r0].max(inverse[c0]));
                        if (r1, c1) < (r0.min(c0), r0.max(c0)) {
                            continue;
                        }
                    }
                    // Tr[(H − P H P†) X] = 0 with (P H P†)[r][c] = H[map r][map c]
                    let mut diff: std::collections::BTreeMap<(usize, usize), C64> = Default::default();
                    for &(r, c, v) in h {
                        *diff.entry((r, c)).or_default() += v;
                    }
                    for &(r, c, v) in h {
                        *diff.entry((inverse[r], inverse[c])).or_default() -= v;
                    }
                    let entries: Vec<(usize, usize, C64)> =
                        diff.into_iter().filter(|(_, v)| v.norm() > 1e-15).map(|((r, c), v)| (r, c, v)).collect();
                    if !entries.is_empty() {
                        constraints.push(hermitian_constraint(&entries, n, 0.0));
                    }
                }
                groups.push((format!("permutation_B1_B{j}"), constraints.len() - before));
            }
            let before = constraints.len();
            marginal_group(1, &mut constraints);
            groups.push(("marginal_B1".to_string(), constraints.len() - before));
        }
        Variant::EqualMarginals => {
            for i in 1..=p.k {
                let before = constraints.len();
                marginal_group(i, &mut constraints);
                groups.push((format!("marginal_B{i}"), constraints.len() - before));
            }
        }
    }

    Ok(ExtensionSdp { problem: SdpProblem::new(2 * n, constraints)?, groups })
}

fn invert(map: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; map.len()];
    for (out, &inp) in map.iter().enumerate() {
        inv[inp] = out;
    }
    inv
}

#[derive(Clone, Debug)]
pub struct ExtendibilityResult {
    pub k: usize,
    pub variant: Variant,
    pub status: SdpStatus,
    pub extension: Option<DensityMatrix>,
    pub certificate: Option<Vec<f64>>,
    pub margin: f64,
    /// Complex dimension of the face the witness was found on, when the
    /// full problem was degenerate and the solve was restricted.
    pub face_dimension: Option<usize>,
    pub iterations: usize,
}

impl ExtendibilityResult {
    pub fn is_feasible(&self) -> bool {
        self.status == SdpStatus::Feasible
    }
}

pub fn check_extendible(rho: &DensityMatrix, k: usize, variant: Variant) -> Result<ExtendibilityResult> {
    check_problem(&ExtensionProblem::new(rho.clone(), k, variant)?)
}

pub fn check_problem(p: &ExtensionProblem) -> Result<ExtendibilityResult> {
    let sdp = build_extension_sdp(p)?;
    let solution = sdp::solve_feasibility(&sdp.problem)?;
    let mut result = interpret(p, &sdp.problem, &solution, None)?;

    if result.status == SdpStatus::Borderline {
        if let Some(face) = support_face(p)? {
            let s = face.cols();
            if s == 0 {
                return Ok(result);
            }
            let basis = embed_matrix(&face);
            let restricted = match sdp.problem.restrict(&basis) {
                Ok(r) => r,
                Err(_) => return Ok(result),
            };
            let reduced = match sdp::solve_feasibility(&restricted) {
                Ok(sol) => sol,
                // an inconsistent restriction leaves the Borderline verdict
                Err(Error::InconsistentAffine { .. }) => return Ok(result),
                Err(e) => return Err(e),
            };
            if reduced.status == SdpStatus::Feasible {
                let y = reduced.witness.as_ref().expect("feasible solutions carry a witness");
                let lifted = basis.matmul(y).matmul(&basis.transpose()).symmetrized();
                let lifted_solution = SdpSolution {
                    status: SdpStatus::Feasible,
                    residual: sdp.problem.residual(&lifted),
                    witness: Some(lifted),
                    certificate: None,
                    margin: reduced.margin,
                    iterations: solution.iterations + reduced.iterations,
                };
                let candidate = interpret(p, &sdp.problem, &lifted_solution, Some(s))?;
                if candidate.status == SdpStatus::Feasible {
                    result = candidate;
                }
            }
        }
    }
    Ok(result)
}

fn interpret(p: &ExtensionProblem, problem: &SdpProblem, sol: &SdpSolution, face: Option<usize>) -> Result<ExtendibilityResult> {
    let mut result = ExtendibilityResult {
        k: p.k,
        variant: p.variant,
        status: sol.status,
        extension: None,
        certificate: None,
        margin: sol.margin,
        face_dimension: face,
        iterations: sol.iterations,
    };
    match sol.status {
        SdpStatus::Feasible => {
            let y = sol.witness.as_ref().expect("feasible solutions carry a witness");
            let verified = sdp::verify_primal(y, problem)?;
            let extension = from_real_embedding(y, p.extension_dims()).ok().and_then(|op| DensityMatrix::new(op).ok());
            match extension {
                Some(ext) if verified && verify_extension(&ext, &p.rho, p.k, p.variant)? => {
                    result.extension = Some(ext);
                }
                _ => result.status = SdpStatus::Borderline,
            }
        }
        SdpStatus::Infeasible => {
            let y = sol.certificate.clone().expect("infeasible solutions carry a certificate");
            if sdp::verify_farkas(&y, problem)? {
                result.certificate = Some(y);
            } else {
                result.status = SdpStatus::Borderline;
            }
        }
        SdpStatus::Borderline => {}
    }
    Ok(result)
}

/// Orthonormal basis (columns) of `∩_i (supp ρ)_{A B_i} ⊗ (rest)`, or `None`
/// when `ρ` has full rank.
fn support_face(p: &ExtensionProblem) -> Result<Option<ComplexMatrix>> {
    let eig = hermitian_eig_matrix(p.rho.matrix());
    let kernel: Vec<usize> = (0..eig.values.len()).filter(|&i| eig.values[i] <= KERNEL_TOL).collect();
    if kernel.is_empty() {
        return Ok(None);
    }
    let d = p.rho.side();
    let mut proj = ComplexMatrix::zeros(d, d);
    for &i in &kernel {
        proj = proj.add(&ComplexMatrix::outer(&eig.vectors.column(i)));
    }
    let proj_entries: Vec<(usize, usize, C64)> = (0..d)
        .flat_map(|r| (0..d).map(move |c| (r, c)))
        .map(|(r, c)| (r, c, proj[(r, c)]))
        .filter(|e| e.2.norm() > 0.0)
        .collect();

    let dims = p.extension_dims();
    let n: usize = dims.iter().product();
    let mut total = ComplexMatrix::zeros(n, n);
    for i in 1..=p.k {
        for (r, c, v) in lift_entries(&proj_entries, &dims, &[0, i]) {
            total[(r, c)] += v;
        }
    }
    let eig = hermitian_eig_matrix(&total);
    let face: Vec<usize> = (0..n).filter(|&i| eig.values[i] <= FACE_TOL).collect();
    Ok(Some(ComplexMatrix::from_fn(n, face.len(), |r, c| eig.vectors[(r, face[c])])))
}

/// Marginal on `A B_i` (B parties numbered from 1) of a state on
/// `[d_A, d_B, …, d_B]`.
pub fn ab_marginal(rho_prime: &DensityMatrix, i: usize) -> Result<DensityMatrix> {
    let n = rho_prime.dims().len();
    if i == 0 || i >= n {
        return Err(Error::IndexOutOfRange { index: i, count: n });
    }
    let traced: Vec<usize> = (1..n).filter(|&j| j != i).collect();
    rho_prime.partial_trace(&traced)
}

/// Checks that `ρ'` is a valid state on `[d_A, d_B × k]` whose marginals
/// match `ρ` (and, for the permutation-invariant notion, that `ρ'` is
/// invariant under every transposition of B parties), entrywise to `1e-7`.
pub fn verify_extension(rho_prime: &DensityMatrix, rho: &DensityMatrix, k: usize, variant: Variant) -> Result<bool> {
    let dims = rho.dims();
    if dims.len() != 2 {
        return Err(Error::Shape(format!("reference state must be bipartite, got dims {dims:?}")));
    }
    let expected = extension_dims(dims[0], dims[1], k);
    if rho_prime.dims() != expected.as_slice() {
        return Err(Error::Shape(format!("extension dims {:?}, expected {expected:?}", rho_prime.dims())));
    }
    if DensityMatrix::new(rho_prime.op().clone()).is_err() {
        return Ok(false);
    }
    let marginal_ok = |i: usize| -> Result<bool> {
        Ok(ab_marginal(rho_prime, i)?.matrix().max_abs_diff(rho.matrix()) <= EXTENSION_TOL)
    };
    match variant {
        Variant::EqualMarginals => {
            for i in 1..=k {
                if !marginal_ok(i)? {
                    return Ok(false);
                }
            }
        }
        Variant::PermutationInvariant => {
            if !marginal_ok(1)? {
                return Ok(false);
            }
            for i in 1..=k {
                for j in (i + 1)..=k {
                    let mut perm: Vec<usize> = (0..=k).collect();
                    perm.swap(i, j);
                    let swapped = permutation_conjugate(rho_prime.op(), &perm)?;
                    if swapped.matrix().max_abs_diff(rho_prime.matrix()) > EXTENSION_TOL {
                        return Ok(false);
                    }
                }
            }
        }
    }
    Ok(true)
}

/// Averages `ρ'` over all permutations of the B parties. Marginal equality
/// of every `A B_i` is preserved, and the result is permutation invariant.
pub fn symmetrize_extension(rho_prime: &DensityMatrix) -> Result<DensityMatrix> {
    let n = rho_prime.dims().len();
    let perms = permutations(n - 1);
    let mut acc = ComplexMatrix::zeros(rho_prime.side(), rho_prime.side());
    for perm in &perms {
        let full: Vec<usize> = std::iter::once(0).chain(perm.iter().map(|&j| j + 1)).collect();
        acc = acc.add(permutation_conjugate(rho_prime.op(), &full)?.matrix());
    }
    let op = HermitianOperator::new(rho_prime.dims().to_vec(), acc.scale_real(1.0 / perms.len() as f64))?;
    DensityMatrix::new(op)
}

fn permutations(m: usize) -> Vec<Vec<usize>> {
    if m == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(m - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, m - 1);
            out.push(q);
        }
    }
    out
}

/// Traces out the last B party of a level-`k` extension, giving a level
/// `k − 1` extension of the same state.
pub fn drop_last_party(rho_prime: &DensityMatrix) -> Result<DensityMatrix> {
    let n = rho_prime.dims().len();
    rho_prime.partial_trace(&[n - 1])
}

#[derive(Clone, Debug)]
pub struct HierarchyResult {
    /// Results for `k = 2, 3, …` in order.
    pub results: Vec<ExtendibilityResult>,
    /// First level that exceeded the dimension cap, if any.
    pub truncated_at: Option<usize>,
}

impl HierarchyResult {
    /// An Infeasible level certifies entanglement.
    pub fn certifies_entanglement(&self) -> bool {
        self.results.iter().any(|r| r.status == SdpStatus::Infeasible)
    }
}

pub fn hierarchy(rho: &DensityMatrix, k_max: usize) -> Result<HierarchyResult> {
    hierarchy_with(rho, k_max, Variant::PermutationInvariant, DEFAULT_MAX_DIM)
}

pub fn hierarchy_with(rho: &DensityMatrix, k_max: usize, variant: Variant, cap: usize) -> Result<HierarchyResult> {
    let mut problems = Vec::new();
    let mut truncated_at = None;
    for k in 2..=k_max {
        match ExtensionProblem::with_cap(rho.clone(), k, variant, cap) {
            Ok(p) => problems.push(p),
            Err(Error::DimensionCap { .. }) => {
                truncated_at = Some(k);
                break;
            }
            Err(e) => return Err(e),
        }
    }
    let results = problems.par_iter().map(check_problem).collect::<Result<Vec<_>>>()?;
    Ok(HierarchyResult { results, truncated_at })
}

/// Named one-parameter state families for threshold scans.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Werner,
    BushRumsfeld,
}

impl Family {
    pub fn state(&self, p: f64) -> Result<DensityMatrix> {
        match self {
            Family::Werner => werner(p),
            Family::BushRumsfeld => bush_rumsfeld(p),
        }
    }
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "werner" => Ok(Family::Werner),
            "bush_rumsfeld" => Ok(Family::BushRumsfeld),
            other => Err(Error::UnknownFamily(other.to_string())),
        }
    }
}

/// What "feasible side" means during a bisection.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Criterion {
    Extendible { k: usize, variant: Variant },
    /// Negativity at most `PPT_TOL`.
    Ppt,
}

#[derive(Clone, Debug)]
pub struct BisectionStep {
    pub p: f64,
    pub feasible_side: bool,
    pub borderline: bool,
}

#[derive(Clone, Debug)]
pub struct ThresholdResult {
    /// Largest parameter found on the feasible side.
    pub threshold: f64,
    /// Smallest parameter found on the infeasible side.
    pub upper: f64,
    pub steps: Vec<BisectionStep>,
}

impl ThresholdResult {
    pub fn borderline_count(&self) -> usize {
        self.steps.iter().filter(|s| s.borderline).count()
    }
}

fn classify(family: Family, criterion: Criterion, p: f64) -> Result<(bool, bool)> {
    let rho = family.state(p)?;
    match criterion {
        Criterion::Ppt => Ok((negativity(&rho, 1)? <= PPT_TOL, false)),
        Criterion::Extendible { k, variant } => {
            let r = check_extendible(&rho, k, variant)?;
            Ok((r.status != SdpStatus::Infeasible, r.status == SdpStatus::Borderline))
        }
    }
}

/// Bisection for the largest feasible-side parameter. Requires `p_lo` on the
/// feasible side and `p_hi` strictly infeasible; Borderline verdicts count
/// as feasible side and are flagged in the steps.
pub fn bisect_threshold(family: Family, criterion: Criterion, p_lo: f64, p_hi: f64, width: f64) -> Result<ThresholdResult> {
    if !(p_lo < p_hi) {
        return Err(Error::Bracket(format!("p_lo = {p_lo} must be below p_hi = {p_hi}")));
    }
    let mut steps = Vec::new();
    let (lo_ok, lo_border) = classify(family, criterion, p_lo)?;
    steps.push(BisectionStep { p: p_lo, feasible_side: lo_ok, borderline: lo_border });
    if !lo_ok {
        return Err(Error::Bracket(format!("family is infeasible at p_lo = {p_lo}")));
    }
    let (hi_ok, hi_border) = classify(family, criterion, p_hi)?;
    steps.push(BisectionStep { p: p_hi, feasible_side: hi_ok, borderline: hi_border });
    if hi_ok {
        return Err(Error::Bracket(format!("family is not infeasible at p_hi = {p_hi}")));
    }
    let (mut lo, mut hi) = (p_lo, p_hi);
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        let (ok, border) = classify(family, criterion, mid)?;
        steps.push(BisectionStep { p: mid, feasible_side: ok, borderline: border });
        if ok {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(ThresholdResult { threshold: lo, upper: hi, steps })
}

/// Werner-style threshold of `k`-extendibility (permutation-invariant
/// notion) to width `1e-4`.
pub fn extendibility_threshold(family: Family, k: usize, p_lo: f64, p_hi: f64) -> Result<ThresholdResult> {
    bisect_threshold(family, Criterion::Extendible { k, variant: Variant::PermutationInvariant }, p_lo, p_hi, THRESHOLD_WIDTH)
}

/// Real-embedded witness matrix for a given extension (useful for checking
/// a hand-built extension against the SDP directly).
pub fn embed_extension(rho_prime: &DensityMatrix) -> RealMatrix {
    embed_matrix(rho_prime.matrix())
}
