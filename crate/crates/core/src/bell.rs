//! Measurement statistics on bipartite states, hidden-variable models built
//! from symmetric extensions, CHSH evaluation, and membership in the local
//! polytope of the two-setting two-outcome scenario.
//!
//! A `k`-extension `ρ'` on `A B₁ … B_k` with Bob measurements `N¹ … N^k`
//! gives a hidden variable `λ = (b₁, …, b_k)`: measure every `B_y` with `N^y`
//! at once. The conditional state `ρ_A^λ` then answers any Alice
//! measurement, and Bob's answer to setting `y` is just `b_y`. Because each
//! `A B_y` marginal equals `ρ`, the resulting table matches the quantum one.

use crate::error::{Error, Result};
use crate::extendibility::{ab_marginal, verify_extension, Variant};
use crate::linalg::{hermitian_eig_matrix, symmetric_eig, ComplexMatrix, RealMatrix, C64, HERM_TOL};
use crate::sdp::{self, Constraint, SdpProblem, SdpStatus, SparseSymmetric};
use crate::states::{random_unitary, DensityMatrix};

/// Tolerance on POVM positivity and completeness.
pub const POVM_TOL: f64 = 1e-9;
/// Tolerance on table normalization and no-signaling.
pub const TABLE_TOL: f64 = 1e-9;
/// Entries may dip this far below zero.
pub const NEGATIVE_TOL: f64 = 1e-12;
/// Hidden-variable branches lighter than this are zeroed.
pub const WEIGHT_FLOOR: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq)]
pub struct Measurement {
    elements: Vec<ComplexMatrix>,
}

impl Measurement {
    pub fn new(elements: Vec<ComplexMatrix>) -> Result<Self> {
        let Some(first) = elements.first() else {
            return Err(Error::InvalidMeasurement("no elements".into()));
        };
        let d = first.rows();
        let mut sum = ComplexMatrix::zeros(d, d);
        for (i, e) in elements.iter().enumerate() {
            if e.rows() != d || e.cols() != d {
                return Err(Error::InvalidMeasurement(format!("element {i} is {}x{}, expected {d}x{d}", e.rows(), e.cols())));
            }
            if !e.is_finite() {
                return Err(Error::NonFinite);
            }
            let dev = e.hermiticity_deviation();
            if dev > HERM_TOL {
                return Err(Error::InvalidMeasurement(format!("element {i} is not Hermitian (deviation {dev:e})")));
            }
            let min = hermitian_eig_matrix(&e.hermitian_part()).values[0];
            if min < -POVM_TOL {
                return Err(Error::InvalidMeasurement(format!("element {i} has eigenvalue {min:e}")));
            }
            sum = sum.add(e);
        }
        let dev = sum.max_abs_diff(&ComplexMatrix::identity(d));
        if dev > POVM_TOL {
            return Err(Error::InvalidMeasurement(format!("elements sum to identity only within {dev:e}")));
        }
        Ok(Self { elements: elements.iter().map(ComplexMatrix::hermitian_part).collect() })
    }

    /// Rank-one projectors onto the columns of a unitary.
    pub fn projective(basis: &ComplexMatrix) -> Result<Self> {
        Self::new((0..basis.cols()).map(|j| ComplexMatrix::outer(&basis.column(j))).collect())
    }

    /// Qubit spin along a unit direction: outcome 0 is `(I + n·σ)/2`.
    pub fn spin(direction: [f64; 3]) -> Result<Self> {
        let norm = direction.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::Unnormalized { norm });
        }
        let n = spin_operator(direction);
        let id = ComplexMatrix::identity(2);
        Self::new(vec![id.add(&n).scale_real(0.5), id.sub(&n).scale_real(0.5)])
    }

    /// Projective measurement in a Haar-random basis.
    pub fn random_projective(d: usize, seed: u64) -> Result<Self> {
        Self::projective(&random_unitary(d, seed))
    }

    pub fn elements(&self) -> &[ComplexMatrix] {
        &self.elements
    }

    pub fn outcomes(&self) -> usize {
        self.elements.len()
    }

    pub fn dim(&self) -> usize {
        self.elements[0].rows()
    }

    /// Outcome probabilities on a single-system state matrix (clamped to
    /// be nonnegative).
    pub fn probabilities(&self, rho: &ComplexMatrix) -> Vec<f64> {
        self.elements.iter().map(|e| e.trace_product(rho).re.max(0.0)).collect()
    }
}

/// `n·σ` for a real 3-vector.
pub fn spin_operator(n: [f64; 3]) -> ComplexMatrix {
    ComplexMatrix::new(
        2,
        2,
        vec![C64::new(n[2], 0.0), C64::new(n[0], -n[1]), C64::new(n[0], n[1]), C64::new(-n[2], 0.0)],
    )
    .expect("finite entries")
}

pub fn pauli(i: usize) -> ComplexMatrix {
    let mut n = [0.0; 3];
    n[i] = 1.0;
    spin_operator(n)
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub alice: Vec<Measurement>,
    pub bob: Vec<Measurement>,
}

impl Scenario {
    pub fn new(alice: Vec<Measurement>, bob: Vec<Measurement>) -> Result<Self> {
        for (side, ms) in [("Alice", &alice), ("Bob", &bob)] {
            if ms.is_empty() {
                return Err(Error::InvalidMeasurement(format!("{side} has no measurements")));
            }
            if ms.iter().any(|m| m.dim() != ms[0].dim()) {
                return Err(Error::InvalidMeasurement(format!("{side}'s measurements act on different dimensions")));
            }
        }
        Ok(Self { alice, bob })
    }

    pub fn d_a(&self) -> usize {
        self.alice[0].dim()
    }

    pub fn d_b(&self) -> usize {
        self.bob[0].dim()
    }

    pub fn alice_outcomes(&self) -> Vec<usize> {
        self.alice.iter().map(Measurement::outcomes).collect()
    }

    pub fn bob_outcomes(&self) -> Vec<usize> {
        self.bob.iter().map(Measurement::outcomes).collect()
    }

    /// Two settings per side, two outcomes each.
    pub fn spin_2x2(alice: [[f64; 3]; 2], bob: [[f64; 3]; 2]) -> Result<Self> {
        Self::new(
            alice.iter().map(|&n| Measurement::spin(n)).collect::<Result<_>>()?,
            bob.iter().map(|&n| Measurement::spin(n)).collect::<Result<_>>()?,
        )
    }
}

/// `p(a, b | x, y)` stored as `p[x][y][a][b]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilityTable {
    alice_outcomes: Vec<usize>,
    bob_outcomes: Vec<usize>,
    p: Vec<Vec<Vec<Vec<f64>>>>,
}

impl ProbabilityTable {
    /// Validates nonnegativity, normalization and no-signaling.
    pub fn new(p: Vec<Vec<Vec<Vec<f64>>>>) -> Result<Self> {
        let alice_outcomes: Vec<usize> = p.iter().map(|row| row.first().map_or(0, Vec::len)).collect();
        let bob_outcomes: Vec<usize> = p
            .first()
            .ok_or_else(|| Error::InvalidTable("no Alice settings".into()))?
            .iter()
            .map(|cell| cell.first().map_or(0, Vec::len))
            .collect();
        if bob_outcomes.is_empty() {
            return Err(Error::InvalidTable("no Bob settings".into()));
        }
        for (x, row) in p.iter().enumerate() {
            if row.len() != bob_outcomes.len() {
                return Err(Error::InvalidTable(format!("setting x={x} has {} Bob settings", row.len())));
            }
            for (y, cell) in row.iter().enumerate() {
                if cell.len() != alice_outcomes[x] || cell.iter().any(|r| r.len() != bob_outcomes[y]) {
                    return Err(Error::InvalidTable(format!("cell (x={x}, y={y}) has an inconsistent shape")));
                }
                for (a, r) in cell.iter().enumerate() {
                    for (b, &v) in r.iter().enumerate() {
                        if !v.is_finite() {
                            return Err(Error::NonFinite);
                        }
                        if v < -NEGATIVE_TOL {
                            return Err(Error::InvalidTable(format!("p({a},{b}|{x},{y}) = {v:e} is negative")));
                        }
                    }
                }
                let total: f64 = cell.iter().flatten().sum();
                if (total - 1.0).abs() > TABLE_TOL {
                    return Err(Error::InvalidTable(format!("cell (x={x}, y={y}) sums to {total}, off by {:e}", total - 1.0)));
                }
            }
        }
        let t = Self { alice_outcomes, bob_outcomes, p };
        let signaling = t.signaling();
        if signaling > TABLE_TOL {
            return Err(Error::InvalidTable(format!("marginals depend on the remote setting by {signaling:e}")));
        }
        Ok(t)
    }

    pub fn get(&self, x: usize, y: usize, a: usize, b: usize) -> f64 {
        self.p[x][y][a][b]
    }

    pub fn entries(&self) -> &[Vec<Vec<Vec<f64>>>] {
        &self.p
    }

    pub fn alice_settings(&self) -> usize {
        self.alice_outcomes.len()
    }

    pub fn bob_settings(&self) -> usize {
        self.bob_outcomes.len()
    }

    pub fn alice_outcomes(&self) -> &[usize] {
        &self.alice_outcomes
    }

    pub fn bob_outcomes(&self) -> &[usize] {
        &self.bob_outcomes
    }

    pub fn alice_marginal(&self, x: usize, y: usize) -> Vec<f64> {
        self.p[x][y].iter().map(|r| r.iter().sum()).collect()
    }

    pub fn bob_marginal(&self, x: usize, y: usize) -> Vec<f64> {
        (0..self.bob_outcomes[y]).map(|b| self.p[x][y].iter().map(|r| r[b]).sum()).collect()
    }

    /// Largest dependence of one party's marginal on the other's setting.
    pub fn signaling(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for x in 0..self.alice_settings() {
            let reference = self.alice_marginal(x, 0);
            for y in 1..self.bob_settings() {
                for (u, v) in reference.iter().zip(self.alice_marginal(x, y)) {
                    worst = worst.max((u - v).abs());
                }
            }
        }
        for y in 0..self.bob_settings() {
            let reference = self.bob_marginal(0, y);
            for x in 1..self.alice_settings() {
                for (u, v) in reference.iter().zip(self.bob_marginal(x, y)) {
                    worst = worst.max((u - v).abs());
                }
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        if self.alice_outcomes != other.alice_outcomes || self.bob_outcomes != other.bob_outcomes {
            return Err(Error::InvalidTable("tables have different shapes".into()));
        }
        Ok(self
            .p
            .iter()
            .flatten()
            .flatten()
            .flatten()
            .zip(other.p.iter().flatten().flatten().flatten())
            .map(|(u, v)| (u - v).abs())
            .fold(0.0, f64::max))
    }

    pub fn is_dichotomic_2x2(&self) -> bool {
        self.alice_outcomes == [2, 2] && self.bob_outcomes == [2, 2]
    }

    /// The table restricted to the given settings.
    pub fn sub_table(&self, alice: &[usize], bob: &[usize]) -> Result<Self> {
        let check = |sel: &[usize], count: usize| sel.iter().find(|&&i| i >= count).map(|&index| Error::IndexOutOfRange { index, count });
        if let Some(e) = check(alice, self.alice_settings()).or_else(|| check(bob, self.bob_settings())) {
            return Err(e);
        }
        Self::new(alice.iter().map(|&x| bob.iter().map(|&y| self.p[x][y].clone()).collect()).collect())
    }

    pub fn uniform(alice_outcomes: &[usize], bob_outcomes: &[usize]) -> Result<Self> {
        Self::new(
            alice_outcomes
                .iter()
                .map(|&oa| bob_outcomes.iter().map(|&ob| vec![vec![1.0 / (oa * ob) as f64; ob]; oa]).collect())
                .collect(),
        )
    }
}

/// `Tr[(A ⊗ B) ρ]` for `ρ` on `[d_a, d_b]` without forming the product.
fn local_expectation(a: &ComplexMatrix, b: &ComplexMatrix, rho: &ComplexMatrix) -> f64 {
    let (da, db) = (a.rows(), b.rows());
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..da {
        for j in 0..da {
            let aij = a[(i, j)];
            if aij.norm_sqr() == 0.0 {
                continue;
            }
            for k in 0..db {
                for l in 0..db {
                    // (A⊗B)[(i k), (j l)] ρ[(j l), (i k)]
                    acc += aij * b[(k, l)] * rho[(j * db + l, i * db + k)];
                }
            }
        }
    }
    acc.re
}

fn check_bipartite(rho: &DensityMatrix, s: &Scenario) -> Result<()> {
    if rho.dims() != [s.d_a(), s.d_b()] {
        return Err(Error::Shape(format!("state dims {:?} do not match measurements on [{}, {}]", rho.dims(), s.d_a(), s.d_b())));
    }
    Ok(())
}

/// `p(a, b | x, y) = Tr[(M^x_a ⊗ N^y_b) ρ]`.
pub fn joint_table(rho: &DensityMatrix, s: &Scenario) -> Result<ProbabilityTable> {
    check_bipartite(rho, s)?;
    let p = s
        .alice
        .iter()
        .map(|ma| {
            s.bob
                .iter()
                .map(|mb| {
                    ma.elements()
                        .iter()
                        .map(|ea| mb.elements().iter().map(|eb| local_expectation(ea, eb, rho.matrix()).max(0.0)).collect())
                        .collect()
                })
                .collect()
        })
        .collect();
    ProbabilityTable::new(p)
}

#[derive(Clone, Debug)]
enum AliceResponse {
    /// Normalized conditional states `ρ_A^λ`; `None` for zeroed branches.
    Conditional { d_a: usize, states: Vec<Option<ComplexMatrix>> },
    /// `p(a | x, λ)` as `table[λ][x][a]`.
    Table(Vec<Vec<Vec<f64>>>),
}

#[derive(Clone, Debug)]
pub struct LhvModel {
    lambdas: Vec<Vec<usize>>,
    weights: Vec<f64>,
    alice: AliceResponse,
}

impl LhvModel {
    /// Explicit model with tabulated Alice responses `table[λ][x][a]`.
    pub fn from_tables(lambdas: Vec<Vec<usize>>, weights: Vec<f64>, alice: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        if lambdas.len() != weights.len() || lambdas.len() != alice.len() {
            return Err(Error::InvalidTable("lambda, weight and response counts differ".into()));
        }
        for (l, rows) in alice.iter().enumerate() {
            for (x, row) in rows.iter().enumerate() {
                let s: f64 = row.iter().sum();
                if (s - 1.0).abs() > TABLE_TOL || row.iter().any(|&v| v < -NEGATIVE_TOL) {
                    return Err(Error::InvalidTable(format!("response of lambda {l} to setting {x} is not a distribution")));
                }
            }
        }
        let model = Self { lambdas, weights, alice: AliceResponse::Table(alice) };
        model.check_weights()?;
        Ok(model)
    }

    fn check_weights(&self) -> Result<()> {
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > TABLE_TOL || self.weights.iter().any(|&w| w < 0.0 || !w.is_finite()) {
            return Err(Error::InvalidTable(format!("weights sum to {total}")));
        }
        Ok(())
    }

    pub fn lambdas(&self) -> &[Vec<usize>] {
        &self.lambdas
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    /// Bob's deterministic answer to setting `y` under `λ`.
    pub fn bob_response(&self, y: usize, lambda: usize) -> usize {
        self.lambdas[lambda][y]
    }

    /// `p(a | x, λ)` for an Alice measurement given by index (tabulated
    /// models) or by value (models built from conditional states).
    pub fn alice_response(&self, x: usize, m: Option<&Measurement>, lambda: usize) -> Result<Vec<f64>> {
        match (&self.alice, m) {
            (AliceResponse::Conditional { d_a, states }, Some(m)) => {
                if m.dim() != *d_a {
                    return Err(Error::Shape(format!("Alice measurement on dimension {}, model on {d_a}", m.dim())));
                }
                Ok(match &states[lambda] {
                    Some(sigma) => m.probabilities(sigma),
                    None => vec![1.0 / m.outcomes() as f64; m.outcomes()],
                })
            }
            (AliceResponse::Conditional { .. }, None) => Err(Error::InvalidMeasurement("model needs the Alice measurement itself".into())),
            (AliceResponse::Table(t), _) => t[lambda]
                .get(x)
                .cloned()
                .ok_or(Error::IndexOutOfRange { index: x, count: t[lambda].len() }),
        }
    }

    /// Normalized conditional state for branch `λ`, when the model has one.
    pub fn conditional_state(&self, lambda: usize) -> Option<&ComplexMatrix> {
        match &self.alice {
            AliceResponse::Conditional { states, .. } => states[lambda].as_ref(),
            AliceResponse::Table(_) => None,
        }
    }
}

fn tuples(outcomes: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &o in outcomes {
        out = out.into_iter().flat_map(|t| (0..o).map(move |b| [t.clone(), vec![b]].concat())).collect();
    }
    out
}

/// Builds the hidden-variable model from an extension `ρ'` on
/// `[d_A, d_B, …, d_B]` with one Bob measurement per B party.
pub fn lhv_from_extension(rho_prime: &DensityMatrix, s: &Scenario) -> Result<LhvModel> {
    let dims = rho_prime.dims();
    let k = dims.len().saturating_sub(1);
    if k < 1 || s.bob.len() != k {
        return Err(Error::InvalidExtension(format!("{} Bob measurements for an extension with {k} B parties", s.bob.len())));
    }
    if dims[0] != s.d_a() || dims[1..].iter().any(|&d| d != s.d_b()) {
        return Err(Error::Shape(format!("extension dims {dims:?} do not match the scenario")));
    }
    if k >= 2 {
        let rho = ab_marginal(rho_prime, 1)?;
        if !verify_extension(rho_prime, &rho, k, Variant::EqualMarginals)? {
            return Err(Error::InvalidExtension("the A B_i marginals are not all equal".into()));
        }
    }
    let d_a = dims[0];
    let d_rest: usize = dims[1..].iter().product();
    let lambdas = tuples(&s.bob_outcomes());
    let m = rho_prime.matrix();
    let mut weights = Vec::with_capacity(lambdas.len());
    let mut states = Vec::with_capacity(lambdas.len());
    for lambda in &lambdas {
        let n = crate::linalg::kron_all(lambda.iter().zip(&s.bob).map(|(&b, meas)| &meas.elements()[b]));
        // σ_{aa'} = Σ_{ββ'} N_{ββ'} ρ'_{(a β'), (a' β)}
        let mut sigma = ComplexMatrix::zeros(d_a, d_a);
        for a in 0..d_a {
            for a2 in 0..d_a {
                let mut acc = C64::new(0.0, 0.0);
                for beta in 0..d_rest {
                    for beta2 in 0..d_rest {
                        acc += n[(beta, beta2)] * m[(a * d_rest + beta2, a2 * d_rest + beta)];
                    }
                }
                sigma[(a, a2)] = acc;
            }
        }
        let w = sigma.trace().re;
        if w < WEIGHT_FLOOR {
            weights.push(0.0);
            states.push(None);
        } else {
            weights.push(w);
            states.push(Some(sigma.hermitian_part().scale_real(1.0 / w)));
        }
    }
    let model = LhvModel { lambdas, weights, alice: AliceResponse::Conditional { d_a, states } };
    model.check_weights()?;
    Ok(model)
}

/// `p(a, b | x, y) = Σ_λ w(λ) p(a | x, λ) [b = λ_y]`. For models built from
/// conditional states the Alice measurements are taken from `s`; for
/// tabulated models only the outcome counts of `s` are used.
pub fn lhv_table(model: &LhvModel, s: &Scenario) -> Result<ProbabilityTable> {
    let bob_outcomes = s.bob_outcomes();
    if model.lambdas.iter().any(|l| l.len() != bob_outcomes.len() || l.iter().zip(&bob_outcomes).any(|(&b, &o)| b >= o)) {
        return Err(Error::InvalidTable("hidden variables do not match Bob's settings".into()));
    }
    let mut p: Vec<Vec<Vec<Vec<f64>>>> = s
        .alice
        .iter()
        .map(|ma| bob_outcomes.iter().map(|&ob| vec![vec![0.0; ob]; ma.outcomes()]).collect())
        .collect();
    for (l, lambda) in model.lambdas.iter().enumerate() {
        let w = model.weights[l];
        if w == 0.0 {
            continue;
        }
        for (x, ma) in s.alice.iter().enumerate() {
            let resp = model.alice_response(x, Some(ma), l)?;
            if resp.len() != ma.outcomes() {
                return Err(Error::InvalidTable(format!("response to setting {x} has {} outcomes", resp.len())));
            }
            for (y, &b) in lambda.iter().enumerate() {
                for (a, &pa) in resp.iter().enumerate() {
                    p[x][y][a][b] += w * pa;
                }
            }
        }
    }
    ProbabilityTable::new(p)
}

fn require_2x2(t: &ProbabilityTable) -> Result<()> {
    if !t.is_dichotomic_2x2() {
        return Err(Error::InvalidTable(format!(
            "expected 2 settings with 2 outcomes per side, got {:?} and {:?}",
            t.alice_outcomes, t.bob_outcomes
        )));
    }
    Ok(())
}

/// `E_xy = Σ (−1)^{a+b} p(a, b | x, y)`.
pub fn correlator(t: &ProbabilityTable, x: usize, y: usize) -> f64 {
    let c = &t.p[x][y];
    c[0][0] - c[0][1] - c[1][0] + c[1][1]
}

/// `E₀₀ + E₀₁ + E₁₀ − E₁₁`.
pub fn chsh_value(t: &ProbabilityTable) -> Result<f64> {
    require_2x2(t)?;
    Ok(correlator(t, 0, 0) + correlator(t, 0, 1) + correlator(t, 1, 0) - correlator(t, 1, 1))
}

/// The eight CHSH expressions `±(E₀₀ + E₀₁ + E₁₀ + E₁₁ − 2E_{xy})`.
pub fn chsh_forms(t: &ProbabilityTable) -> Result<[f64; 8]> {
    require_2x2(t)?;
    let e = [correlator(t, 0, 0), correlator(t, 0, 1), correlator(t, 1, 0), correlator(t, 1, 1)];
    let total: f64 = e.iter().sum();
    let mut out = [0.0; 8];
    for i in 0..4 {
        out[2 * i] = total - 2.0 * e[i];
        out[2 * i + 1] = -out[2 * i];
    }
    Ok(out)
}

/// `T_ij = Tr[ρ (σ_i ⊗ σ_j)]`.
pub fn correlation_matrix(rho: &DensityMatrix) -> Result<RealMatrix> {
    if rho.dims() != [2, 2] {
        return Err(Error::Shape(format!("expected a two-qubit state, got dims {:?}", rho.dims())));
    }
    let sig: Vec<ComplexMatrix> = (0..3).map(pauli).collect();
    Ok(RealMatrix::from_fn(3, 3, |i, j| local_expectation(&sig[i], &sig[j], rho.matrix())))
}

/// Largest CHSH value over spin measurements, `2 √(t₁² + t₂²)` with the two
/// largest singular values of the correlation matrix.
pub fn chsh_max_2qubit(rho: &DensityMatrix) -> Result<f64> {
    let t = correlation_matrix(rho)?;
    let gram = t.transpose().matmul(&t);
    let ev = symmetric_eig(&gram).values;
    Ok(2.0 * (ev[2].max(0.0) + ev[1].max(0.0)).sqrt())
}

/// Deterministic strategy `λ = 8α₀ + 4α₁ + 2β₀ + β₁`.
fn strategy(lambda: usize) -> ([usize; 2], [usize; 2]) {
    ([(lambda >> 3) & 1, (lambda >> 2) & 1], [(lambda >> 1) & 1, lambda & 1])
}

/// Table of the deterministic strategy `λ`.
pub fn deterministic_table(lambda: usize) -> ProbabilityTable {
    let (al, bo) = strategy(lambda % 16);
    let p = (0..2)
        .map(|x| {
            (0..2)
                .map(|y| (0..2).map(|a| (0..2).map(|b| f64::from(u8::from(a == al[x] && b == bo[y]))).collect()).collect())
                .collect()
        })
        .collect();
    ProbabilityTable::new(p).expect("deterministic tables are valid")
}

#[derive(Clone, Debug)]
pub struct MembershipVerdict {
    pub member: bool,
    pub status: SdpStatus,
    /// Set when the solver could not decide and the table was reported as
    /// outside.
    pub borderline: bool,
    /// Weights of the 16 deterministic strategies when `member`.
    pub weights: Option<Vec<f64>>,
    pub margin: f64,
}

pub fn local_2x2_membership(t: &ProbabilityTable) -> Result<bool> {
    Ok(local_2x2_membership_detail(t)?.member)
}

pub fn local_2x2_membership_detail(t: &ProbabilityTable) -> Result<MembershipVerdict> {
    require_2x2(t)?;
    let all: Vec<usize> = (0..16).collect();
    let full = membership_on(t, &all)?;
    if full.status != SdpStatus::Borderline {
        return Ok(full);
    }
    // a vanishing entry forbids every strategy that would populate it
    let support: Vec<usize> = all
        .into_iter()
        .filter(|&l| {
            let (al, bo) = strategy(l);
            (0..2).all(|x| (0..2).all(|y| t.get(x, y, al[x], bo[y]) > NEGATIVE_TOL))
        })
        .collect();
    if support.is_empty() || support.len() == 16 {
        return Ok(full);
    }
    let reduced = membership_on(t, &support)?;
    Ok(if reduced.status == SdpStatus::Borderline { full } else { reduced })
}

/// Feasibility of the table as a mixture of the listed strategies, on a
/// diagonal variable. Matched coordinates: normalization, `p_A(0|x)`,
/// `p_B(0|y)` and `p(0,0|x,y)`, which fix a no-signaling table.
fn membership_on(t: &ProbabilityTable, support: &[usize]) -> Result<MembershipVerdict> {
    let n = support.len();
    let mut constraints = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let mut c = SparseSymmetric::new(n);
            c.push(i, j, 0.5);
            constraints.push(Constraint::new(c, 0.0));
        }
    }
    let row = |f: &dyn Fn(usize) -> f64| {
        let mut c = SparseSymmetric::new(n);
        for (i, &l) in support.iter().enumerate() {
            c.push(i, i, f(l));
        }
        c
    };
    constraints.push(Constraint::new(row(&|_| 1.0), 1.0));
    for x in 0..2 {
        let pa = 0.5 * (t.alice_marginal(x, 0)[0] + t.alice_marginal(x, 1)[0]);
        constraints.push(Constraint::new(row(&|l| f64::from(u8::from(strategy(l).0[x] == 0))), pa));
    }
    for y in 0..2 {
        let pb = 0.5 * (t.bob_marginal(0, y)[0] + t.bob_marginal(1, y)[0]);
        constraints.push(Constraint::new(row(&|l| f64::from(u8::from(strategy(l).1[y] == 0))), pb));
    }
    for x in 0..2 {
        for y in 0..2 {
            let f = move |l: usize| {
                let (al, bo) = strategy(l);
                f64::from(u8::from(al[x] == 0 && bo[y] == 0))
            };
            constraints.push(Constraint::new(row(&f), t.get(x, y, 0, 0)));
        }
    }
    let problem = SdpProblem::new(n, constraints)?;
    let sol = match sdp::solve_feasibility(&problem) {
        Ok(s) => s,
        // no mixture of the allowed strategies reproduces the coordinates
        Err(Error::InconsistentAffine { .. }) => {
            return Ok(MembershipVerdict { member: false, status: SdpStatus::Infeasible, borderline: false, weights: None, margin: f64::NEG_INFINITY })
        }
        Err(e) => return Err(e),
    };
    let mut verdict =
        MembershipVerdict { member: false, status: sol.status, borderline: sol.status == SdpStatus::Borderline, weights: None, margin: sol.margin };
    if sol.status == SdpStatus::Feasible {
        let w = sol.witness.as_ref().expect("feasible solutions carry a witness");
        let mut weights = vec![0.0; 16];
        for (i, &l) in support.iter().enumerate() {
            weights[l] = w[(i, i)];
        }
        verdict.member = true;
        verdict.weights = Some(weights);
    }
    Ok(verdict)
}
