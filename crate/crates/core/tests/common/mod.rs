//! Shared generators, independent oracles and solver audits for the
//! integration suites.

#![allow(dead_code)]

use monogamy::bell::{chsh_value, joint_table, pauli, spin_operator, Scenario};
use monogamy::extendibility::{build_extension_sdp, embed_extension, ExtendibilityResult, ExtensionProblem};
use monogamy::linalg::{eigenvalues, kron, ComplexMatrix};
use monogamy::sdp::{verify_farkas, verify_primal, SdpStatus};
use monogamy::states::{pure_density, random_density, random_pure_vector};
use monogamy::{DensityMatrix, HermitianOperator, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `Σ p_i ρ_A^i ⊗ ρ_B^i` with 2 to 4 random qubit components, plus the
/// components themselves.
pub struct Separable {
    pub rho: DensityMatrix,
    pub parts: Vec<(f64, DensityMatrix, DensityMatrix)>,
}

pub fn separable_mixture(seed: u64) -> Separable {
    let mut r = rng(seed ^ 0x5e9a);
    let count = r.random_range(2..=4);
    let raw: Vec<f64> = (0..count).map(|_| r.random_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let parts: Vec<(f64, DensityMatrix, DensityMatrix)> = raw
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let base = 1000 * seed + 10 * i as u64;
            (w / total, random_density(&[2], base + 1).unwrap(), random_density(&[2], base + 2).unwrap())
        })
        .collect();
    let products: Vec<DensityMatrix> = parts.iter().map(|(_, a, b)| a.tensor(b)).collect();
    let weighted: Vec<(f64, &DensityMatrix)> = parts.iter().zip(&products).map(|((w, _, _), p)| (*w, p)).collect();
    Separable { rho: DensityMatrix::mixture(&weighted).unwrap(), parts }
}

impl Separable {
    /// `Σ p_i ρ_A^i ⊗ (ρ_B^i)^{⊗k}`.
    pub fn extension(&self, k: usize) -> DensityMatrix {
        let terms: Vec<DensityMatrix> = self
            .parts
            .iter()
            .map(|(_, a, b)| {
                let mut t = a.tensor(b);
                for _ in 1..k {
                    t = t.tensor(b);
                }
                t
            })
            .collect();
        let weighted: Vec<(f64, &DensityMatrix)> = self.parts.iter().zip(&terms).map(|((w, _, _), t)| (*w, t)).collect();
        DensityMatrix::mixture(&weighted).unwrap()
    }
}

pub fn pure_product(seed: u64) -> DensityMatrix {
    let a = random_pure_vector(2, 7919 * seed + 1);
    let b = random_pure_vector(2, 7919 * seed + 2);
    let v = kron(&ComplexMatrix::column_vector(&a), &ComplexMatrix::column_vector(&b));
    pure_density(v.as_slice(), vec![2, 2]).unwrap()
}

/// `q |ψ⟩⟨ψ| + (1 − q) σ` with random pure `ψ` and mixed `σ`, which lands
/// on both sides of every extendibility boundary.
pub fn noisy_pure(seed: u64) -> DensityMatrix {
    let q = rng(seed ^ 0xa11ce).random_range(0.0..1.0);
    let psi = pure_density(&random_pure_vector(4, 31 * seed + 3), vec![2, 2]).unwrap();
    let sigma = random_density(&[2, 2], 31 * seed + 4).unwrap();
    DensityMatrix::mixture(&[(q, &psi), (1.0 - q, &sigma)]).unwrap()
}

/// Partial trace over the last factor of `[d_a, d_b]`, written out with
/// explicit index loops.
pub fn trace_out_b(m: &ComplexMatrix, d_a: usize, d_b: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(d_a, d_a, |i, j| (0..d_b).map(|k| m[(i * d_b + k, j * d_b + k)]).sum())
}

pub fn trace_out_a(m: &ComplexMatrix, d_a: usize, d_b: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(d_b, d_b, |i, j| (0..d_a).map(|k| m[(k * d_b + i, k * d_b + j)]).sum())
}

/// Known criterion for two qubits: a symmetric extension of the B side
/// exists iff `Tr ρ_B² ≥ Tr ρ_AB² − 4 √det ρ_AB`. Returns the slack
/// `lhs − rhs`.
pub fn qubit_extension_slack(rho: &DensityMatrix) -> f64 {
    let m = rho.matrix();
    let rb = trace_out_a(m, 2, 2);
    let purity_b = rb.trace_product(&rb).re;
    let purity = m.trace_product(m).re;
    let det: f64 = eigenvalues(rho.op()).unwrap().iter().map(|v| v.max(0.0)).product();
    purity_b - (purity - 4.0 * det.sqrt())
}

fn direction(theta: f64, phi: f64) -> [f64; 3] {
    [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
}

/// `v_j(a) = Tr[ρ (a·σ ⊗ σ_j)]` by direct traces.
fn bob_vector(rho: &ComplexMatrix, a: [f64; 3]) -> [f64; 3] {
    let sa = spin_operator(a);
    let mut v = [0.0; 3];
    for (j, vj) in v.iter_mut().enumerate() {
        *vj = kron(&sa, &pauli(j)).trace_product(rho).re;
    }
    v
}

fn norm3(v: [f64; 3]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn chsh_at(rho: &DensityMatrix, angles: &[f64; 8]) -> f64 {
    let d = |i: usize| direction(angles[2 * i], angles[2 * i + 1]);
    let s = Scenario::spin_2x2([d(0), d(1)], [d(2), d(3)]).unwrap();
    chsh_value(&joint_table(rho, &s).unwrap()).unwrap()
}

fn angles_of(v: [f64; 3]) -> (f64, f64) {
    let n = norm3(v).max(1e-300);
    ((v[2] / n).clamp(-1.0, 1.0).acos(), v[1].atan2(v[0]))
}

/// Largest CHSH value found by a 20⁴ grid over Alice's two directions on
/// the Bloch sphere (Bob's best pair from the direct-trace vectors), then
/// pattern-search refinement of all eight angles evaluated through
/// measurement tables.
pub fn chsh_grid_max(rho: &DensityMatrix) -> f64 {
    let g = 20;
    let pi = std::f64::consts::PI;
    let grid: Vec<[f64; 2]> = (0..g)
        .flat_map(|i| (0..g).map(move |j| [(i as f64 + 0.5) * pi / g as f64, j as f64 * 2.0 * pi / g as f64]))
        .collect();
    let vs: Vec<[f64; 3]> = grid.iter().map(|a| bob_vector(rho.matrix(), direction(a[0], a[1]))).collect();
    let mut best = (f64::NEG_INFINITY, 0, 0);
    for (i, v) in vs.iter().enumerate() {
        for (j, w) in vs.iter().enumerate() {
            let plus = [v[0] + w[0], v[1] + w[1], v[2] + w[2]];
            let minus = [v[0] - w[0], v[1] - w[1], v[2] - w[2]];
            let s = norm3(plus) + norm3(minus);
            if s > best.0 {
                best = (s, i, j);
            }
        }
    }
    let (v, w) = (vs[best.1], vs[best.2]);
    let (b0, b1) = (angles_of([v[0] + w[0], v[1] + w[1], v[2] + w[2]]), angles_of([v[0] - w[0], v[1] - w[1], v[2] - w[2]]));
    let mut x = [grid[best.1][0], grid[best.1][1], grid[best.2][0], grid[best.2][1], b0.0, b0.1, b1.0, b1.1];
    let mut fx = chsh_at(rho, &x);
    let mut step = 0.1;
    while step > 1e-7 {
        let mut improved = false;
        for i in 0..8 {
            for sign in [1.0, -1.0] {
                let mut y = x;
                y[i] += sign * step;
                let fy = chsh_at(rho, &y);
                if fy > fx {
                    x = y;
                    fx = fy;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    fx
}

/// Records independent re-checks of every solver verdict.
#[derive(Default, Debug)]
pub struct Audit {
    pub primal_checked: usize,
    pub farkas_checked: usize,
    pub failures: Vec<String>,
}

impl Audit {
    /// Rebuilds the SDP and checks the embedded extension (Feasible) or
    /// the certificate (Infeasible) against it.
    pub fn extension(&mut self, rho: &DensityMatrix, r: &ExtendibilityResult) {
        let p = ExtensionProblem::new(rho.clone(), r.k, r.variant).unwrap();
        let sdp = build_extension_sdp(&p).unwrap();
        match r.status {
            SdpStatus::Feasible => {
                self.primal_checked += 1;
                let ok = r.extension.as_ref().is_some_and(|e| verify_primal(&embed_extension(e), &sdp.problem).unwrap());
                if !ok {
                    self.failures.push(format!("primal check failed at k={} ({})", r.k, r.variant));
                }
            }
            SdpStatus::Infeasible => {
                self.farkas_checked += 1;
                let ok = r.certificate.as_ref().is_some_and(|y| verify_farkas(y, &sdp.problem).unwrap());
                if !ok {
                    self.failures.push(format!("Farkas check failed at k={} ({})", r.k, r.variant));
                }
            }
            SdpStatus::Borderline => {}
        }
    }
}

pub fn operator(dims: Vec<usize>, m: ComplexMatrix) -> HermitianOperator {
    HermitianOperator::new(dims, m).unwrap()
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}
