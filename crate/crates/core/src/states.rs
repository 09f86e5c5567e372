//! Density matrices and the named test states.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, kron, partial_trace, ComplexMatrix, HermitianOperator, C64, ONE, ZERO};

/// Tolerance on the smallest eigenvalue of a density matrix.
pub const PSD_TOL: f64 = 1e-9;
/// Tolerance on `|Tr ρ − 1|`.
pub const TRACE_TOL: f64 = 1e-9;
const NORM_TOL: f64 = 1e-9;

/// Hermitian, positive semidefinite, unit trace.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    op: HermitianOperator,
}

impl DensityMatrix {
    pub fn new(op: HermitianOperator) -> Result<Self> {
        Self::with_tolerance(op, PSD_TOL)
    }

    pub fn with_tolerance(op: HermitianOperator, psd_tol: f64) -> Result<Self> {
        let trace = op.trace();
        let deviation = (trace - 1.0).abs();
        if deviation > TRACE_TOL {
            return Err(Error::Trace { trace, deviation });
        }
        let min_eigenvalue = eigenvalues(&op)?[0];
        if min_eigenvalue < -psd_tol {
            return Err(Error::NotPsd { min_eigenvalue });
        }
        Ok(Self { op })
    }

    pub fn from_matrix(dims: Vec<usize>, matrix: ComplexMatrix) -> Result<Self> {
        Self::new(HermitianOperator::new(dims, matrix)?)
    }

    pub fn op(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        self.op.matrix()
    }

    pub fn dims(&self) -> &[usize] {
        self.op.dims()
    }

    pub fn side(&self) -> usize {
        self.op.side()
    }

    pub fn into_op(self) -> HermitianOperator {
        self.op
    }

    pub fn purity(&self) -> f64 {
        self.matrix().trace_product(self.matrix()).re
    }

    /// Reduced state on the subsystems left after tracing out `traced`.
    pub fn partial_trace(&self, traced: &[usize]) -> Result<Self> {
        Ok(Self { op: partial_trace(&self.op, traced)? })
    }

    pub fn tensor(&self, other: &Self) -> Self {
        Self { op: self.op.tensor(&other.op) }
    }

    /// `U ρ U†`.
    pub fn conjugate_by(&self, u: &ComplexMatrix) -> Result<Self> {
        Ok(Self { op: self.op.conjugate_by(u)? })
    }

    pub fn with_dims(&self, dims: Vec<usize>) -> Result<Self> {
        Ok(Self { op: self.op.with_dims(dims)? })
    }

    /// Convex combination `Σ w_i ρ_i`; weights must be nonnegative and sum to one.
    pub fn mixture(parts: &[(f64, &DensityMatrix)]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::Shape("empty mixture".into()))?;
        let dims = first.1.dims().to_vec();
        let mut acc = ComplexMatrix::zeros(first.1.side(), first.1.side());
        for (w, rho) in parts {
            if rho.dims() != dims.as_slice() {
                return Err(Error::Shape(format!("mixture of dims {dims:?} and {:?}", rho.dims())));
            }
            if *w < 0.0 {
                return Err(Error::Parameter { name: "weight", value: *w });
            }
            acc = acc.add(&rho.matrix().scale_real(*w));
        }
        Self::new(HermitianOperator::new(dims, acc)?)
    }
}

/// `|v⟩⟨v|` on `dims`.
pub fn pure_density(v: &[C64], dims: Vec<usize>) -> Result<DensityMatrix> {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::Unnormalized { norm });
    }
    let op = HermitianOperator::new(dims, ComplexMatrix::outer(v))?;
    Ok(DensityMatrix { op })
}

fn basis_vector(d: usize, i: usize) -> Vec<C64> {
    let mut v = vec![ZERO; d];
    v[i] = ONE;
    v
}

pub fn max_entangled_vector(d: usize) -> Vec<C64> {
    let amp = C64::new(1.0 / (d as f64).sqrt(), 0.0);
    let mut v = vec![ZERO; d * d];
    for i in 0..d {
        v[i * d + i] = amp;
    }
    v
}

/// `|Φ⟩ = (1/√d) Σ_i |ii⟩` on `[d, d]`.
pub fn max_entangled(d: usize) -> Result<DensityMatrix> {
    if d < 2 {
        return Err(Error::Parameter { name: "d", value: d as f64 });
    }
    let w = C64::new(1.0 / d as f64, 0.0);
    let m = ComplexMatrix::from_fn(d * d, d * d, |r, c| if r % (d + 1) == 0 && c % (d + 1) == 0 { w } else { ZERO });
    Ok(DensityMatrix { op: HermitianOperator::new(vec![d, d], m)? })
}

/// `p |ψ⁻⟩⟨ψ⁻| + (1 − p) I/4` with `|ψ⁻⟩ = (|01⟩ − |10⟩)/√2`.
pub fn werner(p: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Parameter { name: "p", value: p });
    }
    let mut singlet = ComplexMatrix::zeros(4, 4);
    singlet[(1, 1)] = C64::new(0.5, 0.0);
    singlet[(2, 2)] = C64::new(0.5, 0.0);
    singlet[(1, 2)] = C64::new(-0.5, 0.0);
    singlet[(2, 1)] = C64::new(-0.5, 0.0);
    let m = singlet.scale_real(p).add(&ComplexMatrix::identity(4).scale_real((1.0 - p) / 4.0));
    Ok(DensityMatrix { op: HermitianOperator::new(vec![2, 2], m)? })
}

pub fn bush_rumsfeld_vector(eps: f64) -> Result<Vec<C64>> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::Parameter { name: "eps", value: eps });
    }
    Ok(vec![C64::new((1.0 - eps).sqrt(), 0.0), ZERO, ZERO, C64::new(eps.sqrt(), 0.0)])
}

/// `√(1−ε)|00⟩ + √ε|11⟩`; `ε = 1/2` is the maximally entangled pair.
pub fn bush_rumsfeld(eps: f64) -> Result<DensityMatrix> {
    pure_density(&bush_rumsfeld_vector(eps)?, vec![2, 2])
}

/// Tripartite `A, B, E` state where half the time `B` holds Alice's partner
/// qubit and `E` is maximally mixed, and half the time the roles swap:
/// `½ Φ⁺_AB ⊗ (I/2)_E + ½ Φ⁺_AE ⊗ (I/2)_B`.
pub fn bdsw_tripartite() -> DensityMatrix {
    let phi = ComplexMatrix::outer(&max_entangled_vector(2));
    let half_id = ComplexMatrix::identity(2).scale_real(0.5);
    let ab = HermitianOperator::from_parts(vec![2, 2, 2], kron(&phi, &half_id));
    // Φ⁺_AE ⊗ I_B is Φ⁺_AB ⊗ I_E with B and E exchanged.
    let ae = crate::linalg::swap_subsystems(&ab, 1, 2).expect("equal dims");
    let m = ab.matrix().add(ae.matrix()).scale_real(0.5);
    DensityMatrix { op: HermitianOperator::from_parts(vec![2, 2, 2], m) }
}

/// Hilbert-Schmidt (Ginibre) random state: `G G† / Tr(G G†)`.
pub fn random_density(dims: &[usize], seed: u64) -> Result<DensityMatrix> {
    let d: usize = dims.iter().product();
    if d == 0 {
        return Err(Error::Shape(format!("invalid dims {dims:?}")));
    }
    let g = ginibre(d, d, &mut ChaCha8Rng::seed_from_u64(seed));
    let gg = g.matmul(&g.adjoint());
    let tr = gg.trace().re;
    let op = HermitianOperator::from_parts(dims.to_vec(), gg.scale_real(1.0 / tr));
    DensityMatrix::new(op)
}

/// Seeded Haar-ish random unit vector (normalized complex Gaussian).
pub fn random_pure_vector(d: usize, seed: u64) -> Vec<C64> {
    let g = ginibre(d, 1, &mut ChaCha8Rng::seed_from_u64(seed));
    let norm = g.frobenius_norm();
    g.as_slice().iter().map(|z| z / norm).collect()
}

/// Haar random unitary from Gram-Schmidt on a complex Gaussian matrix.
pub fn random_unitary(d: usize, seed: u64) -> ComplexMatrix {
    let g = ginibre(d, d, &mut ChaCha8Rng::seed_from_u64(seed));
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(d);
    for j in 0..d {
        let mut v = g.column(j);
        for _ in 0..2 {
            for u in &cols {
                let c: C64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (x, y) in v.iter_mut().zip(u) {
                    *x -= c * y;
                }
            }
        }
        let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|z| *z /= n);
        cols.push(v);
    }
    ComplexMatrix::from_fn(d, d, |i, j| cols[j][i])
}

fn ginibre(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re, im)
    })
}

/// Computational basis projector `|i⟩⟨i|` on a `d`-level system.
pub fn basis_state(d: usize, i: usize) -> Result<DensityMatrix> {
    if i >= d {
        return Err(Error::IndexOutOfRange { index: i, count: d });
    }
    pure_density(&basis_vector(d, i), vec![d])
}
