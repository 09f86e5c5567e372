//! Spectral entanglement detectors: partial-transpose positivity,
//! negativity and Schmidt coefficients.
//!
//! For `2⊗2` and `2⊗3` systems a positive partial transpose is also
//! sufficient for separability, so these double as exact separability
//! oracles at those dimensions.

use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, partial_transpose, partial_trace, ComplexMatrix, HermitianOperator, C64};
use crate::states::DensityMatrix;

/// Partial-transpose eigenvalues at or above `-PPT_TOL` count as nonnegative.
pub const PPT_TOL: f64 = 1e-9;

fn check_bipartite_index(rho: &DensityMatrix, index: usize) -> Result<()> {
    if index >= rho.dims().len() {
        return Err(Error::IndexOutOfRange { index, count: rho.dims().len() });
    }
    Ok(())
}

pub fn partial_transpose_spectrum(rho: &DensityMatrix, index: usize) -> Result<Vec<f64>> {
    check_bipartite_index(rho, index)?;
    eigenvalues(&partial_transpose(rho.op(), index)?)
}

/// Smallest eigenvalue of `ρ^{T_index}`; negative certifies entanglement.
pub fn ppt_min_eigenvalue(rho: &DensityMatrix, index: usize) -> Result<f64> {
    Ok(partial_transpose_spectrum(rho, index)?[0])
}

/// `(‖ρ^{T}‖₁ − 1)/2`, the absolute sum of the negative PT eigenvalues.
pub fn negativity(rho: &DensityMatrix, index: usize) -> Result<f64> {
    let spectrum = partial_transpose_spectrum(rho, index)?;
    let trace_norm: f64 = spectrum.iter().map(|v| v.abs()).sum();
    Ok(((trace_norm - 1.0) / 2.0).max(0.0))
}

pub fn is_ppt(rho: &DensityMatrix, index: usize) -> Result<bool> {
    Ok(ppt_min_eigenvalue(rho, index)? >= -PPT_TOL)
}

/// Squared Schmidt coefficients of a pure state on `[d_a, d_b]`, descending.
pub fn schmidt_squares(v: &[C64], dims: [usize; 2]) -> Result<Vec<f64>> {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::Unnormalized { norm });
    }
    if v.len() != dims[0] * dims[1] {
        return Err(Error::Shape(format!("vector of length {} for dims {dims:?}", v.len())));
    }
    let op = HermitianOperator::new(dims.to_vec(), ComplexMatrix::outer(v))?;
    let reduced = partial_trace(&op, &[1])?;
    let mut ev = eigenvalues(&reduced)?;
    ev.iter_mut().for_each(|x| *x = x.max(0.0));
    ev.reverse();
    Ok(ev)
}

/// Number of Schmidt coefficients with squared value above `1e-9`.
pub fn schmidt_rank(v: &[C64], dims: [usize; 2]) -> Result<usize> {
    Ok(schmidt_squares(v, dims)?.iter().filter(|&&s| s > 1e-9).count())
}
