//! Symmetric-extension (k-extendibility) tests for bipartite quantum states.
//!
//! The crate decides whether a state `ρ_AB` admits an extension to
//! `A B₁ … B_k` whose `A B_i` marginals all equal `ρ` by solving a dense
//! semidefinite feasibility problem. Feasible runs return the extension,
//! infeasible runs return a Farkas certificate, and both are re-verified.
//! Extensions feed a local hidden variable construction for Bob's `k`
//! measurement settings, checked against CHSH and the local polytope.

pub mod bell;
pub mod entanglement;
pub mod error;
pub mod extendibility;
pub mod io;
pub mod linalg;
pub mod sdp;
pub mod states;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, HermitianOperator, RealMatrix, C64};
pub use states::DensityMatrix;
