//! Numerical laboratory for the stability of Jordan *-homomorphisms between
//! finite-dimensional C*-algebras.
//!
//! - [`algebra`]: block-matrix C*-algebras, Hermitian eigensolver, norms and
//!   functional calculus.
//! - [`structure`]: self-adjoint splitting, unitary decomposition and
//!   invertible self-adjoint approximation.
//! - [`control`]: power-type control functions and their series sums.
//! - [`mappings`]: exact Jordan *-homomorphisms, perturbations and defect
//!   functionals.
//! - [`hyers`]: the scaled-orbit iteration `3^-n f(3^n x)` and bound
//!   certification.
//! - [`fixedpoint`]: generalized metric, the operator `J h(x) = h(3x)/3`
//!   and fixed-point alternative audits.

pub mod algebra;
pub mod control;
pub mod error;
pub mod fixedpoint;
pub mod hyers;
pub mod mappings;
pub mod structure;

pub use algebra::{AlgebraShape, Block, Element, SpectralDecomposition, C64};
pub use error::{Result, StabError};
