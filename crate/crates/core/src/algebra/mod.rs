//! Finite direct sums of full matrix algebras `M_{n_1}(C) ⊕ … ⊕ M_{n_k}(C)`.
//!
//! Every finite-dimensional C*-algebra is of this form, so an [`AlgebraShape`]
//! together with blockwise matrix arithmetic is enough to host both sides of
//! every mapping this crate studies. The C*-norm of a direct sum is the
//! largest operator norm over its blocks.

mod block;
mod random;
mod spectral;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use block::{Block, C64};
pub use random::{random_element, random_self_adjoint, random_unitary, seeded_rng};
pub use spectral::{MAX_SWEEPS, OFF_DIAGONAL_TARGET};

use crate::error::{Result, StabError};
use spectral::{block_min_singular, block_op_norm, jacobi_eigh, reassemble};

/// Self-adjointness tolerance used by the spectral routines.
pub const TAU_SA: f64 = 1e-10;
/// Negative-eigenvalue slack for [`Element::sqrt_psd`].
pub const TAU_PSD: f64 = 1e-10;
/// Reconstruction tolerance for eigendecompositions.
pub const TAU_EIG: f64 = 1e-10;

/// Block dimensions of a finite-dimensional C*-algebra.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct AlgebraShape(Vec<usize>);

impl AlgebraShape {
    pub fn new(block_dims: Vec<usize>) -> Result<Self> {
        if block_dims.is_empty() {
            return Err(StabError::InvalidShape("no blocks".into()));
        }
        if block_dims.contains(&0) {
            return Err(StabError::InvalidShape(format!(
                "zero-dimensional block in {block_dims:?}"
            )));
        }
        Ok(Self(block_dims))
    }

    pub fn block_dims(&self) -> &[usize] {
        &self.0
    }

    pub fn num_blocks(&self) -> usize {
        self.0.len()
    }

    /// Complex dimension of the algebra.
    pub fn dimension(&self) -> usize {
        self.0.iter().map(|n| n * n).sum()
    }
}

impl TryFrom<Vec<usize>> for AlgebraShape {
    type Error = StabError;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<AlgebraShape> for Vec<usize> {
    fn from(s: AlgebraShape) -> Self {
        s.0
    }
}

impl fmt::Display for AlgebraShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|n| format!("M{n}")).collect();
        write!(f, "{}", parts.join("⊕"))
    }
}

/// A member of a block-matrix algebra. Immutable value type; serializes as
/// its list of blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Block>", into = "Vec<Block>")]
pub struct Element {
    shape: AlgebraShape,
    blocks: Vec<Block>,
}

impl TryFrom<Vec<Block>> for Element {
    type Error = StabError;
    fn try_from(blocks: Vec<Block>) -> Result<Self> {
        Element::from_blocks(blocks)
    }
}

impl From<Element> for Vec<Block> {
    fn from(e: Element) -> Self {
        e.blocks
    }
}

/// Per-block eigendecomposition of a self-adjoint element.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    /// Ascending eigenvalues, one list per block.
    pub eigenvalues: Vec<Vec<f64>>,
    /// Unitary eigenvector matrix per block (columns are eigenvectors).
    pub eigenvectors: Vec<Block>,
}

impl SpectralDecomposition {
    pub fn reconstruct(&self, shape: &AlgebraShape) -> Element {
        self.map_eigenvalues(shape, |x| x)
    }

    /// `U g(Λ) U*` blockwise.
    pub fn map_eigenvalues(&self, shape: &AlgebraShape, g: impl Fn(f64) -> f64) -> Element {
        let blocks = self
            .eigenvectors
            .iter()
            .zip(&self.eigenvalues)
            .map(|(u, vals)| {
                let mapped: Vec<f64> = vals.iter().map(|&v| g(v)).collect();
                reassemble(u, &mapped)
            })
            .collect();
        Element {
            shape: shape.clone(),
            blocks,
        }
    }

    pub fn min_abs_eigenvalue(&self) -> f64 {
        self.eigenvalues
            .iter()
            .flatten()
            .map(|v| v.abs())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs_eigenvalue(&self) -> f64 {
        self.eigenvalues
            .iter()
            .flatten()
            .map(|v| v.abs())
            .fold(0.0, f64::max)
    }
}

impl Element {
    /// Builds an element, checking block sizes and finiteness.
    pub fn new(shape: AlgebraShape, blocks: Vec<Block>) -> Result<Self> {
        if blocks.len() != shape.num_blocks()
            || blocks
                .iter()
                .zip(shape.block_dims())
                .any(|(b, &n)| b.dim() != n)
        {
            return Err(StabError::InvalidShape(format!(
                "blocks {:?} do not match shape {shape}",
                blocks.iter().map(Block::dim).collect::<Vec<_>>()
            )));
        }
        if !blocks.iter().all(Block::is_finite) {
            return Err(StabError::Precondition("non-finite entry".into()));
        }
        Ok(Self { shape, blocks })
    }

    /// Shape is inferred from the block sizes.
    pub fn from_blocks(blocks: Vec<Block>) -> Result<Self> {
        let shape = AlgebraShape::new(blocks.iter().map(Block::dim).collect())?;
        Self::new(shape, blocks)
    }

    pub fn zero(shape: &AlgebraShape) -> Self {
        Self {
            shape: shape.clone(),
            blocks: shape.block_dims().iter().map(|&n| Block::zeros(n)).collect(),
        }
    }

    /// The unit `e`: identity in every block.
    pub fn unit(shape: &AlgebraShape) -> Self {
        Self {
            shape: shape.clone(),
            blocks: shape
                .block_dims()
                .iter()
                .map(|&n| Block::identity(n))
                .collect(),
        }
    }

    pub fn shape(&self) -> &AlgebraShape {
        &self.shape
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> &Block {
        &self.blocks[i]
    }

    pub fn is_finite(&self) -> bool {
        self.blocks.iter().all(Block::is_finite)
    }

    pub fn is_zero(&self) -> bool {
        self.blocks.iter().all(|b| b.max_abs() == 0.0)
    }

    fn check_shape(&self, other: &Element) -> Result<()> {
        if self.shape != other.shape {
            return Err(StabError::ShapeMismatch {
                left: self.shape.clone(),
                right: other.shape.clone(),
            });
        }
        Ok(())
    }

    fn zip_blocks(&self, other: &Element, op: impl Fn(&Block, &Block) -> Block) -> Element {
        Element {
            shape: self.shape.clone(),
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| op(a, b))
                .collect(),
        }
    }

    fn map_blocks(&self, op: impl Fn(&Block) -> Block) -> Element {
        Element {
            shape: self.shape.clone(),
            blocks: self.blocks.iter().map(op).collect(),
        }
    }

    pub fn add(&self, other: &Element) -> Result<Element> {
        self.check_shape(other)?;
        Ok(self.zip_blocks(other, Block::add))
    }

    pub fn sub(&self, other: &Element) -> Result<Element> {
        self.check_shape(other)?;
        Ok(self.zip_blocks(other, Block::sub))
    }

    pub fn mul(&self, other: &Element) -> Result<Element> {
        self.check_shape(other)?;
        Ok(self.zip_blocks(other, Block::matmul))
    }

    /// The Jordan product `ab + ba`.
    pub fn jordan_product(&self, other: &Element) -> Result<Element> {
        self.check_shape(other)?;
        Ok(self.zip_blocks(other, |a, b| a.matmul(b).add(&b.matmul(a))))
    }

    pub fn scale(&self, c: C64) -> Element {
        self.map_blocks(|b| b.scale(c))
    }

    pub fn scale_real(&self, c: f64) -> Element {
        self.map_blocks(|b| b.scale_real(c))
    }

    pub fn adjoint(&self) -> Element {
        self.map_blocks(Block::adjoint)
    }

    /// Blockwise (non-conjugating) transpose.
    pub fn transpose(&self) -> Element {
        self.map_blocks(Block::transpose)
    }

    /// C*-norm: the largest singular value over all blocks.
    pub fn op_norm(&self) -> f64 {
        self.blocks.iter().map(block_op_norm).fold(0.0, f64::max)
    }

    /// Smallest singular value over all blocks.
    pub fn min_singular_value(&self) -> f64 {
        self.blocks
            .iter()
            .map(block_min_singular)
            .fold(f64::INFINITY, f64::min)
    }

    /// Sum of block Frobenius norms squared, square-rooted. An upper bound on
    /// [`op_norm`](Self::op_norm), cheap to evaluate.
    pub fn frobenius(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.frobenius().powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.blocks.iter().map(Block::max_abs).fold(0.0, f64::max)
    }

    /// `‖a - a*‖` in operator norm.
    pub fn self_adjoint_residual(&self) -> f64 {
        self.map_blocks(|b| b.sub(&b.adjoint())).op_norm()
    }

    pub fn is_self_adjoint(&self, tau: f64) -> bool {
        self.self_adjoint_residual() <= tau
    }

    /// `max(‖a*a - e‖, ‖aa* - e‖)`.
    pub fn unitary_residual(&self) -> f64 {
        let e = Element::unit(&self.shape);
        let left = self.map_blocks(|b| b.adjoint().matmul(b));
        let right = self.map_blocks(|b| b.matmul(&b.adjoint()));
        let l = left.zip_blocks(&e, Block::sub).op_norm();
        let r = right.zip_blocks(&e, Block::sub).op_norm();
        l.max(r)
    }

    pub fn is_unitary(&self, tau: f64) -> bool {
        self.unitary_residual() <= tau
    }

    pub fn is_invertible(&self, tau: f64) -> bool {
        self.min_singular_value() > tau
    }

    /// `max_p ‖ap - pa‖` over the probes; probes of the wrong shape count as
    /// infinitely non-commuting.
    pub fn commutator_residual(&self, probes: &[Element]) -> f64 {
        probes
            .iter()
            .map(|p| {
                if p.shape != self.shape {
                    return f64::INFINITY;
                }
                self.zip_blocks(p, |a, b| a.matmul(b).sub(&b.matmul(a)))
                    .op_norm()
            })
            .fold(0.0, f64::max)
    }

    pub fn is_central(&self, probes: &[Element], tau: f64) -> bool {
        self.commutator_residual(probes) <= tau
    }

    /// Eigendecomposition of a self-adjoint element with default tolerances.
    pub fn herm_eig(&self) -> Result<SpectralDecomposition> {
        self.herm_eig_with(TAU_SA)
    }

    /// Eigendecomposition; `tau_sa` bounds `‖a - a*‖ / max(1, ‖a‖)`.
    pub fn herm_eig_with(&self, tau_sa: f64) -> Result<SpectralDecomposition> {
        let scale = self.max_abs_entry().max(1.0);
        let residual = self
            .blocks
            .iter()
            .map(Block::hermitian_residual)
            .fold(0.0, f64::max);
        if residual > tau_sa * scale {
            return Err(StabError::NotSelfAdjoint {
                residual,
                tolerance: tau_sa * scale,
            });
        }
        let mut eigenvalues = Vec::with_capacity(self.blocks.len());
        let mut eigenvectors = Vec::with_capacity(self.blocks.len());
        for b in &self.blocks {
            let e = jacobi_eigh(b);
            if !e.converged {
                return Err(StabError::NoConvergence {
                    sweeps: e.sweeps,
                    off: e.off,
                });
            }
            eigenvalues.push(e.values);
            eigenvectors.push(e.vectors);
        }
        Ok(SpectralDecomposition {
            eigenvalues,
            eigenvectors,
        })
    }

    /// Applies `g` to the spectrum of a self-adjoint element.
    pub fn func_calc(&self, g: impl Fn(f64) -> f64) -> Result<Element> {
        let eig = self.herm_eig()?;
        Ok(eig.map_eigenvalues(&self.shape, g))
    }

    /// Positive square root. Eigenvalues down to `-TAU_PSD · max(1, ‖a‖)` are
    /// clamped to zero; anything more negative is rejected.
    pub fn sqrt_psd(&self) -> Result<Element> {
        let eig = self.herm_eig()?;
        let slack = TAU_PSD * eig.max_abs_eigenvalue().max(1.0);
        let min = eig
            .eigenvalues
            .iter()
            .flatten()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if min < -slack {
            return Err(StabError::NotPositiveSemidefinite {
                min_eigenvalue: min,
            });
        }
        Ok(eig.map_eigenvalues(&self.shape, |v| v.max(0.0).sqrt()))
    }
}

/// Imaginary unit, handy for `x1 + i x2` style arithmetic.
pub const I: C64 = C64::new(0.0, 1.0);

#[cfg(test)]
mod tests;
