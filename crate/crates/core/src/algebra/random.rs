//! Seeded sample generators. The same seed always yields the same element.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::block::{Block, C64, ZERO};
use super::{AlgebraShape, Element};

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian_block(n: usize, rng: &mut ChaCha8Rng) -> Block {
    let data = (0..n * n)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
        })
        .collect();
    Block::from_vec(n, data)
}

/// Element with i.i.d. standard complex Gaussian entries.
pub fn random_element(shape: &AlgebraShape, seed: u64) -> Element {
    let mut rng = seeded_rng(seed);
    let blocks = shape
        .block_dims()
        .iter()
        .map(|&n| gaussian_block(n, &mut rng))
        .collect();
    Element::new(shape.clone(), blocks).expect("gaussian blocks match shape")
}

/// `(g + g*) / 2` for a Gaussian `g`; exactly Hermitian.
pub fn random_self_adjoint(shape: &AlgebraShape, seed: u64) -> Element {
    let g = random_element(shape, seed);
    let blocks = g
        .blocks()
        .iter()
        .map(|b| {
            let n = b.dim();
            let mut h = Block::zeros(n);
            for i in 0..n {
                h.set(i, i, C64::new(b.get(i, i).re, 0.0));
                for j in i + 1..n {
                    let v = (b.get(i, j) + b.get(j, i).conj()) * 0.5;
                    h.set(i, j, v);
                    h.set(j, i, v.conj());
                }
            }
            h
        })
        .collect();
    Element::new(shape.clone(), blocks).expect("hermitian blocks match shape")
}

/// Modified Gram–Schmidt on the columns of a Gaussian matrix, run twice for
/// orthogonality at working precision.
pub fn random_unitary(shape: &AlgebraShape, seed: u64) -> Element {
    let mut rng = seeded_rng(seed);
    let blocks = shape
        .block_dims()
        .iter()
        .map(|&n| {
            let mut q = gaussian_block(n, &mut rng);
            orthonormalize_columns(&mut q);
            orthonormalize_columns(&mut q);
            q
        })
        .collect();
    Element::new(shape.clone(), blocks).expect("unitary blocks match shape")
}

fn orthonormalize_columns(q: &mut Block) {
    let n = q.dim();
    for j in 0..n {
        for k in 0..j {
            let mut dot = ZERO;
            for r in 0..n {
                dot += q.get(r, k).conj() * q.get(r, j);
            }
            for r in 0..n {
                let v = q.get(r, j) - dot * q.get(r, k);
                q.set(r, j, v);
            }
        }
        let norm = (0..n).map(|r| q.get(r, j).norm_sqr()).sum::<f64>().sqrt();
        for r in 0..n {
            let v = q.get(r, j) / norm;
            q.set(r, j, v);
        }
    }
}
