//! Cyclic Jacobi eigensolver for complex Hermitian blocks.
//!
//! Each rotation first removes the phase of the pivot `a_pq` with a diagonal
//! unitary, then applies the classical real Jacobi rotation. The product of
//! the two is unitary, so the accumulated eigenvector matrix stays unitary
//! to rounding.

use super::block::{Block, C64, ZERO};

pub const MAX_SWEEPS: usize = 100;
/// Off-diagonal Frobenius target, relative to the Frobenius norm of the input.
pub const OFF_DIAGONAL_TARGET: f64 = 1e-13;

#[derive(Debug, Clone)]
pub(crate) struct BlockEigh {
    pub values: Vec<f64>,
    pub vectors: Block,
    pub off: f64,
    pub sweeps: usize,
    pub converged: bool,
}

fn off_diagonal(m: &Block) -> f64 {
    let n = m.dim();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += m.get(i, j).norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Power of two `s` with `s · max_abs ∈ [1, 2)`, so rescaling is exact and
/// squared entries cannot overflow or underflow.
fn exact_scale(max_abs: f64) -> f64 {
    if max_abs == 0.0 || !max_abs.is_finite() {
        return 1.0;
    }
    2f64.powi(-(max_abs.log2().floor() as i32))
}

/// Eigendecomposition of the Hermitian part of `a`. Eigenvalues ascend.
pub(crate) fn jacobi_eigh(a: &Block) -> BlockEigh {
    let scale = exact_scale(a.max_abs());
    if scale != 1.0 {
        let mut e = jacobi_eigh_unscaled(&a.scale_real(scale));
        for v in &mut e.values {
            *v /= scale;
        }
        e.off /= scale;
        return e;
    }
    jacobi_eigh_unscaled(a)
}

fn jacobi_eigh_unscaled(a: &Block) -> BlockEigh {
    let n = a.dim();
    let mut m = Block::zeros(n);
    for i in 0..n {
        m.set(i, i, C64::new(a.get(i, i).re, 0.0));
        for j in i + 1..n {
            let v = (a.get(i, j) + a.get(j, i).conj()) * 0.5;
            m.set(i, j, v);
            m.set(j, i, v.conj());
        }
    }
    let mut vecs = Block::identity(n);
    let target = OFF_DIAGONAL_TARGET * m.frobenius();

    let mut sweeps = 0;
    let mut off = off_diagonal(&m);
    while off > target && sweeps < MAX_SWEEPS {
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut m, &mut vecs, p, q);
            }
        }
        off = off_diagonal(&m);
    }
    let converged = off <= target;

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| m.get(i, i).re).collect();
    order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]));
    let values = order.iter().map(|&i| diag[i]).collect();
    let mut sorted = Block::zeros(n);
    for (new_col, &old_col) in order.iter().enumerate() {
        for r in 0..n {
            sorted.set(r, new_col, vecs.get(r, old_col));
        }
    }

    BlockEigh {
        values,
        vectors: sorted,
        off,
        sweeps,
        converged,
    }
}

fn rotate(m: &mut Block, vecs: &mut Block, p: usize, q: usize) {
    let b = m.get(p, q);
    let abs_b = b.norm();
    if abs_b == 0.0 {
        return;
    }
    let n = m.dim();
    let app = m.get(p, p).re;
    let aqq = m.get(q, q).re;
    let phase_conj = (b / abs_b).conj();

    let theta = (aqq - app) / (2.0 * abs_b);
    let t = if theta == 0.0 {
        1.0
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    // V restricted to (p, q): [[c, s], [-s e^{-iφ}, c e^{-iφ}]]
    let vpp = C64::new(c, 0.0);
    let vpq = C64::new(s, 0.0);
    let vqp = phase_conj * (-s);
    let vqq = phase_conj * c;

    for k in 0..n {
        let mkp = m.get(k, p);
        let mkq = m.get(k, q);
        m.set(k, p, mkp * vpp + mkq * vqp);
        m.set(k, q, mkp * vpq + mkq * vqq);

        let ukp = vecs.get(k, p);
        let ukq = vecs.get(k, q);
        vecs.set(k, p, ukp * vpp + ukq * vqp);
        vecs.set(k, q, ukp * vpq + ukq * vqq);
    }
    for k in 0..n {
        let mpk = m.get(p, k);
        let mqk = m.get(q, k);
        m.set(p, k, vpp.conj() * mpk + vqp.conj() * mqk);
        m.set(q, k, vpq.conj() * mpk + vqq.conj() * mqk);
    }
    m.set(p, q, ZERO);
    m.set(q, p, ZERO);
    let dp = m.get(p, p).re;
    let dq = m.get(q, q).re;
    m.set(p, p, C64::new(dp, 0.0));
    m.set(q, q, C64::new(dq, 0.0));
}

/// `U diag(values) U*`.
pub(crate) fn reassemble(vectors: &Block, values: &[f64]) -> Block {
    let n = vectors.dim();
    let mut out = Block::zeros(n);
    for i in 0..n {
        for j in i..n {
            let mut s = ZERO;
            for (k, &lam) in values.iter().enumerate() {
                s += vectors.get(i, k) * vectors.get(j, k).conj() * lam;
            }
            if i == j {
                s.im = 0.0;
            }
            out.set(i, j, s);
            out.set(j, i, s.conj());
        }
    }
    out
}

/// Largest singular value of a block: `sqrt(λ_max(a* a))`.
pub(crate) fn block_op_norm(a: &Block) -> f64 {
    let m = a.max_abs();
    if m == 0.0 {
        return 0.0;
    }
    let scale = exact_scale(m);
    let e = jacobi_eigh(&a.scale_real(scale).gram());
    e.values.last().copied().unwrap_or(0.0).max(0.0).sqrt() / scale
}

/// Smallest singular value. Hermitian blocks use `min |λ|` directly, which
/// resolves small singular values to working precision; other blocks fall
/// back to `sqrt(λ_min(a* a))`.
pub(crate) fn block_min_singular(a: &Block) -> f64 {
    if a.hermitian_residual() <= 1e-14 * a.max_abs() {
        let e = jacobi_eigh(a);
        e.values.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min)
    } else {
        let scale = exact_scale(a.max_abs());
        let e = jacobi_eigh(&a.scale_real(scale).gram());
        e.values.first().copied().unwrap_or(0.0).max(0.0).sqrt() / scale
    }
}
