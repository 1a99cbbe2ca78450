//! Dense square complex matrices, the building blocks of an [`Element`](super::Element).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// Row-major `n × n` complex matrix. Serializes as rows of `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<[f64; 2]>>", into = "Vec<Vec<[f64; 2]>>")]
pub struct Block {
    n: usize,
    data: Vec<C64>,
}

impl TryFrom<Vec<Vec<[f64; 2]>>> for Block {
    type Error = String;
    fn try_from(rows: Vec<Vec<[f64; 2]>>) -> Result<Self, String> {
        Block::from_rows(
            rows.into_iter()
                .map(|r| r.into_iter().map(|[re, im]| C64::new(re, im)).collect())
                .collect(),
        )
        .ok_or_else(|| "block rows do not form a square matrix".to_string())
    }
}

impl From<Block> for Vec<Vec<[f64; 2]>> {
    fn from(b: Block) -> Self {
        b.data
            .chunks(b.n)
            .map(|r| r.iter().map(|z| [z.re, z.im]).collect())
            .collect()
    }
}

impl Block {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![ZERO; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut b = Self::zeros(n);
        for i in 0..n {
            b.data[i * n + i] = ONE;
        }
        b
    }

    pub fn diag_real(values: &[f64]) -> Self {
        let n = values.len();
        let mut b = Self::zeros(n);
        for (i, &v) in values.iter().enumerate() {
            b.data[i * n + i] = C64::new(v, 0.0);
        }
        b
    }

    /// Builds a block from rows; returns `None` if the rows are not square.
    pub fn from_rows(rows: Vec<Vec<C64>>) -> Option<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return None;
        }
        Some(Self {
            n,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Option<Self> {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect())
                .collect(),
        )
    }

    pub(crate) fn from_vec(n: usize, data: Vec<C64>) -> Self {
        debug_assert_eq!(data.len(), n * n);
        Self { n, data }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.n + j] = v;
    }

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    pub fn rows(&self) -> Vec<Vec<C64>> {
        self.data.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn add(&self, other: &Block) -> Block {
        debug_assert_eq!(self.n, other.n);
        Block::from_vec(
            self.n,
            self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        )
    }

    pub fn sub(&self, other: &Block) -> Block {
        debug_assert_eq!(self.n, other.n);
        Block::from_vec(
            self.n,
            self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        )
    }

    pub fn scale(&self, c: C64) -> Block {
        Block::from_vec(self.n, self.data.iter().map(|a| a * c).collect())
    }

    pub fn scale_real(&self, c: f64) -> Block {
        Block::from_vec(self.n, self.data.iter().map(|a| a * c).collect())
    }

    pub fn matmul(&self, other: &Block) -> Block {
        debug_assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = vec![ZERO; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    out[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        Block::from_vec(n, out)
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Block {
        let n = self.n;
        let mut out = vec![ZERO; n * n];
        for i in 0..n {
            for j in 0..n {
                out[j * n + i] = self.data[i * n + j].conj();
            }
        }
        Block::from_vec(n, out)
    }

    pub fn transpose(&self) -> Block {
        let n = self.n;
        let mut out = vec![ZERO; n * n];
        for i in 0..n {
            for j in 0..n {
                out[j * n + i] = self.data[i * n + j];
            }
        }
        Block::from_vec(n, out)
    }

    /// `a* a`, computed on the upper triangle and mirrored so the result is
    /// exactly Hermitian.
    pub fn gram(&self) -> Block {
        let n = self.n;
        let mut out = vec![ZERO; n * n];
        for i in 0..n {
            for j in i..n {
                let mut s = ZERO;
                for k in 0..n {
                    s += self.data[k * n + i].conj() * self.data[k * n + j];
                }
                if i == j {
                    s.im = 0.0;
                }
                out[i * n + j] = s;
                out[j * n + i] = s.conj();
            }
        }
        Block::from_vec(n, out)
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise deviation from being Hermitian.
    pub fn hermitian_residual(&self) -> f64 {
        let n = self.n;
        let mut r: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                r = r.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        r
    }
}
