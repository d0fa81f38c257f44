//! Dense square matrices over the (min, +) semiring.

use crate::grid::{BIG, UNREACHABLE};

/// Row-major `n × n` matrix; entry `(i, j)` is the cost of going from `i` to `j`.
#[derive(Clone, Debug, PartialEq)]
pub struct MinPlusMatrix {
    n: usize,
    data: Vec<f64>,
}

impl MinPlusMatrix {
    pub fn from_vec(n: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n * n, "matrix data must be n*n");
        Self { n, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let data: Vec<f64> = rows
            .iter()
            .flat_map(|r| {
                assert_eq!(r.len(), n, "matrix must be square");
                r.iter().copied()
            })
            .collect();
        Self { n, data }
    }

    /// Min-plus identity: 0 on the diagonal, [`BIG`] elsewhere.
    pub fn identity(n: usize) -> Self {
        let mut data = vec![BIG; n * n];
        for i in 0..n {
            data[i * n + i] = 0.0;
        }
        Self { n, data }
    }

    pub fn filled(n: usize, v: f64) -> Self {
        Self {
            n,
            data: vec![v; n * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let n = self.n;
        &mut self.data[i * n..(i + 1) * n]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, j)).collect()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn count_unreachable(&self) -> usize {
        self.data
            .iter()
            .filter(|v| !v.is_finite() || **v >= UNREACHABLE)
            .count()
    }

    pub fn add_scalar(&self, c: f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|v| v + c).collect(),
        }
    }

    /// `(A ⊗ B)(i, j) = min_m A(i, m) + B(m, j)`.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n, "dimension mismatch");
        let n = self.n;
        let mut out = vec![f64::INFINITY; n * n];
        for i in 0..n {
            let orow = &mut out[i * n..(i + 1) * n];
            for m in 0..n {
                let a = self.data[i * n + m];
                if a >= UNREACHABLE {
                    continue;
                }
                let brow = &other.data[m * n..(m + 1) * n];
                for (o, &b) in orow.iter_mut().zip(brow) {
                    let c = a + b;
                    if c < *o {
                        *o = c;
                    }
                }
            }
            for o in orow.iter_mut() {
                if *o > BIG {
                    *o = BIG;
                }
            }
        }
        Self { n, data: out }
    }

    /// Diagonal of `A ⊗ B` without forming the product.
    pub fn mul_diagonal(&self, other: &Self) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|m| self.get(i, m) + other.get(m, i))
                    .fold(BIG, f64::min)
            })
            .collect()
    }

    /// Entrywise minimum.
    pub fn min_with(&mut self, other: &Self) {
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            if b < *a {
                *a = b;
            }
        }
    }

    /// Largest entrywise `|A − B|`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Row vector times matrix: `(u ⊗ A)(j) = min_i u(i) + A(i, j)`.
    pub fn apply_backward(&self, u: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![f64::INFINITY; n];
        for (i, &ui) in u.iter().enumerate() {
            if ui >= UNREACHABLE {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                let c = ui + a;
                if c < *o {
                    *o = c;
                }
            }
        }
        out.iter_mut().for_each(|o| *o = o.min(BIG));
        out
    }

    /// Matrix times column vector: `(A ⊗ u)(i) = min_j A(i, j) + u(j)`.
    pub fn apply_forward_min(&self, u: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(u)
                    .map(|(a, b)| a + b)
                    .fold(BIG, f64::min)
            })
            .collect()
    }
}
