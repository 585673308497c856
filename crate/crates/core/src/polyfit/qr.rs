//! Householder QR for tall dense systems, column-major.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Column-major `rows × cols` matrix.
#[derive(Debug, Clone)]
pub(crate) struct Matrix<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> T {
        self.data[c * self.rows + r]
    }

    #[inline]
    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut T {
        &mut self.data[c * self.rows + r]
    }

    #[cfg(test)]
    pub fn column(&self, c: usize) -> &[T] {
        &self.data[c * self.rows..(c + 1) * self.rows]
    }

    /// Vandermonde matrix `[1, z, z², …, z^degree]` per row.
    pub fn vandermonde(zs: &[T], degree: usize) -> Self {
        let mut m = Self::zeros(zs.len(), degree + 1);
        for (r, &z) in zs.iter().enumerate() {
            let mut pow = T::one();
            for c in 0..=degree {
                *m.at_mut(r, c) = pow;
                pow = pow * z;
            }
        }
        m
    }

    #[cfg(test)]
    pub fn transpose_times(&self, v: &[T]) -> Vec<T> {
        (0..self.cols)
            .map(|c| {
                self.column(c)
                    .iter()
                    .zip(v)
                    .fold(T::zero(), |acc, (&a, &b)| acc + a * b)
            })
            .collect()
    }
}

/// Factorization `A = QR` with `Q` kept implicitly as Householder vectors.
pub(crate) struct HouseholderQr<T> {
    /// Below-diagonal: reflector tails. On/above diagonal: `R`.
    packed: Matrix<T>,
    /// Reflector scaling `β` per column, `H = I - β v vᵀ` with `v₀ = 1`.
    betas: Vec<T>,
}

impl<T: Scalar> HouseholderQr<T> {
    pub fn new(mut a: Matrix<T>) -> Result<Self> {
        let (m, n) = (a.rows, a.cols);
        if m < n {
            return Err(Error::InsufficientDof { n: m, p: n });
        }
        let mut betas = Vec::with_capacity(n);
        for k in 0..n {
            let norm = (k..m)
                .map(|r| a.at(r, k))
                .fold(T::zero(), |acc, v| acc.hypot(v));
            if norm == T::zero() {
                betas.push(T::zero());
                continue;
            }
            let x0 = a.at(k, k);
            let alpha = if x0 > T::zero() { -norm } else { norm };
            let v0 = x0 - alpha;
            for r in k + 1..m {
                *a.at_mut(r, k) = a.at(r, k) / v0;
            }
            *a.at_mut(k, k) = alpha;
            let beta = -v0 / alpha;
            betas.push(beta);

            for c in k + 1..n {
                let mut dot = a.at(k, c);
                for r in k + 1..m {
                    dot = dot + a.at(r, k) * a.at(r, c);
                }
                let s = beta * dot;
                *a.at_mut(k, c) = a.at(k, c) - s;
                for r in k + 1..m {
                    let vr = a.at(r, k);
                    *a.at_mut(r, c) = a.at(r, c) - s * vr;
                }
            }
        }
        Ok(Self { packed: a, betas })
    }

    pub fn cols(&self) -> usize {
        self.packed.cols
    }

    pub fn r(&self, i: usize, j: usize) -> T {
        if j < i {
            T::zero()
        } else {
            self.packed.at(i, j)
        }
    }

    /// Fails when a diagonal entry of `R` is negligible against the largest.
    pub fn check_rank(&self) -> Result<()> {
        let n = self.cols();
        let largest = (0..n).map(|k| self.r(k, k).abs()).fold(T::zero(), T::max);
        let tol = T::from_usize_lossy(self.packed.rows.max(n)) * T::epsilon() * largest;
        match (0..n).find(|&k| self.r(k, k).abs() <= tol) {
            Some(k) => Err(Error::RankDeficient(format!(
                "column {k} of the design is linearly dependent on earlier columns"
            ))),
            None => Ok(()),
        }
    }

    /// `Qᵀ b`.
    pub fn apply_qt(&self, b: &[T]) -> Vec<T> {
        let m = self.packed.rows;
        let mut out = b.to_vec();
        for (k, &beta) in self.betas.iter().enumerate() {
            if beta == T::zero() {
                continue;
            }
            let mut dot = out[k];
            for r in k + 1..m {
                dot = dot + self.packed.at(r, k) * out[r];
            }
            let s = beta * dot;
            out[k] = out[k] - s;
            for r in k + 1..m {
                out[r] = out[r] - s * self.packed.at(r, k);
            }
        }
        out
    }

    /// Least-squares solution of `A x ≈ b`.
    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        self.check_rank()?;
        let qtb = self.apply_qt(b);
        let n = self.cols();
        let mut x = vec![T::zero(); n];
        for i in (0..n).rev() {
            let mut acc = qtb[i];
            for j in i + 1..n {
                acc = acc - self.r(i, j) * x[j];
            }
            x[i] = acc / self.r(i, i);
        }
        Ok(x)
    }

    /// `(AᵀA)⁻¹ = R⁻¹ R⁻ᵀ`, row-major `n × n`.
    pub fn normal_inverse(&self) -> Result<Vec<Vec<T>>> {
        self.check_rank()?;
        let n = self.cols();
        // upper-triangular R⁻¹, column by column
        let mut rinv = vec![vec![T::zero(); n]; n];
        for j in 0..n {
            rinv[j][j] = T::one() / self.r(j, j);
            for i in (0..j).rev() {
                let mut acc = T::zero();
                for k in i + 1..=j {
                    acc = acc + self.r(i, k) * rinv[k][j];
                }
                rinv[i][j] = -acc / self.r(i, i);
            }
        }
        let mut out = vec![vec![T::zero(); n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = T::zero();
                for k in i.max(j)..n {
                    acc = acc + rinv[i][k] * rinv[j][k];
                }
                out[i][j] = acc;
            }
        }
        Ok(out)
    }
}
