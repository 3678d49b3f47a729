//! Dense vector helpers and a small row-major matrix type.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

#[inline]
pub fn norm_sq<T: Scalar>(a: &[T]) -> T {
    dot(a, a)
}

#[inline]
pub fn norm<T: Scalar>(a: &[T]) -> T {
    norm_sq(a).sqrt()
}

pub fn dist<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (&x, &y)| acc + (x - y) * (x - y))
        .sqrt()
}

/// `½‖a − b‖²`
pub fn dist_sq_half<T: Scalar>(a: &[T], b: &[T]) -> T {
    let s = a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + (x - y) * (x - y));
    s * T::lit(0.5)
}

pub fn sub<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

pub fn add<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x + y).collect()
}

pub fn scale<T: Scalar>(a: &[T], s: T) -> Vec<T> {
    a.iter().map(|&x| x * s).collect()
}

/// `y += s * x`
pub fn axpy<T: Scalar>(s: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi = *yi + s * xi;
    }
}

pub fn norm_inf<T: Scalar>(a: &[T]) -> T {
    a.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = T::one();
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        check_dim(rows * cols, data.len())?;
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    /// `A x`
    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `Aᵀ x`
    pub fn tr_mul_vec(&self, x: &[T]) -> Vec<T> {
        debug_assert_eq!(x.len(), self.rows);
        let mut out = vec![T::zero(); self.cols];
        for (i, &xi) in x.iter().enumerate() {
            axpy(xi, self.row(i), &mut out);
        }
        out
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a != T::zero() {
                    axpy(a, other.row(k), dst);
                }
            }
        }
        out
    }

    pub fn frobenius_sq(&self) -> T {
        norm_sq(&self.data)
    }

    /// Largest eigenvalue of `AᵀA` (the squared spectral norm) by power iteration.
    pub fn gram_spectral_radius(&self, max_iter: usize, rel_tol: T) -> T {
        if self.cols == 0 || self.rows == 0 {
            return T::zero();
        }
        // deterministic start that is not orthogonal to the top singular vector
        let mut v: Vec<T> = (0..self.cols)
            .map(|j| T::one() + T::lit(0.1) * T::lit(((j * 7919) % 101) as f64 / 101.0))
            .collect();
        let n = norm(&v);
        v.iter_mut().for_each(|x| *x = *x / n);
        let mut lambda = T::zero();
        for _ in 0..max_iter {
            let w = self.tr_mul_vec(&self.mul_vec(&v));
            let next = dot(&v, &w);
            let wn = norm(&w);
            if wn == T::zero() {
                return T::zero();
            }
            v = scale(&w, T::one() / wn);
            if (next - lambda).abs() <= rel_tol * next.abs() {
                return next.max(lambda);
            }
            lambda = next;
        }
        lambda
    }
}

/// Orthonormalises the columns of a `rows × cols` column set (given as a list of
/// column vectors) by modified Gram-Schmidt with one re-orthogonalisation pass.
pub(crate) fn orthonormal_columns(mut cols: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    for j in 0..cols.len() {
        for _pass in 0..2 {
            for i in 0..j {
                let (head, tail) = cols.split_at_mut(j);
                let r = dot(&head[i], &tail[0]);
                axpy(-r, &head[i], &mut tail[0]);
            }
        }
        let n = norm(&cols[j]);
        cols[j].iter_mut().for_each(|x| *x /= n);
    }
    cols
}
