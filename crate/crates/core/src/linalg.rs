//! Small dense linear algebra: square complex matrices and a cyclic Jacobi
//! eigensolver for real symmetric / complex Hermitian matrices.
//!
//! Everything here works at desk scale (a few dozen rows at most), so the
//! routines favour robustness over speed.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::scalar::Real;

/// Square, row-major, dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat<T> {
    n: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> CMat<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![Complex::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = Complex::one();
        }
        m
    }

    /// Builds a matrix from row-major entries. Panics if `data.len() != n*n`.
    pub fn from_rows(n: usize, data: Vec<Complex<T>>) -> Self {
        assert_eq!(data.len(), n * n, "row-major data must have n*n entries");
        Self { n, data }
    }

    pub fn from_real(n: usize, data: &[T]) -> Self {
        assert_eq!(data.len(), n * n, "row-major data must have n*n entries");
        Self {
            n,
            data: data.iter().map(|&x| Complex::new(x, T::zero())).collect(),
        }
    }

    /// Outer product |u⟩⟨v|.
    pub fn outer(u: &[Complex<T>], v: &[Complex<T>]) -> Self {
        assert_eq!(u.len(), v.len());
        let n = u.len();
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = u[i] * v[j].conj();
            }
        }
        m
    }

    /// Matrix unit |i⟩⟨j|.
    pub fn unit(n: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(n);
        m[(i, j)] = Complex::one();
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                m[(j, i)] = self[(i, j)].conj();
            }
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                m[(j, i)] = self[(i, j)];
            }
        }
        m
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.n).fold(Complex::zero(), |acc, i| acc + self[(i, i)])
    }

    pub fn scale(&self, k: T) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|z| *z * k).collect(),
        }
    }

    /// Largest absolute entry-wise deviation from another matrix.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!(self.n, other.n);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (*a - *b).norm())
            .fold(T::zero(), T::max)
    }

    /// Largest entry-wise deviation from hermiticity.
    pub fn hermiticity_defect(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.n {
            for j in i..self.n {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Frobenius norm.
    pub fn norm(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, z| acc + z.norm_sqr())
            .sqrt()
    }

    pub fn mul_vec(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(v.len(), self.n);
        (0..self.n)
            .map(|i| (0..self.n).fold(Complex::zero(), |acc, j| acc + self[(i, j)] * v[j]))
            .collect()
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let (n, m) = (self.n, other.n);
        let mut out = Self::zeros(n * m);
        for i in 0..n {
            for j in 0..n {
                let a = self[(i, j)];
                if a.is_zero() {
                    continue;
                }
                for k in 0..m {
                    for l in 0..m {
                        out[(i * m + k, j * m + l)] = a * other[(k, l)];
                    }
                }
            }
        }
        out
    }

    /// Eigenvalues of a Hermitian matrix in ascending order. Only the
    /// Hermitian part of `self` is used.
    pub fn hermitian_eigenvalues(&self) -> Vec<T> {
        // A Hermitian H = X + iY maps to the real symmetric [[X, -Y], [Y, X]],
        // whose spectrum is that of H with every eigenvalue doubled.
        let n = self.n;
        let mut emb = vec![T::zero(); 4 * n * n];
        let half = T::lit(0.5);
        for i in 0..n {
            for j in 0..n {
                let z = (self[(i, j)] + self[(j, i)].conj()) * half;
                emb[i * 2 * n + j] = z.re;
                emb[(i + n) * 2 * n + (j + n)] = z.re;
                emb[i * 2 * n + (j + n)] = -z.im;
                emb[(i + n) * 2 * n + j] = z.im;
            }
        }
        let (vals, _) = symmetric_eigen(2 * n, &emb);
        vals.into_iter().step_by(2).collect()
    }
}

impl<T> Index<(usize, usize)> for CMat<T> {
    type Output = Complex<T>;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.data[i * self.n + j]
    }
}

impl<T> IndexMut<(usize, usize)> for CMat<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[i * self.n + j]
    }
}

impl<T: Real> Mul for &CMat<T> {
    type Output = CMat<T>;

    fn mul(self, rhs: &CMat<T>) -> CMat<T> {
        assert_eq!(self.n, rhs.n);
        let n = self.n;
        let mut out = CMat::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] = out.data[i * n + j] + a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

impl<T: Real> Add for &CMat<T> {
    type Output = CMat<T>;

    fn add(self, rhs: &CMat<T>) -> CMat<T> {
        assert_eq!(self.n, rhs.n);
        CMat {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| *a + *b)
                .collect(),
        }
    }
}

impl<T: Real> Sub for &CMat<T> {
    type Output = CMat<T>;

    fn sub(self, rhs: &CMat<T>) -> CMat<T> {
        assert_eq!(self.n, rhs.n);
        CMat {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| *a - *b)
                .collect(),
        }
    }
}

/// Eigen-decomposition of a real symmetric `n×n` matrix given row-major.
///
/// Returns eigenvalues in ascending order and the matching orthonormal
/// eigenvectors (`vectors[k]` belongs to `values[k]`). Cyclic Jacobi
/// rotations; converges quadratically and is exact enough for the tiny
/// matrices used here.
pub fn symmetric_eigen<T: Real>(n: usize, a: &[T]) -> (Vec<T>, Vec<Vec<T>>) {
    assert_eq!(a.len(), n * n);
    let mut m: Vec<T> = a.to_vec();
    // symmetrize
    for i in 0..n {
        for j in (i + 1)..n {
            let s = (m[i * n + j] + m[j * n + i]) * T::lit(0.5);
            m[i * n + j] = s;
            m[j * n + i] = s;
        }
    }
    let mut v = vec![T::zero(); n * n];
    for i in 0..n {
        v[i * n + i] = T::one();
    }

    let scale = m.iter().fold(T::zero(), |acc, x| acc.max(x.abs()));
    let floor = T::epsilon() * T::epsilon() * scale * scale;
    for _sweep in 0..100 {
        let off: T = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .fold(T::zero(), |acc, (i, j)| acc + m[i * n + j] * m[i * n + j]);
        if off <= floor {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == T::zero() {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        m[i * n + i]
            .partial_cmp(&m[j * n + j])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&k| m[k * n + k]).collect();
    let vectors = order
        .iter()
        .map(|&k| (0..n).map(|i| v[i * n + k]).collect())
        .collect();
    (values, vectors)
}
