//! Small dense linear algebra for the observer and controller designs.
//!
//! Dimensions here are tiny (at most a few dozen), so everything is a plain
//! row-major `Vec` with Gaussian elimination. Nothing is tuned for size.

use std::ops::{Index, IndexMut};

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn diag(d: &[T]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Builds a matrix from row slices. Panics on ragged input.
    pub fn from_rows(rows: &[&[T]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Self { rows: r, cols: c, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-T::one()))
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] = out[(i, j)] + a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len(), "vector length differs from column count");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(&a, &b)| a * b).sum())
            .collect()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Solves `self * X = rhs` by Gaussian elimination with partial pivoting.
    pub fn solve(&self, rhs: &Self) -> Result<Self> {
        if !self.is_square() || rhs.rows != self.rows {
            return Err(Error::Input(format!(
                "solve: {}x{} system with {}-row right-hand side",
                self.rows, self.cols, rhs.rows
            )));
        }
        let n = self.rows;
        let m = rhs.cols;
        let mut a = self.clone();
        let mut b = rhs.clone();
        let tol = lit::<T>(64.0) * T::epsilon() * self.max_abs().max(T::min_positive_value());
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| {
                    a[(i, col)]
                        .abs()
                        .partial_cmp(&a[(j, col)].abs())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
                .unwrap_or(col);
            if !(a[(pivot, col)].abs() > tol) {
                return Err(Error::Input("singular matrix".into()));
            }
            if pivot != col {
                a.swap_rows(pivot, col);
                b.swap_rows(pivot, col);
            }
            let p = a[(col, col)];
            for r in (col + 1)..n {
                let f = a[(r, col)] / p;
                if f == T::zero() {
                    continue;
                }
                for c in col..n {
                    a[(r, c)] = a[(r, c)] - f * a[(col, c)];
                }
                for c in 0..m {
                    b[(r, c)] = b[(r, c)] - f * b[(col, c)];
                }
            }
        }
        let mut x = Self::zeros(n, m);
        for c in 0..m {
            for r in (0..n).rev() {
                let mut s = b[(r, c)];
                for k in (r + 1)..n {
                    s = s - a[(r, k)] * x[(k, c)];
                }
                x[(r, c)] = s / a[(r, r)];
            }
        }
        Ok(x)
    }

    pub fn solve_vec(&self, rhs: &[T]) -> Result<Vec<T>> {
        let b = Self {
            rows: rhs.len(),
            cols: 1,
            data: rhs.to_vec(),
        };
        Ok(self.solve(&b)?.data)
    }

    pub fn inverse(&self) -> Result<Self> {
        self.solve(&Self::identity(self.rows))
    }

    fn swap_rows(&mut self, i: usize, j: usize) {
        for c in 0..self.cols {
            self.data.swap(i * self.cols + c, j * self.cols + c);
        }
    }

    /// Coefficients `c` of `det(sI - A) = s^n + c[0] s^{n-1} + ... + c[n-1]`
    /// via Faddeev-LeVerrier.
    pub fn char_poly(&self) -> Vec<T> {
        assert!(self.is_square());
        let n = self.rows;
        let mut coeffs = Vec::with_capacity(n);
        let mut m = Self::identity(n);
        for k in 1..=n {
            let am = self.matmul(&m);
            let c = -am.trace() / lit::<T>(k as f64);
            coeffs.push(c);
            m = am.add(&Self::identity(n).scale(c));
        }
        coeffs
    }

    pub fn eigenvalues(&self) -> Vec<Complex<T>> {
        poly_roots(&self.char_poly())
    }

    pub fn spectral_radius(&self) -> T {
        self.eigenvalues().iter().fold(T::zero(), |m, z| m.max(z.norm()))
    }
}

impl<T> Index<(usize, usize)> for Mat<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Mat<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Roots of the monic polynomial `s^n + c[0] s^{n-1} + ... + c[n-1]`
/// (Durand-Kerner iteration).
pub fn poly_roots<T: Real>(c: &[T]) -> Vec<Complex<T>> {
    let n = c.len();
    if n == 0 {
        return Vec::new();
    }
    let eval = |z: Complex<T>| {
        c.iter().fold(Complex::new(T::one(), T::zero()), |acc, &a| {
            acc * z + Complex::new(a, T::zero())
        })
    };
    // Cauchy bound for the initial circle.
    let radius = T::one() + c.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let seed = Complex::new(lit::<T>(0.4), lit::<T>(0.9));
    let mut z: Vec<Complex<T>> = (0..n).map(|k| seed.powu(k as u32) * radius).collect();
    let tol = lit::<T>(16.0) * T::epsilon();
    for _ in 0..500 {
        let mut delta = T::zero();
        for i in 0..n {
            let mut den = Complex::new(T::one(), T::zero());
            for j in 0..n {
                if i != j {
                    den = den * (z[i] - z[j]);
                }
            }
            if den.norm() == T::zero() {
                den = Complex::new(T::epsilon(), T::zero());
            }
            let step = eval(z[i]) / den;
            z[i] = z[i] - step;
            delta = delta.max(step.norm() / (T::one() + z[i].norm()));
        }
        if delta <= tol {
            break;
        }
    }
    z
}

/// Routh-Hurwitz test: true iff all roots of
/// `s^n + c[0] s^{n-1} + ... + c[n-1]` lie in the open left half-plane.
pub fn is_hurwitz<T: Real>(c: &[T]) -> bool {
    let n = c.len();
    if n == 0 {
        return true;
    }
    if c.iter().any(|&v| !(v > T::zero())) {
        return false;
    }
    let mut full = Vec::with_capacity(n + 1);
    full.push(T::one());
    full.extend_from_slice(c);
    let width = n / 2 + 1;
    let take = |start: usize| -> Vec<T> {
        (0..width)
            .map(|k| full.get(start + 2 * k).copied().unwrap_or(T::zero()))
            .collect()
    };
    let mut prev = take(0);
    let mut cur = take(1);
    for _ in 1..n {
        if !(cur[0] > T::zero()) {
            return false;
        }
        let next: Vec<T> = (0..width)
            .map(|k| {
                let p = prev.get(k + 1).copied().unwrap_or(T::zero());
                let q = cur.get(k + 1).copied().unwrap_or(T::zero());
                (cur[0] * p - prev[0] * q) / cur[0]
            })
            .collect();
        prev = cur;
        cur = next;
    }
    cur[0] > T::zero()
}

/// Solves the continuous Lyapunov equation `Aᵀ P + P A = -Q` through the
/// Kronecker form `(I ⊗ Aᵀ + Aᵀ ⊗ I) vec(P) = -vec(Q)`.
pub fn solve_continuous_lyapunov<T: Real>(a: &Mat<T>, q: &Mat<T>) -> Result<Mat<T>> {
    let n = a.rows();
    if !a.is_square() || q.rows() != n || !q.is_square() {
        return Err(Error::Input("lyapunov: dimension mismatch".into()));
    }
    let at = a.transpose();
    let nn = n * n;
    let mut k = Mat::zeros(nn, nn);
    // Column-major vec: P[i,j] -> index j*n + i.
    for i in 0..n {
        for j in 0..n {
            let row = j * n + i;
            // (Aᵀ P)[i,j] = Σ_m Aᵀ[i,m] P[m,j]
            for m in 0..n {
                k[(row, j * n + m)] = k[(row, j * n + m)] + at[(i, m)];
            }
            // (P A)[i,j] = Σ_m P[i,m] A[m,j]
            for m in 0..n {
                k[(row, m * n + i)] = k[(row, m * n + i)] + a[(m, j)];
            }
        }
    }
    let rhs: Vec<T> = (0..nn).map(|idx| -q[(idx % n, idx / n)]).collect();
    let sol = k.solve_vec(&rhs)?;
    let mut p = Mat::zeros(n, n);
    for (idx, v) in sol.into_iter().enumerate() {
        p[(idx % n, idx / n)] = v;
    }
    Ok(p)
}
