//! Dense complex matrices of dimension 2 to 4 and the few numerical
//! primitives the rest of the crate is built on.
//!
//! Inversion and determinants use partial-pivot elimination directly on the
//! fixed-size storage. Eigen-decompositions delegate to `nalgebra`'s complex
//! Schur and SVD routines.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CVector = Vec<Complex64>;

const MAX_DIM: usize = 4;

/// Square complex matrix with `dim` in `2..=4`, stored row-major.
#[derive(Clone, Copy, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: [Complex64; MAX_DIM * MAX_DIM],
}

fn check_dim(dim: usize) -> Result<()> {
    if (2..=MAX_DIM).contains(&dim) {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(dim))
    }
}

impl Matrix {
    pub fn zeros(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Matrix {
            dim,
            data: [Complex64::new(0.0, 0.0); MAX_DIM * MAX_DIM],
        })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        let mut m = Self::zeros(dim)?;
        for i in 0..dim {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        Ok(m)
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Result<Self> {
        let mut m = Self::zeros(dim)?;
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = f(i, j);
            }
        }
        Ok(m)
    }

    /// Builds a matrix from rows; every row must have as many entries as there are rows.
    pub fn from_rows<R: AsRef<[Complex64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.len();
        check_dim(dim)?;
        for r in rows {
            if r.as_ref().len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: r.as_ref().len(),
                });
            }
        }
        Self::from_fn(dim, |i, j| rows[i].as_ref()[j])
    }

    pub fn diagonal(entries: &[Complex64]) -> Result<Self> {
        Self::from_fn(entries.len(), |i, j| {
            if i == j {
                entries[i]
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn adjoint(&self) -> Self {
        let mut m = *self;
        for i in 0..self.dim {
            for j in 0..self.dim {
                m[(i, j)] = self[(j, i)].conj();
            }
        }
        m
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, z: Complex64) -> Self {
        let mut m = *self;
        m.data.iter_mut().for_each(|x| *x *= z);
        m
    }

    /// Largest entry modulus, `‖M‖_max`.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `‖M − M†‖_max`.
    pub fn hermiticity_residual(&self) -> f64 {
        (*self - self.adjoint()).max_abs()
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> CVector {
        assert_eq!(v.len(), self.dim, "matrix-vector dimension mismatch");
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    pub fn commutator(&self, other: &Matrix) -> Matrix {
        *self * *other - *other * *self
    }

    /// Partial-pivot LU factorisation. Returns the packed factors, the row
    /// permutation and the permutation sign, or `None` if a pivot vanishes.
    fn lu(&self) -> Option<(Matrix, [usize; MAX_DIM], f64)> {
        let n = self.dim;
        let mut a = *self;
        let mut perm = [0, 1, 2, 3];
        let mut sign = 1.0;
        for k in 0..n {
            let p = (k..n)
                .max_by(|&x, &y| a[(x, k)].norm().total_cmp(&a[(y, k)].norm()))
                .unwrap();
            if a[(p, k)].norm() == 0.0 {
                return None;
            }
            if p != k {
                for j in 0..n {
                    let tmp = a[(k, j)];
                    a[(k, j)] = a[(p, j)];
                    a[(p, j)] = tmp;
                }
                perm.swap(k, p);
                sign = -sign;
            }
            for i in (k + 1)..n {
                let f = a[(i, k)] / a[(k, k)];
                a[(i, k)] = f;
                for j in (k + 1)..n {
                    let akj = a[(k, j)];
                    a[(i, j)] -= f * akj;
                }
            }
        }
        Some((a, perm, sign))
    }

    pub fn determinant(&self) -> Complex64 {
        match self.lu() {
            None => Complex64::new(0.0, 0.0),
            Some((a, _, sign)) => (0..self.dim).map(|i| a[(i, i)]).product::<Complex64>() * sign,
        }
    }

    pub fn inverse(&self) -> Result<Matrix> {
        let n = self.dim;
        let (a, perm, _) = self.lu().ok_or(Error::Singular)?;
        let scale = self.max_abs();
        if (0..n).any(|i| a[(i, i)].norm() <= f64::EPSILON * scale) {
            return Err(Error::Singular);
        }
        let mut inv = Matrix::zeros(n)?;
        for col in 0..n {
            // forward substitution on the permuted unit vector
            let mut y = [Complex64::new(0.0, 0.0); MAX_DIM];
            for i in 0..n {
                let mut s = if perm[i] == col {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                };
                for (j, yj) in y.iter().enumerate().take(i) {
                    s -= a[(i, j)] * yj;
                }
                y[i] = s;
            }
            for i in (0..n).rev() {
                let mut s = y[i];
                for j in (i + 1)..n {
                    s -= a[(i, j)] * inv[(j, col)];
                }
                inv[(i, col)] = s / a[(i, i)];
            }
        }
        Ok(inv)
    }

    pub(crate) fn to_nalgebra(self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self[(i, j)])
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        debug_assert!(i < self.dim && j < self.dim);
        &self.data[i * MAX_DIM + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        debug_assert!(i < self.dim && j < self.dim);
        &mut self.data[i * MAX_DIM + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix({}x{})", self.dim, self.dim)?;
        for i in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|j| format!("{:+.6}{:+.6}i", self[(i, j)].re, self[(i, j)].im))
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl Add for Matrix {
    type Output = Matrix;
    fn add(mut self, rhs: Matrix) -> Matrix {
        assert_eq!(self.dim, rhs.dim);
        self.data.iter_mut().zip(rhs.data).for_each(|(a, b)| *a += b);
        self
    }
}

impl AddAssign for Matrix {
    fn add_assign(&mut self, rhs: Matrix) {
        *self = *self + rhs;
    }
}

impl Sub for Matrix {
    type Output = Matrix;
    fn sub(mut self, rhs: Matrix) -> Matrix {
        assert_eq!(self.dim, rhs.dim);
        self.data.iter_mut().zip(rhs.data).for_each(|(a, b)| *a -= b);
        self
    }
}

impl Neg for Matrix {
    type Output = Matrix;
    fn neg(self) -> Matrix {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

impl Mul for Matrix {
    type Output = Matrix;
    fn mul(self, rhs: Matrix) -> Matrix {
        assert_eq!(self.dim, rhs.dim);
        let n = self.dim;
        let mut out = self;
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] = (0..n).map(|k| self[(i, k)] * rhs[(k, j)]).sum();
            }
        }
        out
    }
}

impl Mul<Complex64> for Matrix {
    type Output = Matrix;
    fn mul(self, z: Complex64) -> Matrix {
        self.scale(z)
    }
}

impl Mul<f64> for Matrix {
    type Output = Matrix;
    fn mul(self, x: f64) -> Matrix {
        self.scale(Complex64::new(x, 0.0))
    }
}

/// `⟨a|b⟩`, antilinear in the first argument.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Multiplies `v` by the unit complex number that makes `⟨reference|v⟩`
/// real and non-negative, i.e. the global phase that best aligns `v` with
/// `reference`.
pub fn phase_align(reference: &[Complex64], v: &[Complex64]) -> CVector {
    let overlap = inner(reference, v);
    if overlap.norm() == 0.0 {
        return v.to_vec();
    }
    let z = overlap.conj() / overlap.norm();
    v.iter().map(|x| x * z).collect()
}

/// Whether `EigenSystem::vectors` spans the space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigenStatus {
    Diagonalizable,
    /// Some eigenvalue has fewer independent eigenvectors than its
    /// multiplicity (an exceptional point). No eigenbasis is returned.
    Defective,
}

#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub values: Vec<Complex64>,
    /// Unit-norm eigenvectors, paired with `values`; empty when defective.
    pub vectors: Vec<CVector>,
    pub status: EigenStatus,
}

/// Orders by real part, breaking near-ties by imaginary part.
fn spectral_order(values: &mut [(Complex64, usize)], tie: f64) {
    // insertion sort: the comparator is only approximately transitive
    for i in 1..values.len() {
        let mut j = i;
        while j > 0 {
            let (a, b) = (values[j - 1].0, values[j].0);
            let swap = if (a.re - b.re).abs() <= tie {
                a.im > b.im
            } else {
                a.re > b.re
            };
            if !swap {
                break;
            }
            values.swap(j - 1, j);
            j -= 1;
        }
    }
}

/// Fixes the phase so that the first non-negligible component is real positive.
fn canonical_phase(mut v: CVector) -> CVector {
    let n = norm(&v);
    if n == 0.0 {
        return v;
    }
    v.iter_mut().for_each(|z| *z /= n);
    if let Some(first) = v.iter().find(|z| z.norm() > 1e-12).copied() {
        let z = first.conj() / first.norm();
        v.iter_mut().for_each(|x| *x *= z);
    }
    v
}

/// Characteristic polynomial coefficients, constant term first, by the
/// Faddeev-LeVerrier recursion.
pub fn characteristic_polynomial(m: &Matrix) -> Vec<Complex64> {
    let n = m.dim();
    let id = Matrix::identity(n).expect("valid dim");
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n + 1];
    coeffs[n] = Complex64::new(1.0, 0.0);
    let mut acc = Matrix::zeros(n).expect("valid dim");
    for k in 1..=n {
        acc = *m * acc + id * coeffs[n + 1 - k];
        coeffs[n - k] = -(*m * acc).trace() / k as f64;
    }
    coeffs
}

/// Simultaneous root finding (Aberth-Ehrlich) for a monic polynomial.
fn polynomial_roots(coeffs: &[Complex64]) -> Vec<Complex64> {
    let n = coeffs.len() - 1;
    let eval = |z: Complex64| {
        let mut p = Complex64::new(0.0, 0.0);
        let mut dp = Complex64::new(0.0, 0.0);
        for c in coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    };
    let bound = 1.0 + coeffs[..n].iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut roots: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(0.5 * bound, 0.4 + 2.0 * std::f64::consts::PI * k as f64 / n as f64))
        .collect();
    for _ in 0..500 {
        let mut moved = 0.0f64;
        for i in 0..n {
            let (p, dp) = eval(roots[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let repulsion: Complex64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| Complex64::new(1.0, 0.0) / (roots[i] - roots[j]))
                .sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            if step.is_finite() {
                roots[i] -= step;
                moved = moved.max(step.norm() / roots[i].norm().max(1.0));
            }
        }
        if moved < 1e-16 {
            break;
        }
    }
    roots
}

/// Diagonal of the complex Schur form; falls back to characteristic
/// polynomial roots when the QR iteration fails to converge.
fn raw_eigenvalues(m: &Matrix) -> Vec<Complex64> {
    match nalgebra::linalg::Schur::try_new(m.to_nalgebra(), f64::EPSILON, 300) {
        Some(schur) => {
            let (_, t) = schur.unpack();
            (0..m.dim()).map(|i| t[(i, i)]).collect()
        }
        None => polynomial_roots(&characteristic_polynomial(m)),
    }
}

/// Eigenvalues and unit eigenvectors of a general complex matrix.
///
/// Values are sorted by (real, imaginary) part; eigenvectors have their first
/// non-negligible component real and positive. For defective inputs only the
/// eigenvalues are returned.
pub fn eigenpairs(m: &Matrix) -> EigenSystem {
    let n = m.dim();
    let scale = m.frobenius_norm().max(f64::MIN_POSITIVE);
    let raw = raw_eigenvalues(m);
    let mut values: Vec<(Complex64, usize)> = raw.into_iter().zip(0..n).collect();
    spectral_order(&mut values, 1e-9 * scale);
    let values: Vec<Complex64> = values.into_iter().map(|(v, _)| v).collect();

    // cluster numerically coincident eigenvalues
    let cluster_tol = 1e-6 * scale;
    let mut vectors: Vec<CVector> = Vec::with_capacity(n);
    let mut status = EigenStatus::Diagonalizable;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && (values[j] - values[i]).norm() <= cluster_tol {
            j += 1;
        }
        let mult = j - i;
        let centre = values[i..j].iter().sum::<Complex64>() / mult as f64;
        let shifted = *m - Matrix::identity(n).expect("valid dim") * centre;
        let svd = shifted.to_nalgebra().svd(false, true);
        let v_t = svd.v_t.expect("requested V^T");
        // singular values in decreasing order; rows of V^H are right singular vectors
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
        let null_tol = 1e-7 * scale;
        let null_dim = order
            .iter()
            .filter(|&&k| svd.singular_values[k] <= null_tol)
            .count()
            .max(1);
        if null_dim < mult {
            status = EigenStatus::Defective;
        }
        for &k in order.iter().take(mult) {
            let v: CVector = (0..n).map(|c| v_t[(k, c)].conj()).collect();
            vectors.push(canonical_phase(v));
        }
        i = j;
    }
    if status == EigenStatus::Defective {
        vectors.clear();
    }
    EigenSystem {
        values,
        vectors,
        status,
    }
}

/// Real eigenvalues of a Hermitian matrix in ascending order.
pub fn hermitian_eigenvalues(m: &Matrix, tol: f64) -> Result<Vec<f64>> {
    let residual = m.hermiticity_residual();
    if residual > tol {
        return Err(Error::NotHermitian { residual });
    }
    let eig = nalgebra::linalg::SymmetricEigen::new(m.to_nalgebra());
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    Ok(vals)
}

/// True iff `m` is Hermitian within `tol` and every eigenvalue exceeds `tol`.
pub fn positive_definite(m: &Matrix, tol: f64) -> Result<bool> {
    Ok(hermitian_eigenvalues(m, tol)?.iter().all(|&v| v > tol))
}

/// `0, dt, 2dt, …` up to and including `t_max` (within rounding).
pub fn uniform_grid(t_max: f64, dt: f64) -> Vec<f64> {
    let steps = (t_max / dt + 1e-9).floor() as usize;
    (0..=steps).map(|i| i as f64 * dt).collect()
}

/// Central difference `(f(t+h) − f(t−h)) / 2h`.
pub fn time_derivative<F>(f: F, t: f64, h: f64) -> Result<Matrix>
where
    F: Fn(f64) -> Result<Matrix>,
{
    if !(h > 0.0) {
        return Err(Error::invalid(format!("finite-difference step must be positive, got {h}")));
    }
    let ahead = f(t + h)?;
    let behind = f(t - h)?;
    Ok((ahead - behind) * (0.5 / h))
}
