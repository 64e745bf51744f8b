//! Dense complex matrices sized for desk-scale qubit registers.

use alloc::vec::Vec;
use core::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

pub const I: C64 = C64::new(0.0, 1.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const ZERO: C64 = C64::new(0.0, 0.0);

/// Square complex matrix acting on `2^n`-dimensional state space.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    mat: DMatrix<C64>,
}

impl DenseOperator {
    pub fn zeros(dim: usize) -> Self {
        Self { mat: DMatrix::zeros(dim, dim) }
    }

    pub fn identity(dim: usize) -> Self {
        Self { mat: DMatrix::identity(dim, dim) }
    }

    /// Wraps a square matrix whose side is a power of two.
    pub fn from_matrix(mat: DMatrix<C64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::DimensionMismatch { expected: mat.nrows(), found: mat.ncols() });
        }
        if !mat.nrows().is_power_of_two() {
            return Err(Error::NotPowerOfTwo(mat.nrows()));
        }
        Ok(Self { mat })
    }

    pub fn from_row_major(dim: usize, entries: &[C64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, found: entries.len() });
        }
        Self::from_matrix(DMatrix::from_row_slice(dim, dim, entries))
    }

    pub fn diagonal(entries: &[C64]) -> Result<Self> {
        let mut mat = DMatrix::zeros(entries.len(), entries.len());
        for (k, &e) in entries.iter().enumerate() {
            mat[(k, k)] = e;
        }
        Self::from_matrix(mat)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn n_qubits(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    #[inline]
    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.mat
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.mat[(row, col)]
    }

    pub fn set(&mut self, row: usize, col: usize, value: C64) {
        self.mat[(row, col)] = value;
    }

    pub fn adjoint(&self) -> Self {
        Self { mat: self.mat.adjoint() }
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { mat: &self.mat * s }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    /// `self += s * other`
    pub fn add_scaled(&mut self, s: C64, other: &Self) {
        self.mat.zip_apply(&other.mat, |a, b| *a += s * b);
    }

    /// `Tr[self * other]` without forming the product.
    pub fn trace_product(&self, other: &Self) -> C64 {
        let n = self.dim();
        let mut acc = ZERO;
        for i in 0..n {
            for k in 0..n {
                acc += self.mat[(i, k)] * other.mat[(k, i)];
            }
        }
        acc
    }

    pub fn max_abs(&self) -> f64 {
        self.mat.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.mat.iter().zip(other.mat.iter()).fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.mat.iter().map(|z| z.norm_sqr()).sum::<f64>())
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.mat[(i, j)] - self.mat[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() < tol
    }

    pub fn unitarity_defect(&self) -> f64 {
        let prod = &self.mat.adjoint() * &self.mat;
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { ONE } else { ZERO };
                worst = worst.max((prod[(i, j)] - target).norm());
            }
        }
        worst
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_defect() < tol
    }

    pub fn kron(&self, other: &Self) -> Self {
        Self { mat: self.mat.kronecker(&other.mat) }
    }

    /// Ascending eigenvalues of a Hermitian operator.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.mat.clone().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Largest absolute eigenvalue of a Hermitian operator.
    pub fn spectral_norm_hermitian(&self) -> f64 {
        self.hermitian_eigenvalues().iter().fold(0.0, |m, e| m.max(e.abs()))
    }

    /// Matrix exponential by scaling and squaring of a truncated Taylor series.
    pub fn expm(&self) -> Self {
        let norm1 =
            (0..self.dim()).map(|j| self.mat.column(j).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max);
        let mut squarings = 0u32;
        let mut scale = 1.0;
        while norm1 * scale > 0.25 {
            scale *= 0.5;
            squarings += 1;
        }
        let a = &self.mat * C64::new(scale, 0.0);
        let n = self.dim();
        let mut result = DMatrix::<C64>::identity(n, n);
        let mut term = DMatrix::<C64>::identity(n, n);
        for k in 1..=24 {
            term = &term * &a * C64::new(1.0 / k as f64, 0.0);
            result += &term;
            if term.iter().fold(0.0f64, |m, z| m.max(z.norm())) < 1e-18 {
                break;
            }
        }
        for _ in 0..squarings {
            result = &result * &result;
        }
        Self { mat: result }
    }

    /// `exp(-i H dt)` for Hermitian `H`.
    pub fn propagator(&self, dt: f64) -> Self {
        self.scale(C64::new(0.0, -dt)).expm()
    }

    /// `⟨ψ| self |ψ⟩`
    pub fn expectation(&self, psi: &[C64]) -> C64 {
        let n = self.dim();
        let mut acc = ZERO;
        for i in 0..n {
            let mut row = ZERO;
            for j in 0..n {
                row += self.mat[(i, j)] * psi[j];
            }
            acc += psi[i].conj() * row;
        }
        acc
    }
}

impl Add for &DenseOperator {
    type Output = DenseOperator;
    fn add(self, rhs: Self) -> DenseOperator {
        DenseOperator { mat: &self.mat + &rhs.mat }
    }
}

impl Sub for &DenseOperator {
    type Output = DenseOperator;
    fn sub(self, rhs: Self) -> DenseOperator {
        DenseOperator { mat: &self.mat - &rhs.mat }
    }
}

impl Mul for &DenseOperator {
    type Output = DenseOperator;
    fn mul(self, rhs: Self) -> DenseOperator {
        DenseOperator { mat: &self.mat * &rhs.mat }
    }
}

/// 2×2 complex matrix, row-major. Used for single-qubit control frames where
/// the general dense path would dominate optimizer run time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [C64; 4]);

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2([ONE, ZERO, ZERO, ONE]);

    /// `exp(i (ax σx + ay σy + az σz))`
    pub fn exp_i_pauli(ax: f64, ay: f64, az: f64) -> Mat2 {
        let theta = libm::sqrt(ax * ax + ay * ay + az * az);
        if theta == 0.0 {
            return Mat2::IDENTITY;
        }
        let (s, c) = libm::sincos(theta);
        let k = s / theta;
        // cos θ I + i sinθ (n·σ)
        Mat2([C64::new(c, k * az), C64::new(k * ay, k * ax), C64::new(-k * ay, k * ax), C64::new(c, -k * az)])
    }

    #[inline]
    pub fn mul(&self, o: &Mat2) -> Mat2 {
        let [a, b, c, d] = self.0;
        let [e, f, g, h] = o.0;
        Mat2([a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h])
    }

    pub fn adjoint(&self) -> Mat2 {
        let [a, b, c, d] = self.0;
        Mat2([a.conj(), c.conj(), b.conj(), d.conj()])
    }

    pub fn unitarity_defect(&self) -> f64 {
        let p = self.adjoint().mul(self);
        let t = [ONE, ZERO, ZERO, ONE];
        p.0.iter().zip(t.iter()).fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }

    pub fn max_abs_diff(&self, o: &Mat2) -> f64 {
        self.0.iter().zip(o.0.iter()).fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }

    pub fn to_dense(&self) -> DenseOperator {
        DenseOperator { mat: DMatrix::from_row_slice(2, 2, &self.0) }
    }

    /// Adjoint-representation rotation `R[β][α] = ½ Tr[U σ_α U† σ_β]`.
    pub fn rotation(&self) -> [[f64; 3]; 3] {
        let [a, b, c, d] = self.0;
        // Columns of R are images of σx, σy, σz; read Bloch components of U σ_α U†.
        let paulis = [[ZERO, ONE, ONE, ZERO], [ZERO, -I, I, ZERO], [ONE, ZERO, ZERO, -ONE]];
        let mut r = [[0.0; 3]; 3];
        for (alpha, p) in paulis.iter().enumerate() {
            // M = U P U†
            let up = Mat2([a * p[0] + b * p[2], a * p[1] + b * p[3], c * p[0] + d * p[2], c * p[1] + d * p[3]]);
            let m = up.mul(&Mat2([a, b, c, d]).adjoint());
            let [m00, m01, m10, m11] = m.0;
            r[0][alpha] = 0.5 * (m01 + m10).re;
            r[1][alpha] = 0.5 * (I * (m01 - m10)).re;
            r[2][alpha] = 0.5 * (m00 - m11).re;
        }
        r
    }
}
