//! Fixed-size 2x2 algebra. Every matrix in the estimator is 2x2, so these
//! helpers are written out explicitly instead of going through a general
//! linear algebra crate.

use std::ops::{Add, Mul, Sub};

use crate::per_unit::DqVector;

/// Row-major 2x2 matrix.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Mat2 {
    pub m11: f64,
    pub m12: f64,
    pub m21: f64,
    pub m22: f64,
}

impl Mat2 {
    pub const ZERO: Mat2 = Mat2 { m11: 0.0, m12: 0.0, m21: 0.0, m22: 0.0 };
    pub const IDENTITY: Mat2 = Mat2 { m11: 1.0, m12: 0.0, m21: 0.0, m22: 1.0 };

    pub const fn new(m11: f64, m12: f64, m21: f64, m22: f64) -> Self {
        Mat2 { m11, m12, m21, m22 }
    }

    pub const fn diag(a: f64, b: f64) -> Self {
        Mat2::new(a, 0.0, 0.0, b)
    }

    /// Matrix whose rows are `r1` and `r2`.
    pub fn from_rows(r1: DqVector, r2: DqVector) -> Self {
        Mat2::new(r1.d, r1.q, r2.d, r2.q)
    }

    pub fn row1(&self) -> DqVector {
        DqVector::new(self.m11, self.m12)
    }

    pub fn row2(&self) -> DqVector {
        DqVector::new(self.m21, self.m22)
    }

    pub fn det(&self) -> f64 {
        self.m11 * self.m22 - self.m12 * self.m21
    }

    pub fn trace(&self) -> f64 {
        self.m11 + self.m22
    }

    pub fn transpose(&self) -> Self {
        Mat2::new(self.m11, self.m21, self.m12, self.m22)
    }

    /// Adjugate, so that `m * m.adjugate() == det(m) * I`.
    pub fn adjugate(&self) -> Self {
        Mat2::new(self.m22, -self.m12, -self.m21, self.m11)
    }

    /// Exact inverse, `None` when the determinant is exactly zero or not finite.
    pub fn inverse(&self) -> Option<Self> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        Some(self.adjugate() * (1.0 / det))
    }

    /// Solves `self * x = b`.
    pub fn solve(&self, b: DqVector) -> Option<DqVector> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        Some(DqVector::new(
            (b.d * self.m22 - self.m12 * b.q) / det,
            (self.m11 * b.q - self.m21 * b.d) / det,
        ))
    }

    pub fn mul_vec(&self, v: DqVector) -> DqVector {
        DqVector::new(self.m11 * v.d + self.m12 * v.q, self.m21 * v.d + self.m22 * v.q)
    }

    /// Outer product `a bᵀ`.
    pub fn outer(a: DqVector, b: DqVector) -> Self {
        Mat2::new(a.d * b.d, a.d * b.q, a.q * b.d, a.q * b.q)
    }

    pub fn max_abs(&self) -> f64 {
        self.m11.abs().max(self.m12.abs()).max(self.m21.abs()).max(self.m22.abs())
    }

    pub fn is_finite(&self) -> bool {
        self.m11.is_finite() && self.m12.is_finite() && self.m21.is_finite() && self.m22.is_finite()
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        Mat2::new(self.m11 + o.m11, self.m12 + o.m12, self.m21 + o.m21, self.m22 + o.m22)
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        Mat2::new(self.m11 - o.m11, self.m12 - o.m12, self.m21 - o.m21, self.m22 - o.m22)
    }
}

impl Mul<f64> for Mat2 {
    type Output = Mat2;
    fn mul(self, s: f64) -> Mat2 {
        Mat2::new(self.m11 * s, self.m12 * s, self.m21 * s, self.m22 * s)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        Mat2::new(
            self.m11 * o.m11 + self.m12 * o.m21,
            self.m11 * o.m12 + self.m12 * o.m22,
            self.m21 * o.m11 + self.m22 * o.m21,
            self.m21 * o.m12 + self.m22 * o.m22,
        )
    }
}
