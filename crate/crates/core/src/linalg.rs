//! Fixed-size complex 2×2 algebra used by the two-level model.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Neg, Sub};

pub type Vec2 = [Complex64; 2];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// A 2×2 complex matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2(pub [[Complex64; 2]; 2]);

impl Mat2 {
    pub const fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Self {
        Mat2([[a, b], [c, d]])
    }

    pub const fn zero() -> Self {
        Mat2([[ZERO, ZERO], [ZERO, ZERO]])
    }

    pub const fn identity() -> Self {
        Mat2([[ONE, ZERO], [ZERO, ONE]])
    }

    pub const fn sigma_x() -> Self {
        Mat2([[ZERO, ONE], [ONE, ZERO]])
    }

    pub fn sigma_y() -> Self {
        Mat2([[ZERO, -I], [I, ZERO]])
    }

    pub const fn sigma_z() -> Self {
        Mat2([[ONE, ZERO], [ZERO, Complex64::new(-1.0, 0.0)]])
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.0[r][c]
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        Mat2([
            [m[0][0].conj(), m[1][0].conj()],
            [m[0][1].conj(), m[1][1].conj()],
        ])
    }

    pub fn transpose(&self) -> Self {
        let m = &self.0;
        Mat2([[m[0][0], m[1][0]], [m[0][1], m[1][1]]])
    }

    pub fn trace(&self) -> Complex64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn det(&self) -> Complex64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let m = &self.0;
        Mat2([[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]])
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn apply(&self, v: &Vec2) -> Vec2 {
        let m = &self.0;
        [
            m[0][0] * v[0] + m[0][1] * v[1],
            m[1][0] * v[0] + m[1][1] * v[1],
        ]
    }

    /// `‖M − M†‖_max`.
    pub fn hermiticity_defect(&self) -> f64 {
        (*self - self.adjoint()).max_abs()
    }

    /// Matrix exponential.
    ///
    /// Uses `exp(M) = e^{t}(cosh s·I + sinh s/s·(M − t·I))` with `t = tr M / 2`
    /// and `s² = −det(M − t·I)`, which is exact for 2×2 matrices.
    pub fn exp(&self) -> Self {
        let t = self.trace() * 0.5;
        let traceless = *self - Mat2::identity().scale(t);
        let s2 = -traceless.det();
        let s = s2.sqrt();
        let (c, sinc) = if s.norm() < 1e-6 {
            // series: cosh s = 1 + s²/2 + s⁴/24, sinh s / s = 1 + s²/6 + s⁴/120
            (
                ONE + s2 * 0.5 + s2 * s2 / 24.0,
                ONE + s2 / 6.0 + s2 * s2 / 120.0,
            )
        } else {
            (s.cosh(), s.sinh() / s)
        };
        (Mat2::identity().scale(c) + traceless.scale(sinc)).scale(t.exp())
    }

    /// Entries as `[[re, im]; 2]` rows, convenient for JSON output.
    pub fn to_pairs(&self) -> [[[f64; 2]; 2]; 2] {
        let f = |z: Complex64| [z.re, z.im];
        [
            [f(self.0[0][0]), f(self.0[0][1])],
            [f(self.0[1][0]), f(self.0[1][1])],
        ]
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &o.0);
        Mat2([
            [a[0][0] + b[0][0], a[0][1] + b[0][1]],
            [a[1][0] + b[1][0], a[1][1] + b[1][1]],
        ])
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        self + (-o)
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        self.scale(-ONE)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &o.0);
        let mut r = [[ZERO; 2]; 2];
        for (i, row) in r.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Mat2(r)
    }
}

/// Bilinear (non-conjugated) pairing `u · v`.
#[inline]
pub fn bilinear(u: &Vec2, v: &Vec2) -> Complex64 {
    u[0] * v[0] + u[1] * v[1]
}

/// Hermitian inner product `⟨u|v⟩`.
#[inline]
pub fn inner(u: &Vec2, v: &Vec2) -> Complex64 {
    u[0].conj() * v[0] + u[1].conj() * v[1]
}

#[inline]
pub fn norm(v: &Vec2) -> f64 {
    (v[0].norm_sqr() + v[1].norm_sqr()).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &Mat2, b: &Mat2, tol: f64) -> bool {
        (*a - *b).max_abs() <= tol
    }

    #[test]
    fn pauli_algebra() {
        let (x, y, z) = (Mat2::sigma_x(), Mat2::sigma_y(), Mat2::sigma_z());
        assert!(close(&(x * x), &Mat2::identity(), 0.0));
        assert!(close(&(y * y), &Mat2::identity(), 0.0));
        assert!(close(&(x * y), &z.scale(I), 0.0));
    }

    #[test]
    fn exp_of_rotation_generator() {
        // exp(iφσʸ) = cos φ I + i sin φ σʸ
        let phi = 0.7;
        let e = Mat2::sigma_y().scale(Complex64::new(0.0, phi)).exp();
        let want = Mat2::identity().scale(phi.cos().into()) + Mat2::sigma_y().scale(I * phi.sin());
        assert!(close(&e, &want, 1e-15));
    }

    #[test]
    fn exp_matches_taylor_series() {
        let m = Mat2::new(
            Complex64::new(0.3, -0.1),
            Complex64::new(0.2, 0.5),
            Complex64::new(-0.4, 0.1),
            Complex64::new(0.05, 0.2),
        );
        let mut term = Mat2::identity();
        let mut sum = Mat2::identity();
        for k in 1..40 {
            term = (term * m).scale((1.0 / k as f64).into());
            sum = sum + term;
        }
        assert!(close(&m.exp(), &sum, 1e-14));
        // nilpotent branch
        let n = Mat2::new(ZERO, ONE, ZERO, ZERO);
        assert!(close(&n.exp(), &(Mat2::identity() + n), 1e-15));
    }
}
