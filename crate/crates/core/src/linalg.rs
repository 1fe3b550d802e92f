//! Closed-form 2×2 real and complex matrix algebra.
//!
//! Everything in this crate lives in two dimensions, so eigenvalues come from
//! the quadratic formula and matrix functions from Sylvester's formula rather
//! than from a general dense solver.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex;

use crate::scalar::Real;

pub type C<T> = Complex<T>;
pub type CVec2<T> = [C<T>; 2];

/// Real 2×2 matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2<T> {
    pub m: [[T; 2]; 2],
}

impl<T: Real> Mat2<T> {
    pub fn new(a: T, b: T, c: T, d: T) -> Self {
        Self {
            m: [[a, b], [c, d]],
        }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero(), T::zero())
    }

    pub fn identity() -> Self {
        Self::diag(T::one(), T::one())
    }

    pub fn diag(a: T, d: T) -> Self {
        Self::new(a, T::zero(), T::zero(), d)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.m[i][j]
    }

    pub fn transpose(&self) -> Self {
        Self::new(self.m[0][0], self.m[1][0], self.m[0][1], self.m[1][1])
    }

    pub fn scale(&self, s: T) -> Self {
        self.map(|x| x * s)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self::new(
            f(self.m[0][0]),
            f(self.m[0][1]),
            f(self.m[1][0]),
            f(self.m[1][1]),
        )
    }

    /// `[M]^s = (M + Mᵀ) / 2`.
    pub fn symmetric_part(&self) -> Self {
        (*self + self.transpose()).scale(T::lit(0.5))
    }

    pub fn trace(&self) -> T {
        self.m[0][0] + self.m[1][1]
    }

    pub fn det(&self) -> T {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> T {
        self.m
            .iter()
            .flatten()
            .fold(T::zero(), |acc, x| acc.max(x.abs()))
    }

    /// Largest entrywise deviation from `other`.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        (*self - *other).max_abs()
    }

    pub fn is_symmetric(&self, tol: T) -> bool {
        (self.m[0][1] - self.m[1][0]).abs() <= tol
    }

    pub fn is_skew(&self, tol: T) -> bool {
        (self.m[0][1] + self.m[1][0]).abs() <= tol
            && self.m[0][0].abs() <= tol
            && self.m[1][1].abs() <= tol
    }

    /// Spectral (operator 2-) norm.
    pub fn op_norm(&self) -> T {
        self.to_complex().op_norm()
    }

    /// Eigen-decomposition of a symmetric matrix: eigenvalues ascending and
    /// the corresponding orthonormal eigenvectors.
    pub fn symmetric_eigen(&self) -> ([T; 2], [[T; 2]; 2]) {
        let a = self.m[0][0];
        let d = self.m[1][1];
        let b = T::lit(0.5) * (self.m[0][1] + self.m[1][0]);
        let half_sum = T::lit(0.5) * (a + d);
        let half_diff = T::lit(0.5) * (a - d);
        let r = half_diff.hypot(b);
        let lo = half_sum - r;
        let hi = half_sum + r;
        // Rotation angle of the eigenbasis.
        let theta = T::lit(0.5) * b.atan2(half_diff);
        let (s, c) = theta.sin_cos();
        // (c, s) belongs to `hi`, (-s, c) to `lo`.
        ([lo, hi], [[-s, c], [c, s]])
    }

    pub fn mul_vec(&self, x: [T; 2]) -> [T; 2] {
        [
            self.m[0][0] * x[0] + self.m[0][1] * x[1],
            self.m[1][0] * x[0] + self.m[1][1] * x[1],
        ]
    }

    pub fn to_complex(&self) -> CMat2<T> {
        CMat2 {
            m: [
                [
                    C::new(self.m[0][0], T::zero()),
                    C::new(self.m[0][1], T::zero()),
                ],
                [
                    C::new(self.m[1][0], T::zero()),
                    C::new(self.m[1][1], T::zero()),
                ],
            ],
        }
    }
}

impl<T: Real> Add for Mat2<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(
            self.m[0][0] + o.m[0][0],
            self.m[0][1] + o.m[0][1],
            self.m[1][0] + o.m[1][0],
            self.m[1][1] + o.m[1][1],
        )
    }
}

impl<T: Real> Sub for Mat2<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + o.scale(-T::one())
    }
}

impl<T: Real> Mul for Mat2<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let a = &self.m;
        let b = &o.m;
        Self::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

/// Complex 2×2 matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CMat2<T> {
    pub m: [[C<T>; 2]; 2],
}

impl<T: Real> CMat2<T> {
    pub fn new(a: C<T>, b: C<T>, c: C<T>, d: C<T>) -> Self {
        Self {
            m: [[a, b], [c, d]],
        }
    }

    pub fn zero() -> Self {
        let z = C::new(T::zero(), T::zero());
        Self::new(z, z, z, z)
    }

    pub fn identity() -> Self {
        Self::scalar(C::new(T::one(), T::zero()))
    }

    pub fn scalar(s: C<T>) -> Self {
        let z = C::new(T::zero(), T::zero());
        Self::new(s, z, z, s)
    }

    pub fn scale(&self, s: C<T>) -> Self {
        Self::new(
            self.m[0][0] * s,
            self.m[0][1] * s,
            self.m[1][0] * s,
            self.m[1][1] * s,
        )
    }

    pub fn scale_re(&self, s: T) -> Self {
        self.scale(C::new(s, T::zero()))
    }

    pub fn trace(&self) -> C<T> {
        self.m[0][0] + self.m[1][1]
    }

    pub fn det(&self) -> C<T> {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn adjoint(&self) -> Self {
        Self::new(
            self.m[0][0].conj(),
            self.m[1][0].conj(),
            self.m[0][1].conj(),
            self.m[1][1].conj(),
        )
    }

    pub fn conj(&self) -> Self {
        Self::new(
            self.m[0][0].conj(),
            self.m[0][1].conj(),
            self.m[1][0].conj(),
            self.m[1][1].conj(),
        )
    }

    /// Entrywise real part.
    pub fn re(&self) -> Mat2<T> {
        Mat2::new(
            self.m[0][0].re,
            self.m[0][1].re,
            self.m[1][0].re,
            self.m[1][1].re,
        )
    }

    pub fn max_abs(&self) -> T {
        self.m
            .iter()
            .flatten()
            .fold(T::zero(), |acc, x| acc.max(x.norm()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        (*self - *other).max_abs()
    }

    pub fn mul_vec(&self, x: &CVec2<T>) -> CVec2<T> {
        [
            self.m[0][0] * x[0] + self.m[0][1] * x[1],
            self.m[1][0] * x[0] + self.m[1][1] * x[1],
        ]
    }

    /// Conjugation by the real diagonal matrix `diag(s0, s1)`:
    /// `diag(s) · M · diag(s)⁻¹`.
    pub fn diag_similarity(&self, s0: T, s1: T) -> Self {
        let r = s0 / s1;
        Self::new(
            self.m[0][0],
            self.m[0][1] * r,
            self.m[1][0] / r,
            self.m[1][1],
        )
    }

    /// Both eigenvalues, via the numerically stable quadratic formula.
    pub fn eigenvalues(&self) -> (C<T>, C<T>) {
        quadratic_roots(-self.trace(), self.det())
    }

    /// Largest singular value.
    pub fn op_norm(&self) -> T {
        // Eigenvalues of the Hermitian matrix MᴴM in closed form.
        let g = self.adjoint() * *self;
        let a = g.m[0][0].re;
        let d = g.m[1][1].re;
        let b = g.m[0][1].norm();
        let half_sum = T::lit(0.5) * (a + d);
        let r = (T::lit(0.5) * (a - d)).hypot(b);
        (half_sum + r).max(T::zero()).sqrt()
    }

    /// Inverse; `None` when singular to working precision.
    pub fn inverse(&self) -> Option<Self> {
        let det = self.det();
        if det.norm() == T::zero() || !det.norm().is_finite() {
            return None;
        }
        let inv = C::new(T::one(), T::zero()) / det;
        Some(Self::new(self.m[1][1], -self.m[0][1], -self.m[1][0], self.m[0][0]).scale(inv))
    }

    /// Applies an entire scalar function to the matrix.
    ///
    /// Well separated eigenvalues use Sylvester's formula; nearly coincident
    /// ones use the Cauchy integral over a circle enclosing both, which stays
    /// accurate through the confluent (Jordan) limit.
    pub fn apply_fn(&self, f: impl Fn(C<T>) -> C<T>) -> Self {
        let (l1, l2) = self.eigenvalues();
        let gap = (l1 - l2).norm();
        if gap >= T::lit(0.5) {
            let id = Self::identity();
            let a = (*self - id.scale(l2)).scale(f(l1));
            let b = (*self - id.scale(l1)).scale(f(l2));
            return (a - b).scale(C::new(T::one(), T::zero()) / (l1 - l2));
        }
        let center = (l1 + l2) * T::lit(0.5);
        let radius = T::one();
        let nodes = 32usize;
        let mut acc = Self::zero();
        for j in 0..nodes {
            let theta = T::TAU() * (T::from_index(j) + T::lit(0.5)) / T::from_index(nodes);
            let w = C::new(theta.cos(), theta.sin()) * radius;
            let z = center + w;
            let resolvent = (Self::scalar(z) - *self)
                .inverse()
                .expect("contour avoids the spectrum");
            acc = acc + resolvent.scale(f(z) * w);
        }
        acc.scale_re(T::one() / T::from_index(nodes))
    }
}

impl<T: Real> Add for CMat2<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(
            self.m[0][0] + o.m[0][0],
            self.m[0][1] + o.m[0][1],
            self.m[1][0] + o.m[1][0],
            self.m[1][1] + o.m[1][1],
        )
    }
}

impl<T: Real> Sub for CMat2<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(
            self.m[0][0] - o.m[0][0],
            self.m[0][1] - o.m[0][1],
            self.m[1][0] - o.m[1][0],
            self.m[1][1] - o.m[1][1],
        )
    }
}

impl<T: Real> Neg for CMat2<T> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale_re(-T::one())
    }
}

impl<T: Real> Mul for CMat2<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let a = &self.m;
        let b = &o.m;
        Self::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

/// Roots of `z² + b z + c = 0`, avoiding cancellation between `-b` and the
/// square root of the discriminant.
pub fn quadratic_roots<T: Real>(b: C<T>, c: C<T>) -> (C<T>, C<T>) {
    let disc = (b * b - c * T::lit(4.0)).sqrt();
    // Pick the sign that adds magnitudes.
    let sign = if (b.conj() * disc).re >= T::zero() {
        T::one()
    } else {
        -T::one()
    };
    let q = (b + disc * sign) * T::lit(-0.5);
    if q.norm() == T::zero() {
        let zero = C::new(T::zero(), T::zero());
        return (zero, zero);
    }
    (q, c / q)
}

/// Hermitian inner product `⟨x, y⟩ = Σ conj(x_i) y_i`.
pub fn inner<T: Real>(x: &CVec2<T>, y: &CVec2<T>) -> C<T> {
    x[0].conj() * y[0] + x[1].conj() * y[1]
}

pub fn norm_sqr<T: Real>(x: &CVec2<T>) -> T {
    x[0].norm_sqr() + x[1].norm_sqr()
}

/// `sinh(z)/z`, with a Taylor expansion near the removable singularity.
pub fn sinhc<T: Real>(z: C<T>) -> C<T> {
    if z.norm() < T::lit(0.1) {
        let z2 = z * z;
        // 1 + z²/3! + z⁴/5! + z⁶/7! + z⁸/9!
        let mut acc = C::new(T::one() / T::lit(362880.0), T::zero());
        for d in [5040.0, 120.0, 6.0, 1.0] {
            acc = acc * z2 + C::new(T::one() / T::lit(d), T::zero());
        }
        acc
    } else {
        z.sinh() / z
    }
}

/// `φ_k(z) = Σ_n zⁿ/(n+k)!`, the exponential integrator functions
/// (`φ_0 = e^z`, `φ_1 = (e^z − 1)/z`, ...). Taylor series for `|z| < 1`,
/// closed form otherwise.
pub fn phi<T: Real>(k: u32, z: C<T>) -> C<T> {
    let one = C::new(T::one(), T::zero());
    if z.norm() < T::one() {
        // Horner on Σ_{n=0}^{N} zⁿ/(n+k)!
        let terms = 24u32;
        let mut acc = C::new(T::zero(), T::zero());
        for n in (0..=terms).rev() {
            let mut fact = T::one();
            for j in 1..=(n + k) {
                fact *= T::lit(j as f64);
            }
            acc = acc * z + one / fact;
        }
        return acc;
    }
    let mut value = z.exp();
    let mut factorial = T::one();
    let mut power = one;
    for j in 0..k {
        if j > 0 {
            factorial *= T::lit(j as f64);
        }
        value = value - power / factorial;
        power = power * z;
    }
    value / power
}
