//! Fourier symbols of the linearised system and their structural checks.
//!
//! Linearising about `(v̄, ū)` gives `U_t = L̄₁U_x + L̄₂U_xx + L̄₃U_xxx` with
//! `L̄₁ = [[0, 1], [q̄, 0]]`, `L̄₂ = diag(0, μ̄/v̄)` and `L̄₃ = −[[0, 0], [κ̄, 0]]`.
//! In Fourier variables this is `Û_t + (iξA(ξ) + B(ξ))Û = 0`, where
//! `A(ξ) = [[0, −1], [−β(ξ), 0]]`, `B(ξ) = ξ²B̄` and `β(ξ) = q̄ + ξ²κ̄`.
//!
//! Genuine coupling is tested on eigenvectors of `A₀A` rather than on
//! eigenvalues of `A`; only the eigenvector reading is meaningful for a
//! kernel-membership test.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{Mat2, C};
use crate::model::EquilibriumState;
use crate::scalar::Real;

/// Angle (radians) below which a vector counts as lying in a subspace.
pub const COUPLING_ANGLE_TOL: f64 = 1e-8;
/// Absolute tolerance of the coercivity certificate in double precision.
pub const COERCIVITY_TOL: f64 = 1e-12;

/// `β(ξ) = q̄ + ξ²κ̄`.
pub fn beta<T: Real>(eq: &EquilibriumState<T>, xi: T) -> T {
    eq.q_bar + xi * xi * eq.kappa_bar
}

pub fn symbol_a<T: Real>(eq: &EquilibriumState<T>, xi: T) -> Mat2<T> {
    Mat2::new(T::zero(), -T::one(), -beta(eq, xi), T::zero())
}

/// `B̄ = diag(0, μ̄/v̄)`.
pub fn b_bar<T: Real>(eq: &EquilibriumState<T>) -> Mat2<T> {
    Mat2::diag(T::zero(), eq.damping())
}

pub fn symbol_b<T: Real>(eq: &EquilibriumState<T>, xi: T) -> Mat2<T> {
    b_bar(eq).scale(xi * xi)
}

/// Member `diag(a, a/β)` of the symmetrizer family.
pub fn symmetrizer<T: Real>(eq: &EquilibriumState<T>, xi: T, a: T) -> Result<Mat2<T>> {
    if !(a > T::zero()) {
        return Err(Error::Parameter(format!(
            "symmetrizer weight a = {a} must be positive"
        )));
    }
    Ok(Mat2::diag(a, a / beta(eq, xi)))
}

/// The choice `a ≡ β`, i.e. `A₀ = diag(β, 1)`.
pub fn canonical_symmetrizer<T: Real>(eq: &EquilibriumState<T>, xi: T) -> Mat2<T> {
    Mat2::diag(beta(eq, xi), T::one())
}

/// `Ã = A₀^{1/2} A A₀^{−1/2} = [[0, −√β], [−√β, 0]]`.
pub fn transformed_a<T: Real>(eq: &EquilibriumState<T>, xi: T) -> Mat2<T> {
    let s = beta(eq, xi).sqrt();
    Mat2::new(T::zero(), -s, -s, T::zero())
}

/// `K̃(ξ) = μ̄/(4√β v̄) · [[0, −1], [1, 0]]`.
pub fn compensating_k<T: Real>(eq: &EquilibriumState<T>, xi: T) -> Mat2<T> {
    let c = eq.mu_bar / (T::lit(4.0) * beta(eq, xi).sqrt() * eq.v_bar);
    Mat2::new(T::zero(), -c, c, T::zero())
}

/// Every symbol at one wavenumber.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolBundle<T> {
    pub xi: T,
    pub beta: T,
    pub a: Mat2<T>,
    pub b: Mat2<T>,
    pub a0: Mat2<T>,
    pub a_tilde: Mat2<T>,
    pub b_tilde: Mat2<T>,
    pub k_tilde: Mat2<T>,
}

impl<T: Real> SymbolBundle<T> {
    pub fn new(eq: &EquilibriumState<T>, xi: T) -> Self {
        Self {
            xi,
            beta: beta(eq, xi),
            a: symbol_a(eq, xi),
            b: symbol_b(eq, xi),
            a0: canonical_symmetrizer(eq, xi),
            a_tilde: transformed_a(eq, xi),
            b_tilde: symbol_b(eq, xi),
            k_tilde: compensating_k(eq, xi),
        }
    }
}

/// Solution space of "`Ā₀L̄ⱼ` symmetric for j = 1, 2, 3" over constant
/// symmetric `Ā₀ = [[a₁, a₂], [a₂, a₃]]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FriedrichsReport {
    /// Row j: coefficients of `(a₁, a₂, a₃)` in the antisymmetric part of `Ā₀L̄ⱼ`.
    pub constraints: [[f64; 3]; 3],
    pub nullity: usize,
    /// Orthonormal basis of the solution space as `(a₁, a₂, a₃)` triples.
    pub basis: Vec<[f64; 3]>,
    /// True when the solution space holds a positive definite matrix.
    pub symmetrizable: bool,
}

/// Looks for a constant (Friedrichs) symmetrizer of `(L̄₁, L̄₂, L̄₃)`.
pub fn friedrichs_infeasibility<T: Real>(eq: &EquilibriumState<T>) -> FriedrichsReport {
    let f = |x: T| x.as_f64();
    let l1 = [[0.0, 1.0], [f(eq.q_bar), 0.0]];
    let l2 = [[0.0, 0.0], [0.0, f(eq.damping())]];
    let l3 = [[0.0, 0.0], [-f(eq.kappa_bar), 0.0]];
    let basis_mats = [
        [[1.0, 0.0], [0.0, 0.0]],
        [[0.0, 1.0], [1.0, 0.0]],
        [[0.0, 0.0], [0.0, 1.0]],
    ];
    let mut constraints = [[0.0; 3]; 3];
    for (row, l) in constraints.iter_mut().zip([l1, l2, l3]) {
        for (slot, e) in row.iter_mut().zip(basis_mats) {
            // (E·L)₀₁ − (E·L)₁₀
            let el01 = e[0][0] * l[0][1] + e[0][1] * l[1][1];
            let el10 = e[1][0] * l[0][0] + e[1][1] * l[1][0];
            *slot = el01 - el10;
        }
    }
    let basis = nullspace3(constraints);
    let symmetrizable = contains_positive_definite(&basis);
    FriedrichsReport {
        constraints,
        nullity: basis.len(),
        basis,
        symmetrizable,
    }
}

/// Orthonormal nullspace basis of a 3×3 matrix by Gaussian elimination with
/// partial pivoting.
fn nullspace3(a: [[f64; 3]; 3]) -> Vec<[f64; 3]> {
    let scale = a
        .iter()
        .flatten()
        .fold(0.0f64, |m, x| m.max(x.abs()))
        .max(1.0);
    let tol = 1e-12 * scale;
    let mut m = a;
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..3 {
        let p = (row..3).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()));
        let Some(p) = p else { break };
        if m[p][col].abs() <= tol {
            continue;
        }
        m.swap(row, p);
        let piv = m[row][col];
        for x in m[row].iter_mut() {
            *x /= piv;
        }
        for i in 0..3 {
            if i != row {
                let factor = m[i][col];
                for j in 0..3 {
                    m[i][j] -= factor * m[row][j];
                }
            }
        }
        pivots.push(col);
        row += 1;
        if row == 3 {
            break;
        }
    }
    let mut basis: Vec<[f64; 3]> = Vec::new();
    for free in (0..3).filter(|c| !pivots.contains(c)) {
        let mut v = [0.0; 3];
        v[free] = 1.0;
        for (r, &pc) in pivots.iter().enumerate() {
            v[pc] = -m[r][free];
        }
        // Gram–Schmidt against earlier vectors
        for b in &basis {
            let d: f64 = (0..3).map(|i| v[i] * b[i]).sum();
            for i in 0..3 {
                v[i] -= d * b[i];
            }
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        basis.push(v.map(|x| x / n));
    }
    basis
}

fn is_definite(a: [f64; 3]) -> bool {
    a[0] != 0.0 && a[0] * a[2] - a[1] * a[1] > 0.0
}

/// Whether some combination of `basis` is definite (a negative definite
/// matrix flips to a positive one).
fn contains_positive_definite(basis: &[[f64; 3]]) -> bool {
    let combine = |w: &[f64]| -> [f64; 3] {
        let mut a = [0.0; 3];
        for (b, &c) in basis.iter().zip(w) {
            for i in 0..3 {
                a[i] += c * b[i];
            }
        }
        a
    };
    match basis.len() {
        0 => false,
        1 => is_definite(basis[0]),
        2 => (0..3600).any(|i| {
            let th = i as f64 * std::f64::consts::PI / 1800.0;
            is_definite(combine(&[th.cos(), th.sin()]))
        }),
        // the whole space contains the identity
        _ => true,
    }
}

/// Outcome of the genuine-coupling test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingReport {
    pub coupled: bool,
    /// Smallest angle found between an eigenvector of `A₀A` and `ker A₀B`.
    pub min_angle: f64,
    /// `(ξ, eigenvector)` lying in the kernel, when coupling fails.
    pub witness: Option<(f64, [f64; 2])>,
    /// Eigenvalues of `A₀A` at the witness (or at the last sample), `±β`
    /// for `a ≡ β`.
    pub a0a_eigenvalues: [f64; 2],
    /// Characteristic speeds `±β^{1/2}` (eigenvalues of `A`, equivalently
    /// of `A₀A` relative to `A₀`) are distinct at every sample.
    pub constant_multiplicity: bool,
}

impl CouplingReport {
    /// Converts a failed check into the corresponding error.
    pub fn into_result(self) -> Result<Self> {
        match self.witness {
            Some((xi, vector)) if !self.coupled => Err(Error::NotGenuinelyCoupled { xi, vector }),
            _ => Ok(self),
        }
    }
}

/// Distance-derived angle between a unit vector and the span of `basis`.
fn angle_to_span<T: Real>(v: [T; 2], basis: &[[T; 2]]) -> T {
    let mut r = v;
    for b in basis {
        let d = r[0] * b[0] + r[1] * b[1];
        r = [r[0] - d * b[0], r[1] - d * b[1]];
    }
    r[0].hypot(r[1]).min(T::one()).asin()
}

/// Kernel of a symmetric positive semi-definite matrix, as orthonormal vectors.
fn psd_kernel<T: Real>(m: &Mat2<T>) -> Vec<[T; 2]> {
    let (vals, vecs) = m.symmetric_eigen();
    let tol = T::lit(1e-12) * m.max_abs().max(T::min_positive_value());
    if m.max_abs() == T::zero() {
        return vec![[T::one(), T::zero()], [T::zero(), T::one()]];
    }
    vals.iter()
        .zip(vecs)
        .filter(|(v, _)| v.abs() <= tol)
        .map(|(_, e)| e)
        .collect()
}

/// Checks that no eigenvector of `A₀(ξ)A(ξ)` lies in `ker A₀(ξ)B(ξ)` for
/// every nonzero sample, with `A₀ = diag(β, 1)`.
pub fn genuine_coupling_check<T: Real>(
    eq: &EquilibriumState<T>,
    xi_samples: &[T],
) -> Result<CouplingReport> {
    if xi_samples.is_empty() {
        return Err(Error::EmptySamples("genuine coupling"));
    }
    if let Some(&xi) = xi_samples.iter().find(|x| **x == T::zero()) {
        return Err(Error::Parameter(format!(
            "xi = {xi} sample must be nonzero"
        )));
    }
    let tol = T::lit(COUPLING_ANGLE_TOL);
    let mut min_angle = T::infinity();
    let mut eigen_last = [T::zero(); 2];
    let mut constant_multiplicity = true;
    for &xi in xi_samples {
        let a0 = canonical_symmetrizer(eq, xi);
        let a0a = a0 * symbol_a(eq, xi);
        let a0b = a0 * symbol_b(eq, xi);
        let (vals, vecs) = a0a.symmetric_part().symmetric_eigen();
        eigen_last = vals;
        let speed = beta(eq, xi).sqrt();
        if !(speed > T::zero()) {
            constant_multiplicity = false;
        }
        let kernel = psd_kernel(&a0b.symmetric_part());
        for e in vecs {
            let angle = if kernel.is_empty() {
                T::FRAC_PI_2()
            } else {
                angle_to_span(e, &kernel)
            };
            min_angle = min_angle.min(angle);
            if angle <= tol {
                return Ok(CouplingReport {
                    coupled: false,
                    min_angle: angle.as_f64(),
                    witness: Some((xi.as_f64(), [e[0].as_f64(), e[1].as_f64()])),
                    a0a_eigenvalues: [vals[0].as_f64(), vals[1].as_f64()],
                    constant_multiplicity,
                });
            }
        }
    }
    Ok(CouplingReport {
        coupled: true,
        min_angle: min_angle.as_f64(),
        witness: None,
        a0a_eigenvalues: [eigen_last[0].as_f64(), eigen_last[1].as_f64()],
        constant_multiplicity,
    })
}

/// Result of the compensating-matrix coercivity check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoercivityCertificate<T> {
    /// `θ̄ = μ̄/(4v̄)`.
    pub theta_bar: T,
    /// `[K̃Ã]ˢ + B̄`, identical at every sample.
    pub matrix: Mat2<T>,
    /// Smallest eigenvalue of `[K̃Ã]ˢ + B̄ − θ̄I` over the samples.
    pub min_margin: T,
    /// Largest elementwise deviation from `θ̄ · diag(1, 3)`.
    pub max_deviation: T,
}

/// Verifies `[K̃(ξ)Ã(ξ)]ˢ + B̄ = (μ̄/4v̄)·diag(1, 3) ≥ θ̄I` at every sample.
pub fn verify_coercivity<T: Real>(
    eq: &EquilibriumState<T>,
    xi_samples: &[T],
) -> Result<CoercivityCertificate<T>> {
    if xi_samples.is_empty() {
        return Err(Error::EmptySamples("coercivity"));
    }
    let theta = eq.mu_bar / (T::lit(4.0) * eq.v_bar);
    let expected = Mat2::diag(theta, T::lit(3.0) * theta);
    let tol = T::lit(COERCIVITY_TOL).max(T::epsilon() * T::lit(64.0)) * T::one().max(theta);
    let mut min_margin = T::infinity();
    let mut max_deviation = T::zero();
    let mut matrix = expected;
    for &xi in xi_samples {
        let m = (compensating_k(eq, xi) * transformed_a(eq, xi)).symmetric_part() + b_bar(eq);
        let dev = m.max_abs_diff(&expected);
        let margin = (m - Mat2::identity().scale(theta)).symmetric_eigen().0[0];
        if dev > tol || margin < -tol {
            return Err(Error::Structural(format!(
                "[K A]^s + B at xi = {xi} deviates from (mu/4v) diag(1,3) by {dev:e} (margin {margin:e})"
            )));
        }
        max_deviation = max_deviation.max(dev);
        min_margin = min_margin.min(margin);
        matrix = m;
    }
    Ok(CoercivityCertificate {
        theta_bar: theta,
        matrix,
        min_margin,
        max_deviation,
    })
}

/// Eigenvalues of `M(iξ) = −(iξA(ξ) + ξ²B̄)` at one wavenumber.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionPoint<T> {
    pub xi: T,
    /// Root with the larger imaginary part (larger real part on ties).
    pub lambda_plus: C<T>,
    pub lambda_minus: C<T>,
}

impl<T: Real> DispersionPoint<T> {
    /// Relative residuals of `λ₊+λ₋ = −ξ²μ̄/v̄` and `λ₊λ₋ = ξ²β`.
    pub fn identity_residuals(&self, eq: &EquilibriumState<T>) -> (T, T) {
        let x2 = self.xi * self.xi;
        let tr = -x2 * eq.damping();
        let det = x2 * beta(eq, self.xi);
        let rel = |got: C<T>, want: T| {
            let err = (got - C::new(want, T::zero())).norm();
            if want == T::zero() {
                err
            } else {
                err / want.abs()
            }
        };
        (
            rel(self.lambda_plus + self.lambda_minus, tr),
            rel(self.lambda_plus * self.lambda_minus, det),
        )
    }

    pub fn max_re(&self) -> T {
        self.lambda_plus.re.max(self.lambda_minus.re)
    }
}

/// Roots of `λ² + ξ²(μ̄/v̄)λ + ξ²β(ξ) = 0`.
///
/// Complex pairs are returned as `−b/2 ± i√(4c − b²)/2`; real pairs use the
/// cancellation-free form `q = −(b + √(b² − 4c))/2`, `c/q`.
pub fn dispersion<T: Real>(eq: &EquilibriumState<T>, xi: T) -> DispersionPoint<T> {
    let x2 = xi * xi;
    let b = x2 * eq.damping();
    let c = x2 * beta(eq, xi);
    let half = T::lit(0.5);
    let disc = b * b - T::lit(4.0) * c;
    let (lambda_plus, lambda_minus) = if disc < T::zero() {
        let w = half * (-disc).sqrt();
        (C::new(-half * b, w), C::new(-half * b, -w))
    } else {
        let q = -half * (b + disc.sqrt());
        if q == T::zero() {
            (C::new(T::zero(), T::zero()), C::new(T::zero(), T::zero()))
        } else {
            let r = c / q;
            (C::new(q.max(r), T::zero()), C::new(q.min(r), T::zero()))
        }
    };
    DispersionPoint {
        xi,
        lambda_plus,
        lambda_minus,
    }
}

/// Dispersion relation over a grid, in grid order.
pub fn dispersion_scan<T: Real>(
    eq: &EquilibriumState<T>,
    xi_grid: &[T],
) -> Vec<DispersionPoint<T>> {
    xi_grid.par_iter().map(|&xi| dispersion(eq, xi)).collect()
}

/// Outcome of [`strict_dissipativity_scan`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DissipativityScan<T> {
    pub max_re_lambda: T,
    pub argmax_xi: T,
    /// Largest `c` with `Re λ(ξ) ≤ −c ξ²/(1+ξ²)` on the grid.
    pub c: T,
    pub argmin_xi: T,
}

/// Confirms `Re λ(ξ) < 0` on a grid excluding zero and fits the constant of
/// the envelope `−cξ²/(1+ξ²)`.
pub fn strict_dissipativity_scan<T: Real>(
    eq: &EquilibriumState<T>,
    xi_grid: &[T],
) -> Result<DissipativityScan<T>> {
    if xi_grid.is_empty() {
        return Err(Error::EmptySamples("dissipativity scan"));
    }
    if xi_grid.iter().any(|x| *x == T::zero()) {
        return Err(Error::Parameter(
            "dissipativity grid must exclude xi = 0".into(),
        ));
    }
    let points = dispersion_scan(eq, xi_grid);
    let mut scan = DissipativityScan {
        max_re_lambda: T::neg_infinity(),
        argmax_xi: T::nan(),
        c: T::infinity(),
        argmin_xi: T::nan(),
    };
    for p in &points {
        let re = p.max_re();
        if !(re < T::zero()) {
            return Err(Error::NotStrictlyDissipative {
                xi: p.xi.as_f64(),
                re_lambda: re.as_f64(),
            });
        }
        if re > scan.max_re_lambda {
            scan.max_re_lambda = re;
            scan.argmax_xi = p.xi;
        }
        let x2 = p.xi * p.xi;
        let c = -re * (T::one() + x2) / x2;
        if c < scan.c {
            scan.c = c;
            scan.argmin_xi = p.xi;
        }
    }
    Ok(scan)
}

/// 2000 wavenumbers symmetric about zero: ±(700 log-spaced magnitudes on
/// `[10⁻³, 10³]` merged with 300 uniform ones on `[0.1, 30]`), ascending.
pub fn default_xi_grid<T: Real>() -> Vec<T> {
    mixed_xi_grid(
        T::lit(1e-3),
        T::lit(1e3),
        700,
        (T::lit(0.1), T::lit(30.0)),
        300,
    )
}

/// Symmetric grid of `2(n_log + n_lin)` nonzero wavenumbers.
pub fn mixed_xi_grid<T: Real>(lo: T, hi: T, n_log: usize, linear: (T, T), n_lin: usize) -> Vec<T> {
    let mut mags: Vec<T> = Vec::with_capacity(n_log + n_lin);
    let (la, lb) = (lo.ln(), hi.ln());
    for i in 0..n_log {
        let s = T::from_index(i) / T::from_index(n_log.max(2) - 1);
        mags.push((la + (lb - la) * s).exp());
    }
    for i in 0..n_lin {
        let s = T::from_index(i) / T::from_index(n_lin.max(2) - 1);
        mags.push(linear.0 + (linear.1 - linear.0) * s);
    }
    mags.sort_by(|a, b| a.partial_cmp(b).expect("finite grid"));
    let mut grid: Vec<T> = mags.iter().rev().map(|&m| -m).collect();
    grid.extend(mags);
    grid
}

/// Uniform symmetric grid on `[−hi, hi] \ {0}` with `n` points (`n` even).
pub fn uniform_xi_grid<T: Real>(hi: T, n: usize) -> Vec<T> {
    let half = n / 2;
    let mut mags: Vec<T> = (1..=half)
        .map(|i| hi * T::from_index(i) / T::from_index(half))
        .collect();
    let mut grid: Vec<T> = mags.iter().rev().map(|&m| -m).collect();
    grid.append(&mut mags);
    grid
}
