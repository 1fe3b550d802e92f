//! Periodic collocation grid, spectral fields and Sobolev norms.

use std::fmt;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::linalg::C;
use crate::scalar::Real;

/// `N` equispaced points on the periodic cell `[0, L)`.
///
/// Fourier coefficients are kept in FFT order (`n = 0, 1, …, N/2−1, −N/2, …, −1`)
/// and unnormalised: `ĝ_n = Σ_j g_j e^{−iξ_n x_j}`.
#[derive(Clone)]
pub struct SpectralGrid<T: Real> {
    length: T,
    n: usize,
    xi: Vec<T>,
    mask: Vec<bool>,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

impl<T: Real> fmt::Debug for SpectralGrid<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralGrid")
            .field("length", &self.length)
            .field("n", &self.n)
            .finish()
    }
}

impl<T: Real> SpectralGrid<T> {
    /// `n` must be a power of two, at least 16.
    pub fn new(length: T, n: usize) -> Result<Self> {
        if !(length > T::zero()) || !length.is_finite() {
            return Err(Error::Parameter(format!(
                "grid length L = {length} must be positive"
            )));
        }
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::Parameter(format!(
                "grid size N = {n} must be a power of two >= 16"
            )));
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let k0 = T::lit(2.0) * T::PI() / length;
        let xi = (0..n)
            .map(|j| k0 * T::lit(Self::mode(n, j) as f64))
            .collect();
        // 2/3 rule: keep |n| < N/3
        let mask = (0..n)
            .map(|j| 3 * Self::mode(n, j).unsigned_abs() < n as u64)
            .collect();
        Ok(Self {
            length,
            n,
            xi,
            mask,
            forward,
            inverse,
        })
    }

    fn mode(n: usize, j: usize) -> i64 {
        if j < n / 2 {
            j as i64
        } else {
            j as i64 - n as i64
        }
    }

    pub fn length(&self) -> T {
        self.length
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dx(&self) -> T {
        self.length / T::from_index(self.n)
    }

    /// Integer mode number of FFT slot `j`.
    pub fn mode_number(&self, j: usize) -> i64 {
        Self::mode(self.n, j)
    }

    /// Slot of the Nyquist mode `n = −N/2`.
    pub fn nyquist(&self) -> usize {
        self.n / 2
    }

    /// Wavenumbers in FFT order.
    pub fn xi(&self) -> &[T] {
        &self.xi
    }

    /// Wavenumbers `2πn/L`, `n = −N/2, …, N/2−1`, ascending.
    pub fn xi_values(&self) -> Vec<T> {
        let h = self.n / 2;
        self.xi[h..].iter().chain(&self.xi[..h]).copied().collect()
    }

    /// Collocation points `x_j = jΔx`.
    pub fn points(&self) -> Vec<T> {
        (0..self.n).map(|j| self.dx() * T::from_index(j)).collect()
    }

    /// Dealiasing mask: true for retained modes.
    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn apply_mask(&self, hat: &mut [C<T>]) {
        for (h, &keep) in hat.iter_mut().zip(&self.mask) {
            if !keep {
                *h = C::new(T::zero(), T::zero());
            }
        }
    }

    pub fn forward(&self, values: &[T]) -> Vec<C<T>> {
        let mut buf: Vec<C<T>> = values.iter().map(|&x| C::new(x, T::zero())).collect();
        self.forward.process(&mut buf);
        buf
    }

    /// Unnormalised forward transform of a complex buffer, in place.
    pub fn forward_in_place(&self, buf: &mut [C<T>]) {
        self.forward.process(buf);
    }

    /// Normalised inverse transform of a complex buffer, in place.
    pub fn inverse_in_place(&self, buf: &mut [C<T>]) {
        self.inverse.process(buf);
        let scale = T::one() / T::from_index(self.n);
        for z in buf.iter_mut() {
            *z = *z * scale;
        }
    }

    /// Inverse transform, keeping the real part.
    pub fn inverse(&self, hat: &[C<T>]) -> Vec<T> {
        self.inverse_complex(hat)
            .into_iter()
            .map(|z| z.re)
            .collect()
    }

    /// Inverse transform without discarding the imaginary residue.
    pub fn inverse_complex(&self, hat: &[C<T>]) -> Vec<C<T>> {
        let mut buf = hat.to_vec();
        self.inverse.process(&mut buf);
        let scale = T::one() / T::from_index(self.n);
        for z in buf.iter_mut() {
            *z = *z * scale;
        }
        buf
    }

    /// Coefficients of `∂ₓᵐ g`; odd orders drop the Nyquist mode.
    pub fn derivative_hat(&self, hat: &[C<T>], order: u32) -> Vec<C<T>> {
        let i = C::new(T::zero(), T::one());
        let mut out: Vec<C<T>> = hat
            .iter()
            .zip(&self.xi)
            .map(|(&h, &xi)| h * (i * xi).powu(order))
            .collect();
        if order % 2 == 1 {
            out[self.nyquist()] = C::new(T::zero(), T::zero());
        }
        out
    }

    pub fn derivative(&self, values: &[T], order: u32) -> Vec<T> {
        self.inverse(&self.derivative_hat(&self.forward(values), order))
    }

    /// `‖g‖_s = ((L/N²) Σ (1+ξ²)^s |ĝ|²)^{1/2}`; `s = 0` is the L² norm of the cell.
    pub fn sobolev_norm(&self, hat: &[C<T>], s: T) -> T {
        self.weighted_norm(hat, |xi| (T::one() + xi * xi).powf(s))
    }

    /// `((L/N²) Σ w(ξ) |ĝ|²)^{1/2}`.
    pub fn weighted_norm(&self, hat: &[C<T>], weight: impl Fn(T) -> T) -> T {
        let sum: T = hat
            .iter()
            .zip(&self.xi)
            .map(|(h, &xi)| weight(xi) * h.norm_sqr())
            .sum();
        (sum * self.length / T::from_index(self.n * self.n)).sqrt()
    }

    fn check(&self, found: usize) -> Result<()> {
        if found != self.n {
            return Err(Error::GridMismatch {
                expected: self.n,
                found,
            });
        }
        Ok(())
    }
}

/// Perturbation `(v, u)` stored by its Fourier coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField<T> {
    pub v_hat: Vec<C<T>>,
    pub u_hat: Vec<C<T>>,
}

impl<T: Real> SpectralField<T> {
    pub fn zeros(n: usize) -> Self {
        let z = vec![C::new(T::zero(), T::zero()); n];
        Self {
            v_hat: z.clone(),
            u_hat: z,
        }
    }

    pub fn from_physical(grid: &SpectralGrid<T>, v: &[T], u: &[T]) -> Result<Self> {
        grid.check(v.len())?;
        grid.check(u.len())?;
        Ok(Self {
            v_hat: grid.forward(v),
            u_hat: grid.forward(u),
        })
    }

    pub fn to_physical(&self, grid: &SpectralGrid<T>) -> (Vec<T>, Vec<T>) {
        (grid.inverse(&self.v_hat), grid.inverse(&self.u_hat))
    }

    pub fn len(&self) -> usize {
        self.v_hat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v_hat.is_empty()
    }

    pub fn check_grid(&self, grid: &SpectralGrid<T>) -> Result<()> {
        grid.check(self.v_hat.len())?;
        grid.check(self.u_hat.len())
    }

    /// `‖U‖_k = (‖v‖²_{k+1} + ‖u‖²_k)^{1/2}`.
    pub fn state_norm(&self, grid: &SpectralGrid<T>, k: usize) -> T {
        let k = T::from_index(k);
        let v = grid.sobolev_norm(&self.v_hat, k + T::one());
        let u = grid.sobolev_norm(&self.u_hat, k);
        v.hypot(u)
    }

    /// `(‖∂ₓˡv‖²₁ + ‖∂ₓˡu‖²₀)^{1/2}`.
    pub fn derivative_norm(&self, grid: &SpectralGrid<T>, ell: u32) -> T {
        let v = grid.weighted_norm(&self.v_hat, |xi| {
            xi.powi(2 * ell as i32) * (T::one() + xi * xi)
        });
        let u = grid.weighted_norm(&self.u_hat, |xi| xi.powi(2 * ell as i32));
        v.hypot(u)
    }

    /// Cell means of `v` and `u`.
    pub fn means(&self) -> (T, T) {
        let n = T::from_index(self.len());
        (self.v_hat[0].re / n, self.u_hat[0].re / n)
    }

    /// Share of `Σ|v̂|² + |û|²` held by the modes removed by dealiasing.
    pub fn high_band_fraction(&self, grid: &SpectralGrid<T>) -> T {
        let (mut high, mut total) = (T::zero(), T::zero());
        for ((v, u), &keep) in self.v_hat.iter().zip(&self.u_hat).zip(grid.mask()) {
            let e = v.norm_sqr() + u.norm_sqr();
            total += e;
            if !keep {
                high += e;
            }
        }
        if total > T::zero() {
            high / total
        } else {
            T::zero()
        }
    }

    /// Largest imaginary residue of the inverse transforms.
    pub fn imaginary_residue(&self, grid: &SpectralGrid<T>) -> T {
        grid.inverse_complex(&self.v_hat)
            .iter()
            .chain(grid.inverse_complex(&self.u_hat).iter())
            .fold(T::zero(), |m, z| m.max(z.im.abs()))
    }
}

/// Physical-space perturbation at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationState<T> {
    pub v: Vec<T>,
    pub u: Vec<T>,
    pub t: T,
}

impl<T: Real> PerturbationState<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            v: vec![T::zero(); n],
            u: vec![T::zero(); n],
            t: T::zero(),
        }
    }

    pub fn to_spectral(&self, grid: &SpectralGrid<T>) -> Result<SpectralField<T>> {
        SpectralField::from_physical(grid, &self.v, &self.u)
    }

    pub fn from_spectral(grid: &SpectralGrid<T>, field: &SpectralField<T>, t: T) -> Self {
        let (v, u) = field.to_physical(grid);
        Self { v, u, t }
    }
}
