//! Right-hand sides and the exponential time-differencing integrator.
//!
//! With `V = v̄ + v`, the full flux is
//! `F = −p(V) + (μ(V)/V)u_x − κ(V)v_xx − ½κ'(V)v_x²` and the perturbation obeys
//! `v_t = u_x`, `u_t = F_x`. Splitting off the linear part gives
//! `U_t = ℒU + (0, ∂ₓH₂)` with
//! `H₂ = −(p(V) − p̄ − p̄'v) + (μ(V)/V − μ̄/v̄)u_x − (κ(V) − κ̄)v_xx − ½κ'(V)v_x²`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{phi, CMat2, C};
use crate::linear::ModePropagator;
use crate::model::{EquilibriumState, FluidModel, PhaseInterval};
use crate::nonlinear::grid::{PerturbationState, SpectralField, SpectralGrid};
use crate::scalar::Real;
use crate::symbol::beta;

/// Hard upper bound on the default time step.
pub const DT_CAP: f64 = 0.1;

/// Phase interval the perturbed volume must stay in.
pub fn admissible_interval<T: Real>(
    model: &FluidModel<T>,
    eq: &EquilibriumState<T>,
) -> PhaseInterval<T> {
    eq.phase_index
        .and_then(|j| model.phases.get(j).copied())
        .unwrap_or_else(|| model.domain())
}

/// Physical fields entering the fluxes.
struct Fields<T> {
    v: Vec<T>,
    v_x: Vec<T>,
    v_xx: Vec<T>,
    u_x: Vec<T>,
}

fn fields_from_hat<T: Real>(grid: &SpectralGrid<T>, f: &SpectralField<T>) -> Fields<T> {
    Fields {
        v: grid.inverse(&f.v_hat),
        v_x: grid.inverse(&grid.derivative_hat(&f.v_hat, 1)),
        v_xx: grid.inverse(&grid.derivative_hat(&f.v_hat, 2)),
        u_x: grid.inverse(&grid.derivative_hat(&f.u_hat, 1)),
    }
}

fn check_domain<T: Real>(v_bar: T, v: &[T], phase: &PhaseInterval<T>, t: T) -> Result<()> {
    for &dv in v {
        let total = v_bar + dv;
        if !total.is_finite() {
            return Err(Error::NonFinite { t: t.as_f64() });
        }
        if !phase.contains(total) {
            return Err(Error::DomainViolation {
                t: t.as_f64(),
                v: total.as_f64(),
                lo: phase.lo.as_f64(),
                hi: phase.hi.as_f64(),
            });
        }
    }
    Ok(())
}

fn h2_pointwise<T: Real>(
    model: &FluidModel<T>,
    eq: &EquilibriumState<T>,
    v: T,
    v_x: T,
    v_xx: T,
    u_x: T,
) -> T {
    let big = eq.v_bar + v;
    let p_bar = model.pressure.value(eq.v_bar);
    let pressure = -(model.pressure.value(big) - p_bar + eq.q_bar * v);
    let viscous = (model.viscosity.value(big) / big - eq.damping()) * u_x;
    let capillary = -(model.capillarity.value(big) - eq.kappa_bar) * v_xx
        - T::lit(0.5) * model.capillarity.derivative(big) * v_x * v_x;
    pressure + viscous + capillary
}

fn flux_pointwise<T: Real>(
    model: &FluidModel<T>,
    eq: &EquilibriumState<T>,
    v: T,
    v_x: T,
    v_xx: T,
    u_x: T,
) -> T {
    let big = eq.v_bar + v;
    -model.pressure.value(big) + model.viscosity.value(big) / big * u_x
        - model.capillarity.value(big) * v_xx
        - T::lit(0.5) * model.capillarity.derivative(big) * v_x * v_x
}

/// `H₂` at every collocation point, derivatives taken spectrally.
pub fn h2_eval<T: Real>(
    model: &FluidModel<T>,
    eq: &EquilibriumState<T>,
    grid: &SpectralGrid<T>,
    state: &PerturbationState<T>,
) -> Result<Vec<T>> {
    let f = state.to_spectral(grid)?;
    let fields = fields_from_hat(grid, &f);
    check_domain(
        eq.v_bar,
        &fields.v,
        &admissible_interval(model, eq),
        state.t,
    )?;
    Ok((0..grid.len())
        .map(|j| {
            h2_pointwise(
                model,
                eq,
                fields.v[j],
                fields.v_x[j],
                fields.v_xx[j],
                fields.u_x[j],
            )
        })
        .collect())
}

/// Which algebraic arrangement of the right side to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RhsForm {
    /// `ℒU + (0, ∂ₓH₂)`
    Linearised,
    /// `(u_x, ∂ₓF)` with the exact flux.
    Conservative,
}

/// `(v_t, u_t)` as `ℒU + (0, ∂ₓH₂)`.
pub fn rhs<T: Real>(
    model: &FluidModel<T>,
    eq: &EquilibriumState<T>,
    grid: &SpectralGrid<T>,
    state: &PerturbationState<T>,
) -> Result<(Vec<T>, Vec<T>)> {
    rhs_with(model, eq, grid, state, RhsForm::Linearised)
}

pub fn rhs_with<T: Real>(
    model: &FluidModel<T>,
    eq: &EquilibriumState<T>,
    grid: &SpectralGrid<T>,
    state: &PerturbationState<T>,
    form: RhsForm,
) -> Result<(Vec<T>, Vec<T>)> {
    let f = state.to_spectral(grid)?;
    let fields = fields_from_hat(grid, &f);
    check_domain(
        eq.v_bar,
        &fields.v,
        &admissible_interval(model, eq),
        state.t,
    )?;
    let n = grid.len();
    let v_t = fields.u_x.clone();
    let u_t = match form {
        RhsForm::Linearised => {
            let h2: Vec<T> = (0..n)
                .map(|j| {
                    h2_pointwise(
                        model,
                        eq,
                        fields.v[j],
                        fields.v_x[j],
                        fields.v_xx[j],
                        fields.u_x[j],
                    )
                })
                .collect();
            let h2_x = grid.derivative(&h2, 1);
            let u_xx = grid.inverse(&grid.derivative_hat(&f.u_hat, 2));
            let v_xxx = grid.inverse(&grid.derivative_hat(&f.v_hat, 3));
            (0..n)
                .map(|j| {
                    eq.q_bar * fields.v_x[j] + eq.damping() * u_xx[j] - eq.kappa_bar * v_xxx[j]
                        + h2_x[j]
                })
                .collect()
        }
        RhsForm::Conservative => {
            let flux: Vec<T> = (0..n)
                .map(|j| {
                    flux_pointwise(
                        model,
                        eq,
                        fields.v[j],
                        fields.v_x[j],
                        fields.v_xx[j],
                        fields.u_x[j],
                    )
                })
                .collect();
            grid.derivative(&flux, 1)
        }
    };
    Ok((v_t, u_t))
}

/// `dt = min(cap, ½Δx·min(1, 1/(Δx·max|Im λ|)))` over the grid wavenumbers.
pub fn default_dt<T: Real>(eq: &EquilibriumState<T>, grid: &SpectralGrid<T>) -> T {
    let dx = grid.dx();
    let max_im = grid
        .xi()
        .iter()
        .map(|&xi| crate::symbol::dispersion(eq, xi).lambda_plus.im.abs())
        .fold(T::zero(), T::max);
    let factor = if max_im > T::zero() {
        T::one().min(T::one() / (dx * max_im))
    } else {
        T::one()
    };
    (T::lit(0.5) * dx * factor).min(T::lit(DT_CAP))
}

/// Fourth-order exponential time differencing (Cox–Matthews) with the
/// linear part propagated exactly per mode.
///
/// Coefficients are the matrix functions
/// `E = e^{hM}`, `E₂ = e^{hM/2}`, `Q = (h/2)φ₁(hM/2)`,
/// `f₁ = h(φ₁ − 3φ₂ + 4φ₃)(hM)`, `f₂ = h(φ₂ − 2φ₃)(hM)`, `f₃ = h(4φ₃ − φ₂)(hM)`,
/// evaluated through eigenvalues or, for nearly equal eigenvalues, a contour
/// integral. The nonlinear term is the exact flux minus its linear part,
/// formed in physical space and dealiased by the 2/3 rule. It only enters the
/// `u` equation, so only the second columns of `Q, f₁, f₂, f₃` are kept.
#[derive(Debug, Clone)]
pub struct EtdIntegrator<T: Real> {
    model: FluidModel<T>,
    eq: EquilibriumState<T>,
    grid: SpectralGrid<T>,
    phase: PhaseInterval<T>,
    dt: T,
    e: Vec<CMat2<T>>,
    e2: Vec<CMat2<T>>,
    q: Vec<[C<T>; 2]>,
    f1: Vec<[C<T>; 2]>,
    f2: Vec<[C<T>; 2]>,
    f3: Vec<[C<T>; 2]>,
    /// `ξ` with the Nyquist entry zeroed, for odd derivatives.
    odd: Vec<T>,
    xi2: Vec<T>,
    /// `ξβ(ξ)` and `ξ²μ̄/v̄`: the linear flux in Fourier space.
    lin_v: Vec<T>,
    lin_u: Vec<T>,
}

fn column<T: Real>(m: &CMat2<T>) -> [C<T>; 2] {
    [m.m[0][1], m.m[1][1]]
}

impl<T: Real> EtdIntegrator<T> {
    pub fn new(
        model: &FluidModel<T>,
        eq: &EquilibriumState<T>,
        grid: &SpectralGrid<T>,
        dt: T,
    ) -> Result<Self> {
        if !(dt > T::zero()) || !dt.is_finite() {
            return Err(Error::Parameter(format!(
                "time step dt = {dt} must be positive"
            )));
        }
        let half = T::lit(0.5);
        let nyq = grid.nyquist();
        let per_mode: Vec<[CMat2<T>; 6]> = grid
            .xi()
            .par_iter()
            .enumerate()
            .map(|(j, &xi)| {
                let prop = ModePropagator::new(eq, xi);
                let hm = prop.m.scale_re(dt);
                let hm2 = prop.m.scale_re(dt * half);
                let mut c = [
                    prop.exp(dt),
                    prop.exp(dt * half),
                    hm2.apply_fn(|z| phi(1, z)).scale_re(dt * half),
                    hm.apply_fn(|z| phi(1, z) - phi(2, z) * T::lit(3.0) + phi(3, z) * T::lit(4.0))
                        .scale_re(dt),
                    hm.apply_fn(|z| phi(2, z) - phi(3, z) * T::lit(2.0))
                        .scale_re(dt),
                    hm.apply_fn(|z| phi(3, z) * T::lit(4.0) - phi(2, z))
                        .scale_re(dt),
                ];
                if j == nyq {
                    for m in c.iter_mut() {
                        *m = m.re().to_complex();
                    }
                }
                c
            })
            .collect();
        let xi = grid.xi();
        let mut odd = xi.to_vec();
        odd[nyq] = T::zero();
        let m = eq.damping();
        Ok(Self {
            model: model.clone(),
            eq: *eq,
            grid: grid.clone(),
            phase: admissible_interval(model, eq),
            dt,
            e: per_mode.iter().map(|c| c[0]).collect(),
            e2: per_mode.iter().map(|c| c[1]).collect(),
            q: per_mode.iter().map(|c| column(&c[2])).collect(),
            f1: per_mode.iter().map(|c| column(&c[3])).collect(),
            f2: per_mode.iter().map(|c| column(&c[4])).collect(),
            f3: per_mode.iter().map(|c| column(&c[5])).collect(),
            odd: odd.clone(),
            xi2: xi.iter().map(|&x| x * x).collect(),
            lin_v: odd.iter().map(|&x| x * beta(eq, x)).collect(),
            lin_u: xi.iter().map(|&x| x * x * m).collect(),
        })
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn grid(&self) -> &SpectralGrid<T> {
        &self.grid
    }

    /// Nonlinear part `∂ₓ(F − F_lin)` of the `u` equation, dealiased; the `v`
    /// equation is linear.
    pub fn nonlinear(&self, f: &SpectralField<T>, t: T) -> Result<SpectralField<T>> {
        f.check_grid(&self.grid)?;
        Ok(SpectralField {
            v_hat: vec![C::new(T::zero(), T::zero()); self.grid.len()],
            u_hat: self.nonlinear_u(&f.v_hat, &f.u_hat, t)?,
        })
    }

    /// Two real fields per inverse transform: `(v, v_x)` and `(v_xx, u_x)`.
    fn nonlinear_u(&self, v_hat: &[C<T>], u_hat: &[C<T>], t: T) -> Result<Vec<C<T>>> {
        let n = self.grid.len();
        let zero = C::new(T::zero(), T::zero());
        let mut first = vec![zero; n];
        let mut second = vec![zero; n];
        for j in 0..n {
            let (v, u, k) = (v_hat[j], u_hat[j], self.odd[j]);
            // P + iQ with P = v̂, Q = iξv̂, and P = −ξ²v̂, Q = iξû
            first[j] = v - v * k;
            second[j] = -v * self.xi2[j] - u * k;
        }
        self.grid.inverse_in_place(&mut first);
        self.grid.inverse_in_place(&mut second);
        let v_bar = self.eq.v_bar;
        let mut flux = first;
        for j in 0..n {
            let (v, v_x) = (flux[j].re, flux[j].im);
            let (v_xx, u_x) = (second[j].re, second[j].im);
            let total = v_bar + v;
            if !total.is_finite() || !v_x.is_finite() || !u_x.is_finite() || !v_xx.is_finite() {
                return Err(Error::NonFinite { t: t.as_f64() });
            }
            if !self.phase.contains(total) {
                return Err(Error::DomainViolation {
                    t: t.as_f64(),
                    v: total.as_f64(),
                    lo: self.phase.lo.as_f64(),
                    hi: self.phase.hi.as_f64(),
                });
            }
            flux[j] = C::new(
                flux_pointwise(&self.model, &self.eq, v, v_x, v_xx, u_x),
                T::zero(),
            );
        }
        self.grid.forward_in_place(&mut flux);
        let mask = self.grid.mask();
        for j in 0..n {
            flux[j] = if mask[j] {
                // iξF̂ − (iξβv̂ − ξ²mû)
                let d = flux[j] * self.odd[j] - v_hat[j] * self.lin_v[j];
                C::new(-d.im, d.re) + u_hat[j] * self.lin_u[j]
            } else {
                zero
            };
        }
        Ok(flux)
    }

    /// One step from time `t`.
    pub fn step(&self, u: &SpectralField<T>, t: T) -> Result<SpectralField<T>> {
        u.check_grid(&self.grid)?;
        let h = self.dt;
        let half = T::lit(0.5);
        let n = self.grid.len();
        let two = T::lit(2.0);
        let apply = |m: &CMat2<T>, v: C<T>, w: C<T>| {
            [m.m[0][0] * v + m.m[0][1] * w, m.m[1][0] * v + m.m[1][1] * w]
        };
        let zero = C::new(T::zero(), T::zero());

        let nu = self.nonlinear_u(&u.v_hat, &u.u_hat, t)?;
        let mut a = SpectralField::zeros(n);
        let mut lin_half = vec![[zero; 2]; n];
        for j in 0..n {
            let y = apply(&self.e2[j], u.v_hat[j], u.u_hat[j]);
            lin_half[j] = y;
            a.v_hat[j] = y[0] + self.q[j][0] * nu[j];
            a.u_hat[j] = y[1] + self.q[j][1] * nu[j];
        }
        let na = self.nonlinear_u(&a.v_hat, &a.u_hat, t + h * half)?;
        let mut b = SpectralField::zeros(n);
        for j in 0..n {
            b.v_hat[j] = lin_half[j][0] + self.q[j][0] * na[j];
            b.u_hat[j] = lin_half[j][1] + self.q[j][1] * na[j];
        }
        let nb = self.nonlinear_u(&b.v_hat, &b.u_hat, t + h * half)?;
        let mut c = SpectralField::zeros(n);
        for j in 0..n {
            let y = apply(&self.e2[j], a.v_hat[j], a.u_hat[j]);
            let w = nb[j] * two - nu[j];
            c.v_hat[j] = y[0] + self.q[j][0] * w;
            c.u_hat[j] = y[1] + self.q[j][1] * w;
        }
        let nc = self.nonlinear_u(&c.v_hat, &c.u_hat, t + h)?;
        let mut next = SpectralField::zeros(n);
        for j in 0..n {
            let y = apply(&self.e[j], u.v_hat[j], u.u_hat[j]);
            let nab = (na[j] + nb[j]) * two;
            let (f1, f2, f3) = (self.f1[j], self.f2[j], self.f3[j]);
            next.v_hat[j] = y[0] + f1[0] * nu[j] + f2[0] * nab + f3[0] * nc[j];
            next.u_hat[j] = y[1] + f1[1] * nu[j] + f2[1] * nab + f3[1] * nc[j];
        }
        if next
            .v_hat
            .iter()
            .chain(&next.u_hat)
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite {
                t: (t + h).as_f64(),
            });
        }
        Ok(next)
    }
}

/// One step on physical fields; builds the coefficients on every call.
pub fn step<T: Real>(
    model: &FluidModel<T>,
    eq: &EquilibriumState<T>,
    grid: &SpectralGrid<T>,
    state: &PerturbationState<T>,
    dt: T,
) -> Result<PerturbationState<T>> {
    let integrator = EtdIntegrator::new(model, eq, grid, dt)?;
    let mut f = state.to_spectral(grid)?;
    grid.apply_mask(&mut f.v_hat);
    grid.apply_mask(&mut f.u_hat);
    let next = integrator.step(&f, state.t)?;
    Ok(PerturbationState::from_spectral(grid, &next, state.t + dt))
}
