//! Exact evolution of the linearised system, mode by mode.
//!
//! Each Fourier mode obeys `Û_t = M(iξ)Û` with
//! `M(iξ) = −(iξA(ξ) + ξ²B̄) = [[0, iξ], [iξβ, −ξ²μ̄/v̄]]`.
//! In the variable `V̂ = A₀^{1/2}Û` (with `A₀ = diag(β, 1)`) the system reads
//! `V̂_t = −(iξÃ + ξ²B̄)V̂`, which is where the energy functional lives.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit::{decay_exponent, log_times};
use crate::linalg::{inner, norm_sqr, sinhc, CMat2, CVec2, C};
use crate::model::EquilibriumState;
use crate::nonlinear::grid::{SpectralField, SpectralGrid};
use crate::scalar::Real;
use crate::symbol::{
    b_bar, beta, compensating_k, dispersion, strict_dissipativity_scan, transformed_a,
};

/// Relative eigenvalue gap below which the propagator uses the confluent form.
pub const JORDAN_GAP: f64 = 1e-8;
/// Residual allowed in the energy inequality, relative to `|V̂|²`.
pub const ENERGY_TOL: f64 = 1e-12;
/// Equivalence constant between `ℰ` and `|V̂|²`.
pub const EQUIVALENCE_C1: f64 = 2.0;
/// Largest admissible envelope amplitude.
pub const ENVELOPE_C_MAX: f64 = 100.0;
/// Smallest admissible envelope rate.
pub const ENVELOPE_K_MIN: f64 = 1e-3;
/// Rungs of the descending `k` ladder.
pub const ENVELOPE_LADDER: usize = 20;
/// Default fit window for linear decay slopes.
pub const LINEAR_FIT_WINDOW: (f64, f64) = (1e2, 1e4);
/// Default number of samples in the linear fit window.
pub const LINEAR_FIT_SAMPLES: usize = 40;

/// `M(iξ)` and its spectrum, ready for `e^{tM}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModePropagator<T> {
    pub xi: T,
    pub m: CMat2<T>,
    pub lambda: (C<T>, C<T>),
    /// Eigenvalues coincide to within [`JORDAN_GAP`].
    pub confluent: bool,
}

impl<T: Real> ModePropagator<T> {
    pub fn new(eq: &EquilibriumState<T>, xi: T) -> Self {
        let zero = T::zero();
        let m = CMat2::new(
            C::new(zero, zero),
            C::new(zero, xi),
            C::new(zero, xi * beta(eq, xi)),
            C::new(-xi * xi * eq.damping(), zero),
        );
        let d = dispersion(eq, xi);
        let gap = (d.lambda_plus - d.lambda_minus).norm();
        let confluent = gap < T::lit(JORDAN_GAP) * T::one().max(d.lambda_plus.norm());
        Self {
            xi,
            m,
            lambda: (d.lambda_plus, d.lambda_minus),
            confluent,
        }
    }

    /// `e^{tM(iξ)}`.
    ///
    /// With `σ = (λ₁+λ₂)/2`, `δ = (λ₁−λ₂)/2` and `N = M − σI`,
    /// `e^{tM} = e^{σt}(cosh(δt) I + t·sinhc(δt) N)`, which reduces to
    /// `e^{λt}(I + tN)` for a double eigenvalue. Once `|δt| ≥ 1` the
    /// Sylvester form with separate exponentials is used instead.
    pub fn exp(&self, t: T) -> CMat2<T> {
        let (l1, l2) = self.lambda;
        let half = T::lit(0.5);
        let sigma = (l1 + l2) * half;
        let delta = (l1 - l2) * half;
        let dt = delta * t;
        if self.confluent || dt.norm() < T::one() {
            let n = self.m - CMat2::scalar(sigma);
            let es = (sigma * t).exp();
            (CMat2::scalar(dt.cosh()) + n.scale(sinhc(dt) * t)).scale(es)
        } else {
            let p1 = self.m - CMat2::scalar(l2);
            let p2 = self.m - CMat2::scalar(l1);
            (p1.scale((l1 * t).exp()) - p2.scale((l2 * t).exp())).scale((l1 - l2).inv())
        }
    }

    /// `e^{tM}` in the metric of `V̂ = A₀^{1/2}Û`.
    pub fn exp_v_metric(&self, eq: &EquilibriumState<T>, t: T) -> CMat2<T> {
        self.exp(t)
            .diag_similarity(beta(eq, self.xi).sqrt(), T::one())
    }
}

pub fn mode_propagator<T: Real>(eq: &EquilibriumState<T>, xi: T) -> ModePropagator<T> {
    ModePropagator::new(eq, xi)
}

/// Generator `−(iξÃ + ξ²B̄)` of the `V̂` system.
pub fn v_generator<T: Real>(eq: &EquilibriumState<T>, xi: T) -> CMat2<T> {
    let i = C::new(T::zero(), T::one());
    -(transformed_a(eq, xi).to_complex().scale(i * xi) + b_bar(eq).scale(xi * xi).to_complex())
}

/// `δξ/(1+ξ²)`.
fn mixing<T: Real>(xi: T, delta: T) -> T {
    delta * xi / (T::one() + xi * xi)
}

/// `iK̃(ξ)`, a Hermitian matrix.
fn i_k<T: Real>(eq: &EquilibriumState<T>, xi: T) -> CMat2<T> {
    compensating_k(eq, xi)
        .to_complex()
        .scale(C::new(T::zero(), T::one()))
}

fn check_delta<T: Real>(delta: T) -> Result<()> {
    if !(delta > T::zero() && delta < T::one()) {
        return Err(Error::Parameter(format!(
            "delta = {delta} must lie in (0, 1)"
        )));
    }
    Ok(())
}

/// `ℰ = |V̂|² − (δξ/(1+ξ²))⟨V̂, iK̃V̂⟩`, real because `iK̃` is Hermitian.
pub fn energy_functional<T: Real>(
    eq: &EquilibriumState<T>,
    xi: T,
    v: &CVec2<T>,
    delta: T,
) -> Result<T> {
    check_delta(delta)?;
    let cross = inner(v, &i_k(eq, xi).mul_vec(v));
    Ok(norm_sqr(v) - mixing(xi, delta) * cross.re)
}

/// Hermitian matrices `(H, D)` with `ℰ = V̂*HV̂` and `dℰ/dt = V̂*DV̂` along
/// `V̂_t = GV̂`: `H = I − εiK̃`, `D = G* + G − ε(G*iK̃ + iK̃G)`.
///
/// The skew part of `G` cancels exactly in `G* + G`, so `D` stays accurate
/// at large `|ξ|`.
pub fn energy_forms<T: Real>(eq: &EquilibriumState<T>, xi: T, delta: T) -> (CMat2<T>, CMat2<T>) {
    let eps = mixing(xi, delta);
    let j = i_k(eq, xi);
    let g = v_generator(eq, xi);
    let gs = g.adjoint();
    let h = CMat2::identity() - j.scale_re(eps);
    let d = (gs + g) - (gs * j + j * g).scale_re(eps);
    (hermitize(h), hermitize(d))
}

fn hermitize<T: Real>(m: CMat2<T>) -> CMat2<T> {
    (m + m.adjoint()).scale_re(T::lit(0.5))
}

fn quadratic_form<T: Real>(m: &CMat2<T>, v: &CVec2<T>) -> T {
    let off = v[0].conj() * m.m[0][1] * v[1];
    m.m[0][0].re * v[0].norm_sqr() + m.m[1][1].re * v[1].norm_sqr() + off.re + off.re
}

/// `dℰ/dt` at `V̂`, from `V̂_t = −(iξÃ + ξ²B̄)V̂`.
pub fn energy_derivative<T: Real>(
    eq: &EquilibriumState<T>,
    xi: T,
    v: &CVec2<T>,
    delta: T,
) -> Result<T> {
    check_delta(delta)?;
    Ok(quadratic_form(&energy_forms(eq, xi, delta).1, v))
}

/// Smallest generalized eigenvalue of the Hermitian pencil `(A, B)`, `B > 0`.
fn pencil_min<T: Real>(a: &CMat2<T>, b: &CMat2<T>) -> T {
    let (a00, a11, a01) = (a.m[0][0].re, a.m[1][1].re, a.m[0][1]);
    let (b00, b11, b01) = (b.m[0][0].re, b.m[1][1].re, b.m[0][1]);
    let qa = b00 * b11 - b01.norm_sqr();
    let qb = -(a00 * b11 + a11 * b00 - T::lit(2.0) * (a01 * b01.conj()).re);
    let qc = a00 * a11 - a01.norm_sqr();
    let disc = (qb * qb - T::lit(4.0) * qa * qc).max(T::zero());
    let q = -T::lit(0.5) * (qb + qb.signum() * disc.sqrt());
    let r1 = q / qa;
    let r2 = if q != T::zero() { qc / q } else { r1 };
    r1.min(r2)
}

/// Largest `k` with `dℰ/dt + kξ²/(1+ξ²)ℰ ≤ 0` for every `V̂` at this `ξ`.
fn uniform_k_at<T: Real>(eq: &EquilibriumState<T>, xi: T, delta: T) -> T {
    let w = xi * xi / (T::one() + xi * xi);
    let (h, d) = energy_forms(eq, xi, delta);
    pencil_min(&(-d), &h) / w
}

/// Energy weight and its certified rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyParams<T> {
    pub delta: T,
    pub k: T,
    pub c1: T,
}

/// `sup_ξ (δ|ξ|/(1+ξ²))‖K̃(ξ)‖ ≤ 1/2`, sufficient for `C₁ = 2`.
fn equivalence_holds<T: Real>(eq: &EquilibriumState<T>, xi_grid: &[T], delta: T) -> bool {
    xi_grid
        .iter()
        .all(|&xi| mixing(xi.abs(), delta) * compensating_k(eq, xi).op_norm() <= T::lit(0.5))
}

fn grid_uniform_k<T: Real>(eq: &EquilibriumState<T>, xi_grid: &[T], delta: T) -> T {
    xi_grid
        .par_iter()
        .filter(|x| **x != T::zero())
        .map(|&xi| uniform_k_at(eq, xi, delta))
        .collect::<Vec<_>>()
        .into_iter()
        .fold(T::infinity(), T::min)
}

/// Closed-form sufficient weight `δ₀ = v̄√q̄/μ̄`, clipped into `(0, 1)`.
pub fn closed_form_delta0<T: Real>(eq: &EquilibriumState<T>) -> T {
    let d = eq.v_bar * eq.q_bar.sqrt() / eq.mu_bar;
    d.min(T::one() - T::epsilon())
}

/// Largest `δ ≤ 1/2` (by bisection) for which `C₁ = 2` equivalence holds and
/// the energy inequality has a positive rate on the grid.
pub fn select_delta<T: Real>(eq: &EquilibriumState<T>, xi_grid: &[T]) -> Result<EnergyParams<T>> {
    if xi_grid.is_empty() {
        return Err(Error::EmptySamples("select_delta"));
    }
    let passes = |delta: T| -> Option<T> {
        if !equivalence_holds(eq, xi_grid, delta) {
            return None;
        }
        let k = grid_uniform_k(eq, xi_grid, delta);
        (k > T::zero()).then_some(k)
    };
    let mut hi = T::lit(0.5);
    let make = |delta: T, k: T| EnergyParams {
        delta,
        k,
        c1: T::lit(EQUIVALENCE_C1),
    };
    if let Some(k) = passes(hi) {
        return Ok(make(hi, k));
    }
    let mut lo = hi;
    let mut k_lo = None;
    while lo > T::lit(1e-12) {
        lo = lo * T::lit(0.5);
        if let Some(k) = passes(lo) {
            k_lo = Some(k);
            break;
        }
        hi = lo;
    }
    let Some(mut k_lo) = k_lo else {
        return Err(Error::Structural(
            "no admissible energy weight delta".into(),
        ));
    };
    for _ in 0..60 {
        let mid = T::lit(0.5) * (lo + hi);
        match passes(mid) {
            Some(k) => {
                lo = mid;
                k_lo = k;
            }
            None => hi = mid,
        }
    }
    Ok(make(lo, k_lo))
}

/// `n` random unit vectors in `ℂ²`, reproducible from `seed`.
pub fn unit_samples<T: Real>(n: usize, seed: u64) -> Vec<CVec2<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let mut draw = || {
            C::new(
                T::lit(rng.gen_range(-1.0..1.0)),
                T::lit(rng.gen_range(-1.0..1.0)),
            )
        };
        let v: CVec2<T> = [draw(), draw()];
        let r = norm_sqr(&v).sqrt();
        if r > T::lit(1e-6) {
            out.push([v[0] / r, v[1] / r]);
        }
    }
    out
}

/// Outcome of [`verify_energy_inequality`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyCheck<T> {
    pub passed: bool,
    /// Largest `k` satisfied by every `(ξ, V̂)` sample.
    pub k: T,
    /// Largest `k` valid for all `V̂` at every grid `ξ`.
    pub uniform_k: T,
    /// Largest of `(dℰ/dt + kξ²/(1+ξ²)ℰ)/|V̂|²` with the returned `k`.
    pub max_residual: T,
    /// `ξ` attaining the minimum `k`.
    pub binding_xi: T,
    /// Extremes of `ℰ/|V̂|²` over the samples.
    pub equivalence: (T, T),
}

/// Checks `dℰ/dt + kξ²/(1+ξ²)ℰ ≤ 10⁻¹²|V̂|²` on `ξ_grid × V̂_samples` and
/// returns the largest `k` for which it holds.
///
/// Per sample the inequality is linear in `k`, so the largest passing `k`
/// is `min(−(dℰ/dt)/(wℰ))` with `w = ξ²/(1+ξ²)`.
pub fn verify_energy_inequality<T: Real>(
    eq: &EquilibriumState<T>,
    delta: T,
    xi_grid: &[T],
    v_samples: &[CVec2<T>],
) -> Result<EnergyCheck<T>> {
    check_delta(delta)?;
    if xi_grid.is_empty() || v_samples.is_empty() {
        return Err(Error::EmptySamples("energy inequality"));
    }
    let tol = T::lit(ENERGY_TOL);
    struct Row<T> {
        xi: T,
        w: T,
        evals: Vec<(T, T, T)>,
    }
    let rows: Vec<Row<T>> = xi_grid
        .par_iter()
        .map(|&xi| {
            let (h, d) = energy_forms(eq, xi, delta);
            let evals = v_samples
                .iter()
                .map(|v| (quadratic_form(&h, v), quadratic_form(&d, v), norm_sqr(v)))
                .collect();
            Row {
                xi,
                w: xi * xi / (T::one() + xi * xi),
                evals,
            }
        })
        .collect();
    let mut k = T::infinity();
    let mut binding_xi = T::nan();
    let mut eq_lo = T::infinity();
    let mut eq_hi = T::neg_infinity();
    for row in &rows {
        for &(e, de, n2) in &row.evals {
            if n2 == T::zero() {
                continue;
            }
            if !(e > T::zero()) {
                return Err(Error::Structural(format!(
                    "energy not positive at xi = {}",
                    row.xi
                )));
            }
            eq_lo = eq_lo.min(e / n2);
            eq_hi = eq_hi.max(e / n2);
            if row.w == T::zero() {
                continue;
            }
            let ki = -de / (row.w * e);
            if ki < k {
                k = ki;
                binding_xi = row.xi;
            }
        }
    }
    if !(k > T::zero()) {
        return Err(Error::EnergyInequality {
            xi: binding_xi.as_f64(),
        });
    }
    if !k.is_finite() {
        // only ξ = 0 or zero vectors: any rate works
        k = T::zero();
    }
    let mut max_residual = T::neg_infinity();
    for row in &rows {
        for &(e, de, n2) in &row.evals {
            if n2 > T::zero() {
                max_residual = max_residual.max((de + k * row.w * e) / n2);
            }
        }
    }
    let max_residual = max_residual.max(T::neg_infinity());
    Ok(EnergyCheck {
        passed: max_residual <= tol && k > T::zero(),
        k,
        uniform_k: grid_uniform_k(eq, xi_grid, delta),
        max_residual,
        binding_xi,
        equivalence: (eq_lo, eq_hi),
    })
}

/// Certified bound `|V̂(ξ,t)| ≤ C|V̂(ξ,0)| e^{−kξ²t/(1+ξ²)}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayEnvelope<T> {
    pub c: T,
    pub k: T,
    /// Squared-norm amplitude for `(1+ξ²)|Û₁|² + |Û₂|²` with rate `2k`.
    pub c_weighted: T,
    pub weighted_certified: bool,
    /// `(k, C(k))` for every rung tried, descending in `k`.
    pub ladder: Vec<(T, T)>,
    pub samples: Vec<EnvelopeSample<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnvelopeSample<T> {
    pub xi: T,
    pub t: T,
    /// `‖e^{tM}‖` in the `V̂` metric.
    pub opnorm: T,
    pub bound: T,
    pub ok: bool,
}

/// Finds `(C, k)` on a descending ladder `k = c·(20−j)/20` (with `c` from the
/// dissipativity scan): `C(k)` is the largest `‖e^{tM}‖_V e^{kwt}` over the
/// samples, and the largest `k` with `C ≤ 100` is kept. The weighted `Û`
/// form is then certified with the same `k`.
pub fn verify_pointwise_decay<T: Real>(
    eq: &EquilibriumState<T>,
    xi_grid: &[T],
    t_grid: &[T],
) -> Result<DecayEnvelope<T>> {
    if xi_grid.is_empty() || t_grid.is_empty() {
        return Err(Error::EmptySamples("pointwise decay"));
    }
    if t_grid.iter().any(|t| !(*t >= T::zero())) {
        return Err(Error::Parameter("times must be nonnegative".into()));
    }
    let nonzero: Vec<T> = xi_grid
        .iter()
        .copied()
        .filter(|x| *x != T::zero())
        .collect();
    let c_scan = if nonzero.is_empty() {
        T::one()
    } else {
        strict_dissipativity_scan(eq, &nonzero)?.c
    };
    // (xi, t, w·t, V-metric norm, weighted-U squared norm)
    let rows: Vec<(T, T, T, T, T)> = xi_grid
        .par_iter()
        .flat_map_iter(|&xi| {
            let prop = ModePropagator::new(eq, xi);
            let w = xi * xi / (T::one() + xi * xi);
            let sv = beta(eq, xi).sqrt();
            let su = (T::one() + xi * xi).sqrt();
            t_grid.iter().map(move |&t| {
                let e = prop.exp(t);
                let nv = e.diag_similarity(sv, T::one()).op_norm();
                let nu = e.diag_similarity(su, T::one()).op_norm();
                (xi, t, w * t, nv, nu * nu)
            })
        })
        .collect();
    let amplitude = |k: T, sq: bool| -> T {
        rows.iter()
            .map(|&(_, _, wt, nv, nu2)| {
                if sq {
                    nu2 * (T::lit(2.0) * k * wt).exp()
                } else {
                    nv * (k * wt).exp()
                }
            })
            .fold(T::one(), T::max)
    };
    let mut ladder = Vec::with_capacity(ENVELOPE_LADDER);
    let mut chosen = None;
    for j in 0..ENVELOPE_LADDER {
        let k = c_scan * T::from_index(ENVELOPE_LADDER - j) / T::from_index(ENVELOPE_LADDER);
        let c = amplitude(k, false);
        ladder.push((k, c));
        if chosen.is_none() && c <= T::lit(ENVELOPE_C_MAX) && k >= T::lit(ENVELOPE_K_MIN) {
            chosen = Some((k, c));
        }
    }
    let Some((k, c)) = chosen else {
        return Err(Error::EnvelopeNotFound {
            c_max: ENVELOPE_C_MAX,
            k_min: ENVELOPE_K_MIN,
        });
    };
    let c_weighted = amplitude(k, true);
    let slack = T::one() + T::lit(1e-12);
    let samples = rows
        .iter()
        .map(|&(xi, t, wt, nv, _)| {
            let bound = c * (-k * wt).exp();
            EnvelopeSample {
                xi,
                t,
                opnorm: nv,
                bound,
                ok: nv <= bound * slack,
            }
        })
        .collect();
    Ok(DecayEnvelope {
        c,
        k,
        c_weighted,
        weighted_certified: c_weighted <= T::lit(ENVELOPE_C_MAX),
        ladder,
        samples,
    })
}

/// `e^{tℒ}f`: every Fourier mode multiplied by `e^{tM(iξ)}`.
///
/// The Nyquist mode has no partner of opposite wavenumber, so it is
/// propagated by the real part of its propagator to keep the field real.
pub fn semigroup_apply<T: Real>(
    eq: &EquilibriumState<T>,
    grid: &SpectralGrid<T>,
    f: &SpectralField<T>,
    t: T,
) -> Result<SpectralField<T>> {
    f.check_grid(grid)?;
    let nyq = grid.nyquist();
    let pairs: Vec<(C<T>, C<T>)> = grid
        .xi()
        .par_iter()
        .enumerate()
        .map(|(j, &xi)| {
            let mut p = ModePropagator::new(eq, xi).exp(t);
            if j == nyq {
                p = p.re().to_complex();
            }
            let out = p.mul_vec(&[f.v_hat[j], f.u_hat[j]]);
            (out[0], out[1])
        })
        .collect();
    let (v_hat, u_hat) = pairs.into_iter().unzip();
    Ok(SpectralField { v_hat, u_hat })
}

/// Norms `(‖∂ₓˡv‖²₁ + ‖∂ₓˡu‖²₀)^{1/2}` of the exact linear evolution, with
/// fitted slopes against `log(1+t)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearDecayTrace<T> {
    pub times: Vec<T>,
    pub ells: Vec<u32>,
    /// `norms[i][j]`: derivative order `ells[i]` at `times[j]`.
    pub norms: Vec<Vec<T>>,
    /// `None` when the trace is identically zero.
    pub slopes: Vec<Option<T>>,
    pub window: (T, T),
}

/// Default sample times: 40 log-spaced instants over the default window.
pub fn default_decay_times<T: Real>() -> Vec<T> {
    log_times(
        T::lit(LINEAR_FIT_WINDOW.0),
        T::lit(LINEAR_FIT_WINDOW.1),
        LINEAR_FIT_SAMPLES,
    )
}

/// Evolves `f` exactly to every instant of `t_grid` and fits decay slopes
/// over `window`.
pub fn linear_decay_experiment<T: Real>(
    eq: &EquilibriumState<T>,
    grid: &SpectralGrid<T>,
    f: &SpectralField<T>,
    ells: &[u32],
    t_grid: &[T],
    window: (T, T),
) -> Result<LinearDecayTrace<T>> {
    f.check_grid(grid)?;
    if ells.is_empty() || t_grid.is_empty() {
        return Err(Error::EmptySamples("linear decay experiment"));
    }
    let per_time: Vec<Vec<T>> = t_grid
        .iter()
        .map(|&t| {
            let g = semigroup_apply(eq, grid, f, t)?;
            Ok(ells.iter().map(|&l| g.derivative_norm(grid, l)).collect())
        })
        .collect::<Result<_>>()?;
    let norms: Vec<Vec<T>> = (0..ells.len())
        .map(|i| per_time.iter().map(|row| row[i]).collect())
        .collect();
    let slopes = norms
        .iter()
        .map(|series| {
            if series.iter().all(|y| *y == T::zero()) {
                Ok(None)
            } else {
                decay_exponent(t_grid, series, window).map(Some)
            }
        })
        .collect::<Result<_>>()?;
    Ok(LinearDecayTrace {
        times: t_grid.to_vec(),
        ells: ells.to_vec(),
        norms,
        slopes,
        window,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_adiabatic_model, make_equilibrium};
    use crate::symbol::default_xi_grid;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn m_star() -> EquilibriumState<f64> {
        let m = make_adiabatic_model(1.0, 2.0, 10.0).unwrap();
        make_equilibrium(&m, 1.0, 0.0).unwrap()
    }

    fn c(re: f64, im: f64) -> C<f64> {
        C::new(re, im)
    }

    /// Scaling and squaring with a 30-term Taylor series.
    fn dense_expm(m: CMat2<f64>) -> CMat2<f64> {
        let norm = m.max_abs() * 2.0;
        let s = if norm > 0.5 {
            (norm / 0.5).log2().ceil() as i32
        } else {
            0
        };
        let a = m.scale_re(0.5f64.powi(s));
        let mut term = CMat2::identity();
        let mut sum = CMat2::identity();
        for n in 1..30 {
            term = (term * a).scale_re(1.0 / n as f64);
            sum = sum + term;
        }
        for _ in 0..s {
            sum = sum * sum;
        }
        sum
    }

    #[test]
    fn propagator_at_zero_wavenumber_is_identity() {
        let p = ModePropagator::new(&m_star(), 0.0);
        for t in [0.0, 1.0, 1e4] {
            assert!(p.exp(t).max_abs_diff(&CMat2::identity()) < 1e-15);
        }
    }

    #[test]
    fn propagator_matches_dense_oracle() {
        let eq = m_star();
        for xi in [0.01, 0.5, 1.0, 3.0, 20.0] {
            let p = ModePropagator::new(&eq, xi);
            for t in [0.01, 0.3, 1.0, 2.5] {
                let e = p.exp(t);
                let o = dense_expm(p.m.scale_re(t));
                assert!(
                    e.max_abs_diff(&o) < 1e-10 * o.max_abs().max(1.0),
                    "xi={xi} t={t}"
                );
            }
        }
        // spectral radius e^{-1/2}; the norm itself shows transient growth
        let e1 = ModePropagator::new(&eq, 1.0).exp(1.0);
        let (a, b) = e1.eigenvalues();
        assert_relative_eq!(
            a.norm().max(b.norm()),
            (-0.5f64).exp(),
            max_relative = 1e-12
        );
        assert_relative_eq!(e1.op_norm(), 1.1379877024574154, max_relative = 1e-10);
    }

    #[test]
    fn confluent_eigenvalues_use_limit_form() {
        // λ² + bλ + c with b² = 4c: ξ = 1, μ̄/v̄ = 2, β = 1
        let eq = EquilibriumState::from_constants(1.0, 0.0, 0.5, 2.0, 0.5).unwrap();
        let p = ModePropagator::new(&eq, 1.0);
        assert!(p.confluent);
        for t in [0.1, 1.0, 5.0] {
            let o = dense_expm(p.m.scale_re(t));
            assert!(p.exp(t).max_abs_diff(&o) < 1e-12);
        }
    }

    #[test]
    fn overdamped_mode_matches_oracle() {
        let eq = EquilibriumState::from_constants(1.0, 0.0, 0.01, 10.0, 0.01).unwrap();
        let p = ModePropagator::new(&eq, 2.0);
        assert_eq!(p.lambda.0.im, 0.0);
        let o = dense_expm(p.m.scale_re(0.7));
        assert!(p.exp(0.7).max_abs_diff(&o) < 1e-12);
    }

    #[test]
    fn semigroup_property_random_modes() {
        let eq = m_star();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let xi = rng.gen_range(-30.0..30.0);
            let p = ModePropagator::new(&eq, xi);
            let lhs = p.exp(1.0);
            let rhs = p.exp(0.3) * p.exp(0.7);
            assert!(lhs.max_abs_diff(&rhs) < 1e-10);
        }
    }

    #[test]
    fn energy_functional_examples() {
        let eq = m_star();
        let v = [c(1.0, 0.0), c(0.0, 0.0)];
        assert_relative_eq!(energy_functional(&eq, 0.0, &v, 0.7).unwrap(), 1.0);
        let tiny = energy_functional(&eq, 2.0, &[c(1.0, 0.0), c(0.0, 1.0)], 1e-15).unwrap();
        assert_relative_eq!(tiny, 2.0, max_relative = 1e-14);
        assert!(energy_functional(&eq, 1.0, &v, 0.0).is_err());
        assert!(energy_functional(&eq, 1.0, &v, 1.0).is_err());
        // oracle: K̃(1) = (1/(4√3))[[0,−1],[1,0]], V = (1, i)
        let v = [c(1.0, 0.0), c(0.0, 1.0)];
        let kk = 1.0 / (4.0 * 3f64.sqrt());
        let ikv = [c(0.0, 1.0) * (-kk) * v[1], c(0.0, 1.0) * kk * v[0]];
        let cross = v[0].conj() * ikv[0] + v[1].conj() * ikv[1];
        assert!(cross.im.abs() < 1e-15);
        let want = 2.0 - 0.25 * cross.re;
        assert_relative_eq!(
            energy_functional(&eq, 1.0, &v, 0.5).unwrap(),
            want,
            max_relative = 1e-15
        );
    }

    #[test]
    fn energy_derivative_matches_direct_oracle() {
        let eq = m_star();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let xi: f64 = rng.gen_range(-20.0..20.0);
            let delta = rng.gen_range(0.01..0.99);
            let v = [c(rng.gen(), rng.gen()), c(rng.gen(), rng.gen())];
            // dℰ/dt = 2Re⟨V_t, V⟩ − ε·2Re⟨V_t, iK̃V⟩
            let vt = v_generator(&eq, xi).mul_vec(&v);
            let ik = i_k(&eq, xi).mul_vec(&v);
            let eps = delta * xi / (1.0 + xi * xi);
            let direct = 2.0 * inner(&vt, &v).re - eps * 2.0 * inner(&vt, &ik).re;
            let got = energy_derivative(&eq, xi, &v, delta).unwrap();
            assert!((got - direct).abs() < 1e-11 * (1.0 + direct.abs()));
        }
    }

    #[test]
    fn energy_decreases_along_exact_trajectories() {
        let eq = m_star();
        let params = select_delta(&eq, &default_xi_grid()).unwrap();
        for xi in [0.05, 1.0, 12.0] {
            let p = ModePropagator::new(&eq, xi);
            let s = beta(&eq, xi).sqrt();
            let u0 = [c(0.3, -0.2), c(0.1, 0.4)];
            for t in [0.0, 0.5, 3.0] {
                let u = p.exp(t).mul_vec(&u0);
                let v = [u[0] * s, u[1]];
                assert!(energy_derivative(&eq, xi, &v, params.delta).unwrap() <= 1e-14);
            }
        }
    }

    #[test]
    fn select_delta_on_canonical_state() {
        let eq = m_star();
        let params = select_delta(&eq, &default_xi_grid()).unwrap();
        assert!(params.delta > 0.0 && params.delta <= 0.5);
        assert!(params.k > 0.0);
        assert_eq!(params.c1, 2.0);
        let d0 = closed_form_delta0(&eq);
        assert_relative_eq!(d0, 2f64.sqrt().min(1.0 - f64::EPSILON));
        let d0 = closed_form_delta0(&EquilibriumState { mu_bar: 4.0, ..eq });
        assert!(equivalence_holds(&eq, &default_xi_grid(), d0));
    }

    #[test]
    fn energy_inequality_homogeneity() {
        let eq = m_star();
        let grid = [0.5, 2.0, 9.0];
        let v = [c(0.6, 0.1), c(-0.2, 0.7)];
        let v2 = [v[0] * 2.0, v[1] * 2.0];
        let a = verify_energy_inequality(&eq, 0.5, &grid, &[v]).unwrap();
        let b = verify_energy_inequality(&eq, 0.5, &grid, &[v2]).unwrap();
        assert_relative_eq!(a.k, b.k, max_relative = 1e-14);
        assert_eq!(a.passed, b.passed);
        for &xi in &grid {
            let e1 = energy_functional(&eq, xi, &v, 0.5).unwrap();
            let e2 = energy_functional(&eq, xi, &v2, 0.5).unwrap();
            assert_relative_eq!(e2, 4.0 * e1, max_relative = 1e-14);
            let d1 = energy_derivative(&eq, xi, &v, 0.5).unwrap();
            let d2 = energy_derivative(&eq, xi, &v2, 0.5).unwrap();
            assert_relative_eq!(d2, 4.0 * d1, max_relative = 1e-13);
        }
        let zero = [c(0.0, 0.0), c(0.0, 0.0)];
        assert_eq!(energy_derivative(&eq, 1.0, &zero, 0.5).unwrap(), 0.0);
        assert_eq!(energy_functional(&eq, 1.0, &zero, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn envelope_on_canonical_state() {
        let eq = m_star();
        let grid: Vec<f64> = default_xi_grid().into_iter().step_by(10).collect();
        let env = verify_pointwise_decay(&eq, &grid, &[0.0, 0.1, 1.0, 10.0]).unwrap();
        assert!(env.k >= 0.5 - 1e-6 && env.c < 5.0);
        assert!(env.samples.iter().all(|s| s.ok));
        assert!(env.weighted_certified);
        let t0 = env.samples.iter().find(|s| s.t == 0.0).unwrap();
        assert_relative_eq!(t0.opnorm, 1.0, epsilon = 1e-12);
        // ξ = 100, t = 1
        let p = ModePropagator::new(&eq, 100.0);
        let n = p.exp_v_metric(&eq, 1.0).op_norm();
        assert!(n <= env.c * (-env.k * 0.9999f64).exp());
    }

    #[test]
    fn semigroup_apply_basics() {
        let eq = m_star();
        let grid = SpectralGrid::new(40.0, 128).unwrap();
        let x = grid.points();
        let v: Vec<f64> = x.iter().map(|x| (-(x - 20.0f64).powi(2)).exp()).collect();
        let u = vec![0.0; 128];
        let f = SpectralField::from_physical(&grid, &v, &u).unwrap();
        let same = semigroup_apply(&eq, &grid, &f, 0.0).unwrap();
        for (a, b) in same.v_hat.iter().zip(&f.v_hat) {
            assert!((a - b).norm() < 1e-13);
        }
        let constant = SpectralField::from_physical(&grid, &[0.3; 128], &[-0.1; 128]).unwrap();
        let later = semigroup_apply(&eq, &grid, &constant, 50.0).unwrap();
        assert!(later
            .v_hat
            .iter()
            .zip(&constant.v_hat)
            .all(|(a, b)| (a - b).norm() < 1e-12));
        let mut last = f64::INFINITY;
        for t in [0.0, 0.5, 1.0, 2.0, 5.0, 10.0] {
            let g = semigroup_apply(&eq, &grid, &f, t).unwrap();
            assert!(g.imaginary_residue(&grid) < 1e-12);
            // the V-metric energy is nonincreasing
            let e = grid
                .xi()
                .iter()
                .zip(g.v_hat.iter().zip(&g.u_hat))
                .map(|(&xi, (a, b))| beta(&eq, xi) * a.norm_sqr() + b.norm_sqr())
                .sum::<f64>();
            assert!(e <= last * (1.0 + 1e-12));
            last = e;
        }
        let small = SpectralGrid::new(40.0, 64).unwrap();
        assert!(matches!(
            semigroup_apply(&eq, &small, &f, 1.0),
            Err(Error::GridMismatch { .. })
        ));
    }

    #[test]
    fn semigroup_commutes_with_translation() {
        let eq = m_star();
        let grid = SpectralGrid::new(30.0, 64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let v: Vec<f64> = (0..64).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let u: Vec<f64> = (0..64).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let shift = |a: &[f64]| -> Vec<f64> { (0..64).map(|j| a[(j + 7) % 64]).collect() };
        let f = SpectralField::from_physical(&grid, &v, &u).unwrap();
        let fs = SpectralField::from_physical(&grid, &shift(&v), &shift(&u)).unwrap();
        let (a, _) = semigroup_apply(&eq, &grid, &f, 0.8)
            .unwrap()
            .to_physical(&grid);
        let (b, _) = semigroup_apply(&eq, &grid, &fs, 0.8)
            .unwrap()
            .to_physical(&grid);
        let sa = shift(&a);
        assert!(sa.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-10));
    }

    #[test]
    fn zero_data_skips_fit() {
        let eq = m_star();
        let grid = SpectralGrid::new(100.0, 64).unwrap();
        let f = SpectralField::zeros(64);
        let trace =
            linear_decay_experiment(&eq, &grid, &f, &[0, 1], &default_decay_times(), (1e2, 1e4))
                .unwrap();
        assert!(trace.norms.iter().flatten().all(|y| *y == 0.0));
        assert_eq!(trace.slopes, vec![None, None]);
    }

    #[test]
    fn short_window_rejected() {
        let eq = m_star();
        let grid = SpectralGrid::new(100.0, 64).unwrap();
        let x = grid.points();
        let v: Vec<f64> = x.iter().map(|x| (-(x - 50.0f64).powi(2)).exp()).collect();
        let f = SpectralField::from_physical(&grid, &v, &vec![0.0; 64]).unwrap();
        let times = log_times(1.0, 5.0, 10);
        assert!(linear_decay_experiment(&eq, &grid, &f, &[0], &times, (1.0, 5.0)).is_err());
    }

    proptest! {
        #[test]
        fn propagator_semigroup(xi in -50.0f64..50.0, t in 0.0f64..3.0, s in 0.0f64..3.0) {
            let p = ModePropagator::new(&m_star(), xi);
            let lhs = p.exp(t + s);
            let rhs = p.exp(t) * p.exp(s);
            prop_assert!(lhs.max_abs_diff(&rhs) < 1e-10);
        }

        #[test]
        fn equivalence_with_selected_delta(xi in -1e3f64..1e3, a in -1.0f64..1.0, b in -1.0f64..1.0,
                                           cc in -1.0f64..1.0, d in -1.0f64..1.0) {
            let eq = m_star();
            let v = [C::new(a, b), C::new(cc, d)];
            let n2 = norm_sqr(&v);
            prop_assume!(n2 > 1e-6);
            let e = energy_functional(&eq, xi, &v, 0.5).unwrap();
            prop_assert!(e >= 0.5 * n2 && e <= 2.0 * n2);
        }
    }

    #[test]
    fn unit_samples_are_unit_and_reproducible() {
        let a = unit_samples::<f64>(16, 4);
        assert_eq!(a, unit_samples::<f64>(16, 4));
        assert_ne!(a, unit_samples::<f64>(16, 5));
        for v in &a {
            assert_relative_eq!(norm_sqr(v), 1.0, epsilon = 1e-14);
        }
    }
}
