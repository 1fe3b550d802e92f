//! Time integrals whose uniform boundedness closes the nonlinear decay
//! argument, and the incomplete elliptic integral of the first kind.
//!
//! ```text
//! I₀(t) = (1+t)^{ℓ+1/2} ∫_{−1}^{1} ξ^{2ℓ} e^{−ktξ²} dξ
//! I₁(t) = sup_{z≤t} (1+z)^{1/4} ∫₀^z e^{−c₁(z−τ)} (1+τ)^{−1/4} dτ
//!       + sup_{z≤t} (1+z)^{1/4} [∫₀^z e^{−2c₁(z−τ)} (1+τ)^{−1/2} dτ]^{1/2}
//! I₂(t) = sup_{z≤t} A₂(z),  A₂(z) = (1+z)^{1/4} ∫₀^z (1+z−τ)^{−3/4} (1+τ)^{−1/2} dτ
//! ```

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;

pub const SUP_SAMPLES: usize = 200;
pub const DEFAULT_REL_TOL: f64 = 1e-10;
const MAX_SEGMENTS: usize = 4000;
const GOLDEN_ITERATIONS: usize = 80;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Value and error estimate of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature<T> {
    pub value: T,
    pub error: T,
    pub segments: usize,
}

fn kronrod<T: Real>(f: &impl Fn(T) -> T, a: T, b: T) -> (T, T) {
    let half = T::lit(0.5);
    let centre = (a + b) * half;
    let h = (b - a) * half;
    let fc = f(centre);
    let mut k = fc * T::lit(WGK[7]);
    let mut g = fc * T::lit(WG[3]);
    for j in 0..7 {
        let dx = h * T::lit(XGK[j]);
        let pair = f(centre - dx) + f(centre + dx);
        k += pair * T::lit(WGK[j]);
        if j % 2 == 1 {
            g += pair * T::lit(WG[j / 2]);
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Globally adaptive 7/15-point Gauss–Kronrod quadrature on `[a, b]`.
///
/// Stops when the summed error estimate is below
/// `max(abs_tol, rel_tol·|value|)`, with `rel_tol` floored at `64·ε`.
pub fn integrate<T: Real>(
    f: impl Fn(T) -> T,
    a: T,
    b: T,
    rel_tol: T,
    abs_tol: T,
) -> Result<Quadrature<T>> {
    if a == b {
        return Ok(Quadrature {
            value: T::zero(),
            error: T::zero(),
            segments: 0,
        });
    }
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::Parameter(format!(
            "integration limits [{a}, {b}] must be finite"
        )));
    }
    let rel = rel_tol.max(T::lit(64.0) * T::epsilon());
    let (v, e) = kronrod(&f, a, b);
    let mut segments = vec![(a, b, v, e)];
    loop {
        let value: T = segments.iter().map(|s| s.2).sum();
        let error: T = segments.iter().map(|s| s.3).sum();
        if !value.is_finite() {
            return Err(Error::NonFinite { t: f64::NAN });
        }
        let tol = abs_tol.max(rel * value.abs());
        if error <= tol {
            return Ok(Quadrature {
                value,
                error,
                segments: segments.len(),
            });
        }
        let (idx, worst) = segments
            .iter()
            .enumerate()
            .max_by(|x, y| {
                x.1 .3
                    .partial_cmp(&y.1 .3)
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .map(|(i, s)| (i, *s))
            .expect("segments never empty");
        let mid = (worst.0 + worst.1) * T::lit(0.5);
        if segments.len() >= MAX_SEGMENTS || mid <= worst.0 || mid >= worst.1 {
            return Err(Error::Quadrature {
                error: error.as_f64(),
                tol: tol.as_f64(),
            });
        }
        let (lv, le) = kronrod(&f, worst.0, mid);
        let (rv, re) = kronrod(&f, mid, worst.1);
        segments[idx] = (worst.0, mid, lv, le);
        segments.push((mid, worst.1, rv, re));
    }
}

fn integrate_rel<T: Real>(f: impl Fn(T) -> T, a: T, b: T) -> Result<T> {
    Ok(integrate(f, a, b, T::lit(DEFAULT_REL_TOL), T::zero())?.value)
}

/// `sup_{0≤z≤t} g(z)` from `samples` points log-spaced in `1+z`, refined by
/// golden-section search around the best sample.
pub fn sup_over<T: Real>(g: impl Fn(T) -> Result<T>, t: T, samples: usize) -> Result<T> {
    if !(t > T::zero()) {
        return g(T::zero());
    }
    let n = samples.max(3);
    let log_top = (T::one() + t).ln();
    let zs: Vec<T> = (0..n)
        .map(|i| {
            if i + 1 == n {
                t
            } else {
                (log_top * T::from_index(i) / T::from_index(n - 1)).exp_m1()
            }
        })
        .collect();
    let values = zs.iter().map(|&z| g(z)).collect::<Result<Vec<T>>>()?;
    let (best, &best_value) = values
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.partial_cmp(y.1).unwrap_or(std::cmp::Ordering::Equal))
        .expect("at least three samples");
    let mut lo = zs[best.saturating_sub(1)];
    let mut hi = zs[(best + 1).min(n - 1)];
    let ratio = T::lit(0.618_033_988_749_894_8);
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (g(x1)?, g(x2)?);
    for _ in 0..GOLDEN_ITERATIONS {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = g(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = g(x1)?;
        }
    }
    Ok(best_value.max(f1).max(f2))
}

/// `(1+t)^{ℓ+1/2} ∫_{−1}^{1} ξ^{2ℓ} e^{−ktξ²} dξ`.
pub fn i0<T: Real>(t: T, ell: u32, k: T) -> Result<T> {
    if !(k > T::zero()) {
        return Err(Error::Parameter(format!("rate k = {k} must be positive")));
    }
    if !(t >= T::zero()) {
        return Err(Error::Parameter(format!("t = {t} must be non-negative")));
    }
    let p = 2 * ell as i32;
    let f = |xi: T| xi.powi(p) * (-k * t * xi * xi).exp();
    let core = if k * t > T::one() {
        (T::lit(40.0) / (k * t)).sqrt().min(T::one())
    } else {
        T::one()
    };
    let mut half = integrate_rel(f, T::zero(), core)?;
    if core < T::one() {
        half += integrate_rel(f, core, T::one())?;
    }
    Ok((T::one() + t).powf(T::from_index(ell as usize) + T::lit(0.5)) * T::lit(2.0) * half)
}

/// `Γ(ℓ+1/2) k^{−(ℓ+1/2)}`, the large-`t` limit of [`i0`].
pub fn i0_limit<T: Real>(ell: u32, k: T) -> T {
    let mut gamma = T::PI().sqrt();
    for j in 0..ell {
        gamma *= T::from_index(j as usize) + T::lit(0.5);
    }
    gamma * k.powf(-(T::from_index(ell as usize) + T::lit(0.5)))
}

/// `∫₀^z e^{−r(z−τ)} (1+τ)^{−p} dτ`, split where the exponential has died out.
fn damped_memory<T: Real>(z: T, r: T, p: T) -> Result<T> {
    if !(z > T::zero()) {
        return Ok(T::zero());
    }
    let f = |tau: T| (-r * (z - tau)).exp() * (T::one() + tau).powf(-p);
    let split = z - T::lit(50.0) / r;
    if split > T::zero() {
        Ok(integrate_rel(f, T::zero(), split)? + integrate_rel(f, split, z)?)
    } else {
        integrate_rel(f, T::zero(), z)
    }
}

/// First summand of `I₁` before the supremum.
pub fn i1_first<T: Real>(z: T, c1: T) -> Result<T> {
    Ok((T::one() + z).powf(T::lit(0.25)) * damped_memory(z, c1, T::lit(0.25))?)
}

/// Second summand of `I₁` before the supremum.
pub fn i1_second<T: Real>(z: T, c1: T) -> Result<T> {
    Ok((T::one() + z).powf(T::lit(0.25)) * damped_memory(z, T::lit(2.0) * c1, T::lit(0.5))?.sqrt())
}

/// `I₁(t)`: the two suprema are taken separately.
pub fn i1<T: Real>(t: T, c1: T) -> Result<T> {
    if !(c1 > T::zero()) {
        return Err(Error::Parameter(format!("c1 = {c1} must be positive")));
    }
    if !(t >= T::zero()) {
        return Err(Error::Parameter(format!("t = {t} must be non-negative")));
    }
    Ok(sup_over(|z| i1_first(z, c1), t, SUP_SAMPLES)?
        + sup_over(|z| i1_second(z, c1), t, SUP_SAMPLES)?)
}

/// `1/c₁ + (2c₁)^{−1/2}`, the large-`t` limit of [`i1`].
pub fn i1_limit<T: Real>(c1: T) -> T {
    c1.recip() + (T::lit(2.0) * c1).sqrt().recip()
}

/// `A₂(z)` by direct quadrature in `τ`.
pub fn a2_direct<T: Real>(z: T) -> Result<T> {
    if !(z > T::zero()) {
        return Ok(T::zero());
    }
    let f = |tau: T| (T::one() + z - tau).powf(T::lit(-0.75)) * (T::one() + tau).powf(T::lit(-0.5));
    Ok((T::one() + z).powf(T::lit(0.25)) * integrate_rel(f, T::zero(), z)?)
}

/// `A₂(z)` after `u = (1+z−τ)^{1/4}`: `4(1+z)^{1/4} ∫_1^{(1+z)^{1/4}} (2+z−u⁴)^{−1/2} du`.
pub fn a2<T: Real>(z: T) -> Result<T> {
    if !(z > T::zero()) {
        return Ok(T::zero());
    }
    let top = (T::one() + z).powf(T::lit(0.25));
    let f = |u: T| (T::lit(2.0) + z - u.powi(4)).max(T::one()).sqrt().recip();
    Ok(T::lit(4.0) * top * integrate_rel(f, T::one(), top)?)
}

/// `A₂(z)` through `y = (1+z−τ)^{1/4}/(2+z)^{1/4}`, which turns the inner
/// integral into a difference of elliptic integrals with parameter `−1`.
pub fn a2_elliptic<T: Real>(z: T) -> Result<T> {
    if !(z > T::zero()) {
        return Ok(T::zero());
    }
    let two_z = T::lit(2.0) + z;
    let y_hi = ((T::one() + z) / two_z).powf(T::lit(0.25));
    let y_lo = two_z.powf(T::lit(-0.25));
    let m = -T::one();
    let span = elliptic_f(y_hi.asin(), m)? - elliptic_f(y_lo.asin(), m)?;
    Ok(T::lit(4.0) * y_hi * span)
}

/// `I₂(t) = sup_{z≤t} A₂(z)`.
pub fn i2<T: Real>(t: T) -> Result<T> {
    if !(t >= T::zero()) {
        return Err(Error::Parameter(format!("t = {t} must be non-negative")));
    }
    sup_over(a2, t, SUP_SAMPLES)
}

/// `4F(π/2 | −1)`, the limit of `A₂(z)` as `z → ∞`.
pub fn i2_limit<T: Real>() -> Result<T> {
    Ok(T::lit(4.0) * elliptic_f(T::FRAC_PI_2(), -T::one())?)
}

/// Incomplete elliptic integral of the first kind
/// `F(φ | m) = ∫₀^{sin φ} dy / (√(1−y²)√(1−my²))`, evaluated as
/// `∫₀^φ dθ / √(1 − m sin²θ)`.
pub fn elliptic_f<T: Real>(phi: T, m: T) -> Result<T> {
    if !(phi >= T::zero() && phi <= T::FRAC_PI_2() * (T::one() + T::epsilon())) {
        return Err(Error::Parameter(format!(
            "amplitude phi = {phi} outside [0, pi/2]"
        )));
    }
    let phi = phi.min(T::FRAC_PI_2());
    let s = phi.sin();
    if !(m <= T::one()) || m * s * s >= T::one() {
        return Err(Error::Parameter(format!(
            "parameter m = {m} makes the integrand singular on [0, {phi}]"
        )));
    }
    integrate_rel(
        |theta: T| (T::one() - m * theta.sin().powi(2)).sqrt().recip(),
        T::zero(),
        phi,
    )
}

/// Which integral a report describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum IntegralName {
    I0,
    I1,
    I2,
}

impl std::fmt::Display for IntegralName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            IntegralName::I0 => "I0",
            IntegralName::I1 => "I1",
            IntegralName::I2 => "I2",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegralReport<T> {
    pub name: IntegralName,
    pub t_samples: Vec<T>,
    pub values: Vec<T>,
    pub sup: T,
    pub limit: Option<T>,
}

impl<T: Real> IntegralReport<T> {
    fn build(
        name: IntegralName,
        t_samples: &[T],
        limit: Option<T>,
        f: impl Fn(T) -> Result<T> + Sync,
    ) -> Result<Self> {
        if t_samples.is_empty() {
            return Err(Error::EmptySamples("integral report"));
        }
        let values = t_samples
            .par_iter()
            .map(|&t| f(t))
            .collect::<Result<Vec<T>>>()?;
        let sup = values.iter().copied().fold(T::neg_infinity(), T::max);
        Ok(Self {
            name,
            t_samples: t_samples.to_vec(),
            values,
            sup,
            limit,
        })
    }

    /// Supremum over samples with `t ≤ t_cut`.
    pub fn sup_until(&self, t_cut: T) -> T {
        self.t_samples
            .iter()
            .zip(&self.values)
            .filter(|(t, _)| **t <= t_cut)
            .map(|(_, v)| *v)
            .fold(T::neg_infinity(), T::max)
    }

    /// Relative change of the running supremum over the last decade of
    /// samples, `|sup_{t≤T} − sup_{t≤T/10}| / sup_{t≤T}`.
    pub fn last_decade_change(&self) -> T {
        let t_max = self.t_samples.iter().copied().fold(T::zero(), T::max);
        let before = self.sup_until(t_max / T::lit(10.0));
        ((self.sup - before) / self.sup).abs()
    }
}

pub fn i0_report<T: Real>(t_samples: &[T], ell: u32, k: T) -> Result<IntegralReport<T>> {
    IntegralReport::build(IntegralName::I0, t_samples, Some(i0_limit(ell, k)), |t| {
        i0(t, ell, k)
    })
}

pub fn i1_report<T: Real>(t_samples: &[T], c1: T) -> Result<IntegralReport<T>> {
    IntegralReport::build(IntegralName::I1, t_samples, Some(i1_limit(c1)), |t| {
        i1(t, c1)
    })
}

pub fn i2_report<T: Real>(t_samples: &[T]) -> Result<IntegralReport<T>> {
    IntegralReport::build(IntegralName::I2, t_samples, Some(i2_limit()?), i2)
}

/// `t = 0` followed by ten samples per decade on `[10⁻², 10⁴]`.
pub fn default_t_samples<T: Real>() -> Vec<T> {
    std::iter::once(T::zero())
        .chain((0..=60).map(|j| T::lit(10.0).powf(T::lit(-2.0) + T::from_index(j) / T::lit(10.0))))
        .collect()
}
