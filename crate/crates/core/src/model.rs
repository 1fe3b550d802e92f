//! Constitutive laws, admissible phases and equilibrium states.
//!
//! Laws are stored in Lagrangian form, as functions of the specific volume
//! `v = 1/ρ`. Every law provides a closed-form value and first derivative;
//! nothing is differentiated numerically.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// A coefficient given as a function of density, with its derivative.
pub trait DensityLaw<T>: fmt::Debug + Send + Sync {
    fn value(&self, rho: T) -> T;
    fn derivative(&self, rho: T) -> T;
}

/// `c · ρ^e`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityPower<T> {
    pub coeff: T,
    pub exponent: T,
}

impl<T: Real> DensityLaw<T> for DensityPower<T> {
    fn value(&self, rho: T) -> T {
        self.coeff * rho.powf(self.exponent)
    }

    fn derivative(&self, rho: T) -> T {
        if self.exponent == T::zero() {
            return T::zero();
        }
        self.coeff * self.exponent * rho.powf(self.exponent - T::one())
    }
}

/// `v^e`, through repeated multiplication when `e` is a small integer.
fn power<T: Real>(v: T, e: T) -> T {
    if e.fract() == T::zero() && e.abs() <= T::lit(32.0) {
        v.powi(e.as_f64() as i32)
    } else {
        v.powf(e)
    }
}

/// A scalar law of the specific volume.
#[derive(Debug, Clone)]
pub enum Law<T> {
    Constant(T),
    /// `c · v^e`
    Power {
        coeff: T,
        exponent: T,
    },
    /// `Rθ/(v − b) − a/v²`
    VanDerWaals {
        a: T,
        b: T,
        r_theta: T,
    },
    /// `f(1/v) · v^k`: a density law pulled back to specific volume.
    Eulerian {
        law: Arc<dyn DensityLaw<T>>,
        volume_exponent: i32,
    },
}

impl<T: Real> Law<T> {
    pub fn value(&self, v: T) -> T {
        match self {
            Law::Constant(c) => *c,
            Law::Power { coeff, exponent } => *coeff * power(v, *exponent),
            Law::VanDerWaals { a, b, r_theta } => *r_theta / (v - *b) - *a / (v * v),
            Law::Eulerian {
                law,
                volume_exponent,
            } => law.value(v.recip()) * v.powi(*volume_exponent),
        }
    }

    pub fn derivative(&self, v: T) -> T {
        match self {
            Law::Constant(_) => T::zero(),
            Law::Power { coeff, exponent } => {
                if *exponent == T::zero() {
                    T::zero()
                } else {
                    *coeff * *exponent * power(v, *exponent - T::one())
                }
            }
            Law::VanDerWaals { a, b, r_theta } => {
                let d = v - *b;
                -*r_theta / (d * d) + T::lit(2.0) * *a / (v * v * v)
            }
            Law::Eulerian {
                law,
                volume_exponent,
            } => {
                let rho = v.recip();
                let k = *volume_exponent;
                let f = law.value(rho);
                let df = law.derivative(rho);
                -df * rho * rho * v.powi(k) + T::lit(k as f64) * f * v.powi(k - 1)
            }
        }
    }

    fn is_constant(&self) -> bool {
        matches!(self, Law::Constant(_))
    }
}

/// Open interval `(lo, hi)` of specific volumes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseInterval<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: Real> PhaseInterval<T> {
    pub fn new(lo: T, hi: T) -> Self {
        Self { lo, hi }
    }

    /// Strict interior test with a relative margin.
    pub fn contains_strictly(&self, v: T, margin: T) -> bool {
        let m = margin * v.abs().max(T::one());
        v > self.lo + m && v < self.hi - m
    }

    pub fn contains(&self, v: T) -> bool {
        v > self.lo && v < self.hi
    }

    /// `n` interior points, uniformly spaced and avoiding the endpoints.
    pub fn samples(&self, n: usize) -> impl Iterator<Item = T> + '_ {
        let width = self.hi - self.lo;
        (0..n).map(move |i| self.lo + width * (T::from_index(i) + T::lit(0.5)) / T::from_index(n))
    }
}

/// Pressure, viscosity and capillarity in Lagrangian form.
#[derive(Debug, Clone)]
pub struct LagrangianLaws<T> {
    pub pressure: Law<T>,
    pub viscosity: Law<T>,
    pub capillarity: Law<T>,
}

/// Samples used to validate positivity and monotonicity on intervals.
const VALIDATION_SAMPLES: usize = 1000;
/// Uniform samples of `p'` scanned for spinodal sign changes.
const SPINODAL_SCAN_SAMPLES: usize = 10_000;
/// Strict-interior margin for phase membership.
pub const PHASE_MARGIN: f64 = 1e-9;

/// Pulls Eulerian coefficients back to specific volume:
/// `p(v) = p̃(1/v)`, `μ(v) = μ̃(1/v)`, `κ(v) = κ̃(1/v)/v⁵`.
///
/// All three are checked positive on `VALIDATION_SAMPLES` points of `domain`.
pub fn lagrangian_from_eulerian<T: Real>(
    pressure: Arc<dyn DensityLaw<T>>,
    viscosity: Arc<dyn DensityLaw<T>>,
    capillarity: Arc<dyn DensityLaw<T>>,
    domain: PhaseInterval<T>,
) -> Result<LagrangianLaws<T>> {
    let laws = LagrangianLaws {
        pressure: Law::Eulerian {
            law: pressure,
            volume_exponent: 0,
        },
        viscosity: Law::Eulerian {
            law: viscosity,
            volume_exponent: 0,
        },
        capillarity: Law::Eulerian {
            law: capillarity,
            volume_exponent: -5,
        },
    };
    for v in domain.samples(VALIDATION_SAMPLES) {
        for (name, law) in [
            ("pressure", &laws.pressure),
            ("viscosity", &laws.viscosity),
            ("capillarity", &laws.capillarity),
        ] {
            let value = law.value(v);
            if !(value > T::zero()) || !value.is_finite() {
                return Err(Error::ConstitutiveLaw {
                    law: name,
                    v: v.as_f64(),
                });
            }
        }
    }
    Ok(laws)
}

/// A fluid: constitutive laws plus the admissible domain and its phases.
#[derive(Debug, Clone)]
pub struct FluidModel<T> {
    pub pressure: Law<T>,
    pub viscosity: Law<T>,
    pub capillarity: Law<T>,
    /// `C₀ > 1`; specific volumes live in `(1/C₀, C₀)`.
    pub domain_bound: T,
    pub phases: Vec<PhaseInterval<T>>,
}

impl<T: Real> FluidModel<T> {
    /// Builds and validates a model.
    pub fn new(
        pressure: Law<T>,
        viscosity: Law<T>,
        capillarity: Law<T>,
        domain_bound: T,
        phases: Vec<PhaseInterval<T>>,
    ) -> Result<Self> {
        let model = Self {
            pressure,
            viscosity,
            capillarity,
            domain_bound,
            phases,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn domain(&self) -> PhaseInterval<T> {
        PhaseInterval::new(self.domain_bound.recip(), self.domain_bound)
    }

    pub fn with_viscosity(mut self, law: Law<T>) -> Result<Self> {
        self.viscosity = law;
        self.validate()?;
        Ok(self)
    }

    pub fn with_capillarity(mut self, law: Law<T>) -> Result<Self> {
        self.capillarity = law;
        self.validate()?;
        Ok(self)
    }

    /// Checks the three structural hypotheses: phases inside the domain,
    /// positive viscosity and capillarity, and `p' < 0` on every phase.
    pub fn validate(&self) -> Result<()> {
        if !(self.domain_bound > T::one()) {
            return Err(Error::Hypothesis {
                hypothesis: "H1",
                detail: format!("C0 = {} must exceed 1", self.domain_bound),
            });
        }
        if self.phases.is_empty() {
            return Err(Error::Hypothesis {
                hypothesis: "H3",
                detail: "no phase interval".into(),
            });
        }
        let domain = self.domain();
        for (j, phase) in self.phases.iter().enumerate() {
            if !(phase.lo < phase.hi) || phase.lo < domain.lo || phase.hi > domain.hi {
                return Err(Error::Hypothesis {
                    hypothesis: "H1",
                    detail: format!(
                        "phase {j} = ({}, {}) not an interval inside ({}, {})",
                        phase.lo, phase.hi, domain.lo, domain.hi
                    ),
                });
            }
            for v in phase.samples(VALIDATION_SAMPLES) {
                if !(self.viscosity.value(v) > T::zero()) {
                    return Err(Error::Hypothesis {
                        hypothesis: "H2",
                        detail: format!("viscosity not positive at v = {v}"),
                    });
                }
                if !(self.capillarity.value(v) > T::zero()) {
                    return Err(Error::Hypothesis {
                        hypothesis: "H2",
                        detail: format!("capillarity not positive at v = {v}"),
                    });
                }
                if !(self.pressure.derivative(v) < T::zero()) {
                    return Err(Error::Hypothesis {
                        hypothesis: "H3",
                        detail: format!("p'(v) >= 0 at v = {v} in phase {j}"),
                    });
                }
            }
        }
        Ok(())
    }

    /// Index of the phase strictly containing `v`.
    pub fn phase_of(&self, v: T) -> Option<usize> {
        self.phases
            .iter()
            .position(|p| p.contains_strictly(v, T::lit(PHASE_MARGIN)))
    }

    /// True when viscosity and capillarity are both constant.
    pub fn has_constant_coefficients(&self) -> bool {
        self.viscosity.is_constant() && self.capillarity.is_constant()
    }
}

/// Adiabatic gas `p(v) = Rθ v^{-γ}` on the single phase `(1/C₀, C₀)`,
/// with unit viscosity and capillarity.
pub fn make_adiabatic_model<T: Real>(r_theta: T, gamma: T, c0: T) -> Result<FluidModel<T>> {
    if !(r_theta > T::zero()) {
        return Err(Error::Parameter(format!(
            "R*theta = {r_theta} must be positive"
        )));
    }
    if !(gamma > T::one()) {
        return Err(Error::Parameter(format!("gamma = {gamma} must exceed 1")));
    }
    if !(c0 > T::one()) {
        return Err(Error::Parameter(format!("C0 = {c0} must exceed 1")));
    }
    FluidModel::new(
        Law::Power {
            coeff: r_theta,
            exponent: -gamma,
        },
        Law::Constant(T::one()),
        Law::Constant(T::one()),
        c0,
        vec![PhaseInterval::new(c0.recip(), c0)],
    )
}

/// Critical temperature `θ_c = 8a / (27 b R)` of the van der Waals law.
pub fn vdw_critical_theta<T: Real>(a: T, b: T, r: T) -> T {
    T::lit(8.0) * a / (T::lit(27.0) * b * r)
}

/// Isothermal van der Waals fluid below its critical temperature.
///
/// The spinodal `(α, β)` where `p' > 0` is located by scanning `p'` on a
/// uniform grid over `(b, C₀)` and bisecting each sign change. The phases
/// are the liquid `(b, α)` and vapour `(β, C₀)`, clipped to `(1/C₀, C₀)`.
pub fn make_vdw_model<T: Real>(a: T, b: T, r: T, theta: T, c0: T) -> Result<FluidModel<T>> {
    for (name, x) in [("a", a), ("b", b), ("R", r), ("theta", theta)] {
        if !(x > T::zero()) {
            return Err(Error::Parameter(format!("{name} = {x} must be positive")));
        }
    }
    if !(c0 > b) || !(c0 > T::one()) {
        return Err(Error::Parameter(format!(
            "C0 = {c0} must exceed both b = {b} and 1"
        )));
    }
    let theta_c = vdw_critical_theta(a, b, r);
    if (theta - theta_c).abs() <= T::lit(1e-12) * theta_c {
        return Err(Error::DegenerateSpinodal {
            theta: theta.as_f64(),
        });
    }
    if theta > theta_c {
        return Err(Error::NoSpinodal {
            theta: theta.as_f64(),
            theta_c: theta_c.as_f64(),
        });
    }
    let pressure = Law::VanDerWaals {
        a,
        b,
        r_theta: r * theta,
    };
    let roots = spinodal_roots(&pressure, PhaseInterval::new(b, c0))?;
    let (alpha, beta) = (roots[0], roots[1]);
    let lo = b.max(c0.recip());
    if !(alpha > lo) || !(beta < c0) {
        return Err(Error::Hypothesis {
            hypothesis: "H1",
            detail: format!("spinodal ({alpha}, {beta}) leaves no phase inside ({lo}, {c0})"),
        });
    }
    FluidModel::new(
        pressure,
        Law::Constant(T::one()),
        Law::Constant(T::one()),
        c0,
        vec![PhaseInterval::new(lo, alpha), PhaseInterval::new(beta, c0)],
    )
}

/// Zeros of `p'` on `interval`, by sign-change scan and bisection to a
/// relative tolerance of `1e-12`. Exactly two are required.
fn spinodal_roots<T: Real>(pressure: &Law<T>, interval: PhaseInterval<T>) -> Result<[T; 2]> {
    let samples: Vec<T> = interval.samples(SPINODAL_SCAN_SAMPLES).collect();
    let mut brackets = Vec::new();
    for w in samples.windows(2) {
        let (fa, fb) = (pressure.derivative(w[0]), pressure.derivative(w[1]));
        if (fa < T::zero()) != (fb < T::zero()) {
            brackets.push((w[0], w[1]));
        }
    }
    if brackets.len() != 2 {
        return Err(Error::RootFinding {
            sign_changes: brackets.len(),
        });
    }
    let mut roots = [T::zero(); 2];
    for (slot, (mut lo, mut hi)) in roots.iter_mut().zip(brackets) {
        let neg_at_lo = pressure.derivative(lo) < T::zero();
        while hi - lo > T::lit(1e-12) * hi.abs() {
            let mid = T::lit(0.5) * (lo + hi);
            if (pressure.derivative(mid) < T::zero()) == neg_at_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        *slot = T::lit(0.5) * (lo + hi);
    }
    Ok(roots)
}

/// A constant state `(v̄, ū)` and the linearised coefficients it fixes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumState<T> {
    pub v_bar: T,
    pub u_bar: T,
    /// `q̄ = −p'(v̄)`
    pub q_bar: T,
    pub mu_bar: T,
    pub kappa_bar: T,
    /// Phase containing `v̄`; `None` for states built from raw constants.
    pub phase_index: Option<usize>,
}

impl<T: Real> EquilibriumState<T> {
    /// A state from raw coefficients, bypassing a fluid model.
    ///
    /// Accepts `μ̄ = 0` or `κ̄ = 0` so that degenerate limits (no viscosity,
    /// pure Navier–Stokes) can be examined; `v̄` and `q̄` must be positive.
    pub fn from_constants(v_bar: T, u_bar: T, q_bar: T, mu_bar: T, kappa_bar: T) -> Result<Self> {
        if !(v_bar > T::zero()) || !(q_bar > T::zero()) {
            return Err(Error::Parameter(format!(
                "need v_bar > 0 and q_bar > 0, got {v_bar} and {q_bar}"
            )));
        }
        if !(mu_bar >= T::zero()) || !(kappa_bar >= T::zero()) {
            return Err(Error::Parameter(format!(
                "need mu_bar >= 0 and kappa_bar >= 0, got {mu_bar} and {kappa_bar}"
            )));
        }
        Ok(Self {
            v_bar,
            u_bar,
            q_bar,
            mu_bar,
            kappa_bar,
            phase_index: None,
        })
    }

    /// Ratio `μ̄/v̄` multiplying the dissipative symbol.
    pub fn damping(&self) -> T {
        self.mu_bar / self.v_bar
    }

    /// Same state with the viscosity switched off, which zeroes `B(ξ)`.
    pub fn without_dissipation(mut self) -> Self {
        self.mu_bar = T::zero();
        self
    }
}

/// Equilibrium at `v̄` inside one of the model's phases.
pub fn make_equilibrium<T: Real>(
    model: &FluidModel<T>,
    v_bar: T,
    u_bar: T,
) -> Result<EquilibriumState<T>> {
    let phase_index = model.phase_of(v_bar).ok_or(Error::Hyperbolicity {
        v_bar: v_bar.as_f64(),
    })?;
    let q_bar = -model.pressure.derivative(v_bar);
    if !(q_bar > T::zero()) {
        return Err(Error::Hyperbolicity {
            v_bar: v_bar.as_f64(),
        });
    }
    Ok(EquilibriumState {
        v_bar,
        u_bar,
        q_bar,
        mu_bar: model.viscosity.value(v_bar),
        kappa_bar: model.capillarity.value(v_bar),
        phase_index: Some(phase_index),
    })
}

/// Pressure law named in a model document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LawKind {
    #[serde(rename = "adiabatic")]
    Adiabatic,
    #[serde(rename = "vdw")]
    VanDerWaals,
    #[serde(rename = "custom-power")]
    CustomPower,
}

/// Viscosity or capillarity entry of a model document.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CoefficientSpec {
    Constant {
        value: f64,
    },
    /// `c0 · ρ^exponent`, converted to specific volume.
    EulerianPower {
        c0: f64,
        exponent: f64,
    },
    /// `c0 · v^exponent`.
    LagrangianPower {
        c0: f64,
        exponent: f64,
    },
}

impl Default for CoefficientSpec {
    fn default() -> Self {
        CoefficientSpec::Constant { value: 1.0 }
    }
}

/// JSON model document:
/// `{"law": ..., "params": {...}, "C0": ..., "mu": {...}, "kappa": {...}}`.
///
/// `params` keys: `R_theta`, `gamma` (adiabatic); `a`, `b`, `R`, `theta`
/// (vdw); `p0`, `gamma` for the Eulerian power law `p̃(ρ) = p0 ρ^γ`
/// (custom-power).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub law: LawKind,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(rename = "C0")]
    pub c0: f64,
    #[serde(default)]
    pub mu: CoefficientSpec,
    #[serde(default)]
    pub kappa: CoefficientSpec,
}

impl Default for ModelSpec {
    /// Adiabatic `Rθ = 1`, `γ = 2`, `C₀ = 10` with unit coefficients.
    fn default() -> Self {
        Self {
            law: LawKind::Adiabatic,
            params: [("R_theta".to_string(), 1.0), ("gamma".to_string(), 2.0)]
                .into_iter()
                .collect(),
            c0: 10.0,
            mu: CoefficientSpec::default(),
            kappa: CoefficientSpec::default(),
        }
    }
}

impl ModelSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    fn param(&self, key: &str) -> Result<f64> {
        self.params
            .get(key)
            .copied()
            .ok_or_else(|| Error::Parameter(format!("missing model parameter `{key}`")))
    }

    /// Builds and validates the described model.
    pub fn build<T: Real>(&self) -> Result<FluidModel<T>> {
        let c0 = T::lit(self.c0);
        let base = match self.law {
            LawKind::Adiabatic => make_adiabatic_model(
                T::lit(self.param("R_theta")?),
                T::lit(self.param("gamma")?),
                c0,
            )?,
            LawKind::VanDerWaals => make_vdw_model(
                T::lit(self.param("a")?),
                T::lit(self.param("b")?),
                T::lit(self.param("R")?),
                T::lit(self.param("theta")?),
                c0,
            )?,
            LawKind::CustomPower => {
                let p0 = T::lit(self.param("p0")?);
                let gamma = T::lit(self.param("gamma")?);
                if !(gamma > T::zero()) {
                    return Err(Error::Parameter(format!(
                        "gamma = {gamma} must be positive"
                    )));
                }
                let one = Arc::new(DensityPower {
                    coeff: T::one(),
                    exponent: T::zero(),
                });
                let domain = PhaseInterval::new(c0.recip(), c0);
                let laws = lagrangian_from_eulerian(
                    Arc::new(DensityPower {
                        coeff: p0,
                        exponent: gamma,
                    }),
                    one.clone(),
                    // ρ⁻⁵ pulls back to a unit capillarity
                    Arc::new(DensityPower {
                        coeff: T::one(),
                        exponent: T::lit(-5.0),
                    }),
                    domain,
                )?;
                FluidModel::new(
                    laws.pressure,
                    Law::Constant(T::one()),
                    Law::Constant(T::one()),
                    c0,
                    vec![domain],
                )?
            }
        };
        let mu = coefficient_law(&self.mu, false);
        let kappa = coefficient_law(&self.kappa, true);
        base.with_viscosity(mu)?.with_capillarity(kappa)
    }
}

fn coefficient_law<T: Real>(spec: &CoefficientSpec, capillarity: bool) -> Law<T> {
    match *spec {
        CoefficientSpec::Constant { value } => Law::Constant(T::lit(value)),
        CoefficientSpec::LagrangianPower { c0, exponent } => Law::Power {
            coeff: T::lit(c0),
            exponent: T::lit(exponent),
        },
        CoefficientSpec::EulerianPower { c0, exponent } => Law::Eulerian {
            law: Arc::new(DensityPower {
                coeff: T::lit(c0),
                exponent: T::lit(exponent),
            }),
            volume_exponent: if capillarity { -5 } else { 0 },
        },
    }
}
