//! Dissipative structure and decay of the one-dimensional isothermal
//! Navier–Stokes–Korteweg system in Lagrangian coordinates,
//!
//! ```text
//! v_t = u_x
//! u_t = ( −p(v) + μ(v) u_x / v − κ(v) v_xx − ½ κ'(v) v_x² )_x
//! ```
//!
//! Every numerical routine is generic over [`Real`] (`f32` or `f64`); the
//! `*64` aliases at the crate root fix the scalar to `f64`.

pub mod error;
pub mod fit;
pub mod linalg;
pub mod linear;
pub mod model;
pub mod nonlinear;
pub mod quadrature;
pub mod scalar;
pub mod symbol;

pub use error::{Error, Result};
pub use scalar::Real;

pub use model::{
    lagrangian_from_eulerian, make_adiabatic_model, make_equilibrium, make_vdw_model,
    vdw_critical_theta, CoefficientSpec, DensityLaw, DensityPower, EquilibriumState, FluidModel,
    Law, LawKind, ModelSpec, PhaseInterval,
};

pub use symbol::{
    default_xi_grid, dispersion, dispersion_scan, friedrichs_infeasibility, genuine_coupling_check,
    strict_dissipativity_scan, verify_coercivity, CoercivityCertificate, CouplingReport,
    DispersionPoint, DissipativityScan, FriedrichsReport, SymbolBundle,
};

pub use linear::{
    linear_decay_experiment, mode_propagator, select_delta, semigroup_apply, unit_samples,
    verify_energy_inequality, verify_pointwise_decay, DecayEnvelope, EnergyCheck, EnergyParams,
    LinearDecayTrace, ModePropagator,
};

pub use nonlinear::{
    h2_eval, rhs, simulate, simulate_field, step, EtdIntegrator, InitShape, InitialData, NormTrace,
    PerturbationState, SimulationConfig, SpectralField, SpectralGrid,
};

pub use quadrature::{elliptic_f, i0, i1, i2, IntegralName, IntegralReport};

pub type FluidModel64 = FluidModel<f64>;
pub type EquilibriumState64 = EquilibriumState<f64>;
pub type SpectralGrid64 = SpectralGrid<f64>;
pub type SpectralField64 = SpectralField<f64>;
pub type PerturbationState64 = PerturbationState<f64>;
pub type NormTrace64 = NormTrace<f64>;
pub type LinearDecayTrace64 = LinearDecayTrace<f64>;
pub type DecayEnvelope64 = DecayEnvelope<f64>;
pub type IntegralReport64 = IntegralReport<f64>;
