pub mod grid;
pub mod simulate;
pub mod solver;

pub use grid::{PerturbationState, SpectralField, SpectralGrid};
pub use simulate::{simulate, simulate_field, InitShape, InitialData, NormTrace, SimulationConfig};
pub use solver::{
    admissible_interval, default_dt, h2_eval, rhs, rhs_with, step, EtdIntegrator, RhsForm,
};
