//! Run configuration: one JSON document shared by every subcommand.

use std::f64::consts::PI;
use std::path::Path;

use anyhow::Context;
use korteweg::nonlinear::simulate::{DEFAULT_FIT_WINDOW, DEFAULT_SOBOLEV_INDEX};
use korteweg::{
    make_equilibrium, EquilibriumState64, FluidModel64, InitShape, InitialData, ModelSpec,
};
use serde::{Deserialize, Serialize};

/// Model or equilibrium rejected before any computation.
#[derive(Debug)]
pub struct Validation(pub korteweg::Error);

impl std::fmt::Display for Validation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for Validation {}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumSpec {
    pub v_bar: f64,
    #[serde(default)]
    pub u_bar: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    #[serde(rename = "L")]
    pub length: f64,
    #[serde(rename = "N")]
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeSpec {
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(rename = "T")]
    pub t_final: f64,
    #[serde(default = "default_save_every")]
    pub save_every: usize,
}

fn default_save_every() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvelopeSpec {
    pub t: Vec<f64>,
    /// Random unit vectors per ξ for the energy inequality.
    pub energy_samples: usize,
}

impl Default for EnvelopeSpec {
    fn default() -> Self {
        Self {
            t: vec![0.1, 1.0, 10.0, 100.0],
            energy_samples: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinearDecaySpec {
    pub grid: GridSpec,
    pub init: InitialData<f64>,
    pub ells: Vec<u32>,
    pub window: (f64, f64),
    pub samples: usize,
}

impl Default for LinearDecaySpec {
    fn default() -> Self {
        Self {
            grid: GridSpec {
                length: 32768.0,
                n: 131072,
            },
            init: InitialData::gaussian(1.0, 1.0),
            ells: vec![0, 1, 2],
            window: korteweg::linear::LINEAR_FIT_WINDOW,
            samples: korteweg::linear::LINEAR_FIT_SAMPLES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegralsSpec {
    pub ells: Vec<u32>,
    pub k: Vec<f64>,
    pub c1: f64,
}

impl Default for IntegralsSpec {
    fn default() -> Self {
        Self {
            ells: vec![0, 1, 2, 3],
            k: vec![0.5, 1.0, 2.0],
            c1: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DebugSpec {
    /// Drop the viscous and capillary symbols (`B ≡ 0`).
    pub zero_b: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSpec,
    pub equilibrium: EquilibriumSpec,
    pub grid: GridSpec,
    pub init: InitialData<f64>,
    pub time: TimeSpec,
    pub s: usize,
    pub fit_window: (f64, f64),
    pub envelope: EnvelopeSpec,
    pub linear_decay: LinearDecaySpec,
    pub integrals: IntegralsSpec,
    pub debug: DebugSpec,
    pub seed: u64,
    /// When false, failed checks are reported but do not change the exit code.
    pub checks: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelSpec::default(),
            equilibrium: EquilibriumSpec {
                v_bar: 1.0,
                u_bar: 0.0,
            },
            grid: GridSpec {
                length: 400.0 * PI,
                n: 4096,
            },
            init: InitialData {
                shape: InitShape::Gaussian,
                amplitude: 1e-2,
                width: 5.0,
                seed: 0,
            },
            time: TimeSpec {
                dt: None,
                t_final: 500.0,
                save_every: default_save_every(),
            },
            s: DEFAULT_SOBOLEV_INDEX,
            fit_window: DEFAULT_FIT_WINDOW,
            envelope: EnvelopeSpec::default(),
            linear_decay: LinearDecaySpec::default(),
            integrals: IntegralsSpec::default(),
            debug: DebugSpec::default(),
            seed: 0,
            checks: true,
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>, seed: Option<u64>) -> anyhow::Result<Self> {
        let mut cfg: RunConfig = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading config {}", p.display()))?;
                serde_json::from_str(&text)
                    .with_context(|| format!("parsing config {}", p.display()))?
            }
            None => RunConfig::default(),
        };
        if let Some(seed) = seed {
            cfg.seed = seed;
        }
        cfg.init.seed = cfg.seed;
        cfg.linear_decay.init.seed = cfg.seed;
        Ok(cfg)
    }

    /// Builds and validates the model and its equilibrium.
    pub fn setup(&self) -> anyhow::Result<(FluidModel64, EquilibriumState64)> {
        let model = self.model.build::<f64>().map_err(Validation)?;
        let eq = make_equilibrium(&model, self.equilibrium.v_bar, self.equilibrium.u_bar)
            .map_err(Validation)?;
        let eq = if self.debug.zero_b {
            eq.without_dissipation()
        } else {
            eq
        };
        Ok((model, eq))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let cfg: RunConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn run_json_keys() {
        let text = r#"{
            "model": {"law": "adiabatic", "params": {"R_theta": 1.0, "gamma": 2.0}, "C0": 10.0},
            "equilibrium": {"v_bar": 1.0, "u_bar": 0.0},
            "grid": {"L": 100.0, "N": 256},
            "init": {"shape": "sech2", "amplitude": 0.001, "width": 2.0, "seed": 3},
            "time": {"dt": 0.01, "T": 2.0, "save_every": 5},
            "s": 4
        }"#;
        let cfg: RunConfig = serde_json::from_str(text).unwrap();
        assert_eq!(
            cfg.grid,
            GridSpec {
                length: 100.0,
                n: 256
            }
        );
        assert_eq!(cfg.init.shape, InitShape::Sech2);
        assert_eq!(cfg.time.dt, Some(0.01));
        assert_eq!(cfg.s, 4);
        assert!(serde_json::from_str::<RunConfig>(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn seed_flows_everywhere() {
        let cfg = RunConfig::load(None, Some(9)).unwrap();
        assert_eq!(
            (cfg.seed, cfg.init.seed, cfg.linear_decay.init.seed),
            (9, 9, 9)
        );
    }

    #[test]
    fn spinodal_equilibrium_is_a_validation_error() {
        let mut cfg = RunConfig::default();
        cfg.model = ModelSpec::from_json(
            r#"{"law": "vdw", "params": {"a": 3.0, "b": 0.3333333333333333, "R": 2.6666666666666665, "theta": 0.9}, "C0": 10.0}"#,
        )
        .unwrap();
        cfg.equilibrium.v_bar = 1.0;
        let err = cfg.setup().unwrap_err();
        let v = err.downcast_ref::<Validation>().unwrap();
        assert_eq!(v.0.reason(), "hyperbolicity");
    }
}
