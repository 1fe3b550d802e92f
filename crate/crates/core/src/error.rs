use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the library reports.
///
/// Numeric payloads are stored as `f64` regardless of the scalar type used
/// for the computation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("constitutive law `{law}` is not positive at v = {v}")]
    ConstitutiveLaw { law: &'static str, v: f64 },

    #[error("no spinodal: theta = {theta} is not below the critical temperature {theta_c}")]
    NoSpinodal { theta: f64, theta_c: f64 },

    #[error("degenerate spinodal: theta = {theta} equals the critical temperature")]
    DegenerateSpinodal { theta: f64 },

    #[error("spinodal root finding found {sign_changes} sign changes of p'(v), expected 2")]
    RootFinding { sign_changes: usize },

    #[error("hypothesis {hypothesis} violated: {detail}")]
    Hypothesis {
        hypothesis: &'static str,
        detail: String,
    },

    #[error("hyperbolicity: v_bar = {v_bar} is not interior to any phase with p'(v) < 0")]
    Hyperbolicity { v_bar: f64 },

    #[error("empty sample set: {0}")]
    EmptySamples(&'static str),

    #[error("not strictly dissipative: Re lambda = {re_lambda} at xi = {xi}")]
    NotStrictlyDissipative { xi: f64, re_lambda: f64 },

    #[error("not genuinely coupled: eigenvector ({}, {}) lies in ker A0 B at xi = {xi}", .vector[0], .vector[1])]
    NotGenuinelyCoupled { xi: f64, vector: [f64; 2] },

    #[error("structural check failed: {0}")]
    Structural(String),

    #[error("energy inequality fails for every k > 0 (witness xi = {xi})")]
    EnergyInequality { xi: f64 },

    #[error("no decay envelope with C <= {c_max} and k >= {k_min}")]
    EnvelopeNotFound { c_max: f64, k_min: f64 },

    #[error("grid mismatch: expected {expected} points, found {found}")]
    GridMismatch { expected: usize, found: usize },

    #[error("phase exit at t = {t}: v_bar + v = {v} left ({lo}, {hi})")]
    DomainViolation { t: f64, v: f64, lo: f64, hi: f64 },

    #[error("non-finite value encountered at t = {t}")]
    NonFinite { t: f64 },

    #[error("blow-up at t = {t}: norm grew by a factor {ratio}")]
    BlowUp { t: f64, ratio: f64 },

    #[error("decay fit: {0}")]
    Fit(String),

    #[error("initial amplitude {amplitude} exceeds the smallness cap {cap}")]
    Smallness { amplitude: f64, cap: f64 },

    #[error("quadrature did not converge: error estimate {error} above tolerance {tol}")]
    Quadrature { error: f64, tol: f64 },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable reason used by the command line front end.
    pub fn reason(&self) -> &'static str {
        match self {
            Error::Parameter(_) => "parameter",
            Error::ConstitutiveLaw { .. } => "constitutive law",
            Error::NoSpinodal { .. } => "no spinodal",
            Error::DegenerateSpinodal { .. } => "degenerate spinodal",
            Error::RootFinding { .. } => "root finding",
            Error::Hypothesis { .. } => "hypothesis",
            Error::Hyperbolicity { .. } => "hyperbolicity",
            Error::EmptySamples(_) => "empty samples",
            Error::NotStrictlyDissipative { .. } => "not strictly dissipative",
            Error::NotGenuinelyCoupled { .. } => "not genuinely coupled",
            Error::Structural(_) => "structural",
            Error::EnergyInequality { .. } => "energy inequality",
            Error::EnvelopeNotFound { .. } => "envelope",
            Error::GridMismatch { .. } => "grid mismatch",
            Error::DomainViolation { .. } => "phase exit",
            Error::NonFinite { .. } => "non-finite",
            Error::BlowUp { .. } => "blow-up",
            Error::Fit(_) => "fit",
            Error::Smallness { .. } => "smallness",
            Error::Quadrature { .. } => "quadrature",
            Error::Json(_) => "json",
        }
    }

    /// True for failures of the model or equilibrium validation stage.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::ConstitutiveLaw { .. }
                | Error::NoSpinodal { .. }
                | Error::DegenerateSpinodal { .. }
                | Error::RootFinding { .. }
                | Error::Hypothesis { .. }
                | Error::Hyperbolicity { .. }
        )
    }
}
