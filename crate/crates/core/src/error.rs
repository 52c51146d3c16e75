use thiserror::Error;

use crate::qmetrics::TwoQubitState;
use crate::tomography::MleDiagnostics;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of a conversion or formula.
    #[error("domain error: {0}")]
    Domain(String),

    /// A caller broke an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    /// A spectrum grid does not cover the pulse it is asked to hold.
    #[error("grid does not cover pulse '{pulse}': needs [{need_min:.6e}, {need_max:.6e}] rad/s, grid is [{have_min:.6e}, {have_max:.6e}]")]
    Coverage {
        pulse: String,
        need_min: f64,
        need_max: f64,
        have_min: f64,
        have_max: f64,
    },

    /// A grid is too coarse to resolve the spectral phase it carries.
    #[error("grid '{grid}' under-resolved: phase step {phase_step:.3} rad exceeds pi/16, needs at least {required_points} points")]
    Resolution {
        grid: String,
        phase_step: f64,
        required_points: usize,
    },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("degenerate channel {channel}: no signal, crosstalk or background weight")]
    DegenerateChannel { channel: String },

    #[error("maximum-likelihood reconstruction did not converge after {} iterations", diagnostics.iterations)]
    Convergence {
        best: Box<TwoQubitState>,
        diagnostics: Box<MleDiagnostics>,
    },

    #[error("{context}: {source}")]
    Scenario {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn with_context(self, context: impl Into<String>) -> Self {
        Error::Scenario {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Innermost error, looking through scenario context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Scenario { source, .. } => source.root(),
            other => other,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self.root() {
            Error::Convergence { .. } => 3,
            Error::Domain(_)
            | Error::Contract(_)
            | Error::Coverage { .. }
            | Error::Resolution { .. }
            | Error::DegenerateData(_)
            | Error::DegenerateChannel { .. }
            | Error::Parse(_) => 2,
            _ => 1,
        }
    }
}
