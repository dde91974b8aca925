use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Operand sizes do not agree.
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    /// A parameter or input is outside its admissible range.
    Config(String),
    /// The Krylov exponential did not reach the requested tolerance.
    KrylovNotConverged {
        residual: f64,
        krylov_dim: usize,
        substeps: usize,
    },
    /// A computed state left the invariant set and the guard was set to abort.
    GuardViolation {
        step: i64,
        half: bool,
        component: usize,
        min_component: f64,
        mass_drift: f64,
    },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch {
                context,
                expected,
                found,
            } => write!(
                f,
                "dimension mismatch in {context}: expected {expected}, found {found}"
            ),
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::KrylovNotConverged {
                residual,
                krylov_dim,
                substeps,
            } => write!(
                f,
                "Krylov exponential did not converge (residual estimate {residual:.3e}, \
                 subspace dimension {krylov_dim}, {substeps} substeps)"
            ),
            Error::GuardViolation {
                step,
                half,
                component,
                min_component,
                mass_drift,
            } => {
                let kind = if *half { "half-step" } else { "step" };
                write!(
                    f,
                    "invariant violated at {kind} {step}: component {component} = \
                     {min_component:.3e}, relative mass drift {mass_drift:.3e}"
                )
            }
        }
    }
}

impl core::error::Error for Error {}
