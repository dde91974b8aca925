use super::{krylov_expv, SparseOperator, StateVector};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpmMethod {
    /// Dense scaling and squaring; reference backend for small operators.
    DenseScalingSquaring,
    /// Arnoldi projection with adaptive substepping.
    KrylovArnoldi,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpmConfig {
    pub method: ExpmMethod,
    /// Relative tolerance on `exp(tau A) x`.
    pub tol: f64,
    pub max_krylov_dim: usize,
}

impl Default for ExpmConfig {
    fn default() -> Self {
        ExpmConfig {
            method: ExpmMethod::KrylovArnoldi,
            tol: 1e-10,
            max_krylov_dim: 30,
        }
    }
}

impl ExpmConfig {
    pub fn dense() -> Self {
        ExpmConfig {
            method: ExpmMethod::DenseScalingSquaring,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || !self.tol.is_finite() {
            return Err(Error::config("expm tolerance must be positive and finite"));
        }
        if self.max_krylov_dim < 2 {
            return Err(Error::config("max_krylov_dim must be at least 2"));
        }
        Ok(())
    }
}

/// Computes `exp(tau A) x` to relative accuracy `cfg.tol`.
pub fn expm_action(
    a: &SparseOperator,
    tau: f64,
    x: &StateVector,
    cfg: &ExpmConfig,
) -> Result<StateVector> {
    cfg.validate()?;
    if !tau.is_finite() || tau < 0.0 {
        return Err(Error::config("exponential time step must be finite and nonnegative"));
    }
    if a.dim() != x.len() {
        return Err(Error::DimensionMismatch {
            context: "exponential action",
            expected: a.dim(),
            found: x.len(),
        });
    }
    if tau == 0.0 {
        return Ok(x.clone());
    }
    let data = match cfg.method {
        ExpmMethod::DenseScalingSquaring => {
            let e = a.to_dense().scaled(tau).expm()?;
            e.matvec(x.as_slice())
        }
        ExpmMethod::KrylovArnoldi => {
            let x_norm = x.norm2();
            let first = krylov_expv(a, tau, x.as_slice(), cfg.tol * x_norm, cfg.max_krylov_dim)?;
            let y_norm = crate::math::sqrt(first.value.iter().map(|v| v * v).sum());
            // The first pass controls the error relative to |x|; when the action
            // contracts strongly, redo it against the size of the result.
            if first.error_estimate > cfg.tol * y_norm && y_norm > 0.0 {
                krylov_expv(a, tau, x.as_slice(), 0.5 * cfg.tol * y_norm, cfg.max_krylov_dim)?.value
            } else {
                first.value
            }
        }
    };
    x.with_data(data)
}
