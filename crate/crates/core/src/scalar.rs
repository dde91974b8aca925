//! The scalar test equation `u'(t) = -a F(u_t) u(t)`.

use alloc::sync::Arc;
use alloc::vec;

use crate::delay::{DelayFamily, DelayWindow};
use crate::magnus::{
    CompatibilizedHistory, ConstantHistory, Generator, HistorySampler, ProblemSpec,
};
use crate::operator::{SparseOperator, StateVector};
use crate::{Error, Result};

/// `Q(w) = [-a w]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarDelayModel {
    pub rate: f64,
}

impl Default for ScalarDelayModel {
    fn default() -> Self {
        ScalarDelayModel { rate: 1.0 }
    }
}

impl ScalarDelayModel {
    pub fn new(rate: f64) -> Self {
        ScalarDelayModel { rate }
    }
}

fn scalar_of(w: &StateVector) -> Result<f64> {
    if w.len() != 1 {
        return Err(Error::DimensionMismatch {
            context: "scalar model",
            expected: 1,
            found: w.len(),
        });
    }
    Ok(w.as_slice()[0])
}

impl Generator for ScalarDelayModel {
    fn template(&self) -> StateVector {
        StateVector::zeros(1)
    }

    fn dim(&self) -> usize {
        1
    }

    fn assemble(&self, w: &StateVector) -> Result<SparseOperator> {
        SparseOperator::diagonal(&[-self.rate * scalar_of(w)?])
    }

    fn derivative(&self, _w: &StateVector, dw: &StateVector) -> Result<SparseOperator> {
        SparseOperator::diagonal(&[-self.rate * scalar_of(dw)?])
    }
}

/// Built-in initial histories.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarHistory {
    /// `phi = 1`; violates the boundary conditions.
    Constant,
    /// `phi = 1 + c(s)` with the polynomial boundary correction.
    Compatibilized,
}

pub fn scalar_problem(
    model: ScalarDelayModel,
    window: DelayWindow,
    family: DelayFamily,
    history: Arc<dyn HistorySampler>,
    horizon: f64,
) -> Result<ProblemSpec> {
    ProblemSpec::new(Arc::new(model), window, family, history, horizon)
}

/// Scalar problem with `a = 1` and one of the built-in histories.
pub fn scalar_preset(
    window: DelayWindow,
    family: DelayFamily,
    history: ScalarHistory,
    horizon: f64,
    resolution: usize,
) -> Result<ProblemSpec> {
    let base = Arc::new(ConstantHistory(StateVector::from_vec(vec![1.0])));
    let spec = scalar_problem(ScalarDelayModel::default(), window, family, base, horizon)?;
    match history {
        ScalarHistory::Constant => Ok(spec),
        ScalarHistory::Compatibilized => {
            let fixed = CompatibilizedHistory::new(&spec, resolution)?;
            Ok(ProblemSpec {
                history: Arc::new(fixed),
                ..spec
            })
        }
    }
}
