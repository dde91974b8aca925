use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::delay::{DelayDiscretization, DelayFamily, DelayWindow};
use crate::operator::{SparseOperator, StateVector};
use crate::{math, Error, Result};

/// The map `w -> Q(w) = Q0 + Q~(w)`.
pub trait Generator: Send + Sync {
    /// Zero state carrying the block layout of the state space.
    fn template(&self) -> StateVector;

    fn dim(&self) -> usize {
        self.template().len()
    }

    /// Assembles `Q(w)`.
    fn assemble(&self, w: &StateVector) -> Result<SparseOperator>;

    /// Directional derivative `Q~'(w)[dw]` of the state-dependent part.
    fn derivative(&self, w: &StateVector, dw: &StateVector) -> Result<SparseOperator>;
}

/// `Q(w) = A` for every `w`.
#[derive(Debug, Clone)]
pub struct AutonomousGenerator {
    op: SparseOperator,
    template: StateVector,
}

impl AutonomousGenerator {
    pub fn new(op: SparseOperator) -> Self {
        let template = StateVector::zeros(op.dim());
        AutonomousGenerator { op, template }
    }

    pub fn with_template(op: SparseOperator, template: StateVector) -> Result<Self> {
        if template.len() != op.dim() {
            return Err(Error::DimensionMismatch {
                context: "generator template",
                expected: op.dim(),
                found: template.len(),
            });
        }
        Ok(AutonomousGenerator { op, template })
    }
}

impl Generator for AutonomousGenerator {
    fn template(&self) -> StateVector {
        self.template.zeros_like()
    }

    fn assemble(&self, _w: &StateVector) -> Result<SparseOperator> {
        Ok(self.op.clone())
    }

    fn derivative(&self, _w: &StateVector, _dw: &StateVector) -> Result<SparseOperator> {
        SparseOperator::zero(self.op.dim())
    }
}

/// Initial history `phi` on `[-delta, 0]`.
pub trait HistorySampler: Send + Sync {
    /// The `order`-th derivative of `phi` at `s` (orders 0, 1, 2).
    fn sample(&self, s: f64, order: usize) -> Result<StateVector>;

    /// Whether derivatives and off-grid values are available.
    fn is_analytic(&self) -> bool {
        true
    }
}

/// `phi(s) = c`.
#[derive(Debug, Clone)]
pub struct ConstantHistory(pub StateVector);

impl HistorySampler for ConstantHistory {
    fn sample(&self, _s: f64, order: usize) -> Result<StateVector> {
        Ok(match order {
            0 => self.0.clone(),
            _ => self.0.zeros_like(),
        })
    }
}

/// History given in closed form by `f(s, order)`.
pub struct FnHistory<F> {
    f: F,
}

impl<F> FnHistory<F>
where
    F: Fn(f64, usize) -> StateVector + Send + Sync,
{
    pub fn new(f: F) -> Self {
        FnHistory { f }
    }
}

impl<F> HistorySampler for FnHistory<F>
where
    F: Fn(f64, usize) -> StateVector + Send + Sync,
{
    fn sample(&self, s: f64, order: usize) -> Result<StateVector> {
        if order > 2 {
            return Err(Error::config("history derivatives above second order are not provided"));
        }
        Ok((self.f)(s, order))
    }
}

/// History known only at `s_k = -delta + k delta / m`, `k = 0..=m`.
///
/// Works with the averaged half-value mode when the run resolution divides `m`.
#[derive(Debug, Clone)]
pub struct TabulatedHistory {
    delta: f64,
    values: Vec<StateVector>,
}

impl TabulatedHistory {
    pub fn new(delta: f64, values: Vec<StateVector>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::config("tabulated history needs at least two samples"));
        }
        Ok(TabulatedHistory { delta, values })
    }
}

impl HistorySampler for TabulatedHistory {
    fn sample(&self, s: f64, order: usize) -> Result<StateVector> {
        if order > 0 {
            return Err(Error::config(
                "tabulated history has no derivatives; an analytic sampler is required",
            ));
        }
        let m = (self.values.len() - 1) as f64;
        let pos = (s + self.delta) / self.delta * m;
        let k = math::round(pos);
        if (pos - k).abs() > 1e-9 * m.max(1.0) || k < 0.0 || k > m {
            return Err(Error::config(format!(
                "tabulated history has no sample at s = {s}; use the averaged half-value mode \
                 with a resolution dividing the table"
            )));
        }
        Ok(self.values[k as usize].clone())
    }

    fn is_analytic(&self) -> bool {
        false
    }
}

/// A quasilinear delay problem `u' = Q(F(u_t)) u` with history `phi`.
#[derive(Clone)]
pub struct ProblemSpec {
    pub generator: Arc<dyn Generator>,
    pub window: DelayWindow,
    pub family: DelayFamily,
    pub history: Arc<dyn HistorySampler>,
    pub horizon: f64,
    /// Quadrature weight of the discrete L2 norm (cell area; 1 for ODEs).
    pub norm_weight: f64,
}

impl core::fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("dim", &self.generator.dim())
            .field("window", &self.window)
            .field("family", &self.family)
            .field("horizon", &self.horizon)
            .field("norm_weight", &self.norm_weight)
            .finish_non_exhaustive()
    }
}

impl ProblemSpec {
    pub fn new(
        generator: Arc<dyn Generator>,
        window: DelayWindow,
        family: DelayFamily,
        history: Arc<dyn HistorySampler>,
        horizon: f64,
    ) -> Result<Self> {
        if !(horizon >= 0.0) || !horizon.is_finite() {
            return Err(Error::config("horizon T must be finite and nonnegative"));
        }
        let spec = ProblemSpec {
            generator,
            window,
            family,
            history,
            horizon,
            norm_weight: 1.0,
        };
        let phi0 = spec.history_at(0.0, 0)?;
        if phi0.len() != spec.generator.dim() {
            return Err(Error::DimensionMismatch {
                context: "initial history",
                expected: spec.generator.dim(),
                found: phi0.len(),
            });
        }
        Ok(spec)
    }

    pub fn with_norm_weight(mut self, w: f64) -> Self {
        self.norm_weight = w;
        self
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn delta(&self) -> f64 {
        self.window.delta()
    }

    /// `phi^{(order)}(s)`, rejecting `s` outside `[-delta, 0]`.
    pub fn history_at(&self, s: f64, order: usize) -> Result<StateVector> {
        let delta = self.window.delta();
        let slack = 1e-12 * delta;
        if !(s >= -delta - slack && s <= slack) {
            return Err(Error::config(format!(
                "history sampled at s = {s}, outside [-{delta}, 0]"
            )));
        }
        self.history.sample(s.clamp(-delta, 0.0), order)
    }

    pub fn discretize(&self, n: usize) -> Result<DelayDiscretization> {
        self.family.discretize(self.window, n)
    }

    /// Discrete L2 norm `sqrt(w * sum x_i^2)`.
    pub fn norm(&self, x: &StateVector) -> f64 {
        math::sqrt(self.norm_weight) * x.norm2()
    }

    /// Number of steps with `n tau <= T`.
    pub fn step_count(&self, n: usize) -> usize {
        let steps = self.horizon * n as f64 / self.window.delta();
        math::floor(steps + 1e-9) as usize
    }
}
