use alloc::sync::Arc;

use super::{HistorySampler, ProblemSpec};
use crate::delay::DelayDiscretization;
use crate::operator::{apply, StateVector};
use crate::{Error, Result};

/// Residuals of the two boundary conditions linking `phi` to the equation at `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryResiduals {
    /// `|phi'(0) - Q(F(phi)) phi(0)|`
    pub r1: f64,
    /// `|phi''(0) - Q~'(F(phi))[F(phi')] phi(0) - Q(F(phi))^2 phi(0)|`
    pub r2: f64,
    pub threshold: f64,
    /// Resolution of the discretized `F` used for the evaluation.
    pub resolution: usize,
}

impl HistoryResiduals {
    pub fn first_passes(&self) -> bool {
        self.r1 <= self.threshold
    }

    pub fn second_passes(&self) -> bool {
        self.r2 <= self.threshold
    }

    pub fn compatible(&self) -> bool {
        self.first_passes() && self.second_passes()
    }
}

/// Defects `(Q phi(0) - phi'(0), Q~'[F(phi')] phi(0) + Q^2 phi(0) - phi''(0))`.
fn defects(
    spec: &ProblemSpec,
    history: &dyn HistorySampler,
    disc: &DelayDiscretization,
) -> Result<(StateVector, StateVector)> {
    if !history.is_analytic() {
        return Err(Error::config(
            "history compatibility needs an analytic history with derivatives",
        ));
    }
    let delta = spec.delta();
    let at = |s: f64, order: usize| history.sample(s.clamp(-delta, 0.0), order);
    let phi0 = at(0.0, 0)?;
    let d1 = at(0.0, 1)?;
    let d2 = at(0.0, 2)?;
    let f_phi = disc.evaluate_fn(|s| at(s, 0))?;
    let f_dphi = disc.evaluate_fn(|s| at(s, 1))?;
    let q = spec.generator.assemble(&f_phi)?;
    let dq = spec.generator.derivative(&f_phi, &f_dphi)?;
    let q_phi = apply(&q, &phi0)?;
    let qq_phi = apply(&q, &q_phi)?;
    let dq_phi = apply(&dq, &phi0)?;
    let a = q_phi.sub(&d1)?;
    let mut b = dq_phi.lin_comb(1.0, 1.0, &qq_phi)?;
    b.axpy(-1.0, &d2)?;
    Ok((a, b))
}

/// Evaluates the boundary residuals with `F` discretized at `resolution`.
pub fn validate_history_compatibility(
    spec: &ProblemSpec,
    resolution: usize,
    threshold: f64,
) -> Result<HistoryResiduals> {
    let disc = spec.discretize(resolution)?;
    let (a, b) = defects(spec, spec.history.as_ref(), &disc)?;
    Ok(HistoryResiduals {
        r1: spec.norm(&a),
        r2: spec.norm(&b),
        threshold,
        resolution,
    })
}

/// `phi + c` where `c` is supported in `[-eta, 0]`, `eta <= epsilon`, and
/// fixes both boundary conditions without changing `F(phi)`:
///
/// ```text
/// c(s) = (a s + b s^2 / 2) (1 + s / eta)^3
/// ```
///
/// A narrower support makes `c` smaller (`O(|a| eta + |b| eta^2)` after
/// absorbing the `6 a / eta` term), which helps keep `phi + c` in an invariant set.
#[derive(Clone)]
pub struct CompatibilizedHistory {
    base: Arc<dyn HistorySampler>,
    support: f64,
    a: StateVector,
    b: StateVector,
}

impl CompatibilizedHistory {
    /// Builds the correction for `spec` (with `F` discretized at `resolution`)
    /// on the full support `[-epsilon, 0]`.
    pub fn new(spec: &ProblemSpec, resolution: usize) -> Result<Self> {
        Self::with_support(spec, resolution, spec.window.epsilon())
    }

    pub fn with_support(spec: &ProblemSpec, resolution: usize, support: f64) -> Result<Self> {
        let epsilon = spec.window.epsilon();
        if !(support > 0.0 && support <= epsilon * (1.0 + 1e-12)) {
            return Err(Error::config("correction support must lie in (0, epsilon]"));
        }
        let disc = spec.discretize(resolution)?;
        let (a, beta) = defects(spec, spec.history.as_ref(), &disc)?;
        // c''(0) = b + 6 a / eta
        let b = beta.lin_comb(1.0, -6.0 / support, &a)?;
        Ok(CompatibilizedHistory {
            base: spec.history.clone(),
            support: support.min(epsilon),
            a,
            b,
        })
    }

    pub fn support(&self) -> f64 {
        self.support
    }

    pub fn slope(&self) -> &StateVector {
        &self.a
    }

    pub fn curvature(&self) -> &StateVector {
        &self.b
    }

    /// Coefficients of `a` and `b` in the `order`-th derivative of `c` at `s`.
    fn weights(&self, s: f64, order: usize) -> (f64, f64) {
        let e = self.support;
        if s <= -e {
            return (0.0, 0.0);
        }
        let x = 1.0 + s / e;
        let g = x * x * x;
        let g1 = 3.0 * x * x / e;
        let g2 = 6.0 * x / (e * e);
        let h = 0.5 * s * s;
        match order {
            0 => (s * g, h * g),
            1 => (g + s * g1, s * g + h * g1),
            _ => (2.0 * g1 + s * g2, g + 2.0 * s * g1 + h * g2),
        }
    }
}

impl HistorySampler for CompatibilizedHistory {
    fn sample(&self, s: f64, order: usize) -> Result<StateVector> {
        if order > 2 {
            return Err(Error::config("history derivatives above second order are not provided"));
        }
        let mut u = self.base.sample(s, order)?;
        let (wa, wb) = self.weights(s, order);
        u.axpy(wa, &self.a)?;
        u.axpy(wb, &self.b)?;
        Ok(u)
    }
}
