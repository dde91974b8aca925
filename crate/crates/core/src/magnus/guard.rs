use crate::operator::StateVector;
use crate::{Error, Result};

/// The invariant set checked after every computed value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InvariantPredicate {
    /// No check.
    None,
    /// `u >= -tol` componentwise.
    Nonnegative,
    /// `u >= -tol * mass` componentwise and `|cell_weight * sum(u) - mass| <= tol * mass`.
    NonnegativeMass { mass: f64, cell_weight: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GuardAction {
    #[default]
    Record,
    Abort,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantGuard {
    pub predicate: InvariantPredicate,
    pub tolerance: f64,
    pub action: GuardAction,
}

impl Default for InvariantGuard {
    fn default() -> Self {
        InvariantGuard {
            predicate: InvariantPredicate::None,
            tolerance: 1e-9,
            action: GuardAction::Record,
        }
    }
}

/// Outcome of one guard evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuardCheck {
    pub min_index: usize,
    pub min_component: f64,
    /// Relative mass drift (0 without a mass predicate).
    pub mass_drift: f64,
    pub violated: bool,
}

/// Running summary over a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuardStats {
    pub checks: usize,
    pub violations: usize,
    pub min_component: f64,
    pub max_mass_drift: f64,
    /// `(index, is_half)` of the first violation.
    pub first_violation: Option<(i64, bool)>,
}

impl Default for GuardStats {
    fn default() -> Self {
        GuardStats {
            checks: 0,
            violations: 0,
            min_component: f64::INFINITY,
            max_mass_drift: 0.0,
            first_violation: None,
        }
    }
}

impl GuardStats {
    pub fn record(&mut self, check: &GuardCheck, index: i64, half: bool) {
        self.checks += 1;
        self.min_component = self.min_component.min(check.min_component);
        self.max_mass_drift = self.max_mass_drift.max(check.mass_drift);
        if check.violated {
            self.violations += 1;
            if self.first_violation.is_none() {
                self.first_violation = Some((index, half));
            }
        }
    }
}

impl InvariantGuard {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn nonnegative_mass(mass: f64, cell_weight: f64, tolerance: f64) -> Self {
        InvariantGuard {
            predicate: InvariantPredicate::NonnegativeMass { mass, cell_weight },
            tolerance,
            action: GuardAction::Record,
        }
    }

    pub fn with_action(mut self, action: GuardAction) -> Self {
        self.action = action;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance >= 0.0) {
            return Err(Error::config("guard tolerance must be nonnegative"));
        }
        if let InvariantPredicate::NonnegativeMass { mass, cell_weight } = self.predicate {
            if !(mass > 0.0) || !(cell_weight > 0.0) {
                return Err(Error::config("guard mass and cell weight must be positive"));
            }
        }
        Ok(())
    }

    pub fn check(&self, u: &StateVector) -> GuardCheck {
        let (min_index, min_component) = u.min_component().unwrap_or((0, 0.0));
        let finite = u.is_finite();
        let (floor, mass_drift) = match self.predicate {
            InvariantPredicate::None => (f64::NEG_INFINITY, 0.0),
            InvariantPredicate::Nonnegative => (-self.tolerance, 0.0),
            InvariantPredicate::NonnegativeMass { mass, cell_weight } => {
                let drift = (cell_weight * u.sum() - mass).abs() / mass;
                (-self.tolerance * mass, drift)
            }
        };
        let violated = match self.predicate {
            InvariantPredicate::None => false,
            _ => !finite || min_component < floor || mass_drift > self.tolerance,
        };
        GuardCheck {
            min_index,
            min_component,
            mass_drift,
            violated,
        }
    }

    pub(crate) fn enforce(&self, check: &GuardCheck, step: i64, half: bool) -> Result<()> {
        if check.violated && self.action == GuardAction::Abort {
            return Err(Error::GuardViolation {
                step,
                half,
                component: check.min_index,
                min_component: check.min_component,
                mass_drift: check.mass_drift,
            });
        }
        Ok(())
    }
}
