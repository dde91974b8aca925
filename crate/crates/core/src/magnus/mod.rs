//! The two-level Magnus recursion with lazily computed half values.

mod compat;
mod guard;
mod integrator;
mod problem;
mod store;

pub use compat::{validate_history_compatibility, CompatibilizedHistory, HistoryResiduals};
pub use guard::{GuardAction, GuardCheck, GuardStats, InvariantGuard, InvariantPredicate};
pub use integrator::{
    run, Access, MagnusIntegrator, RunOptions, RunOutput, StepMetric, Trajectory,
};
pub use problem::{
    AutonomousGenerator, ConstantHistory, FnHistory, Generator, HistorySampler, ProblemSpec,
    TabulatedHistory,
};
pub use store::{seed_history, HalfMode, HistoryStore};
