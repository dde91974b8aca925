//! Magnus-type time integration for quasilinear delay evolution equations
//!
//! The problems handled here have the form
//!
//! ```text
//! u'(t) = Q(F(u_t)) u(t),   t >= 0,
//! u(s)  = phi(s),           s in [-delta, 0],
//! ```
//!
//! where `u_t(s) = u(t + s)` is the delay history, `F` only looks at the window
//! `[-delta, -epsilon]` and `Q(w) = Q0 + Q~(w)` splits into a fixed (possibly stiff)
//! sparse part and a bounded state-dependent part. With `tau = delta / N` the
//! integrator advances
//!
//! ```text
//! u_{n+1/2} = phi((n + 1/2) tau - delta)                                 n <  N
//! u_{n+1/2} = exp(tau/2 Q(sum_l k_l F_l(u_{n-2N+l}))) u_{n-N}           n >= N
//! u_{n+1}   = exp(tau   Q(sum_l k_l F_l(u_{n+l+1/2}))) u_n
//! ```
//!
//! so each step is a single exponential action of an assembled generator. When
//! every `Q(w)` is Metzler with zero column sums, this keeps the state
//! nonnegative and conserves the total mass.
//!
//! Modules:
//!
//! - [`operator`]: sparse operators, state vectors and exponential actions.
//! - [`delay`]: delay windows and grid discretizations of the history functional.
//! - [`magnus`]: the integrator, history bookkeeping and invariant guards.
//! - [`scalar`]: the scalar test equation `u' = -u(t - delta) u` and variants.
//! - [`epidemic`]: the spatial delayed SIR model with diffusion.
//!
//! The crate is `no_std` (it needs `alloc`); enable the `std` feature for
//! `std::error::Error` integration in downstream code.
#![cfg_attr(not(any(test, feature = "std")), no_std)]
// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod delay;
pub mod epidemic;
mod error;
pub mod magnus;
pub(crate) mod math;
pub mod operator;
pub mod scalar;

pub use error::{Error, Result};
pub use num_rational::Ratio;


pub use delay::{DelayDiscretization, DelayFamily, DelayWindow, HistorySlice, PointwiseMap};
pub use operator::{ExpmConfig, ExpmMethod, SparseOperator, StateVector};
pub use magnus::{
    run, GuardAction, HalfMode, HistorySampler, HistoryStore, InvariantGuard, InvariantPredicate,
    MagnusIntegrator, ProblemSpec, RunOptions, RunOutput, Trajectory,
};
