//! Reference solutions, convergence-order tables and invariant reports.

use std::sync::Arc;
use std::time::{Duration, Instant};

use magnus_delay_core::magnus::{RunOutput, Trajectory};
use magnus_delay_core::operator::StateVector;
use magnus_delay_core::{run, ProblemSpec, RunOptions};
use rayon::prelude::*;
use serde::Serialize;

use crate::oracle::MethodOfSteps;
use crate::{HarnessError, Result};

/// Summary of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    #[serde(rename = "N")]
    pub n: usize,
    pub tau: f64,
    pub steps: usize,
    /// Smallest component over every checked full and half value.
    pub min_component: f64,
    pub max_mass_drift: f64,
    pub guard_checks: usize,
    pub guard_violations: usize,
    pub expm_calls: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

pub fn invariant_report(out: &RunOutput, wall: Option<Duration>) -> RunReport {
    let mut min_component = out.guard.min_component;
    for u in &out.trajectory.states {
        if let Some((_, m)) = u.min_component() {
            min_component = min_component.min(m);
        }
    }
    RunReport {
        n: out.trajectory.n,
        tau: out.trajectory.tau,
        steps: out.steps,
        min_component,
        max_mass_drift: out.guard.max_mass_drift,
        guard_checks: out.guard.checks,
        guard_violations: out.guard.violations,
        expm_calls: out.expm_calls,
        wall_time_s: wall.map(|d| d.as_secs_f64()),
    }
}

/// Runs and times one resolution.
pub fn timed_run(spec: &ProblemSpec, n: usize, opts: RunOptions) -> Result<(RunOutput, RunReport)> {
    let start = Instant::now();
    let out = run(spec, n, opts)?;
    let report = invariant_report(&out, Some(start.elapsed()));
    Ok((out, report))
}

/// Magnus run at `n_ref` keeping every step.
pub fn reference_trajectory(spec: &ProblemSpec, n_ref: usize, opts: RunOptions) -> Result<Trajectory> {
    let opts = RunOptions { stride: 1, ..opts };
    Ok(run(spec, n_ref, opts)?.trajectory)
}

/// Method-of-steps oracle for a scalar problem `u' = -rate F(u_t) u`.
pub fn scalar_oracle(spec: &ProblemSpec, rate: f64) -> Result<MethodOfSteps> {
    if spec.generator.dim() != 1 {
        return Err(HarnessError::Unsupported("the oracle handles scalar problems only".into()));
    }
    MethodOfSteps::solve(
        rate,
        spec.window,
        &spec.family,
        spec.history.as_ref(),
        spec.horizon,
        16,
        20,
    )
}

/// Largest deviation of `reference` from the oracle over all grid times;
/// fails when it exceeds `tol`.
pub fn cross_validate(
    spec: &ProblemSpec,
    reference: &Trajectory,
    oracle: &MethodOfSteps,
    tol: f64,
) -> Result<f64> {
    let max_diff = oracle_error(spec, reference, oracle);
    if !(max_diff <= tol) {
        return Err(HarnessError::ReferenceUntrusted { max_diff, tol });
    }
    Ok(max_diff)
}

/// `max_n |u_n - u_ref(n tau)|` over the recorded times, the reference run
/// having every step of a resolution divisible by `traj.n`.
pub fn grid_error(spec: &ProblemSpec, traj: &Trajectory, reference: &Trajectory) -> Result<f64> {
    if reference.n % traj.n != 0 {
        return Err(HarnessError::Study(format!(
            "reference resolution {} is not a multiple of {}",
            reference.n, traj.n
        )));
    }
    let ratio = reference.n / traj.n;
    let mut err = 0.0f64;
    for (step, u) in traj.steps.iter().zip(&traj.states) {
        let idx = step * ratio;
        let r = reference
            .steps
            .get(idx)
            .filter(|s| **s == idx)
            .map(|_| &reference.states[idx])
            .ok_or_else(|| HarnessError::Study(format!("reference lacks step {idx}")))?;
        err = err.max(spec.norm(&u.sub(r)?));
    }
    Ok(err)
}

/// `max_n |u_n - u(n tau)|` against the continuous oracle.
pub fn oracle_error(spec: &ProblemSpec, traj: &Trajectory, oracle: &MethodOfSteps) -> f64 {
    traj.times
        .iter()
        .zip(&traj.states)
        .map(|(t, u)| {
            let d = StateVector::from_vec(vec![u.as_slice()[0] - oracle.value(*t)]);
            spec.norm(&d)
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Order {
    Value(f64),
    /// Errors at the exponential's tolerance floor; no order is meaningful.
    Floor(FloorTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FloorTag {
    Floor,
}

impl Order {
    pub fn value(&self) -> Option<f64> {
        match self {
            Order::Value(p) => Some(*p),
            Order::Floor(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub tau: f64,
    /// `None` when the run failed.
    pub error: Option<f64>,
    /// Observed order between this row and the next.
    pub order: Option<Order>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderTable {
    pub rows: Vec<OrderRow>,
    pub reference: ReferenceInfo,
    /// Errors below this count as the tolerance floor.
    pub floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ReferenceInfo {
    Grid {
        #[serde(rename = "N_ref")]
        n_ref: usize,
        /// Deviation from the oracle, when cross-validated.
        cross_validation: Option<f64>,
    },
    Oracle,
}

impl OrderTable {
    /// Observed orders, in row order (`None` for rows without one).
    pub fn orders(&self) -> Vec<Option<Order>> {
        self.rows.iter().map(|r| r.order).collect()
    }

    /// Whether the last `count` defined orders lie in `[lo, hi]`; floor
    /// entries count as inside, failed rows as outside.
    pub fn last_orders_within(&self, lo: f64, hi: f64, count: usize) -> bool {
        if self.rows.iter().any(|r| r.failure.is_some()) {
            return false;
        }
        let defined: Vec<Order> = self.rows.iter().filter_map(|r| r.order).collect();
        if defined.len() < count || count == 0 {
            return false;
        }
        defined[defined.len() - count..].iter().all(|o| match o {
            Order::Value(p) => (lo..=hi).contains(p),
            Order::Floor(_) => true,
        })
    }

    fn fill_orders(&mut self) {
        for i in 0..self.rows.len() {
            let order = match (self.rows[i].error, self.rows.get(i + 1).and_then(|r| r.error)) {
                (Some(a), Some(b)) => {
                    if a < self.floor || b < self.floor {
                        Some(Order::Floor(FloorTag::Floor))
                    } else {
                        let ratio = self.rows[i + 1].n as f64 / self.rows[i].n as f64;
                        Some(Order::Value((a / b).ln() / ratio.ln()))
                    }
                }
                _ => None,
            };
            self.rows[i].order = order;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceMode {
    /// Magnus solution at `n_ref`, optionally cross-validated by the oracle.
    Grid,
    /// The oracle itself at every grid time (any `N`, e.g. odd).
    Oracle,
}

#[derive(Clone)]
pub struct ConvergenceStudy {
    pub spec: ProblemSpec,
    pub n_list: Vec<usize>,
    pub n_ref: usize,
    pub options: RunOptions,
    pub mode: ReferenceMode,
    pub oracle: Option<Arc<MethodOfSteps>>,
    /// Required agreement of the grid reference with the oracle.
    pub cross_tol: f64,
}

impl ConvergenceStudy {
    pub fn new(spec: ProblemSpec, n_list: Vec<usize>, n_ref: usize) -> Self {
        ConvergenceStudy {
            spec,
            n_list,
            n_ref,
            options: RunOptions::default(),
            mode: ReferenceMode::Grid,
            oracle: None,
            cross_tol: 1e-8,
        }
    }

    pub fn with_oracle(mut self, oracle: Arc<MethodOfSteps>, mode: ReferenceMode) -> Self {
        self.oracle = Some(oracle);
        self.mode = mode;
        self
    }

    pub fn with_options(mut self, options: RunOptions) -> Self {
        self.options = options;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_list.is_empty() {
            return Err(HarnessError::Study("N_list is empty".into()));
        }
        if self.n_list.windows(2).any(|w| w[0] >= w[1]) || self.n_list[0] == 0 {
            return Err(HarnessError::Study("N_list must be positive and increasing".into()));
        }
        match self.mode {
            ReferenceMode::Grid => {
                let max = *self.n_list.last().expect("nonempty");
                if self.n_ref < 8 * max {
                    return Err(HarnessError::Study(format!(
                        "N_ref = {} must be at least 8 * max(N_list) = {}",
                        self.n_ref,
                        8 * max
                    )));
                }
                if let Some(n) = self.n_list.iter().find(|n| self.n_ref % **n != 0) {
                    return Err(HarnessError::Study(format!("N = {n} does not divide N_ref = {}", self.n_ref)));
                }
            }
            ReferenceMode::Oracle => {
                if self.oracle.is_none() {
                    return Err(HarnessError::Study("oracle reference requested without an oracle".into()));
                }
            }
        }
        Ok(())
    }
}

/// Runs every resolution (in parallel) and tabulates errors and orders.
/// A failed run marks its row and the study continues.
pub fn convergence_study(study: &ConvergenceStudy) -> Result<OrderTable> {
    study.validate()?;
    let opts = RunOptions { stride: 1, ..study.options };
    let (reference, runs) = rayon::join(
        || -> Result<(Option<Trajectory>, ReferenceInfo)> {
            match study.mode {
                ReferenceMode::Oracle => Ok((None, ReferenceInfo::Oracle)),
                ReferenceMode::Grid => {
                    let r = reference_trajectory(&study.spec, study.n_ref, opts)?;
                    let cross = match &study.oracle {
                        Some(o) => Some(cross_validate(&study.spec, &r, o, study.cross_tol)?),
                        None => None,
                    };
                    Ok((
                        Some(r),
                        ReferenceInfo::Grid {
                            n_ref: study.n_ref,
                            cross_validation: cross,
                        },
                    ))
                }
            }
        },
        || {
            study
                .n_list
                .par_iter()
                .map(|&n| run(&study.spec, n, opts))
                .collect::<Vec<_>>()
        },
    );
    let (reference, info) = reference?;
    let mut rows = Vec::with_capacity(runs.len());
    for (&n, out) in study.n_list.iter().zip(runs) {
        let tau = study.spec.window.tau(n);
        let row = match out {
            Ok(out) => {
                let error = match (&reference, &study.oracle) {
                    (Some(r), _) => grid_error(&study.spec, &out.trajectory, r)?,
                    (None, Some(o)) => oracle_error(&study.spec, &out.trajectory, o),
                    (None, None) => unreachable!("validated"),
                };
                OrderRow { n, tau, error: Some(error), order: None, failure: None }
            }
            Err(e) => OrderRow { n, tau, error: None, order: None, failure: Some(e.to_string()) },
        };
        rows.push(row);
    }
    let mut table = OrderTable {
        rows,
        reference: info,
        floor: 100.0 * study.options.expm.tol,
    };
    table.fill_orders();
    Ok(table)
}

/// Errors of one resolution against references at `n_ref` and `2 n_ref`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TelescopeRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub error_ref: f64,
    pub error_double_ref: f64,
    /// `|e_ref - e_2ref| / e_2ref`
    pub relative_change: f64,
}

/// Checks that the table does not depend on the reference resolution.
pub fn telescoping(study: &ConvergenceStudy) -> Result<Vec<TelescopeRow>> {
    study.validate()?;
    let opts = RunOptions { stride: 1, ..study.options };
    let refs = [study.n_ref, 2 * study.n_ref]
        .par_iter()
        .map(|&n| reference_trajectory(&study.spec, n, opts))
        .collect::<Result<Vec<_>>>()?;
    study
        .n_list
        .par_iter()
        .map(|&n| {
            let out = run(&study.spec, n, opts)?;
            let a = grid_error(&study.spec, &out.trajectory, &refs[0])?;
            let b = grid_error(&study.spec, &out.trajectory, &refs[1])?;
            Ok(TelescopeRow {
                n,
                error_ref: a,
                error_double_ref: b,
                relative_change: (a - b).abs() / b,
            })
        })
        .collect()
}
