use alloc::format;
use alloc::vec::Vec;

use super::{seed_history, GuardStats, HalfMode, HistoryStore, InvariantGuard, ProblemSpec};
use crate::delay::{DelayDiscretization, HistorySlice};
use crate::operator::{expm_action, ExpmConfig, StateVector};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub expm: ExpmConfig,
    pub guard: InvariantGuard,
    pub half_mode: HalfMode,
    /// Record every `stride`-th full value (and always the last).
    pub stride: usize,
    /// Keep the whole history instead of the `2N` look-back window.
    pub keep_history: bool,
    /// Log every store read (see [`MagnusIntegrator::access_log`]).
    pub record_access: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            expm: ExpmConfig::default(),
            guard: InvariantGuard::default(),
            half_mode: HalfMode::Exact,
            stride: 1,
            keep_history: false,
            record_access: false,
        }
    }
}

/// One read from the history store while computing `u_{step+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Access {
    Full { step: i64, index: i64 },
    Half { step: i64, index: i64 },
}

/// Guard metrics after one full step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepMetric {
    pub step: usize,
    pub t: f64,
    pub min_component: f64,
    pub mass_drift: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub n: usize,
    pub tau: f64,
    pub steps: Vec<usize>,
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last(&self) -> Option<&StateVector> {
        self.states.last()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub trajectory: Trajectory,
    pub guard: GuardStats,
    pub metrics: Vec<StepMetric>,
    pub steps: usize,
    pub expm_calls: usize,
}

/// Step-by-step driver of the two-level recursion for one resolution `N`.
pub struct MagnusIntegrator<'a> {
    spec: &'a ProblemSpec,
    disc: DelayDiscretization,
    opts: RunOptions,
    store: HistoryStore,
    /// Index of the newest full value.
    current: i64,
    guard: GuardStats,
    expm_calls: usize,
    log: Vec<Access>,
}

impl<'a> MagnusIntegrator<'a> {
    pub fn new(spec: &'a ProblemSpec, n: usize, opts: RunOptions) -> Result<Self> {
        opts.expm.validate()?;
        opts.guard.validate()?;
        if opts.stride == 0 {
            return Err(Error::config("trajectory stride must be positive"));
        }
        let disc = spec.discretize(n)?;
        let store = seed_history(spec, n, opts.half_mode)?;
        let mut me = MagnusIntegrator {
            spec,
            disc,
            opts,
            store,
            current: 0,
            guard: GuardStats::default(),
            expm_calls: 0,
            log: Vec::new(),
        };
        let check = me.opts.guard.check(me.store.full(0).expect("seeded"));
        me.guard.record(&check, 0, false);
        me.opts.guard.enforce(&check, 0, false)?;
        Ok(me)
    }

    pub fn resolution(&self) -> usize {
        self.disc.n()
    }

    pub fn tau(&self) -> f64 {
        self.disc.tau()
    }

    pub fn discretization(&self) -> &DelayDiscretization {
        &self.disc
    }

    pub fn store(&self) -> &HistoryStore {
        &self.store
    }

    /// Index of the newest full value `u_n`.
    pub fn current_step(&self) -> i64 {
        self.current
    }

    pub fn current(&self) -> &StateVector {
        self.store.full(self.current).expect("current value is kept")
    }

    pub fn guard_stats(&self) -> &GuardStats {
        &self.guard
    }

    pub fn expm_calls(&self) -> usize {
        self.expm_calls
    }

    pub fn access_log(&self) -> &[Access] {
        &self.log
    }

    /// Records a read of `u_index`; reads must never run ahead of the newest value.
    fn note_full(&mut self, index: i64) {
        debug_assert!(
            index <= self.current,
            "read of u_{index} before it was computed (newest is u_{})",
            self.current
        );
        if self.opts.record_access {
            self.log.push(Access::Full {
                step: self.current,
                index,
            });
        }
    }

    fn full_ref(&self, index: i64) -> &StateVector {
        self.store
            .full(index)
            .unwrap_or_else(|| panic!("history value u_{index} is missing from the store"))
    }

    /// `u_{k+1/2}`, computed on first use.
    pub fn half_step(&mut self, k: i64) -> Result<&StateVector> {
        if self.store.half(k).is_none() {
            let n = self.disc.n() as i64;
            let last = self.disc.last_index() as i64;
            if k < n || k - 2 * n + last > self.current || k - n > self.current {
                return Err(Error::config(format!(
                    "half value {k} needs full values beyond the newest one (u_{})",
                    self.current
                )));
            }
            if self.store.full(k - 2 * n).is_none() {
                return Err(Error::config(format!(
                    "half value {k} needs u_{} which was evicted; keep the history to revisit it",
                    k - 2 * n
                )));
            }
            for l in 0..=last {
                self.note_full(k - 2 * n + l);
            }
            self.note_full(k - n);
            let w = {
                let values = (0..=last).map(|l| self.full_ref(k - 2 * n + l)).collect();
                self.disc.evaluate(&HistorySlice::new(values))?
            };
            let q = self.spec.generator.assemble(&w)?;
            let base = self.full_ref(k - n);
            let u = expm_action(&q, 0.5 * self.disc.tau(), base, &self.opts.expm)?;
            self.expm_calls += 1;
            let check = self.opts.guard.check(&u);
            self.guard.record(&check, k, true);
            self.opts.guard.enforce(&check, k, true)?;
            self.store.insert_half(k, u);
        }
        if self.opts.record_access {
            self.log.push(Access::Half {
                step: self.current,
                index: k,
            });
        }
        Ok(self.store.half(k).expect("just inserted"))
    }

    /// Advances `u_n -> u_{n+1}` and returns the new value.
    pub fn full_step(&mut self) -> Result<&StateVector> {
        let k = self.current;
        let last = self.disc.last_index() as i64;
        for l in 0..=last {
            self.half_step(k + l)?;
        }
        self.note_full(k);
        let w = {
            let values = (0..=last)
                .map(|l| self.store.half(k + l).expect("computed above"))
                .collect();
            self.disc.evaluate(&HistorySlice::new(values))?
        };
        let q = self.spec.generator.assemble(&w)?;
        let u = expm_action(&q, self.disc.tau(), self.full_ref(k), &self.opts.expm)?;
        self.expm_calls += 1;
        let check = self.opts.guard.check(&u);
        self.guard.record(&check, k + 1, false);
        self.opts.guard.enforce(&check, k + 1, false)?;
        self.store.insert_full(k + 1, u);
        self.current = k + 1;
        if !self.opts.keep_history {
            let n = self.disc.n() as i64;
            self.store.evict_before(self.current - 2 * n, self.current);
        }
        Ok(self.current())
    }

    fn last_check(&self) -> (f64, f64) {
        let c = self.opts.guard.check(self.current());
        (c.min_component, c.mass_drift)
    }

    /// Runs to the horizon of the problem.
    pub fn run_to_end(mut self) -> Result<RunOutput> {
        let steps = self.spec.step_count(self.disc.n());
        let stride = self.opts.stride;
        let n = self.disc.n() as f64;
        let delta = self.spec.delta();
        let time = |k: usize| delta * (k as f64 / n);
        let mut traj = Trajectory {
            n: self.disc.n(),
            tau: self.disc.tau(),
            steps: alloc::vec![0],
            times: alloc::vec![0.0],
            states: alloc::vec![self.current().clone()],
        };
        let mut metrics = Vec::with_capacity(steps);
        for k in 1..=steps {
            self.full_step()?;
            let (min_component, mass_drift) = self.last_check();
            metrics.push(StepMetric {
                step: k,
                t: time(k),
                min_component,
                mass_drift,
            });
            if k % stride == 0 || k == steps {
                traj.steps.push(k);
                traj.times.push(time(k));
                traj.states.push(self.current().clone());
            }
        }
        Ok(RunOutput {
            trajectory: traj,
            guard: self.guard,
            metrics,
            steps,
            expm_calls: self.expm_calls,
        })
    }
}

/// Integrates `spec` on `[0, T]` with `tau = delta / n`.
pub fn run(spec: &ProblemSpec, n: usize, opts: RunOptions) -> Result<RunOutput> {
    MagnusIntegrator::new(spec, n, opts)?.run_to_end()
}
