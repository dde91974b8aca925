use alloc::collections::VecDeque;

use super::ProblemSpec;
use crate::operator::StateVector;
use crate::{Error, Result};

/// How the first `N` half values are taken from the history.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HalfMode {
    /// `phi((n + 1/2) tau - delta)`.
    #[default]
    Exact,
    /// `(phi(n tau - delta) + phi((n + 1) tau - delta)) / 2`; needs `phi` only on the grid.
    Averaged,
}

/// Values keyed by consecutive integers starting at `first`.
#[derive(Debug, Clone, Default)]
struct IndexedSeq {
    first: i64,
    items: VecDeque<Option<StateVector>>,
}

impl IndexedSeq {
    fn get(&self, k: i64) -> Option<&StateVector> {
        let i = usize::try_from(k.checked_sub(self.first)?).ok()?;
        self.items.get(i)?.as_ref()
    }

    fn insert(&mut self, k: i64, u: StateVector) {
        if self.items.is_empty() {
            self.first = k;
        }
        while k < self.first {
            self.items.push_front(None);
            self.first -= 1;
        }
        let i = (k - self.first) as usize;
        if i >= self.items.len() {
            self.items.resize(i + 1, None);
        }
        self.items[i] = Some(u);
    }

    fn last_key(&self) -> Option<i64> {
        let i = self.items.iter().rposition(Option::is_some)?;
        Some(self.first + i as i64)
    }

    fn len(&self) -> usize {
        self.items.iter().filter(|x| x.is_some()).count()
    }

    fn drop_before(&mut self, min: i64) {
        while self.first < min && !self.items.is_empty() {
            self.items.pop_front();
            self.first += 1;
        }
    }
}

/// Full values `u_n` (`n >= -N`) and half values `u_{n+1/2}` (`n >= 0`), both
/// keyed by the integer `n`. A half value with key `n` sits at time
/// `(n + 1/2) tau - delta`.
#[derive(Debug, Clone)]
pub struct HistoryStore {
    n: usize,
    tau: f64,
    full: IndexedSeq,
    half: IndexedSeq,
}

impl HistoryStore {
    pub fn new(n: usize, tau: f64) -> Self {
        HistoryStore {
            n,
            tau,
            full: IndexedSeq::default(),
            half: IndexedSeq::default(),
        }
    }

    pub fn resolution(&self) -> usize {
        self.n
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn full(&self, k: i64) -> Option<&StateVector> {
        self.full.get(k)
    }

    pub fn half(&self, k: i64) -> Option<&StateVector> {
        self.half.get(k)
    }

    pub fn insert_full(&mut self, k: i64, u: StateVector) {
        self.full.insert(k, u);
    }

    pub fn insert_half(&mut self, k: i64, u: StateVector) {
        self.half.insert(k, u);
    }

    /// Newest full index.
    pub fn full_frontier(&self) -> Option<i64> {
        self.full.last_key()
    }

    pub fn full_len(&self) -> usize {
        self.full.len()
    }

    pub fn half_len(&self) -> usize {
        self.half.len()
    }

    /// Drops full values with index `< full_min` and half values with index `< half_min`.
    pub fn evict_before(&mut self, full_min: i64, half_min: i64) {
        self.full.drop_before(full_min);
        self.half.drop_before(half_min);
    }
}

/// Seeds `full[-N..=0]` and `half[0..N)` from the initial history.
pub fn seed_history(spec: &ProblemSpec, n: usize, mode: HalfMode) -> Result<HistoryStore> {
    if n == 0 {
        return Err(Error::config("grid resolution N must be positive"));
    }
    let delta = spec.delta();
    let nf = n as f64;
    let mut store = HistoryStore::new(n, spec.window.tau(n));
    let ni = n as i64;
    for k in -ni..=0 {
        store.insert_full(k, spec.history_at(delta * (k as f64 / nf), 0)?);
    }
    for k in 0..ni {
        let u = match mode {
            HalfMode::Exact => spec.history_at(delta * ((k as f64 + 0.5) / nf - 1.0), 0)?,
            HalfMode::Averaged => {
                let a = spec.history_at(delta * ((k - ni) as f64 / nf), 0)?;
                let b = spec.history_at(delta * ((k + 1 - ni) as f64 / nf), 0)?;
                a.lin_comb(0.5, 0.5, &b)?
            }
        };
        store.insert_half(k, u);
    }
    Ok(store)
}
