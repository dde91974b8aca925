//! Delay windows and grid discretizations of the history functional.
//!
//! A discretization replaces `F(xi)` by
//!
//! ```text
//! F_tau(xi) = sum_{l=0}^{L} k_l F_l(xi(-delta + l tau)),   L = floor((delta - epsilon) / tau)
//! ```
//!
//! on the grid `tau = delta / N`. `L` is computed in integer arithmetic from the
//! rational ratio `epsilon / delta`, so exact multiples never fall on the wrong
//! side of a floor.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use num_rational::Ratio;

use crate::operator::StateVector;
use crate::{math, Error, Result};

const MAX_RATIO_DENOMINATOR: i64 = 1_000_000;

/// The delay window `[-delta, -epsilon]` seen by the history functional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayWindow {
    delta: f64,
    epsilon_ratio: Ratio<i64>,
}

impl DelayWindow {
    /// Window from floating-point bounds; `epsilon / delta` must be a rational
    /// with a modest denominator (at most 10^6).
    pub fn new(delta: f64, epsilon: f64) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::config("delay delta must be positive and finite"));
        }
        if !(epsilon > 0.0) || epsilon > delta {
            return Err(Error::config(format!(
                "delay epsilon must lie in (0, delta], got {epsilon} with delta {delta}"
            )));
        }
        let ratio = rational_approximation(epsilon / delta, MAX_RATIO_DENOMINATOR)
            .ok_or_else(|| Error::config("epsilon / delta is not a rational with denominator <= 1e6"))?;
        Self::with_ratio(delta, ratio)
    }

    /// Window with `epsilon = ratio * delta`, `ratio` in `(0, 1]`.
    pub fn with_ratio(delta: f64, ratio: Ratio<i64>) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::config("delay delta must be positive and finite"));
        }
        if *ratio.numer() <= 0 || ratio > Ratio::from_integer(1) {
            return Err(Error::config("epsilon / delta must lie in (0, 1]"));
        }
        Ok(DelayWindow {
            delta,
            epsilon_ratio: ratio,
        })
    }

    /// Point delay: `epsilon = delta`.
    pub fn point(delta: f64) -> Result<Self> {
        Self::with_ratio(delta, Ratio::from_integer(1))
    }

    /// `epsilon = delta / 2`.
    pub fn half(delta: f64) -> Result<Self> {
        Self::with_ratio(delta, Ratio::new(1, 2))
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn epsilon(&self) -> f64 {
        self.delta * (*self.epsilon_ratio.numer() as f64) / (*self.epsilon_ratio.denom() as f64)
    }

    pub fn epsilon_ratio(&self) -> Ratio<i64> {
        self.epsilon_ratio
    }

    /// `floor((delta - epsilon) / tau)` for `tau = delta / n`, exactly.
    pub fn last_index(&self, n: usize) -> usize {
        let num = *self.epsilon_ratio.numer();
        let den = *self.epsilon_ratio.denom();
        ((n as i64 * (den - num)) / den) as usize
    }

    pub fn tau(&self, n: usize) -> f64 {
        self.delta / n as f64
    }
}

/// Best rational approximation by continued fractions, accepted only if it
/// reproduces `x` to about 1e-14.
fn rational_approximation(x: f64, max_den: i64) -> Option<Ratio<i64>> {
    let (mut h0, mut h1) = (0i64, 1i64);
    let (mut k0, mut k1) = (1i64, 0i64);
    let mut r = x;
    for _ in 0..64 {
        let a = math::floor(r) as i64;
        let h2 = a.checked_mul(h1)?.checked_add(h0)?;
        let k2 = a.checked_mul(k1)?.checked_add(k0)?;
        if k2 > max_den {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let approx = h1 as f64 / k1 as f64;
        if (approx - x).abs() <= 1e-14 * x.abs().max(1.0) {
            return Some(Ratio::new(h1, k1));
        }
        let frac = r - a as f64;
        if frac == 0.0 {
            break;
        }
        r = 1.0 / frac;
    }
    None
}

/// Pointwise map `F_l` applied to a history sample before weighting.
#[derive(Clone, Default)]
pub enum PointwiseMap {
    #[default]
    Identity,
    Custom(Arc<dyn Fn(&StateVector) -> StateVector + Send + Sync>),
}

impl PointwiseMap {
    pub fn is_identity(&self) -> bool {
        matches!(self, PointwiseMap::Identity)
    }
}

impl fmt::Debug for PointwiseMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PointwiseMap::Identity => f.write_str("Identity"),
            PointwiseMap::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// Family of discretizations, instantiated per grid resolution `N`.
#[derive(Debug, Clone, PartialEq)]
pub enum DelayFamily {
    /// `F(xi) = xi(-delta)`; requires `epsilon = delta`.
    Point,
    /// `F(xi) = (2/delta) int_{-delta}^{-delta/2} xi`, composite trapezoid
    /// (truncated for odd `N`); requires `epsilon = delta / 2`.
    TrapezoidHalf,
    /// `F(xi) = E xi(-S)` for a latency `S` uniform on `[epsilon, delta]`;
    /// trapezoid nodes with the remainder cell charged to the last node.
    UniformLatent,
    /// Fixed user weights; only valid for the `N` whose window length matches.
    Custom(Vec<f64>),
}

impl DelayFamily {
    pub fn discretize(&self, window: DelayWindow, n: usize) -> Result<DelayDiscretization> {
        match self {
            DelayFamily::Point => point_delay_discretization(window, n),
            DelayFamily::TrapezoidHalf => trapezoid_half_interval_discretization(window, n),
            DelayFamily::UniformLatent => uniform_latent_discretization(window, n),
            DelayFamily::Custom(w) => DelayDiscretization::custom(window, n, w.clone()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            DelayFamily::Point => "point",
            DelayFamily::TrapezoidHalf => "trapezoid-half",
            DelayFamily::UniformLatent => "uniform-latent",
            DelayFamily::Custom(_) => "custom",
        }
    }
}

/// Weights `k_l` and maps `F_l` for one grid resolution.
#[derive(Debug, Clone)]
pub struct DelayDiscretization {
    n: usize,
    window: DelayWindow,
    weights: Vec<f64>,
    exact: Option<Vec<Ratio<i64>>>,
    maps: Vec<PointwiseMap>,
}

/// History samples `xi(-delta + l tau)`, `l = 0..=L`, oldest first.
#[derive(Debug, Clone)]
pub struct HistorySlice<'a> {
    pub values: Vec<&'a StateVector>,
}

impl<'a> HistorySlice<'a> {
    pub fn new(values: Vec<&'a StateVector>) -> Self {
        HistorySlice { values }
    }
}

/// Only the oldest sample, weight one.
pub fn point_delay_discretization(window: DelayWindow, n: usize) -> Result<DelayDiscretization> {
    if window.epsilon_ratio() != Ratio::from_integer(1) {
        return Err(Error::config("point delay requires epsilon = delta"));
    }
    DelayDiscretization::from_exact(window, n, alloc::vec![Ratio::from_integer(1)])
}

/// Composite trapezoid weights for `(2/delta) int_{-delta}^{-delta/2}`.
///
/// Even `N`: `1/N, 2/N, ..., 2/N, 1/N` on `l = 0..=N/2`. Odd `N`: `1/N` then
/// `2/N` for `l = 1..=(N-1)/2`, which also charges the missing half cell to the
/// last node.
pub fn trapezoid_half_interval_discretization(
    window: DelayWindow,
    n: usize,
) -> Result<DelayDiscretization> {
    if window.epsilon_ratio() != Ratio::new(1, 2) {
        return Err(Error::config("trapezoid-half delay requires epsilon = delta / 2"));
    }
    if n < 2 {
        return Err(Error::config(format!("trapezoid-half delay requires N >= 2, got {n}")));
    }
    let n_i = n as i64;
    let inner = Ratio::new(2, n_i);
    let end = Ratio::new(1, n_i);
    let weights = if n % 2 == 0 {
        let half = n / 2;
        (0..=half)
            .map(|l| if l == 0 || l == half { end } else { inner })
            .collect::<Vec<_>>()
    } else {
        (0..=(n - 1) / 2)
            .map(|l| if l == 0 { end } else { inner })
            .collect::<Vec<_>>()
    };
    let disc = DelayDiscretization::from_exact(window, n, weights)?;
    if n % 2 == 0 && disc.exact_weight_sum() != Some(Ratio::from_integer(1)) {
        return Err(Error::config("trapezoid weights do not sum to one"));
    }
    Ok(disc)
}

/// Weights for the mean of `xi` over `[-delta, -epsilon]`.
///
/// In units of `delta` the window has length `1 - rho` and the nodes are
/// `1/N` apart; the composite trapezoid covers `L/N` of it and the rest
/// `1 - rho - L/N` goes to node `L` as a left rectangle.
pub fn uniform_latent_discretization(window: DelayWindow, n: usize) -> Result<DelayDiscretization> {
    if n == 0 {
        return Err(Error::config("grid resolution N must be positive"));
    }
    let rho = window.epsilon_ratio();
    let one = Ratio::from_integer(1);
    if rho >= one {
        return Err(Error::config("uniform latency requires epsilon < delta"));
    }
    let len = one - rho;
    let last = window.last_index(n);
    let h = Ratio::new(1, n as i64);
    let mut weights = alloc::vec![Ratio::from_integer(0); last + 1];
    for l in 0..last {
        weights[l] += h / 2;
        weights[l + 1] += h / 2;
    }
    weights[last] += len - h * last as i64;
    let weights = weights.into_iter().map(|w| w / len).collect();
    DelayDiscretization::from_exact(window, n, weights)
}

impl DelayDiscretization {
    fn from_exact(window: DelayWindow, n: usize, exact: Vec<Ratio<i64>>) -> Result<Self> {
        let weights = exact
            .iter()
            .map(|r| *r.numer() as f64 / *r.denom() as f64)
            .collect();
        let mut disc = Self::custom(window, n, weights)?;
        disc.exact = Some(exact);
        Ok(disc)
    }

    /// Arbitrary weights; their number must be `floor((delta - epsilon)/tau) + 1`.
    pub fn custom(window: DelayWindow, n: usize, weights: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::config("grid resolution N must be positive"));
        }
        let expected = window.last_index(n) + 1;
        if weights.len() != expected {
            return Err(Error::config(format!(
                "expected {expected} delay weights for N = {n}, got {}",
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::config("delay weights must be finite"));
        }
        let maps = alloc::vec![PointwiseMap::Identity; weights.len()];
        Ok(DelayDiscretization {
            n,
            window,
            weights,
            exact: None,
            maps,
        })
    }

    /// Replaces the pointwise maps (one per weight).
    pub fn with_maps(mut self, maps: Vec<PointwiseMap>) -> Result<Self> {
        if maps.len() != self.weights.len() {
            return Err(Error::config("one pointwise map per delay weight is required"));
        }
        self.maps = maps;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn window(&self) -> DelayWindow {
        self.window
    }

    pub fn tau(&self) -> f64 {
        self.window.tau(self.n)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn exact_weights(&self) -> Option<&[Ratio<i64>]> {
        self.exact.as_deref()
    }

    pub fn maps(&self) -> &[PointwiseMap] {
        &self.maps
    }

    /// `L = floor((delta - epsilon) / tau)`.
    pub fn last_index(&self) -> usize {
        self.weights.len() - 1
    }

    pub fn exact_weight_sum(&self) -> Option<Ratio<i64>> {
        self.exact
            .as_ref()
            .map(|w| w.iter().fold(Ratio::from_integer(0), |acc, r| acc + r))
    }

    pub fn abs_weight_sum(&self) -> f64 {
        self.weights.iter().map(|w| w.abs()).sum()
    }

    /// Checks `sum |k_l| <= bound`.
    pub fn check_weight_bound(&self, bound: f64) -> Result<()> {
        let s = self.abs_weight_sum();
        if s > bound * (1.0 + 4.0 * f64::EPSILON) {
            return Err(Error::config(format!(
                "sum of |delay weights| = {s} exceeds bound {bound}"
            )));
        }
        Ok(())
    }

    /// Nonnegative weights summing to one with identity maps: `F_tau` is a
    /// convex combination and preserves every convex invariant set.
    pub fn is_convex_combination(&self) -> bool {
        let sum_is_one = match self.exact_weight_sum() {
            Some(s) => s == Ratio::from_integer(1),
            None => (self.weights.iter().sum::<f64>() - 1.0).abs() <= 1e-14,
        };
        sum_is_one
            && self.weights.iter().all(|w| *w >= 0.0)
            && self.maps.iter().all(PointwiseMap::is_identity)
    }

    /// `sum_l k_l F_l(slice[l])`, accumulated left to right.
    pub fn evaluate(&self, slice: &HistorySlice<'_>) -> Result<StateVector> {
        if slice.values.len() != self.weights.len() {
            return Err(Error::DimensionMismatch {
                context: "delay history slice",
                expected: self.weights.len(),
                found: slice.values.len(),
            });
        }
        let mut acc = slice.values[0].zeros_like();
        for ((w, map), x) in self.weights.iter().zip(&self.maps).zip(&slice.values) {
            match map {
                PointwiseMap::Identity => acc.axpy(*w, x)?,
                PointwiseMap::Custom(f) => acc.axpy(*w, &f(x))?,
            }
        }
        Ok(acc)
    }

    /// Evaluates on a sampled function `s -> xi(s)` over the window.
    pub fn evaluate_fn(&self, xi: impl Fn(f64) -> Result<StateVector>) -> Result<StateVector> {
        let tau = self.tau();
        let delta = self.window.delta();
        let samples = (0..self.weights.len())
            .map(|l| xi(-delta + l as f64 * tau))
            .collect::<Result<Vec<_>>>()?;
        self.evaluate(&HistorySlice::new(samples.iter().collect()))
    }
}

/// `sum_l k_l F_l(slice[l])` for the given discretization.
pub fn evaluate_discretized(disc: &DelayDiscretization, slice: &HistorySlice<'_>) -> Result<StateVector> {
    disc.evaluate(slice)
}

/// Errors and observed orders of a quadrature refinement study.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureOrders {
    pub n: Vec<usize>,
    pub errors: Vec<f64>,
    /// `log2(e_N / e_2N)` between consecutive resolutions.
    pub orders: Vec<f64>,
}

/// Measures `|F(xi) - F_tau(xi)|` for a scalar test function over the given
/// resolutions (normally successive doublings) against the exact value of `F(xi)`.
pub fn quadrature_error_order(
    family: &DelayFamily,
    window: DelayWindow,
    resolutions: &[usize],
    xi: impl Fn(f64) -> f64,
    exact: f64,
) -> Result<QuadratureOrders> {
    let mut errors = Vec::with_capacity(resolutions.len());
    for &n in resolutions {
        let disc = family.discretize(window, n)?;
        let approx = disc.evaluate_fn(|s| Ok(StateVector::from_vec(alloc::vec![xi(s)])))?;
        errors.push((approx.as_slice()[0] - exact).abs());
    }
    let orders = errors
        .windows(2)
        .map(|e| math::log2(e[0] / e[1]))
        .collect();
    Ok(QuadratureOrders {
        n: resolutions.to_vec(),
        errors,
        orders,
    })
}
