//! Independent method-of-steps solver for the scalar test equation
//! `u'(t) = -a q(t) u(t)` with `q(t) = F(u_t)`.
//!
//! On a piece `[t_k, t_k + h]` with `h <= epsilon` the delayed argument only
//! sees earlier pieces, so `u(t) = u(t_k) exp(-a int_{t_k}^t q)` is explicit.
//! Each piece is a Chebyshev-Lobatto interpolant and all integrals are
//! Gauss-Legendre rules, so the solution is accurate to near roundoff as
//! long as breakpoints of `phi` lie on the piece grid.

use std::f64::consts::PI;

use magnus_delay_core::magnus::HistorySampler;
use magnus_delay_core::{DelayFamily, DelayWindow};

use crate::{HarnessError, Result};

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// How `q(t)` is formed from the past.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Delay {
    /// `q(t) = u(t - delta)`
    Point,
    /// `q(t) = mean of u over [t - delta, t - epsilon]`
    Mean,
}

#[derive(Debug, Clone)]
pub struct MethodOfSteps {
    delta: f64,
    epsilon: f64,
    rate: f64,
    delay: Delay,
    h: f64,
    /// Chebyshev-Lobatto nodes on `[-1, 1]`, ascending.
    nodes: Vec<f64>,
    bary: Vec<f64>,
    gl: (Vec<f64>, Vec<f64>),
    /// Node values of piece `j` on `[-delta + j h, -delta + (j + 1) h]`.
    pieces: Vec<Vec<f64>>,
}

impl MethodOfSteps {
    /// Solves to time `horizon`, with `pieces_per_epsilon` pieces per `epsilon`
    /// and `nodes` interpolation nodes per piece.
    pub fn solve(
        rate: f64,
        window: DelayWindow,
        family: &DelayFamily,
        history: &dyn HistorySampler,
        horizon: f64,
        pieces_per_epsilon: usize,
        nodes: usize,
    ) -> Result<Self> {
        let delay = match family {
            DelayFamily::Point => Delay::Point,
            DelayFamily::TrapezoidHalf | DelayFamily::UniformLatent => Delay::Mean,
            DelayFamily::Custom(_) => {
                return Err(HarnessError::Unsupported(
                    "the method-of-steps oracle needs a point or mean delay".into(),
                ))
            }
        };
        if nodes < 3 || pieces_per_epsilon == 0 {
            return Err(HarnessError::Unsupported("oracle needs >= 3 nodes and >= 1 piece".into()));
        }
        // With epsilon / delta = p / q, pieces of length delta / (K q) = epsilon / (K p)
        // tile both windows exactly.
        let per_delta = pieces_per_epsilon * *window.epsilon_ratio().denom() as usize;
        let h = window.delta() / per_delta as f64;
        let nodes_v: Vec<f64> = (0..nodes)
            .map(|j| -(PI * j as f64 / (nodes - 1) as f64).cos())
            .collect();
        let bary: Vec<f64> = (0..nodes)
            .map(|j| {
                let s = if j % 2 == 0 { 1.0 } else { -1.0 };
                if j == 0 || j == nodes - 1 {
                    0.5 * s
                } else {
                    s
                }
            })
            .collect();
        let mut me = MethodOfSteps {
            delta: window.delta(),
            epsilon: window.epsilon(),
            rate,
            delay,
            h,
            nodes: nodes_v,
            bary,
            gl: gauss_legendre(nodes + 4),
            pieces: Vec::new(),
        };
        for j in 0..per_delta {
            let a = -me.delta + j as f64 * h;
            let vals = me
                .nodes
                .iter()
                .map(|x| {
                    let s = (a + 0.5 * h * (x + 1.0)).min(0.0);
                    history.sample(s, 0).map(|u| u.as_slice()[0])
                })
                .collect::<core::result::Result<Vec<_>, _>>()?;
            me.pieces.push(vals);
        }
        let steps = (horizon / h - 1e-9).ceil().max(0.0) as usize;
        for k in 0..steps {
            let a = k as f64 * h;
            let u_a = *me.pieces.last().expect("history pieces").last().expect("nodes");
            let vals = me
                .nodes
                .iter()
                .map(|x| {
                    let t = a + 0.5 * h * (x + 1.0);
                    u_a * (-me.rate * me.integrate_q(a, t)).exp()
                })
                .collect();
            me.pieces.push(vals);
        }
        Ok(me)
    }

    /// End of the solved range.
    pub fn horizon(&self) -> f64 {
        -self.delta + self.pieces.len() as f64 * self.h
    }

    fn piece_of(&self, t: f64) -> (usize, f64) {
        let pos = (t + self.delta) / self.h;
        let j = (pos.floor().max(0.0) as usize).min(self.pieces.len() - 1);
        let x = 2.0 * (pos - j as f64) - 1.0;
        (j, x.clamp(-1.0, 1.0))
    }

    fn interp(&self, j: usize, x: f64) -> f64 {
        let vals = &self.pieces[j];
        let (mut num, mut den) = (0.0, 0.0);
        for ((xn, w), v) in self.nodes.iter().zip(&self.bary).zip(vals) {
            let d = x - xn;
            if d == 0.0 {
                return *v;
            }
            let c = w / d;
            num += c * v;
            den += c;
        }
        num / den
    }

    /// `u(t)` for `t` in `[-delta, horizon]`.
    pub fn value(&self, t: f64) -> f64 {
        let (j, x) = self.piece_of(t);
        self.interp(j, x)
    }

    /// `int_x^y u`, piece by piece.
    pub fn integral(&self, x: f64, y: f64) -> f64 {
        if y <= x {
            return 0.0;
        }
        let (gx, gw) = &self.gl;
        let mut total = 0.0;
        let first = ((x + self.delta) / self.h).floor() as i64;
        let last = ((y + self.delta) / self.h).ceil() as i64;
        for j in first.max(0)..last {
            let a = -self.delta + j as f64 * self.h;
            let (lo, hi) = (x.max(a), y.min(a + self.h));
            if hi <= lo {
                continue;
            }
            let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
            let j = (j as usize).min(self.pieces.len() - 1);
            for (g, w) in gx.iter().zip(gw) {
                let t = mid + half * g;
                let xl = 2.0 * (t - a) / self.h - 1.0;
                total += w * half * self.interp(j, xl);
            }
        }
        total
    }

    fn q(&self, s: f64) -> f64 {
        match self.delay {
            Delay::Point => self.value(s - self.delta),
            Delay::Mean => {
                self.integral(s - self.delta, s - self.epsilon) / (self.delta - self.epsilon)
            }
        }
    }

    fn integrate_q(&self, a: f64, t: f64) -> f64 {
        if t <= a {
            return 0.0;
        }
        let (gx, gw) = &self.gl;
        let (mid, half) = (0.5 * (a + t), 0.5 * (t - a));
        gx.iter().zip(gw).map(|(g, w)| w * half * self.q(mid + half * g)).sum()
    }
}
