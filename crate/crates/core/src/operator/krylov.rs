use alloc::vec;
use alloc::vec::Vec;

use super::{DenseMatrix, SparseOperator};
use crate::{math, Error, Result};

/// Result of [`krylov_expv`].
#[derive(Debug, Clone)]
pub struct KrylovOutcome {
    pub value: Vec<f64>,
    /// Accumulated local error estimate (absolute, same units as `value`).
    pub error_estimate: f64,
    pub substeps: usize,
    pub krylov_dim: usize,
}

// Relative to |A|; well below any tolerance we accept, above round-off noise.
const BREAKDOWN_TOL: f64 = 1e-13;
const SAFETY: f64 = 0.9;
const ACCEPT_SLACK: f64 = 1.2;
const MAX_REJECTIONS: usize = 10;
const MAX_SUBSTEPS: usize = 100_000;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    math::sqrt(dot(a, a))
}

// Two significant digits, rounded up.
fn round_step(t: f64) -> f64 {
    let s = math::powf(10.0, math::floor(math::log10(t)) - 1.0);
    math::ceil(t / s) * s
}

/// `exp(t A) v` by Arnoldi projection with adaptive substepping.
///
/// `abs_tol` bounds the accumulated error estimate over the whole interval
/// `[0, t]`. Subspaces have dimension at most `max_dim` (and at most `dim(A)`).
pub fn krylov_expv(
    a: &SparseOperator,
    t: f64,
    v: &[f64],
    abs_tol: f64,
    max_dim: usize,
) -> Result<KrylovOutcome> {
    let n = a.dim();
    if v.len() != n {
        return Err(Error::DimensionMismatch {
            context: "Krylov exponential",
            expected: n,
            found: v.len(),
        });
    }
    let anorm = a.norm_inf();
    let mut w = v.to_vec();
    let mut beta = norm(&w);
    if t == 0.0 || anorm == 0.0 || beta == 0.0 {
        return Ok(KrylovOutcome {
            value: w,
            error_estimate: 0.0,
            substeps: 0,
            krylov_dim: 0,
        });
    }
    let m = max_dim.min(n).max(1);
    // Tolerance per unit time so that local errors add up to at most abs_tol.
    let tol = abs_tol / t;
    let rndoff = anorm * f64::EPSILON;
    let mut k1 = 2usize;
    let mut xm = 1.0 / m as f64;
    let mp1 = (m + 1) as f64;
    let fact = math::powf(mp1 / core::f64::consts::E, mp1)
        * math::sqrt(2.0 * core::f64::consts::PI * mp1);
    let mut t_new = round_step((1.0 / anorm) * math::powf((fact * tol) / (4.0 * beta * anorm), xm));

    let mut basis: Vec<Vec<f64>> = vec![vec![0.0; n]; m + 1];
    let mut p = vec![0.0; n];
    let mut t_now = 0.0;
    let mut s_error = 0.0;
    let mut substeps = 0usize;
    let mut used_dim = 0usize;

    while t_now < t {
        substeps += 1;
        if substeps > MAX_SUBSTEPS {
            return Err(Error::KrylovNotConverged {
                residual: s_error,
                krylov_dim: m,
                substeps,
            });
        }
        let mut t_step = (t - t_now).min(t_new);
        let mut h = DenseMatrix::zeros(m + 2);
        for (b, x) in basis[0].iter_mut().zip(&w) {
            *b = x / beta;
        }
        let mut mb = m;
        let mut happy = false;
        for j in 0..m {
            a.apply_into(&basis[j], &mut p);
            for (i, vi) in basis.iter().enumerate().take(j + 1) {
                let hij = dot(vi, &p);
                for (pk, vk) in p.iter_mut().zip(vi) {
                    *pk -= hij * vk;
                }
                h.set(i, j, hij);
            }
            let s = norm(&p);
            if s < BREAKDOWN_TOL * anorm {
                k1 = 0;
                mb = j + 1;
                t_step = t - t_now;
                happy = true;
                break;
            }
            h.set(j + 1, j, s);
            for (b, pk) in basis[j + 1].iter_mut().zip(&p) {
                *b = pk / s;
            }
        }
        let mut avnorm = 0.0;
        if !happy {
            h.set(m + 1, m, 1.0);
            a.apply_into(&basis[m], &mut p);
            avnorm = norm(&p);
        }
        used_dim = used_dim.max(mb);

        let mut rejections = 0;
        let (f, err_loc) = loop {
            let mx = mb + k1;
            let f = h.leading(mx).scaled(t_step).expm()?;
            if happy {
                break (f, BREAKDOWN_TOL * beta);
            }
            let phi1 = (beta * f.get(m, 0)).abs();
            let phi2 = (beta * f.get(m + 1, 0) * avnorm).abs();
            let err_loc = if phi1 > 10.0 * phi2 {
                xm = 1.0 / m as f64;
                phi2
            } else if phi1 > phi2 {
                xm = 1.0 / m as f64;
                (phi1 * phi2) / (phi1 - phi2)
            } else {
                xm = 1.0 / (m.max(2) - 1) as f64;
                phi1
            };
            if err_loc <= ACCEPT_SLACK * t_step * tol {
                break (f, err_loc);
            }
            if rejections == MAX_REJECTIONS {
                return Err(Error::KrylovNotConverged {
                    residual: s_error + err_loc,
                    krylov_dim: m,
                    substeps,
                });
            }
            t_step = round_step(SAFETY * t_step * math::powf(t_step * tol / err_loc, xm));
            rejections += 1;
        };

        let mx = mb + k1.saturating_sub(1);
        w.iter_mut().for_each(|x| *x = 0.0);
        for (i, vi) in basis.iter().enumerate().take(mx) {
            let c = beta * f.get(i, 0);
            for (wk, vk) in w.iter_mut().zip(vi) {
                *wk += c * vk;
            }
        }
        beta = norm(&w);
        t_now += t_step;
        if beta == 0.0 {
            break;
        }
        t_new = round_step(SAFETY * t_step * math::powf(t_step * tol / err_loc, xm));
        s_error += err_loc.max(rndoff);
    }

    Ok(KrylovOutcome {
        value: w,
        error_estimate: s_error,
        substeps,
        krylov_dim: used_dim,
    })
}
