use alloc::vec::Vec;

use super::Grid2D;
use crate::{Error, Result};

/// Infection kernel `h(z)` acting on the infected density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel2D {
    Zero,
    Constant { amplitude: f64 },
    /// `a (1 - |z|^2 / r^2)^3` for `|z| < r`; twice continuously differentiable.
    Bump { amplitude: f64, radius: f64 },
}

impl Default for Kernel2D {
    fn default() -> Self {
        Kernel2D::Bump {
            amplitude: 1.0,
            radius: 1.0,
        }
    }
}

impl Kernel2D {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Kernel2D::Zero => Ok(()),
            Kernel2D::Constant { amplitude } if amplitude >= 0.0 && amplitude.is_finite() => Ok(()),
            Kernel2D::Bump { amplitude, radius }
                if amplitude >= 0.0 && amplitude.is_finite() && radius > 0.0 && radius.is_finite() =>
            {
                Ok(())
            }
            _ => Err(Error::config(
                "kernel amplitude must be nonnegative and radius positive",
            )),
        }
    }

    pub fn eval(&self, dx: f64, dy: f64) -> f64 {
        match *self {
            Kernel2D::Zero => 0.0,
            Kernel2D::Constant { amplitude } => amplitude,
            Kernel2D::Bump { amplitude, radius } => {
                let q = (dx * dx + dy * dy) / (radius * radius);
                if q >= 1.0 {
                    0.0
                } else {
                    let t = 1.0 - q;
                    amplitude * t * t * t
                }
            }
        }
    }

    pub fn max_value(&self) -> f64 {
        match *self {
            Kernel2D::Zero => 0.0,
            Kernel2D::Constant { amplitude } | Kernel2D::Bump { amplitude, .. } => amplitude,
        }
    }
}

/// Midpoint-rule convolution `(G I)_k = hx hy sum_m h(z_k - x_m) I_m`,
/// with `h` tabulated once on all grid offsets.
#[derive(Debug, Clone, PartialEq)]
pub struct Convolution {
    nx: usize,
    ny: usize,
    area: f64,
    table: Vec<f64>,
}

impl Convolution {
    pub fn new(grid: &Grid2D, kernel: &Kernel2D) -> Self {
        let (nx, ny) = (grid.nx(), grid.ny());
        let (wx, wy) = (2 * nx - 1, 2 * ny - 1);
        let mut table = Vec::with_capacity(wx * wy);
        for dj in 0..wy {
            for di in 0..wx {
                let dx = (di as f64 - (nx - 1) as f64) * grid.hx();
                let dy = (dj as f64 - (ny - 1) as f64) * grid.hy();
                table.push(kernel.eval(dx, dy));
            }
        }
        Convolution {
            nx,
            ny,
            area: grid.cell_area(),
            table,
        }
    }

    pub fn cells(&self) -> usize {
        self.nx * self.ny
    }

    /// Kernel value for the offset between cells `k` and `m`.
    pub fn weight(&self, k: usize, m: usize) -> f64 {
        let (ik, jk) = (k % self.nx, k / self.nx);
        let (im, jm) = (m % self.nx, m / self.nx);
        let di = ik + self.nx - 1 - im;
        let dj = jk + self.ny - 1 - jm;
        self.table[di + (2 * self.nx - 1) * dj]
    }

    pub fn apply(&self, field: &[f64]) -> Vec<f64> {
        let n = self.cells();
        debug_assert_eq!(field.len(), n);
        let wx = 2 * self.nx - 1;
        let mut out = alloc::vec![0.0; n];
        for (m, &v) in field.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            let (im, jm) = (m % self.nx, m / self.nx);
            let av = self.area * v;
            for jk in 0..self.ny {
                let row = &self.table[(jk + self.ny - 1 - jm) * wx..];
                let base = jk * self.nx;
                for ik in 0..self.nx {
                    out[base + ik] += row[ik + self.nx - 1 - im] * av;
                }
            }
        }
        out
    }
}
