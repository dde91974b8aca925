use crate::operator::{SparseBuilder, SparseOperator};
use crate::{Error, Result};

/// Uniform cell-centred grid on `[0, lx] x [0, ly]`. Cell `(i, j)` has index
/// `i + nx j` and centre `((i + 1/2) hx, (j + 1/2) hy)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
}

impl Grid2D {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::config("grid needs at least one cell per direction"));
        }
        if !(lx > 0.0 && ly > 0.0) || !lx.is_finite() || !ly.is_finite() {
            return Err(Error::config("grid side lengths must be positive and finite"));
        }
        Ok(Grid2D { nx, ny, lx, ly })
    }

    /// `n x n` cells on the square `[0, 4]^2`.
    pub fn square(n: usize) -> Result<Self> {
        Self::new(n, n, 4.0, 4.0)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn lx(&self) -> f64 {
        self.lx
    }

    pub fn ly(&self) -> f64 {
        self.ly
    }

    pub fn hx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.hx() * self.hy()
    }

    pub fn cells(&self) -> usize {
        self.nx * self.ny
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i + self.nx * j
    }

    pub fn coords(&self, k: usize) -> (usize, usize) {
        (k % self.nx, k / self.nx)
    }

    pub fn center(&self, k: usize) -> (f64, f64) {
        let (i, j) = self.coords(k);
        ((i as f64 + 0.5) * self.hx(), (j as f64 + 0.5) * self.hy())
    }

    /// Index of the cell mirrored across `x = lx / 2`.
    pub fn mirror_x(&self, k: usize) -> usize {
        let (i, j) = self.coords(k);
        self.index(self.nx - 1 - i, j)
    }

    pub fn mirror_y(&self, k: usize) -> usize {
        let (i, j) = self.coords(k);
        self.index(i, self.ny - 1 - j)
    }
}

/// Five-point Laplacian with homogeneous Neumann conditions via reflected
/// ghost cells: a missing neighbour equals the cell itself and drops out.
pub fn laplacian_neumann(grid: &Grid2D) -> Result<SparseOperator> {
    let (nx, ny) = (grid.nx(), grid.ny());
    let cx = 1.0 / (grid.hx() * grid.hx());
    let cy = 1.0 / (grid.hy() * grid.hy());
    let mut b = SparseBuilder::with_capacity(grid.cells(), 5 * grid.cells());
    for j in 0..ny {
        for i in 0..nx {
            let k = grid.index(i, j);
            let mut diag = 0.0;
            let mut link = |other: usize, c: f64, b: &mut SparseBuilder| {
                b.push(k, other, c);
                diag -= c;
            };
            if j > 0 {
                link(grid.index(i, j - 1), cy, &mut b);
            }
            if i > 0 {
                link(k - 1, cx, &mut b);
            }
            if i + 1 < nx {
                link(k + 1, cx, &mut b);
            }
            if j + 1 < ny {
                link(grid.index(i, j + 1), cy, &mut b);
            }
            b.push(k, k, diag);
        }
    }
    b.build_symmetric()
}
