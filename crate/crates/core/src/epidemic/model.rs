use alloc::vec::Vec;

use super::{laplacian_neumann, Convolution, Grid2D, Kernel2D};
use crate::magnus::Generator;
use crate::operator::{SparseBuilder, SparseOperator, StateVector};
use crate::{Error, Result};

/// Rates of the delayed SIR model; diffusion has unit coefficient in every block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpidemicParams {
    /// Infection rate.
    pub beta: f64,
    /// Recovery rate.
    pub gamma: f64,
    /// Vaccination rate `S -> R`.
    pub nu: f64,
    /// Total population `int S + I + R`.
    pub mass: f64,
    pub kernel: Kernel2D,
}

impl Default for EpidemicParams {
    fn default() -> Self {
        EpidemicParams {
            beta: 4.0,
            gamma: 1.0,
            nu: 0.1,
            mass: 1.0,
            kernel: Kernel2D::default(),
        }
    }
}

impl EpidemicParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("beta", self.beta), ("gamma", self.gamma), ("nu", self.nu)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Config(alloc::format!(
                    "{name} must be a nonnegative finite rate, got {v}"
                )));
            }
        }
        if !(self.mass > 0.0) || !self.mass.is_finite() {
            return Err(Error::config("total mass must be positive and finite"));
        }
        self.kernel.validate()
    }
}

/// `Q(w)` for the state `(S, I, R)`:
///
/// ```text
/// [ D - beta G(w) - nu    0          0 ]
/// [ beta G(w)             D - gamma  0 ]
/// [ nu                    gamma      D ]
/// ```
///
/// with `D` the Neumann Laplacian and `G(w)` the convolution of the infected
/// block of `w`, acting as a multiplication operator.
#[derive(Debug, Clone)]
pub struct EpidemicModel {
    grid: Grid2D,
    params: EpidemicParams,
    laplacian: SparseOperator,
    conv: Convolution,
}

impl EpidemicModel {
    pub fn new(grid: Grid2D, params: EpidemicParams) -> Result<Self> {
        params.validate()?;
        Ok(EpidemicModel {
            grid,
            params,
            laplacian: laplacian_neumann(&grid)?,
            conv: Convolution::new(&grid, &params.kernel),
        })
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn params(&self) -> &EpidemicParams {
        &self.params
    }

    pub fn laplacian(&self) -> &SparseOperator {
        &self.laplacian
    }

    pub fn convolution(&self) -> &Convolution {
        &self.conv
    }

    /// State vector with blocks `S`, `I`, `R`.
    pub fn state(&self, s: &[f64], i: &[f64], r: &[f64]) -> Result<StateVector> {
        let n = self.grid.cells();
        let mut data = Vec::with_capacity(3 * n);
        data.extend_from_slice(s);
        data.extend_from_slice(i);
        data.extend_from_slice(r);
        StateVector::with_blocks(data, &[("S", n), ("I", n), ("R", n)])
    }

    /// `G(w)`: convolution of the infected block.
    pub fn infection_field(&self, w: &StateVector) -> Result<Vec<f64>> {
        let n = self.grid.cells();
        if w.len() != 3 * n {
            return Err(Error::DimensionMismatch {
                context: "epidemic state",
                expected: 3 * n,
                found: w.len(),
            });
        }
        Ok(self.conv.apply(&w.as_slice()[n..2 * n]))
    }

    /// `int (S + I + R)` by the midpoint rule.
    pub fn mass(&self, u: &StateVector) -> f64 {
        self.grid.cell_area() * u.sum()
    }

    fn assemble_with(&self, g: &[f64]) -> Result<SparseOperator> {
        let n = self.grid.cells();
        let EpidemicParams { beta, gamma, nu, .. } = self.params;
        let mut b = SparseBuilder::with_capacity(3 * n, 3 * self.laplacian.nnz() + 3 * n);
        for (r, c, v) in self.laplacian.entries() {
            if r == c {
                b.push(r, c, v - beta * g[r] - nu);
                b.push(n + r, n + c, v - gamma);
            } else {
                b.push(r, c, v);
                b.push(n + r, n + c, v);
            }
            b.push(2 * n + r, 2 * n + c, v);
        }
        for (k, gk) in g.iter().enumerate() {
            b.push(n + k, k, beta * gk);
            b.push(2 * n + k, k, nu);
            b.push(2 * n + k, n + k, gamma);
        }
        b.build()
    }
}

impl Generator for EpidemicModel {
    fn template(&self) -> StateVector {
        let n = self.grid.cells();
        let z = alloc::vec![0.0; n];
        self.state(&z, &z, &z).expect("block sizes match")
    }

    fn dim(&self) -> usize {
        3 * self.grid.cells()
    }

    fn assemble(&self, w: &StateVector) -> Result<SparseOperator> {
        let g = self.infection_field(w)?;
        self.assemble_with(&g)
    }

    /// `Q~` is linear in `w`, so its derivative is `Q~(dw)`: the two
    /// infection blocks built from `G(dw)`.
    fn derivative(&self, _w: &StateVector, dw: &StateVector) -> Result<SparseOperator> {
        let n = self.grid.cells();
        let dg = self.infection_field(dw)?;
        let beta = self.params.beta;
        let mut b = SparseBuilder::with_capacity(3 * n, 2 * n);
        for (k, g) in dg.iter().enumerate() {
            b.push(k, k, -beta * g);
            b.push(n + k, k, beta * g);
        }
        b.build()
    }
}
