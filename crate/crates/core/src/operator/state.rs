use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use crate::{math, Error, Result};

/// A named contiguous slice of a [`StateVector`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub name: String,
    pub range: Range<usize>,
}

/// Flat real vector with a declared block structure.
///
/// The blocks always partition `0..len`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    data: Vec<f64>,
    blocks: Vec<Block>,
}

impl StateVector {
    /// A vector with a single block named `"u"`.
    pub fn from_vec(data: Vec<f64>) -> Self {
        let n = data.len();
        StateVector {
            data,
            blocks: vec![Block {
                name: "u".to_string(),
                range: 0..n,
            }],
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self::from_vec(vec![0.0; n])
    }

    /// Builds a vector whose blocks have the given names and lengths, in order.
    pub fn with_blocks(data: Vec<f64>, layout: &[(&str, usize)]) -> Result<Self> {
        let total: usize = layout.iter().map(|(_, len)| len).sum();
        if total != data.len() {
            return Err(Error::DimensionMismatch {
                context: "block layout",
                expected: total,
                found: data.len(),
            });
        }
        let mut start = 0;
        let blocks = layout
            .iter()
            .map(|(name, len)| {
                let b = Block {
                    name: name.to_string(),
                    range: start..start + len,
                };
                start += len;
                b
            })
            .collect();
        Ok(StateVector { data, blocks })
    }

    /// Zero vector sharing the block layout of `self`.
    pub fn zeros_like(&self) -> Self {
        StateVector {
            data: vec![0.0; self.data.len()],
            blocks: self.blocks.clone(),
        }
    }

    /// Replaces the data, keeping the block layout.
    pub fn with_data(&self, data: Vec<f64>) -> Result<Self> {
        if data.len() != self.data.len() {
            return Err(Error::DimensionMismatch {
                context: "state data",
                expected: self.data.len(),
                found: data.len(),
            });
        }
        Ok(StateVector {
            data,
            blocks: self.blocks.clone(),
        })
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block(&self, name: &str) -> Option<&[f64]> {
        self.blocks
            .iter()
            .find(|b| b.name == name)
            .map(|b| &self.data[b.range.clone()])
    }

    pub fn block_mut(&mut self, name: &str) -> Option<&mut [f64]> {
        let range = self.blocks.iter().find(|b| b.name == name)?.range.clone();
        Some(&mut self.data[range])
    }

    /// `self += a * x`
    pub fn axpy(&mut self, a: f64, x: &StateVector) -> Result<()> {
        self.check_len(x.len(), "axpy")?;
        for (y, xi) in self.data.iter_mut().zip(&x.data) {
            *y += a * xi;
        }
        Ok(())
    }

    pub fn scale(&mut self, a: f64) {
        for y in &mut self.data {
            *y *= a;
        }
    }

    /// `a * self + b * other`
    pub fn lin_comb(&self, a: f64, b: f64, other: &StateVector) -> Result<StateVector> {
        self.check_len(other.len(), "linear combination")?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Ok(StateVector {
            data,
            blocks: self.blocks.clone(),
        })
    }

    pub fn sub(&self, other: &StateVector) -> Result<StateVector> {
        self.lin_comb(1.0, -1.0, other)
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn norm2(&self) -> f64 {
        math::sqrt(self.data.iter().map(|x| x * x).sum())
    }

    pub fn norm1(&self) -> f64 {
        self.data.iter().map(|x| x.abs()).sum()
    }

    pub fn norm_inf(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Smallest component and its index; `None` for an empty vector.
    pub fn min_component(&self) -> Option<(usize, f64)> {
        self.data
            .iter()
            .copied()
            .enumerate()
            .fold(None, |best, (i, x)| match best {
                Some((_, m)) if m <= x => best,
                _ => Some((i, x)),
            })
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    fn check_len(&self, n: usize, context: &'static str) -> Result<()> {
        if n != self.data.len() {
            return Err(Error::DimensionMismatch {
                context,
                expected: self.data.len(),
                found: n,
            });
        }
        Ok(())
    }
}
