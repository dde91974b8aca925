use alloc::vec;
use alloc::vec::Vec;

use crate::{math, Error, Result};

/// Row-major square matrix used for the reference exponential and for the
/// small Hessenberg matrices of the Krylov method.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

// Scaling-and-squaring thresholds and Padé coefficients for degrees 3, 5, 7, 9, 13
// (Higham, "The scaling and squaring method for the matrix exponential revisited").
const THETA: [f64; 5] = [
    1.495_585_217_958_292e-2,
    2.539_398_330_063_23e-1,
    9.504_178_996_162_932e-1,
    2.097_847_961_257_068,
    5.371_920_351_148_152,
];
const PADE3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE7: [f64; 8] = [
    17_297_280.0,
    8_648_640.0,
    1_995_840.0,
    277_200.0,
    25_200.0,
    1_512.0,
    56.0,
    1.0,
];
const PADE9: [f64; 10] = [
    17_643_225_600.0,
    8_821_612_800.0,
    2_075_673_600.0,
    302_702_400.0,
    30_270_240.0,
    2_162_160.0,
    110_880.0,
    3_960.0,
    90.0,
    1.0,
];
const PADE13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        DenseMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// From row-major data of length `n * n`.
    pub fn from_row_major(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch {
                context: "dense matrix data",
                expected: n * n,
                found: data.len(),
            });
        }
        Ok(DenseMatrix { n, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Leading `k x k` block.
    pub fn leading(&self, k: usize) -> DenseMatrix {
        let mut m = Self::zeros(k);
        for i in 0..k {
            m.data[i * k..(i + 1) * k].copy_from_slice(&self.data[i * self.n..i * self.n + k]);
        }
        m
    }

    pub fn scaled(&self, a: f64) -> DenseMatrix {
        DenseMatrix {
            n: self.n,
            data: self.data.iter().map(|x| a * x).collect(),
        }
    }

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            let row = &mut out.data[i * n..(i + 1) * n];
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == 0.0 {
                    continue;
                }
                let brow = &other.data[k * n..(k + 1) * n];
                for (o, b) in row.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|i| {
                self.data[i * n..(i + 1) * n]
                    .iter()
                    .zip(x)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// Induced 1-norm.
    pub fn norm1(&self) -> f64 {
        let n = self.n;
        (0..n)
            .map(|j| (0..n).map(|i| self.get(i, j).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    fn add_scaled(&mut self, a: f64, other: &DenseMatrix) {
        for (x, y) in self.data.iter_mut().zip(&other.data) {
            *x += a * y;
        }
    }

    fn add_identity(&mut self, a: f64) {
        for i in 0..self.n {
            self.data[i * self.n + i] += a;
        }
    }

    /// Solves `self * X = rhs` by LU with partial pivoting.
    pub fn solve(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        let n = self.n;
        let mut a = self.data.clone();
        let mut b = rhs.data.clone();
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))
                .unwrap();
            if a[pivot * n + col] == 0.0 {
                return Err(Error::config("singular matrix in dense solve"));
            }
            if pivot != col {
                for k in 0..n {
                    a.swap(col * n + k, pivot * n + k);
                    b.swap(col * n + k, pivot * n + k);
                }
            }
            let d = a[col * n + col];
            for i in col + 1..n {
                let f = a[i * n + col] / d;
                if f == 0.0 {
                    continue;
                }
                a[i * n + col] = 0.0;
                for k in col + 1..n {
                    a[i * n + k] -= f * a[col * n + k];
                }
                for k in 0..n {
                    b[i * n + k] -= f * b[col * n + k];
                }
            }
        }
        for col in (0..n).rev() {
            let d = a[col * n + col];
            for k in 0..n {
                b[col * n + k] /= d;
            }
            for i in 0..col {
                let f = a[i * n + col];
                if f == 0.0 {
                    continue;
                }
                for k in 0..n {
                    b[i * n + k] -= f * b[col * n + k];
                }
            }
        }
        Ok(DenseMatrix { n, data: b })
    }

    /// `exp(self)` by scaling and squaring with a diagonal Padé approximant.
    pub fn expm(&self) -> Result<DenseMatrix> {
        let n = self.n;
        if n == 0 {
            return Ok(self.clone());
        }
        if self.data.iter().any(|x| !x.is_finite()) {
            return Err(Error::config("non-finite entry in matrix exponential"));
        }
        let norm = self.norm1();
        let ident = Self::identity(n);
        let a2 = self.matmul(self);
        for (theta, coeffs) in THETA[..4]
            .iter()
            .zip([&PADE3[..], &PADE5[..], &PADE7[..], &PADE9[..]])
        {
            if norm <= *theta {
                return self.pade_low(coeffs, &a2, &ident);
            }
        }
        let s = if norm > THETA[4] {
            math::ceil(math::log2(norm / THETA[4])).max(0.0) as i32
        } else {
            0
        };
        let scale = math::powi(2.0, -s);
        let a = self.scaled(scale);
        let a2 = a2.scaled(scale * scale);
        let mut r = a.pade13(&a2)?;
        for _ in 0..s {
            r = r.matmul(&r);
        }
        Ok(r)
    }

    fn pade_low(&self, b: &[f64], a2: &DenseMatrix, ident: &DenseMatrix) -> Result<DenseMatrix> {
        // U = A * sum_{odd k} b_k A^{k-1},  V = sum_{even k} b_k A^k
        let mut u_inner = ident.scaled(b[1]);
        let mut v = ident.scaled(b[0]);
        let mut power = ident.clone();
        let mut k = 2;
        while k < b.len() {
            power = power.matmul(a2);
            v.add_scaled(b[k], &power);
            if k + 1 < b.len() {
                u_inner.add_scaled(b[k + 1], &power);
            }
            k += 2;
        }
        let u = self.matmul(&u_inner);
        Self::pade_ratio(&u, &v)
    }

    fn pade13(&self, a2: &DenseMatrix) -> Result<DenseMatrix> {
        let b = &PADE13;
        let n = self.n;
        let a4 = a2.matmul(a2);
        let a6 = a4.matmul(a2);

        let mut inner = a6.scaled(b[13]);
        inner.add_scaled(b[11], &a4);
        inner.add_scaled(b[9], a2);
        let mut u = a6.matmul(&inner);
        u.add_scaled(b[7], &a6);
        u.add_scaled(b[5], &a4);
        u.add_scaled(b[3], a2);
        u.add_identity(b[1]);
        let u = self.matmul(&u);

        let mut inner = a6.scaled(b[12]);
        inner.add_scaled(b[10], &a4);
        inner.add_scaled(b[8], a2);
        let mut v = a6.matmul(&inner);
        v.add_scaled(b[6], &a6);
        v.add_scaled(b[4], &a4);
        v.add_scaled(b[2], a2);
        v.add_identity(b[0]);
        debug_assert_eq!(v.n, n);
        Self::pade_ratio(&u, &v)
    }

    fn pade_ratio(u: &DenseMatrix, v: &DenseMatrix) -> Result<DenseMatrix> {
        let mut p = v.clone();
        p.add_scaled(1.0, u);
        let mut q = v.clone();
        q.add_scaled(-1.0, u);
        q.solve(&p)
    }
}
