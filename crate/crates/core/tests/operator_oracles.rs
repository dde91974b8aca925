//! Exponential-action checks against independent dense oracles.

use magnus_delay_core::operator::{expm_action, DenseMatrix, ExpmConfig, SparseOperator, StateVector};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Taylor series with scaling and squaring, summed until terms vanish.
fn taylor_expm(a: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    let n = a.nrows();
    let norm = (a * t).abs().row_sum().max();
    let s = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let b = a * (t / 2f64.powi(s));
    let mut term = DMatrix::<f64>::identity(n, n);
    let mut sum = term.clone();
    for k in 1..60 {
        term = &term * &b / k as f64;
        sum += &term;
        if term.abs().max() < 1e-18 * sum.abs().max() {
            break;
        }
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

/// `V exp(t L) V^T` for symmetric `a`.
fn eigen_expm(a: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(a.clone());
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| (t * l).exp()));
    &eig.eigenvectors * d * eig.eigenvectors.transpose()
}

fn to_nalgebra(op: &SparseOperator) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(op.dim(), op.dim());
    for (r, c, v) in op.entries() {
        m[(r, c)] = v;
    }
    m
}

fn random_sparse(rng: &mut ChaCha8Rng, n: usize, density: f64, scale: f64) -> SparseOperator {
    let mut t = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j || rng.gen::<f64>() < density {
                t.push((i, j, scale * rng.gen_range(-1.0..1.0)));
            }
        }
    }
    SparseOperator::from_triplets(n, t, false).unwrap()
}

fn rel_err(y: &[f64], z: &[f64]) -> f64 {
    let num: f64 = y.iter().zip(z).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let den: f64 = z.iter().map(|b| b * b).sum::<f64>().sqrt();
    num / den
}

#[test]
fn dense_expm_matches_taylor_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..30 {
        let n = 2 + trial % 12;
        let scale = [0.01, 0.3, 2.0, 10.0][trial % 4];
        let op = random_sparse(&mut rng, n, 0.4, scale);
        let ours = op.to_dense().expm().unwrap();
        let oracle = taylor_expm(&to_nalgebra(&op), 1.0);
        let ours = DMatrix::from_row_slice(n, n, ours.as_slice());
        let err = (&ours - &oracle).norm() / oracle.norm();
        assert!(err < 1e-11, "trial {trial}: relative error {err:e}");
    }
}

#[test]
fn dense_expm_matches_eigendecomposition_on_symmetric() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for trial in 0..20 {
        let n = 3 + trial;
        let base = random_sparse(&mut rng, n, 0.3, 3.0);
        let sym = base.lin_comb(0.5, 0.5, &transpose(&base)).unwrap();
        let ours = sym.to_dense().scaled(0.7).expm().unwrap();
        let oracle = eigen_expm(&to_nalgebra(&sym), 0.7);
        let ours = DMatrix::from_row_slice(n, n, ours.as_slice());
        let err = (&ours - &oracle).norm() / oracle.norm();
        assert!(err < 1e-12, "trial {trial}: relative error {err:e}");
    }
}

fn transpose(op: &SparseOperator) -> SparseOperator {
    SparseOperator::from_triplets(op.dim(), op.entries().map(|(r, c, v)| (c, r, v)).collect(), false)
        .unwrap()
}

#[test]
fn apply_matches_dense_rows() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let op = random_sparse(&mut rng, 5, 0.5, 1.0);
    let x: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let y = op.apply(&StateVector::from_vec(x.clone())).unwrap();
    let dense = op.to_dense();
    for i in 0..5 {
        let row: f64 = (0..5).map(|j| dense.get(i, j) * x[j]).sum();
        assert!((row - y.as_slice()[i]).abs() <= 1e-15 * (1.0 + row.abs()));
    }
}

#[test]
fn krylov_matches_dense_on_50x50_sparse() {
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let mut op = random_sparse(&mut rng, 50, 0.1, 1.0);
    // Scale so the spectral radius is at most 5 (bounded by the 1-norm).
    op = op.scaled(5.0 / op.norm1());
    let x = StateVector::from_vec((0..50).map(|_| rng.gen_range(-1.0..1.0)).collect());
    let y = expm_action(&op, 0.3, &x, &ExpmConfig::default()).unwrap();
    let oracle = DMatrix::from_row_slice(50, 50, op.to_dense().scaled(0.3).expm().unwrap().as_slice())
        * DVector::from_column_slice(x.as_slice());
    assert!(rel_err(y.as_slice(), oracle.as_slice()) <= 1e-10);
}

#[test]
fn krylov_handles_stiff_diffusion() {
    // 1D reflecting Laplacian with h = 1/64, tau * |A| ~ 1.6e3.
    let n = 64;
    let h2 = (n * n) as f64;
    let mut t = Vec::new();
    for i in 0..n {
        let mut diag = 0.0;
        if i > 0 {
            t.push((i, i - 1, h2));
            diag -= h2;
        }
        if i + 1 < n {
            t.push((i, i + 1, h2));
            diag -= h2;
        }
        t.push((i, i, diag));
    }
    let lap = SparseOperator::from_triplets(n, t, true).unwrap();
    let x = StateVector::from_vec((0..n).map(|i| (i as f64 / 8.0).sin() + 1.5).collect());
    let cfg = ExpmConfig::default();
    let y = expm_action(&lap, 0.1, &x, &cfg).unwrap();
    let oracle = eigen_expm(&to_nalgebra(&lap), 0.1) * DVector::from_column_slice(x.as_slice());
    assert!(rel_err(y.as_slice(), oracle.as_slice()) <= 10.0 * cfg.tol);
}

fn metzler_zero_colsum(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> SparseOperator {
    let mut t = Vec::new();
    let mut col = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.gen::<f64>() < 0.3 {
                let v = scale * rng.gen::<f64>();
                t.push((i, j, v));
                col[j] += v;
            }
        }
    }
    for (j, s) in col.iter().enumerate() {
        t.push((j, j, -s));
    }
    SparseOperator::from_triplets(n, t, false).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn krylov_within_tolerance_of_dense(seed in 0u64..10_000, n in 2usize..40, stiff in 0.1f64..40.0, tau in 0.01f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let op = random_sparse(&mut rng, n, 0.2, stiff);
        let x = StateVector::from_vec((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect());
        let cfg = ExpmConfig::default();
        let y = expm_action(&op, tau, &x, &cfg).unwrap();
        let z = expm_action(&op, tau, &x, &ExpmConfig::dense()).unwrap();
        prop_assert!(rel_err(y.as_slice(), z.as_slice()) <= 10.0 * cfg.tol);
    }

    #[test]
    fn semigroup_property(seed in 0u64..10_000, n in 2usize..30, tau in 0.01f64..0.5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let op = random_sparse(&mut rng, n, 0.3, 2.0);
        let x = StateVector::from_vec((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect());
        let cfg = ExpmConfig::default();
        let twice = expm_action(&op, tau, &expm_action(&op, tau, &x, &cfg).unwrap(), &cfg).unwrap();
        let once = expm_action(&op, 2.0 * tau, &x, &cfg).unwrap();
        let bound = 20.0 * cfg.tol * x.norm2() * (2.0 * tau * op.norm1()).exp();
        prop_assert!(twice.sub(&once).unwrap().norm2() <= bound);
    }

    #[test]
    fn metzler_keeps_nonnegative_and_colsum_conserves(seed in 0u64..10_000, n in 2usize..40, scale in 0.1f64..20.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let op = metzler_zero_colsum(&mut rng, n, scale);
        let x = StateVector::from_vec((0..n).map(|_| rng.gen::<f64>()).collect());
        let cfg = ExpmConfig::default();
        let y = expm_action(&op, 0.5, &x, &cfg).unwrap();
        let (_, min) = y.min_component().unwrap();
        prop_assert!(min >= -cfg.tol * x.norm2());
        prop_assert!((y.sum() - x.sum()).abs() <= cfg.tol * x.norm1());
    }
}

#[test]
fn dense_roundtrip_through_sparse() {
    let m = DenseMatrix::from_row_major(2, vec![1.0, 0.0, -2.0, 3.0]).unwrap();
    let s = SparseOperator::from_dense(&m).unwrap();
    assert_eq!(s.nnz(), 3);
    assert_eq!(s.to_dense(), m);
}

