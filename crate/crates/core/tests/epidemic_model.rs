use std::sync::Arc;

use magnus_delay_core::epidemic::{
    epidemic_guard, epidemic_preset, initial_profile, laplacian_neumann, make_epidemic_problem,
    EpidemicModel, EpidemicParams, Grid2D, HistoryPreset, Kernel2D, ProfileParams,
};
use magnus_delay_core::magnus::{
    validate_history_compatibility, ConstantHistory, FnHistory, Generator,
};
use magnus_delay_core::operator::{expm_action, ExpmConfig, SparseOperator, StateVector};
use magnus_delay_core::{run, DelayFamily, DelayWindow, RunOptions};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn dense(a: &SparseOperator) -> DMatrix<f64> {
    let n = a.dim();
    let mut m = DMatrix::zeros(n, n);
    for (r, c, v) in a.entries() {
        m[(r, c)] = v;
    }
    m
}

fn model(n: usize, params: EpidemicParams) -> Arc<EpidemicModel> {
    Arc::new(EpidemicModel::new(Grid2D::square(n).unwrap(), params).unwrap())
}

#[test]
fn laplacian_of_two_cells() {
    let grid = Grid2D::new(2, 1, 2.0, 1.0).unwrap();
    let l = laplacian_neumann(&grid).unwrap();
    assert_eq!(dense(&l), DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 1.0, -1.0]));
}

#[test]
fn laplacian_annihilates_constants_with_exact_zero_sums() {
    for (nx, ny) in [(8, 8), (16, 16), (4, 8), (1, 8)] {
        let grid = Grid2D::new(nx, ny, 4.0, 4.0).unwrap();
        let l = laplacian_neumann(&grid).unwrap();
        assert!(l.is_exactly_symmetric());
        assert!(l.column_sums().iter().all(|c| *c == 0.0));
        let ones = StateVector::from_vec(vec![1.0; grid.cells()]);
        assert!(l.apply(&ones).unwrap().as_slice().iter().all(|v| *v == 0.0));
    }
}

#[test]
fn laplacian_spectrum_on_eight_by_eight() {
    let l = laplacian_neumann(&Grid2D::square(8).unwrap()).unwrap();
    let eig = dense(&l).symmetric_eigen().eigenvalues;
    assert!(eig.iter().all(|e| *e <= 1e-12), "{eig}");
    let zeros = eig.iter().filter(|e| e.abs() <= 1e-10).count();
    assert_eq!(zeros, 1);
    // Separable spectrum: -(4/h^2)(sin^2(pi p/16) + sin^2(pi q/16)), h = 1/2.
    let mut expect: Vec<f64> = (0..8)
        .flat_map(|p| (0..8).map(move |q| (p, q)))
        .map(|(p, q)| {
            let sp = (std::f64::consts::PI * p as f64 / 16.0).sin();
            let sq = (std::f64::consts::PI * q as f64 / 16.0).sin();
            -16.0 * (sp * sp + sq * sq)
        })
        .collect();
    let mut got: Vec<f64> = eig.iter().copied().collect();
    expect.sort_by(f64::total_cmp);
    got.sort_by(f64::total_cmp);
    for (a, b) in got.iter().zip(&expect) {
        assert!((a - b).abs() <= 1e-11, "{a} vs {b}");
    }
}

#[test]
fn zero_and_constant_kernels() {
    let grid = Grid2D::square(4).unwrap();
    let i: Vec<f64> = (0..16).map(|k| 0.1 * k as f64).collect();
    let zero = EpidemicModel::new(grid, EpidemicParams { kernel: Kernel2D::Zero, ..Default::default() }).unwrap();
    assert!(zero.convolution().apply(&i).iter().all(|v| *v == 0.0));

    let konst = EpidemicModel::new(
        grid,
        EpidemicParams {
            kernel: Kernel2D::Constant { amplitude: 1.0 },
            ..Default::default()
        },
    )
    .unwrap();
    let mass = grid.cell_area() * i.iter().sum::<f64>();
    for g in konst.convolution().apply(&i) {
        assert!((g - mass).abs() <= 1e-14 * mass);
    }
}

#[test]
fn generator_of_two_cells_by_hand() {
    let grid = Grid2D::new(2, 1, 2.0, 1.0).unwrap();
    let params = EpidemicParams {
        beta: 2.0,
        gamma: 0.5,
        nu: 0.1,
        mass: 1.0,
        kernel: Kernel2D::Constant { amplitude: 1.0 },
    };
    let m = EpidemicModel::new(grid, params).unwrap();
    let w = m.state(&[0.4, 0.1], &[0.2, 0.3], &[0.0, 0.0]).unwrap();
    let q = dense(&m.assemble(&w).unwrap());
    #[rustfmt::skip]
    let expect = DMatrix::from_row_slice(6, 6, &[
        -2.1,  1.0,  0.0,  0.0,  0.0,  0.0,
         1.0, -2.1,  0.0,  0.0,  0.0,  0.0,
         1.0,  0.0, -1.5,  1.0,  0.0,  0.0,
         0.0,  1.0,  1.0, -1.5,  0.0,  0.0,
         0.1,  0.0,  0.5,  0.0, -1.0,  1.0,
         0.0,  0.1,  0.0,  0.5,  1.0, -1.0,
    ]);
    assert!((q - expect).abs().max() <= 1e-15);
}

#[test]
fn zero_kernel_coupling_cancels_in_columns() {
    let m = model(4, EpidemicParams { kernel: Kernel2D::Zero, ..Default::default() });
    let q = m.assemble(&m.template()).unwrap();
    assert!(q.is_metzler());
    assert!(q.column_sums().iter().all(|c| c.abs() <= 1e-15));
}

#[test]
fn derivative_is_the_infection_part() {
    let m = model(4, EpidemicParams::default());
    let n = 16;
    let w = m.state(&[1.0; 16], &[0.3; 16], &[0.0; 16]).unwrap();
    let dw = m.state(&[0.0; 16], &[0.1; 16], &[0.0; 16]).unwrap();
    let mut wp = w.clone();
    wp.axpy(1.0, &dw).unwrap();
    let diff = m.assemble(&wp).unwrap().lin_comb(1.0, -1.0, &m.assemble(&w).unwrap()).unwrap();
    let d = m.derivative(&w, &dw).unwrap();
    let err = (dense(&diff) - dense(&d)).abs().max();
    assert!(err <= 1e-12, "{err}");
    assert_eq!(d.get(n, 0), -d.get(0, 0));
}

#[test]
fn no_infection_history_only_vaccinates() {
    let m = model(8, EpidemicParams::default());
    let grid = *m.grid();
    let n = grid.cells();
    // Nonuniform S so diffusion acts.
    let mut s: Vec<f64> = (0..n).map(|k| 1.0 + grid.center(k).0).collect();
    let scale = m.params().mass / (grid.cell_area() * s.iter().sum::<f64>());
    s.iter_mut().for_each(|v| *v *= scale);
    let u0 = m.state(&s, &vec![0.0; n], &vec![0.0; n]).unwrap();
    let spec = make_epidemic_problem(
        m.clone(),
        DelayWindow::point(1.0).unwrap(),
        DelayFamily::Point,
        Arc::new(ConstantHistory(u0)),
        1.5,
    )
    .unwrap();
    let out = run(&spec, 8, RunOptions::default()).unwrap();
    let nu = m.params().nu;
    let a = m.laplacian().lin_comb(1.0, -nu, &SparseOperator::identity(n).unwrap()).unwrap();
    let s0 = StateVector::from_vec(s);
    for (t, u) in out.trajectory.times.iter().zip(&out.trajectory.states) {
        assert!(u.block("I").unwrap().iter().all(|v| *v == 0.0));
        let exact = expm_action(&a, *t, &s0, &ExpmConfig::dense()).unwrap();
        let got = StateVector::from_vec(u.block("S").unwrap().to_vec());
        assert!(got.sub(&exact).unwrap().norm_inf() <= 1e-10 * s0.norm_inf(), "t = {t}");
        assert!((m.mass(u) - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn without_infection_rate_mass_is_conserved_and_infected_decay() {
    let m = model(8, EpidemicParams { beta: 0.0, ..Default::default() });
    let spec = epidemic_preset(
        m.clone(),
        DelayWindow::point(1.0).unwrap(),
        DelayFamily::Point,
        HistoryPreset::Default(ProfileParams::default()),
        2.0,
        8,
    )
    .unwrap();
    let out = run(&spec, 16, RunOptions::default()).unwrap();
    let area = m.grid().cell_area();
    let mut prev = f64::INFINITY;
    for u in &out.trajectory.states {
        assert!((m.mass(u) - 1.0).abs() <= 1e-12);
        let i_mass = area * u.block("I").unwrap().iter().sum::<f64>();
        assert!(i_mass < prev);
        prev = i_mass;
    }
}

#[test]
fn mirror_symmetry_is_preserved() {
    let m = model(8, EpidemicParams::default());
    let spec = epidemic_preset(
        m.clone(),
        DelayWindow::point(1.0).unwrap(),
        DelayFamily::Point,
        HistoryPreset::Default(ProfileParams::default()),
        1.0,
        8,
    )
    .unwrap();
    let out = run(&spec, 8, RunOptions::default()).unwrap();
    let grid = m.grid();
    let n = grid.cells();
    let u = out.trajectory.last().unwrap().as_slice();
    let scale = u.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    for b in 0..3 {
        for k in 0..n {
            for k2 in [grid.mirror_x(k), grid.mirror_y(k)] {
                assert!((u[b * n + k] - u[b * n + k2]).abs() <= 1e-10 * scale);
            }
        }
    }
}

#[test]
fn history_outside_invariant_set_is_rejected() {
    let m = model(4, EpidemicParams::default());
    let n = 16;
    let bad_mass = m.state(&[1.0; 16], &[0.0; 16], &[0.0; 16]).unwrap();
    let r = make_epidemic_problem(
        m.clone(),
        DelayWindow::point(1.0).unwrap(),
        DelayFamily::Point,
        Arc::new(ConstantHistory(bad_mass)),
        1.0,
    );
    assert!(r.is_err());
    let mut s = vec![1.0 / 16.0; n];
    s[0] = -0.01;
    s[1] += 0.01;
    let negative = m.state(&s, &[0.0; 16], &[0.0; 16]).unwrap();
    let r = make_epidemic_problem(
        m.clone(),
        DelayWindow::point(1.0).unwrap(),
        DelayFamily::Point,
        Arc::new(ConstantHistory(negative)),
        1.0,
    );
    assert!(r.is_err());
    // Mass drifting in time is caught too.
    let drift = FnHistory::new(move |s, _| {
        let mut v = vec![0.0; 3 * n];
        v[..n].iter_mut().for_each(|x| *x = (1.0 + 0.1 * s) / 16.0);
        StateVector::from_vec(v)
    });
    let r = make_epidemic_problem(
        m,
        DelayWindow::point(1.0).unwrap(),
        DelayFamily::Point,
        Arc::new(drift),
        1.0,
    );
    assert!(r.is_err());
}

#[test]
fn default_profile_has_requested_mass() {
    let m = model(16, EpidemicParams { mass: 2.5, ..Default::default() });
    let u = initial_profile(&m, &ProfileParams::default(), true).unwrap();
    assert!((m.mass(&u) - 2.5).abs() <= 1e-13);
    let area = m.grid().cell_area();
    let i_mass = area * u.block("I").unwrap().iter().sum::<f64>();
    assert!((i_mass - 0.25).abs() <= 1e-13);
    assert!(u.min_component().unwrap().1 >= 0.0);
}

#[test]
fn compatibilized_preset_stays_in_invariant_set() {
    for (window, family) in [
        (DelayWindow::point(1.0).unwrap(), DelayFamily::Point),
        (DelayWindow::half(1.0).unwrap(), DelayFamily::TrapezoidHalf),
    ] {
        let m = model(8, EpidemicParams::default());
        let p = ProfileParams::default();
        let spec = epidemic_preset(m, window, family, HistoryPreset::Compatibilized(p), 2.0, 64).unwrap();
        let r = validate_history_compatibility(&spec, 64, 1e-10).unwrap();
        assert!(r.compatible(), "{r:?}");
        let phi = spec.history.sample(-0.3, 0).unwrap();
        assert!(phi.min_component().unwrap().1 >= 0.0);
    }
    let m = model(8, EpidemicParams::default());
    let spec = epidemic_preset(
        m,
        DelayWindow::point(1.0).unwrap(),
        DelayFamily::Point,
        HistoryPreset::Default(ProfileParams::default()),
        2.0,
        64,
    )
    .unwrap();
    let r = validate_history_compatibility(&spec, 64, 1e-10).unwrap();
    assert!(r.r1 > 1e-3);
}

#[test]
fn smoke_run_keeps_invariants() {
    let m = model(8, EpidemicParams::default());
    let spec = epidemic_preset(
        m.clone(),
        DelayWindow::point(1.0).unwrap(),
        DelayFamily::Point,
        HistoryPreset::Default(ProfileParams::default()),
        1.0,
        8,
    )
    .unwrap();
    let opts = RunOptions {
        guard: epidemic_guard(&m, 1e-9),
        ..RunOptions::default()
    };
    let out = run(&spec, 8, opts).unwrap();
    assert_eq!(out.steps, 8);
    assert_eq!(out.guard.violations, 0);
    assert!(out.guard.min_component >= -1e-9);
    assert!(out.guard.max_mass_drift <= 1e-9);
    // u_0 and 8 full values; every half value needed up to T = delta is seeded.
    assert_eq!(out.guard.checks, 9);
}

fn nonneg_field(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..2.0, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generator_is_metzler_with_zero_column_sums(
        s in nonneg_field(16), i in nonneg_field(16), r in nonneg_field(16),
        beta in 0.0f64..10.0, gamma in 0.0f64..3.0, nu in 0.0f64..1.0,
        radius in 0.3f64..3.0,
    ) {
        let params = EpidemicParams {
            beta, gamma, nu, mass: 1.0,
            kernel: Kernel2D::Bump { amplitude: 1.0, radius },
        };
        let m = model(4, params);
        let q = m.assemble(&m.state(&s, &i, &r).unwrap()).unwrap();
        prop_assert!(q.is_metzler());
        let scale = q.norm1();
        prop_assert!(q.column_sums().iter().all(|c| c.abs() <= 4.0 * f64::EPSILON * scale));
    }

    #[test]
    fn convolution_is_well_adapted(i in nonneg_field(16), radius in 0.3f64..3.0) {
        let kernel = Kernel2D::Bump { amplitude: 1.5, radius };
        let grid = Grid2D::square(4).unwrap();
        let m = EpidemicModel::new(grid, EpidemicParams { kernel, ..Default::default() }).unwrap();
        let g = m.convolution().apply(&i);
        let l1 = grid.cell_area() * i.iter().sum::<f64>();
        prop_assert!(g.iter().all(|v| *v >= 0.0));
        let sup = g.iter().fold(0.0f64, |a, v| a.max(*v));
        prop_assert!(sup <= kernel.max_value() * l1 * (1.0 + 1e-12));
        // First differences: bounded by the largest kernel difference on the grid.
        let hx = grid.hx();
        let mut c1 = 0.0f64;
        for k in 0..16 {
            for mm in 0..16 {
                let (ik, _) = grid.coords(k);
                if ik + 1 < 4 {
                    let d = m.convolution().weight(k + 1, mm) - m.convolution().weight(k, mm);
                    c1 = c1.max(d.abs() / hx);
                }
            }
        }
        for k in 0..16 {
            if grid.coords(k).0 + 1 < 4 {
                prop_assert!(((g[k + 1] - g[k]) / hx).abs() <= c1 * l1 * (1.0 + 1e-12) + 1e-15);
            }
        }
    }
}
