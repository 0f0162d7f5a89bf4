//! n = 4 coverage: two periodic y dimensions through the whole pipeline
//! (manufactured solve, direct-FD cross-check, frequency quadrature on S^3,
//! difference quotients along diagonal directions).

use branchsolve_core::diagnostics;
use branchsolve_core::fdref::direct_fd_reference;
use branchsolve_core::grid::Grid;
use branchsolve_core::modal::{ModalField, ModeTerm};
use branchsolve_core::mv::difference_quotient;
use branchsolve_core::poisson::{solve_dirichlet, PoissonProblem};
use num_complex::Complex;

fn manufactured_4d() -> (ModalField<f64>, ModalField<f64>) {
    let u = ModalField::new(vec![
        ModeTerm {
            amp: Complex::new(1.0, 0.0),
            m: 3,
            z: vec![0, 0],
            radial: vec![(1.0, 3), (0.5, 7)],
        },
        ModeTerm {
            amp: Complex::new(0.4, 0.2),
            m: 9,
            z: vec![1, -1],
            radial: vec![(1.0, 9)],
        },
    ]);
    let psi = ModalField::new(vec![ModeTerm {
        amp: Complex::new(0.3, 0.0),
        m: 3,
        z: vec![0, 1],
        radial: vec![(1.0, 7)],
    }]);
    (u, psi)
}

fn problem_on(grid: &Grid<f64>) -> (PoissonProblem<f64>, branchsolve_core::field::SheetedField<f64>) {
    let (u, psi) = manufactured_4d();
    let lap_u = u.laplacian(grid.q(), grid.rho()).unwrap();
    let lap_psi = psi.laplacian(grid.q(), grid.rho()).unwrap();
    let g_field = lap_u
        .sample_sheeted(grid)
        .lin_comb(1.0, &lap_psi.sample_sheeted(grid), -1.0)
        .unwrap();
    let mut p = PoissonProblem::new(grid.clone(), 1, u.sample_trace(grid));
    p.g = Some(g_field);
    p.flux = Some(psi.sample_gradient_sheeted(grid));
    p.sym_tol = 1e-9;
    (p, u.sample_sheeted(grid))
}

#[test]
fn manufactured_solve_converges_in_four_dimensions() {
    let tau = std::f64::consts::TAU;
    let mut errs = Vec::new();
    for nr_hat in [17usize, 33, 65] {
        let g = Grid::<f64>::new(2, 3, nr_hat, 24, vec![4, 4], vec![tau, tau]).unwrap();
        let (p, exact) = problem_on(&g);
        let (u, report) = solve_dirichlet(&p).unwrap();
        errs.push(u.max_diff(&exact).unwrap());
        assert!(report.weak_residual <= 1e-8);
        assert!(report.forbidden_mode_energy <= 1e-12);
    }
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.4..=4.6).contains(&ratio), "errors {errs:?}");
    }
}

#[test]
fn direct_solver_agrees_in_four_dimensions() {
    let tau = std::f64::consts::TAU;
    let g = Grid::<f64>::new(2, 3, 33, 24, vec![8, 8], vec![tau, tau]).unwrap();
    let (p, _) = problem_on(&g);
    let (u_spec, _) = solve_dirichlet(&p).unwrap();
    let u_fd = direct_fd_reference(&p).unwrap();
    let rel = u_spec.max_diff(&u_fd).unwrap() / u_fd.sup_abs();
    assert!(rel <= 0.05, "4d cross-solver relative L-inf {rel}");
}

#[test]
fn frequency_of_homogeneous_field_on_s3() {
    // y-independent branched harmonic in n = 4: N is still the degree
    let tau = std::f64::consts::TAU;
    let g = Grid::<f64>::new(2, 3, 129, 48, vec![2, 2], vec![tau, tau]).unwrap();
    let f = ModalField::harmonic(Complex::new(1.0, 0.0), 3, vec![0, 0]).sample_sheeted(&g);
    let prof = diagnostics::frequency_function(&f, &[0.0, 0.0], &[0.1, 0.3]).unwrap();
    for (rho, v) in prof.radii.iter().zip(prof.values.iter()) {
        assert!((v - 1.5).abs() < 5e-3, "N({rho}) = {v} in n = 4");
    }
}

#[test]
fn diagonal_difference_quotients_in_two_y_dimensions() {
    let tau = std::f64::consts::TAU;
    let g = Grid::<f64>::new(2, 3, 9, 24, vec![8, 8], vec![2.0, 3.0]).unwrap();
    let f = branchsolve_core::field::SheetedField::sample(g.clone(), 1, |_, _, _, y, _| {
        (tau * y[0] / 2.0).sin() + 0.5 * (tau * y[1] / 3.0).cos()
    });
    // lattice-aligned diagonal shift: one spacing in each dimension
    let eta = [2.0 / 8.0, 3.0 / 8.0];
    let d = difference_quotient(&f, 1.0, &eta).unwrap();
    let mut worst = 0.0f64;
    for t0 in 0..8 {
        for t1 in 0..8 {
            let t = g.y_flat(&[t0, t1]);
            let (y0, y1) = (2.0 * t0 as f64 / 8.0, 3.0 * t1 as f64 / 8.0);
            let here = (tau * y0 / 2.0).sin() + 0.5 * (tau * y1 / 3.0).cos();
            let there = (tau * (y0 + eta[0]) / 2.0).sin() + 0.5 * (tau * (y1 + eta[1]) / 3.0).cos();
            worst = worst.max((d.at(0, 3, 5, t, 0) - (there - here)).abs());
        }
    }
    assert!(worst < 1e-13, "diagonal exact-shift quotient error {worst}");
    // non-lattice diagonal: spectral path, first-order in h
    let mut errs = Vec::new();
    for &h in &[0.08, 0.04] {
        let d = difference_quotient(&f, h, &[1.0, 1.0]).unwrap();
        let mut worst = 0.0f64;
        for t0 in 0..8 {
            for t1 in 0..8 {
                let t = g.y_flat(&[t0, t1]);
                let (y0, y1) = (2.0 * t0 as f64 / 8.0, 3.0 * t1 as f64 / 8.0);
                let exact = tau / 2.0 * (tau * y0 / 2.0).cos()
                    - 0.5 * tau / 3.0 * (tau * y1 / 3.0).sin();
                worst = worst.max((d.at(1, 2, 7, t, 0) - exact).abs());
            }
        }
        errs.push(worst);
    }
    let ratio = errs[0] / errs[1];
    assert!((1.6..=2.4).contains(&ratio), "first-order rate: {errs:?}");
}

#[test]
fn cauchy_fit_over_mixed_derivatives() {
    let tau = std::f64::consts::TAU;
    let g = Grid::<f64>::new(2, 3, 9, 24, vec![8, 8], vec![tau, tau]).unwrap();
    // pure y_2 mode: the mixed-derivative sup at order p is (2 pi z / rho)^p
    let f = branchsolve_core::field::SheetedField::sample(g.clone(), 1, |_, _, _, y, _| {
        (2.0 * y[1]).cos()
    });
    let fit = diagnostics::cauchy_bound_fit(&f, 4, 0.25).unwrap();
    for &(p, sp, _) in &fit.table {
        let expect = 2.0f64.powi(p as i32);
        assert!(
            (sp - expect).abs() < 1e-9 * expect,
            "S_{p} = {sp} vs {expect}"
        );
    }
}
