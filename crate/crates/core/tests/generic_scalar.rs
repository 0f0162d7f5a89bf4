//! The solver kernels are generic over the scalar; run a small end-to-end
//! problem in f32 to keep that path honest (loose tolerances: single
//! precision, coarse grid).

use branchsolve_core::field::Trace;
use branchsolve_core::grid::Grid;
use branchsolve_core::modal::ModalField;
use branchsolve_core::poisson::{solve_dirichlet, PoissonProblem};
use num_complex::Complex;

#[test]
fn branched_harmonic_in_single_precision() {
    let g = Grid::<f32>::new(2, 3, 65, 48, vec![1], vec![1.0]).unwrap();
    let exact = ModalField::harmonic(Complex::new(1.0f32, 0.0), 3, vec![0]);
    let mut p = PoissonProblem::new(g.clone(), 1, exact.sample_trace(&g));
    p.sym_tol = 1e-4;
    let (u, report) = solve_dirichlet(&p).unwrap();
    let err = u.max_diff(&exact.sample_sheeted(&g)).unwrap();
    assert!(err < 5e-4, "f32 interior error {err}");
    assert!(report.boundary_error < 1e-5);
    assert!(report.forbidden_mode_energy < 1e-8);
}

#[test]
fn tuple_metric_in_single_precision() {
    use branchsolve_core::mv::{metric_g, QTuple};
    let a = QTuple::<f32>::new(2, 1, vec![0.0, 0.0]).unwrap();
    let b = QTuple::<f32>::new(2, 1, vec![1.0, -1.0]).unwrap();
    assert!((metric_g(&a, &b).unwrap() - 2.0f32.sqrt()).abs() < 1e-6);
}

#[test]
fn diagnostics_in_single_precision() {
    let g = Grid::<f32>::new(2, 3, 257, 48, vec![1], vec![1.0]).unwrap();
    let f = ModalField::harmonic(Complex::new(1.0f32, 0.0), 3, vec![0]).sample_sheeted(&g);
    let (slope, _) =
        branchsolve_core::diagnostics::decay_exponent(&f, false, (1e-4f32, 1e-2)).unwrap();
    assert!((slope - 1.5).abs() < 0.05, "f32 decay slope {slope}");
    let _ = Trace::<f32>::zeros(g, 1);
}
