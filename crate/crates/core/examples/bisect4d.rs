use branchsolve_core::grid::Grid;
use branchsolve_core::modal::{ModalField, ModeTerm};
use branchsolve_core::poisson::{solve_dirichlet, PoissonProblem};
use num_complex::Complex;

fn conv(label: &str, mk: impl Fn(&Grid<f64>) -> (PoissonProblem<f64>, branchsolve_core::field::SheetedField<f64>)) {
    let tau = std::f64::consts::TAU;
    let mut errs = Vec::new();
    for nr_hat in [17usize, 33, 65] {
        let g = Grid::<f64>::new(2, 3, nr_hat, 24, vec![4, 4], vec![tau, tau]).unwrap();
        let (p, exact) = mk(&g);
        let (u, _) = solve_dirichlet(&p).unwrap();
        errs.push(u.max_diff(&exact).unwrap());
    }
    println!("{label}: {errs:?}");
}

fn main() {
    // (a) pure harmonic-profile mode with two-dim y dependence, g analytic
    conv("mode z=[1,-1] g-only", |g| {
        let u = ModalField::new(vec![ModeTerm { amp: Complex::new(0.4, 0.2), m: 9, z: vec![1, -1], radial: vec![(1.0, 9)] }]);
        let lap = u.laplacian(2, g.rho()).unwrap();
        let mut p = PoissonProblem::new(g.clone(), 1, u.sample_trace(g));
        p.g = Some(lap.sample_sheeted(g));
        p.sym_tol = 1e-9;
        (p, u.sample_sheeted(g))
    });
    // (b) pure flux problem: u = psi, f = grad psi, g = 0
    conv("flux-only psi z=[0,1]", |g| {
        let psi = ModalField::new(vec![ModeTerm { amp: Complex::new(0.3, 0.0), m: 3, z: vec![0, 1], radial: vec![(1.0, 7)] }]);
        let mut p = PoissonProblem::new(g.clone(), 1, psi.sample_trace(g));
        p.flux = Some(psi.sample_gradient_sheeted(g));
        p.sym_tol = 1e-9;
        (p, psi.sample_sheeted(g))
    });
    // (c) same flux potential but fully manufactured: g = -Delta psi + flux f = grad psi with u = 0 trace... 
    // simpler: u mode with radial poly needing g, z two-dim
    conv("mode z=[0,1] poly g-only", |g| {
        let u = ModalField::new(vec![ModeTerm { amp: Complex::new(1.0, 0.0), m: 3, z: vec![0, 1], radial: vec![(1.0, 3), (0.5, 7)] }]);
        let lap = u.laplacian(2, g.rho()).unwrap();
        let mut p = PoissonProblem::new(g.clone(), 1, u.sample_trace(g));
        p.g = Some(lap.sample_sheeted(g));
        p.sym_tol = 1e-9;
        (p, u.sample_sheeted(g))
    });
}
