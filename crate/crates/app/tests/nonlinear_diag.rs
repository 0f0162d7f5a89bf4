//! Diagnostics on fixed-point solutions: the branch-set trace of an MSE
//! solution with y-dependent data is smooth and refinement-stable.

use branchsolve_core::diagnostics::branch_set;
use branchsolve_core::field::Trace;
use branchsolve_core::grid::Grid;
use branchsolve_core::nonlinear::{builtin_mse, picard_solve, PicardOptions};
use branchsolve_core::Real;

/// Boundary data: eps * (Re z^{3/2} + 0.3 cos(2 pi y / rho)); the second
/// term is a single-valued (average) part, so the solution's branch trace
/// is a nonzero analytic curve in y.
fn boundary(grid: &Grid<Real>, eps: Real) -> Trace<Real> {
    Trace::sample(grid.clone(), 1, |l, th, y, _| {
        let ang = 1.5 * (th + std::f64::consts::TAU * l as f64);
        eps * (ang.cos() + 0.3 * (std::f64::consts::TAU * y[0] / grid.rho()[0]).cos())
    })
}

fn solve_at(ny: usize) -> (Vec<Real>, [Vec<Real>; 4]) {
    let g = Grid::<Real>::new(2, 3, 65, 48, vec![ny], vec![std::f64::consts::TAU]).unwrap();
    let nl = builtin_mse::<Real>();
    let phi = boundary(&g, 1e-3);
    let opts = PicardOptions {
        tol: 1e-12,
        residual_tol: 1e-7,
        max_iters: 30,
        mu: None,
        sym_tol: 1e-8,
        relaxation: None,
    };
    let (u, trace) = picard_solve(&nl, &g, &phi, &opts).expect("converges");
    assert!(trace.converged);
    let bs = branch_set(&u).expect("branch trace");
    (bs.trace, bs.derivatives)
}

#[test]
fn branch_trace_is_smooth_and_refinement_stable() {
    let (trace8, derivs8) = solve_at(8);
    let (trace16, derivs16) = solve_at(16);
    let sup = |v: &[Real]| v.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    // the average boundary part survives to the axis at roughly its own scale
    let t8 = sup(&trace8);
    let t16 = sup(&trace16);
    assert!(t8 > 1e-5 && t16 > 1e-5, "trace unexpectedly small: {t8:.3e}");
    assert!((t8 - t16).abs() <= 0.05 * t16, "trace not stable: {t8:.6e} vs {t16:.6e}");
    // bounded fourth derivative, no grid-scale oscillation: refining y leaves
    // max |D_y^4 trace| essentially unchanged (grid noise would scale ~N^4)
    let d8 = sup(&derivs8[3]);
    let d16 = sup(&derivs16[3]);
    assert!(d8 > 0.0 && d16 > 0.0);
    let ratio = d16 / d8;
    assert!(
        (0.5..=2.0).contains(&ratio),
        "4th derivative unstable under refinement: {d8:.6e} -> {d16:.6e}"
    );
    // dominated by the single data mode: |D^4| <= ~ w^4 |trace| with margin
    let w = 1.0f64; // 2 pi / rho with rho = 2 pi
    assert!(d16 <= 10.0 * w.powi(4) * t16, "d4 {d16:.3e} vs trace {t16:.3e}");
}
