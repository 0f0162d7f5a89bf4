//! Analytic test-data generators: branched harmonics, manufactured
//! problems (analytic and stencil-exact routes), and the named examples the
//! shipped fixtures are built from.

use branchsolve_core::error::{Error, Result};
use branchsolve_core::field::{SheetedField, Trace};
use branchsolve_core::grid::{mode_admissible, Grid};
use branchsolve_core::modal::{ModalField, ModeTerm};
use branchsolve_core::poisson::PoissonProblem;
use branchsolve_core::spectrum::{analyze, synthesize, ModeSpectrum};
use branchsolve_core::unfold::fold;
use branchsolve_core::Real;
use num_complex::Complex;

/// Samples the branched harmonic `Re(c z^{m/q})` per sheet (optionally
/// modulated by a y mode, which is test data only, not harmonic). Refuses
/// inadmissible angular modes unless `allow_inadmissible` is set.
pub fn gen_branched_harmonic(
    grid: &Grid<Real>,
    m_mode: i64,
    c: Complex<Real>,
    z: &[i64],
    amp: Real,
    allow_inadmissible: bool,
) -> Result<SheetedField<Real>> {
    if z.len() != grid.ny().len() {
        return Err(Error::Dimension("z must have one entry per y dim".into()));
    }
    if !allow_inadmissible && !mode_admissible(m_mode, grid.q(), grid.k())? {
        return Err(Error::InvalidProblem(format!(
            "mode m = {m_mode} is not admissible for q = {}, k = {} (pass the override to force it)",
            grid.q(),
            grid.k()
        )));
    }
    let f = ModalField::harmonic(c.scale(amp), m_mode, z.to_vec());
    Ok(f.sample_sheeted(grid))
}

/// Analytic manufactured pair: samples `u` from the mode list and computes
/// `g = Delta u` in closed form (flux-free variant).
pub fn gen_manufactured(
    grid: &Grid<Real>,
    modes: &[ModeTerm<Real>],
) -> Result<(SheetedField<Real>, SheetedField<Real>)> {
    let u = ModalField::new(modes.to_vec());
    let g = u.laplacian(grid.q(), grid.rho())?;
    Ok((u.sample_sheeted(grid), g.sample_sheeted(grid)))
}

/// Stencil-reverse manufactured pair: `g` is produced by applying the
/// solver's own discrete per-mode rows to the sampled `u`, so solving with
/// this `g` (and the trace of `u`) reproduces `u` to roundoff on the same
/// grid. Near the axis this discrete `g` differs markedly from the
/// continuum Laplacian (the conformal weight divides the stencil defect).
pub fn gen_manufactured_discrete(
    grid: &Grid<Real>,
    modes: &[ModeTerm<Real>],
) -> Result<(SheetedField<Real>, SheetedField<Real>)> {
    let uf = ModalField::new(modes.to_vec());
    let u_unfolded = uf.sample_unfolded(grid);
    let u_spec = analyze(&u_unfolded);
    let nr = grid.nr_hat();
    let h = grid.h();
    let q = grid.q();
    let qf2 = (q * q) as Real;
    let r_at = |a: usize| a as Real * h;
    let r_half = |a: usize| (a as Real + 0.5) * h;
    let mut g_spec = ModeSpectrum::zeros(grid.clone(), 1);
    for p in 0..grid.ntheta_hat() {
        let m = grid.theta_mode(p);
        for zt in 0..grid.ny_total() {
            let lambda = grid.lambda_z(zt);
            let prof: Vec<Complex<Real>> = (0..nr).map(|a| u_spec.at(a, p, zt, 0)).collect();
            let mut gp = vec![Complex::new(0.0, 0.0); nr];
            for a in 1..nr - 1 {
                let ra = r_at(a);
                let flux = (prof[a + 1] - prof[a]).scale(r_half(a) / h)
                    - (prof[a] - prof[a - 1]).scale(r_half(a - 1) / h);
                let lhs = flux
                    - prof[a].scale((m * m) as Real * h / ra)
                    - prof[a].scale(qf2 * lambda * ra.powi(2 * q as i32 - 1) * h);
                gp[a] = lhs.scale(1.0 / (qf2 * ra.powi(2 * q as i32 - 1) * h));
            }
            if m == 0 {
                let c0 = (h * 0.5).powi(2 * q as i32) / (2 * q) as Real;
                let u0 = u_spec.at(0, 0, zt, 0);
                let lhs = (prof[1] - u0).scale(r_half(0) / h) - u0.scale(qf2 * lambda * c0);
                gp[0] = lhs.scale(1.0 / (qf2 * c0));
            }
            gp[nr - 1] = gp[nr - 2];
            for (a, v) in gp.iter().enumerate() {
                if a == 0 {
                    if p == 0 {
                        *g_spec.at_mut(0, 0, zt, 0) = *v;
                    }
                } else {
                    *g_spec.at_mut(a, p, zt, 0) = *v;
                }
            }
        }
    }
    g_spec.set_has_axis(true);
    Ok((fold(&u_unfolded), fold(&synthesize(&g_spec))))
}

/// One named example: a Poisson problem plus, when known, its exact field.
pub struct ExampleProblem {
    pub problem: PoissonProblem<Real>,
    pub exact: Option<SheetedField<Real>>,
}

fn require_qk(grid: &Grid<Real>, q: usize, k: usize, name: &str) -> Result<()> {
    if grid.q() != q || grid.k() != k {
        return Err(Error::InvalidProblem(format!(
            "example '{name}' needs q = {q}, k = {k} (grid has q = {}, k = {})",
            grid.q(),
            grid.k()
        )));
    }
    Ok(())
}

/// Modal basis of the two-mode manufactured problems (with an analytic flux
/// potential). Returns (u terms, psi terms).
fn manufactured_terms(q: usize, k: usize) -> (Vec<ModeTerm<Real>>, Vec<ModeTerm<Real>>) {
    let m1 = k as i64;
    let m2 = (if (2 * k).is_multiple_of(q) { 3 * k } else { 2 * k }) as i64;
    let u = vec![
        ModeTerm {
            amp: Complex::new(1.0, 0.0),
            m: m1,
            z: vec![0],
            radial: vec![(1.0, m1 as i32), (0.5, m1 as i32 + 2 * q as i32)],
        },
        ModeTerm {
            amp: Complex::new(0.4, 0.2),
            m: m2,
            z: vec![1],
            radial: vec![(1.0, m2 as i32)],
        },
    ];
    let psi = vec![ModeTerm {
        amp: Complex::new(0.3, 0.0),
        m: m1,
        z: vec![0],
        radial: vec![(1.0, m1 as i32 + 2 * q as i32)],
    }];
    (u, psi)
}

/// Builds a manufactured Poisson problem with analytic data (solid part
/// `Delta u - Delta psi`, flux part `grad psi`).
pub fn manufactured_problem(grid: &Grid<Real>) -> Result<ExampleProblem> {
    let (u_terms, psi_terms) = manufactured_terms(grid.q(), grid.k(), grid.ny().len());
    let u = ModalField::new(u_terms);
    let psi = ModalField::new(psi_terms);
    let lap_u = u.laplacian(grid.q(), grid.rho())?;
    let lap_psi = psi.laplacian(grid.q(), grid.rho())?;
    let g_field = lap_u
        .sample_sheeted(grid)
        .lin_comb(1.0, &lap_psi.sample_sheeted(grid), -1.0)?;
    let mut problem = PoissonProblem::new(grid.clone(), 1, u.sample_trace(grid));
    problem.g = Some(g_field);
    problem.flux = Some(psi.sample_gradient_sheeted(grid));
    problem.sym_tol = 1e-8;
    Ok(ExampleProblem {
        problem,
        exact: Some(u.sample_sheeted(grid)),
    })
}

pub fn example_problem(name: &str, grid: &Grid<Real>) -> Result<ExampleProblem> {
    match name {
        "q2k3-harmonic" => {
            require_qk(grid, 2, 3, name)?;
            let f = ModalField::harmonic(Complex::new(1.0, 0.0), 3, vec![0; grid.ny().len()]);
            Ok(ExampleProblem {
                problem: PoissonProblem::new(grid.clone(), 1, f.sample_trace(grid)),
                exact: Some(f.sample_sheeted(grid)),
            })
        }
        "q2k3-manufactured" => {
            require_qk(grid, 2, 3, name)?;
            manufactured_problem(grid)
        }
        "q3k4-manufactured" => {
            require_qk(grid, 3, 4, name)?;
            manufactured_problem(grid)
        }
        other => Err(Error::InvalidProblem(format!("unknown example '{other}'"))),
    }
}

/// Unit-scale boundary traces by id. `epsilon` scaling is applied by the
/// nonlinear driver, not here.
pub fn boundary_by_id(id: &str, grid: &Grid<Real>) -> Result<Trace<Real>> {
    let k = grid.k() as i64;
    match id {
        "zero" => Ok(Trace::zeros(grid.clone(), 1)),
        "harmonic" | "q2k3-harmonic" => {
            if id == "q2k3-harmonic" {
                require_qk(grid, 2, 3, id)?;
            }
            Ok(ModalField::harmonic(Complex::new(1.0, 0.0), k, vec![0; grid.ny().len()])
                .sample_trace(grid))
        }
        "harmonic-ymod" => {
            // (1 + 0.3 cos(2 pi y_1 / rho_1)) Re(z^{k/q})
            if grid.ny()[0] < 3 {
                return Err(Error::Resolution(
                    "harmonic-ymod needs at least 3 nodes in y_1".into(),
                ));
            }
            let mut z0 = vec![0i64; grid.ny().len()];
            let mut zp = z0.clone();
            zp[0] = 1;
            let mut zm = z0.clone();
            zm[0] = -1;
            z0[0] = 0;
            let f = ModalField::new(vec![
                ModeTerm {
                    amp: Complex::new(1.0, 0.0),
                    m: k,
                    z: z0,
                    radial: vec![(1.0, k as i32)],
                },
                ModeTerm {
                    amp: Complex::new(0.15, 0.0),
                    m: k,
                    z: zp,
                    radial: vec![(1.0, k as i32)],
                },
                ModeTerm {
                    amp: Complex::new(0.15, 0.0),
                    m: k,
                    z: zm,
                    radial: vec![(1.0, k as i32)],
                },
            ]);
            Ok(f.sample_trace(grid))
        }
        "harmonic-pair" => {
            // two components: (Re(z^{k/q}), 0.8 Im(z^{k/q}))
            let re = ModalField::harmonic(Complex::new(1.0, 0.0), k, vec![0; grid.ny().len()]);
            let im = ModalField::harmonic(Complex::new(0.0, 0.8), k, vec![0; grid.ny().len()]);
            let tr_re = re.sample_trace(grid);
            let tr_im = im.sample_trace(grid);
            let mut out = Trace::zeros(grid.clone(), 2);
            for l in 0..grid.q() {
                for j in 0..grid.ntheta() {
                    for t in 0..grid.ny_total() {
                        *out.at_mut(l, j, t, 0) = tr_re.at(l, j, t, 0);
                        *out.at_mut(l, j, t, 1) = tr_im.at(l, j, t, 0);
                    }
                }
            }
            Ok(out)
        }
        other => Err(Error::InvalidProblem(format!("unknown boundary id '{other}'"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use branchsolve_core::mv;
    use branchsolve_core::poisson::solve_dirichlet;
    use branchsolve_core::unfold::unfold;

    fn grid_q2k3() -> Grid<Real> {
        Grid::new(2, 3, 33, 48, vec![2], vec![std::f64::consts::TAU]).unwrap()
    }

    #[test]
    fn harmonic_generator_matches_unfolded_cubic_and_passes_defect_checks() {
        let g = grid_q2k3();
        let f = gen_branched_harmonic(&g, 3, Complex::new(1.0, 0.0), &[0], 1.0, false).unwrap();
        let u0 = unfold(&f).unwrap();
        let mut worst: Real = 0.0;
        for a in 1..g.nr_hat() {
            let r = g.r_hat(a);
            for b in 0..g.ntheta_hat() {
                let th = g.theta_hat(b);
                worst = worst.max((u0.at(a, b, 0, 0) - r.powi(3) * (3.0 * th).cos()).abs());
            }
        }
        assert!(worst < 1e-13, "unfold mismatch {worst}");
        assert!(mv::kfold_symmetry_defect(&f) <= 1e-12);
        assert!(mv::gluing_defect(&f) <= 1e-12);
    }

    #[test]
    fn inadmissible_mode_requires_override() {
        let g = grid_q2k3();
        // m = 2 is 0 mod q: the average-free invariant fails
        assert!(gen_branched_harmonic(&g, 2, Complex::new(1.0, 0.0), &[0], 1.0, false).is_err());
        assert!(gen_branched_harmonic(&g, 2, Complex::new(1.0, 0.0), &[0], 1.0, true).is_ok());
    }

    #[test]
    fn empty_mode_list_gives_zero_pair() {
        let g = grid_q2k3();
        let (u, gf) = gen_manufactured(&g, &[]).unwrap();
        assert_eq!(u.sup_abs(), 0.0);
        assert_eq!(gf.sup_abs(), 0.0);
    }

    #[test]
    fn discrete_route_reproduces_its_own_solve_exactly() {
        let g = grid_q2k3();
        let modes = vec![
            ModeTerm {
                amp: Complex::new(0.8, 0.1),
                m: 3,
                z: vec![0],
                radial: vec![(1.0, 3), (0.4, 7)],
            },
            ModeTerm {
                amp: Complex::new(0.2, 0.0),
                m: 9,
                z: vec![1],
                radial: vec![(1.0, 9)],
            },
        ];
        let (u, gf) = gen_manufactured_discrete(&g, &modes).unwrap();
        let mut p = PoissonProblem::new(g.clone(), 1, u.boundary_trace());
        p.g = Some(gf);
        p.sym_tol = 1e-6;
        let (back, _) = solve_dirichlet(&p).unwrap();
        let err = back.max_diff(&u).unwrap();
        assert!(err < 1e-10, "stencil-reverse reproduction error {err}");
    }

    #[test]
    fn named_examples_build_and_solve() {
        let g = grid_q2k3();
        let ex = example_problem("q2k3-manufactured", &g).unwrap();
        let (u, report) = solve_dirichlet(&ex.problem).unwrap();
        let err = u.max_diff(ex.exact.as_ref().unwrap()).unwrap();
        assert!(err < 5e-3, "recovery error {err}");
        assert!(report.forbidden_mode_energy <= 1e-12);
        assert!(example_problem("q3k4-manufactured", &g).is_err()); // wrong (q, k)
        let g34 = Grid::new(3, 4, 33, 48, vec![2], vec![std::f64::consts::TAU]).unwrap();
        let ex = example_problem("q3k4-manufactured", &g34).unwrap();
        let (u, _) = solve_dirichlet(&ex.problem).unwrap();
        let err = u.max_diff(ex.exact.as_ref().unwrap()).unwrap();
        assert!(err < 5e-3, "q3k4 recovery error {err}");
    }

    #[test]
    fn boundary_ids_respect_shapes() {
        let g = grid_q2k3();
        assert_eq!(boundary_by_id("harmonic", &g).unwrap().ncomp(), 1);
        assert_eq!(boundary_by_id("harmonic-pair", &g).unwrap().ncomp(), 2);
        assert!(boundary_by_id("nope", &g).is_err());
    }
}
