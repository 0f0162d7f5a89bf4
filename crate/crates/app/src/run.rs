//! Command execution: builds problems from a [`RunConfig`], runs the
//! requested pipeline and writes field files and report/CSV outputs.
//!
//! Exit codes: 0 success, 2 invariant violation (bad data, failed
//! validation, numerical failure), 3 divergence of the fixed-point
//! iteration, 4 I/O or config errors.

use crate::config::{Command, RunConfig};
use crate::generators;
use branchsolve_core::diagnostics;
use branchsolve_core::error::Error as CoreError;
use branchsolve_core::field::{SheetedField, Trace};
use branchsolve_core::io::{self, FieldFile};
use branchsolve_core::nonlinear::{self, PicardError, PicardOptions};
use branchsolve_core::poisson::{solve_dirichlet, PoissonProblem};
use branchsolve_core::Real;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Debug)]
pub enum AppError {
    /// exit code 2
    Invariant(String),
    /// exit code 3
    Diverged(String),
    /// exit code 4
    Io(String),
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Invariant(_) => 2,
            AppError::Diverged(_) => 3,
            AppError::Io(_) => 4,
        }
    }
}

impl std::fmt::Display for AppError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AppError::Invariant(s) => write!(f, "invariant violation: {s}"),
            AppError::Diverged(s) => write!(f, "diverged: {s}"),
            AppError::Io(s) => write!(f, "io error: {s}"),
        }
    }
}

fn core_err(e: CoreError) -> AppError {
    match e {
        CoreError::Io(io) => AppError::Io(io.to_string()),
        CoreError::Parse(p) => AppError::Io(p),
        other => AppError::Invariant(other.to_string()),
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), AppError> {
    std::fs::write(path, text).map_err(|e| AppError::Io(format!("{}: {e}", path.display())))
}

fn write_field_file(path: &Path, f: &FieldFile<Real>) -> Result<(), AppError> {
    io::write_field_to_path(path, f).map_err(core_err)
}

fn load_boundary(cfg: &RunConfig, ncomp: usize) -> Result<Trace<Real>, AppError> {
    let grid = cfg.grid().map_err(core_err)?;
    let spec = cfg
        .boundary
        .as_deref()
        .ok_or_else(|| AppError::Io("config needs 'boundary = id:<name> | file:<path>'".into()))?;
    let tr = if let Some(id) = spec.strip_prefix("id:") {
        generators::boundary_by_id(id, &grid).map_err(core_err)?
    } else if let Some(path) = spec.strip_prefix("file:") {
        match io::read_field_from_path::<Real>(Path::new(path)).map_err(core_err)? {
            FieldFile::Trace(t) => t,
            FieldFile::Sheeted(f) => f.boundary_trace(),
            FieldFile::Unfolded(_) => {
                return Err(AppError::Invariant(
                    "boundary file must hold a trace or a sheeted field".into(),
                ))
            }
        }
    } else {
        return Err(AppError::Io(format!(
            "boundary '{spec}' must start with 'id:' or 'file:'"
        )));
    };
    if tr.grid() != &grid {
        return Err(AppError::Invariant(
            "boundary data grid does not match the configured grid".into(),
        ));
    }
    if tr.ncomp() != ncomp {
        return Err(AppError::Invariant(format!(
            "boundary data has {} components, expected {ncomp}",
            tr.ncomp()
        )));
    }
    Ok(tr)
}

fn load_sheeted(path: &Path) -> Result<SheetedField<Real>, AppError> {
    match io::read_field_from_path::<Real>(path).map_err(core_err)? {
        FieldFile::Sheeted(f) => Ok(f),
        _ => Err(AppError::Invariant(format!(
            "{} does not hold a sheeted field",
            path.display()
        ))),
    }
}

fn build_poisson_problem(cfg: &RunConfig) -> Result<(PoissonProblem<Real>, Option<SheetedField<Real>>), AppError> {
    let grid = cfg.grid().map_err(core_err)?;
    if let Some(example) = &cfg.example {
        let ex = generators::example_problem(example, &grid).map_err(core_err)?;
        return Ok((ex.problem, ex.exact));
    }
    let phi = load_boundary(cfg, 1)?;
    let mut p = PoissonProblem::new(grid.clone(), 1, phi);
    if let Some(path) = &cfg.g_file {
        let g = load_sheeted(path)?;
        p.g = Some(g);
    }
    if let Some(path) = &cfg.f_file {
        let f = load_sheeted(path)?;
        p.flux = Some(f);
    }
    if let Some(mu) = cfg.mu {
        p.mu = mu;
    }
    p.sym_tol = cfg.sym_tol;
    Ok((p, None))
}

fn out_path(out_dir: &Path, name: &str) -> PathBuf {
    out_dir.join(name)
}

fn cmd_solve_poisson(cfg: &RunConfig, out_dir: &Path) -> Result<(), AppError> {
    let (problem, exact) = build_poisson_problem(cfg)?;
    let (u, report) = solve_dirichlet(&problem).map_err(core_err)?;
    write_field_file(&out_path(out_dir, "solution.field"), &FieldFile::Sheeted(u.clone()))?;
    let mut text = report.render();
    if let Some(exact) = exact {
        let err = u.max_diff(&exact).map_err(core_err)?;
        let _ = writeln!(text, "exact_error = {err:.16e}");
    }
    write_text(&out_path(out_dir, "report.txt"), &text)?;
    Ok(())
}

fn parse_nonlinearity(cfg: &RunConfig) -> Result<branchsolve_core::Nonlinearity64, AppError> {
    let id = cfg
        .nonlinearity
        .as_deref()
        .ok_or_else(|| AppError::Io("config needs 'nonlinearity = mse | mss:<m>'".into()))?;
    if id == "mse" {
        Ok(nonlinear::builtin_mse())
    } else if let Some(m) = id.strip_prefix("mss:") {
        let m: usize = m
            .parse()
            .map_err(|e| AppError::Io(format!("bad nonlinearity '{id}': {e}")))?;
        nonlinear::builtin_mss(m).map_err(core_err)
    } else {
        Err(AppError::Io(format!(
            "unknown nonlinearity '{id}' (use mse, mss:<m>, or drive a custom one through the library)"
        )))
    }
}

fn cmd_solve_nonlinear(cfg: &RunConfig, out_dir: &Path) -> Result<(), AppError> {
    let grid = cfg.grid().map_err(core_err)?;
    let nl = parse_nonlinearity(cfg)?;
    let phi_unit = load_boundary(cfg, nl.m)?;
    let phi = phi_unit.scaled(cfg.epsilon);
    let opts = PicardOptions {
        tol: cfg.tol,
        residual_tol: cfg.residual_tol,
        max_iters: cfg.max_iters,
        mu: cfg.mu,
        sym_tol: cfg.sym_tol,
        relaxation: cfg.relaxation,
    };
    match nonlinear::picard_solve(&nl, &grid, &phi, &opts) {
        Ok((u, trace)) => {
            write_text(&out_path(out_dir, "trace.csv"), &trace.to_csv())?;
            if !trace.converged {
                return Err(AppError::Diverged(format!(
                    "no convergence within {} iterations",
                    cfg.max_iters
                )));
            }
            write_field_file(&out_path(out_dir, "solution.field"), &FieldFile::Sheeted(u))?;
            let last = trace.rows.last().unwrap();
            let text = format!(
                "converged = true\niterations = {}\nfinal_update_norm = {:.16e}\nfinal_residual = {:.16e}\nresidual_ok = {}\n",
                last.iter,
                last.update_norm,
                last.residual,
                last.residual <= cfg.residual_tol
            );
            write_text(&out_path(out_dir, "report.txt"), &text)?;
            Ok(())
        }
        Err(PicardError::Diverged { trace }) => {
            // the trace is still written; no partial field is emitted
            write_text(&out_path(out_dir, "trace.csv"), &trace.to_csv())?;
            Err(AppError::Diverged(format!(
                "update norms grew for 3 consecutive iterations (after {} steps)",
                trace.rows.len()
            )))
        }
        Err(PicardError::InvariantViolation { what }) => Err(AppError::Invariant(what)),
        Err(PicardError::Solver(e)) => Err(core_err(e)),
    }
}

fn cmd_gen_example(cfg: &RunConfig, out_dir: &Path) -> Result<(), AppError> {
    let grid = cfg.grid().map_err(core_err)?;
    let name = cfg
        .example
        .as_deref()
        .ok_or_else(|| AppError::Io("config needs 'example = <name>'".into()))?;
    match name {
        "mse-eps1e-3" | "mss2-eps1e-3" => {
            let id = if name.starts_with("mse") {
                "harmonic-ymod"
            } else {
                "harmonic-pair"
            };
            let tr = generators::boundary_by_id(id, &grid).map_err(core_err)?;
            write_field_file(
                &out_path(out_dir, "boundary.field"),
                &FieldFile::Trace(tr.scaled(cfg.epsilon)),
            )?;
        }
        other => {
            let ex = generators::example_problem(other, &grid).map_err(core_err)?;
            write_field_file(
                &out_path(out_dir, "boundary.field"),
                &FieldFile::Trace(ex.problem.phi.clone()),
            )?;
            if let Some(g) = &ex.problem.g {
                write_field_file(&out_path(out_dir, "g.field"), &FieldFile::Sheeted(g.clone()))?;
            }
            if let Some(f) = &ex.problem.flux {
                write_field_file(&out_path(out_dir, "f.field"), &FieldFile::Sheeted(f.clone()))?;
            }
            if let Some(u) = &ex.exact {
                write_field_file(
                    &out_path(out_dir, "u_exact.field"),
                    &FieldFile::Sheeted(u.clone()),
                )?;
            }
        }
    }
    Ok(())
}

fn cmd_diagnose(cfg: &RunConfig, out_dir: &Path) -> Result<(), AppError> {
    let path = cfg
        .input_field
        .as_ref()
        .ok_or_else(|| AppError::Io("config needs 'input_field = <path>'".into()))?;
    let f = load_sheeted(path)?;
    let grid = f.grid().clone();
    let which: Vec<&str> = if cfg.diagnostics.is_empty() {
        vec!["decay", "frequency", "cauchy", "branch", "maxp"]
    } else {
        cfg.diagnostics.iter().map(|s| s.as_str()).collect()
    };
    let mut summary = String::new();
    for d in which {
        match d {
            "decay" => {
                let (slope, stderr) =
                    diagnostics::decay_exponent(&f, false, cfg.decay_window).map_err(core_err)?;
                let mut csv = String::from("r,sup_abs\n");
                for i in 0..grid.nr() {
                    let r = grid.r(i);
                    if r < cfg.decay_window.0 || r > cfg.decay_window.1 {
                        continue;
                    }
                    let mut sup: Real = 0.0;
                    for l in 0..grid.q() {
                        for j in 0..grid.ntheta() {
                            for t in 0..grid.ny_total() {
                                sup = sup.max(f.node_abs(l, i, j, t));
                            }
                        }
                    }
                    let _ = writeln!(csv, "{r:.16e},{sup:.16e}");
                }
                write_text(&out_path(out_dir, "decay.csv"), &csv)?;
                let _ = writeln!(summary, "decay_slope = {slope:.16e}");
                let _ = writeln!(summary, "decay_slope_stderr = {stderr:.16e}");
                let (gslope, gse) =
                    diagnostics::decay_exponent(&f, true, cfg.decay_window).map_err(core_err)?;
                let _ = writeln!(summary, "decay_gradient_slope = {gslope:.16e}");
                let _ = writeln!(summary, "decay_gradient_slope_stderr = {gse:.16e}");
            }
            "frequency" => {
                let y0 = if cfg.y0.is_empty() {
                    vec![0.0; grid.ny().len()]
                } else {
                    cfg.y0.clone()
                };
                let prof = diagnostics::frequency_function(&f, &y0, &cfg.frequency_radii)
                    .map_err(core_err)?;
                let mut csv = String::from("rho,N\n");
                for (rho, v) in prof.radii.iter().zip(prof.values.iter()) {
                    let _ = writeln!(csv, "{rho:.16e},{v:.16e}");
                }
                write_text(&out_path(out_dir, "frequency.csv"), &csv)?;
            }
            "cauchy" => {
                let fit = diagnostics::cauchy_bound_fit(&f, cfg.cauchy_p_max, cfg.cauchy_radius)
                    .map_err(core_err)?;
                let mut csv = String::from("p,S_p,C_p\n");
                for (p, sp, cp) in &fit.table {
                    let _ = writeln!(csv, "{p},{sp:.16e},{cp:.16e}");
                }
                write_text(&out_path(out_dir, "cauchy.csv"), &csv)?;
                let _ = writeln!(summary, "cauchy_c_estimate = {:.16e}", fit.c_estimate);
                let _ = writeln!(summary, "cauchy_tail_warning = {}", fit.tail_warning);
            }
            "branch" => {
                let bs = diagnostics::branch_set(&f).map_err(core_err)?;
                let mut csv = String::from("i_y,trace,d1,d2,d3,d4\n");
                for t in 0..bs.trace.len() {
                    let _ = writeln!(
                        csv,
                        "{t},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                        bs.trace[t],
                        bs.derivatives[0][t],
                        bs.derivatives[1][t],
                        bs.derivatives[2][t],
                        bs.derivatives[3][t]
                    );
                }
                write_text(&out_path(out_dir, "branch.csv"), &csv)?;
            }
            "maxp" => {
                let defect = diagnostics::max_principle_check(&f);
                let _ = writeln!(summary, "max_principle_defect = {defect:.16e}");
            }
            other => {
                return Err(AppError::Io(format!("unknown diagnostic '{other}'")));
            }
        }
    }
    write_text(&out_path(out_dir, "diagnose.txt"), &summary)?;
    Ok(())
}

fn cmd_cross_check(cfg: &RunConfig, out_dir: &Path) -> Result<(), AppError> {
    let (problem, _) = build_poisson_problem(cfg)?;
    let (u_spec, report) = solve_dirichlet(&problem).map_err(core_err)?;
    let u_fd = branchsolve_core::fdref::direct_fd_reference(&problem).map_err(core_err)?;
    let denom = u_fd.sup_abs().max(Real::MIN_POSITIVE);
    let rel = u_spec.max_diff(&u_fd).map_err(core_err)? / denom;
    write_field_file(
        &out_path(out_dir, "solution_spectral.field"),
        &FieldFile::Sheeted(u_spec),
    )?;
    write_field_file(
        &out_path(out_dir, "solution_fd.field"),
        &FieldFile::Sheeted(u_fd),
    )?;
    let text = format!(
        "relative_linf_difference = {rel:.16e}\nweak_residual = {:.16e}\n",
        report.weak_residual
    );
    write_text(&out_path(out_dir, "cross_check.txt"), &text)?;
    Ok(())
}

/// Executes `command` with `cfg`; returns the process exit code.
pub fn run(command: Command, cfg: &RunConfig, out_dir: &Path) -> i32 {
    if let Err(e) = std::fs::create_dir_all(out_dir) {
        eprintln!("cannot create output directory {}: {e}", out_dir.display());
        return 4;
    }
    let result = match command {
        Command::SolvePoisson => cmd_solve_poisson(cfg, out_dir),
        Command::SolveNonlinear => cmd_solve_nonlinear(cfg, out_dir),
        Command::Diagnose => cmd_diagnose(cfg, out_dir),
        Command::GenExample => cmd_gen_example(cfg, out_dir),
        Command::CrossCheck => cmd_cross_check(cfg, out_dir),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
