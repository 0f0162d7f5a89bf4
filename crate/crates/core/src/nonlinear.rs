//! Fixed-point solver for quasilinear systems
//! `Delta u = div F(Du) + G(u, Du)` with small k-fold symmetric boundary
//! data: iterate the map T sending `v` to the solution of the Poisson
//! problem with flux data `F(Dv)` and source `G(v, Dv)`.

use crate::error::{Error, Result};
use crate::field::{SheetedField, Trace};
use crate::grid::Grid;
use crate::mv::kfold_action;
use crate::poisson::{solve_dirichlet, weak_residual_data, PoissonProblem};
use crate::scalar::Scalar;
use crate::unfold::{gradient, unfold};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

type FluxFn<T> = Arc<dyn Fn(&[T], usize) -> Vec<T> + Send + Sync>;
type SourceFn<T> = Arc<dyn Fn(&[T], &[T], usize) -> Vec<T> + Send + Sync>;

/// Pointwise nonlinearity (F, G) of a system of size `m`. `F` maps the
/// gradient matrix `P` (layout `kappa * n + dir`) to a matrix of the same
/// shape; `G` maps `(Z, P)` to a vector in R^m.
#[derive(Clone)]
pub struct Nonlinearity<T: Scalar> {
    pub id: String,
    pub m: usize,
    flux: FluxFn<T>,
    source: SourceFn<T>,
}

impl<T: Scalar> std::fmt::Debug for Nonlinearity<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Nonlinearity({}, m = {})", self.id, self.m)
    }
}

impl<T: Scalar> Nonlinearity<T> {
    pub fn new_custom(id: &str, m: usize, flux: FluxFn<T>, source: SourceFn<T>) -> Self {
        Nonlinearity {
            id: id.to_string(),
            m,
            flux,
            source,
        }
    }

    pub fn eval_flux(&self, p: &[T], n: usize) -> Vec<T> {
        (self.flux)(p, n)
    }

    pub fn eval_source(&self, z: &[T], p: &[T], n: usize) -> Vec<T> {
        (self.source)(z, p, n)
    }
}

pub(crate) fn mse_flux<T: Scalar>(p: &[T], _n: usize) -> Vec<T> {
    // rewrite of div(Du / sqrt(1 + |Du|^2)) = 0 as Delta u = div F(Du):
    // F(P) = P (1 - (1 + |P|^2)^{-1/2})
    let p2: T = p.iter().map(|&v| v * v).sum();
    let s = T::one() - T::one() / (T::one() + p2).sqrt();
    p.iter().map(|&v| v * s).collect()
}

pub(crate) fn mss_flux<T: Scalar>(p: &[T], m: usize, n: usize) -> Vec<T> {
    // graphical minimal surface system: F^i_kappa = P^kappa_i - sqrt(g) g^{ij} P^kappa_j
    // with g_ij = delta_ij + sum_kappa P^kappa_i P^kappa_j
    let mut gmat = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            let mut s = if i == j { T::one() } else { T::zero() };
            for kappa in 0..m {
                s += p[kappa * n + i] * p[kappa * n + j];
            }
            gmat[i * n + j] = s;
        }
    }
    let (ginv, det) = invert_small(&gmat, n);
    let sqrtg = det.max(T::zero()).sqrt();
    let mut out = vec![T::zero(); m * n];
    for kappa in 0..m {
        for i in 0..n {
            let mut s = p[kappa * n + i];
            for j in 0..n {
                s -= sqrtg * ginv[i * n + j] * p[kappa * n + j];
            }
            out[kappa * n + i] = s;
        }
    }
    out
}

/// Gauss-Jordan inverse and determinant of a small (n <= 4) matrix.
fn invert_small<T: Scalar>(a: &[T], n: usize) -> (Vec<T>, T) {
    let mut m = a.to_vec();
    let mut inv = vec![T::zero(); n * n];
    for i in 0..n {
        inv[i * n + i] = T::one();
    }
    let mut det = T::one();
    for col in 0..n {
        // partial pivot
        let mut piv = col;
        for r in col + 1..n {
            if m[r * n + col].abs() > m[piv * n + col].abs() {
                piv = r;
            }
        }
        if piv != col {
            for c in 0..n {
                m.swap(col * n + c, piv * n + c);
                inv.swap(col * n + c, piv * n + c);
            }
            det = -det;
        }
        let d = m[col * n + col];
        det *= d;
        let dinv = T::one() / d;
        for c in 0..n {
            m[col * n + c] *= dinv;
            inv[col * n + c] *= dinv;
        }
        for r in 0..n {
            if r != col {
                let factor = m[r * n + col];
                if factor != T::zero() {
                    for c in 0..n {
                        let mc = m[col * n + c];
                        let ic = inv[col * n + c];
                        m[r * n + c] -= factor * mc;
                        inv[r * n + c] -= factor * ic;
                    }
                }
            }
        }
    }
    (inv, det)
}

/// Minimal surface equation (m = 1) as a small-data system instance.
pub fn builtin_mse<T: Scalar>() -> Nonlinearity<T> {
    Nonlinearity::new_custom(
        "mse",
        1,
        Arc::new(|p, n| mse_flux(p, n)),
        Arc::new(|_z, _p, _n| vec![T::zero()]),
    )
}

/// Minimal surface system for an R^m-valued graph, m >= 2.
pub fn builtin_mss<T: Scalar>(m: usize) -> Result<Nonlinearity<T>> {
    if m < 2 {
        return Err(Error::InvalidProblem(
            "minimal surface system needs codomain dimension m >= 2".into(),
        ));
    }
    Ok(Nonlinearity::new_custom(
        &format!("mss:{m}"),
        m,
        Arc::new(move |p, n| mss_flux(p, m, n)),
        Arc::new(move |_z, _p, _n| vec![T::zero(); m]),
    ))
}

/// Rotation-by-`2 pi / k` matrix in the x plane, identity on y.
fn k_rotation<T: Scalar>(n: usize, k: usize) -> Vec<T> {
    let ang = T::TAU() / T::of_usize(k);
    let mut r = vec![T::zero(); n * n];
    r[0] = ang.cos();
    r[1] = -ang.sin();
    r[n] = ang.sin();
    r[n + 1] = ang.cos();
    for i in 2..n {
        r[i * n + i] = T::one();
    }
    r
}

/// Structural probes on (F, G): vanishing at zero with vanishing first
/// derivative (quadratic smallness), and k-rotation equivariance.
pub fn validate_nonlinearity<T: Scalar>(nl: &Nonlinearity<T>, n: usize, k: usize) -> Result<()> {
    let m = nl.m;
    let zero_p = vec![T::zero(); m * n];
    let zero_z = vec![T::zero(); m];
    let f0 = nl.eval_flux(&zero_p, n);
    if f0.iter().any(|v| v.abs() > T::of(1e-14)) {
        return Err(Error::InvalidProblem("F(0) != 0".into()));
    }
    let g0 = nl.eval_source(&zero_z, &zero_p, n);
    if g0.iter().any(|v| v.abs() > T::of(1e-14)) {
        return Err(Error::InvalidProblem("G(0, 0) != 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x464c5558);
    let norm = |v: &[T]| v.iter().map(|&x| x * x).sum::<T>().sqrt();
    // quadratic vanishing at 0: halving the argument shrinks the value by
    // better than the linear factor 1/2
    for _ in 0..6 {
        let dir: Vec<T> = (0..m * n).map(|_| T::of(rng.gen_range(-1.0..1.0))).collect();
        let eps = T::of(1e-3);
        let p1: Vec<T> = dir.iter().map(|&d| d * eps).collect();
        let p2: Vec<T> = dir.iter().map(|&d| d * eps * T::of(2.0)).collect();
        let (f1, f2) = (norm(&nl.eval_flux(&p1, n)), norm(&nl.eval_flux(&p2, n)));
        if f1 > T::of(0.35) * f2 + T::of(1e-30) {
            return Err(Error::InvalidProblem("DF(0) does not vanish".into()));
        }
        let zdir: Vec<T> = (0..m).map(|_| T::of(rng.gen_range(-1.0..1.0))).collect();
        let z1: Vec<T> = zdir.iter().map(|&d| d * eps).collect();
        let z2: Vec<T> = zdir.iter().map(|&d| d * eps * T::of(2.0)).collect();
        let (g1, g2) = (
            norm(&nl.eval_source(&z1, &p1, n)),
            norm(&nl.eval_source(&z2, &p2, n)),
        );
        if g1 > T::of(0.35) * g2 + T::of(1e-30) {
            return Err(Error::InvalidProblem("DG(0, 0) does not vanish".into()));
        }
    }
    // rotation equivariance: F(P R) = R^j_i F^j(P), G(Z, P R) = G(Z, P)
    let r = k_rotation::<T>(n, k);
    for _ in 0..8 {
        let p: Vec<T> = (0..m * n).map(|_| T::of(rng.gen_range(-0.5..0.5))).collect();
        let z: Vec<T> = (0..m).map(|_| T::of(rng.gen_range(-0.5..0.5))).collect();
        let mut pr = vec![T::zero(); m * n];
        for kappa in 0..m {
            for j in 0..n {
                let mut s = T::zero();
                for pp in 0..n {
                    s += p[kappa * n + pp] * r[pp * n + j];
                }
                pr[kappa * n + j] = s;
            }
        }
        let f_pr = nl.eval_flux(&pr, n);
        let f_p = nl.eval_flux(&p, n);
        let scale = T::one() + norm(&f_p);
        for kappa in 0..m {
            for i in 0..n {
                let mut expect = T::zero();
                for j in 0..n {
                    expect += r[j * n + i] * f_p[kappa * n + j];
                }
                if (f_pr[kappa * n + i] - expect).abs() > T::of(1e-10) * scale {
                    return Err(Error::InvalidProblem(
                        "F is not equivariant under the k rotation".into(),
                    ));
                }
            }
        }
        let g_pr = nl.eval_source(&z, &pr, n);
        let g_p = nl.eval_source(&z, &p, n);
        for kappa in 0..m {
            if (g_pr[kappa] - g_p[kappa]).abs() > T::of(1e-10) * (T::one() + g_p[kappa].abs()) {
                return Err(Error::InvalidProblem(
                    "G is not invariant under the k rotation".into(),
                ));
            }
        }
    }
    Ok(())
}

/// One Picard iteration row.
#[derive(Debug, Clone)]
pub struct IterRow<T: Scalar> {
    pub iter: usize,
    pub update_norm: T,
    pub residual: T,
    pub ratio: Option<T>,
}

/// Trace of a fixed-point run; `to_csv` renders `iter, update_norm,
/// residual, ratio` with an empty ratio on the first row.
#[derive(Debug, Clone)]
pub struct IterationTrace<T: Scalar> {
    pub rows: Vec<IterRow<T>>,
    pub converged: bool,
}

impl<T: Scalar> Default for IterationTrace<T> {
    fn default() -> Self {
        IterationTrace {
            rows: Vec::new(),
            converged: false,
        }
    }
}

impl<T: Scalar> IterationTrace<T> {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("iter,update_norm,residual,ratio\n");
        for row in &self.rows {
            let ratio = row
                .ratio
                .map(|r| format!("{:.16e}", r))
                .unwrap_or_default();
            s.push_str(&format!(
                "{},{:.16e},{:.16e},{}\n",
                row.iter, row.update_norm, row.residual, ratio
            ));
        }
        s
    }
}

#[derive(Debug)]
pub enum PicardError<T: Scalar> {
    /// Update norms grew for three consecutive iterations.
    Diverged { trace: IterationTrace<T> },
    /// An iterate violated the symmetry invariant.
    InvariantViolation { what: String },
    Solver(Error),
}

impl<T: Scalar> std::fmt::Display for PicardError<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PicardError::Diverged { trace } => {
                write!(f, "fixed-point iteration diverged after {} steps", trace.rows.len())
            }
            PicardError::InvariantViolation { what } => write!(f, "invariant violated: {what}"),
            PicardError::Solver(e) => write!(f, "linear solve failed: {e}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PicardOptions<T: Scalar> {
    pub tol: T,
    pub residual_tol: T,
    pub max_iters: usize,
    /// Hölder exponent of the norm surrogate; defaults to 1/(2q).
    pub mu: Option<T>,
    pub sym_tol: T,
    /// Optional under/over-relaxation factor; `None` is the plain map.
    pub relaxation: Option<T>,
}

impl<T: Scalar> Default for PicardOptions<T> {
    fn default() -> Self {
        PicardOptions {
            tol: T::of(1e-12),
            residual_tol: T::of(1e-8),
            max_iters: 30,
            mu: None,
            sym_tol: T::of(1e-8),
            relaxation: None,
        }
    }
}

/// Builds the Poisson data (solid part G, flux part F) of one iterate.
fn nonlinear_data<T: Scalar>(
    nl: &Nonlinearity<T>,
    u: &SheetedField<T>,
) -> Result<(SheetedField<T>, SheetedField<T>)> {
    let g = u.grid().clone();
    let n = g.n();
    let m = nl.m;
    let grad = gradient(&unfold(u)?)?;
    let mut gfield = SheetedField::zeros(g.clone(), m);
    let mut ffield = SheetedField::zeros(g.clone(), n * m);
    let mut pbuf = vec![T::zero(); m * n];
    let mut zbuf = vec![T::zero(); m];
    for l in 0..g.q() {
        for i in 0..g.nr() {
            for j in 0..g.ntheta() {
                for t in 0..g.ny_total() {
                    for kappa in 0..m {
                        zbuf[kappa] = u.at(l, i, j, t, kappa);
                        for dir in 0..n {
                            pbuf[kappa * n + dir] = grad.at(l, i, j, t, dir * m + kappa);
                        }
                    }
                    let fv = nl.eval_flux(&pbuf, n);
                    let gv = nl.eval_source(&zbuf, &pbuf, n);
                    for kappa in 0..m {
                        *gfield.at_mut(l, i, j, t, kappa) = gv[kappa];
                        for dir in 0..n {
                            *ffield.at_mut(l, i, j, t, dir * m + kappa) = fv[kappa * n + dir];
                        }
                    }
                }
            }
        }
    }
    Ok((gfield, ffield))
}

/// Weak residual of `u` against the quasilinear system defined by `nl`.
pub fn weak_residual<T: Scalar>(u: &SheetedField<T>, nl: &Nonlinearity<T>) -> Result<T> {
    if u.ncomp() != nl.m {
        return Err(Error::Dimension("component count mismatch".into()));
    }
    let (gfield, ffield) = nonlinear_data(nl, u)?;
    weak_residual_data(u, Some(&gfield), Some(&ffield))
}

/// Discrete C^{1,mu;q} surrogate of a field: sup |u| + sup |Du| + sampled
/// Hölder seminorm of Du (light sampling design, fixed seed).
pub fn surrogate_norm<T: Scalar>(u: &SheetedField<T>, mu: T) -> Result<T> {
    let grad = gradient(&unfold(u)?)?;
    let rep = crate::mv::holder_seminorm_of(&grad, mu, false);
    Ok(u.sup_abs() + grad.sup_abs() + rep.seminorm)
}

fn trace_symmetry_defect<T: Scalar>(phi: &Trace<T>) -> T {
    let g = phi.grid();
    let mut defect = T::zero();
    for l in 0..g.q() {
        for j in 0..g.ntheta() {
            let (l2, j2) = kfold_action(g, l, j);
            for t in 0..g.ny_total() {
                for c in 0..phi.ncomp() {
                    defect = defect.max((phi.at(l2, j2, t, c) - phi.at(l, j, t, c)).abs());
                }
            }
        }
    }
    defect
}

/// Fixed-point iteration `u^{(j+1)} = T(u^{(j)})`, `u^{(0)} = 0`, where T
/// solves the Poisson problem with data `(F(Dv), G(v, Dv))` and boundary
/// trace `phi`. Stops when the update norm drops below `opts.tol`.
pub fn picard_solve<T: Scalar>(
    nl: &Nonlinearity<T>,
    grid: &Grid<T>,
    phi: &Trace<T>,
    opts: &PicardOptions<T>,
) -> std::result::Result<(SheetedField<T>, IterationTrace<T>), PicardError<T>> {
    validate_nonlinearity(nl, grid.n(), grid.k())
        .map_err(|e| PicardError::InvariantViolation { what: e.to_string() })?;
    if phi.ncomp() != nl.m {
        return Err(PicardError::InvariantViolation {
            what: "boundary trace and nonlinearity disagree on m".into(),
        });
    }
    let mu = opts
        .mu
        .unwrap_or_else(|| T::one() / (T::of(2.0) * T::of_usize(grid.q())));
    let phi_defect = trace_symmetry_defect(phi);
    let mut u = SheetedField::zeros(grid.clone(), nl.m);
    let mut trace = IterationTrace::default();
    let mut prev_update: Option<T> = None;
    let mut grow_count = 0usize;
    for iter in 1..=opts.max_iters {
        let (gfield, ffield) = nonlinear_data(nl, &u).map_err(PicardError::Solver)?;
        let mut prob = PoissonProblem::new(grid.clone(), nl.m, phi.clone());
        prob.g = Some(gfield);
        prob.flux = Some(ffield);
        prob.mu = mu;
        prob.sym_tol = opts.sym_tol;
        let (mut u_next, _) = solve_dirichlet(&prob).map_err(PicardError::Solver)?;
        if let Some(omega) = opts.relaxation {
            u_next = u
                .lin_comb(T::one() - omega, &u_next, omega)
                .map_err(PicardError::Solver)?;
        }
        let diff = u_next
            .lin_comb(-T::one(), &u, T::one())
            .map_err(PicardError::Solver)?;
        // diff = u - u_next, sign irrelevant for the norm
        let update = surrogate_norm(&diff, mu).map_err(PicardError::Solver)?;
        let residual = weak_residual(&u_next, nl).map_err(PicardError::Solver)?;
        let ratio = prev_update.map(|p| update / p);
        trace.rows.push(IterRow {
            iter,
            update_norm: update,
            residual,
            ratio,
        });
        let defect = crate::mv::kfold_symmetry_defect(&u_next);
        if defect > phi_defect + T::of(1e-10) {
            return Err(PicardError::InvariantViolation {
                what: format!("symmetry defect grew to {defect:.3e}"),
            });
        }
        if let Some(p) = prev_update {
            if update > p {
                grow_count += 1;
                if grow_count >= 3 {
                    return Err(PicardError::Diverged { trace });
                }
            } else {
                grow_count = 0;
            }
        }
        u = u_next;
        prev_update = Some(update);
        if update <= opts.tol {
            trace.converged = true;
            break;
        }
    }
    Ok((u, trace))
}
