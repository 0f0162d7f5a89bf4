//! Independent cross-check solver: a direct second-order finite-difference
//! discretization of the Laplacian on the sheeted polar grid itself, with
//! the sheets coupled across the cut and through a shared axis unknown.
//! No unfolding, no mode filtering -- this is the oracle the spectral
//! pipeline is validated against.
//!
//! The discrete operator is assembled in conservative (edge/flux) form, so
//! the system is symmetric positive definite and is solved by
//! Jacobi-preconditioned conjugate gradients with a fixed iteration order.

use crate::error::{Error, Result};
use crate::field::SheetedField;
use crate::grid::Grid;
use crate::poisson::PoissonProblem;
use crate::scalar::Scalar;

const MAX_UNKNOWNS: usize = 500_000;

struct EdgeSystem<T: Scalar> {
    n: usize,
    diag: Vec<T>,
    edges: Vec<(usize, usize, T)>,
}

impl<T: Scalar> EdgeSystem<T> {
    fn apply(&self, x: &[T], y: &mut [T]) {
        for (yi, (&d, &xi)) in y.iter_mut().zip(self.diag.iter().zip(x.iter())) {
            *yi = d * xi;
        }
        for &(a, b, c) in &self.edges {
            y[a] -= c * x[b];
            y[b] -= c * x[a];
        }
    }

    fn solve_cg(&self, b: &[T], tol: T, max_iter: usize) -> Result<Vec<T>> {
        let n = self.n;
        let mut x = vec![T::zero(); n];
        let mut r = b.to_vec();
        let bnorm = r.iter().map(|v| *v * *v).sum::<T>().sqrt();
        if bnorm == T::zero() {
            return Ok(x);
        }
        let inv_d: Vec<T> = self.diag.iter().map(|&d| T::one() / d).collect();
        let mut z: Vec<T> = r.iter().zip(inv_d.iter()).map(|(&ri, &di)| ri * di).collect();
        let mut p = z.clone();
        let mut rz = r.iter().zip(z.iter()).map(|(&a, &bb)| a * bb).sum::<T>();
        let mut ap = vec![T::zero(); n];
        for _ in 0..max_iter {
            self.apply(&p, &mut ap);
            let pap = p.iter().zip(ap.iter()).map(|(&a, &bb)| a * bb).sum::<T>();
            if pap <= T::zero() {
                return Err(Error::Numeric("CG lost positive definiteness".into()));
            }
            let alpha = rz / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            let rnorm = r.iter().map(|v| *v * *v).sum::<T>().sqrt();
            if rnorm <= tol * bnorm {
                return Ok(x);
            }
            for i in 0..n {
                z[i] = r[i] * inv_d[i];
            }
            let rz_new = r.iter().zip(z.iter()).map(|(&a, &bb)| a * bb).sum::<T>();
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        Err(Error::Numeric("CG did not converge".into()))
    }
}

struct Layout<'a, T: Scalar> {
    g: &'a Grid<T>,
    nr_int: usize, // interior radial nodes (boundary ring excluded)
}

impl<'a, T: Scalar> Layout<'a, T> {
    fn interior(&self, l: usize, i: usize, j: usize, t: usize) -> usize {
        let g = self.g;
        ((l * self.nr_int + i) * g.ntheta() + j) * g.ny_total() + t
    }

    fn axis(&self, t: usize) -> usize {
        self.g.q() * self.nr_int * self.g.ntheta() * self.g.ny_total() + t
    }

    fn total(&self) -> usize {
        self.g.q() * self.nr_int * self.g.ntheta() * self.g.ny_total() + self.g.ny_total()
    }
}

/// Solves the same Dirichlet problem as `solve_dirichlet`, directly on the
/// sheeted grid. Guarded to `total unknowns <= 5e5`.
pub fn direct_fd_reference<T: Scalar>(p: &PoissonProblem<T>) -> Result<SheetedField<T>> {
    p.validate()?;
    let g = p.grid.clone();
    let nr = g.nr();
    if nr < 2 {
        return Err(Error::Resolution("need at least 2 radial rings".into()));
    }
    let nr_int = nr - 1;
    let nt = g.ntheta();
    let nyt = g.ny_total();
    let dims = g.ny().len();
    let lay = Layout { g: &g, nr_int };
    let n_unknowns = lay.total();
    if n_unknowns * p.ncomp > MAX_UNKNOWNS {
        return Err(Error::SizeGuard(format!(
            "{} unknowns exceed the direct-solver guard {MAX_UNKNOWNS}",
            n_unknowns * p.ncomp
        )));
    }

    let dtheta = T::TAU() / T::of_usize(nt);
    let ywt: T = (0..dims)
        .map(|d| g.rho()[d] / T::of_usize(g.ny()[d]))
        .fold(T::one(), |a, b| a * b);
    let s0 = g.r(0) * T::of(0.5); // axis cell boundary
    // radial cell faces m_{i +- 1/2} and widths
    let face = |i: usize| -> T {
        // face between rings i and i+1 (i = nr-2 reaches the boundary ring)
        (g.r(i) + g.r(i + 1)) * T::of(0.5)
    };
    let width = |i: usize| -> T {
        let lo = if i == 0 { s0 } else { face(i - 1) };
        let hi = if i == nr - 1 { T::one() } else { face(i) };
        hi - lo
    };

    // assemble edges shared by all components
    let mut diag = vec![T::zero(); n_unknowns];
    let mut edges: Vec<(usize, usize, T)> = Vec::new();
    // (a, dirichlet column (l, j, t), coeff) rows that touch the boundary ring
    let mut boundary_links: Vec<(usize, usize, T)> = Vec::new();

    for l in 0..g.q() {
        for i in 0..nr_int {
            for j in 0..nt {
                for t in 0..nyt {
                    let a = lay.interior(l, i, j, t);
                    // radial edge to ring i+1
                    let c = face(i) * dtheta * ywt / (g.r(i + 1) - g.r(i));
                    if i + 1 < nr_int {
                        let b = lay.interior(l, i + 1, j, t);
                        edges.push((a, b, c));
                        diag[a] += c;
                        diag[b] += c;
                    } else {
                        diag[a] += c;
                        boundary_links.push((a, (l * nt + j) * nyt + t, c));
                    }
                    // innermost ring couples to the axis
                    if i == 0 {
                        let c = s0 * dtheta * ywt / g.r(0);
                        let b = lay.axis(t);
                        edges.push((a, b, c));
                        diag[a] += c;
                        diag[b] += c;
                    }
                    // angular edge to the next node (crossing the cut steps
                    // onto the next sheet)
                    let (l2, j2) = if j + 1 < nt {
                        (l, j + 1)
                    } else {
                        ((l + 1) % g.q(), 0)
                    };
                    let c = width(i) * ywt / (g.r(i) * dtheta);
                    let b = lay.interior(l2, i, j2, t);
                    edges.push((a, b, c));
                    diag[a] += c;
                    diag[b] += c;
                    // y edges
                    let mut idx = [0usize; 2];
                    g.y_indices(t, &mut idx[..dims]);
                    for d in 0..dims {
                        if g.ny()[d] < 2 {
                            continue;
                        }
                        let mut nxt = idx;
                        nxt[d] = (idx[d] + 1) % g.ny()[d];
                        let t2 = g.y_flat(&nxt[..dims]);
                        let dy = g.rho()[d] / T::of_usize(g.ny()[d]);
                        let c = g.r(i) * width(i) * dtheta * ywt / (dy * dy);
                        let b = lay.interior(l, i, j, t2);
                        edges.push((a, b, c));
                        diag[a] += c;
                        diag[b] += c;
                    }
                }
            }
        }
    }
    // axis y edges (axis cell area on the q-fold cover)
    let axis_area = T::of_usize(g.q()) * T::PI() * s0 * s0;
    let mut idx = [0usize; 2];
    for t in 0..nyt {
        g.y_indices(t, &mut idx[..dims]);
        for d in 0..dims {
            if g.ny()[d] < 2 {
                continue;
            }
            let mut nxt = idx;
            nxt[d] = (idx[d] + 1) % g.ny()[d];
            let t2 = g.y_flat(&nxt[..dims]);
            let dy = g.rho()[d] / T::of_usize(g.ny()[d]);
            // axis_area * (prod_{d' != d} dy_{d'}) / dy_d
            let c = axis_area * ywt / (dy * dy);
            let (a, b) = (lay.axis(t), lay.axis(t2));
            edges.push((a, b, c));
            diag[a] += c;
            diag[b] += c;
        }
    }

    let system = EdgeSystem {
        n: n_unknowns,
        diag,
        edges,
    };

    let mut out = SheetedField::zeros(g.clone(), p.ncomp);
    for c_idx in 0..p.ncomp {
        // right-hand side: Dirichlet lifts, solid data and flux divergence
        let mut b = vec![T::zero(); n_unknowns];
        for &(a, col, coeff) in &boundary_links {
            let t = col % nyt;
            let j = (col / nyt) % nt;
            let l = col / (nyt * nt);
            b[a] += coeff * p.phi.at(l, j, t, c_idx);
        }
        if let Some(gf) = &p.g {
            for l in 0..g.q() {
                for i in 0..nr_int {
                    let meas = g.r(i) * width(i) * dtheta * ywt;
                    for j in 0..nt {
                        for t in 0..nyt {
                            b[lay.interior(l, i, j, t)] -= meas * gf.at(l, i, j, t, c_idx);
                        }
                    }
                }
            }
            // axis cell source: mean of the innermost ring
            for t in 0..nyt {
                let mut s = T::zero();
                for l in 0..g.q() {
                    for j in 0..nt {
                        s += gf.at(l, 0, j, t, c_idx);
                    }
                }
                let mean = s / T::of_usize(g.q() * nt);
                b[lay.axis(t)] -= mean * axis_area * ywt;
            }
        }
        if let Some(ff) = &p.flux {
            let nc = p.ncomp;
            let f_r = |l: usize, i: usize, j: usize, t: usize| -> T {
                let th = g.theta(j);
                ff.at(l, i, j, t, c_idx) * th.cos() + ff.at(l, i, j, t, nc + c_idx) * th.sin()
            };
            let f_th = |l: usize, i: usize, j: usize, t: usize| -> T {
                let th = g.theta(j);
                -ff.at(l, i, j, t, c_idx) * th.sin() + ff.at(l, i, j, t, nc + c_idx) * th.cos()
            };
            let half = T::of(0.5);
            for l in 0..g.q() {
                for j in 0..nt {
                    for t in 0..nyt {
                        // radial faces
                        for i in 0..nr - 1 {
                            let fbar = (f_r(l, i, j, t) + f_r(l, i + 1, j, t)) * half;
                            let flux = face(i) * dtheta * ywt * fbar;
                            if i < nr_int {
                                b[lay.interior(l, i, j, t)] -= flux;
                            }
                            if i + 1 < nr_int {
                                b[lay.interior(l, i + 1, j, t)] += flux;
                            }
                        }
                        // axis face (innermost ring to the axis cell)
                        let fbar = f_r(l, 0, j, t);
                        let flux = s0 * dtheta * ywt * fbar;
                        b[lay.axis(t)] -= flux;
                        b[lay.interior(l, 0, j, t)] += flux;
                        // angular faces
                        let (l2, j2) = if j + 1 < nt {
                            (l, j + 1)
                        } else {
                            ((l + 1) % g.q(), 0)
                        };
                        for i in 0..nr_int {
                            let fbar = (f_th(l, i, j, t) + f_th(l2, i, j2, t)) * half;
                            let flux = width(i) * ywt * fbar;
                            b[lay.interior(l, i, j, t)] -= flux;
                            b[lay.interior(l2, i, j2, t)] += flux;
                        }
                        // y faces
                        let mut idx = [0usize; 2];
                        g.y_indices(t, &mut idx[..dims]);
                        for d in 0..dims {
                            if g.ny()[d] < 2 {
                                continue;
                            }
                            let mut nxt = idx;
                            nxt[d] = (idx[d] + 1) % g.ny()[d];
                            let t2 = g.y_flat(&nxt[..dims]);
                            let dy = g.rho()[d] / T::of_usize(g.ny()[d]);
                            for i in 0..nr_int {
                                let fa = ff.at(l, i, j, t, (2 + d) * nc + c_idx);
                                let fb = ff.at(l, i, j, t2, (2 + d) * nc + c_idx);
                                let flux = g.r(i) * width(i) * dtheta * (ywt / dy) * (fa + fb) * half;
                                b[lay.interior(l, i, j, t)] -= flux;
                                b[lay.interior(l, i, j, t2)] += flux;
                            }
                        }
                    }
                }
            }
        }

        let x = system.solve_cg(&b, T::of(1e-12), 60_000)?;
        for l in 0..g.q() {
            for i in 0..nr_int {
                for j in 0..nt {
                    for t in 0..nyt {
                        *out.at_mut(l, i, j, t, c_idx) = x[lay.interior(l, i, j, t)];
                    }
                }
            }
            for j in 0..nt {
                for t in 0..nyt {
                    *out.at_mut(l, nr - 1, j, t, c_idx) = p.phi.at(l, j, t, c_idx);
                }
            }
        }
    }
    Ok(out)
}
