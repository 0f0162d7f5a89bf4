//! Quantitative checks of the regularity structure of computed fields:
//! decay exponents near the axis, the frequency function, the branch-set
//! trace, Cauchy-type bounds on y derivatives, maximum-principle defects,
//! and discrete Poincaré / Sobolev ratios.

use crate::error::{Error, Result};
use crate::field::{SheetedField, UnfoldedField};
use crate::grid::Grid;
use crate::scalar::Scalar;
use crate::spectrum::analyze;
use crate::unfold::{gradient_unfolded, unfold};
use num_complex::Complex;

/// Least-squares slope and standard error of `ys` against `xs` (both given
/// in log space).
pub fn loglog_slope_ln<T: Scalar>(xs: &[T], ys: &[T]) -> Result<(T, T)> {
    let n = xs.len();
    if n < 4 || ys.len() != n {
        return Err(Error::Resolution(format!(
            "slope fit needs at least 4 points, got {n}"
        )));
    }
    let nf = T::of_usize(n);
    let mean = |v: &[T]| v.iter().copied().sum::<T>() / nf;
    let (mx, my) = (mean(xs), mean(ys));
    let mut sxx = T::zero();
    let mut sxy = T::zero();
    for (x, y) in xs.iter().zip(ys.iter()) {
        sxx += (*x - mx) * (*x - mx);
        sxy += (*x - mx) * (*y - my);
    }
    if sxx == T::zero() {
        return Err(Error::Degenerate("slope fit over a single radius".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut ss = T::zero();
    for (x, y) in xs.iter().zip(ys.iter()) {
        let r = *y - (slope * *x + intercept);
        ss += r * r;
    }
    let dof = T::of_usize(n.saturating_sub(2).max(1));
    let stderr = (ss / dof / sxx).sqrt();
    Ok((slope, stderr))
}

/// Fitted slope of `log sup_{theta,y} |f|` (or `|Df|`) against `log r` over
/// the field's radial nodes inside `window = (r_lo, r_hi]`.
pub fn decay_exponent<T: Scalar>(
    f: &SheetedField<T>,
    use_gradient: bool,
    window: (T, T),
) -> Result<(T, T)> {
    let g = f.grid().clone();
    if window.1 > T::of(0.2) || window.0 <= T::zero() || window.0 >= window.1 {
        return Err(Error::InvalidProblem(
            "decay window must satisfy 0 < lo < hi <= 0.2".into(),
        ));
    }
    // the fit is vacuous unless the field is average-free
    let (avg, _) = crate::mv::average_free_decompose(f);
    let sup = f.sup_abs();
    if sup == T::zero() {
        return Err(Error::Degenerate("decay fit of the zero field".into()));
    }
    if avg.sup_abs() > T::of(1e-6) * sup {
        return Err(Error::InvalidProblem(
            "decay fit requires an average-free field".into(),
        ));
    }
    let target: SheetedField<T> = if use_gradient {
        crate::unfold::gradient(&unfold(f)?)?
    } else {
        f.clone()
    };
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..g.nr() {
        let r = g.r(i);
        if r < window.0 || r > window.1 {
            continue;
        }
        let mut ring_sup = T::zero();
        for l in 0..g.q() {
            for j in 0..g.ntheta() {
                for t in 0..g.ny_total() {
                    ring_sup = ring_sup.max(target.node_abs(l, i, j, t));
                }
            }
        }
        if ring_sup > T::zero() {
            xs.push(r.ln());
            ys.push(ring_sup.ln());
        }
    }
    loglog_slope_ln(&xs, &ys)
}

/// Frequency profile of a field at axis center `(0, y0)`.
#[derive(Debug, Clone)]
pub struct FrequencyProfile<T: Scalar> {
    pub y0: Vec<T>,
    pub radii: Vec<T>,
    pub values: Vec<T>,
    pub numerators: Vec<T>,
    pub denominators: Vec<T>,
}

/// Refinement factors bringing the angular count to >= 256 and each y count
/// to >= 32 for interpolation-based quadrature.
fn upsample_factors<T: Scalar>(g: &Grid<T>) -> (usize, usize) {
    let ft = 256usize.div_ceil(g.ntheta_hat()).max(1);
    let fy = g
        .ny()
        .iter()
        .map(|&n| 32usize.div_ceil(n).max(1))
        .max()
        .unwrap_or(1);
    (ft, fy)
}

/// Periodic multilinear interpolation on the unfolded grid (uniform in
/// r_hat, periodic in theta_hat and y). Radial index 0 resolves to the axis
/// value.
fn interp_unfolded<T: Scalar>(u: &UnfoldedField<T>, r_hat: T, theta_hat: T, y: &[T], c: usize) -> T {
    let g = u.grid();
    let h = g.h();
    let nr = g.nr_hat();
    let rpos = (r_hat / h).max(T::zero());
    let mut a0 = rpos.floor().to_f64().unwrap() as usize;
    if a0 > nr - 2 {
        a0 = nr - 2;
    }
    let fr = (rpos - T::of_usize(a0)).max(T::zero()).min(T::one());

    let nth = g.ntheta_hat();
    let tpos = theta_hat / T::TAU() * T::of_usize(nth) - T::of(0.5);
    let b0f = tpos.floor();
    let ft = tpos - b0f;
    let b0 = (b0f.to_f64().unwrap() as i64).rem_euclid(nth as i64) as usize;
    let b1 = (b0 + 1) % nth;

    let dims = g.ny().len();
    let mut tw = [(0usize, 0usize, T::zero()); 2];
    for d in 0..dims {
        let nyd = g.ny()[d];
        let pos = y[d] / g.rho()[d] * T::of_usize(nyd);
        let p0f = pos.floor();
        let fy = pos - p0f;
        let t0 = (p0f.to_f64().unwrap() as i64).rem_euclid(nyd as i64) as usize;
        tw[d] = (t0, (t0 + 1) % nyd, fy);
    }

    let value_at = |a: usize, b: usize, tflat: usize| -> T {
        if a == 0 {
            u.axis_value(tflat, c).unwrap_or_else(T::zero)
        } else {
            u.at(a, b, tflat, c)
        }
    };

    let mut acc = T::zero();
    // corners over (r, theta, y dims)
    let corners = 1usize << (2 + dims);
    let mut idx = vec![0usize; dims];
    for corner in 0..corners {
        let ar = if corner & 1 == 0 { a0 } else { a0 + 1 };
        let wb = if corner & 2 == 0 { b0 } else { b1 };
        let mut w = (if corner & 1 == 0 { T::one() - fr } else { fr })
            * (if corner & 2 == 0 { T::one() - ft } else { ft });
        for d in 0..dims {
            let bit = corner & (4 << d) != 0;
            let (t0, t1, fy) = tw[d];
            idx[d] = if bit { t1 } else { t0 };
            w *= if bit { fy } else { T::one() - fy };
        }
        let tflat = g.y_flat(&idx);
        acc += w * value_at(ar, wb, tflat);
    }
    acc
}

/// Sum over sheets of the squared values of a q-valued function at a
/// physical point `(x, y)` via the unfolded representation.
fn sheet_sum_sq<T: Scalar>(u: &UnfoldedField<T>, q: usize, x1: T, x2: T, y: &[T]) -> T {
    let r = (x1 * x1 + x2 * x2).sqrt();
    let mut th = x2.atan2(x1);
    if th < T::zero() {
        th += T::TAU();
    }
    let r_hat = r.powf(T::one() / T::of_usize(q));
    let mut acc = T::zero();
    for l in 0..q {
        let th_hat = (th + T::TAU() * T::of_usize(l)) / T::of_usize(q);
        for c in 0..u.ncomp() {
            let v = interp_unfolded(u, r_hat, th_hat, y, c);
            acc += v * v;
        }
    }
    acc
}

struct SphereRule<T: Scalar> {
    /// unit direction split into (x1, x2, y-part) and quadrature weight
    nodes: Vec<([T; 2], Vec<T>, T)>,
}

fn sphere_rule<T: Scalar>(dims: usize) -> SphereRule<T> {
    let mut nodes = Vec::new();
    match dims {
        1 => {
            // S^2 in (x1, x2, y): midpoint in the polar angle, uniform azimuth
            let (nphi, nalpha) = (48usize, 64usize);
            let wphi = T::PI() / T::of_usize(nphi);
            let walpha = T::TAU() / T::of_usize(nalpha);
            for p in 0..nphi {
                let phi = (T::of_usize(p) + T::of(0.5)) * wphi;
                let (sp, cp) = (phi.sin(), phi.cos());
                for a in 0..nalpha {
                    let alpha = (T::of_usize(a) + T::of(0.5)) * walpha;
                    nodes.push((
                        [sp * alpha.cos(), sp * alpha.sin()],
                        vec![cp],
                        sp * wphi * walpha,
                    ));
                }
            }
        }
        2 => {
            // S^3 in (x1, x2, y1, y2)
            let (n1, n2, nalpha) = (24usize, 24usize, 32usize);
            let w1 = T::PI() / T::of_usize(n1);
            let w2 = T::PI() / T::of_usize(n2);
            let walpha = T::TAU() / T::of_usize(nalpha);
            for p1 in 0..n1 {
                let phi1 = (T::of_usize(p1) + T::of(0.5)) * w1;
                for p2 in 0..n2 {
                    let phi2 = (T::of_usize(p2) + T::of(0.5)) * w2;
                    let sin12 = phi1.sin() * phi2.sin();
                    for a in 0..nalpha {
                        let alpha = (T::of_usize(a) + T::of(0.5)) * walpha;
                        nodes.push((
                            [sin12 * alpha.cos(), sin12 * alpha.sin()],
                            vec![phi1.cos(), phi1.sin() * phi2.cos()],
                            phi1.sin() * phi1.sin() * phi2.sin() * w1 * w2 * walpha,
                        ));
                    }
                }
            }
        }
        _ => unreachable!("grid construction limits n to 3 or 4"),
    }
    SphereRule { nodes }
}

/// Frequency function
/// `N(rho) = rho^{2-n} int_{B_rho} sum_l |Du_l|^2 / (rho^{1-n} int_{dB_rho} sum_l |u_l|^2)`
/// by midpoint quadrature in spherical shells with multilinear interpolation
/// of the unfolded field and its transported gradient.
pub fn frequency_function<T: Scalar>(
    f: &SheetedField<T>,
    y0: &[T],
    radii: &[T],
) -> Result<FrequencyProfile<T>> {
    let g = f.grid().clone();
    let dims = g.ny().len();
    if y0.len() != dims {
        return Err(Error::Dimension("y0 dimension mismatch".into()));
    }
    let max_rho = radii.iter().cloned().fold(T::zero(), T::max);
    let min_period = g.rho().iter().cloned().fold(T::infinity(), T::min);
    if max_rho >= T::one() || max_rho > min_period * T::of(0.5) {
        return Err(Error::InvalidProblem(
            "frequency radii must keep the ball inside the cylinder".into(),
        ));
    }
    let mut u0 = unfold(f)?;
    if u0.axis().is_none() {
        // average-free usage: the axis value is zero; general fields get the
        // angular mean of the innermost ring
        let mut axis = vec![T::zero(); g.ny_total() * f.ncomp()];
        let nthf = T::of_usize(g.ntheta_hat());
        for t in 0..g.ny_total() {
            for c in 0..f.ncomp() {
                let mut s = T::zero();
                for b in 0..g.ntheta_hat() {
                    s += u0.at(1, b, t, c);
                }
                axis[t * f.ncomp() + c] = s / nthf;
            }
        }
        u0.set_axis(Some(axis));
    }
    let mut grad = gradient_unfolded(&u0)?;
    grad.set_axis(Some(vec![T::zero(); g.ny_total() * grad.ncomp()]));
    // multilinear interpolation needs angular/y resolution well past the
    // data bandwidth; refine spectrally before sampling
    let (ft, fy) = upsample_factors(&g);
    let u0 = crate::spectrum::upsample(&u0, ft, fy)?;
    let grad = crate::spectrum::upsample(&grad, ft, fy)?;

    let n = g.n();
    let rule = sphere_rule::<T>(dims);
    let n_shell = 48usize;

    let q = g.q();
    let mut values = Vec::new();
    let mut numerators = Vec::new();
    let mut denominators = Vec::new();
    let mut ybuf = vec![T::zero(); dims];
    for &rho in radii {
        // boundary integral of sum_l |u_l|^2
        let mut den = T::zero();
        for (xdir, ydir, w) in &rule.nodes {
            for d in 0..dims {
                ybuf[d] = y0[d] + rho * ydir[d];
            }
            den += *w * sheet_sum_sq(&u0, q, rho * xdir[0], rho * xdir[1], &ybuf);
        }
        den *= rho.powi(n as i32 - 1);
        // volume integral of sum_l |Du_l|^2 over nested shells
        let mut num = T::zero();
        let ds = rho / T::of_usize(n_shell);
        for si in 0..n_shell {
            let s = (T::of_usize(si) + T::of(0.5)) * ds;
            let mut shell = T::zero();
            for (xdir, ydir, w) in &rule.nodes {
                for d in 0..dims {
                    ybuf[d] = y0[d] + s * ydir[d];
                }
                shell += *w * sheet_sum_sq(&grad, q, s * xdir[0], s * xdir[1], &ybuf);
            }
            num += shell * s.powi(n as i32 - 1) * ds;
        }
        if den <= T::zero() {
            return Err(Error::Degenerate(format!(
                "field vanishes on the sphere of radius {rho}"
            )));
        }
        let value = num * rho.powi(2 - n as i32) / (den * rho.powi(1 - n as i32));
        numerators.push(num * rho.powi(2 - n as i32));
        denominators.push(den * rho.powi(1 - n as i32));
        values.push(value);
    }
    Ok(FrequencyProfile {
        y0: y0.to_vec(),
        radii: radii.to_vec(),
        values,
        numerators,
        denominators,
    })
}

/// Branch-set trace: the axis values of the represented function as a
/// function of y, with spectral y derivatives up to order 4 (along the first
/// y dimension).
#[derive(Debug, Clone)]
pub struct BranchSet<T: Scalar> {
    pub trace: Vec<T>,
    pub derivatives: [Vec<T>; 4],
}

pub fn branch_set<T: Scalar>(f: &SheetedField<T>) -> Result<BranchSet<T>> {
    if f.ncomp() != 1 {
        return Err(Error::Dimension("branch trace expects a scalar field".into()));
    }
    let g = f.grid().clone();
    let spec = analyze(&unfold(f)?);
    let nyt = g.ny_total();
    // axis value of the m = 0 radial profile by quadratic extrapolation from
    // the three innermost rings (linear when the grid only has two)
    let (w1, w2, w3) = (T::of(3.0), T::of(-3.0), T::of(1.0));
    let mut axis_modes = vec![Complex::new(T::zero(), T::zero()); nyt];
    for (zt, am) in axis_modes.iter_mut().enumerate() {
        let v1 = spec.at(1, 0, zt, 0);
        let v2 = spec.at(2, 0, zt, 0);
        *am = if g.nr_hat() >= 4 {
            let v3 = spec.at(3, 0, zt, 0);
            v1.scale(w1) + v2.scale(w2) + v3.scale(w3)
        } else {
            v1.scale(T::of(2.0)) - v2
        };
    }
    let yshape = g.ny().to_vec();
    let mut trace_c = axis_modes.clone();
    for ax in 0..yshape.len() {
        crate::spectrum::fft_axis_pub(&mut trace_c, &yshape, ax, false);
    }
    let trace: Vec<T> = trace_c.iter().map(|v| v.re).collect();
    let dims = g.ny().len();
    let mut z = [0i64; 2];
    let mut derivatives: [Vec<T>; 4] = [vec![], vec![], vec![], vec![]];
    for (p, slot) in derivatives.iter_mut().enumerate() {
        let order = p + 1;
        let mut buf = axis_modes.clone();
        for (zt, v) in buf.iter_mut().enumerate() {
            g.y_modes(zt, &mut z[..dims]);
            let w = T::TAU() * T::of(z[0] as f64) / g.rho()[0];
            let factor = Complex::new(T::zero(), w).powu(order as u32);
            *v *= factor;
        }
        for ax in 0..yshape.len() {
            crate::spectrum::fft_axis_pub(&mut buf, &yshape, ax, false);
        }
        *slot = buf.iter().map(|v| v.re).collect();
    }
    Ok(BranchSet { trace, derivatives })
}

/// Per-order sup bounds of spectral y derivatives and the fitted constant of
/// the envelope `S_p <= p! C^p R^{-p}`.
///
/// The envelope constants `C_p = (S_p R^p / p!)^{1/p}` are computed on the
/// sup-normalized field: otherwise the overall field amplitude enters as
/// `amplitude^{1/p}` and drifts with p, masking the growth rate that
/// signals y-analyticity. `S_p` rows are reported unnormalized.
#[derive(Debug, Clone)]
pub struct CauchyFit<T: Scalar> {
    pub c_estimate: T,
    /// rows (p, S_p, C_p)
    pub table: Vec<(usize, T, T)>,
    pub tail_warning: bool,
}

pub fn cauchy_bound_fit<T: Scalar>(
    f: &SheetedField<T>,
    p_max: usize,
    radius: T,
) -> Result<CauchyFit<T>> {
    if p_max == 0 || p_max > 8 {
        return Err(Error::InvalidProblem("p_max must be in 1..=8".into()));
    }
    let g = f.grid().clone();
    let dims = g.ny().len();
    let nyt = g.ny_total();
    let yshape = g.ny().to_vec();

    // y-spectrum per (sheet, radius, angle, comp) line
    let mut z = [0i64; 2];
    // spectral tail check: energy in the top quarter of y bins
    let mut tail = T::zero();
    let mut total = T::zero();
    let mut lines: Vec<Vec<Complex<T>>> = Vec::new();
    let mut buf = vec![Complex::new(T::zero(), T::zero()); nyt];
    for l in 0..g.q() {
        for i in 0..g.nr() {
            for j in 0..g.ntheta() {
                for c in 0..f.ncomp() {
                    for t in 0..nyt {
                        buf[t] = Complex::new(f.at(l, i, j, t, c), T::zero());
                    }
                    for ax in 0..yshape.len() {
                        crate::spectrum::fft_axis_pub(&mut buf, &yshape, ax, true);
                    }
                    let norm = T::one() / T::of_usize(nyt);
                    for v in buf.iter_mut() {
                        *v = v.scale(norm);
                    }
                    for (zt, v) in buf.iter().enumerate() {
                        g.y_modes(zt, &mut z[..dims]);
                        let e = v.norm_sqr();
                        total += e;
                        let mut is_tail = false;
                        for d in 0..dims {
                            if 4 * z[d].unsigned_abs() as usize >= g.ny()[d] && g.ny()[d] > 4 {
                                is_tail = true;
                            }
                        }
                        if is_tail {
                            tail += e;
                        }
                    }
                    lines.push(buf.clone());
                }
            }
        }
    }
    let tail_warning = total > T::zero() && tail / total > T::of(1e-8);

    // multi-index derivative sups; for n = 4 take the max over |gamma| = p
    let scale = f.sup_abs();
    let inv_scale = if scale > T::zero() {
        T::one() / scale
    } else {
        T::one()
    };
    let mut table = Vec::new();
    let mut c_estimate = T::zero();
    for p in 1..=p_max {
        let mut sup = T::zero();
        let gammas: Vec<Vec<usize>> = if dims == 1 {
            vec![vec![p]]
        } else {
            (0..=p).map(|a| vec![a, p - a]).collect()
        };
        for gamma in &gammas {
            for line in &lines {
                let mut node_max = T::zero();
                let mut dbuf = line.clone();
                for (zt, v) in dbuf.iter_mut().enumerate() {
                    g.y_modes(zt, &mut z[..dims]);
                    let mut factor = Complex::new(T::one(), T::zero());
                    for d in 0..dims {
                        let w = T::TAU() * T::of(z[d] as f64) / g.rho()[d];
                        factor *= Complex::new(T::zero(), w).powu(gamma[d] as u32);
                    }
                    *v *= factor;
                }
                for ax in 0..yshape.len() {
                    crate::spectrum::fft_axis_pub(&mut dbuf, &yshape, ax, false);
                }
                for v in &dbuf {
                    node_max = node_max.max(v.re.abs());
                }
                sup = sup.max(node_max);
            }
        }
        let mut pfac = T::one();
        for i in 2..=p {
            pfac *= T::of_usize(i);
        }
        let cp = if sup == T::zero() {
            T::zero()
        } else {
            (sup * inv_scale * radius.powi(p as i32) / pfac).powf(T::one() / T::of_usize(p))
        };
        c_estimate = c_estimate.max(cp);
        table.push((p, sup, cp));
    }
    Ok(CauchyFit {
        c_estimate,
        table,
        tail_warning,
    })
}

/// Interior sup minus boundary sup, per component (positive values violate
/// the maximum principle).
pub fn max_principle_check<T: Scalar>(f: &SheetedField<T>) -> T {
    let g = f.grid();
    let mut worst = T::neg_infinity();
    for c in 0..f.ncomp() {
        let mut interior = T::neg_infinity();
        let mut boundary = T::neg_infinity();
        for l in 0..g.q() {
            for i in 0..g.nr() {
                for j in 0..g.ntheta() {
                    for t in 0..g.ny_total() {
                        let v = f.at(l, i, j, t, c);
                        if i == g.nr() - 1 {
                            boundary = boundary.max(v);
                        } else {
                            interior = interior.max(v);
                        }
                    }
                }
            }
        }
        worst = worst.max(interior - boundary);
    }
    worst
}

/// Cylinder quadrature weights: cell measure of sheeted node (i, j, t).
fn cell_measure<T: Scalar>(g: &Grid<T>, i: usize) -> T {
    let r = g.r(i);
    let lo = if i == 0 {
        r * T::of(0.5)
    } else {
        (g.r(i - 1) + r) * T::of(0.5)
    };
    let hi = if i == g.nr() - 1 {
        T::one()
    } else {
        (g.r(i + 1) + r) * T::of(0.5)
    };
    let dtheta = T::TAU() / T::of_usize(g.ntheta());
    let ywt: T = (0..g.ny().len())
        .map(|d| g.rho()[d] / T::of_usize(g.ny()[d]))
        .fold(T::one(), |a, b| a * b);
    r * (hi - lo) * dtheta * ywt
}

/// `||u - l||_{L^2;q}(B_R) / (R ||Du||_{L^2;q}(B_R))` on the axis-centered
/// ball, with `l` the ball mean of the sheet average.
pub fn poincare_ratio<T: Scalar>(f: &SheetedField<T>, radius: T) -> Result<T> {
    let g = f.grid().clone();
    let dims = g.ny().len();
    let mut u0 = unfold(f)?;
    if u0.axis().is_none() {
        u0.set_axis(Some(vec![T::zero(); g.ny_total() * f.ncomp()]));
    }
    let mut grad = gradient_unfolded(&u0)?;
    grad.set_axis(Some(vec![T::zero(); g.ny_total() * grad.ncomp()]));
    let (ft, fy) = upsample_factors(&g);
    let u0 = crate::spectrum::upsample(&u0, ft, fy)?;
    let grad = crate::spectrum::upsample(&grad, ft, fy)?;
    let rule = sphere_rule::<T>(dims);
    let n_shell = 48usize;
    let y0 = vec![T::zero(); dims];
    let q = g.q();
    let qf = T::of_usize(q);
    let ds = radius / T::of_usize(n_shell);
    let mut ybuf = vec![T::zero(); dims];
    // ball mean of the sheet average
    let mut mean = T::zero();
    let mut vol = T::zero();
    let mut l2 = T::zero();
    let mut h1 = T::zero();
    let n = g.n() as i32;
    for pass in 0..2 {
        for si in 0..n_shell {
            let s = (T::of_usize(si) + T::of(0.5)) * ds;
            for (xdir, ydir, w) in &rule.nodes {
                for d in 0..dims {
                    ybuf[d] = y0[d] + s * ydir[d];
                }
                let meas = *w * s.powi(n - 1) * ds;
                if pass == 0 {
                    // sheet average at the point
                    let r = s * (xdir[0] * xdir[0] + xdir[1] * xdir[1]).sqrt();
                    let mut th = (s * xdir[1]).atan2(s * xdir[0]);
                    if th < T::zero() {
                        th += T::TAU();
                    }
                    let r_hat = r.powf(T::one() / qf);
                    let mut avg = T::zero();
                    for l in 0..q {
                        let th_hat = (th + T::TAU() * T::of_usize(l)) / qf;
                        avg += interp_unfolded(&u0, r_hat, th_hat, &ybuf, 0);
                    }
                    mean += meas * avg / qf;
                    vol += meas;
                } else {
                    let sq = sheet_sum_sq_centered(&u0, q, s * xdir[0], s * xdir[1], &ybuf, mean);
                    l2 += meas * sq;
                    h1 += meas * sheet_sum_sq(&grad, q, s * xdir[0], s * xdir[1], &ybuf);
                }
            }
        }
        if pass == 0 {
            if vol == T::zero() {
                return Err(Error::Degenerate("empty ball".into()));
            }
            mean /= vol;
        }
    }
    if h1 <= T::zero() {
        return Err(Error::Degenerate("vanishing gradient energy".into()));
    }
    Ok(l2.sqrt() / (radius * h1.sqrt()))
}

fn sheet_sum_sq_centered<T: Scalar>(
    u: &UnfoldedField<T>,
    q: usize,
    x1: T,
    x2: T,
    y: &[T],
    shift: T,
) -> T {
    let r = (x1 * x1 + x2 * x2).sqrt();
    let mut th = x2.atan2(x1);
    if th < T::zero() {
        th += T::TAU();
    }
    let r_hat = r.powf(T::one() / T::of_usize(q));
    let mut acc = T::zero();
    for l in 0..q {
        let th_hat = (th + T::TAU() * T::of_usize(l)) / T::of_usize(q);
        for c in 0..u.ncomp() {
            let v = interp_unfolded(u, r_hat, th_hat, y, c) - shift;
            acc += v * v;
        }
    }
    acc
}

/// `||u||_{L^{2n/(n-2)};q} / ||Du||_{L^2;q}` over the cylinder (for
/// compactly supported fields).
pub fn sobolev_ratio<T: Scalar>(f: &SheetedField<T>) -> Result<T> {
    let g = f.grid().clone();
    let n = g.n();
    let pstar = T::of(2.0 * n as f64 / (n as f64 - 2.0));
    let u0 = unfold(f)?;
    let grad = crate::unfold::gradient(&u0)?;
    let mut lp = T::zero();
    let mut h1 = T::zero();
    for l in 0..g.q() {
        for i in 0..g.nr() {
            let meas = cell_measure(&g, i);
            for j in 0..g.ntheta() {
                for t in 0..g.ny_total() {
                    lp += meas * f.node_abs(l, i, j, t).powf(pstar);
                    h1 += meas * grad.node_abs(l, i, j, t).powi(2);
                }
            }
        }
    }
    if h1 <= T::zero() {
        return Err(Error::Degenerate("vanishing gradient energy".into()));
    }
    Ok(lp.powf(T::one() / pstar) / h1.sqrt())
}
