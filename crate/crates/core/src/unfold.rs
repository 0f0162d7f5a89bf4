//! Branch unfolding `xi = x^{1/q}` and its inverse, plus in-plane gradient
//! transport through the conformal map.
//!
//! Because sheeted and unfolded grids are built from the same parameters
//! (`r_i = r_hat_{i+1}^q`, `theta_hat = (theta + 2 pi l)/q`), both maps are
//! exact index permutations.

use crate::error::Result;
use crate::field::{SheetedField, UnfoldedField};
use crate::scalar::Scalar;
use num_complex::Complex;

/// `u_0(r_hat e^{i theta_hat}) = u_l(r_hat^q e^{i q theta_hat})` with the
/// sheet determined by the sector of width `2 pi / q` containing `theta_hat`.
/// No axis value is produced (the sheeted representation has none).
pub fn unfold<T: Scalar>(f: &SheetedField<T>) -> Result<UnfoldedField<T>> {
    let g = f.grid().clone();
    let mut out = UnfoldedField::zeros(g.clone(), f.ncomp());
    for a in 1..g.nr_hat() {
        for b in 0..g.ntheta_hat() {
            let (l, j) = g.sheeted_angle(b);
            for t in 0..g.ny_total() {
                for c in 0..f.ncomp() {
                    *out.at_mut(a, b, t, c) = f.at(l, a - 1, j, t, c);
                }
            }
        }
    }
    Ok(out)
}

/// Inverse of [`unfold`]: `u_l(r e^{i theta}) = u_0(r^{1/q} e^{i (theta + 2 pi l)/q})`.
pub fn fold<T: Scalar>(u0: &UnfoldedField<T>) -> SheetedField<T> {
    let g = u0.grid().clone();
    let mut out = SheetedField::zeros(g.clone(), u0.ncomp());
    for a in 1..g.nr_hat() {
        for b in 0..g.ntheta_hat() {
            let (l, j) = g.sheeted_angle(b);
            for t in 0..g.ny_total() {
                for c in 0..u0.ncomp() {
                    *out.at_mut(l, a - 1, j, t, c) = u0.at(a, b, t, c);
                }
            }
        }
    }
    out
}

/// Full gradient of the represented q-valued function, evaluated at the
/// unfolded nodes. Output components are direction-major: entry
/// `dir * ncomp + c` holds `D_dir u^c`, with dir 0,1 the in-plane x
/// directions followed by the y directions.
///
/// Radial differentiation is centered second-order finite differences on the
/// uniform `r_hat` grid (using the axis value at the innermost node when
/// available, one-sided stencils otherwise); angular and y differentiation
/// are spectral. In-plane components are transported through the conformal
/// map: as a complex number, `D_x u = grad_xi u0 * e^{i (q-1) theta_hat} /
/// (q r_hat^{q-1})`.
pub fn gradient_unfolded<T: Scalar>(u0: &UnfoldedField<T>) -> Result<UnfoldedField<T>> {
    let g = u0.grid().clone();
    let nc = u0.ncomp();
    let n = g.n();
    let nr = g.nr_hat();
    let h = g.h();
    let two_h = T::of(2.0) * h;

    // spectral theta and y derivatives
    let spec = crate::spectrum::analyze(u0);
    let mut dth_spec = spec.clone();
    let mut dy_specs: Vec<crate::spectrum::ModeSpectrum<T>> =
        (0..g.ny().len()).map(|_| spec.clone()).collect();
    let dims = g.ny().len();
    let mut z = [0i64; 2];
    for a in 0..nr {
        for p in 0..g.ntheta_hat() {
            let m = T::of(g.theta_mode(p) as f64);
            for zt in 0..g.ny_total() {
                g.y_modes(zt, &mut z[..dims]);
                for c in 0..nc {
                    let v = spec.at(a, p, zt, c);
                    *dth_spec.at_mut(a, p, zt, c) = Complex::new(T::zero(), m) * v;
                    for d in 0..dims {
                        let w = T::TAU() * T::of(z[d] as f64) / g.rho()[d];
                        *dy_specs[d].at_mut(a, p, zt, c) = Complex::new(T::zero(), w) * v;
                    }
                }
            }
        }
    }
    let dth = crate::spectrum::synthesize(&dth_spec);
    let dys: Vec<UnfoldedField<T>> = dy_specs.iter().map(crate::spectrum::synthesize).collect();

    let mut out = UnfoldedField::zeros(g.clone(), nc * n);
    let qf = T::of_usize(g.q());
    for a in 1..nr {
        let r = g.r_hat(a);
        // conformal scale 1 / (q r_hat^{q-1})
        let scale = T::one() / (qf * r.powi(g.q() as i32 - 1));
        for b in 0..g.ntheta_hat() {
            let th = g.theta_hat(b);
            let (cos_t, sin_t) = (th.cos(), th.sin());
            let alpha = T::of(g.q() as f64 - 1.0) * th;
            let (cos_a, sin_a) = (alpha.cos(), alpha.sin());
            for t in 0..g.ny_total() {
                for c in 0..nc {
                    // radial derivative, second order
                    let dr = if a == nr - 1 {
                        if nr >= 4 {
                            (T::of(3.0) * u0.at(a, b, t, c) - T::of(4.0) * u0.at(a - 1, b, t, c)
                                + u0.at(a - 2, b, t, c))
                                / two_h
                        } else {
                            (u0.at(a, b, t, c) - u0.at(a - 1, b, t, c)) / h
                        }
                    } else if a >= 2 {
                        (u0.at(a + 1, b, t, c) - u0.at(a - 1, b, t, c)) / two_h
                    } else if let Some(v0) = u0.axis_value(t, c) {
                        (u0.at(2, b, t, c) - v0) / two_h
                    } else if nr >= 4 {
                        (-T::of(3.0) * u0.at(1, b, t, c) + T::of(4.0) * u0.at(2, b, t, c)
                            - u0.at(3, b, t, c))
                            / two_h
                    } else {
                        (u0.at(2, b, t, c) - u0.at(1, b, t, c)) / h
                    };
                    let ut = dth.at(a, b, t, c) / r;
                    // grad_xi in the Cartesian xi frame
                    let gx1 = cos_t * dr - sin_t * ut;
                    let gx2 = sin_t * dr + cos_t * ut;
                    // rotate by +(q-1) theta_hat and apply the conformal scale
                    let dx1 = scale * (cos_a * gx1 - sin_a * gx2);
                    let dx2 = scale * (sin_a * gx1 + cos_a * gx2);
                    *out.at_mut(a, b, t, c) = dx1;
                    *out.at_mut(a, b, t, nc + c) = dx2;
                    for d in 0..dims {
                        *out.at_mut(a, b, t, (2 + d) * nc + c) = dys[d].at(a, b, t, c);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Full gradient per sheet (see [`gradient_unfolded`] for the layout).
pub fn gradient<T: Scalar>(u0: &UnfoldedField<T>) -> Result<SheetedField<T>> {
    Ok(fold(&gradient_unfolded(u0)?))
}

/// In-plane gradient components only: a sheeted vector field with layout
/// `dir * ncomp + c`, dir in {0, 1}.
pub fn gradient_x<T: Scalar>(u0: &UnfoldedField<T>) -> Result<SheetedField<T>> {
    let full = gradient(u0)?;
    let g = full.grid().clone();
    let nc = u0.ncomp();
    let mut out = SheetedField::zeros(g.clone(), 2 * nc);
    for l in 0..g.q() {
        for i in 0..g.nr() {
            for j in 0..g.ntheta() {
                for t in 0..g.ny_total() {
                    for c in 0..2 * nc {
                        *out.at_mut(l, i, j, t, c) = full.at(l, i, j, t, c);
                    }
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_round_trip() {
        let g = Grid::<f64>::new(3, 4, 9, 24, vec![4], vec![1.0]).unwrap();
        let f = SheetedField::sample(g.clone(), 1, |_, _, _, _, _| 2.5);
        let u = unfold(&f).unwrap();
        for a in 1..g.nr_hat() {
            for b in 0..g.ntheta_hat() {
                assert_eq!(u.at(a, b, 0, 0), 2.5);
            }
        }
        assert_eq!(fold(&u), f);
    }

    #[test]
    fn branched_harmonic_unfolds_to_cubic() {
        // q = 2 sheets of Re(z^{3/2}) unfold to samples of Re(w^3)
        let g = Grid::<f64>::new(2, 3, 17, 48, vec![1], vec![1.0]).unwrap();
        let f = SheetedField::sample(g.clone(), 1, |l, r, th, _, _| {
            let ang = 1.5 * (th + std::f64::consts::TAU * l as f64);
            r.powf(1.5) * ang.cos()
        });
        let u = unfold(&f).unwrap();
        let mut worst = 0.0f64;
        for a in 1..g.nr_hat() {
            let r = g.r_hat(a);
            for b in 0..g.ntheta_hat() {
                let th = g.theta_hat(b);
                worst = worst.max((u.at(a, b, 0, 0) - r.powi(3) * (3.0 * th).cos()).abs());
            }
        }
        assert!(worst < 1e-12, "unfolded mismatch {worst}");
    }

    #[test]
    fn round_trips_are_exact_permutations() {
        let g = Grid::<f64>::new(3, 4, 9, 36, vec![3], vec![1.5]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut f = SheetedField::zeros(g.clone(), 2);
        for v in f.data_mut() {
            *v = rng.gen_range(-1.0..1.0);
        }
        let u = unfold(&f).unwrap();
        assert_eq!(fold(&u), f);
        let mut u2 = UnfoldedField::zeros(g.clone(), 1);
        for a in 1..g.nr_hat() {
            for b in 0..g.ntheta_hat() {
                for t in 0..g.ny_total() {
                    *u2.at_mut(a, b, t, 0) = rng.gen_range(-1.0..1.0);
                }
            }
        }
        assert_eq!(unfold(&fold(&u2)).unwrap(), u2);
    }

    #[test]
    fn gradient_of_cubic_mode_matches_power_rule() {
        // u0 = Re(w^3), q = 2: |D_x u| = 1.5 sqrt(r) at sheeted radius r,
        // with direction e^{-i theta_hat}
        let g = Grid::<f64>::new(2, 3, 129, 48, vec![1], vec![1.0]).unwrap();
        let u0 = UnfoldedField::sample(g.clone(), 1, |r, th, _, _| r.powi(3) * (3.0 * th).cos());
        let grad = gradient(&u0).unwrap();
        let mut worst = 0.0f64;
        for l in 0..2 {
            for i in [5usize, 40, 100, g.nr() - 1] {
                let r = g.r(i);
                for j in [0usize, 7, 19] {
                    let b = g.unfolded_angle(l, j);
                    let th_hat = g.theta_hat(b);
                    let gx = grad.at(l, i, j, 0, 0);
                    let gy = grad.at(l, i, j, 0, 1);
                    let mag = (gx * gx + gy * gy).sqrt();
                    worst = worst.max((mag - 1.5 * r.sqrt()).abs());
                    // direction check: D_x u = 1.5 r_hat e^{-i theta_hat}
                    let r_hat = g.r_hat(i + 1);
                    worst = worst.max((gx - 1.5 * r_hat * th_hat.cos()).abs());
                    worst = worst.max((gy + 1.5 * r_hat * th_hat.sin()).abs());
                }
            }
        }
        // centered radial differences carry an O(h^2 / r_hat) error through
        // the conformal scale; at the smallest sampled radius that is ~7e-4
        assert!(worst < 2e-3, "gradient error {worst}");
        // gradient_x is the in-plane slice of the full gradient
        let gx = gradient_x(&u0).unwrap();
        assert_eq!(gx.ncomp(), 2);
        for l in 0..2 {
            for i in [3usize, 60] {
                for j in [1usize, 11] {
                    assert_eq!(gx.at(l, i, j, 0, 0), grad.at(l, i, j, 0, 0));
                    assert_eq!(gx.at(l, i, j, 0, 1), grad.at(l, i, j, 0, 1));
                }
            }
        }
    }

    #[test]
    fn gradient_linear_in_y_only() {
        let g = Grid::<f64>::new(2, 3, 17, 24, vec![8], vec![2.0]).unwrap();
        // u depends linearly on sin-mode in y only; in-plane gradient vanishes
        let u0 = UnfoldedField::sample(g.clone(), 1, |_, _, y, _| {
            (std::f64::consts::TAU * y[0] / 2.0).sin()
        });
        let grad = gradient(&u0).unwrap();
        let mut worst_x = 0.0f64;
        let mut worst_y = 0.0f64;
        for l in 0..2 {
            for i in 0..g.nr() {
                for j in 0..g.ntheta() {
                    for t in 0..8 {
                        worst_x = worst_x.max(grad.at(l, i, j, t, 0).abs());
                        worst_x = worst_x.max(grad.at(l, i, j, t, 1).abs());
                        let y = 2.0 * t as f64 / 8.0;
                        let expect = std::f64::consts::PI * (std::f64::consts::TAU * y / 2.0).cos();
                        worst_y = worst_y.max((grad.at(l, i, j, t, 2) - expect).abs());
                    }
                }
            }
        }
        assert!(worst_x < 1e-12, "in-plane leak {worst_x}");
        assert!(worst_y < 1e-12, "y derivative error {worst_y}");
    }

    #[test]
    fn gradient_matches_sheeted_finite_differences() {
        // random smooth unfolded field: compare D_x u against centered FD of
        // the folded field on the sheeted grid away from cut and axis. The
        // oracle's own error is O(dtheta^2), so check agreement at two
        // angular resolutions and second-order shrinkage between them.
        let run = |ntheta_hat: usize| -> f64 {
            let g = Grid::<f64>::new(2, 3, 257, ntheta_hat, vec![1], vec![1.0]).unwrap();
            let u0 = UnfoldedField::sample(g.clone(), 1, |r, th, _, _| {
                (1.3 * r * r * (2.0 * th).cos() + 0.4 * r.powi(3) * (3.0 * th).sin()).sin() + r
            });
            let grad = gradient(&u0).unwrap();
            let f = fold(&u0);
            let mut worst = 0.0f64;
            for l in 0..2 {
                for i in (g.nr() / 2..g.nr() - 4).step_by(13) {
                    let (rp, rm) = (g.r(i + 1), g.r(i - 1));
                    let r = g.r(i);
                    for j in (3..g.ntheta() - 3).step_by(5) {
                        let th = g.theta(j);
                        let dth = std::f64::consts::TAU / g.ntheta() as f64;
                        let dr_fd = (f.at(l, i + 1, j, 0, 0) - f.at(l, i - 1, j, 0, 0)) / (rp - rm);
                        let dt_fd =
                            (f.at(l, i, j + 1, 0, 0) - f.at(l, i, j - 1, 0, 0)) / (2.0 * dth * r);
                        let fd_x = th.cos() * dr_fd - th.sin() * dt_fd;
                        let fd_y = th.sin() * dr_fd + th.cos() * dt_fd;
                        worst = worst.max((grad.at(l, i, j, 0, 0) - fd_x).abs());
                        worst = worst.max((grad.at(l, i, j, 0, 1) - fd_y).abs());
                    }
                }
            }
            worst
        };
        let coarse = run(96);
        let fine = run(192);
        assert!(coarse < 2.5e-2, "oracle disagrees: {coarse}");
        assert!(fine < 0.4 * coarse, "not second order: {coarse} -> {fine}");
    }

    #[test]
    fn admissible_fields_decay_like_r_to_the_k() {
        // minimal angular mode k forces |u0| <= C r_hat^k near the axis
        let g = Grid::<f64>::new(2, 3, 1025, 48, vec![1], vec![1.0]).unwrap();
        let u0 = UnfoldedField::sample(g.clone(), 1, |r, th, _, _| {
            r.powi(3) * (3.0 * th).cos() + 0.2 * r.powi(9) * (9.0 * th).sin()
        });
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for a in 1..g.nr_hat() {
            let r = g.r_hat(a);
            if !(1e-3..=1e-1).contains(&r) {
                continue;
            }
            let mut sup = 0.0f64;
            for b in 0..g.ntheta_hat() {
                sup = sup.max(u0.at(a, b, 0, 0).abs());
            }
            xs.push(r.ln());
            ys.push(sup.ln());
        }
        let (slope, _) = crate::diagnostics::loglog_slope_ln(&xs, &ys).unwrap();
        assert!(slope >= 3.0 - 0.05, "slope {slope}");
    }
}
