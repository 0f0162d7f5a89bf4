//! Closed-form fields assembled from finitely many Fourier modes with
//! polynomial radial profiles in the unfolded frame:
//!
//! `u_0(r, th, y) = sum_terms Re[ amp * P(r) * e^{i m th} * e^{i sum_d w_d y_d} ]`
//!
//! with `w_d = 2 pi z_d / rho_d`. These power the analytic test families:
//! branched harmonics `Re(c z^{m/q})`, manufactured right-hand sides (the
//! x-space Laplacian of a modal field is again modal), and analytic flux data
//! built as gradients of modal potentials.

use crate::error::{Error, Result};
use crate::field::{SheetedField, Trace, UnfoldedField};
use crate::grid::Grid;
use crate::scalar::Scalar;
use num_complex::Complex;

#[derive(Debug, Clone)]
pub struct ModeTerm<T: Scalar> {
    pub amp: Complex<T>,
    /// Angular mode in the unfolded frame.
    pub m: i64,
    /// y modes, one per y dimension.
    pub z: Vec<i64>,
    /// Radial profile `P(r_hat) = sum coef * r_hat^pow`.
    pub radial: Vec<(T, i32)>,
}

#[derive(Debug, Clone)]
pub struct ModalField<T: Scalar> {
    pub terms: Vec<ModeTerm<T>>,
}

impl<T: Scalar> ModeTerm<T> {
    fn omega(&self, rho: &[T]) -> Vec<T> {
        self.z
            .iter()
            .zip(rho.iter())
            .map(|(&z, &p)| T::TAU() * T::of(z as f64) / p)
            .collect()
    }

    fn radial_value(&self, r_hat: T) -> T {
        let mut s = T::zero();
        for &(c, e) in &self.radial {
            s += c * r_hat.powi(e);
        }
        s
    }

    fn radial_derivative(&self, r_hat: T) -> T {
        let mut s = T::zero();
        for &(c, e) in &self.radial {
            if e != 0 {
                s += c * T::of(e as f64) * r_hat.powi(e - 1);
            }
        }
        s
    }
}

impl<T: Scalar> ModalField<T> {
    pub fn new(terms: Vec<ModeTerm<T>>) -> Self {
        ModalField { terms }
    }

    /// Single term `Re[amp r_hat^{|m|} e^{i m theta_hat}]`, optionally
    /// modulated by a y mode. With `z = 0` this is the harmonic family
    /// `Re(c z^{m/q})` in sheeted coordinates; with `z != 0` it is test data
    /// only (no longer harmonic).
    pub fn harmonic(amp: Complex<T>, m: i64, z: Vec<i64>) -> Self {
        ModalField::new(vec![ModeTerm {
            amp,
            m,
            z,
            radial: vec![(T::one(), m.unsigned_abs() as i32)],
        }])
    }

    /// Value in the unfolded frame.
    pub fn value(&self, r_hat: T, theta_hat: T, y: &[T], rho: &[T]) -> T {
        let mut s = T::zero();
        for term in &self.terms {
            let mut phase = T::of(term.m as f64) * theta_hat;
            for (w, &yy) in term.omega(rho).iter().zip(y.iter()) {
                phase += *w * yy;
            }
            let e = Complex::from_polar(T::one(), phase);
            s += (term.amp * e).re * term.radial_value(r_hat);
        }
        s
    }

    /// Value on sheet `l` at sheeted polar coordinates.
    pub fn value_sheeted(&self, q: usize, l: usize, r: T, theta: T, y: &[T], rho: &[T]) -> T {
        let r_hat = r.powf(T::one() / T::of_usize(q));
        let theta_hat = (theta + T::TAU() * T::of_usize(l)) / T::of_usize(q);
        self.value(r_hat, theta_hat, y, rho)
    }

    pub fn sample_unfolded(&self, grid: &Grid<T>) -> UnfoldedField<T> {
        UnfoldedField::sample(grid.clone(), 1, |r, th, y, _| {
            self.value(r, th, y, grid.rho())
        })
    }

    /// Sheeted samples; bitwise consistent with `fold(sample_unfolded(..))`.
    pub fn sample_sheeted(&self, grid: &Grid<T>) -> SheetedField<T> {
        let mut out = SheetedField::zeros(grid.clone(), 1);
        let mut y = vec![T::zero(); grid.ny().len()];
        for l in 0..grid.q() {
            for i in 0..grid.nr() {
                let r_hat = grid.r_hat(i + 1);
                for j in 0..grid.ntheta() {
                    let th_hat = grid.theta_hat(grid.unfolded_angle(l, j));
                    for t in 0..grid.ny_total() {
                        grid.y_coords(t, &mut y);
                        *out.at_mut(l, i, j, t, 0) = self.value(r_hat, th_hat, &y, grid.rho());
                    }
                }
            }
        }
        out
    }

    pub fn sample_trace(&self, grid: &Grid<T>) -> Trace<T> {
        let mut out = Trace::zeros(grid.clone(), 1);
        let mut y = vec![T::zero(); grid.ny().len()];
        for l in 0..grid.q() {
            for j in 0..grid.ntheta() {
                let th_hat = grid.theta_hat(grid.unfolded_angle(l, j));
                for t in 0..grid.ny_total() {
                    grid.y_coords(t, &mut y);
                    *out.at_mut(l, j, t, 0) = self.value(T::one(), th_hat, &y, grid.rho());
                }
            }
        }
        out
    }

    /// Modal representation of the x-space Laplacian of the represented
    /// q-valued function. Per term with radial monomial `c r^e`:
    /// the in-plane part contributes `c (e^2 - m^2) r^{e-2q} / q^2` (the
    /// conformal factor), the y part contributes `-Lambda_z c r^e`.
    /// Errors if a nonzero in-plane contribution would be singular at the
    /// axis (`e - 2q < 0` with `e^2 != m^2`).
    pub fn laplacian(&self, q: usize, rho: &[T]) -> Result<ModalField<T>> {
        let mut terms = Vec::new();
        let qf2 = T::of_usize(q * q);
        for term in &self.terms {
            let mut radial = Vec::new();
            let m2 = term.m * term.m;
            for &(c, e) in &term.radial {
                let coef = T::of((e as i64 * e as i64 - m2) as f64);
                if coef != T::zero() {
                    let pow = e - 2 * q as i32;
                    if pow < 0 {
                        return Err(Error::InvalidProblem(format!(
                            "modal Laplacian singular at the axis: term m = {}, power {e}",
                            term.m
                        )));
                    }
                    radial.push((c * coef / qf2, pow));
                }
                // y-Laplacian part
                let mut lambda = T::zero();
                for w in term.omega(rho) {
                    lambda += w * w;
                }
                if lambda != T::zero() {
                    radial.push((-lambda * c, e));
                }
            }
            if !radial.is_empty() {
                terms.push(ModeTerm {
                    amp: term.amp,
                    m: term.m,
                    z: term.z.clone(),
                    radial,
                });
            }
        }
        Ok(ModalField::new(terms))
    }

    /// Analytic full gradient (x then y directions) of the represented
    /// function on sheet `l` at sheeted coordinates. `out` has length n.
    pub fn gradient_sheeted(
        &self,
        q: usize,
        l: usize,
        r: T,
        theta: T,
        y: &[T],
        rho: &[T],
        out: &mut [T],
    ) {
        let r_hat = r.powf(T::one() / T::of_usize(q));
        let theta_hat = (theta + T::TAU() * T::of_usize(l)) / T::of_usize(q);
        for v in out.iter_mut() {
            *v = T::zero();
        }
        let qf = T::of_usize(q);
        let scale = T::one() / (qf * r_hat.powi(q as i32 - 1));
        let alpha = T::of(q as f64 - 1.0) * theta_hat;
        let (cos_a, sin_a) = (alpha.cos(), alpha.sin());
        let (cos_t, sin_t) = (theta_hat.cos(), theta_hat.sin());
        for term in &self.terms {
            let omega = term.omega(rho);
            let mut phase = T::of(term.m as f64) * theta_hat;
            for (w, &yy) in omega.iter().zip(y.iter()) {
                phase += *w * yy;
            }
            let e = Complex::from_polar(T::one(), phase);
            let w_val = term.amp * e; // amplitude-and-phase factor
            let p = term.radial_value(r_hat);
            let dp = term.radial_derivative(r_hat);
            let dr = w_val.re * dp;
            let dt = (w_val * Complex::new(T::zero(), T::of(term.m as f64))).re * p / r_hat;
            let gx1 = cos_t * dr - sin_t * dt;
            let gx2 = sin_t * dr + cos_t * dt;
            out[0] += scale * (cos_a * gx1 - sin_a * gx2);
            out[1] += scale * (sin_a * gx1 + cos_a * gx2);
            for (d, w) in omega.iter().enumerate() {
                out[2 + d] += (w_val * Complex::new(T::zero(), *w)).re * p;
            }
        }
    }

    /// Samples the analytic gradient as a sheeted field with n
    /// direction-major components (codomain dimension 1).
    pub fn sample_gradient_sheeted(&self, grid: &Grid<T>) -> SheetedField<T> {
        let n = grid.n();
        let mut out = SheetedField::zeros(grid.clone(), n);
        let mut y = vec![T::zero(); grid.ny().len()];
        let mut buf = vec![T::zero(); n];
        for l in 0..grid.q() {
            for i in 0..grid.nr() {
                let r = grid.r(i);
                for j in 0..grid.ntheta() {
                    let th = grid.theta(j);
                    for t in 0..grid.ny_total() {
                        grid.y_coords(t, &mut y);
                        self.gradient_sheeted(grid.q(), l, r, th, &y, grid.rho(), &mut buf);
                        for (dir, &v) in buf.iter().enumerate() {
                            *out.at_mut(l, i, j, t, dir) = v;
                        }
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_matches_closed_form() {
        let g = Grid::<f64>::new(2, 3, 17, 48, vec![1], vec![1.0]).unwrap();
        let f = ModalField::harmonic(Complex::new(1.0, 0.0), 3, vec![0]);
        let sheeted = f.sample_sheeted(&g);
        for l in 0..2 {
            for i in [0usize, 7, 15] {
                let r = g.r(i);
                for j in [0usize, 5, 23] {
                    let th = g.theta(j);
                    let expect = r.powf(1.5) * (1.5 * (th + std::f64::consts::TAU * l as f64)).cos();
                    assert!((sheeted.at(l, i, j, 0, 0) - expect).abs() < 1e-13);
                }
            }
        }
        // sheeted sampling agrees bitwise with fold(unfolded sampling)
        let folded = crate::unfold::fold(&f.sample_unfolded(&g));
        assert_eq!(folded, sheeted);
    }

    #[test]
    fn laplacian_of_harmonic_vanishes() {
        let f = ModalField::<f64>::harmonic(Complex::new(0.7, -0.2), 3, vec![0]);
        let lap = f.laplacian(2, &[1.0]).unwrap();
        assert!(lap.terms.is_empty());
    }

    #[test]
    fn laplacian_matches_finite_differences_in_x_space() {
        // u = Re[(0.8 + 0.1 i) r_hat^5 e^{3 i theta_hat}] cos-mode in y, q = 2
        let rho = [2.0f64];
        let f = ModalField::new(vec![ModeTerm {
            amp: Complex::new(0.8, 0.1),
            m: 3,
            z: vec![1],
            radial: vec![(1.0, 5)],
        }]);
        let lap = f.laplacian(2, &rho).unwrap();
        // finite differences of the sheeted closed form in (x1, x2, y)
        let q = 2usize;
        let eval = |l: usize, x1: f64, x2: f64, y: f64| -> f64 {
            let r = (x1 * x1 + x2 * x2).sqrt();
            let mut th = x2.atan2(x1);
            if th < 0.0 {
                th += std::f64::consts::TAU;
            }
            f.value_sheeted(q, l, r, th, &[y], &rho)
        };
        let (x1, x2, y) = (0.31, 0.22, 0.4);
        let hh = 1e-4;
        let lap_fd = (eval(0, x1 + hh, x2, y) + eval(0, x1 - hh, x2, y) + eval(0, x1, x2 + hh, y)
            + eval(0, x1, x2 - hh, y)
            + eval(0, x1, x2, y + hh)
            + eval(0, x1, x2, y - hh)
            - 6.0 * eval(0, x1, x2, y))
            / (hh * hh);
        let r = (x1 * x1 + x2 * x2).sqrt();
        let th = x2.atan2(x1);
        let lap_modal = lap.value_sheeted(q, 0, r, th, &[y], &rho);
        assert!(
            (lap_fd - lap_modal).abs() < 1e-5 * (1.0 + lap_modal.abs()),
            "fd {lap_fd} vs modal {lap_modal}"
        );
    }

    #[test]
    fn gradient_matches_finite_differences_in_x_space() {
        let rho = [2.0f64];
        let f = ModalField::new(vec![ModeTerm {
            amp: Complex::new(0.5, 0.3),
            m: 3,
            z: vec![1],
            radial: vec![(1.0, 3), (-0.25, 5)],
        }]);
        let q = 2usize;
        let eval = |x1: f64, x2: f64, y: f64| -> f64 {
            let r = (x1 * x1 + x2 * x2).sqrt();
            let mut th = x2.atan2(x1);
            if th < 0.0 {
                th += std::f64::consts::TAU;
            }
            f.value_sheeted(q, 0, r, th, &[y], &rho)
        };
        let (x1, x2, y) = (0.4, 0.33, 0.7);
        let hh = 1e-5;
        let fd = [
            (eval(x1 + hh, x2, y) - eval(x1 - hh, x2, y)) / (2.0 * hh),
            (eval(x1, x2 + hh, y) - eval(x1, x2 - hh, y)) / (2.0 * hh),
            (eval(x1, x2, y + hh) - eval(x1, x2, y - hh)) / (2.0 * hh),
        ];
        let r = (x1 * x1 + x2 * x2).sqrt();
        let th = x2.atan2(x1);
        let mut got = [0.0; 3];
        f.gradient_sheeted(q, 0, r, th, &[y], &rho, &mut got);
        for d in 0..3 {
            assert!(
                (fd[d] - got[d]).abs() < 1e-7 + 1e-6 * got[d].abs(),
                "dir {d}: fd {} vs analytic {}",
                fd[d],
                got[d]
            );
        }
    }
}
