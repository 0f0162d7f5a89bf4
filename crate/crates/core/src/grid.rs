//! Discrete cylinder geometry shared by the sheeted and unfolded field
//! representations.
//!
//! The unfolded disk carries a uniform radial grid
//! `r_hat_a = a / (nr_hat - 1)` for `a = 0..nr_hat` (node 0 is the axis) and
//! offset angular nodes `theta_hat_b = 2 pi (b + 1/2) / ntheta_hat`. The
//! sheeted cylinder uses the corresponding nodes `r_i = r_hat_{i+1}^q` and,
//! per sheet, `theta_j = 2 pi (j + 1/2) / (ntheta_hat / q)`, so that the
//! branch-unfolding map is an exact index permutation. The half-sample offset
//! keeps every angular node off the cut `theta in {0, 2 pi}`.
//!
//! y grids are plain periodic lattices `y_t = rho_d t / ny_d` per dimension.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub(crate) fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Grid parameters of one problem instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T: Scalar> {
    q: usize,
    k: usize,
    nr_hat: usize,
    ntheta_hat: usize,
    ny: Vec<usize>,
    rho: Vec<T>,
}

impl<T: Scalar> Grid<T> {
    /// Validates and builds a grid. `nr_hat` counts unfolded radial nodes
    /// including the axis node; `ntheta_hat` must be a multiple of `k * q` so
    /// folding and the k-fold rotation both act as node permutations.
    pub fn new(
        q: usize,
        k: usize,
        nr_hat: usize,
        ntheta_hat: usize,
        ny: Vec<usize>,
        rho: Vec<T>,
    ) -> Result<Self> {
        if q == 0 {
            return Err(Error::InvalidProblem("q must be >= 1".into()));
        }
        if q == 1 {
            if k == 0 {
                return Err(Error::InvalidProblem("k must be >= 1".into()));
            }
        } else {
            if k <= q {
                return Err(Error::InvalidProblem(format!(
                    "k must exceed q (got k = {k}, q = {q})"
                )));
            }
            if gcd(k, q) != 1 {
                return Err(Error::InvalidProblem(format!(
                    "k and q must be coprime (got k = {k}, q = {q})"
                )));
            }
        }
        if nr_hat < 3 {
            return Err(Error::Resolution("need at least 3 radial nodes".into()));
        }
        if ntheta_hat == 0 || !ntheta_hat.is_multiple_of(k * q) {
            return Err(Error::Resolution(format!(
                "ntheta_hat = {ntheta_hat} must be a positive multiple of k*q = {}",
                k * q
            )));
        }
        if ny.is_empty() || ny.len() + 2 > 4 {
            return Err(Error::Resolution(format!(
                "supported ambient dimensions are n = 3 and n = 4 (got {} y dims)",
                ny.len()
            )));
        }
        if ny.contains(&0) {
            return Err(Error::Resolution("every ny must be >= 1".into()));
        }
        if rho.len() != ny.len() || rho.iter().any(|&p| p <= T::zero()) {
            return Err(Error::InvalidProblem(
                "periods rho must be positive, one per y dimension".into(),
            ));
        }
        Ok(Grid {
            q,
            k,
            nr_hat,
            ntheta_hat,
            ny,
            rho,
        })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Ambient dimension n = 2 + number of y dimensions.
    pub fn n(&self) -> usize {
        2 + self.ny.len()
    }

    /// Unfolded radial node count, axis node included.
    pub fn nr_hat(&self) -> usize {
        self.nr_hat
    }

    /// Sheeted radial node count (positive radii only).
    pub fn nr(&self) -> usize {
        self.nr_hat - 1
    }

    pub fn ntheta_hat(&self) -> usize {
        self.ntheta_hat
    }

    /// Angular nodes per sheet.
    pub fn ntheta(&self) -> usize {
        self.ntheta_hat / self.q
    }

    pub fn ny(&self) -> &[usize] {
        &self.ny
    }

    pub fn rho(&self) -> &[T] {
        &self.rho
    }

    /// Total number of flattened y nodes.
    pub fn ny_total(&self) -> usize {
        self.ny.iter().product()
    }

    /// Uniform spacing of the unfolded radial grid.
    pub fn h(&self) -> T {
        T::one() / T::of_usize(self.nr_hat - 1)
    }

    /// Unfolded radius of node `a` (0 = axis, nr_hat-1 = boundary).
    pub fn r_hat(&self, a: usize) -> T {
        T::of_usize(a) * self.h()
    }

    /// Sheeted radius of node `i`: `r_i = r_hat_{i+1}^q`.
    pub fn r(&self, i: usize) -> T {
        self.r_hat(i + 1).powi(self.q as i32)
    }

    /// Unfolded angular node `b`.
    pub fn theta_hat(&self, b: usize) -> T {
        T::TAU() * (T::of_usize(b) + T::of(0.5)) / T::of_usize(self.ntheta_hat)
    }

    /// Per-sheet angular node `j` in `(0, 2 pi)`.
    pub fn theta(&self, j: usize) -> T {
        T::TAU() * (T::of_usize(j) + T::of(0.5)) / T::of_usize(self.ntheta())
    }

    /// Splits a flat y index into per-dimension indices (first dim outermost).
    pub fn y_indices(&self, mut t: usize, out: &mut [usize]) {
        debug_assert_eq!(out.len(), self.ny.len());
        for d in (0..self.ny.len()).rev() {
            out[d] = t % self.ny[d];
            t /= self.ny[d];
        }
    }

    /// Flat y index from per-dimension indices.
    pub fn y_flat(&self, idx: &[usize]) -> usize {
        let mut t = 0;
        for d in 0..self.ny.len() {
            t = t * self.ny[d] + (idx[d] % self.ny[d]);
        }
        t
    }

    /// Physical y coordinates of a flat index.
    pub fn y_coords(&self, t: usize, out: &mut [T]) {
        let mut idx = [0usize; 2];
        self.y_indices(t, &mut idx[..self.ny.len()]);
        for d in 0..self.ny.len() {
            out[d] = self.rho[d] * T::of_usize(idx[d]) / T::of_usize(self.ny[d]);
        }
    }

    /// Unfolded angular index of sheeted node (sheet `l`, angle `j`).
    pub fn unfolded_angle(&self, l: usize, j: usize) -> usize {
        l * self.ntheta() + j
    }

    /// Sheeted (sheet, angle) of unfolded angular index `b`.
    pub fn sheeted_angle(&self, b: usize) -> (usize, usize) {
        (b / self.ntheta(), b % self.ntheta())
    }

    /// Signed angular mode of FFT bin `p` (`0 <= p < ntheta_hat`).
    pub fn theta_mode(&self, p: usize) -> i64 {
        signed_mode(p, self.ntheta_hat)
    }

    /// Signed y modes of a flat y FFT bin.
    pub fn y_modes(&self, zt: usize, out: &mut [i64]) {
        let mut idx = [0usize; 2];
        self.y_indices(zt, &mut idx[..self.ny.len()]);
        for d in 0..self.ny.len() {
            out[d] = signed_mode(idx[d], self.ny[d]);
        }
    }

    /// `sum_d (2 pi z_d / rho_d)^2` for a flat y mode bin.
    pub fn lambda_z(&self, zt: usize) -> T {
        let mut z = [0i64; 2];
        self.y_modes(zt, &mut z[..self.ny.len()]);
        let mut s = T::zero();
        for d in 0..self.ny.len() {
            let w = T::TAU() * T::of(z[d] as f64) / self.rho[d];
            s += w * w;
        }
        s
    }
}

/// Signed mode of FFT bin `p` out of `n` (negative half mapped down).
pub fn signed_mode(p: usize, n: usize) -> i64 {
    if p < n.div_ceil(2) {
        p as i64
    } else {
        p as i64 - n as i64
    }
}

/// Whether angular mode `m` survives both the average-free and the k-fold
/// symmetry congruences: `m = 0 (mod k)` and `m != 0 (mod q)`. The y mode
/// is unrestricted, so it does not appear here.
pub fn mode_admissible(m: i64, q: usize, k: usize) -> Result<bool> {
    if gcd(k, q) != 1 {
        return Err(Error::InvalidProblem(format!(
            "k and q must be coprime (got k = {k}, q = {q})"
        )));
    }
    Ok(m.rem_euclid(k as i64) == 0 && m.rem_euclid(q as i64) != 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_rejects_bad_parameters() {
        assert!(Grid::<f64>::new(2, 4, 65, 48, vec![4], vec![1.0]).is_err()); // gcd 2
        assert!(Grid::<f64>::new(2, 3, 65, 47, vec![4], vec![1.0]).is_err()); // not mult of 6
        assert!(Grid::<f64>::new(3, 2, 65, 48, vec![4], vec![1.0]).is_err()); // k <= q
        assert!(Grid::<f64>::new(2, 3, 2, 48, vec![4], vec![1.0]).is_err()); // too few radii
        assert!(Grid::<f64>::new(2, 3, 65, 48, vec![], vec![]).is_err()); // n < 3
        assert!(Grid::<f64>::new(2, 3, 65, 48, vec![4, 4, 4], vec![1.0; 3]).is_err()); // n > 4
        assert!(Grid::<f64>::new(2, 3, 65, 48, vec![4], vec![1.0]).is_ok());
        assert!(Grid::<f64>::new(1, 1, 65, 16, vec![1], vec![1.0]).is_ok()); // degenerate q = 1
    }

    #[test]
    fn node_correspondence_is_exact() {
        let g = Grid::<f64>::new(2, 3, 65, 48, vec![4], vec![2.0]).unwrap();
        assert_eq!(g.nr(), 64);
        assert_eq!(g.ntheta(), 24);
        // r_i = r_hat_{i+1}^q
        for i in 0..g.nr() {
            assert_eq!(g.r(i), g.r_hat(i + 1).powi(2));
        }
        assert_eq!(g.r(g.nr() - 1), 1.0);
        // theta_hat of sheeted node (l, j) is (theta_j + 2 pi l) / q
        for l in 0..2 {
            for j in 0..g.ntheta() {
                let b = g.unfolded_angle(l, j);
                let lhs = g.theta_hat(b);
                let rhs = (g.theta(j) + std::f64::consts::TAU * l as f64) / 2.0;
                assert!((lhs - rhs).abs() < 1e-14);
                assert_eq!(g.sheeted_angle(b), (l, j));
            }
        }
    }

    #[test]
    fn admissibility_congruences() {
        assert!(mode_admissible(3, 2, 3).unwrap());
        assert!(!mode_admissible(6, 2, 3).unwrap()); // even: killed by average-free
        assert!(!mode_admissible(4, 2, 3).unwrap()); // not a multiple of 3
        assert!(!mode_admissible(0, 2, 3).unwrap());
        assert!(mode_admissible(-3, 2, 3).unwrap());
        // q = 3, k = 4: smallest admissible |m| is 4
        let smallest = (1..=12)
            .find(|&m| mode_admissible(m, 3, 4).unwrap())
            .unwrap();
        assert_eq!(smallest, 4);
        assert!(mode_admissible(3, 2, 4).is_err()); // gcd(4, 2) != 1
        // q = 1: nothing is admissible (every m is 0 mod 1)
        for m in -5..=5 {
            assert!(!mode_admissible(m, 1, 1).unwrap());
        }
    }

    #[test]
    fn y_flattening_round_trips() {
        let g = Grid::<f64>::new(2, 3, 9, 12, vec![3, 5], vec![1.0, 2.0]).unwrap();
        let mut idx = [0usize; 2];
        for t in 0..g.ny_total() {
            g.y_indices(t, &mut idx);
            assert_eq!(g.y_flat(&idx), t);
        }
        let mut z = [0i64; 2];
        g.y_modes(g.y_flat(&[2, 3]), &mut z);
        assert_eq!(z, [-1, -2]);
    }
}
