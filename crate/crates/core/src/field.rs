//! Field containers: q sheets over the cut polar grid (`SheetedField`), the
//! single-valued disk representation (`UnfoldedField`), single-valued data on
//! the sheeted polar nodes (`SingleField`, used for average parts), and
//! boundary traces.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::scalar::Scalar;

/// Discrete q-valued function: one value per (sheet, r_i, theta_j, y, comp).
/// Crossing the cut at theta = 2 pi on sheet `l` continues onto sheet
/// `l + 1 (mod q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SheetedField<T: Scalar> {
    grid: Grid<T>,
    ncomp: usize,
    data: Vec<T>,
}

impl<T: Scalar> SheetedField<T> {
    pub fn zeros(grid: Grid<T>, ncomp: usize) -> Self {
        let len = grid.q() * grid.nr() * grid.ntheta() * grid.ny_total() * ncomp;
        SheetedField {
            grid,
            ncomp,
            data: vec![T::zero(); len],
        }
    }

    /// Samples `f(l, r, theta, y, c)` on every node.
    pub fn sample<F>(grid: Grid<T>, ncomp: usize, f: F) -> Self
    where
        F: Fn(usize, T, T, &[T], usize) -> T,
    {
        let mut out = Self::zeros(grid, ncomp);
        let g = out.grid.clone();
        let mut y = vec![T::zero(); g.ny().len()];
        for l in 0..g.q() {
            for i in 0..g.nr() {
                let r = g.r(i);
                for j in 0..g.ntheta() {
                    let th = g.theta(j);
                    for t in 0..g.ny_total() {
                        g.y_coords(t, &mut y);
                        for c in 0..ncomp {
                            let v = f(l, r, th, &y, c);
                            *out.at_mut(l, i, j, t, c) = v;
                        }
                    }
                }
            }
        }
        out
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn ncomp(&self) -> usize {
        self.ncomp
    }

    #[inline]
    pub fn idx(&self, l: usize, i: usize, j: usize, t: usize, c: usize) -> usize {
        let g = &self.grid;
        ((((l * g.nr() + i) * g.ntheta() + j) * g.ny_total()) + t) * self.ncomp + c
    }

    #[inline]
    pub fn at(&self, l: usize, i: usize, j: usize, t: usize, c: usize) -> T {
        self.data[self.idx(l, i, j, t, c)]
    }

    #[inline]
    pub fn at_mut(&mut self, l: usize, i: usize, j: usize, t: usize, c: usize) -> &mut T {
        let ix = self.idx(l, i, j, t, c);
        &mut self.data[ix]
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    /// Euclidean length over components at one node.
    pub fn node_abs(&self, l: usize, i: usize, j: usize, t: usize) -> T {
        let base = self.idx(l, i, j, t, 0);
        let mut s = T::zero();
        for c in 0..self.ncomp {
            let v = self.data[base + c];
            s += v * v;
        }
        s.sqrt()
    }

    /// sup over all nodes of the per-node Euclidean component length.
    pub fn sup_abs(&self) -> T {
        let g = &self.grid;
        let mut best = T::zero();
        for l in 0..g.q() {
            for i in 0..g.nr() {
                for j in 0..g.ntheta() {
                    for t in 0..g.ny_total() {
                        best = best.max(self.node_abs(l, i, j, t));
                    }
                }
            }
        }
        best
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid || self.ncomp != other.ncomp {
            return Err(Error::Dimension(
                "fields live on different grids or component counts".into(),
            ));
        }
        Ok(())
    }

    /// `a * self + b * other`, entrywise.
    pub fn lin_comb(&self, a: T, other: &Self, b: T) -> Result<Self> {
        self.check_same_shape(other)?;
        let mut out = self.clone();
        for (o, &v) in out.data.iter_mut().zip(other.data.iter()) {
            *o = a * *o + b * v;
        }
        Ok(out)
    }

    pub fn scaled(&self, a: T) -> Self {
        let mut out = self.clone();
        for v in out.data.iter_mut() {
            *v = a * *v;
        }
        out
    }

    /// Trace on the outer boundary r = 1 (ring i = nr - 1).
    pub fn boundary_trace(&self) -> Trace<T> {
        let g = &self.grid;
        let mut tr = Trace::zeros(g.clone(), self.ncomp);
        for l in 0..g.q() {
            for j in 0..g.ntheta() {
                for t in 0..g.ny_total() {
                    for c in 0..self.ncomp {
                        *tr.at_mut(l, j, t, c) = self.at(l, g.nr() - 1, j, t, c);
                    }
                }
            }
        }
        tr
    }

    /// Maximum entrywise difference; grids must match.
    pub fn max_diff(&self, other: &Self) -> Result<T> {
        self.check_same_shape(other)?;
        let mut best = T::zero();
        for (a, b) in self.data.iter().zip(other.data.iter()) {
            best = best.max((*a - *b).abs());
        }
        Ok(best)
    }
}

/// Single-valued disk-times-torus field produced by branch unfolding.
/// Positive radial nodes are stored densely; the axis value (a function of y
/// only) is optional and kept separately.
#[derive(Debug, Clone, PartialEq)]
pub struct UnfoldedField<T: Scalar> {
    grid: Grid<T>,
    ncomp: usize,
    data: Vec<T>,
    axis: Option<Vec<T>>,
}

impl<T: Scalar> UnfoldedField<T> {
    pub fn zeros(grid: Grid<T>, ncomp: usize) -> Self {
        let len = (grid.nr_hat() - 1) * grid.ntheta_hat() * grid.ny_total() * ncomp;
        UnfoldedField {
            grid,
            ncomp,
            data: vec![T::zero(); len],
            axis: None,
        }
    }

    /// Samples `f(r_hat, theta_hat, y, c)` on positive radii and sets the axis
    /// value from `f(0, 0, y, c)`.
    pub fn sample<F>(grid: Grid<T>, ncomp: usize, f: F) -> Self
    where
        F: Fn(T, T, &[T], usize) -> T,
    {
        let mut out = Self::zeros(grid, ncomp);
        let g = out.grid.clone();
        let mut y = vec![T::zero(); g.ny().len()];
        for a in 1..g.nr_hat() {
            let r = g.r_hat(a);
            for b in 0..g.ntheta_hat() {
                let th = g.theta_hat(b);
                for t in 0..g.ny_total() {
                    g.y_coords(t, &mut y);
                    for c in 0..ncomp {
                        *out.at_mut(a, b, t, c) = f(r, th, &y, c);
                    }
                }
            }
        }
        let mut axis = vec![T::zero(); g.ny_total() * ncomp];
        for t in 0..g.ny_total() {
            g.y_coords(t, &mut y);
            for c in 0..ncomp {
                axis[t * ncomp + c] = f(T::zero(), T::zero(), &y, c);
            }
        }
        out.axis = Some(axis);
        out
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn ncomp(&self) -> usize {
        self.ncomp
    }

    #[inline]
    pub fn idx(&self, a: usize, b: usize, t: usize, c: usize) -> usize {
        debug_assert!(a >= 1);
        let g = &self.grid;
        (((a - 1) * g.ntheta_hat() + b) * g.ny_total() + t) * self.ncomp + c
    }

    #[inline]
    pub fn at(&self, a: usize, b: usize, t: usize, c: usize) -> T {
        self.data[self.idx(a, b, t, c)]
    }

    #[inline]
    pub fn at_mut(&mut self, a: usize, b: usize, t: usize, c: usize) -> &mut T {
        let ix = self.idx(a, b, t, c);
        &mut self.data[ix]
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn axis(&self) -> Option<&[T]> {
        self.axis.as_deref()
    }

    pub fn axis_value(&self, t: usize, c: usize) -> Option<T> {
        self.axis.as_ref().map(|ax| ax[t * self.ncomp + c])
    }

    pub fn set_axis(&mut self, axis: Option<Vec<T>>) {
        if let Some(ref ax) = axis {
            assert_eq!(ax.len(), self.grid.ny_total() * self.ncomp);
        }
        self.axis = axis;
    }

    /// Value at radial index `a` where `a = 0` resolves to the axis value
    /// (theta-independent). Errors if the axis value is absent.
    pub fn at_with_axis(&self, a: usize, b: usize, t: usize, c: usize) -> Result<T> {
        if a == 0 {
            self.axis_value(t, c)
                .ok_or_else(|| Error::Degenerate("axis value not available".into()))
        } else {
            Ok(self.at(a, b, t, c))
        }
    }

    pub fn sup_abs(&self) -> T {
        let mut best = T::zero();
        for chunk in self.data.chunks(self.ncomp) {
            let mut s = T::zero();
            for &v in chunk {
                s += v * v;
            }
            best = best.max(s.sqrt());
        }
        best
    }

    pub fn lin_comb(&self, a: T, other: &Self, b: T) -> Result<Self> {
        if self.grid != other.grid || self.ncomp != other.ncomp {
            return Err(Error::Dimension("unfolded fields differ in shape".into()));
        }
        let mut out = self.clone();
        for (o, &v) in out.data.iter_mut().zip(other.data.iter()) {
            *o = a * *o + b * v;
        }
        out.axis = match (&self.axis, &other.axis) {
            (Some(x), Some(y)) => Some(
                x.iter()
                    .zip(y.iter())
                    .map(|(&p, &r)| a * p + b * r)
                    .collect(),
            ),
            _ => None,
        };
        Ok(out)
    }
}

/// Single-valued data sampled on the sheeted polar node set (radii `r_i`,
/// angles `theta_j`, y lattice). This is what the sheet average of a
/// [`SheetedField`] lives on.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleField<T: Scalar> {
    grid: Grid<T>,
    ncomp: usize,
    data: Vec<T>,
}

impl<T: Scalar> SingleField<T> {
    pub fn zeros(grid: Grid<T>, ncomp: usize) -> Self {
        let len = grid.nr() * grid.ntheta() * grid.ny_total() * ncomp;
        SingleField {
            grid,
            ncomp,
            data: vec![T::zero(); len],
        }
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn ncomp(&self) -> usize {
        self.ncomp
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize, t: usize, c: usize) -> usize {
        let g = &self.grid;
        ((i * g.ntheta() + j) * g.ny_total() + t) * self.ncomp + c
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize, t: usize, c: usize) -> T {
        self.data[self.idx(i, j, t, c)]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize, t: usize, c: usize) -> &mut T {
        let ix = self.idx(i, j, t, c);
        &mut self.data[ix]
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn sup_abs(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, &v| acc.max(v.abs()))
    }
}

/// Boundary data on r = 1: one value per (sheet, theta_j, y, comp). The grid
/// is the full problem grid the trace belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace<T: Scalar> {
    grid: Grid<T>,
    ncomp: usize,
    data: Vec<T>,
}

impl<T: Scalar> Trace<T> {
    pub fn zeros(grid: Grid<T>, ncomp: usize) -> Self {
        let len = grid.q() * grid.ntheta() * grid.ny_total() * ncomp;
        Trace {
            grid,
            ncomp,
            data: vec![T::zero(); len],
        }
    }

    /// Samples `f(l, theta, y, c)` on the boundary ring.
    pub fn sample<F>(grid: Grid<T>, ncomp: usize, f: F) -> Self
    where
        F: Fn(usize, T, &[T], usize) -> T,
    {
        let mut out = Self::zeros(grid, ncomp);
        let g = out.grid.clone();
        let mut y = vec![T::zero(); g.ny().len()];
        for l in 0..g.q() {
            for j in 0..g.ntheta() {
                let th = g.theta(j);
                for t in 0..g.ny_total() {
                    g.y_coords(t, &mut y);
                    for c in 0..ncomp {
                        *out.at_mut(l, j, t, c) = f(l, th, &y, c);
                    }
                }
            }
        }
        out
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn ncomp(&self) -> usize {
        self.ncomp
    }

    #[inline]
    pub fn idx(&self, l: usize, j: usize, t: usize, c: usize) -> usize {
        let g = &self.grid;
        ((l * g.ntheta() + j) * g.ny_total() + t) * self.ncomp + c
    }

    #[inline]
    pub fn at(&self, l: usize, j: usize, t: usize, c: usize) -> T {
        self.data[self.idx(l, j, t, c)]
    }

    #[inline]
    pub fn at_mut(&mut self, l: usize, j: usize, t: usize, c: usize) -> &mut T {
        let ix = self.idx(l, j, t, c);
        &mut self.data[ix]
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn scaled(&self, a: T) -> Self {
        let mut out = self.clone();
        for v in out.data.iter_mut() {
            *v = a * *v;
        }
        out
    }

    pub fn sup_abs(&self) -> T {
        let mut best = T::zero();
        for chunk in self.data.chunks(self.ncomp) {
            let mut s = T::zero();
            for &v in chunk {
                s += v * v;
            }
            best = best.max(s.sqrt());
        }
        best
    }
}
