//! Core q-valued machinery: the metric on unordered tuples, average-free
//! decomposition, the k-fold symmetry action, gluing across the cut, Hölder
//! seminorm estimation and y difference quotients.

use crate::error::{Error, Result};
use crate::field::{SheetedField, SingleField};
use crate::hungarian::min_cost_assignment;
use crate::scalar::Scalar;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// One unordered q-tuple of points in R^m, stored in arbitrary order.
#[derive(Debug, Clone, PartialEq)]
pub struct QTuple<T: Scalar> {
    q: usize,
    m: usize,
    values: Vec<T>,
}

impl<T: Scalar> QTuple<T> {
    pub fn new(q: usize, m: usize, values: Vec<T>) -> Result<Self> {
        if q == 0 || m == 0 || values.len() != q * m {
            return Err(Error::Dimension(format!(
                "q-tuple needs q*m = {} values, got {}",
                q * m,
                values.len()
            )));
        }
        Ok(QTuple { q, m, values })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn point(&self, l: usize) -> &[T] {
        &self.values[l * self.m..(l + 1) * self.m]
    }
}

fn pair_cost_sq<T: Scalar>(a: &QTuple<T>, b: &QTuple<T>, l: usize, s: usize) -> T {
    let (pa, pb) = (a.point(l), b.point(s));
    let mut d = T::zero();
    for c in 0..a.m {
        let e = pa[c] - pb[c];
        d += e * e;
    }
    d
}

fn exhaustive_min<T: Scalar>(cost: &[T], q: usize) -> T {
    fn rec<T: Scalar>(cost: &[T], q: usize, row: usize, used: &mut [bool], acc: T, best: &mut T) {
        if acc >= *best {
            return;
        }
        if row == q {
            *best = acc;
            return;
        }
        for s in 0..q {
            if !used[s] {
                used[s] = true;
                rec(cost, q, row + 1, used, acc + cost[row * q + s], best);
                used[s] = false;
            }
        }
    }
    let mut best = T::infinity();
    rec(cost, q, 0, &mut vec![false; q], T::zero(), &mut best);
    best
}

/// Metric on unordered q-tuples:
/// `G(a, b) = min_sigma sqrt(sum_l |a_l - b_sigma(l)|^2)`.
///
/// Exhaustive search for q <= 6; optimal assignment on squared distances
/// above that. Both minimize the same objective so the routes agree.
pub fn metric_g<T: Scalar>(a: &QTuple<T>, b: &QTuple<T>) -> Result<T> {
    if a.q != b.q || a.m != b.m {
        return Err(Error::Dimension(format!(
            "tuple shapes differ: ({}, {}) vs ({}, {})",
            a.q, a.m, b.q, b.m
        )));
    }
    let q = a.q;
    let mut cost = vec![T::zero(); q * q];
    for l in 0..q {
        for s in 0..q {
            cost[l * q + s] = pair_cost_sq(a, b, l, s);
        }
    }
    let total = if q <= 6 {
        exhaustive_min(&cost, q)
    } else {
        min_cost_assignment(&cost, q).1
    };
    Ok(total.max(T::zero()).sqrt())
}

#[doc(hidden)]
pub fn metric_g_exhaustive<T: Scalar>(a: &QTuple<T>, b: &QTuple<T>) -> Result<T> {
    let q = a.q;
    let mut cost = vec![T::zero(); q * q];
    for l in 0..q {
        for s in 0..q {
            cost[l * q + s] = pair_cost_sq(a, b, l, s);
        }
    }
    Ok(exhaustive_min(&cost, q).max(T::zero()).sqrt())
}

#[doc(hidden)]
pub fn metric_g_assignment<T: Scalar>(a: &QTuple<T>, b: &QTuple<T>) -> Result<T> {
    let q = a.q;
    let mut cost = vec![T::zero(); q * q];
    for l in 0..q {
        for s in 0..q {
            cost[l * q + s] = pair_cost_sq(a, b, l, s);
        }
    }
    Ok(min_cost_assignment(&cost, q).1.max(T::zero()).sqrt())
}

/// Splits `f_l = average + free_l` with `average = (1/q) sum_l f_l` pointwise.
/// The reconstruction is exact and `sum_l free_l = 0` up to roundoff.
pub fn average_free_decompose<T: Scalar>(f: &SheetedField<T>) -> (SingleField<T>, SheetedField<T>) {
    let g = f.grid().clone();
    let q = g.q();
    let inv_q = T::one() / T::of_usize(q);
    let mut avg = SingleField::zeros(g.clone(), f.ncomp());
    let mut free = f.clone();
    for i in 0..g.nr() {
        for j in 0..g.ntheta() {
            for t in 0..g.ny_total() {
                for c in 0..f.ncomp() {
                    let mut s = T::zero();
                    for l in 0..q {
                        s += f.at(l, i, j, t, c);
                    }
                    let a = s * inv_q;
                    *avg.at_mut(i, j, t, c) = a;
                    for l in 0..q {
                        *free.at_mut(l, i, j, t, c) = f.at(l, i, j, t, c) - a;
                    }
                }
            }
        }
    }
    (avg, free)
}

/// Adds a single-valued field onto every sheet.
pub fn add_average<T: Scalar>(free: &SheetedField<T>, avg: &SingleField<T>) -> Result<SheetedField<T>> {
    if free.grid() != avg.grid() || free.ncomp() != avg.ncomp() {
        return Err(Error::Dimension("average/free shapes differ".into()));
    }
    let g = free.grid().clone();
    let mut out = free.clone();
    for l in 0..g.q() {
        for i in 0..g.nr() {
            for j in 0..g.ntheta() {
                for t in 0..g.ny_total() {
                    for c in 0..free.ncomp() {
                        *out.at_mut(l, i, j, t, c) = free.at(l, i, j, t, c) + avg.at(i, j, t, c);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// The k-fold rotation-relabel action on sheeted node indices. It advances
/// the unfolded angle by `2 pi / k`, which in x-space is rotation by
/// `2 pi q / k` combined with the cyclic sheet shift implied by crossing the
/// cut; with gcd(k, q) = 1 this generates the full symmetry group.
pub fn kfold_action<T: Scalar>(
    grid: &crate::grid::Grid<T>,
    l: usize,
    j: usize,
) -> (usize, usize) {
    let nth = grid.ntheta_hat();
    let b = grid.unfolded_angle(l, j);
    let b2 = (b + nth / grid.k()) % nth;
    grid.sheeted_angle(b2)
}

/// Max-norm defect of discrete k-fold symmetry: the largest difference
/// between a node value and the value at the rotated, relabeled node.
pub fn kfold_symmetry_defect<T: Scalar>(f: &SheetedField<T>) -> T {
    let g = f.grid();
    let mut defect = T::zero();
    for l in 0..g.q() {
        for j in 0..g.ntheta() {
            let (l2, j2) = kfold_action(g, l, j);
            for i in 0..g.nr() {
                for t in 0..g.ny_total() {
                    for c in 0..f.ncomp() {
                        let d = (f.at(l2, i, j2, t, c) - f.at(l, i, j, t, c)).abs();
                        defect = defect.max(d);
                    }
                }
            }
        }
    }
    defect
}

/// Group-averages over the k rotation-relabel actions; the result has
/// symmetry defect at roundoff level.
pub fn kfold_symmetrize<T: Scalar>(f: &SheetedField<T>) -> SheetedField<T> {
    let g = f.grid().clone();
    let k = g.k();
    let inv_k = T::one() / T::of_usize(k);
    let mut out = SheetedField::zeros(g.clone(), f.ncomp());
    for l in 0..g.q() {
        for j in 0..g.ntheta() {
            for i in 0..g.nr() {
                for t in 0..g.ny_total() {
                    for c in 0..f.ncomp() {
                        let (mut la, mut ja) = (l, j);
                        let mut s = T::zero();
                        for _ in 0..k {
                            s += f.at(la, i, ja, t, c);
                            let next = kfold_action(&g, la, ja);
                            la = next.0;
                            ja = next.1;
                        }
                        *out.at_mut(l, i, j, t, c) = s * inv_k;
                    }
                }
            }
        }
    }
    out
}

/// Gluing defect across the cut: both sides are extrapolated quadratically
/// (in theta) to the cut angle and compared. For data sampled from a glued
/// C^2 function the defect is O(dtheta^3 |f'''|).
pub fn gluing_defect<T: Scalar>(f: &SheetedField<T>) -> T {
    let g = f.grid();
    let nt = g.ntheta();
    if nt < 3 {
        // too few per-sheet nodes to extrapolate; nothing to check
        return T::zero();
    }
    let (w0, w1, w2) = (T::of(1.875), T::of(-1.25), T::of(0.375));
    let mut defect = T::zero();
    for l in 0..g.q() {
        let lnext = (l + 1) % g.q();
        for i in 0..g.nr() {
            for t in 0..g.ny_total() {
                for c in 0..f.ncomp() {
                    let left = w0 * f.at(l, i, nt - 1, t, c)
                        + w1 * f.at(l, i, nt - 2, t, c)
                        + w2 * f.at(l, i, nt - 3, t, c);
                    let right = w0 * f.at(lnext, i, 0, t, c)
                        + w1 * f.at(lnext, i, 1, t, c)
                        + w2 * f.at(lnext, i, 2, t, c);
                    defect = defect.max((left - right).abs());
                }
            }
        }
    }
    defect
}

/// Result of a Hölder-seminorm estimation pass.
#[derive(Debug, Clone)]
pub struct NormReport<T: Scalar> {
    /// sup over nodes of the Euclidean component length of the measured field
    /// (the gradient when `derivative_order = 1`).
    pub sup_abs: T,
    pub mu: T,
    /// Estimated `[.]_{mu;q}` seminorm: per-sheet, per-half-plane maxima of
    /// |df| / |dX|^mu over the sampled pairs, summed. A lower bound of the
    /// true seminorm by construction.
    pub seminorm: T,
    /// (upper half-plane, lower half-plane) estimate per sheet.
    pub per_sheet: Vec<(T, T)>,
}

const HOLDER_SAMPLE_SEED: u64 = 0x484f4c44;

struct PairSampler<'a, T: Scalar> {
    f: &'a SheetedField<T>,
    x1: Vec<T>,
    x2: Vec<T>,
    mu: T,
    best: Vec<(T, T)>,
}

impl<'a, T: Scalar> PairSampler<'a, T> {
    fn new(f: &'a SheetedField<T>, mu: T) -> Self {
        let g = f.grid();
        let mut x1 = vec![T::zero(); g.nr() * g.ntheta()];
        let mut x2 = vec![T::zero(); g.nr() * g.ntheta()];
        for i in 0..g.nr() {
            let r = g.r(i);
            for j in 0..g.ntheta() {
                let th = g.theta(j);
                x1[i * g.ntheta() + j] = r * th.cos();
                x2[i * g.ntheta() + j] = r * th.sin();
            }
        }
        PairSampler {
            f,
            x1,
            x2,
            mu,
            best: vec![(T::zero(), T::zero()); f.grid().q()],
        }
    }

    fn upper(&self, j: usize) -> bool {
        let g = self.f.grid();
        g.theta(j) <= T::PI() + T::of(1e-12)
    }

    fn lower(&self, j: usize) -> bool {
        let g = self.f.grid();
        g.theta(j) >= T::PI() - T::of(1e-12)
    }

    /// Ratio |f(p) - f(p')| / |X - X'|^mu for nodes on sheet `l`.
    fn visit(&mut self, l: usize, upper: bool, n1: (usize, usize, usize), n2: (usize, usize, usize)) {
        let g = self.f.grid();
        let (i1, j1, t1) = n1;
        let (i2, j2, t2) = n2;
        let nt = g.ntheta();
        let dx1 = self.x1[i1 * nt + j1] - self.x1[i2 * nt + j2];
        let dx2 = self.x2[i1 * nt + j1] - self.x2[i2 * nt + j2];
        let mut d2 = dx1 * dx1 + dx2 * dx2;
        if t1 != t2 {
            let dims = g.ny().len();
            let mut ya = [T::zero(); 2];
            let mut yb = [T::zero(); 2];
            g.y_coords(t1, &mut ya[..dims]);
            g.y_coords(t2, &mut yb[..dims]);
            for d in 0..dims {
                let dy = ya[d] - yb[d];
                d2 += dy * dy;
            }
        }
        if d2 <= T::zero() {
            return;
        }
        let mut df2 = T::zero();
        for c in 0..self.f.ncomp() {
            let dv = self.f.at(l, i1, j1, t1, c) - self.f.at(l, i2, j2, t2, c);
            df2 += dv * dv;
        }
        let ratio = df2.sqrt() / d2.sqrt().powf(self.mu);
        let slot = &mut self.best[l];
        if upper {
            slot.0 = slot.0.max(ratio);
        } else {
            slot.1 = slot.1.max(ratio);
        }
    }
}

/// Hölder seminorm estimate of a node field (pairs restricted per sheet and
/// per half-plane, as the seminorm is defined). The pair design is
/// deterministic: all pairs within each radial shell, dyadic-stride pairs
/// along radial columns, and a seeded random global sample.
pub fn holder_seminorm_of<T: Scalar>(f: &SheetedField<T>, mu: T, full_shells: bool) -> NormReport<T> {
    let g = f.grid().clone();
    let mut sampler = PairSampler::new(f, mu);
    let nt = g.ntheta();
    let nyt = g.ny_total();

    let halves: Vec<(bool, Vec<usize>)> = vec![
        (true, (0..nt).filter(|&j| sampler.upper(j)).collect()),
        (false, (0..nt).filter(|&j| sampler.lower(j)).collect()),
    ];

    for l in 0..g.q() {
        // all pairs within each radial shell
        if full_shells {
            for i in 0..g.nr() {
                for (up, js) in &halves {
                    let nodes: Vec<(usize, usize)> = js
                        .iter()
                        .flat_map(|&j| (0..nyt).map(move |t| (j, t)))
                        .collect();
                    for a in 0..nodes.len() {
                        for b in (a + 1)..nodes.len() {
                            let (j1, t1) = nodes[a];
                            let (j2, t2) = nodes[b];
                            sampler.visit(l, *up, (i, j1, t1), (i, j2, t2));
                        }
                    }
                }
            }
        }
        // dyadic strides along radial columns
        for (up, js) in &halves {
            for &j in js {
                for t in 0..nyt {
                    let mut s = 1usize;
                    while s < g.nr() {
                        for i in 0..g.nr() - s {
                            sampler.visit(l, *up, (i, j, t), (i + s, j, t));
                        }
                        s *= 2;
                    }
                }
            }
        }
    }

    // seeded global sample
    let mut rng = ChaCha8Rng::seed_from_u64(HOLDER_SAMPLE_SEED);
    let n_random = 50_000usize;
    for _ in 0..n_random {
        let l = rng.gen_range(0..g.q());
        let hidx = rng.gen_range(0..2usize);
        let js = &halves[hidx].1;
        if js.len() < 2 {
            continue;
        }
        let pick = |rng: &mut ChaCha8Rng| {
            (
                rng.gen_range(0..g.nr()),
                js[rng.gen_range(0..js.len())],
                rng.gen_range(0..nyt),
            )
        };
        let n1 = pick(&mut rng);
        let n2 = pick(&mut rng);
        sampler.visit(l, halves[hidx].0, n1, n2);
    }

    let per_sheet = sampler.best.clone();
    let seminorm = per_sheet.iter().map(|&(u, lo)| u + lo).sum();
    NormReport {
        sup_abs: f.sup_abs(),
        mu,
        seminorm,
        per_sheet,
    }
}

/// Estimates the per-sheet, per-half-plane Hölder seminorm of `f`
/// (`derivative_order = 0`) or of its gradient (`derivative_order = 1`).
pub fn holder_seminorm<T: Scalar>(
    f: &SheetedField<T>,
    mu: T,
    derivative_order: u8,
) -> Result<NormReport<T>> {
    if mu <= T::zero() || mu > T::one() {
        return Err(Error::InvalidProblem(format!("mu = {mu} out of (0, 1]")));
    }
    match derivative_order {
        0 => Ok(holder_seminorm_of(f, mu, true)),
        1 => {
            let unfolded = crate::unfold::unfold(f)?;
            let grad = crate::unfold::gradient(&unfolded)?;
            Ok(holder_seminorm_of(&grad, mu, true))
        }
        _ => Err(Error::InvalidProblem(
            "derivative_order must be 0 or 1".into(),
        )),
    }
}

/// y-direction difference quotient `(f(x, y + h eta) - f(x, y)) / h`.
/// Uses an exact index roll when `h eta` lands on the lattice and a
/// trigonometric (spectral) shift otherwise.
pub fn difference_quotient<T: Scalar>(
    f: &SheetedField<T>,
    h: T,
    eta: &[T],
) -> Result<SheetedField<T>> {
    let g = f.grid().clone();
    if h == T::zero() {
        return Err(Error::InvalidProblem("difference quotient with h = 0".into()));
    }
    if eta.len() != g.ny().len() {
        return Err(Error::Dimension(format!(
            "eta has {} components, grid has {} y dimensions",
            eta.len(),
            g.ny().len()
        )));
    }
    if eta.iter().all(|&e| e == T::zero()) {
        return Err(Error::InvalidProblem("direction eta vanishes".into()));
    }
    let delta: Vec<T> = eta.iter().map(|&e| h * e).collect();
    // exact roll if the shift lands on lattice points in every dimension
    let mut steps = vec![0i64; delta.len()];
    let mut exact = true;
    for d in 0..delta.len() {
        let spacing = g.rho()[d] / T::of_usize(g.ny()[d]);
        let s = delta[d] / spacing;
        let rounded = s.round();
        if (s - rounded).abs() > T::of(1e-9) * (T::one() + s.abs()) {
            exact = false;
            break;
        }
        steps[d] = rounded.to_f64().unwrap() as i64;
    }
    let shifted = if exact {
        let mut out = f.clone();
        let dims = g.ny().len();
        let mut idx = vec![0usize; dims];
        for l in 0..g.q() {
            for i in 0..g.nr() {
                for j in 0..g.ntheta() {
                    for t in 0..g.ny_total() {
                        g.y_indices(t, &mut idx);
                        let mut shifted_idx = idx.clone();
                        for d in 0..dims {
                            let n = g.ny()[d] as i64;
                            shifted_idx[d] = (idx[d] as i64 + steps[d]).rem_euclid(n) as usize;
                        }
                        let ts = g.y_flat(&shifted_idx);
                        for c in 0..f.ncomp() {
                            *out.at_mut(l, i, j, t, c) = f.at(l, i, j, ts, c);
                        }
                    }
                }
            }
        }
        out
    } else {
        crate::spectrum::y_shift(f, &delta)?
    };
    shifted.lin_comb(T::one() / h, f, -T::one() / h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use proptest::prelude::*;

    fn tuple(q: usize, m: usize, vals: &[f64]) -> QTuple<f64> {
        QTuple::new(q, m, vals.to_vec()).unwrap()
    }

    #[test]
    fn metric_identity_and_examples() {
        let a = tuple(3, 2, &[0.3, -1.0, 2.0, 0.1, -0.4, 0.9]);
        assert_eq!(metric_g(&a, &a).unwrap(), 0.0);
        // q = 2, m = 1: {0,0} vs {1,-1} has cost sqrt(2) for both pairings
        let a = tuple(2, 1, &[0.0, 0.0]);
        let b = tuple(2, 1, &[1.0, -1.0]);
        assert!((metric_g(&a, &b).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        // permutation invariance
        let a = tuple(3, 1, &[1.0, 2.0, 3.0]);
        let b = tuple(3, 1, &[3.0, 1.0, 2.0]);
        assert_eq!(metric_g(&a, &b).unwrap(), 0.0);
        // mismatched shapes
        let c = tuple(2, 1, &[0.0, 0.0]);
        assert!(metric_g(&a, &c).is_err());
    }

    #[test]
    fn metric_matches_brute_force_and_assignment_routes() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for q in [4usize, 5, 7, 9] {
            for _ in 0..25 {
                let m = 2;
                let av: Vec<f64> = (0..q * m).map(|_| rng.gen_range(-2.0..2.0)).collect();
                let bv: Vec<f64> = (0..q * m).map(|_| rng.gen_range(-2.0..2.0)).collect();
                let a = tuple(q, m, &av);
                let b = tuple(q, m, &bv);
                let ex = metric_g_exhaustive(&a, &b).unwrap();
                let hu = metric_g_assignment(&a, &b).unwrap();
                let public = metric_g(&a, &b).unwrap();
                assert!((ex - hu).abs() < 1e-12, "q={q}: {ex} vs {hu}");
                assert!((public - ex).abs() < 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn metric_axioms(
            av in proptest::collection::vec(-10.0f64..10.0, 8),
            bv in proptest::collection::vec(-10.0f64..10.0, 8),
            cv in proptest::collection::vec(-10.0f64..10.0, 8),
        ) {
            let a = tuple(4, 2, &av);
            let b = tuple(4, 2, &bv);
            let c = tuple(4, 2, &cv);
            let ab = metric_g(&a, &b).unwrap();
            let ba = metric_g(&b, &a).unwrap();
            let ac = metric_g(&a, &c).unwrap();
            let cb = metric_g(&c, &b).unwrap();
            prop_assert!(ab >= 0.0);
            prop_assert!((ab - ba).abs() < 1e-12);
            prop_assert!(ab <= ac + cb + 1e-12);
        }
    }

    fn small_grid() -> Grid<f64> {
        Grid::new(2, 3, 9, 24, vec![4], vec![2.0]).unwrap()
    }

    #[test]
    fn average_free_split_examples() {
        let g = Grid::<f64>::new(3, 4, 9, 24, vec![2], vec![1.0]).unwrap();
        // constant sheets (1, 2, 3) -> average 2, free (-1, 0, 1)
        let f = SheetedField::sample(g.clone(), 1, |l, _, _, _, _| (l + 1) as f64);
        let (avg, free) = average_free_decompose(&f);
        for v in avg.data() {
            assert_eq!(*v, 2.0);
        }
        for l in 0..3 {
            assert_eq!(free.at(l, 0, 0, 0, 0), l as f64 - 1.0);
        }
        // identical sheets -> free vanishes (up to the rounding of the mean)
        let f = SheetedField::sample(g.clone(), 1, |_, r, th, _, _| r * th.sin());
        let (_, free) = average_free_decompose(&f);
        assert!(free.sup_abs() <= 2e-16 * f.sup_abs());
        // random field: sheet sum of the free part vanishes, reconstruction exact
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut f = SheetedField::zeros(g.clone(), 2);
        for v in f.data_mut() {
            *v = rng.gen_range(-4.0..4.0);
        }
        let (avg, free) = average_free_decompose(&f);
        let scale = f.sup_abs();
        for i in 0..g.nr() {
            for j in 0..g.ntheta() {
                for t in 0..g.ny_total() {
                    for c in 0..2 {
                        let s: f64 = (0..3).map(|l| free.at(l, i, j, t, c)).sum();
                        assert!(s.abs() <= 1e-14 * scale);
                        for l in 0..3 {
                            let rec = avg.at(i, j, t, c) + free.at(l, i, j, t, c);
                            assert!((rec - f.at(l, i, j, t, c)).abs() <= 1e-15 * scale);
                        }
                    }
                }
            }
        }
        // projection pair: decomposing the free part returns (0, free) exactly
        let (avg2, free2) = average_free_decompose(&free);
        assert!(avg2.sup_abs() <= 1e-14 * scale);
        assert!(free2.max_diff(&free).unwrap() <= 1e-14 * scale);
    }

    fn branched_harmonic_q2(g: &Grid<f64>) -> SheetedField<f64> {
        // two sheets of Re(z^{3/2})
        SheetedField::sample(g.clone(), 1, |l, r, th, _, _| {
            let ang = 1.5 * (th + std::f64::consts::TAU * l as f64);
            r.powf(1.5) * ang.cos()
        })
    }

    #[test]
    fn kfold_defect_examples() {
        let g = small_grid();
        // constant on all sheets
        let f = SheetedField::sample(g.clone(), 1, |_, _, _, _, _| 4.2);
        assert_eq!(kfold_symmetry_defect(&f), 0.0);
        // branched harmonic Re(z^{3/2}) with q = 2, k = 3
        let f = branched_harmonic_q2(&g);
        assert!(kfold_symmetry_defect(&f) < 1e-13, "defect {}", kfold_symmetry_defect(&f));
        // one perturbed node
        let mut f = SheetedField::sample(g.clone(), 1, |_, _, _, _, _| 1.0);
        *f.at_mut(1, 2, 3, 1, 0) += 0.25;
        assert!((kfold_symmetry_defect(&f) - 0.25).abs() < 1e-15);
        // group averaging kills the defect
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut f = SheetedField::zeros(g.clone(), 1);
        for v in f.data_mut() {
            *v = rng.gen_range(-1.0..1.0);
        }
        let sym = kfold_symmetrize(&f);
        assert!(kfold_symmetry_defect(&sym) < 1e-14);
    }

    #[test]
    fn gluing_defect_examples() {
        // real-amplitude branched harmonic: the cut sits at a symmetry point
        // of every mode, so the two-sided extrapolations agree exactly
        let coarse = Grid::<f64>::new(2, 3, 9, 24, vec![1], vec![1.0]).unwrap();
        let dc = gluing_defect(&branched_harmonic_q2(&coarse));
        assert!(dc < 1e-13, "harmonic gluing defect {dc}");
        // a phase-shifted mode is still glued but not symmetric about the
        // cut; the extrapolation defect decays cubically under refinement
        let sample_phase = |g: &Grid<f64>| {
            SheetedField::sample(g.clone(), 1, |l, r, th, _, _| {
                let ang = 1.5 * (th + std::f64::consts::TAU * l as f64) + 0.7;
                r.powf(1.5) * ang.cos()
            })
        };
        let fine = Grid::<f64>::new(2, 3, 9, 96, vec![1], vec![1.0]).unwrap();
        let dc = gluing_defect(&sample_phase(&coarse));
        let df = gluing_defect(&sample_phase(&fine));
        assert!(dc > 1e-6 && dc < 0.5, "coarse defect {dc}");
        assert!(df < dc / 16.0, "no cubic decay: {dc} -> {df}");
        // a genuinely broken field is flagged at O(1)
        let mut broken = branched_harmonic_q2(&coarse);
        for i in 0..coarse.nr() {
            for t in 0..coarse.ny_total() {
                *broken.at_mut(0, i, 0, t, 0) += 1.0;
            }
        }
        assert!(gluing_defect(&broken) > 0.5);
    }

    #[test]
    fn holder_affine_gradient_and_scaling() {
        let g = Grid::<f64>::new(2, 3, 17, 24, vec![2], vec![2.0]).unwrap();
        // affine single-valued function replicated on sheets: gradient seminorm 0
        let f = SheetedField::sample(g.clone(), 1, |_, r, th, y, _| {
            0.5 + 2.0 * r * th.cos() - 1.25 * r * th.sin() + 0.75 * y[0]
        });
        let rep = holder_seminorm(&f, 0.5, 1).unwrap();
        assert!(rep.seminorm < 1e-10, "affine gradient seminorm {}", rep.seminorm);
        // scaling by 2 scales the order-0 estimate exactly
        let rep1 = holder_seminorm(&f, 0.5, 0).unwrap();
        let rep2 = holder_seminorm(&f.scaled(2.0), 0.5, 0).unwrap();
        assert_eq!(rep2.seminorm, 2.0 * rep1.seminorm);
        assert_eq!(rep2.sup_abs, 2.0 * rep1.sup_abs);
        assert!(holder_seminorm(&f, 0.0, 0).is_err());
        assert!(holder_seminorm(&f, 1.5, 0).is_err());
    }

    #[test]
    fn holder_estimate_monotone_in_the_pair_design() {
        // a lower-bound estimator can only grow when pairs are added
        let g = Grid::<f64>::new(2, 3, 17, 24, vec![2], vec![2.0]).unwrap();
        let f = SheetedField::sample(g.clone(), 1, |l, r, th, y, _| {
            let ang = 1.5 * (th + std::f64::consts::TAU * l as f64);
            r.powf(1.5) * ang.cos() * (1.0 + 0.2 * (std::f64::consts::TAU * y[0] / 2.0).sin())
        });
        let light = holder_seminorm_of(&f, 0.5, false).seminorm;
        let full = holder_seminorm_of(&f, 0.5, true).seminorm;
        assert!(full >= light, "light {light} > full {full}");
    }

    #[test]
    fn difference_quotient_examples() {
        let g = Grid::<f64>::new(2, 3, 9, 24, vec![8], vec![2.0]).unwrap();
        // independent of y -> zero
        let f = SheetedField::sample(g.clone(), 1, |_, r, th, _, _| r * (1.5 * th).cos());
        let d = difference_quotient(&f, 0.25, &[1.0]).unwrap();
        assert!(d.sup_abs() < 1e-13);
        // exact grid shift of a pure mode
        let rho = 2.0;
        let f = SheetedField::sample(g.clone(), 1, |_, _, _, y, _| {
            (std::f64::consts::TAU * y[0] / rho).sin()
        });
        let h = rho / 8.0; // one grid spacing
        let d = difference_quotient(&f, h, &[1.0]).unwrap();
        let mut worst = 0.0f64;
        for j in 0..g.ntheta() {
            for t in 0..8 {
                let y = rho * t as f64 / 8.0;
                let expect = ((std::f64::consts::TAU * (y + h) / rho).sin()
                    - (std::f64::consts::TAU * y / rho).sin())
                    / h;
                worst = worst.max((d.at(0, 3, j, t, 0) - expect).abs());
            }
        }
        assert!(worst < 1e-14, "exact-shift quotient error {worst}");
        // non-lattice h: first-order convergence to the y derivative
        let mut errs = Vec::new();
        for &h in &[0.1, 0.05, 0.025] {
            let d = difference_quotient(&f, h, &[1.0]).unwrap();
            let mut worst = 0.0f64;
            for t in 0..8 {
                let y = rho * t as f64 / 8.0;
                let expect = std::f64::consts::TAU / rho * (std::f64::consts::TAU * y / rho).cos();
                worst = worst.max((d.at(1, 2, 5, t, 0) - expect).abs());
            }
            errs.push(worst);
        }
        assert!(errs[0] / errs[1] > 1.6 && errs[0] / errs[1] < 2.4, "{errs:?}");
        assert!(errs[1] / errs[2] > 1.6 && errs[1] / errs[2] < 2.4, "{errs:?}");
        // h = 0 rejected
        assert!(difference_quotient(&f, 0.0, &[1.0]).is_err());
    }
}
