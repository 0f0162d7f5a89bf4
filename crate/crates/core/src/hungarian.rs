//! Minimum-cost assignment (Hungarian algorithm, shortest-augmenting-path
//! formulation with potentials, O(n^3)).
//!
//! Used by the q-tuple metric for q > 6, where the exhaustive permutation
//! search becomes wasteful; both routes minimize the same objective.

use crate::scalar::Scalar;

/// Solves `min_sigma sum_i cost[i * n + sigma(i)]` over permutations `sigma`
/// of `{0..n}`. Returns the assignment (row -> column) and the optimal cost.
pub fn min_cost_assignment<T: Scalar>(cost: &[T], n: usize) -> (Vec<usize>, T) {
    assert_eq!(cost.len(), n * n);
    if n == 0 {
        return (Vec::new(), T::zero());
    }
    // 1-based potentials; p[j] = row matched to column j, 0 = unmatched.
    let mut u = vec![T::zero(); n + 1];
    let mut v = vec![T::zero(); n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![T::infinity(); n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = T::infinity();
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0usize; n];
    let mut total = T::zero();
    for j in 1..=n {
        assign[p[j] - 1] = j - 1;
        total += cost[(p[j] - 1) * n + (j - 1)];
    }
    (assign, total)
}
