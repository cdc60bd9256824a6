//! Square min-cost assignment.
//!
//! [`hungarian`] is the O(Q^3) shortest-augmenting-path solver with
//! row/column potentials. [`brute_force`] enumerates all Q! permutations
//! in lexicographic order and serves as the independent oracle.

use itertools::Itertools;

/// Row-major square cost matrix.
#[derive(Debug, Clone)]
pub struct CostMatrix {
    size: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn from_fn(size: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(size * size);
        for i in 0..size {
            for j in 0..size {
                data.push(f(i, j));
            }
        }
        CostMatrix { size, data }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.size + j]
    }

    /// Total cost of `sigma`, rows in index order.
    pub fn cost_of(&self, sigma: &[usize]) -> f64 {
        sigma.iter().enumerate().map(|(i, &j)| self.get(i, j)).sum()
    }
}

/// Optimal assignment row -> column.
pub fn hungarian(costs: &CostMatrix) -> Vec<usize> {
    let n = costs.size();
    if n == 0 {
        return Vec::new();
    }
    // 1-based potentials; index 0 is the virtual root column
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = costs.get(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
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

    let mut sigma = vec![0usize; n];
    for j in 1..=n {
        if p[j] > 0 {
            sigma[p[j] - 1] = j - 1;
        }
    }
    sigma
}

/// Exhaustive minimum. Among exact ties the lexicographically smallest
/// permutation wins, because permutations are visited in lexicographic
/// order and only a strictly smaller cost replaces the incumbent.
pub fn brute_force(costs: &CostMatrix) -> (Vec<usize>, f64) {
    let n = costs.size();
    let mut best: Option<(Vec<usize>, f64)> = None;
    for perm in (0..n).permutations(n) {
        let c = costs.cost_of(&perm);
        if best.as_ref().map_or(true, |(_, b)| c < *b) {
            best = Some((perm, c));
        }
    }
    best.unwrap_or((Vec::new(), 0.0))
}

/// Every permutation whose cost is within `tol` of the minimum, in
/// lexicographic order.
pub fn all_optimal(costs: &CostMatrix, tol: f64) -> Vec<Vec<usize>> {
    let n = costs.size();
    let (_, best) = brute_force(costs);
    (0..n)
        .permutations(n)
        .filter(|perm| costs.cost_of(perm) <= best + tol)
        .collect()
}

/// Lexicographically smallest permutation among those within `tol` of the
/// optimum, found by fixing rows one at a time and re-solving the residual
/// problem with [`hungarian`]. O(Q^5), meant for small Q.
pub fn lex_min_optimal(costs: &CostMatrix, tol: f64) -> Vec<usize> {
    let n = costs.size();
    let optimum = costs.cost_of(&hungarian(costs));
    let mut sigma = Vec::with_capacity(n);
    let mut free: Vec<usize> = (0..n).collect();
    let mut fixed_cost = 0.0;
    for i in 0..n {
        let totals: Vec<f64> = free
            .iter()
            .map(|&j| {
                let rest: Vec<usize> = free.iter().copied().filter(|&c| c != j).collect();
                fixed_cost + costs.get(i, j) + residual_optimum(costs, i + 1, &rest)
            })
            .collect();
        // the optimum itself always qualifies; if rounding says otherwise,
        // take the cheapest continuation
        let slot = totals
            .iter()
            .position(|&t| t <= optimum + tol)
            .unwrap_or_else(|| {
                (0..totals.len())
                    .min_by(|&a, &b| totals[a].total_cmp(&totals[b]))
                    .expect("free columns remain")
            });
        let j = free[slot];
        fixed_cost += costs.get(i, j);
        sigma.push(j);
        free.remove(slot);
    }
    sigma
}

fn residual_optimum(costs: &CostMatrix, first_row: usize, cols: &[usize]) -> f64 {
    let sub = CostMatrix::from_fn(cols.len(), |r, c| costs.get(first_row + r, cols[c]));
    sub.cost_of(&hungarian(&sub))
}

/// True if `sigma` is a bijection on `0..n`.
pub fn is_permutation(sigma: &[usize]) -> bool {
    let mut seen = vec![false; sigma.len()];
    sigma.iter().all(|&j| j < seen.len() && !std::mem::replace(&mut seen[j], true))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn solves_small_assignment() {
        let rows = [[4.0, 1.0, 3.0], [2.0, 0.0, 5.0], [3.0, 2.0, 2.0]];
        let m = CostMatrix::from_fn(3, |i, j| rows[i][j]);
        let sigma = hungarian(&m);
        assert!(is_permutation(&sigma));
        assert_eq!(m.cost_of(&sigma), 5.0);
        assert_eq!(brute_force(&m).1, 5.0);
    }

    #[test]
    fn hungarian_matches_enumeration_on_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for size in 1..=6 {
            for _ in 0..200 {
                let m = CostMatrix::from_fn(size, |_, _| rng.gen_range(0.0..10.0));
                let h = m.cost_of(&hungarian(&m));
                let (_, b) = brute_force(&m);
                assert!((h - b).abs() <= 1e-12 * b.max(1.0), "{h} vs {b}");
            }
        }
    }

    #[test]
    fn brute_force_tie_break_is_lexicographic() {
        let m = CostMatrix::from_fn(3, |_, _| 1.0);
        assert_eq!(brute_force(&m).0, vec![0, 1, 2]);
        // swap-symmetric costs: (1,0,2) and (0,1,2) tie; lexicographic wins
        let rows = [[1.0, 1.0, 5.0], [1.0, 1.0, 5.0], [5.0, 5.0, 0.0]];
        let m = CostMatrix::from_fn(3, |i, j| rows[i][j]);
        assert_eq!(brute_force(&m).0, vec![0, 1, 2]);
        assert_eq!(all_optimal(&m, 0.0).len(), 2);
    }

    #[test]
    fn lex_min_optimal_agrees_with_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for size in 1..=5 {
            for _ in 0..100 {
                // small integer costs produce plenty of ties
                let m = CostMatrix::from_fn(size, |_, _| rng.gen_range(0..3) as f64);
                assert_eq!(lex_min_optimal(&m, 1e-9), brute_force(&m).0);
            }
        }
    }

    #[test]
    fn permutation_check() {
        assert!(is_permutation(&[2, 0, 1]));
        assert!(!is_permutation(&[0, 0, 1]));
        assert!(!is_permutation(&[0, 3, 1]));
    }
}
