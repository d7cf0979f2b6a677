//! Exact minimum-cost column assignment.
//!
//! Small instances are solved by lexicographic enumeration (deterministic
//! lowest-index tie-break); larger ones by the O(n³) shortest augmenting
//! path method with potentials, which is exact for any size.

const ENUMERATION_LIMIT: usize = 6;

/// Returns `perm` minimizing `Σ_b cost[perm[b]][b]` over permutations.
/// `cost` must be square.
pub fn solve(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    debug_assert!(cost.iter().all(|row| row.len() == n));
    if n <= ENUMERATION_LIMIT {
        enumerate(cost)
    } else {
        augmenting_paths(cost)
    }
}

fn enumerate(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = perm.clone();
    let mut best_cost = total(cost, &perm);
    while next_permutation(&mut perm) {
        let c = total(cost, &perm);
        if c < best_cost {
            best_cost = c;
            best = perm.clone();
        }
    }
    best
}

fn total(cost: &[Vec<f64>], perm: &[usize]) -> f64 {
    perm.iter().enumerate().map(|(b, &a)| cost[a][b]).sum()
}

/// Advances to the next permutation in lexicographic order; false at the end.
fn next_permutation(perm: &mut [usize]) -> bool {
    let n = perm.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && perm[i - 1] >= perm[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while perm[j] <= perm[i - 1] {
        j -= 1;
    }
    perm.swap(i - 1, j);
    perm[i..].reverse();
    true
}

/// Shortest augmenting path assignment with row/column potentials
/// (1-based internally; `p[j]` is the row matched to column `j`).
fn augmenting_paths(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
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
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
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
    (1..=n).map(|j| p[j] - 1).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;

    #[test]
    fn identity_is_optimal_for_diagonal_costs() {
        let cost = vec![
            vec![0.0, 5.0, 5.0],
            vec![5.0, 0.0, 5.0],
            vec![5.0, 5.0, 0.0],
        ];
        assert_eq!(solve(&cost), vec![0, 1, 2]);
    }

    #[test]
    fn ties_break_to_lowest_index() {
        let cost = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        assert_eq!(solve(&cost), vec![0, 1]);
    }

    #[test]
    fn augmenting_paths_matches_enumeration() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let n = rng.random_range(2..=6);
            let cost: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..n).map(|_| rng.random::<f64>()).collect())
                .collect();
            let by_enum = enumerate(&cost);
            let by_path = augmenting_paths(&cost);
            let ce = total(&cost, &by_enum);
            let cp = total(&cost, &by_path);
            assert!((ce - cp).abs() < 1e-12, "costs differ: {ce} vs {cp}");
        }
    }

    #[test]
    fn large_instance_is_a_permutation() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let n = 12;
        let cost: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n).map(|_| rng.random::<f64>()).collect())
            .collect();
        let mut perm = solve(&cost);
        perm.sort_unstable();
        assert_eq!(perm, (0..n).collect::<Vec<_>>());
    }
}
