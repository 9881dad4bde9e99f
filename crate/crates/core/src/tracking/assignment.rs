//! Optimal (Hungarian / Kuhn-Munkres) assignment on small dense cost matrices.

/// Minimum total cost matching of every row to a distinct column.
///
/// Requires `rows <= cols` and finite costs. Returns the column chosen for
/// each row. O(rows² · cols), shortest augmenting paths with potentials.
pub fn solve(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    let m = cost[0].len();
    assert!(n <= m, "more rows than columns; transpose first");
    assert!(cost.iter().all(|r| r.len() == m), "ragged cost matrix");

    // 1-based; index 0 is the virtual root of each augmenting search.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];

    for row in 1..=n {
        owner[0] = row;
        let mut j0 = 0;
        let mut min_v = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let reduced = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if reduced < min_v[j] {
                    min_v[j] = reduced;
                    way[j] = j0;
                }
                if min_v[j] < delta {
                    delta = min_v[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_v[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut result = vec![0; n];
    for j in 1..=m {
        if owner[j] != 0 {
            result[owner[j] - 1] = j - 1;
        }
    }
    result
}

/// Like [`solve`] but accepts either orientation; returns `(row, col)` pairs.
pub fn solve_rect(cost: &[Vec<f64>]) -> Vec<(usize, usize)> {
    let rows = cost.len();
    let cols = cost.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return Vec::new();
    }
    if rows <= cols {
        solve(cost).into_iter().enumerate().collect()
    } else {
        let transposed: Vec<Vec<f64>> = (0..cols)
            .map(|c| (0..rows).map(|r| cost[r][c]).collect())
            .collect();
        let mut pairs: Vec<_> = solve(&transposed)
            .into_iter()
            .enumerate()
            .map(|(c, r)| (r, c))
            .collect();
        pairs.sort_unstable();
        pairs
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_force(cost: &[Vec<f64>]) -> f64 {
        fn go(cost: &[Vec<f64>], row: usize, used: &mut Vec<bool>) -> f64 {
            if row == cost.len() {
                return 0.0;
            }
            let mut best = f64::INFINITY;
            for c in 0..used.len() {
                if !used[c] {
                    used[c] = true;
                    best = best.min(cost[row][c] + go(cost, row + 1, used));
                    used[c] = false;
                }
            }
            best
        }
        let mut used = vec![false; cost[0].len()];
        go(cost, 0, &mut used)
    }

    #[test]
    fn beats_greedy() {
        // Greedy takes (0,0)=1 then is forced into 10s; optimum is 2+2+2.
        let cost = vec![
            vec![1.0, 2.0, 10.0],
            vec![2.0, 10.0, 10.0],
            vec![10.0, 10.0, 2.0],
        ];
        let a = solve(&cost);
        let total: f64 = a.iter().enumerate().map(|(r, &c)| cost[r][c]).sum();
        assert_eq!(a, vec![1, 0, 2]);
        assert_eq!(total, brute_force(&cost));
    }

    #[test]
    fn tall_matrix() {
        let cost = vec![vec![5.0], vec![1.0], vec![3.0]];
        assert_eq!(solve_rect(&cost), vec![(1, 0)]);
    }

    proptest! {
        #[test]
        fn matches_brute_force(
            rows in 1usize..5,
            extra in 0usize..3,
            seed in proptest::collection::vec(0.0f64..100.0, 64)
        ) {
            let cols = rows + extra;
            let cost: Vec<Vec<f64>> = (0..rows)
                .map(|r| (0..cols).map(|c| seed[(r * cols + c) % seed.len()] + r as f64 * 0.37).collect())
                .collect();
            let a = solve(&cost);
            let mut cols_seen = a.clone();
            cols_seen.sort_unstable();
            cols_seen.dedup();
            prop_assert_eq!(cols_seen.len(), rows);
            let total: f64 = a.iter().enumerate().map(|(r, &c)| cost[r][c]).sum();
            prop_assert!((total - brute_force(&cost)).abs() < 1e-9);
        }
    }
}
