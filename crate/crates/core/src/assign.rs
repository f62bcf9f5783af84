//! Exact minimum-cost bipartite assignment (Kuhn-Munkres with potentials),
//! used by the simulator's matching engine.

use crate::mat::Mat;

/// Optimal assignment for a square cost matrix; returns the column assigned to
/// each row. O(n^3), deterministic.
pub fn min_cost_assignment(cost: &Mat) -> Vec<usize> {
    let n = cost.rows();
    assert_eq!(n, cost.cols(), "assignment needs a square matrix");
    if n == 0 {
        return Vec::new();
    }

    // 1-indexed arrays; p[j] is the row matched to column j, p[0] scratch.
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
                let cur = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
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

    let mut row_to_col = vec![0usize; n];
    for j in 1..=n {
        if p[j] > 0 {
            row_to_col[p[j] - 1] = j - 1;
        }
    }
    row_to_col
}

/// Minimum-total-cost matching for a rectangular problem: every row (request)
/// is matched to a distinct column (vehicle) when enough columns exist;
/// otherwise the globally cheapest subset of rows is matched. Returns the
/// matched column per row.
pub fn min_cost_matching(cost: &Mat) -> Vec<Option<usize>> {
    let m = cost.rows();
    let k = cost.cols();
    if m == 0 || k == 0 {
        return vec![None; m];
    }
    let n = m.max(k);
    let max_real = (0..m)
        .flat_map(|i| cost.row(i).iter().copied())
        .fold(0.0f64, f64::max);
    // Any padded pairing must be worse than every all-real alternative.
    let big = (max_real + 1.0) * (n as f64 + 1.0);

    let padded = Mat::from_fn(n, n, |i, j| {
        if i < m && j < k {
            cost[(i, j)]
        } else if i >= m {
            0.0 // dummy row: takes whatever column is left over
        } else {
            big // real request paired with a dummy vehicle
        }
    });
    let assignment = min_cost_assignment(&padded);
    (0..m)
        .map(|i| {
            let j = assignment[i];
            if j < k && padded[(i, j)] < big {
                Some(j)
            } else {
                None
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force_square(cost: &Mat) -> f64 {
        let n = cost.rows();
        let mut cols: Vec<usize> = (0..n).collect();
        let mut best = f64::INFINITY;
        permute(&mut cols, 0, &mut |perm| {
            let total: f64 = perm.iter().enumerate().map(|(i, &j)| cost[(i, j)]).sum();
            if total < best {
                best = total;
            }
        });
        best
    }

    fn permute(items: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
        if k == items.len() {
            f(items);
            return;
        }
        for i in k..items.len() {
            items.swap(k, i);
            permute(items, k + 1, f);
            items.swap(k, i);
        }
    }

    #[test]
    fn two_by_two_cross_configuration() {
        // Pairing (0->1, 1->0) costs 2; pairing (0->0, 1->1) costs 20.
        let cost = Mat::from_rows(&[vec![10.0, 1.0], vec![1.0, 10.0]]);
        let a = min_cost_assignment(&cost);
        assert_eq!(a, vec![1, 0]);
    }

    #[test]
    fn matches_brute_force_on_random_instances() {
        // Deterministic pseudo-random costs.
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state % 1000) as f64 / 100.0
        };
        for n in 2..=6 {
            for _ in 0..5 {
                let cost = Mat::from_fn(n, n, |_, _| next());
                let a = min_cost_assignment(&cost);
                let total: f64 = a.iter().enumerate().map(|(i, &j)| cost[(i, j)]).sum();
                let best = brute_force_square(&cost);
                assert!(
                    (total - best).abs() < 1e-9,
                    "n={n}: got {total}, brute force {best}"
                );
                // Assignment is a permutation.
                let mut seen = vec![false; n];
                for &j in &a {
                    assert!(!seen[j]);
                    seen[j] = true;
                }
            }
        }
    }

    #[test]
    fn rectangular_more_vehicles_than_requests() {
        // 1 request, 3 vehicles: picks the cheapest vehicle.
        let cost = Mat::from_rows(&[vec![5.0, 2.0, 7.0]]);
        let m = min_cost_matching(&cost);
        assert_eq!(m, vec![Some(1)]);
    }

    #[test]
    fn rectangular_more_requests_than_vehicles() {
        // 3 requests, 1 vehicle: serve the cheapest request only.
        let cost = Mat::from_rows(&[vec![5.0], vec![2.0], vec![7.0]]);
        let m = min_cost_matching(&cost);
        assert_eq!(m, vec![None, Some(0), None]);
    }

    #[test]
    fn empty_sides() {
        assert!(min_cost_matching(&Mat::zeros(0, 3)).is_empty());
        assert_eq!(min_cost_matching(&Mat::zeros(2, 0)), vec![None, None]);
    }
}
