//! Simplex versus brute-force vertex enumeration on a pool of random general
//! programs with mixed relations, degenerate integer data, and a large share
//! of infeasible systems.

use fairfleet::lp::{solve_lp, LpProblem, RelOp};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = a[row][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

fn combinations(total: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    fn recurse(
        start: usize,
        total: usize,
        k: usize,
        current: &mut Vec<usize>,
        f: &mut impl FnMut(&[usize]),
    ) {
        if current.len() == k {
            f(current);
            return;
        }
        for i in start..total {
            current.push(i);
            recurse(i + 1, total, k, current, f);
            current.pop();
        }
    }
    recurse(0, total, k, &mut Vec::new(), f);
}

fn vertex_optimum(p: &LpProblem) -> Option<f64> {
    let n = p.num_vars;
    let m = p.rows.len();
    let mut best: Option<f64> = None;
    combinations(m + n, n, &mut |subset| {
        let mut a = Vec::with_capacity(n);
        let mut b = Vec::with_capacity(n);
        for &idx in subset {
            if idx < m {
                a.push(p.rows[idx].coeffs.clone());
                b.push(p.rows[idx].rhs);
            } else {
                let mut row = vec![0.0; n];
                row[idx - m] = 1.0;
                a.push(row);
                b.push(0.0);
            }
        }
        let Some(x) = solve_square(a, b) else { return };
        if x.iter().any(|&v| v < -1e-9 || !v.is_finite()) {
            return;
        }
        let ok = p.rows.iter().all(|row| {
            let lhs: f64 = row.coeffs.iter().zip(&x).map(|(c, v)| c * v).sum();
            match row.rel {
                RelOp::Le => lhs <= row.rhs + 1e-7,
                RelOp::Ge => lhs >= row.rhs - 1e-7,
                RelOp::Eq => (lhs - row.rhs).abs() <= 1e-7,
            }
        });
        if !ok {
            return;
        }
        let obj: f64 = p.objective.iter().zip(&x).map(|(c, v)| c * v).sum::<f64>() + p.offset;
        best = Some(best.map_or(obj, |cur: f64| cur.min(obj)));
    });
    best
}

#[test]
fn simplex_matches_enumeration_on_random_programs() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut solved = 0;
    let mut infeasible = 0;
    for trial in 0..500 {
        // Random general LP: 3-7 vars, 2-6 rows, mixed relations, integer-ish
        // coefficients to provoke degeneracy, occasional zero rows/rhs.
        let n = rng.random_range(3..8);
        let m = rng.random_range(2..7);
        let mut p = LpProblem::new(n);
        p.objective = (0..n).map(|_| rng.random_range(-5..6) as f64).collect();
        p.offset = rng.random_range(-3..4) as f64;
        for _ in 0..m {
            let coeffs: Vec<f64> = (0..n).map(|_| rng.random_range(-3..4) as f64).collect();
            let rel = match rng.random_range(0..3) {
                0 => RelOp::Le,
                1 => RelOp::Ge,
                _ => RelOp::Eq,
            };
            let rhs = rng.random_range(-4..9) as f64;
            p.add_row(coeffs, rel, rhs);
        }
        // Bound the feasible set so unboundedness cannot occur.
        p.add_row(vec![1.0; n], RelOp::Le, rng.random_range(4..15) as f64);

        let oracle = vertex_optimum(&p);
        match (solve_lp(&p), oracle) {
            (Ok(sol), Some(best)) => {
                solved += 1;
                let tol = 1e-6 * best.abs().max(1.0);
                assert!(
                    (sol.objective - best).abs() <= tol,
                    "trial {trial}: simplex {} vs enumeration {}",
                    sol.objective,
                    best
                );
            }
            (Err(fairfleet::Error::Infeasible(_)), None) => {
                infeasible += 1;
            }
            (got, want) => {
                panic!(
                    "trial {trial}: simplex {:?} disagrees with oracle {:?}",
                    got.map(|s| s.objective),
                    want
                );
            }
        }
    }
    println!("stress: {solved} solved, {infeasible} infeasible, all consistent");
}
