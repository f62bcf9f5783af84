//! Dense two-phase simplex for small linear programs.
//!
//! Minimizes c'x + offset subject to row constraints and x >= 0. Pivoting is
//! deterministic: Dantzig's rule with lowest-index tie-breaking, switching
//! permanently to Bland's rule after a run of degenerate pivots so the solve
//! always terminates.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

const PIVOT_EPS: f64 = 1e-9;
const OPT_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-7;
const DEGENERATE_LIMIT: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RelOp {
    Le,
    Eq,
    Ge,
}

impl RelOp {
    fn symbol(self) -> &'static str {
        match self {
            RelOp::Le => "<=",
            RelOp::Eq => "==",
            RelOp::Ge => ">=",
        }
    }
}

#[derive(Clone, Debug)]
pub struct LpRow {
    pub coeffs: Vec<f64>,
    pub rel: RelOp,
    pub rhs: f64,
}

/// A linear program over nonnegative variables.
#[derive(Clone, Debug, Default)]
pub struct LpProblem {
    pub num_vars: usize,
    pub objective: Vec<f64>,
    /// Constant added to the reported objective value.
    pub offset: f64,
    pub rows: Vec<LpRow>,
    /// Optional variable names used by the text dump.
    pub names: Option<Vec<String>>,
}

impl LpProblem {
    pub fn new(num_vars: usize) -> Self {
        LpProblem {
            num_vars,
            objective: vec![0.0; num_vars],
            offset: 0.0,
            rows: Vec::new(),
            names: None,
        }
    }

    pub fn add_row(&mut self, coeffs: Vec<f64>, rel: RelOp, rhs: f64) {
        debug_assert_eq!(coeffs.len(), self.num_vars);
        self.rows.push(LpRow { coeffs, rel, rhs });
    }

    fn validate(&self) -> Result<()> {
        if self.objective.len() != self.num_vars {
            return Err(Error::input("objective length does not match num_vars"));
        }
        if !self.objective.iter().all(|c| c.is_finite()) || !self.offset.is_finite() {
            return Err(Error::input("objective has non-finite coefficients"));
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.coeffs.len() != self.num_vars {
                return Err(Error::input(format!("row {i} has wrong length")));
            }
            if !row.coeffs.iter().all(|c| c.is_finite()) || !row.rhs.is_finite() {
                return Err(Error::input(format!("row {i} has non-finite coefficients")));
            }
        }
        Ok(())
    }

    /// Plain-text dump: variables, objective, constraint rows. The format
    /// round-trips through [`LpProblem::parse_text`].
    pub fn dump_text(&self) -> String {
        let mut out = String::new();
        out.push_str("lp 1\n");
        out.push_str(&format!("vars {}\n", self.num_vars));
        if let Some(names) = &self.names {
            out.push_str("names");
            for n in names {
                out.push(' ');
                out.push_str(n);
            }
            out.push('\n');
        }
        out.push_str(&format!("min offset {}", self.offset));
        for c in &self.objective {
            out.push_str(&format!(" {c}"));
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&format!("row {} {}", row.rel.symbol(), row.rhs));
            for c in &row.coeffs {
                out.push_str(&format!(" {c}"));
            }
            out.push('\n');
        }
        out.push_str("bounds nonneg\n");
        out
    }

    pub fn parse_text(text: &str) -> Result<LpProblem> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::input("empty LP dump"))?;
        if header.trim() != "lp 1" {
            return Err(Error::input("unrecognized LP dump header"));
        }
        let mut p = LpProblem::new(0);
        let mut seen_vars = false;
        for line in lines {
            let mut it = line.split_whitespace();
            match it.next() {
                Some("vars") => {
                    p.num_vars = it
                        .next()
                        .and_then(|v| v.parse().ok())
                        .ok_or_else(|| Error::input("bad vars line"))?;
                    p.objective = vec![0.0; p.num_vars];
                    seen_vars = true;
                }
                Some("names") => {
                    p.names = Some(it.map(str::to_string).collect());
                }
                Some("min") => {
                    if it.next() != Some("offset") {
                        return Err(Error::input("bad objective line"));
                    }
                    p.offset = parse_f64(it.next())?;
                    p.objective = it.map(|v| parse_f64(Some(v))).collect::<Result<_>>()?;
                }
                Some("row") => {
                    let rel = match it.next() {
                        Some("<=") => RelOp::Le,
                        Some("==") => RelOp::Eq,
                        Some(">=") => RelOp::Ge,
                        other => {
                            return Err(Error::input(format!("bad relation {other:?}")));
                        }
                    };
                    let rhs = parse_f64(it.next())?;
                    let coeffs = it.map(|v| parse_f64(Some(v))).collect::<Result<Vec<_>>>()?;
                    p.rows.push(LpRow { coeffs, rel, rhs });
                }
                Some("bounds") => {}
                other => return Err(Error::input(format!("unrecognized line {other:?}"))),
            }
        }
        if !seen_vars {
            return Err(Error::input("LP dump missing vars line"));
        }
        p.validate()?;
        Ok(p)
    }
}

fn parse_f64(tok: Option<&str>) -> Result<f64> {
    tok.and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::input("bad numeric token in LP dump"))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LpSolution {
    pub values: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

struct Tableau {
    /// m active rows by (total + 1) columns; the last column is the RHS.
    rows: Vec<Vec<f64>>,
    active: Vec<bool>,
    basis: Vec<usize>,
    /// Reduced-cost rows; index total holds minus the current objective.
    cost2: Vec<f64>,
    cost1: Vec<f64>,
    total: usize,
    art_start: usize,
    bland: bool,
    degenerate_run: usize,
    iterations: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, jc: usize) {
        let piv = self.rows[r][jc];
        let inv = 1.0 / piv;
        for v in self.rows[r].iter_mut() {
            *v *= inv;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || !self.active[i] {
                continue;
            }
            let factor = row[jc];
            if factor != 0.0 {
                for (v, p) in row.iter_mut().zip(&pivot_row) {
                    *v -= factor * p;
                }
                row[jc] = 0.0;
            }
        }
        for cost in [&mut self.cost1, &mut self.cost2] {
            let factor = cost[jc];
            if factor != 0.0 {
                for (v, p) in cost.iter_mut().zip(&pivot_row) {
                    *v -= factor * p;
                }
                cost[jc] = 0.0;
            }
        }
        self.basis[r] = jc;
        self.iterations += 1;
    }

    /// Runs the simplex loop on the given cost row. `allow` filters entering
    /// columns. Returns Ok(true) on optimality, Ok(false) on unboundedness.
    fn run(&mut self, phase_one: bool, max_iters: usize) -> Result<bool> {
        for _ in 0..max_iters {
            let cost = if phase_one { &self.cost1 } else { &self.cost2 };
            // Entering column.
            let mut enter: Option<usize> = None;
            if self.bland {
                for j in 0..self.total {
                    if cost[j] < -OPT_TOL && self.col_allowed(j, phase_one) {
                        enter = Some(j);
                        break;
                    }
                }
            } else {
                let mut best = -OPT_TOL;
                for j in 0..self.total {
                    if cost[j] < best && self.col_allowed(j, phase_one) {
                        best = cost[j];
                        enter = Some(j);
                    }
                }
            }
            let Some(jc) = enter else {
                return Ok(true);
            };

            // Leaving row: minimum ratio, ties to the smallest basic index.
            let mut leave: Option<(usize, f64)> = None;
            for (r, row) in self.rows.iter().enumerate() {
                if !self.active[r] {
                    continue;
                }
                let a = row[jc];
                if a <= PIVOT_EPS {
                    continue;
                }
                let ratio = row[self.total] / a;
                match leave {
                    None => leave = Some((r, ratio)),
                    Some((br, bratio)) => {
                        if ratio < bratio - 1e-12
                            || (ratio <= bratio + 1e-12 && self.basis[r] < self.basis[br])
                        {
                            leave = Some((r, ratio));
                        }
                    }
                }
            }
            let Some((r, _)) = leave else {
                return Ok(false);
            };

            let obj_before = if phase_one {
                self.cost1[self.total]
            } else {
                self.cost2[self.total]
            };
            self.pivot(r, jc);
            let obj_after = if phase_one {
                self.cost1[self.total]
            } else {
                self.cost2[self.total]
            };
            if (obj_after - obj_before).abs() <= 1e-12 * (1.0 + obj_before.abs()) {
                self.degenerate_run += 1;
                if self.degenerate_run > DEGENERATE_LIMIT {
                    self.bland = true;
                }
            } else {
                self.degenerate_run = 0;
            }
        }
        Err(Error::input(
            "simplex iteration limit exceeded; problem may be ill-conditioned",
        ))
    }

    fn col_allowed(&self, j: usize, phase_one: bool) -> bool {
        // Artificials may never re-enter; in phase 2 they are out entirely.
        if j >= self.art_start {
            return false;
        }
        let _ = phase_one;
        true
    }
}

/// Solves the program to an optimal basic solution.
pub fn solve_lp(p: &LpProblem) -> Result<LpSolution> {
    p.validate()?;
    let n = p.num_vars;

    if p.rows.is_empty() {
        if let Some(j) = p.objective.iter().position(|&c| c < -OPT_TOL) {
            return Err(Error::Unbounded(format!(
                "variable {j} has negative cost and no constraints"
            )));
        }
        return Ok(LpSolution {
            values: vec![0.0; n],
            objective: p.offset,
            iterations: 0,
        });
    }

    // Normalize rows so every RHS is nonnegative.
    let rows: Vec<LpRow> = p
        .rows
        .iter()
        .map(|row| {
            if row.rhs < 0.0 {
                LpRow {
                    coeffs: row.coeffs.iter().map(|c| -c).collect(),
                    rel: match row.rel {
                        RelOp::Le => RelOp::Ge,
                        RelOp::Ge => RelOp::Le,
                        RelOp::Eq => RelOp::Eq,
                    },
                    rhs: -row.rhs,
                }
            } else {
                row.clone()
            }
        })
        .collect();

    let m = rows.len();
    let n_slack = rows
        .iter()
        .filter(|r| matches!(r.rel, RelOp::Le | RelOp::Ge))
        .count();
    let n_art = rows
        .iter()
        .filter(|r| matches!(r.rel, RelOp::Eq | RelOp::Ge))
        .count();
    let art_start = n + n_slack;
    let total = n + n_slack + n_art;

    let mut t = Tableau {
        rows: vec![vec![0.0; total + 1]; m],
        active: vec![true; m],
        basis: vec![0; m],
        cost2: vec![0.0; total + 1],
        cost1: vec![0.0; total + 1],
        total,
        art_start,
        bland: false,
        degenerate_run: 0,
        iterations: 0,
    };

    let mut slack_idx = n;
    let mut art_idx = art_start;
    for (r, row) in rows.iter().enumerate() {
        t.rows[r][..n].copy_from_slice(&row.coeffs);
        t.rows[r][total] = row.rhs;
        match row.rel {
            RelOp::Le => {
                t.rows[r][slack_idx] = 1.0;
                t.basis[r] = slack_idx;
                slack_idx += 1;
            }
            RelOp::Ge => {
                t.rows[r][slack_idx] = -1.0;
                slack_idx += 1;
                t.rows[r][art_idx] = 1.0;
                t.basis[r] = art_idx;
                art_idx += 1;
            }
            RelOp::Eq => {
                t.rows[r][art_idx] = 1.0;
                t.basis[r] = art_idx;
                art_idx += 1;
            }
        }
    }

    // Phase-2 reduced costs: structural costs, initially priced for a basis of
    // slacks and artificials (all zero cost), so no adjustment needed yet.
    t.cost2[..n].copy_from_slice(&p.objective);

    // Phase-1 reduced costs: unit cost on artificials, priced out against the
    // rows where artificials start basic.
    for j in art_start..total {
        t.cost1[j] = 1.0;
    }
    for r in 0..m {
        if t.basis[r] >= art_start {
            let row = t.rows[r].clone();
            for (v, p) in t.cost1.iter_mut().zip(&row) {
                *v -= p;
            }
        }
    }

    if n_art > 0 {
        let optimal = t.run(true, 50_000)?;
        if !optimal {
            return Err(Error::Unbounded(
                "phase-1 subproblem unbounded; this should be impossible".into(),
            ));
        }
        let phase1_obj = -t.cost1[total];
        if phase1_obj > FEAS_TOL {
            return Err(Error::Infeasible(format!(
                "phase-1 objective {phase1_obj:.3e} > 0"
            )));
        }
        // Drive remaining artificials out of the basis or drop their rows.
        for r in 0..m {
            if t.basis[r] < art_start {
                continue;
            }
            let jc = (0..art_start).find(|&j| t.rows[r][j].abs() > PIVOT_EPS);
            match jc {
                Some(jc) => t.pivot(r, jc),
                None => t.active[r] = false, // redundant constraint
            }
        }
    }

    let optimal = t.run(false, 100_000)?;
    if !optimal {
        return Err(Error::Unbounded(
            "objective unbounded below (formulation bug for bounded models)".into(),
        ));
    }

    let mut values = vec![0.0; n];
    for (r, &b) in t.basis.iter().enumerate() {
        if t.active[r] && b < n {
            values[b] = t.rows[r][total].max(0.0);
        }
    }
    let objective: f64 = values
        .iter()
        .zip(&p.objective)
        .map(|(x, c)| x * c)
        .sum::<f64>()
        + p.offset;

    Ok(LpSolution {
        values,
        objective,
        iterations: t.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_lower_bound() {
        // min x s.t. x >= 3
        let mut p = LpProblem::new(1);
        p.objective = vec![1.0];
        p.add_row(vec![1.0], RelOp::Ge, 3.0);
        let s = solve_lp(&p).unwrap();
        assert!((s.values[0] - 3.0).abs() < 1e-9);
        assert!((s.objective - 3.0).abs() < 1e-9);
    }

    #[test]
    fn small_max_style_problem() {
        // min -x - y s.t. x + y <= 4, x <= 3, y <= 2 -> optimum -4 on the x + y = 4 face.
        let mut p = LpProblem::new(2);
        p.objective = vec![-1.0, -1.0];
        p.add_row(vec![1.0, 1.0], RelOp::Le, 4.0);
        p.add_row(vec![1.0, 0.0], RelOp::Le, 3.0);
        p.add_row(vec![0.0, 1.0], RelOp::Le, 2.0);
        let s = solve_lp(&p).unwrap();
        assert!((s.objective + 4.0).abs() < 1e-9);
        assert!((s.values[0] + s.values[1] - 4.0).abs() < 1e-9);
    }

    #[test]
    fn equality_transportation() {
        // Two sources (supply 3, 2), two sinks (demand 2, 3).
        // Costs: [1 4; 3 1] -> ship 2 from s0 to d0, 1 from s0 to d1? No:
        // x00 + x01 = 3, x10 + x11 = 2, x00 + x10 = 2, x01 + x11 = 3.
        // Optimal: x00 = 2, x01 = 1, x11 = 2 -> cost 2 + 4 + 2 = 8.
        let mut p = LpProblem::new(4); // x00 x01 x10 x11
        p.objective = vec![1.0, 4.0, 3.0, 1.0];
        p.add_row(vec![1.0, 1.0, 0.0, 0.0], RelOp::Eq, 3.0);
        p.add_row(vec![0.0, 0.0, 1.0, 1.0], RelOp::Eq, 2.0);
        p.add_row(vec![1.0, 0.0, 1.0, 0.0], RelOp::Eq, 2.0);
        p.add_row(vec![0.0, 1.0, 0.0, 1.0], RelOp::Eq, 3.0);
        let s = solve_lp(&p).unwrap();
        assert!((s.objective - 8.0).abs() < 1e-9, "objective {}", s.objective);
    }

    #[test]
    fn infeasible_detected() {
        let mut p = LpProblem::new(1);
        p.objective = vec![1.0];
        p.add_row(vec![1.0], RelOp::Ge, 5.0);
        p.add_row(vec![1.0], RelOp::Le, 2.0);
        assert!(matches!(solve_lp(&p), Err(Error::Infeasible(_))));
    }

    #[test]
    fn unbounded_detected() {
        let mut p = LpProblem::new(2);
        p.objective = vec![-1.0, 0.0];
        p.add_row(vec![0.0, 1.0], RelOp::Le, 1.0);
        assert!(matches!(solve_lp(&p), Err(Error::Unbounded(_))));
    }

    #[test]
    fn degenerate_rhs_and_redundant_rows() {
        // min x + 2y s.t. x + y = 2 (stated twice), x >= 1 -> x = 2, y = 0.
        let mut p = LpProblem::new(2);
        p.objective = vec![1.0, 2.0];
        p.add_row(vec![1.0, 1.0], RelOp::Eq, 2.0);
        p.add_row(vec![2.0, 2.0], RelOp::Eq, 4.0);
        p.add_row(vec![1.0, 0.0], RelOp::Ge, 1.0);
        let s = solve_lp(&p).unwrap();
        assert!((s.objective - 2.0).abs() < 1e-9, "objective {}", s.objective);
        assert!((s.values[0] - 2.0).abs() < 1e-9);
        assert!(s.values[1].abs() < 1e-9);
    }

    #[test]
    fn offset_included_in_objective() {
        let mut p = LpProblem::new(1);
        p.objective = vec![1.0];
        p.offset = 10.0;
        p.add_row(vec![1.0], RelOp::Ge, 1.0);
        let s = solve_lp(&p).unwrap();
        assert!((s.objective - 11.0).abs() < 1e-9);
    }

    #[test]
    fn dump_parse_roundtrip() {
        let mut p = LpProblem::new(3);
        p.objective = vec![1.5, -2.0, 0.25];
        p.offset = 4.5;
        p.names = Some(vec!["a".into(), "b".into(), "c".into()]);
        p.add_row(vec![1.0, 1.0, 0.0], RelOp::Le, 2.0);
        p.add_row(vec![0.0, 1.0, -1.0], RelOp::Eq, 0.5);
        p.add_row(vec![1.0, 0.0, 1.0], RelOp::Ge, 1.0);
        let text = p.dump_text();
        let q = LpProblem::parse_text(&text).unwrap();
        assert_eq!(q.num_vars, 3);
        assert_eq!(q.objective, p.objective);
        assert_eq!(q.offset, p.offset);
        assert_eq!(q.names, p.names);
        assert_eq!(q.rows.len(), 3);
        let s1 = solve_lp(&p).unwrap();
        let s2 = solve_lp(&q).unwrap();
        assert!((s1.objective - s2.objective).abs() < 1e-12);
    }
}
