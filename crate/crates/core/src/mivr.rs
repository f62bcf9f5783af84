//! Matching-integrated vehicle rebalancing: builds the fairness-weighted LP
//! over a multi-interval horizon and exposes the rolling-horizon controller
//! that returns first-interval decisions.
//!
//! Variables per horizon step k: rebalancing flows x_ij (idle vehicles moved
//! i -> j), matches y_ij (demand in i served by supply in j), post-rebalance
//! supply P_j, and next-step idle V_j. Matched vehicles leave the idle pool
//! for the remainder of the horizon.

use crate::error::{Error, Result};
use crate::forecast::Forecaster;
use crate::graph::FairnessWeights;
use crate::lp::{solve_lp, LpProblem, RelOp};
use crate::mat::Mat;
use serde::{Deserialize, Serialize};

/// Idle vehicles per zone observed at a decision instant.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FleetState {
    pub idle: Vec<u32>,
    pub interval_index: usize,
}

/// Weights and geometry of the rebalancing objective.
#[derive(Clone, Debug)]
pub struct MivrParams {
    /// Matching-distance weight.
    pub alpha: f64,
    /// Unmet-demand penalty.
    pub beta: f64,
    /// Horizon length in intervals.
    pub kappa: usize,
    /// Symmetric zone-centroid distances in miles, zero diagonal.
    pub distances_mi: Mat,
    pub omega: FairnessWeights,
}

impl MivrParams {
    /// Standard weights: alpha = 1, beta = 100, kappa = 6.
    pub fn new(distances_mi: Mat, omega: FairnessWeights) -> Result<Self> {
        let p = MivrParams {
            alpha: 1.0,
            beta: 100.0,
            kappa: 6,
            distances_mi,
            omega,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn n_zones(&self) -> usize {
        self.distances_mi.rows()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.distances_mi.rows();
        if self.distances_mi.cols() != n {
            return Err(Error::input("distance matrix must be square"));
        }
        if self.omega.len() != n {
            return Err(Error::input("fairness weights length != zone count"));
        }
        if !(self.alpha >= 0.0 && self.beta >= 0.0) {
            return Err(Error::input("alpha and beta must be nonnegative"));
        }
        if self.kappa < 1 {
            return Err(Error::input("horizon must cover at least one interval"));
        }
        for i in 0..n {
            if self.distances_mi[(i, i)] != 0.0 {
                return Err(Error::input("distance matrix must have zero diagonal"));
            }
            for j in 0..n {
                let d = self.distances_mi[(i, j)];
                if !d.is_finite() || d < 0.0 {
                    return Err(Error::input("distances must be finite and nonnegative"));
                }
                if (d - self.distances_mi[(j, i)]).abs() > 1e-9 {
                    return Err(Error::input("distance matrix must be symmetric"));
                }
            }
        }
        Ok(())
    }
}

/// Column layout of the horizon LP, shared by the builder and the extractors.
#[derive(Clone, Copy, Debug)]
struct VarLayout {
    n: usize,
    kappa: usize,
}

impl VarLayout {
    fn x(&self, k: usize, i: usize, j: usize) -> usize {
        k * self.n * self.n + i * self.n + j
    }

    fn y(&self, k: usize, i: usize, j: usize) -> usize {
        self.kappa * self.n * self.n + k * self.n * self.n + i * self.n + j
    }

    fn p(&self, k: usize, j: usize) -> usize {
        2 * self.kappa * self.n * self.n + k * self.n + j
    }

    /// Idle pool entering step k, for k >= 1 (step 0 idle is data).
    fn v(&self, k: usize, j: usize) -> usize {
        2 * self.kappa * self.n * self.n + self.kappa * self.n + (k - 1) * self.n + j
    }

    fn total(&self) -> usize {
        2 * self.kappa * self.n * self.n + self.kappa * self.n + (self.kappa - 1) * self.n
    }
}

/// Builds the horizon LP:
///
/// minimize  sum_k sum_ij x_ij d_ij
///         + alpha sum_k sum_ij omega_i y_ij d_ji
///         + beta  sum_k sum_i  omega_i (r_i - sum_j y_ij)
///
/// subject to, for every step k:
///   (C1) sum_j x_ij = V_i           all idle vehicles move or self-loop
///   (C2) P_j = sum_i x_ij           post-rebalance supply
///   (C3) sum_i y_ij <= P_j          matches bounded by supply
///   (C4) sum_j y_ij <= r_i          matches bounded by demand
///   (C5) V_j(k+1) = P_j - sum_i y_ij   matched vehicles leave the pool
pub fn build_mivr_lp(
    state: &FleetState,
    forecast: &Mat,
    params: &MivrParams,
) -> Result<LpProblem> {
    params.validate()?;
    let n = params.n_zones();
    let kappa = params.kappa;
    if state.idle.len() != n {
        return Err(Error::input("idle vector length != zone count"));
    }
    if forecast.rows() != kappa || forecast.cols() != n {
        return Err(Error::input(format!(
            "forecast is {}x{}, expected {}x{}",
            forecast.rows(),
            forecast.cols(),
            kappa,
            n
        )));
    }
    if forecast.values().any(|v| !v.is_finite() || v < 0.0) {
        return Err(Error::input("forecast must be finite and nonnegative"));
    }

    let layout = VarLayout { n, kappa };
    let mut p = LpProblem::new(layout.total());

    let mut names = Vec::with_capacity(layout.total());
    for k in 0..kappa {
        for i in 0..n {
            for j in 0..n {
                names.push(format!("x_{k}_{i}_{j}"));
            }
        }
    }
    for k in 0..kappa {
        for i in 0..n {
            for j in 0..n {
                names.push(format!("y_{k}_{i}_{j}"));
            }
        }
    }
    for k in 0..kappa {
        for j in 0..n {
            names.push(format!("p_{k}_{j}"));
        }
    }
    for k in 1..kappa {
        for j in 0..n {
            names.push(format!("v_{k}_{j}"));
        }
    }
    p.names = Some(names);

    // Objective. The beta * omega_i * r_i part is constant; keep it as an
    // offset so the reported objective matches the generalized-cost formula.
    let mut offset = 0.0;
    for k in 0..kappa {
        for i in 0..n {
            let w = params.omega.get(i);
            offset += params.beta * w * forecast[(k, i)];
            for j in 0..n {
                p.objective[layout.x(k, i, j)] = params.distances_mi[(i, j)];
                p.objective[layout.y(k, i, j)] =
                    params.alpha * w * params.distances_mi[(j, i)] - params.beta * w;
            }
        }
    }
    p.offset = offset;

    let nv = layout.total();
    for k in 0..kappa {
        // (C1) outflow conservation.
        for i in 0..n {
            let mut row = vec![0.0; nv];
            for j in 0..n {
                row[layout.x(k, i, j)] = 1.0;
            }
            if k == 0 {
                p.add_row(row, RelOp::Eq, state.idle[i] as f64);
            } else {
                row[layout.v(k, i)] = -1.0;
                p.add_row(row, RelOp::Eq, 0.0);
            }
        }
        // (C2) supply definition.
        for j in 0..n {
            let mut row = vec![0.0; nv];
            row[layout.p(k, j)] = 1.0;
            for i in 0..n {
                row[layout.x(k, i, j)] -= 1.0;
            }
            p.add_row(row, RelOp::Eq, 0.0);
        }
        // (C3) matches bounded by supply.
        for j in 0..n {
            let mut row = vec![0.0; nv];
            for i in 0..n {
                row[layout.y(k, i, j)] = 1.0;
            }
            row[layout.p(k, j)] = -1.0;
            p.add_row(row, RelOp::Le, 0.0);
        }
        // (C4) matches bounded by demand.
        for i in 0..n {
            let mut row = vec![0.0; nv];
            for j in 0..n {
                row[layout.y(k, i, j)] = 1.0;
            }
            p.add_row(row, RelOp::Le, forecast[(k, i)]);
        }
        // (C5) idle-pool dynamics into step k + 1.
        if k + 1 < kappa {
            for j in 0..n {
                let mut row = vec![0.0; nv];
                row[layout.v(k + 1, j)] = 1.0;
                row[layout.p(k, j)] = -1.0;
                for i in 0..n {
                    row[layout.y(k, i, j)] += 1.0;
                }
                p.add_row(row, RelOp::Eq, 0.0);
            }
        }
    }
    Ok(p)
}

/// First-interval rebalancing decision plus the retained horizon solution.
#[derive(Clone, Debug)]
pub struct RebalancePlan {
    pub interval_index: usize,
    /// Executed flows for the first interval, self-loops removed.
    pub flows: Mat,
    pub objective: f64,
    /// Full horizon solution kept for diagnostics: (x, y) per step.
    pub horizon: Vec<(Mat, Mat)>,
    /// Forecast the plan was built against.
    pub forecast: Mat,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FlowExport {
    pub from: u32,
    pub to: u32,
    pub vehicles: f64,
}

/// JSON shape of a plan: {interval_index, flows: [{from, to, vehicles}], objective}.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PlanExport {
    pub interval_index: usize,
    pub flows: Vec<FlowExport>,
    pub objective: f64,
}

impl RebalancePlan {
    pub fn n_zones(&self) -> usize {
        self.flows.rows()
    }

    /// Export with zone indices mapped to external zone ids.
    pub fn to_export(&self, zone_ids: &[u32]) -> PlanExport {
        let n = self.n_zones();
        let mut flows = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let v = self.flows[(i, j)];
                if i != j && v > 1e-9 {
                    flows.push(FlowExport {
                        from: zone_ids[i],
                        to: zone_ids[j],
                        vehicles: v,
                    });
                }
            }
        }
        PlanExport {
            interval_index: self.interval_index,
            flows,
            objective: self.objective,
        }
    }
}

/// Solves the horizon LP and extracts the first-interval plan.
pub fn solve_mivr(state: &FleetState, forecast: &Mat, params: &MivrParams) -> Result<RebalancePlan> {
    let problem = build_mivr_lp(state, forecast, params)?;
    let solution = solve_lp(&problem)?;
    let n = params.n_zones();
    let layout = VarLayout {
        n,
        kappa: params.kappa,
    };

    let mut horizon = Vec::with_capacity(params.kappa);
    for k in 0..params.kappa {
        let x = Mat::from_fn(n, n, |i, j| solution.values[layout.x(k, i, j)]);
        let y = Mat::from_fn(n, n, |i, j| solution.values[layout.y(k, i, j)]);
        horizon.push((x, y));
    }
    let mut flows = horizon[0].0.clone();
    for i in 0..n {
        flows[(i, i)] = 0.0;
    }
    Ok(RebalancePlan {
        interval_index: state.interval_index,
        flows,
        objective: solution.objective,
        horizon,
        forecast: forecast.clone(),
    })
}

/// Rolling-horizon controller step: produce the kappa-interval forecast by
/// repeated one-step prediction (each step feeds its own output back as the
/// newest lag), solve the LP, return the first-interval decisions.
pub fn plan_rebalancing(
    state: &FleetState,
    model: &Forecaster,
    history: &[Vec<f64>],
    params: &MivrParams,
) -> Result<RebalancePlan> {
    let n = params.n_zones();
    let m = model.window_len();
    if history.len() != m {
        return Err(Error::input(format!(
            "history window has {} rows, model expects {m}",
            history.len()
        )));
    }
    let mut window: Vec<Vec<f64>> = history.to_vec();
    let mut forecast = Mat::zeros(params.kappa, n);
    for step in 0..params.kappa {
        let pred = model.predict(&window, state.interval_index + step)?;
        if pred.len() != n {
            return Err(Error::input("forecaster zone count != MIVR zone count"));
        }
        forecast.row_mut(step).copy_from_slice(&pred);
        if m > 0 {
            window.remove(0);
            window.push(pred);
        }
    }
    solve_mivr(state, &forecast, params)
}
