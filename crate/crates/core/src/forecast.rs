//! Demand series on a fixed interval grid, the fairness-regularized training
//! loss (squared error + SAPE-variance + overestimation hinge), and two
//! forecasters: a day-of-week/interval-of-day historical average and a
//! graph-smoothed linear autoregression trained by full-batch subgradient
//! descent on the composite loss.

use crate::error::{Error, Result};
use crate::graph::{AdjacencyKind, AdjacencyMatrix};
use crate::mat::Mat;
use serde::{Deserialize, Serialize};

const SECS_PER_DAY: i64 = 86_400;
const DAYS_PER_WEEK: usize = 7;

/// Regular interval grid anchored at an epoch timestamp.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub start_epoch_s: i64,
    pub interval_s: u32,
    pub num_intervals: usize,
}

impl TimeGrid {
    pub fn new(start_epoch_s: i64, interval_s: u32, num_intervals: usize) -> Result<Self> {
        if interval_s == 0 {
            return Err(Error::input("interval length must be positive"));
        }
        Ok(TimeGrid {
            start_epoch_s,
            interval_s,
            num_intervals,
        })
    }

    pub fn end_epoch_s(&self) -> i64 {
        self.start_epoch_s + self.num_intervals as i64 * self.interval_s as i64
    }

    /// Half-open binning: a timestamp exactly on an edge belongs to the later
    /// interval.
    pub fn interval_of_epoch(&self, t: i64) -> Option<usize> {
        if t < self.start_epoch_s || t >= self.end_epoch_s() {
            return None;
        }
        Some(((t - self.start_epoch_s) / self.interval_s as i64) as usize)
    }

    pub fn epoch_of_interval(&self, k: usize) -> i64 {
        self.start_epoch_s + k as i64 * self.interval_s as i64
    }

    pub fn intervals_per_day(&self) -> Result<usize> {
        if SECS_PER_DAY % self.interval_s as i64 != 0 {
            return Err(Error::input(format!(
                "interval length {} s does not divide a day",
                self.interval_s
            )));
        }
        Ok((SECS_PER_DAY / self.interval_s as i64) as usize)
    }

    pub fn day_of_week(&self, k: usize) -> usize {
        (self.epoch_of_interval(k).div_euclid(SECS_PER_DAY)).rem_euclid(7) as usize
    }

    pub fn interval_of_day(&self, k: usize) -> usize {
        (self.epoch_of_interval(k).rem_euclid(SECS_PER_DAY) / self.interval_s as i64) as usize
    }
}

/// Per-zone, per-interval demand counts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemandSeries {
    grid: TimeGrid,
    n_zones: usize,
    /// Row-major [interval][zone].
    values: Vec<u32>,
}

impl DemandSeries {
    pub fn new(grid: TimeGrid, n_zones: usize, values: Vec<u32>) -> Result<Self> {
        if values.len() != grid.num_intervals * n_zones {
            return Err(Error::input(format!(
                "demand series has {} values, expected {} intervals x {} zones",
                values.len(),
                grid.num_intervals,
                n_zones
            )));
        }
        Ok(DemandSeries {
            grid,
            n_zones,
            values,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn n_zones(&self) -> usize {
        self.n_zones
    }

    pub fn len(&self) -> usize {
        self.grid.num_intervals
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn value(&self, k: usize, i: usize) -> u32 {
        self.values[k * self.n_zones + i]
    }

    pub fn interval(&self, k: usize) -> &[u32] {
        &self.values[k * self.n_zones..(k + 1) * self.n_zones]
    }

    pub fn interval_f64(&self, k: usize) -> Vec<f64> {
        self.interval(k).iter().map(|&v| v as f64).collect()
    }

    /// Rows [start, end) as an f64 matrix.
    pub fn rows_f64(&self, start: usize, end: usize) -> Mat {
        Mat::from_fn(end - start, self.n_zones, |k, i| {
            self.value(start + k, i) as f64
        })
    }

    /// The last `m` observations before interval `end` (oldest first).
    pub fn window_f64(&self, end: usize, m: usize) -> Result<Vec<Vec<f64>>> {
        if end < m || end > self.len() {
            return Err(Error::input(format!(
                "window of {m} intervals ending at {end} is out of range"
            )));
        }
        Ok(((end - m)..end).map(|k| self.interval_f64(k)).collect())
    }

    /// Chronological split into train/validation/test index ranges.
    pub fn split_chrono(
        &self,
        train_frac: f64,
        val_frac: f64,
    ) -> (
        std::ops::Range<usize>,
        std::ops::Range<usize>,
        std::ops::Range<usize>,
    ) {
        let t = self.len();
        let train_end = ((t as f64) * train_frac).floor() as usize;
        let val_end = ((t as f64) * (train_frac + val_frac)).floor() as usize;
        (0..train_end, train_end..val_end.min(t), val_end.min(t)..t)
    }

    /// Copy of the rows [start, end) as a standalone series.
    pub fn slice(&self, start: usize, end: usize) -> Result<DemandSeries> {
        if start > end || end > self.len() {
            return Err(Error::input("slice out of range"));
        }
        let grid = TimeGrid {
            start_epoch_s: self.grid.epoch_of_interval(start),
            interval_s: self.grid.interval_s,
            num_intervals: end - start,
        };
        DemandSeries::new(
            grid,
            self.n_zones,
            self.values[start * self.n_zones..end * self.n_zones].to_vec(),
        )
    }
}

/// Weights of the two fairness regularizers in the composite loss.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossParams {
    /// Weight of the cross-zone SAPE variance term.
    pub lambda: f64,
    /// Weight of the overestimation hinge term.
    pub gamma: f64,
}

impl LossParams {
    pub fn new(lambda: f64, gamma: f64) -> Result<Self> {
        if !(lambda >= 0.0 && gamma >= 0.0) {
            return Err(Error::input("loss weights must be nonnegative"));
        }
        Ok(LossParams { lambda, gamma })
    }

    pub fn none() -> Self {
        LossParams {
            lambda: 0.0,
            gamma: 0.0,
        }
    }
}

/// Symmetric absolute percentage error, bounded in [0, 1]; zero when both
/// terms are zero.
pub fn sape(actual: f64, predicted: f64) -> f64 {
    let denom = actual.abs() + predicted.abs();
    if denom == 0.0 {
        0.0
    } else {
        (actual - predicted).abs() / denom
    }
}

/// Squared error plus lambda * per-period SAPE variance (sample, n-1
/// denominator) plus gamma * overestimation hinge, summed over all periods.
pub fn composite_loss(pred: &Mat, actual: &Mat, params: &LossParams) -> Result<f64> {
    if pred.rows() != actual.rows() || pred.cols() != actual.cols() {
        return Err(Error::input("prediction and actual shapes differ"));
    }
    if pred.rows() < 1 {
        return Err(Error::input("loss needs at least one period"));
    }
    let n = pred.cols();
    if params.lambda > 0.0 && n < 2 {
        return Err(Error::input(
            "SAPE variance term needs at least two zones",
        ));
    }
    let mut loss = 0.0;
    for k in 0..pred.rows() {
        let mut sapes = Vec::with_capacity(n);
        for i in 0..n {
            let r = actual[(k, i)];
            let p = pred[(k, i)];
            let e = r - p;
            loss += e * e;
            loss += params.gamma * (p - r).max(0.0);
            sapes.push(sape(r, p));
        }
        if params.lambda > 0.0 {
            let mean = sapes.iter().sum::<f64>() / n as f64;
            let var = sapes.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
            loss += params.lambda * var;
        }
    }
    Ok(loss)
}

/// Options for the subgradient trainer. Training is deterministic: zero
/// initialization and a step that only ever halves.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TrainOpts {
    pub m_lags: usize,
    pub max_iters: usize,
    pub init_step: f64,
    pub rel_tol: f64,
}

impl Default for TrainOpts {
    fn default() -> Self {
        TrainOpts {
            m_lags: 12,
            max_iters: 5_000,
            init_step: 1e-3,
            rel_tol: 1e-8,
        }
    }
}

/// Historical-average table keyed by (day-of-week, interval-of-day).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HaModel {
    pub start_epoch_s: i64,
    pub interval_s: u32,
    pub intervals_per_day: usize,
    pub n_zones: usize,
    /// Flattened `[7][intervals_per_day][zone]`; slots never seen in training
    /// stay at 0.
    pub table: Vec<f64>,
}

impl HaModel {
    fn slot(&self, dow: usize, iod: usize) -> &[f64] {
        let base = (dow * self.intervals_per_day + iod) * self.n_zones;
        &self.table[base..base + self.n_zones]
    }
}

/// Shared lag coefficients plus per-zone bias over one-hop smoothed lags:
/// r_hat_i = max(0, bias_i + sum_l theta_l * (A_hat r^{k-l})_i).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlModel {
    pub m_lags: usize,
    pub theta: Vec<f64>,
    pub bias: Vec<f64>,
    pub a_hat: Mat,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Forecaster {
    HistoricalAverage(HaModel),
    GraphLinear(GlModel),
}

impl Forecaster {
    pub fn kind(&self) -> &'static str {
        match self {
            Forecaster::HistoricalAverage(_) => "historical_average",
            Forecaster::GraphLinear(_) => "graph_linear",
        }
    }

    pub fn n_zones(&self) -> usize {
        match self {
            Forecaster::HistoricalAverage(m) => m.n_zones,
            Forecaster::GraphLinear(m) => m.bias.len(),
        }
    }

    /// Lag window length required by `predict` (0 for the lookup table).
    pub fn window_len(&self) -> usize {
        match self {
            Forecaster::HistoricalAverage(_) => 0,
            Forecaster::GraphLinear(m) => m.m_lags,
        }
    }

    /// One-step forecast. `window` holds the last M observations oldest-first
    /// (ignored by the historical average); `clock_interval` indexes the
    /// target interval on the model's grid (ignored by the linear model).
    pub fn predict(&self, window: &[Vec<f64>], clock_interval: usize) -> Result<Vec<f64>> {
        match self {
            Forecaster::HistoricalAverage(m) => {
                let epoch =
                    m.start_epoch_s + clock_interval as i64 * m.interval_s as i64;
                let dow = epoch.div_euclid(SECS_PER_DAY).rem_euclid(7) as usize;
                let iod = (epoch.rem_euclid(SECS_PER_DAY) / m.interval_s as i64) as usize;
                Ok(m.slot(dow, iod).to_vec())
            }
            Forecaster::GraphLinear(m) => {
                if window.len() != m.m_lags {
                    return Err(Error::input(format!(
                        "window has {} rows, model expects {}",
                        window.len(),
                        m.m_lags
                    )));
                }
                let n = m.bias.len();
                let mut out = m.bias.clone();
                for l in 1..=m.m_lags {
                    let row = &window[m.m_lags - l];
                    if row.len() != n {
                        return Err(Error::input("window row has wrong zone count"));
                    }
                    let smoothed = m.a_hat.matvec(row);
                    for i in 0..n {
                        out[i] += m.theta[l - 1] * smoothed[i];
                    }
                }
                for v in out.iter_mut() {
                    *v = v.max(0.0);
                }
                Ok(out)
            }
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Mean demand per (day-of-week, interval-of-day) slot over the training set.
pub fn fit_historical_average(train: &DemandSeries) -> Result<Forecaster> {
    if train.is_empty() {
        return Err(Error::input("historical average needs training data"));
    }
    let ipd = train.grid().intervals_per_day()?;
    if train.len() < DAYS_PER_WEEK * ipd {
        return Err(Error::input(
            "historical average needs at least one full week of training data",
        ));
    }
    let n = train.n_zones();
    let mut sums = vec![0.0; DAYS_PER_WEEK * ipd * n];
    let mut counts = vec![0u32; DAYS_PER_WEEK * ipd];
    for k in 0..train.len() {
        let slot = train.grid().day_of_week(k) * ipd + train.grid().interval_of_day(k);
        counts[slot] += 1;
        for i in 0..n {
            sums[slot * n + i] += train.value(k, i) as f64;
        }
    }
    for (slot, &c) in counts.iter().enumerate() {
        if c > 0 {
            for i in 0..n {
                sums[slot * n + i] /= c as f64;
            }
        }
    }
    Ok(Forecaster::HistoricalAverage(HaModel {
        start_epoch_s: train.grid().start_epoch_s,
        interval_s: train.grid().interval_s,
        intervals_per_day: ipd,
        n_zones: n,
        table: sums,
    }))
}

/// Parameter vector layout used by the trainer: [theta_1..theta_M, bias_1..bias_n].
fn unpack(w: &[f64], m_lags: usize) -> (&[f64], &[f64]) {
    (&w[..m_lags], &w[m_lags..])
}

/// Composite loss and its subgradient with respect to the packed parameters,
/// evaluated over the whole training series with teacher forcing. This is the
/// exact objective `fit_graph_linear` descends; it is public so the training
/// path can be checked against finite differences.
pub fn training_loss_and_subgradient(
    train: &DemandSeries,
    a_hat: &Mat,
    params: &LossParams,
    m_lags: usize,
    w: &[f64],
) -> Result<(f64, Vec<f64>)> {
    let n = train.n_zones();
    let t = train.len();
    if w.len() != m_lags + n {
        return Err(Error::input(format!(
            "parameter vector has {} entries, expected {}",
            w.len(),
            m_lags + n
        )));
    }
    if t <= m_lags {
        return Err(Error::input(
            "training series must be longer than the lag window",
        ));
    }
    if params.lambda > 0.0 && n < 2 {
        return Err(Error::input("SAPE variance term needs at least two zones"));
    }

    // Smoothed lag inputs s[k] = A_hat r^k, shared by every window.
    let smoothed: Vec<Vec<f64>> = (0..t).map(|k| a_hat.matvec(&train.interval_f64(k))).collect();

    let (theta, bias) = unpack(w, m_lags);
    let mut loss = 0.0;
    let mut grad = vec![0.0; w.len()];

    let mut u = vec![0.0; n];
    let mut yhat = vec![0.0; n];
    let mut dl_dy = vec![0.0; n];
    let mut sapes = vec![0.0; n];

    for k in m_lags..t {
        for i in 0..n {
            let mut acc = bias[i];
            for l in 1..=m_lags {
                acc += theta[l - 1] * smoothed[k - l][i];
            }
            u[i] = acc;
            yhat[i] = acc.max(0.0);
        }

        // Per-cell terms.
        for i in 0..n {
            let r = train.value(k, i) as f64;
            let e = r - yhat[i];
            loss += e * e;
            dl_dy[i] = -2.0 * e;
            if yhat[i] > r {
                loss += params.gamma * (yhat[i] - r);
                dl_dy[i] += params.gamma;
            }
            sapes[i] = sape(r, yhat[i]);
        }

        // Cross-zone SAPE variance term.
        if params.lambda > 0.0 {
            let mean = sapes.iter().sum::<f64>() / n as f64;
            let var = sapes.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
            loss += params.lambda * var;
            for i in 0..n {
                let r = train.value(k, i) as f64;
                let y = yhat[i];
                // dSAPE/dy: sign(y - r) * 2r / (r + y)^2 away from kinks,
                // 0 at y = r and at the r = 0 discontinuity.
                let dsape = if r == 0.0 || y == r {
                    0.0
                } else {
                    let denom = (r + y) * (r + y);
                    (y - r).signum() * 2.0 * r / denom
                };
                let dvar = 2.0 * (sapes[i] - mean) / (n as f64 - 1.0);
                dl_dy[i] += params.lambda * dvar * dsape;
            }
        }

        // Chain through the output clamp: pass-through for u >= 0, zero on
        // the clamped branch.
        for i in 0..n {
            if u[i] < 0.0 {
                continue;
            }
            let g = dl_dy[i];
            grad[m_lags + i] += g;
            for l in 1..=m_lags {
                grad[l - 1] += g * smoothed[k - l][i];
            }
        }
    }
    Ok((loss, grad))
}

/// Fits the graph-smoothed linear model by full-batch subgradient descent on
/// the composite loss. Deterministic given identical inputs and options.
pub fn fit_graph_linear(
    train: &DemandSeries,
    a_hat: &AdjacencyMatrix,
    params: &LossParams,
    opts: &TrainOpts,
) -> Result<Forecaster> {
    if a_hat.kind() != AdjacencyKind::Normalized {
        return Err(Error::input(
            "graph-linear model expects the row-stochastic adjacency",
        ));
    }
    let n = train.n_zones();
    if a_hat.n() != n {
        return Err(Error::input("adjacency size does not match zone count"));
    }
    for i in 0..n {
        let row_sum: f64 = (0..n).map(|j| a_hat.get(i, j)).sum();
        if (row_sum - 1.0).abs() > 1e-9 {
            return Err(Error::input(format!(
                "adjacency row {i} sums to {row_sum}, expected 1"
            )));
        }
    }

    let m_lags = opts.m_lags.max(1);
    let mut w = vec![0.0; m_lags + n];
    let mut step = opts.init_step;

    let (mut loss, mut grad) =
        training_loss_and_subgradient(train, a_hat.mat(), params, m_lags, &w)?;

    for iter in 0..opts.max_iters {
        if !loss.is_finite() {
            return Err(Error::Training {
                iteration: iter,
                message: format!("loss became {loss}"),
            });
        }
        let gnorm_sq: f64 = grad.iter().map(|g| g * g).sum();
        if gnorm_sq == 0.0 {
            break;
        }

        // Backtrack: halve the step until the move no longer increases the loss.
        let mut next_w;
        let mut next_loss;
        loop {
            next_w = w
                .iter()
                .zip(&grad)
                .map(|(wi, gi)| wi - step * gi)
                .collect::<Vec<_>>();
            next_loss = training_loss_and_subgradient(train, a_hat.mat(), params, m_lags, &next_w)?
                .0;
            if next_loss.is_finite() && next_loss <= loss {
                break;
            }
            step *= 0.5;
            if step < 1e-18 {
                next_w = w.clone();
                next_loss = loss;
                break;
            }
        }

        let improvement = loss - next_loss;
        w = next_w;
        let converged = improvement <= opts.rel_tol * loss.abs().max(1.0);
        if converged {
            loss = next_loss;
            break;
        }
        let (l, g) = training_loss_and_subgradient(train, a_hat.mat(), params, m_lags, &w)?;
        loss = l;
        grad = g;
    }

    if !loss.is_finite() {
        return Err(Error::Training {
            iteration: opts.max_iters,
            message: format!("loss became {loss}"),
        });
    }

    let (theta, bias) = unpack(&w, m_lags);
    Ok(Forecaster::GraphLinear(GlModel {
        m_lags,
        theta: theta.to_vec(),
        bias: bias.to_vec(),
        a_hat: a_hat.mat().clone(),
    }))
}

/// Teacher-forced one-step predictions for intervals in `range`, as a
/// [period x zone] matrix aligned with the actuals of the same range.
pub fn one_step_predictions(
    model: &Forecaster,
    series: &DemandSeries,
    range: std::ops::Range<usize>,
) -> Result<Mat> {
    let n = series.n_zones();
    if range.end > series.len() {
        return Err(Error::input("prediction range exceeds series length"));
    }
    let m = model.window_len();
    if range.start < m {
        return Err(Error::input(format!(
            "prediction range must start at or after interval {m}"
        )));
    }
    let mut out = Mat::zeros(range.len(), n);
    for (row, k) in range.clone().enumerate() {
        let window = series.window_f64(k, m)?;
        let pred = model.predict(&window, k)?;
        out.row_mut(row).copy_from_slice(&pred);
    }
    Ok(out)
}
