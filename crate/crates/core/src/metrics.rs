//! Prediction accuracy and fairness metrics: MAE, RMSE, MAPE, ME, MVPE and the
//! Generalized Entropy Index over shifted percentage errors.

use crate::error::{Error, Result};
use crate::mat::Mat;
use serde::{Deserialize, Serialize};

/// Floor used in the adjusted MAPE denominator and GEI shift margin.
const MAPE_FLOOR: f64 = 0.1;
const GEI_SHIFT_MARGIN: f64 = 1e-9;

/// Actual counts and predictions over the same [periods x zones] grid.
#[derive(Clone, Debug)]
pub struct PredictionBatch {
    actual: Mat,
    predicted: Mat,
}

impl PredictionBatch {
    pub fn new(actual: Mat, predicted: Mat) -> Result<Self> {
        if actual.rows() != predicted.rows() || actual.cols() != predicted.cols() {
            return Err(Error::input(format!(
                "actual is {}x{} but predicted is {}x{}",
                actual.rows(),
                actual.cols(),
                predicted.rows(),
                predicted.cols()
            )));
        }
        if actual.rows() < 1 {
            return Err(Error::input("batch needs at least one period"));
        }
        if actual.cols() < 2 {
            return Err(Error::input("batch needs at least two zones"));
        }
        if !actual.is_finite() || !predicted.is_finite() {
            return Err(Error::input("batch contains non-finite values"));
        }
        Ok(PredictionBatch { actual, predicted })
    }

    pub fn periods(&self) -> usize {
        self.actual.rows()
    }

    pub fn zones(&self) -> usize {
        self.actual.cols()
    }

    pub fn actual(&self) -> &Mat {
        &self.actual
    }

    pub fn predicted(&self) -> &Mat {
        &self.predicted
    }
}

/// How the MAPE denominator handles zero demand.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MapeDenom {
    /// r' = max(r, 0.1): keeps the fraction defined for r = 0.
    AdjustedMax,
    /// r' = min(r, 0.1): the literal printed formula, kept for comparison runs.
    LiteralMin,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Accuracy {
    pub mae: f64,
    pub rmse: f64,
    pub mape: f64,
    pub me: f64,
}

pub fn accuracy_metrics(batch: &PredictionBatch) -> Accuracy {
    accuracy_metrics_with(batch, MapeDenom::AdjustedMax)
}

/// MAE, RMSE, MAPE and ME over all cells. A positive ME means the model
/// underestimates demand overall.
pub fn accuracy_metrics_with(batch: &PredictionBatch, denom: MapeDenom) -> Accuracy {
    let cells = (batch.periods() * batch.zones()) as f64;
    let mut abs_sum = 0.0;
    let mut sq_sum = 0.0;
    let mut pct_sum = 0.0;
    let mut err_sum = 0.0;
    for k in 0..batch.periods() {
        for i in 0..batch.zones() {
            let r = batch.actual[(k, i)];
            let p = batch.predicted[(k, i)];
            let e = r - p;
            abs_sum += e.abs();
            sq_sum += e * e;
            err_sum += e;
            let r_adj = match denom {
                MapeDenom::AdjustedMax => r.max(MAPE_FLOOR),
                MapeDenom::LiteralMin => r.min(MAPE_FLOOR),
            };
            pct_sum += e.abs() / r_adj;
        }
    }
    Accuracy {
        mae: abs_sum / cells,
        rmse: (sq_sum / cells).sqrt(),
        mape: pct_sum / cells,
        me: err_sum / cells,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MvpeOutcome {
    pub value: f64,
    /// Periods with fewer than two cells of nonzero actual demand.
    pub skipped_periods: usize,
}

/// Mean over periods of the cross-zone sample variance of percentage errors
/// PE = (r - r_hat) / r. Cells with r = 0 leave PE undefined and are excluded;
/// periods left with fewer than two valid cells are skipped and counted.
pub fn mvpe(batch: &PredictionBatch) -> MvpeOutcome {
    let mut sum = 0.0;
    let mut used = 0usize;
    let mut skipped = 0usize;
    for k in 0..batch.periods() {
        let pes = period_pes(batch, k);
        if pes.len() < 2 {
            skipped += 1;
            continue;
        }
        let n = pes.len() as f64;
        let mean = pes.iter().sum::<f64>() / n;
        let var = pes.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (n - 1.0);
        sum += var;
        used += 1;
    }
    MvpeOutcome {
        value: if used > 0 { sum / used as f64 } else { 0.0 },
        skipped_periods: skipped,
    }
}

fn period_pes(batch: &PredictionBatch, k: usize) -> Vec<f64> {
    (0..batch.zones())
        .filter_map(|i| {
            let r = batch.actual[(k, i)];
            if r == 0.0 {
                None
            } else {
                Some((r - batch.predicted[(k, i)]) / r)
            }
        })
        .collect()
}

/// Generalized Entropy Index of shifted percentage errors b = PE + m, averaged
/// over periods. With `shift = None` a single global m is chosen as
/// max(0, -min PE) + 1e-9 so every b is nonnegative and periods stay
/// comparable. Zero-demand cells are excluded the same way as in [`mvpe`].
pub fn gei(batch: &PredictionBatch, alpha: f64, shift: Option<f64>) -> Result<f64> {
    if !alpha.is_finite() || (alpha * (alpha - 1.0)).abs() < 1e-12 {
        return Err(Error::input("GEI requires alpha outside {0, 1}"));
    }
    let per_period: Vec<Vec<f64>> = (0..batch.periods())
        .map(|k| period_pes(batch, k))
        .collect();
    let m = match shift {
        Some(m) => m,
        None => {
            let min_pe = per_period
                .iter()
                .flatten()
                .copied()
                .fold(f64::INFINITY, f64::min);
            if min_pe == f64::INFINITY {
                return Err(Error::input(
                    "GEI undefined: no cells with nonzero actual demand",
                ));
            }
            (-min_pe).max(0.0) + GEI_SHIFT_MARGIN
        }
    };

    let mut sum = 0.0;
    let mut used = 0usize;
    for (k, pes) in per_period.iter().enumerate() {
        if pes.is_empty() {
            continue;
        }
        let b: Vec<f64> = pes.iter().map(|p| p + m).collect();
        if let Some(&bad) = b.iter().find(|&&v| v < 0.0) {
            return Err(Error::input(format!(
                "shift m = {m} leaves a negative b = {bad} in period {k}"
            )));
        }
        let n = b.len() as f64;
        let mean = b.iter().sum::<f64>() / n;
        if mean == 0.0 {
            return Err(Error::DegeneratePeriod(format!(
                "period {k} has zero mean shifted error"
            )));
        }
        let inner: f64 = b.iter().map(|v| (v / mean).powf(alpha) - 1.0).sum();
        sum += inner / (n * alpha * (alpha - 1.0));
        used += 1;
    }
    if used == 0 {
        return Err(Error::input(
            "GEI undefined: no cells with nonzero actual demand",
        ));
    }
    Ok(sum / used as f64)
}

/// All prediction metrics in one report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub mae: f64,
    pub rmse: f64,
    pub mape: f64,
    pub me: f64,
    pub mvpe: f64,
    pub mvpe_skipped_periods: usize,
    pub gei: f64,
    /// GEI scaled by 1e4, the unit used in comparison tables.
    pub gei_x1e4: f64,
}

pub fn metrics_report(batch: &PredictionBatch, mape_denom: MapeDenom) -> Result<MetricsReport> {
    let acc = accuracy_metrics_with(batch, mape_denom);
    let mv = mvpe(batch);
    let g = gei(batch, 2.0, None)?;
    Ok(MetricsReport {
        mae: acc.mae,
        rmse: acc.rmse,
        mape: acc.mape,
        me: acc.me,
        mvpe: mv.value,
        mvpe_skipped_periods: mv.skipped_periods,
        gei: g,
        gei_x1e4: g * 1e4,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn batch(actual: &[Vec<f64>], predicted: &[Vec<f64>]) -> PredictionBatch {
        PredictionBatch::new(Mat::from_rows(actual), Mat::from_rows(predicted)).unwrap()
    }

    #[test]
    fn perfect_prediction_is_all_zero() {
        let b = batch(&[vec![3.0, 5.0]], &[vec![3.0, 5.0]]);
        let a = accuracy_metrics(&b);
        assert_eq!((a.mae, a.rmse, a.mape, a.me), (0.0, 0.0, 0.0, 0.0));
        assert_eq!(mvpe(&b).value, 0.0);
        assert_eq!(gei(&b, 2.0, None).unwrap(), 0.0);
    }

    #[test]
    fn zero_demand_cell_uses_adjusted_denominator() {
        let b = batch(&[vec![0.0, 0.0]], &[vec![1.0, 0.0]]);
        let a = accuracy_metrics(&b);
        assert!((a.mae - 0.5).abs() < 1e-12);
        assert!((a.rmse - (0.5f64).sqrt()).abs() < 1e-12);
        // Cell (0, 0): |0 - 1| / max(0, 0.1) = 10; cell (0, 1): 0.
        assert!((a.mape - 5.0).abs() < 1e-12);
        assert!((a.me + 0.5).abs() < 1e-12);
    }

    #[test]
    fn single_cell_oracle_values() {
        // One period, two zones; the second zone predicted exactly to isolate
        // the r = 0, r_hat = 1 cell.
        let b = batch(&[vec![0.0, 4.0]], &[vec![1.0, 4.0]]);
        let a = accuracy_metrics(&b);
        assert!((a.mae - 0.5).abs() < 1e-12);
        assert!((a.mape - 5.0).abs() < 1e-12);
        assert!((a.me + 0.5).abs() < 1e-12);
    }

    #[test]
    fn literal_min_denominator_flag() {
        let b = batch(&[vec![4.0, 4.0]], &[vec![2.0, 2.0]]);
        let adj = accuracy_metrics_with(&b, MapeDenom::AdjustedMax);
        let lit = accuracy_metrics_with(&b, MapeDenom::LiteralMin);
        assert!((adj.mape - 0.5).abs() < 1e-12); // |4-2|/4
        assert!((lit.mape - 20.0).abs() < 1e-12); // |4-2|/0.1
    }

    #[test]
    fn uniform_offset_gives_positive_me() {
        let b = batch(
            &[vec![5.0, 7.0], vec![2.0, 9.0]],
            &[vec![4.0, 6.0], vec![1.0, 8.0]],
        );
        let a = accuracy_metrics(&b);
        assert!((a.me - 1.0).abs() < 1e-12);
        assert!((a.mae - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mvpe_hand_example() {
        let b = batch(&[vec![10.0, 10.0]], &[vec![9.0, 12.0]]);
        let out = mvpe(&b);
        assert!((out.value - 0.045).abs() < 1e-12);
        assert_eq!(out.skipped_periods, 0);
    }

    #[test]
    fn mvpe_constant_pe_is_zero() {
        // PE = 0.5 in every cell of both periods.
        let b = batch(
            &[vec![2.0, 4.0], vec![6.0, 8.0]],
            &[vec![1.0, 2.0], vec![3.0, 4.0]],
        );
        assert_eq!(mvpe(&b).value, 0.0);
    }

    #[test]
    fn mvpe_skips_starved_periods() {
        let b = batch(
            &[vec![0.0, 5.0], vec![4.0, 2.0]],
            &[vec![1.0, 5.0], vec![4.0, 1.0]],
        );
        let out = mvpe(&b);
        assert_eq!(out.skipped_periods, 1);
        // Only the second period counts: PEs (0, 0.5), mean 0.25, var 0.125.
        assert!((out.value - 0.125).abs() < 1e-12);
    }

    #[test]
    fn gei_hand_example() {
        // PEs (1, 3) with an explicit zero shift give b = (1, 3):
        // (1/4) * [(0.5^2 - 1) + (1.5^2 - 1)] = 0.125.
        let b = batch(&[vec![2.0, 2.0]], &[vec![0.0, -4.0]]);
        let g = gei(&b, 2.0, Some(0.0)).unwrap();
        assert!((g - 0.125).abs() < 1e-12);
    }

    #[test]
    fn gei_scale_invariance_within_period() {
        let b1 = batch(&[vec![2.0, 2.0]], &[vec![0.0, -4.0]]); // b = (1, 3)
        let b2 = batch(&[vec![2.0, 2.0]], &[vec![-2.0, -10.0]]); // b = (2, 6)
        let g1 = gei(&b1, 2.0, Some(0.0)).unwrap();
        let g2 = gei(&b2, 2.0, Some(0.0)).unwrap();
        assert!((g1 - g2).abs() < 1e-12);
    }

    #[test]
    fn gei_equal_errors_zero() {
        let b = batch(
            &[vec![4.0, 8.0], vec![2.0, 6.0]],
            &[vec![2.0, 4.0], vec![1.0, 3.0]],
        );
        assert!(gei(&b, 2.0, None).unwrap().abs() < 1e-12);
    }

    #[test]
    fn gei_rejects_insufficient_shift() {
        let b = batch(&[vec![2.0, 2.0]], &[vec![4.0, 1.0]]); // PEs (-1, 0.5)
        assert!(gei(&b, 2.0, Some(0.5)).is_err());
        assert!(gei(&b, 2.0, None).is_ok());
    }

    #[test]
    fn shape_mismatch_rejected() {
        let a = Mat::from_rows(&[vec![1.0, 2.0]]);
        let p = Mat::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        assert!(PredictionBatch::new(a, p).is_err());
    }
}
