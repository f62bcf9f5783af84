//! Property tests for the numeric invariants that hold across the whole
//! input space, not just the worked examples.

use fairfleet::forecast::{composite_loss, sape, LossParams};
use fairfleet::graph::{
    build_demo_correlation, build_distance_adjacency, enrich_adjacency, fairness_weights,
    normalize_adjacency, rank_one_decompose, AdjacencyKind, AdjacencyMatrix, DemographicTable,
    Zone, ZoneSet,
};
use fairfleet::mat::Mat;
use fairfleet::metrics::{accuracy_metrics, mvpe, PredictionBatch};
use fairfleet::sim::round_flows_largest_remainder;
use proptest::prelude::*;

fn mat_pair(rows: usize, cols: usize) -> impl Strategy<Value = (Mat, Mat)> {
    let cell = 0.0..30.0f64;
    (
        proptest::collection::vec(cell.clone(), rows * cols),
        proptest::collection::vec(cell, rows * cols),
    )
        .prop_map(move |(a, p)| {
            let actual = Mat::from_fn(rows, cols, |i, j| a[i * cols + j].round());
            let predicted = Mat::from_fn(rows, cols, |i, j| p[i * cols + j]);
            (actual, predicted)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn sape_bounded_in_unit_interval(r in 0.0..1000.0f64, p in 0.0..1000.0f64) {
        let s = sape(r, p);
        prop_assert!((0.0..=1.0).contains(&s));
    }

    #[test]
    fn composite_loss_nonnegative_and_zero_iff_equal((actual, predicted) in mat_pair(3, 4)) {
        let params = LossParams::new(1.5, 0.7).unwrap();
        let loss = composite_loss(&predicted, &actual, &params).unwrap();
        prop_assert!(loss >= 0.0);
        let self_loss = composite_loss(&actual, &actual, &params).unwrap();
        prop_assert_eq!(self_loss, 0.0);
    }

    #[test]
    fn composite_loss_monotone_in_weights((actual, predicted) in mat_pair(3, 4)) {
        let base = composite_loss(&predicted, &actual, &LossParams::none()).unwrap();
        let with_lambda =
            composite_loss(&predicted, &actual, &LossParams::new(2.0, 0.0).unwrap()).unwrap();
        let with_both =
            composite_loss(&predicted, &actual, &LossParams::new(2.0, 3.0).unwrap()).unwrap();
        prop_assert!(with_lambda >= base - 1e-12);
        prop_assert!(with_both >= with_lambda - 1e-12);
    }

    #[test]
    fn rmse_dominates_mae((actual, predicted) in mat_pair(4, 3)) {
        let batch = PredictionBatch::new(actual, predicted).unwrap();
        let acc = accuracy_metrics(&batch);
        prop_assert!(acc.rmse >= acc.mae - 1e-12);
    }

    #[test]
    fn mvpe_nonnegative((actual, predicted) in mat_pair(4, 3)) {
        let batch = PredictionBatch::new(actual, predicted).unwrap();
        prop_assert!(mvpe(&batch).value >= 0.0);
    }

    #[test]
    fn fairness_weights_bounded_and_affine_invariant(
        b in proptest::collection::vec(-50.0..50.0f64, 2..12),
        scale in 0.1..10.0f64,
        shift in -20.0..20.0f64,
    ) {
        let w = fairness_weights(&b).unwrap();
        for i in 0..b.len() {
            prop_assert!((0.9..=1.0 + 1e-12).contains(&w.get(i)));
        }
        let rescaled: Vec<f64> = b.iter().map(|v| scale * v + shift).collect();
        let w2 = fairness_weights(&rescaled).unwrap();
        for i in 0..b.len() {
            prop_assert!((w.get(i) - w2.get(i)).abs() < 1e-9);
        }
        // Monotone: larger b never gets a larger weight.
        for i in 0..b.len() {
            for j in 0..b.len() {
                if b[i] > b[j] {
                    prop_assert!(w.get(i) <= w.get(j) + 1e-12);
                }
            }
        }
    }

    #[test]
    fn enriched_entries_zero_or_above_threshold(
        coords in proptest::collection::vec((0.0..10_000.0f64, 0.0..10_000.0f64), 3..9),
        demo_seed in proptest::collection::vec(0.0..1.0f64, 3 * 6),
    ) {
        let zones: Vec<Zone> = coords
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| Zone { id: i as u32, x_m: x, y_m: y })
            .collect();
        let n = zones.len();
        let Ok(zone_set) = ZoneSet::new(zones) else { return Ok(()) };
        let Ok(w) = build_distance_adjacency(&zone_set) else { return Ok(()) };
        let vectors: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..6).map(|k| demo_seed[(i * 6 + k) % demo_seed.len()]).collect())
            .collect();
        let demo = DemographicTable::new(vectors).unwrap();
        let corr = build_demo_correlation(&demo).unwrap();
        let ws = enrich_adjacency(&w, &corr).unwrap();
        let mut nonzero_w = 0;
        let mut nonzero_ws = 0;
        for i in 0..n {
            for j in 0..n {
                let v = ws.get(i, j);
                prop_assert!(v == 0.0 || (0.1..=1.0 + 1e-12).contains(&v));
                if w.get(i, j) > 0.0 { nonzero_w += 1; }
                if v > 0.0 { nonzero_ws += 1; }
            }
        }
        // Enrichment only removes edges.
        prop_assert!(nonzero_ws <= nonzero_w);
    }

    #[test]
    fn normalized_rows_sum_to_one(values in proptest::collection::vec(0.0..1.0f64, 16)) {
        let m = Mat::from_fn(4, 4, |i, j| {
            let v = values[i * 4 + j];
            if v < 0.3 { 0.0 } else { v }
        });
        let ws = AdjacencyMatrix::new(AdjacencyKind::Enriched, m).unwrap();
        let a_hat = normalize_adjacency(&ws);
        for i in 0..4 {
            let sum: f64 = (0..4).map(|j| a_hat.get(i, j)).sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rank_one_residual_never_beats_frobenius_bound(
        values in proptest::collection::vec(0.05..1.0f64, 25),
    ) {
        // Symmetric nonnegative 5x5.
        let m = Mat::from_fn(5, 5, |i, j| {
            let (a, b) = if i <= j { (i, j) } else { (j, i) };
            values[a * 5 + b]
        });
        let ws = AdjacencyMatrix::new(AdjacencyKind::Enriched, m.clone()).unwrap();
        let r = rank_one_decompose(&ws).unwrap();
        // lambda a b^T must capture at least as much energy as any single
        // entry and the residual can never exceed the full norm.
        let residual = r.residual(&m);
        prop_assert!(residual <= m.frob_norm() + 1e-9);
        prop_assert!(r.lambda > 0.0);
        // Unit factors.
        prop_assert!((r.a.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-8);
        prop_assert!((r.b.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn flow_rounding_preserves_total_and_caps(
        flows in proptest::collection::vec(0.0..4.0f64, 16),
        idle in proptest::collection::vec(0u32..8, 4),
    ) {
        let mut m = Mat::from_fn(4, 4, |i, j| if i == j { 0.0 } else { flows[i * 4 + j] });
        // Keep rows within supply so the fixture resembles LP output.
        for i in 0..4 {
            let row_sum: f64 = (0..4).map(|j| m[(i, j)]).sum();
            if row_sum > idle[i] as f64 && row_sum > 0.0 {
                let scale = idle[i] as f64 / row_sum;
                for j in 0..4 {
                    m[(i, j)] *= scale;
                }
            }
        }
        let rounded = round_flows_largest_remainder(&m, &idle);
        let frac_total: f64 = m.values().sum();
        let int_total: f64 = rounded.values().sum();
        prop_assert!((int_total - (frac_total + 0.5).floor()).abs() <= f64::EPSILON * 16.0
            || int_total <= (frac_total + 0.5).floor());
        for i in 0..4 {
            let row: f64 = (0..4).map(|j| rounded[(i, j)]).sum();
            prop_assert!(row <= idle[i] as f64 + 1e-9, "row {i} exceeds supply");
            for j in 0..4 {
                prop_assert!((rounded[(i, j)] - m[(i, j)]).abs() < 1.0 + 1e-9);
            }
        }
    }
}
