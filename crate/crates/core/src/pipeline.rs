//! End-to-end scenario orchestration: ingest data, build the enriched zone
//! graph and fairness weights, train the forecaster, run the simulated
//! evaluation day under the rolling-horizon rebalancer, and emit the report.

use crate::config::{ControllerKind, ForecasterKind, ScenarioConfig};
use crate::error::{Error, Result};
use crate::forecast::{
    fit_graph_linear, fit_historical_average, one_step_predictions, DemandSeries, Forecaster,
    LossParams, TrainOpts,
};
use crate::graph::{
    build_demo_correlation, build_distance_adjacency, enrich_adjacency, fairness_weights,
    normalize_adjacency, rank_one_decompose, AdjacencyMatrix, FairnessWeights, ZoneSet,
};
use crate::io;
use crate::mat::Mat;
use crate::metrics::{metrics_report, MapeDenom, MetricsReport, PredictionBatch};
use crate::mivr::{plan_rebalancing, solve_mivr, FleetState, MivrParams, RebalancePlan};
use crate::sim::{init_sim, run, SimConfig, SimReport};
use serde::{Deserialize, Serialize};
use std::path::Path;

const SECS_PER_DAY: i64 = 86_400;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Provenance {
    pub config_sha256: String,
    pub crate_version: String,
    pub seed: u64,
}

/// Everything a scenario run produces. Serializes deterministically: field
/// order is fixed and no timestamps are recorded, so identical runs yield
/// byte-identical JSON.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunReport {
    pub provenance: Provenance,
    pub config: ScenarioConfig,
    pub zone_ids: Vec<u32>,
    pub fairness_weights: Vec<f64>,
    pub rank_one_lambda: f64,
    pub prediction: MetricsReport,
    pub service: SimReport,
}

/// Intermediate graph products, reused by the `graph` CLI command.
pub struct GraphBundle {
    pub w: AdjacencyMatrix,
    pub corr: Mat,
    pub w_star: AdjacencyMatrix,
    pub a_hat: AdjacencyMatrix,
    pub lambda: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub omega: FairnessWeights,
}

pub fn build_graph_bundle(zones: &ZoneSet, demo: &crate::graph::DemographicTable) -> Result<GraphBundle> {
    let w = build_distance_adjacency(zones)?;
    let corr = build_demo_correlation(demo)?;
    let w_star = enrich_adjacency(&w, &corr)?;
    let a_hat = normalize_adjacency(&w_star);
    let r1 = rank_one_decompose(&w_star)?;
    let omega = fairness_weights(&r1.b)?;
    Ok(GraphBundle {
        w,
        corr,
        w_star,
        a_hat,
        lambda: r1.lambda,
        a: r1.a,
        b: r1.b,
        omega,
    })
}

/// Fits the configured forecaster on the training slice.
pub fn fit_forecaster(
    kind: ForecasterKind,
    train: &DemandSeries,
    a_hat: &AdjacencyMatrix,
    loss: &LossParams,
    m_lags: usize,
) -> Result<Forecaster> {
    match kind {
        ForecasterKind::HistoricalAverage => fit_historical_average(train),
        ForecasterKind::GraphLinear => {
            let opts = TrainOpts {
                m_lags,
                ..TrainOpts::default()
            };
            fit_graph_linear(train, a_hat, loss, &opts)
        }
    }
}

/// Runs the whole pipeline for one scenario configuration.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunReport> {
    cfg.validate().map_err(|e| e.at_stage("config"))?;

    // Ingestion.
    let zones = io::load_zones(&cfg.paths.zones).map_err(|e| e.at_stage("ingest"))?;
    let demo =
        io::load_demographics(&cfg.paths.demographics, &zones).map_err(|e| e.at_stage("ingest"))?;
    let (series, trips) = io::load_trips(&cfg.paths.trips, &zones, cfg.grid.interval_s)
        .map_err(|e| e.at_stage("ingest"))?;

    // Evaluation day: the final full day of the series, held out of training.
    let ipd = (SECS_PER_DAY / cfg.grid.interval_s as i64) as usize;
    if series.len() < 2 * ipd {
        return Err(Error::input(
            "trip data must cover at least two days (training plus an evaluation day)",
        )
        .at_stage("ingest"));
    }
    let eval_start_idx = series.len() - ipd;
    let eval_start_epoch = series.grid().epoch_of_interval(eval_start_idx);
    let pre_eval = series
        .slice(0, eval_start_idx)
        .map_err(|e| e.at_stage("ingest"))?;

    // Graph products.
    let bundle = build_graph_bundle(&zones, &demo).map_err(|e| e.at_stage("graph"))?;
    let omega = if cfg.run.use_fairness_weights {
        bundle.omega.clone()
    } else {
        FairnessWeights::uniform(zones.n())
    };

    // Forecaster training on the chronological train split of pre-eval data.
    let (train_range, _val_range, test_range) =
        pre_eval.split_chrono(cfg.run.train_frac, cfg.run.val_frac);
    let train = pre_eval
        .slice(train_range.start, train_range.end)
        .map_err(|e| e.at_stage("train"))?;
    let loss = LossParams::new(cfg.loss.lambda, cfg.loss.gamma).map_err(|e| e.at_stage("train"))?;
    let model = fit_forecaster(
        cfg.run.forecaster,
        &train,
        &bundle.a_hat,
        &loss,
        cfg.grid.m_lags,
    )
    .map_err(|e| e.at_stage("train"))?;

    // Prediction metrics on the held-out test split (teacher-forced one-step).
    if test_range.is_empty() || test_range.start < cfg.grid.m_lags {
        return Err(Error::input("test split is empty or shorter than the lag window")
            .at_stage("train"));
    }
    let predicted = one_step_predictions(&model, &pre_eval, test_range.clone())
        .map_err(|e| e.at_stage("train"))?;
    let actual = pre_eval.rows_f64(test_range.start, test_range.end);
    let batch = PredictionBatch::new(actual, predicted).map_err(|e| e.at_stage("train"))?;
    let mape_denom = if cfg.run.mape_literal_min {
        MapeDenom::LiteralMin
    } else {
        MapeDenom::AdjustedMax
    };
    let prediction = metrics_report(&batch, mape_denom).map_err(|e| e.at_stage("metrics"))?;

    // Rolling-horizon controller over the evaluation day.
    let params = MivrParams {
        alpha: cfg.mivr.alpha,
        beta: cfg.mivr.beta,
        kappa: cfg.mivr.kappa,
        distances_mi: zones.distances_mi(),
        omega,
    };
    params.validate().map_err(|e| e.at_stage("rebalance"))?;

    // Simulation window within the evaluation day.
    let offset = cfg.run.eval_offset_s.unwrap_or(0) as i64;
    let horizon = cfg
        .run
        .eval_horizon_s
        .map_or((SECS_PER_DAY - offset) as f64, f64::from);
    let sim_start_epoch = eval_start_epoch + offset;
    let sim_end_epoch = sim_start_epoch + horizon as i64;
    let eval_trips: Vec<io::Trip> = trips
        .iter()
        .filter(|t| t.arrival_epoch_s >= sim_start_epoch && t.arrival_epoch_s < sim_end_epoch)
        .copied()
        .collect();

    let sim_config = SimConfig {
        fleet_size: cfg.sim.fleet_size,
        match_epoch_s: cfg.sim.match_epoch_s,
        rebalance_epoch_s: cfg.sim.rebalance_epoch_s,
        speed_mps: cfg.sim.speed_mps,
        max_wait_s: cfg.sim.max_wait_s,
        zone_radius_m: cfg.sim.zone_radius_m,
        seed: cfg.run.seed,
    };
    let state = init_sim(&sim_config, &zones, &eval_trips, sim_start_epoch)
        .map_err(|e| e.at_stage("simulate"))?;

    let controller_kind = cfg.run.controller;
    let grid_interval = cfg.grid.interval_s;
    let rebalance_epoch = cfg.sim.rebalance_epoch_s;
    let m_lags = model.window_len();
    let n = zones.n();
    let kappa = params.kappa;
    let series_ref = &series;
    let model_ref = &model;
    let params_ref = &params;

    let mut controller = move |fleet: &FleetState| {
        // Map the simulator's local rebalance tick onto the global series grid.
        let sim_seconds = fleet.interval_index as i64 * rebalance_epoch as i64;
        let global_k = ((sim_start_epoch + sim_seconds - series_ref.grid().start_epoch_s)
            / grid_interval as i64) as usize;
        let state = FleetState {
            idle: fleet.idle.clone(),
            interval_index: global_k,
        };
        match controller_kind {
            ControllerKind::None => Ok(RebalancePlan {
                interval_index: global_k,
                flows: Mat::zeros(n, n),
                objective: 0.0,
                horizon: Vec::new(),
                forecast: Mat::zeros(kappa, n),
            }),
            ControllerKind::TrueDemand => {
                let forecast = Mat::from_fn(kappa, n, |step, i| {
                    let k = global_k + step;
                    if k < series_ref.len() {
                        series_ref.value(k, i) as f64
                    } else {
                        0.0
                    }
                });
                solve_mivr(&state, &forecast, params_ref)
            }
            ControllerKind::Forecast => {
                let history = series_ref.window_f64(global_k.min(series_ref.len()), m_lags)?;
                plan_rebalancing(&state, model_ref, &history, params_ref)
            }
        }
    };

    let service = run(state, &mut controller, horizon).map_err(|e| e.at_stage("simulate"))?;

    Ok(RunReport {
        provenance: Provenance {
            config_sha256: cfg.sha256(),
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: cfg.run.seed,
        },
        config: cfg.clone(),
        zone_ids: zones.ids(),
        fairness_weights: if cfg.run.use_fairness_weights {
            bundle.omega.as_slice().to_vec()
        } else {
            vec![1.0; zones.n()]
        },
        rank_one_lambda: bundle.lambda,
        prediction,
        service,
    })
}

/// Writes `run_report.json` (and optionally the request log CSV) under the
/// configured output directory. Returns the report path.
pub fn write_run_report(report: &RunReport, zones: &ZoneSet) -> Result<std::path::PathBuf> {
    let dir = &report.config.run.output_dir;
    std::fs::create_dir_all(dir)?;
    let path = dir.join("run_report.json");
    let json = serde_json::to_string_pretty(report)?;
    std::fs::write(&path, json.as_bytes())?;
    if report.config.run.write_request_log {
        io::write_request_log(&dir.join("requests.csv"), zones, &report.service.request_log)?;
    }
    Ok(path)
}

pub fn read_run_report(path: &Path) -> Result<RunReport> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}
