//! `fairfleet` command line: build zone graphs and fairness weights, train
//! forecasters, solve one-shot rebalancing plans, run simulated scenarios,
//! score prediction files, and generate synthetic scenarios.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 runtime error.

use clap::{Args, Parser, Subcommand};
use fairfleet::config::{ControllerKind, ForecasterKind, ScenarioConfig};
use fairfleet::error::Error;
use fairfleet::forecast::LossParams;
use fairfleet::graph::FairnessWeights;
use fairfleet::io;
use fairfleet::mat::Mat;
use fairfleet::metrics::{metrics_report, MapeDenom};
use fairfleet::mivr::{build_mivr_lp, solve_mivr, FleetState, MivrParams};
use fairfleet::pipeline::{build_graph_bundle, fit_forecaster, run_scenario, write_run_report};
use fairfleet::synth::{generate, SynthSpec};
use serde::Deserialize;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "fairfleet", version, about = "Fairness-aware ride-hailing rebalancing toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the distance/enriched adjacencies and fairness weights, dump as JSON.
    Graph(GraphArgs),
    /// Train a demand forecaster and save the model JSON.
    Train(TrainArgs),
    /// Solve a one-shot rebalancing plan from a fleet-state JSON file.
    Plan(PlanArgs),
    /// Run the full pipeline: graph, training, simulated evaluation, report.
    Simulate(SimulateArgs),
    /// Score a predictions CSV (interval,zone,actual,predicted).
    Metrics(MetricsArgs),
    /// Generate a bundled synthetic scenario (zones, demographics, trips, config).
    Synth(SynthArgs),
}

#[derive(Args)]
struct ConfigOverrides {
    /// Scenario config TOML; flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    zones: Option<PathBuf>,
    #[arg(long)]
    demographics: Option<PathBuf>,
    #[arg(long)]
    trips: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    fleet_size: Option<u32>,
    #[arg(long)]
    forecaster: Option<String>,
    #[arg(long)]
    controller: Option<String>,
    /// Disable the fairness weights (omega = 1 everywhere).
    #[arg(long)]
    no_fairness_weights: bool,
    #[arg(long)]
    eval_horizon_s: Option<u32>,
    #[arg(long)]
    eval_offset_s: Option<u32>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Write the per-request CSV log next to the report.
    #[arg(long)]
    request_log: bool,
}

impl ConfigOverrides {
    fn resolve(&self) -> Result<ScenarioConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => ScenarioConfig::load(path)?,
            None => ScenarioConfig::default(),
        };
        if let Some(p) = &self.zones {
            cfg.paths.zones = p.clone();
        }
        if let Some(p) = &self.demographics {
            cfg.paths.demographics = p.clone();
        }
        if let Some(p) = &self.trips {
            cfg.paths.trips = p.clone();
        }
        if let Some(s) = self.seed {
            cfg.run.seed = s;
        }
        if let Some(l) = self.lambda {
            cfg.loss.lambda = l;
        }
        if let Some(g) = self.gamma {
            cfg.loss.gamma = g;
        }
        if let Some(f) = self.fleet_size {
            cfg.sim.fleet_size = f;
        }
        if let Some(k) = &self.forecaster {
            cfg.run.forecaster = match k.as_str() {
                "historical_average" => ForecasterKind::HistoricalAverage,
                "graph_linear" => ForecasterKind::GraphLinear,
                other => {
                    return Err(Error::Config(format!("unknown forecaster {other:?}")));
                }
            };
        }
        if let Some(k) = &self.controller {
            cfg.run.controller = match k.as_str() {
                "none" => ControllerKind::None,
                "true_demand" => ControllerKind::TrueDemand,
                "forecast" => ControllerKind::Forecast,
                other => {
                    return Err(Error::Config(format!("unknown controller {other:?}")));
                }
            };
        }
        if self.no_fairness_weights {
            cfg.run.use_fairness_weights = false;
        }
        if let Some(h) = self.eval_horizon_s {
            cfg.run.eval_horizon_s = Some(h);
        }
        if let Some(o) = self.eval_offset_s {
            cfg.run.eval_offset_s = Some(o);
        }
        if let Some(d) = &self.out_dir {
            cfg.run.output_dir = d.clone();
        }
        if self.request_log {
            cfg.run.write_request_log = true;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct GraphArgs {
    #[command(flatten)]
    overrides: ConfigOverrides,
    /// Output JSON path (default: <out_dir>/graph.json).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    overrides: ConfigOverrides,
    /// Output model JSON path (default: <out_dir>/model.json).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PlanArgs {
    /// Fleet-state JSON: {interval_index, idle: [..], forecast: [[..]; kappa],
    /// omega: [..]? }.
    #[arg(long)]
    state: PathBuf,
    /// Zone centroid CSV providing the distance matrix.
    #[arg(long)]
    zones: PathBuf,
    /// Graph JSON from `fairfleet graph`; supplies omega unless the state
    /// file carries its own.
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 100.0)]
    beta: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the LP in plain text for debugging.
    #[arg(long)]
    dump_lp: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    overrides: ConfigOverrides,
}

#[derive(Args)]
struct MetricsArgs {
    /// Predictions CSV with header interval,zone,actual,predicted.
    #[arg(long)]
    predictions: PathBuf,
    /// Use the literal min(r, 0.1) MAPE denominator instead of max(r, 0.1).
    #[arg(long)]
    literal_min_mape: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value = "synth_scenario")]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 4)]
    core_zones: usize,
    #[arg(long, default_value_t = 4)]
    periphery_zones: usize,
    #[arg(long, default_value_t = 8)]
    days: u32,
    #[arg(long, default_value_t = 3.0)]
    core_rate: f64,
    #[arg(long, default_value_t = 0.8)]
    periphery_rate: f64,
    #[arg(long, default_value_t = 0.7)]
    core_dest_share: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

fn exit_code_for(err: &Error) -> u8 {
    match err.root() {
        Error::Config(_) => 2,
        Error::Input(_) | Error::Data { .. } | Error::Csv(_) => 3,
        _ => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Graph(args) => cmd_graph(args),
        Command::Train(args) => cmd_train(args),
        Command::Plan(args) => cmd_plan(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Metrics(args) => cmd_metrics(args),
        Command::Synth(args) => cmd_synth(args),
    }
}

fn write_json(path: &PathBuf, value: &serde_json::Value) -> Result<(), Error> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, serde_json::to_string_pretty(value)?)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_graph(args: GraphArgs) -> Result<(), Error> {
    let cfg = args.overrides.resolve()?;
    let zones = io::load_zones(&cfg.paths.zones)?;
    let demo = io::load_demographics(&cfg.paths.demographics, &zones)?;
    let bundle = build_graph_bundle(&zones, &demo)?;
    let out = args
        .out
        .unwrap_or_else(|| cfg.run.output_dir.join("graph.json"));
    let doc = serde_json::json!({
        "zone_ids": zones.ids(),
        "w": bundle.w.mat().to_rows_vec(),
        "corr": bundle.corr.to_rows_vec(),
        "w_star": bundle.w_star.mat().to_rows_vec(),
        "a_hat": bundle.a_hat.mat().to_rows_vec(),
        "lambda": bundle.lambda,
        "a": bundle.a,
        "b": bundle.b,
        "omega": bundle.omega.as_slice(),
    });
    write_json(&out, &doc)
}

fn cmd_train(args: TrainArgs) -> Result<(), Error> {
    let cfg = args.overrides.resolve()?;
    cfg.validate()?;
    let zones = io::load_zones(&cfg.paths.zones)?;
    let demo = io::load_demographics(&cfg.paths.demographics, &zones)?;
    let (series, _trips) = io::load_trips(&cfg.paths.trips, &zones, cfg.grid.interval_s)?;
    let ipd = (86_400 / cfg.grid.interval_s) as usize;
    if series.len() < 2 * ipd {
        return Err(Error::input("trip data must cover at least two days"));
    }
    let pre_eval = series.slice(0, series.len() - ipd)?;
    let (train_range, _, _) = pre_eval.split_chrono(cfg.run.train_frac, cfg.run.val_frac);
    let train = pre_eval.slice(train_range.start, train_range.end)?;
    let bundle = build_graph_bundle(&zones, &demo)?;
    let loss = LossParams::new(cfg.loss.lambda, cfg.loss.gamma)?;
    let model = fit_forecaster(
        cfg.run.forecaster,
        &train,
        &bundle.a_hat,
        &loss,
        cfg.grid.m_lags,
    )?;
    let out = args
        .out
        .unwrap_or_else(|| cfg.run.output_dir.join("model.json"));
    if let Some(dir) = out.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(&out, model.to_json()?)?;
    println!("wrote {}", out.display());
    Ok(())
}

#[derive(Deserialize)]
struct PlanStateFile {
    interval_index: usize,
    idle: Vec<u32>,
    forecast: Vec<Vec<f64>>,
    #[serde(default)]
    omega: Option<Vec<f64>>,
}

#[derive(Deserialize)]
struct GraphFile {
    omega: Vec<f64>,
}

fn cmd_plan(args: PlanArgs) -> Result<(), Error> {
    let zones = io::load_zones(&args.zones)?;
    let text = std::fs::read_to_string(&args.state)?;
    let state_file: PlanStateFile = serde_json::from_str(&text)?;
    let omega = if let Some(w) = state_file.omega {
        FairnessWeights::new(w)?
    } else if let Some(graph_path) = &args.graph {
        let graph: GraphFile = serde_json::from_str(&std::fs::read_to_string(graph_path)?)?;
        FairnessWeights::new(graph.omega)?
    } else {
        FairnessWeights::uniform(zones.n())
    };
    let forecast = Mat::from_rows(&state_file.forecast);
    let params = MivrParams {
        alpha: args.alpha,
        beta: args.beta,
        kappa: forecast.rows(),
        distances_mi: zones.distances_mi(),
        omega,
    };
    let fleet = FleetState {
        idle: state_file.idle,
        interval_index: state_file.interval_index,
    };
    if let Some(lp_path) = &args.dump_lp {
        let problem = build_mivr_lp(&fleet, &forecast, &params)?;
        std::fs::write(lp_path, problem.dump_text())?;
        println!("wrote {}", lp_path.display());
    }
    let plan = solve_mivr(&fleet, &forecast, &params)?;
    let export = plan.to_export(&zones.ids());
    let out = args.out.unwrap_or_else(|| PathBuf::from("plan.json"));
    write_json(&out, &serde_json::to_value(&export)?)
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), Error> {
    let cfg = args.overrides.resolve()?;
    let report = run_scenario(&cfg)?;
    let zones = io::load_zones(&cfg.paths.zones)?;
    let path = write_run_report(&report, &zones)?;
    println!("wrote {}", path.display());
    println!(
        "served {}/{} requests; unsatisfaction {:.2}%; wait avg {:.1}s std-across-zones {:.1}s",
        report.service.served,
        report.service.total_requests,
        report.service.unsatisfaction_rate * 100.0,
        report.service.wait_avg_s,
        report.service.wait_std_across_zones_s,
    );
    Ok(())
}

fn cmd_metrics(args: MetricsArgs) -> Result<(), Error> {
    let batch = io::load_predictions(&args.predictions)?;
    let denom = if args.literal_min_mape {
        MapeDenom::LiteralMin
    } else {
        MapeDenom::AdjustedMax
    };
    let report = metrics_report(&batch, denom)?;
    let value = serde_json::to_value(&report)?;
    match &args.out {
        Some(path) => write_json(path, &value)?,
        None => println!("{}", serde_json::to_string_pretty(&value)?),
    }
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> Result<(), Error> {
    let spec = SynthSpec {
        core_zones: args.core_zones,
        periphery_zones: args.periphery_zones,
        days: args.days,
        core_rate: args.core_rate,
        periphery_rate: args.periphery_rate,
        core_dest_share: args.core_dest_share,
        seed: args.seed,
        ..SynthSpec::default()
    };
    let scenario = generate(&spec)?;
    std::fs::create_dir_all(&args.out_dir)?;
    let zones_path = args.out_dir.join("zones.csv");
    let demo_path = args.out_dir.join("demographics.csv");
    let trips_path = args.out_dir.join("trips.csv");
    io::write_zones(&zones_path, &scenario.zones)?;
    io::write_demographics(&demo_path, &scenario.zones, &scenario.demo, spec.first_year)?;
    io::write_trips(&trips_path, &scenario.zones, &scenario.trips)?;

    let mut cfg = ScenarioConfig::default();
    cfg.paths.zones = PathBuf::from("zones.csv");
    cfg.paths.demographics = PathBuf::from("demographics.csv");
    cfg.paths.trips = PathBuf::from("trips.csv");
    cfg.run.output_dir = PathBuf::from("out");
    cfg.run.seed = spec.seed;
    let cfg_path = args.out_dir.join("scenario.toml");
    std::fs::write(&cfg_path, cfg.to_toml()?)?;
    println!(
        "wrote {} zones, {} trips under {}",
        scenario.zones.n(),
        scenario.trips.len(),
        args.out_dir.display()
    );
    println!("wrote {}", cfg_path.display());
    Ok(())
}
