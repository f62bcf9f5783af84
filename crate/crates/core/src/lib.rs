//! Fairness-aware ride-hailing toolkit: socio-enriched zone graphs,
//! fairness-regularized demand forecasting, a matching-integrated vehicle
//! rebalancing LP solved in rolling horizon, and a deterministic
//! discrete-event fleet simulator with service-equity metrics.

pub mod assign;
pub mod config;
pub mod error;
pub mod forecast;
pub mod graph;
pub mod io;
pub mod lp;
pub mod mat;
pub mod metrics;
pub mod mivr;
pub mod pipeline;
pub mod sim;
pub mod synth;

pub use error::{Error, Result};
