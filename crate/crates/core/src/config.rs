//! Scenario configuration: a TOML file with one section per pipeline stage.
//! Every knob carries the documented default, so a config only needs the data
//! paths.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct PathsCfg {
    pub zones: PathBuf,
    pub demographics: PathBuf,
    pub trips: PathBuf,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct GridCfg {
    pub interval_s: u32,
    pub m_lags: usize,
}

impl Default for GridCfg {
    fn default() -> Self {
        GridCfg {
            interval_s: 300,
            m_lags: 12,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct LossCfg {
    pub lambda: f64,
    pub gamma: f64,
}

impl Default for LossCfg {
    fn default() -> Self {
        LossCfg {
            lambda: 0.0,
            gamma: 0.0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct MivrCfg {
    pub alpha: f64,
    pub beta: f64,
    pub kappa: usize,
}

impl Default for MivrCfg {
    fn default() -> Self {
        MivrCfg {
            alpha: 1.0,
            beta: 100.0,
            kappa: 6,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SimCfg {
    pub fleet_size: u32,
    pub match_epoch_s: u32,
    pub rebalance_epoch_s: u32,
    pub speed_mps: f64,
    pub max_wait_s: f64,
    pub zone_radius_m: f64,
}

impl Default for SimCfg {
    fn default() -> Self {
        SimCfg {
            fleet_size: 2000,
            match_epoch_s: 30,
            rebalance_epoch_s: 300,
            speed_mps: 6.0,
            max_wait_s: 600.0,
            zone_radius_m: 300.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForecasterKind {
    HistoricalAverage,
    GraphLinear,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    /// No rebalancing; matching only.
    None,
    /// Feed the actual upcoming demand to the rebalancer.
    TrueDemand,
    /// Feed rolling forecasts from the trained model.
    Forecast,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct RunCfg {
    pub forecaster: ForecasterKind,
    pub controller: ControllerKind,
    pub use_fairness_weights: bool,
    /// Simulated seconds of the evaluation day; the whole day if absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eval_horizon_s: Option<u32>,
    /// Offset into the evaluation day where the simulation window starts,
    /// e.g. 61200 to simulate from 17:00.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eval_offset_s: Option<u32>,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub write_request_log: bool,
    pub train_frac: f64,
    pub val_frac: f64,
    pub mape_literal_min: bool,
}

impl Default for RunCfg {
    fn default() -> Self {
        RunCfg {
            forecaster: ForecasterKind::GraphLinear,
            controller: ControllerKind::Forecast,
            use_fairness_weights: true,
            eval_horizon_s: None,
            eval_offset_s: None,
            output_dir: PathBuf::from("out"),
            seed: 0,
            write_request_log: false,
            train_frac: 0.7,
            val_frac: 0.15,
            mape_literal_min: false,
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub paths: PathsCfg,
    pub grid: GridCfg,
    pub loss: LossCfg,
    pub mivr: MivrCfg,
    pub sim: SimCfg,
    pub run: RunCfg,
}

impl ScenarioConfig {
    /// Loads a TOML config. Relative data paths are resolved against the
    /// directory containing the config file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: ScenarioConfig =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if let Some(dir) = path.parent() {
            for p in [
                &mut cfg.paths.zones,
                &mut cfg.paths.demographics,
                &mut cfg.paths.trips,
                &mut cfg.run.output_dir,
            ] {
                if p.is_relative() && !p.as_os_str().is_empty() {
                    *p = dir.join(&p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(format!("serialize: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("zones", &self.paths.zones),
            ("demographics", &self.paths.demographics),
            ("trips", &self.paths.trips),
        ] {
            if p.as_os_str().is_empty() {
                return Err(Error::Config(format!("paths.{name} is not set")));
            }
            if !p.exists() {
                return Err(Error::Config(format!(
                    "paths.{name} does not exist: {}",
                    p.display()
                )));
            }
        }
        if self.grid.interval_s == 0 || 86_400 % self.grid.interval_s != 0 {
            return Err(Error::Config(
                "grid.interval_s must be positive and divide a day".into(),
            ));
        }
        if self.grid.m_lags == 0 {
            return Err(Error::Config("grid.m_lags must be at least 1".into()));
        }
        if self.loss.lambda < 0.0 || self.loss.gamma < 0.0 {
            return Err(Error::Config("loss weights must be nonnegative".into()));
        }
        if self.mivr.alpha < 0.0 || self.mivr.beta < 0.0 || self.mivr.kappa == 0 {
            return Err(Error::Config("mivr parameters out of range".into()));
        }
        if !(self.run.train_frac > 0.0
            && self.run.val_frac >= 0.0
            && self.run.train_frac + self.run.val_frac < 1.0)
        {
            return Err(Error::Config(
                "train/validation fractions must leave room for a test split".into(),
            ));
        }
        let offset = self.run.eval_offset_s.unwrap_or(0) as i64;
        let horizon = self.run.eval_horizon_s.map_or(86_400 - offset, |h| h as i64);
        if horizon <= 0 || offset + horizon > 86_400 {
            return Err(Error::Config(
                "evaluation window must fit within the evaluation day".into(),
            ));
        }
        Ok(())
    }

    /// Hash of the fully resolved configuration, recorded in provenance.
    pub fn sha256(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    #[test]
    fn defaults_match_documented_values() {
        let cfg = ScenarioConfig::default();
        assert_eq!(cfg.grid.interval_s, 300);
        assert_eq!(cfg.grid.m_lags, 12);
        assert_eq!(cfg.mivr.alpha, 1.0);
        assert_eq!(cfg.mivr.beta, 100.0);
        assert_eq!(cfg.mivr.kappa, 6);
        assert_eq!(cfg.sim.fleet_size, 2000);
        assert_eq!(cfg.sim.match_epoch_s, 30);
        assert_eq!(cfg.sim.rebalance_epoch_s, 300);
    }

    #[test]
    fn load_resolves_relative_paths() {
        let dir = tempfile::tempdir().unwrap();
        let cfg_path = dir.path().join("scenario.toml");
        let mut f = std::fs::File::create(&cfg_path).unwrap();
        writeln!(
            f,
            "[paths]\nzones = \"zones.csv\"\ndemographics = \"demo.csv\"\ntrips = \"trips.csv\"\n\n[loss]\ngamma = 0.05\n"
        )
        .unwrap();
        let cfg = ScenarioConfig::load(&cfg_path).unwrap();
        assert_eq!(cfg.paths.zones, dir.path().join("zones.csv"));
        assert_eq!(cfg.loss.gamma, 0.05);
        assert_eq!(cfg.loss.lambda, 0.0);
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = toml::from_str::<ScenarioConfig>("[grid]\ninterval_sec = 300\n");
        assert!(err.is_err());
    }

    #[test]
    fn validate_requires_existing_files() {
        let cfg = ScenarioConfig::default();
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn sha_changes_with_content() {
        let a = ScenarioConfig::default();
        let mut b = ScenarioConfig::default();
        b.loss.gamma = 0.09;
        assert_ne!(a.sha256(), b.sha256());
        assert_eq!(a.sha256(), ScenarioConfig::default().sha256());
    }

    #[test]
    fn toml_roundtrip() {
        let mut cfg = ScenarioConfig::default();
        cfg.run.eval_horizon_s = Some(7200);
        cfg.paths.zones = PathBuf::from("/data/zones.csv");
        let text = cfg.to_toml().unwrap();
        let back: ScenarioConfig = toml::from_str(&text).unwrap();
        assert_eq!(cfg, back);
    }
}
