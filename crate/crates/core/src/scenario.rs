//! JSON scenario files: what to run and, optionally, what should come out.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::contract::Phase;
use crate::relay::{
    AuctionParams, BidderSpec, Deployment, Intervals, Relay, RelayError, RelayStrategy, ScenarioReport,
};
use crate::value::BidValue;

pub const CONFIG_SCHEMA: &str = "trustee-sim/1";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed scenario: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema: String,
    pub name: String,
    pub seed: u64,
    pub deposit: u128,
    pub bidders: Vec<BidderSpec>,
    /// Block offsets from auction start; sized to the bidder count if omitted.
    #[serde(default)]
    pub intervals: Option<Intervals>,
    #[serde(default)]
    pub strategy: RelayStrategy,
    /// Starting balance of the auctioneer and every bidder; ten deposits if omitted.
    #[serde(default)]
    pub initial_balance: Option<u128>,
    #[serde(default = "default_t_adr_funding")]
    pub t_adr_funding: u128,
    /// Report destination; stdout if omitted.
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Directory for the relay's sealed-state file; kept in memory if omitted.
    #[serde(default)]
    pub state_dir: Option<PathBuf>,
    #[serde(default)]
    pub expect: Option<Expectation>,
}

fn default_t_adr_funding() -> u128 {
    1_000_000
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectation {
    #[serde(default)]
    pub final_phase: Option<Phase>,
    /// Position of the winner in `bidders`.
    #[serde(default)]
    pub winner_index: Option<usize>,
    #[serde(default)]
    pub price: Option<BidValue>,
    #[serde(default)]
    pub non_empty_reveals: Option<usize>,
}

impl Expectation {
    /// Lists every expected field the report disagrees with.
    pub fn mismatches(&self, report: &ScenarioReport) -> Vec<String> {
        let mut out = Vec::new();
        if let Some(phase) = self.final_phase {
            if phase != report.final_phase {
                out.push(format!("final_phase: expected {phase}, got {}", report.final_phase));
            }
        }
        if let Some(index) = self.winner_index {
            if Some(index) != report.winner_index {
                out.push(format!("winner_index: expected {index}, got {:?}", report.winner_index));
            }
        }
        if let Some(price) = self.price {
            if Some(price) != report.price {
                out.push(format!(
                    "price: expected {price}, got {:?}",
                    report.price.map(|p| p.to_string())
                ));
            }
        }
        if let Some(n) = self.non_empty_reveals {
            if n != report.non_empty_reveals {
                out.push(format!(
                    "non_empty_reveals: expected {n}, got {}",
                    report.non_empty_reveals
                ));
            }
        }
        out
    }
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let config: Self = serde_json::from_str(&text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema != CONFIG_SCHEMA {
            return Err(ConfigError::Invalid(format!(
                "schema must be {CONFIG_SCHEMA:?}, got {:?}",
                self.schema
            )));
        }
        if self.bidders.is_empty() {
            return Err(ConfigError::Invalid("at least one bidder is required".into()));
        }
        if let Some(iv) = self.intervals {
            if !iv.is_increasing() {
                return Err(ConfigError::Invalid("intervals must satisfy 1 <= t1 < t2 < t3".into()));
            }
        }
        match &self.strategy {
            RelayStrategy::Replay { instances: 0 } => {
                return Err(ConfigError::Invalid("replay needs at least one instance".into()))
            }
            RelayStrategy::Eclipse { drop } if drop.iter().any(|&i| i >= self.bidders.len()) => {
                return Err(ConfigError::Invalid("eclipse drop index out of range".into()))
            }
            _ => {}
        }
        if self.deposit.checked_mul(10).is_none() && self.initial_balance.is_none() {
            return Err(ConfigError::Invalid("deposit too large for the default balance".into()));
        }
        Ok(())
    }

    pub fn params(&self) -> AuctionParams {
        AuctionParams {
            seed: self.seed,
            bidders: self.bidders.clone(),
            intervals: self.intervals.unwrap_or_else(|| Intervals::fitting(self.bidders.len())),
            deposit: self.deposit,
            initial_balance: self.initial_balance.unwrap_or(self.deposit * 10),
            t_adr_funding: self.t_adr_funding,
            strategy: self.strategy.clone(),
            state_dir: self.state_dir.clone(),
        }
    }
}

/// Builds a fresh deployment from `params` and runs one auction on it.
pub fn run_params(name: &str, params: &AuctionParams) -> Result<ScenarioReport, RelayError> {
    let mut deployment = Deployment::new(params);
    let mut relay = Relay::new(
        params.strategy.clone(),
        deployment.platform.clone(),
        params.seed.rotate_left(17),
    );
    if let Some(dir) = &params.state_dir {
        std::fs::create_dir_all(dir)?;
        relay = relay.with_state_dir(dir.clone());
    }
    relay.run_auction(name, &mut deployment, params)
}

pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioReport, RelayError> {
    run_params(&config.name, &config.params())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(json: &str) -> Result<ScenarioConfig, ConfigError> {
        let c: ScenarioConfig = serde_json::from_str(json)?;
        c.validate()?;
        Ok(c)
    }

    #[test]
    fn minimal_config_runs() {
        let c = config(
            r#"{"schema":"trustee-sim/1","name":"m","seed":1,"deposit":100,
                "bidders":[{"bid_value":"3"},{"bid_value":7},{"bid_value":"10"}],
                "expect":{"final_phase":"Revealed","winner_index":2,"price":"7"}}"#,
        )
        .unwrap();
        let report = run_scenario(&c).unwrap();
        assert!(c.expect.unwrap().mismatches(&report).is_empty());
    }

    #[test]
    fn invalid_configs_rejected() {
        let base = r#""name":"x","seed":1,"deposit":1,"bidders":[{"bid_value":"1"}]"#;
        assert!(config(&format!(r#"{{"schema":"other",{base}}}"#)).is_err());
        assert!(config(r#"{"schema":"trustee-sim/1","name":"x","seed":1,"deposit":1,"bidders":[]}"#).is_err());
        assert!(config(&format!(
            r#"{{"schema":"trustee-sim/1",{base},"intervals":{{"t1":5,"t2":5,"t3":9}}}}"#
        ))
        .is_err());
        assert!(config(&format!(r#"{{"schema":"trustee-sim/1",{base},"bogus":1}}"#)).is_err());
        assert!(config(&format!(
            r#"{{"schema":"trustee-sim/1",{base},"strategy":{{"mode":"replay","instances":0}}}}"#
        ))
        .is_err());
    }

    #[test]
    fn mismatch_is_reported() {
        let c = config(
            r#"{"schema":"trustee-sim/1","name":"m","seed":1,"deposit":1,
                "bidders":[{"bid_value":"3"},{"bid_value":"7"}],"expect":{"winner_index":0}}"#,
        )
        .unwrap();
        let report = run_scenario(&c).unwrap();
        assert_eq!(c.expect.unwrap().mismatches(&report).len(), 1);
    }
}
