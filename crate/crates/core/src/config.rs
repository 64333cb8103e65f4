//! Service and analysis settings: defaults, then a TOML file, then
//! `RECAP_*` environment variables.

use std::hash::{Hash, Hasher};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::aggregation::DEFAULT_COVERAGE_QUORUM;
use crate::analytics::DEFAULT_VOLATILITY_FLOOR;
use crate::error::{Error, Result};
use crate::summarizer::{DEFAULT_GAP_S, DEFAULT_MIN_PEERS, DEFAULT_REPLAY_HEAT_FACTOR};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisConfig {
    pub gap_s: i64,
    pub coverage_quorum: usize,
    pub volatility_floor: f64,
    pub replay_heat_factor: f64,
    pub min_peers: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            gap_s: DEFAULT_GAP_S,
            coverage_quorum: DEFAULT_COVERAGE_QUORUM,
            volatility_floor: DEFAULT_VOLATILITY_FLOOR,
            replay_heat_factor: DEFAULT_REPLAY_HEAT_FACTOR,
            min_peers: DEFAULT_MIN_PEERS,
        }
    }
}

impl AnalysisConfig {
    /// Stable across runs of the same binary; used to key cached summaries.
    pub fn fingerprint(&self) -> u64 {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.gap_s.hash(&mut h);
        self.coverage_quorum.hash(&mut h);
        self.volatility_floor.to_bits().hash(&mut h);
        self.replay_heat_factor.to_bits().hash(&mut h);
        self.min_peers.hash(&mut h);
        h.finish()
    }

    pub fn validate(&self) -> Result<()> {
        if self.gap_s < 0 {
            return Err(Error::InvalidRequest("gap_s must be non-negative".into()));
        }
        if self.coverage_quorum == 0 || self.coverage_quorum > 60 {
            return Err(Error::InvalidRequest("coverage_quorum must be in 1..=60".into()));
        }
        if !(self.volatility_floor > 0.0) {
            return Err(Error::InvalidRequest("volatility_floor must be positive".into()));
        }
        if !(self.replay_heat_factor > 0.0) {
            return Err(Error::InvalidRequest("replay_heat_factor must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceConfig {
    pub bind: String,
    pub port: u16,
    /// Journal directory; `None` keeps everything in memory.
    pub storage_path: Option<PathBuf>,
    /// fsync the journal before acknowledging each write.
    pub sync_writes: bool,
    #[serde(flatten)]
    pub analysis: AnalysisConfig,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            bind: "127.0.0.1".into(),
            port: 8080,
            storage_path: Some(PathBuf::from("recap-data")),
            sync_writes: true,
            analysis: AnalysisConfig::default(),
        }
    }
}

impl ServiceConfig {
    pub fn in_memory() -> Self {
        Self { storage_path: None, ..Self::default() }
    }

    /// Defaults, overlaid with `path` if given, overlaid with the process
    /// environment.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)?;
                toml::from_str(&text).map_err(|e| Error::InvalidRequest(format!("config {}: {e}", p.display())))?
            }
            None => Self::default(),
        };
        cfg.apply_env(|k| std::env::var(k).ok())?;
        cfg.analysis.validate()?;
        Ok(cfg)
    }

    pub fn apply_env(&mut self, get: impl Fn(&str) -> Option<String>) -> Result<()> {
        fn parse<T: std::str::FromStr>(key: &str, v: String) -> Result<T> {
            v.trim().parse().map_err(|_| Error::InvalidRequest(format!("{key}: cannot parse `{v}`")))
        }
        if let Some(v) = get("RECAP_BIND") {
            self.bind = v;
        }
        if let Some(v) = get("RECAP_PORT") {
            self.port = parse("RECAP_PORT", v)?;
        }
        if let Some(v) = get("RECAP_STORAGE_PATH") {
            self.storage_path = if v.is_empty() { None } else { Some(PathBuf::from(v)) };
        }
        if let Some(v) = get("RECAP_SYNC_WRITES") {
            self.sync_writes = parse("RECAP_SYNC_WRITES", v)?;
        }
        if let Some(v) = get("RECAP_GAP_S") {
            self.analysis.gap_s = parse("RECAP_GAP_S", v)?;
        }
        if let Some(v) = get("RECAP_COVERAGE_QUORUM") {
            self.analysis.coverage_quorum = parse("RECAP_COVERAGE_QUORUM", v)?;
        }
        if let Some(v) = get("RECAP_VOLATILITY_FLOOR") {
            self.analysis.volatility_floor = parse("RECAP_VOLATILITY_FLOOR", v)?;
        }
        if let Some(v) = get("RECAP_REPLAY_HEAT_FACTOR") {
            self.analysis.replay_heat_factor = parse("RECAP_REPLAY_HEAT_FACTOR", v)?;
        }
        if let Some(v) = get("RECAP_MIN_PEERS") {
            self.analysis.min_peers = parse("RECAP_MIN_PEERS", v)?;
        }
        Ok(())
    }
}
