use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Deserializer, Serialize};

use crate::bootstrap::{BlockLength, BootstrapSettings};
use crate::data::ColumnSchema;
use crate::error::{Error, Result};
use crate::point_models::RegressorSpec;

/// Interval construction method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Cbb,
    #[serde(alias = "block")]
    BlockBb,
    Bagging,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Cbb => "cbb",
            Method::BlockBb => "blockbb",
            Method::Bagging => "bagging",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cbb" => Ok(Method::Cbb),
            "blockbb" | "block" => Ok(Method::BlockBb),
            "bagging" => Ok(Method::Bagging),
            other => Err(Error::Config(format!("unknown method `{other}`"))),
        }
    }
}

/// Parse `6` or `auto`.
pub fn parse_block_length(s: &str) -> Result<BlockLength> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(BlockLength::auto());
    }
    let l: usize = s
        .parse()
        .map_err(|_| Error::Config(format!("block length `{s}` is neither a number nor `auto`")))?;
    BlockLength::new(l).map_err(|e| Error::Config(e.to_string()))
}

fn block_length_setting<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<BlockLength, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Fixed(usize),
        Named(String),
    }
    let parsed = match Raw::deserialize(d)? {
        Raw::Fixed(l) => BlockLength::new(l),
        Raw::Named(s) => parse_block_length(&s),
    };
    parsed.map_err(serde::de::Error::custom)
}

/// Everything one backtest run needs besides the data itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub data: Vec<PathBuf>,
    pub holidays: Option<PathBuf>,
    pub schema: ColumnSchema,
    pub fill_gaps: bool,
    /// First test day; every earlier day trains.
    pub split: Option<NaiveDate>,
    /// Test horizon in days; `None` runs to the end of the data.
    pub test_days: Option<usize>,
    pub model: RegressorSpec,
    pub method: Method,
    pub replicates: usize,
    pub alphas: Vec<f64>,
    pub clusters: usize,
    #[serde(deserialize_with = "block_length_setting")]
    pub block_length: BlockLength,
    /// Recluster after every this many test days; 0 never reclusters.
    pub recluster_every: usize,
    /// Refit the point model after every this many test days.
    pub refit_every: usize,
    pub seed: u64,
    pub output: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data: Vec::new(),
            holidays: None,
            schema: ColumnSchema::default(),
            fill_gaps: false,
            split: None,
            test_days: None,
            model: RegressorSpec::boosted_trees(),
            method: Method::Cbb,
            replicates: 1000,
            alphas: vec![0.15, 0.10, 0.05, 0.01],
            clusters: 4,
            block_length: BlockLength::default(),
            recluster_every: 7,
            refit_every: 1,
            seed: 0,
            output: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.alphas.is_empty() || self.alphas.iter().any(|&a| !(a > 0.0 && a < 1.0)) {
            return Err(Error::Config(format!("alphas {:?} must lie in (0, 1)", self.alphas)));
        }
        if self.replicates < 2 {
            return Err(Error::Config("replicates must be at least 2".into()));
        }
        if self.clusters == 0 {
            return Err(Error::Config("clusters must be at least 1".into()));
        }
        if self.refit_every == 0 {
            return Err(Error::Config("refit_every must be at least 1".into()));
        }
        if self.test_days == Some(0) {
            return Err(Error::Config("test_days must be positive".into()));
        }
        self.model
            .validate()
            .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn bootstrap_settings(&self) -> BootstrapSettings {
        BootstrapSettings {
            alphas: self.alphas.clone(),
            replicates: self.replicates,
            seed: self.seed,
        }
    }
}
