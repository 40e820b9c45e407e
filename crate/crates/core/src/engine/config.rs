use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::city::{generate_grid_city, load_city, CityModel, GridSpec};
use crate::epidemic::SimParams;
use crate::error::{Error, Result};
use crate::intervention::{LockdownMode, TriggerParams};
use crate::rng::{Purpose, RunRng};
use crate::sampling::uniform_subset;
use crate::testing::{LbtParams, Policy};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum CitySource {
    /// Path to a city JSON file; relative paths resolve against the config file's directory.
    File(PathBuf),
    Grid(GridSpec),
}

impl Default for CitySource {
    fn default() -> Self {
        // 198 localities, 20 destinations
        CitySource::Grid(GridSpec::new(18, 11).with_seed(2020))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Intervention {
    None,
    Quarantine,
    LockdownIndefinite,
    LockdownFixed,
}

impl Intervention {
    pub fn lockdown_mode(self, trigger: &TriggerParams) -> Option<LockdownMode> {
        match self {
            Intervention::LockdownIndefinite => Some(LockdownMode::Indefinite),
            Intervention::LockdownFixed => Some(LockdownMode::Fixed { days: trigger.lockdown_days }),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum Seeding {
    /// `count` infections among residents of the locality labelled `locality`.
    Clustered { locality: u32, count: usize },
    /// Binomial(`trials`, `prob`) infections in every locality.
    Uniform { trials: u64, prob: f64 },
}

impl Default for Seeding {
    fn default() -> Self {
        Seeding::Clustered { locality: 120, count: 50 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum Reporting {
    /// Every symptomatic agent reports with this probability each day.
    Uniform(f64),
    /// `⌊fraction · L⌋` localities, picked with `seed`, report at `low`; the rest at `high`.
    Nonuniform { fraction: f64, low: f64, high: f64, seed: u64 },
}

impl Default for Reporting {
    fn default() -> Self {
        Reporting::Uniform(1.0)
    }
}

impl Reporting {
    /// Per-locality reporting probability.
    pub fn per_locality(&self, localities: usize) -> Vec<f64> {
        match *self {
            Reporting::Uniform(rho) => vec![rho; localities],
            Reporting::Nonuniform { fraction, low, high, seed } => {
                let k = (fraction * localities as f64).floor() as usize;
                let mut s = RunRng::new(seed).stream(Purpose::ReportingPartition, 0, 0);
                let mut out = vec![high; localities];
                for i in uniform_subset(&mut s, localities, k) {
                    out[i] = low;
                }
                out
            }
        }
    }

    fn validate(&self) -> Result<(), String> {
        let probs: Vec<f64> = match *self {
            Reporting::Uniform(rho) => vec![rho],
            Reporting::Nonuniform { fraction, low, high, .. } => vec![fraction, low, high],
        };
        if probs.iter().all(|p| (0.0..=1.0).contains(p)) {
            Ok(())
        } else {
            Err("reporting probabilities and fraction must lie in [0, 1]".into())
        }
    }
}

/// Everything that defines a batch of runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub city: CitySource,
    pub agents: usize,
    #[serde(flatten)]
    pub params: SimParams,
    pub policy: Policy,
    pub lbt: LbtParams,
    pub intervention: Intervention,
    pub trigger: TriggerParams,
    pub seeding: Seeding,
    pub reporting: Reporting,
    pub master_seed: u64,
    pub runs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            city: CitySource::default(),
            agents: 100_000,
            params: SimParams::default(),
            policy: Policy::Rst,
            lbt: LbtParams::default(),
            intervention: Intervention::None,
            trigger: TriggerParams::default(),
            seeding: Seeding::default(),
            reporting: Reporting::default(),
            master_seed: 1,
            runs: 10,
        }
    }
}

fn known_keys() -> BTreeSet<String> {
    match serde_json::to_value(RunConfig::default()).expect("config serializes") {
        Value::Object(map) => map.keys().cloned().collect(),
        _ => unreachable!(),
    }
}

impl RunConfig {
    /// Parses a config from a JSON value, rejecting unknown top-level keys.
    pub fn from_value(value: Value) -> Result<Self> {
        if let Value::Object(map) = &value {
            let known = known_keys();
            if let Some(bad) = map.keys().find(|k| !known.contains(*k)) {
                return Err(Error::InvalidConfig(format!("unknown key `{bad}`")));
            }
        }
        serde_json::from_value(value).map_err(|source| Error::Parse { what: "run config".into(), source })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value = serde_json::from_str(text).map_err(|source| Error::Parse { what: "run config".into(), source })?;
        Self::from_value(value)
    }

    /// Reads a config file. A relative city path is resolved against the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| Error::Read { path: path.to_path_buf(), source })?;
        let mut cfg = Self::from_json(&text)?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        if let CitySource::File(p) = &mut self.city {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }

    pub fn to_json_pretty(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    /// SHA-256 of the compact JSON form.
    pub fn hash(&self) -> String {
        let compact = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(compact.as_bytes()))
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidConfig(m));
        if self.agents == 0 {
            return fail("agents must be at least 1".into());
        }
        if self.runs == 0 {
            return fail("runs must be at least 1".into());
        }
        if let CitySource::Grid(g) = &self.city {
            g.validate().map_err(Error::InvalidConfig)?;
        }
        self.params.validate().map_err(Error::InvalidConfig)?;
        self.trigger.validate().map_err(Error::InvalidConfig)?;
        self.lbt.validate().map_err(Error::InvalidConfig)?;
        self.reporting.validate().map_err(Error::InvalidConfig)?;
        if let Seeding::Uniform { prob, .. } = self.seeding {
            if !(0.0..=1.0).contains(&prob) {
                return fail(format!("seeding prob {prob} outside [0, 1]"));
            }
        }
        Ok(())
    }

    /// Builds or loads the city and checks city-dependent settings.
    pub fn city_model(&self) -> Result<CityModel> {
        let city = match &self.city {
            CitySource::File(p) => load_city(p)?,
            CitySource::Grid(g) => {
                g.validate().map_err(Error::InvalidConfig)?;
                generate_grid_city(g)
            }
        };
        if let Seeding::Clustered { locality, .. } = self.seeding {
            city.by_label(locality)?;
        }
        Ok(city)
    }
}

/// Sets the value at a dotted `path` (e.g. `trigger.tau`) in a config tree.
/// The path must already exist; `raw` is parsed as JSON, falling back to a string.
pub fn apply_override(root: &mut Value, path: &str, raw: &str) -> Result<()> {
    let value: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    for part in path.split('.') {
        node = match node {
            Value::Object(map) => map.get_mut(part),
            Value::Array(items) => part.parse::<usize>().ok().and_then(|i| items.get_mut(i)),
            _ => None,
        }
        .ok_or_else(|| Error::InvalidConfig(format!("override path `{path}` does not exist")))?;
    }
    *node = value;
    Ok(())
}
