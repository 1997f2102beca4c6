//! Experiment configuration.
//!
//! A config file is flat `key = value` text, one pair per line; `#` starts a
//! comment. List keys (`instance`, `strategy`, `transfer`) may repeat or hold
//! comma-separated values. Every key is also a command-line flag of the same
//! name, and flags override the file: scalar flags replace the file's value,
//! list flags replace the file's whole list.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use flowbal_core::random::{DEFAULT_MEAN, DEFAULT_STDDEV};
use flowbal_core::{BoundKind, PfsWeight, Strategy};
use flowbal_runtime::experiment::DEFAULT_REFRESH_INTERVAL;
use flowbal_runtime::{HetPreset, Mode, Topology, Transfer};

use crate::error::{CliError, Result};

/// Where a setting came from, for error messages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    Line { file: PathBuf, line: usize },
    Flag,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub origin: Origin,
}

impl Entry {
    pub fn flag(key: &str, value: impl Into<String>) -> Self {
        Self {
            key: key.to_string(),
            value: value.into(),
            origin: Origin::Flag,
        }
    }

    fn describe(&self) -> String {
        match &self.origin {
            Origin::Line { file, line } => format!("{}:{line}: `{}`", file.display(), self.key),
            Origin::Flag => format!("--{}", self.key),
        }
    }

    fn invalid(&self, why: impl fmt::Display) -> CliError {
        CliError::Input(format!("{}: {why}", self.describe()))
    }
}

const LIST_KEYS: &[&str] = &["instance", "strategy", "transfer"];
const SCALAR_KEYS: &[&str] = &[
    "n",
    "m",
    "mean",
    "stddev",
    "count",
    "seed",
    "topology",
    "k-split",
    "het",
    "mode",
    "budget",
    "out",
    "pfs-weight",
    "bound",
    "sync-interval",
    "refresh-interval",
    "repeats",
];

fn canonical(key: &str) -> String {
    key.trim().replace('_', "-")
}

/// Splits config text into entries, rejecting malformed lines and unknown keys.
pub fn parse_entries(text: &str, file: &Path) -> Result<Vec<Entry>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let origin = Origin::Line {
            file: file.to_path_buf(),
            line: idx + 1,
        };
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::Input(format!(
                "{}:{}: expected `key = value`, got `{line}`",
                file.display(),
                idx + 1
            )));
        };
        out.push(Entry {
            key: canonical(k),
            value: v.trim().to_string(),
            origin,
        });
    }
    Ok(out)
}

/// Reads a config file.
pub fn read_entries(path: &Path) -> Result<Vec<Entry>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
    parse_entries(&text, path)
}

/// Layered key/value store: later layers override earlier ones.
#[derive(Debug, Default, Clone)]
pub struct Settings {
    values: BTreeMap<String, Vec<Entry>>,
}

impl Settings {
    /// Applies one layer (a file or the command line).
    pub fn layer(&mut self, entries: Vec<Entry>) -> Result<()> {
        let mut touched: Vec<String> = Vec::new();
        for e in entries {
            let list = LIST_KEYS.contains(&e.key.as_str());
            if !list && !SCALAR_KEYS.contains(&e.key.as_str()) {
                return Err(e.invalid("unknown key"));
            }
            let slot = self.values.entry(e.key.clone()).or_default();
            if !list {
                slot.clear();
            } else if !touched.contains(&e.key) {
                slot.clear();
                touched.push(e.key.clone());
            }
            slot.push(e);
        }
        Ok(())
    }

    fn scalar(&self, key: &str) -> Option<&Entry> {
        self.values.get(key).and_then(|v| v.last())
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        match self.scalar(key) {
            None => Ok(None),
            Some(e) => e.value.parse::<T>().map(Some).map_err(|err| e.invalid(err)),
        }
    }

    fn list<T: FromStr>(&self, key: &str) -> Result<Vec<T>>
    where
        T::Err: fmt::Display,
    {
        let mut out = Vec::new();
        for e in self.values.get(key).into_iter().flatten() {
            for item in e.value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                out.push(item.parse::<T>().map_err(|err| e.invalid(err))?);
            }
        }
        Ok(out)
    }

    fn entry(&self, key: &str) -> Entry {
        self.scalar(key).cloned().unwrap_or_else(|| Entry::flag(key, ""))
    }
}

/// Random instance family: `count` instances, the i-th generated from `seed + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomSpec {
    pub n: usize,
    pub m: usize,
    pub mean: f64,
    pub stddev: f64,
    pub count: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InstanceSource {
    Files(Vec<PathBuf>),
    Random(RandomSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub source: InstanceSource,
    pub topology: Topology,
    pub strategies: Vec<Strategy>,
    pub transfers: Vec<Transfer>,
    pub k_split: usize,
    pub het: HetPreset,
    pub mode: Mode,
    pub budget: Option<u64>,
    pub pfs_weight: PfsWeight,
    pub bound: BoundKind,
    pub refresh_interval: f64,
    /// Root seed; per-cell seeds are derived from it.
    pub seed: u64,
    /// Run seeds per (instance, strategy, transfer) cell.
    pub repeats: u64,
    pub out: Option<PathBuf>,
}

/// `none` or a node count.
#[derive(Debug, Clone, Copy)]
struct Budget(Option<u64>);

impl FromStr for Budget {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if s == "none" {
            Ok(Budget(None))
        } else {
            s.parse().map(|n| Budget(Some(n)))
        }
    }
}

impl ExperimentConfig {
    /// Builds and validates a config from layered settings.
    pub fn from_settings(s: &Settings) -> Result<Self> {
        let files: Vec<PathBuf> = s.list("instance")?;
        let n: Option<usize> = s.get("n")?;
        let source = match (files.is_empty(), n) {
            (false, Some(_)) => {
                return Err(CliError::Input("give either instance files or a random spec (n), not both".into()))
            }
            (false, None) => InstanceSource::Files(files),
            (true, Some(n)) => InstanceSource::Random(random_spec(s, n)?),
            (true, None) => {
                return Err(CliError::Input("no instances: set `instance` or a random spec with `n`".into()))
            }
        };

        let mut topology: Topology = s.get("topology")?.unwrap_or_else(|| Topology::uniform(2, 2));
        if let Some(sync) = s.get::<f64>("sync-interval")? {
            topology.sync_interval = sync;
        }
        topology.validate().map_err(|e| s.entry("sync-interval").invalid(e))?;

        let mut strategies: Vec<Strategy> = s.list("strategy")?;
        if strategies.is_empty() {
            strategies = Strategy::ALL.to_vec();
        }
        let mut transfers: Vec<Transfer> = s.list("transfer")?;
        if transfers.is_empty() {
            transfers = Transfer::ALL.to_vec();
        }

        let refresh_interval = s.get("refresh-interval")?.unwrap_or(DEFAULT_REFRESH_INTERVAL);
        if !(refresh_interval.is_finite() && refresh_interval > 0.0) {
            return Err(s.entry("refresh-interval").invalid("must be positive"));
        }
        let repeats = s.get("repeats")?.unwrap_or(1);
        if repeats == 0 {
            return Err(s.entry("repeats").invalid("must be at least 1"));
        }

        let cfg = Self {
            source,
            topology,
            strategies,
            transfers,
            k_split: s.get("k-split")?.unwrap_or(flowbal_runtime::experiment::DEFAULT_K_SPLIT),
            het: s.get("het")?.unwrap_or(HetPreset::Homogeneous),
            mode: s.get("mode")?.unwrap_or_default(),
            budget: s.get::<Budget>("budget")?.and_then(|b| b.0),
            pfs_weight: s.get("pfs-weight")?.unwrap_or_default(),
            bound: s.get("bound")?.unwrap_or_default(),
            refresh_interval,
            seed: s.get("seed")?.unwrap_or(0),
            repeats,
            out: s.get("out")?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `config` (if any) and layers `flags` on top.
    pub fn load(config: Option<&Path>, flags: Vec<Entry>) -> Result<Self> {
        let mut s = Settings::default();
        if let Some(path) = config {
            s.layer(read_entries(path)?)?;
        }
        s.layer(flags)?;
        Self::from_settings(&s)
    }

    pub fn validate(&self) -> Result<()> {
        if let InstanceSource::Files(files) = &self.source {
            for f in files {
                if !f.is_file() {
                    return Err(CliError::Input(format!("instance file {} does not exist", f.display())));
                }
            }
        }
        if self.strategies.is_empty() || self.transfers.is_empty() {
            return Err(CliError::Input("need at least one strategy and one transfer".into()));
        }
        Ok(())
    }
}

fn random_spec(s: &Settings, n: usize) -> Result<RandomSpec> {
    let spec = RandomSpec {
        n,
        m: s.get("m")?.ok_or_else(|| CliError::Input("random spec needs `m`".into()))?,
        mean: s.get("mean")?.unwrap_or(DEFAULT_MEAN),
        stddev: s.get("stddev")?.unwrap_or(DEFAULT_STDDEV),
        count: s.get("count")?.unwrap_or(1),
        seed: s.get("seed")?.unwrap_or(0),
    };
    if spec.n == 0 {
        return Err(s.entry("n").invalid("must be at least 1"));
    }
    if spec.m == 0 {
        return Err(s.entry("m").invalid("must be at least 1"));
    }
    if !spec.mean.is_finite() {
        return Err(s.entry("mean").invalid("must be finite"));
    }
    if !(spec.stddev.is_finite() && spec.stddev >= 0.0) {
        return Err(s.entry("stddev").invalid("must be finite and non-negative"));
    }
    Ok(spec)
}
