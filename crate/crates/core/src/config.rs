//! Flat `key = value` configuration with dotted namespaces.
//!
//! Base keys map onto [`ExperimentConfig`]; recipes declare further keys of
//! their own. Anything else is rejected with the offending key in the message.

use std::collections::BTreeMap;
use std::str::FromStr;

use crate::error::{Result, ZenoError};
use crate::lattice::Grid1D;
use crate::projectors::{Projector, ProjectorKind};
use crate::propagators::QBMParams;
use crate::runner::{ExperimentConfig, InitialState};

/// Base keys with their defaults and a one-line description.
pub const BASE_KEYS: &[(&str, &str, &str)] = &[
    ("lattice.n", "256", "number of lattice points"),
    ("lattice.eta", "0.02", "lattice spacing"),
    ("qbm.hbar", "1", "reduced Planck constant"),
    ("qbm.m", "1", "particle mass"),
    ("qbm.D", "0", "momentum diffusion constant"),
    ("proj.L", "1", "width of the projection region"),
    ("proj.a", "0.02", "edge smearing of the projector"),
    ("proj.kind", "smeared", "sharp | smeared"),
    ("run.eps", "0.01", "time between projections"),
    ("run.total_time", "0.1", "length of the run"),
    ("run.dt", "0.001", "time step; run.eps must be a multiple"),
    ("run.env_on", "0", "time at which the environment is switched on"),
    ("run.seed", "0", "seed for stochastic parts"),
    ("run.samples", "0", "interior moment samples per interval"),
    ("init.kind", "gaussian", "gaussian | steady"),
    ("init.sigma", "0.1", "width of the initial Gaussian"),
];

/// A set of overrides on top of the defaults.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

impl Config {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parse `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| ZenoError::Config(format!("line {}: expected key = value, got {raw:?}", lineno + 1)))?;
            cfg.set(k.trim(), v.trim())?;
        }
        Ok(cfg)
    }

    /// Apply `key=value` strings (command-line style).
    pub fn with_overrides<S: AsRef<str>>(mut self, overrides: &[S]) -> Result<Self> {
        for o in overrides {
            let o = o.as_ref();
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| ZenoError::Config(format!("override {o:?} is not key=value")))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(self)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if key.is_empty() || !key.contains('.') {
            return Err(ZenoError::Config(format!("key {key:?} must be namespaced, e.g. qbm.D")));
        }
        self.entries.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Fill keys that were not set explicitly.
    pub fn with_defaults(mut self, defaults: &[(&str, &str)]) -> Self {
        for (k, v) in defaults {
            self.entries.entry(k.to_string()).or_insert_with(|| v.to_string());
        }
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Reject keys that are neither base keys nor in `extra`.
    pub fn check_keys(&self, extra: &[&str]) -> Result<()> {
        for k in self.entries.keys() {
            if !BASE_KEYS.iter().any(|(b, _, _)| b == k) && !extra.contains(&k.as_str()) {
                return Err(ZenoError::Config(format!("unknown key {k}")));
            }
        }
        Ok(())
    }

    fn raw<'a>(&'a self, key: &str, default: &'a str) -> &'a str {
        self.get(key).unwrap_or(default)
    }

    fn base_default(key: &str) -> &'static str {
        BASE_KEYS
            .iter()
            .find(|(k, _, _)| *k == key)
            .map(|(_, d, _)| *d)
            .expect("base key")
    }

    pub fn value<T: FromStr>(&self, key: &str, default: &str) -> Result<T> {
        let s = self.raw(key, default);
        s.parse()
            .map_err(|_| ZenoError::Config(format!("{key}: cannot parse {s:?}")))
    }

    /// Comma-separated list.
    pub fn list<T: FromStr>(&self, key: &str, default: &str) -> Result<Vec<T>> {
        let s = self.raw(key, default);
        s.split(',')
            .map(|part| {
                part.trim()
                    .parse()
                    .map_err(|_| ZenoError::Config(format!("{key}: cannot parse {:?} in {s:?}", part.trim())))
            })
            .collect()
    }

    fn base<T: FromStr>(&self, key: &str) -> Result<T> {
        self.value(key, Self::base_default(key))
    }

    /// Build the experiment from the base keys. Errors name the field.
    pub fn experiment(&self) -> Result<ExperimentConfig> {
        let n: usize = self.base("lattice.n")?;
        let eta: f64 = self.base("lattice.eta")?;
        let grid = Grid1D::new(n, eta)?;
        let qbm = QBMParams::new(self.base("qbm.m")?, self.base("qbm.D")?, self.base("qbm.hbar")?)?;
        let kind: ProjectorKind = self.base::<String>("proj.kind")?.parse()?;
        let length: f64 = self.base("proj.L")?;
        let a: f64 = self.base("proj.a")?;
        let proj = match kind {
            ProjectorKind::Sharp => Projector::sharp(length),
            ProjectorKind::Smeared => Projector::smeared(length, a),
        }?;
        let sigma: f64 = self.base("init.sigma")?;
        if !(sigma > 0.0) {
            return Err(ZenoError::Config(format!("init.sigma must be positive, got {sigma}")));
        }
        let initial = match self.base::<String>("init.kind")?.as_str() {
            "gaussian" => InitialState::Gaussian { sigma },
            "steady" => InitialState::SteadyState { sigma },
            other => return Err(ZenoError::Config(format!("init.kind: expected gaussian or steady, got {other:?}"))),
        };
        let cfg = ExperimentConfig {
            grid,
            qbm,
            proj,
            eps: self.base("run.eps")?,
            total_time: self.base("run.total_time")?,
            dt: self.base("run.dt")?,
            initial,
            env_on: self.base("run.env_on")?,
            seed: self.base("run.seed")?,
            samples_per_interval: self.base("run.samples")?,
            ..ExperimentConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Every base key with its resolved value, followed by the given extra
    /// keys: enough to re-run.
    pub fn echo(&self, extra: &[(&str, &str)]) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = BASE_KEYS
            .iter()
            .map(|(k, d, _)| (k.to_string(), self.raw(k, d).to_string()))
            .collect();
        out.extend(extra.iter().map(|(k, d)| (k.to_string(), self.raw(k, d).to_string())));
        out
    }
}

/// Base-key echo of an already built experiment.
pub fn experiment_echo(cfg: &ExperimentConfig) -> Vec<(String, String)> {
    let (kind, sigma) = match cfg.initial {
        InitialState::Gaussian { sigma } => ("gaussian", sigma),
        InitialState::SteadyState { sigma } => ("steady", sigma),
    };
    [
        ("lattice.n", cfg.grid.n_points().to_string()),
        ("lattice.eta", cfg.grid.spacing().to_string()),
        ("qbm.hbar", cfg.qbm.hbar.to_string()),
        ("qbm.m", cfg.qbm.mass.to_string()),
        ("qbm.D", cfg.qbm.diffusion.to_string()),
        ("proj.L", cfg.proj.length().to_string()),
        ("proj.a", cfg.proj.smearing().to_string()),
        ("proj.kind", cfg.proj.kind().to_string()),
        ("run.eps", cfg.eps.to_string()),
        ("run.total_time", cfg.total_time.to_string()),
        ("run.dt", cfg.dt.to_string()),
        ("run.env_on", cfg.env_on.to_string()),
        ("run.seed", cfg.seed.to_string()),
        ("run.samples", cfg.samples_per_interval.to_string()),
        ("init.kind", kind.to_string()),
        ("init.sigma", sigma.to_string()),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}
