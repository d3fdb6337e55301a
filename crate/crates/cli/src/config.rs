//! Run configuration: a flat key-value file merged with command-line flags.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;
use telesqueeze::optimize::OptSettings;
use telesqueeze::sweep::{Metric, SweepSpec};
use telesqueeze::{fock, PhotonState, Resources, Variant};

use crate::CliError;

/// Either a single value or a list, so `resource_db = 9` and
/// `resource_db = [3, 6, 9]` are both accepted.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v],
            OneOrMany::Many(v) => v,
        }
    }
}

/// Keys accepted in a config file. Every key is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub variant: Option<OneOrMany<String>>,
    pub state: Option<String>,
    pub resource_db: Option<OneOrMany<f64>>,
    pub eta_s: Option<f64>,
    pub eta_h: Option<f64>,
    pub s_db: Option<f64>,
    pub s_db_min: Option<f64>,
    pub s_db_max: Option<f64>,
    pub s_db_step: Option<f64>,
    pub metrics: Option<OneOrMany<String>>,
    pub objective: Option<String>,
    pub seed: Option<u64>,
    pub population: Option<usize>,
    pub generations: Option<usize>,
    pub tolerance: Option<f64>,
    pub quad_order: Option<usize>,
    pub fock_dim: Option<usize>,
    pub fock_quad_order: Option<usize>,
    pub grid_size: Option<usize>,
    pub format: Option<String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        // Nested tables are rejected so the file stays flat.
        let raw: BTreeMap<String, toml::Value> =
            toml::from_str(text).map_err(|e| CliError::Config(format!("invalid config: {e}")))?;
        if let Some((key, _)) = raw.iter().find(|(_, v)| v.is_table()) {
            return Err(CliError::Config(format!("config key '{key}' must be a plain value")));
        }
        toml::from_str(text).map_err(|e| CliError::Config(format!("invalid config: {e}")))
    }
}

/// Flag values; `None` falls back to the config file, then to defaults.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub variant: Option<String>,
    pub state: Option<String>,
    pub resource_db: Option<String>,
    pub eta_s: Option<f64>,
    pub eta_h: Option<f64>,
    pub s_db: Option<f64>,
    pub s_db_min: Option<f64>,
    pub s_db_max: Option<f64>,
    pub s_db_step: Option<f64>,
    pub metrics: Option<String>,
    pub objective: Option<String>,
    pub seed: Option<u64>,
    pub quad_order: Option<usize>,
    pub fock_dim: Option<usize>,
    pub fock_quad_order: Option<usize>,
    pub grid_size: Option<usize>,
    pub format: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveChoice {
    Fidelity,
    TotalNoise,
}

/// Fully resolved settings of one run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub variants: Vec<Variant>,
    pub state: PhotonState,
    pub resource_db: Vec<f64>,
    pub eta_s: f64,
    pub eta_h: f64,
    pub s_db: f64,
    pub s_db_min: f64,
    pub s_db_max: f64,
    pub s_db_step: f64,
    pub metrics: Vec<Metric>,
    pub objective: ObjectiveChoice,
    pub settings: OptSettings,
    pub seed: Option<u64>,
    pub fock_dim: usize,
    pub fock_quad_order: usize,
    pub grid_size: usize,
    pub format: Option<Format>,
}

fn split_list(text: &str) -> Vec<String> {
    text.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
}

fn parse_all<T: std::str::FromStr>(items: Vec<String>, what: &str) -> Result<Vec<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    items
        .into_iter()
        .map(|s| s.parse::<T>().map_err(|e| CliError::Config(format!("{what} '{s}': {e}"))))
        .collect()
}

fn list_from_file(value: OneOrMany<String>) -> Vec<String> {
    value.into_vec().iter().flat_map(|s| split_list(s)).collect()
}

impl RunConfig {
    pub fn resolve(file: FileConfig, flags: Overrides) -> Result<Self, CliError> {
        let defaults = SweepSpec::default();
        let mut settings = OptSettings::default();

        let variants = match (flags.variant, file.variant) {
            (Some(v), _) => split_list(&v),
            (None, Some(v)) => list_from_file(v),
            (None, None) => Variant::ALL.iter().map(|v| v.as_str().to_string()).collect(),
        };
        let variants: Vec<Variant> = parse_all(variants, "variant")?;

        let state = match flags.state.or(file.state) {
            Some(s) => s.parse::<PhotonState>().map_err(|e| CliError::Config(e.to_string()))?,
            None => PhotonState::Vacuum,
        };

        let resource_db = match (flags.resource_db, file.resource_db) {
            (Some(text), _) => parse_all(split_list(&text), "resource level")?,
            (None, Some(v)) => v.into_vec(),
            (None, None) => defaults.resource_db.clone(),
        };

        let metrics = match (flags.metrics, file.metrics) {
            (Some(text), _) => parse_all(split_list(&text), "metric")?,
            (None, Some(v)) => parse_all(list_from_file(v), "metric")?,
            (None, None) => Metric::ALL.to_vec(),
        };

        let objective = match flags.objective.or(file.objective).as_deref().map(str::trim) {
            None | Some("fidelity") => ObjectiveChoice::Fidelity,
            Some("total-noise") | Some("total_noise") => ObjectiveChoice::TotalNoise,
            Some(other) => return Err(CliError::Config(format!("unknown objective '{other}'"))),
        };

        let format = match flags.format.or(file.format).as_deref().map(str::trim) {
            None => None,
            Some("csv") => Some(Format::Csv),
            Some("json") => Some(Format::Json),
            Some(other) => return Err(CliError::Config(format!("unknown format '{other}'"))),
        };

        let seed = flags.seed.or(file.seed);
        if let Some(seed) = seed {
            settings.seed = seed;
        }
        if let Some(p) = file.population {
            settings.population = p;
        }
        if let Some(g) = file.generations {
            settings.generations = g;
        }
        if let Some(t) = file.tolerance {
            settings.tolerance = t;
        }
        if let Some(q) = flags.quad_order.or(file.quad_order) {
            settings.quad_order = q;
        }

        let cfg = Self {
            variants,
            state,
            resource_db,
            eta_s: flags.eta_s.or(file.eta_s).unwrap_or(1.0),
            eta_h: flags.eta_h.or(file.eta_h).unwrap_or(1.0),
            s_db: flags.s_db.or(file.s_db).unwrap_or(-5.0),
            s_db_min: flags.s_db_min.or(file.s_db_min).unwrap_or(defaults.s_db_min),
            s_db_max: flags.s_db_max.or(file.s_db_max).unwrap_or(defaults.s_db_max),
            s_db_step: flags.s_db_step.or(file.s_db_step).unwrap_or(defaults.s_db_step),
            metrics,
            objective,
            settings,
            seed,
            fock_dim: flags.fock_dim.or(file.fock_dim).unwrap_or(fock::DEFAULT_DIM),
            fock_quad_order: flags.fock_quad_order.or(file.fock_quad_order).unwrap_or(fock::DEFAULT_QUAD_ORDER),
            grid_size: flags.grid_size.or(file.grid_size).unwrap_or(1000),
            format,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.variants.is_empty() {
            return Err(CliError::Config("no variant selected".into()));
        }
        for &db in &self.resource_db {
            Resources::new(db, self.eta_s, self.eta_h)
                .validate()
                .map_err(|e| CliError::Config(e.to_string()))?;
        }
        if !(self.s_db <= 0.0 && self.s_db > -20.0) {
            return Err(CliError::Config(format!("s_db = {} outside (-20, 0]", self.s_db)));
        }
        if self.fock_dim < 2 || self.fock_quad_order == 0 {
            return Err(CliError::Config("Fock dimension must be >= 2 and quadrature order > 0".into()));
        }
        self.settings.validate().map_err(|e| CliError::Config(e.to_string()))
    }

    /// Resources of the first resource level.
    pub fn resources(&self) -> Resources {
        Resources::new(self.resource_db[0], self.eta_s, self.eta_h)
    }

    pub fn sweep_spec(&self) -> SweepSpec {
        SweepSpec {
            variants: self.variants.clone(),
            state: self.state,
            resource_db: self.resource_db.clone(),
            eta_s: self.eta_s,
            eta_h: self.eta_h,
            s_db_min: self.s_db_min,
            s_db_max: self.s_db_max,
            s_db_step: self.s_db_step,
            metrics: self.metrics.clone(),
            settings: self.settings,
        }
    }

    /// The single variant of commands that act on one squeezer.
    pub fn single_variant(&self) -> Result<Variant, CliError> {
        match self.variants.as_slice() {
            [v] => Ok(*v),
            _ => Err(CliError::Config("this command needs exactly one --variant".into())),
        }
    }
}
