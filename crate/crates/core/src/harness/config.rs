use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::channel::{LinkModels, ScenarioParams};
use crate::error::{Error, Result};
use crate::multi::{Duplex, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// EE-SE curves for several RSI levels.
    Curve,
    /// EE at a fixed SE against RSI.
    RsiSweep,
    /// EE at a fixed SE against the number of user pairs.
    UserSweep,
    /// One user pair, EE-SE curves for several RSI levels.
    SinglePair,
    /// Everything taken from the config file.
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// RSI in dB relative to the noise floor; `null` is ideal cancellation.
    ChiDb,
    /// Number of uplink users, equal to the number of downlink users.
    Users,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub axis: SweepAxis,
    pub values: Vec<Option<f64>>,
}

/// Full description of one experiment. Serialized field names are the
/// config-file keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub preset: Preset,
    /// Uplink users, also the number of downlink users.
    pub users: usize,
    pub radius_m: f64,
    pub bandwidth_hz: f64,
    pub noise_dbm_per_hz: f64,
    pub omega: f64,
    pub p_fix_w: f64,
    pub propagation: LinkModels,
    pub min_distance_m: f64,
    /// Fairness floor for every user; `null` uses `1 / (2 max(M, N))`.
    pub gamma_min: Option<f64>,
    pub exclude_invalid_pairs: bool,
    /// RSI in dB when the sweep is not over RSI; `null` is ideal.
    pub chi_db: Option<f64>,
    pub sweep: Sweep,
    /// SE points in bit/s/Hz.
    pub se_grid: Vec<f64>,
    /// Search interval of the EE maximization.
    pub se_interval: (f64, f64),
    pub tol_se: f64,
    pub modes: Vec<Duplex>,
    pub n_drops: usize,
    pub base_seed: u64,
    pub output_path: Option<PathBuf>,
    pub format: OutputFormat,
    pub solver: SolverConfig,
}

pub(crate) fn chi_linear(chi_db: Option<f64>) -> f64 {
    chi_db.map_or(0.0, |db| 10f64.powf(db / 10.0))
}

impl ExperimentConfig {
    /// Defaults of `preset`, with the system parameters of the reference
    /// simulation setup.
    pub fn preset(preset: Preset) -> Self {
        let base = Self {
            preset,
            users: 6,
            radius_m: 150.0,
            bandwidth_hz: 10e6,
            noise_dbm_per_hz: -174.0,
            omega: 1.0,
            p_fix_w: 0.1,
            propagation: LinkModels::default(),
            min_distance_m: 1.0,
            gamma_min: None,
            exclude_invalid_pairs: true,
            chi_db: None,
            sweep: Sweep { axis: SweepAxis::ChiDb, values: vec![None, Some(-20.0), Some(-10.0), Some(0.0)] },
            se_grid: (1..=16).map(f64::from).collect(),
            se_interval: (0.1, 20.0),
            tol_se: 1e-4,
            modes: vec![Duplex::Fd, Duplex::Hd],
            n_drops: 50,
            base_seed: 2016,
            output_path: None,
            format: OutputFormat::Csv,
            solver: SolverConfig::default(),
        };
        match preset {
            Preset::Curve | Preset::Custom => base,
            Preset::RsiSweep => Self {
                sweep: Sweep {
                    axis: SweepAxis::ChiDb,
                    values: vec![None, Some(-20.0), Some(-15.0), Some(-10.0), Some(-5.0), Some(0.0)],
                },
                se_grid: vec![8.0],
                n_drops: 100,
                ..base
            },
            Preset::UserSweep => Self {
                chi_db: Some(-10.0),
                n_drops: 1000,
                sweep: Sweep { axis: SweepAxis::Users, values: (2..=10).map(|m| Some(f64::from(m))).collect() },
                se_grid: vec![8.0],
                ..base
            },
            Preset::SinglePair => Self { users: 1, se_grid: (1..=40).map(|k| 0.5 * f64::from(k)).collect(), ..base },
        }
    }

    /// Preset defaults overlaid with the keys present in the JSON file.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.into(), source })?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Configuration(message) => Error::Format { path: path.into(), message },
            other => other,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let overlay: Value =
            serde_json::from_str(text).map_err(|e| Error::Configuration(format!("invalid JSON: {e}")))?;
        let preset = match overlay.get("preset") {
            Some(p) => serde_json::from_value(p.clone())
                .map_err(|e| Error::Configuration(format!("unknown preset: {e}")))?,
            None => Preset::Custom,
        };
        let mut merged = serde_json::to_value(Self::preset(preset)).expect("config serializes");
        merge(&mut merged, overlay);
        let config: Self =
            serde_json::from_value(merged).map_err(|e| Error::Configuration(format!("invalid config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Configuration(m.to_string()));
        if self.n_drops == 0 {
            return fail("n_drops must be >= 1");
        }
        if self.users == 0 {
            return fail("users must be >= 1");
        }
        if self.modes.is_empty() {
            return fail("modes must not be empty");
        }
        if self.se_grid.is_empty() || self.se_grid.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return fail("se_grid must hold finite values >= 0");
        }
        if self.se_grid.windows(2).any(|w| w[1] <= w[0]) {
            return fail("se_grid must be strictly increasing");
        }
        let (lo, hi) = self.se_interval;
        if !(lo >= 0.0 && hi > lo && hi.is_finite()) || !(self.tol_se > 0.0) {
            return fail("se_interval must satisfy 0 <= lo < hi and tol_se > 0");
        }
        if self.sweep.values.is_empty() {
            return fail("sweep values must not be empty");
        }
        let keys: Vec<f64> = self.sweep.values.iter().map(|v| v.unwrap_or(f64::NEG_INFINITY)).collect();
        if keys.iter().any(|k| k.is_nan() || *k == f64::INFINITY) || keys.windows(2).any(|w| w[1] <= w[0]) {
            return fail("sweep values must be finite and strictly increasing");
        }
        if self.sweep.axis == SweepAxis::Users
            && self.sweep.values.iter().any(|v| v.is_none_or(|m| m < 1.0 || m.fract() != 0.0))
        {
            return fail("user sweep values must be positive integers");
        }
        if self.gamma_min.is_some_and(|g| !(0.0..=1.0).contains(&g)) {
            return fail("gamma_min must lie in [0, 1]");
        }
        if !(self.radius_m > 0.0 && self.bandwidth_hz > 0.0 && self.omega > 0.0 && self.p_fix_w >= 0.0) {
            return fail("radius, bandwidth and omega must be positive and p_fix_w >= 0");
        }
        self.propagation.user_to_bs.validate()?;
        self.propagation.user_to_user.validate()?;
        self.solver.validate()
    }

    /// Users and linear RSI at one sweep point.
    pub(crate) fn sweep_point(&self, value: Option<f64>) -> (usize, f64) {
        match self.sweep.axis {
            SweepAxis::ChiDb => (self.users, chi_linear(value)),
            SweepAxis::Users => (value.expect("validated") as usize, chi_linear(self.chi_db)),
        }
    }

    /// Number reported in the `sweep_value` column.
    pub(crate) fn sweep_label(&self, value: Option<f64>) -> f64 {
        match self.sweep.axis {
            SweepAxis::ChiDb => chi_linear(value),
            SweepAxis::Users => value.expect("validated"),
        }
    }

    pub(crate) fn scenario_params(&self, chi: f64) -> ScenarioParams {
        ScenarioParams {
            chi,
            bandwidth_hz: self.bandwidth_hz,
            noise_dbm_per_hz: self.noise_dbm_per_hz,
            omega: self.omega,
            p_fix_w: self.p_fix_w,
            gamma_min_up: self.gamma_min,
            gamma_min_down: self.gamma_min,
            min_distance_m: self.min_distance_m,
            exclude_invalid_pairs: self.exclude_invalid_pairs,
        }
    }
}

/// Recursive object merge; non-object values in `overlay` replace `base`.
fn merge(base: &mut Value, overlay: Value) {
    match (base, overlay) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}
