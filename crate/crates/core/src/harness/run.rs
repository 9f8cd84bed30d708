use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::config::{chi_linear, ExperimentConfig, SweepAxis};
use crate::channel::{build_scenario, generate_drop, Scenario};
use crate::error::{Error, Result};
use crate::multi::{self, Duplex};
use crate::tradeoff;

/// One solved (drop, sweep point, SE, mode) combination. Failed solves keep
/// their row with empty values and the error message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub drop_seed: u64,
    pub sweep_value: f64,
    /// bit/s/Hz.
    pub se: f64,
    pub p_min_w: Option<f64>,
    /// bit/J.
    pub ee: Option<f64>,
    pub mode: Duplex,
    pub error: Option<String>,
}

impl ResultRow {
    pub const HEADER: [&'static str; 7] = ["drop_seed", "sweep_value", "se", "p_min_w", "ee", "mode", "error"];

    pub fn is_error(&self) -> bool {
        self.error.is_some()
    }
}

fn row(seed: u64, sweep_value: f64, se: f64, mode: Duplex, outcome: Result<(f64, f64), String>) -> ResultRow {
    match outcome {
        Ok((p, ee)) => ResultRow { drop_seed: seed, sweep_value, se, p_min_w: Some(p), ee: Some(ee), mode, error: None },
        Err(e) => ResultRow { drop_seed: seed, sweep_value, se, p_min_w: None, ee: None, mode, error: Some(e) },
    }
}

/// Scenarios of every sweep point for one drop seed. A sweep point whose
/// scenario cannot be built yields the error instead.
///
/// A user sweep draws one drop with the largest user count and takes its
/// leading users at every point, so the points differ only in the users
/// added.
fn scenarios(config: &ExperimentConfig, seed: u64) -> Vec<(f64, Result<Scenario>)> {
    let build = |users: usize, chi: f64| {
        generate_drop(users, users, config.radius_m, seed)
            .and_then(|drop| build_scenario(&drop, &config.propagation, &config.scenario_params(chi)))
    };
    let points = config.sweep.values.iter().map(|&v| (config.sweep_label(v), config.sweep_point(v)));
    match config.sweep.axis {
        SweepAxis::ChiDb => points.map(|(label, (users, chi))| (label, build(users, chi))).collect(),
        SweepAxis::Users => {
            let largest = config.sweep.values.iter().map(|&v| config.sweep_point(v).0).max().unwrap_or(1);
            let full = build(largest, chi_linear(config.chi_db));
            let floors = config.gamma_min.map(|g| (g, g));
            points
                .map(|(label, (users, _))| {
                    let s = match &full {
                        Ok(full) => full.leading_users(users, users, floors),
                        Err(e) => Err(Error::Configuration(e.to_string())),
                    };
                    (label, s)
                })
                .collect()
        }
    }
}

/// Minimum power and EE at every SE grid point, for every drop, sweep point
/// and mode. Drop `d` uses seed `base_seed + d`. Rows are ordered by drop,
/// sweep point, SE, then mode.
pub fn run_preset(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    config.validate()?;
    let mut rows = Vec::new();
    for d in 0..config.n_drops as u64 {
        let seed = config.base_seed.wrapping_add(d);
        for (label, scenario) in scenarios(config, seed) {
            for &se in &config.se_grid {
                for &mode in &config.modes {
                    let outcome = match &scenario {
                        Ok(s) => multi::min_total_power(mode, se, s, &config.solver)
                            .map(|sol| (sol.total_power, multi::ee_from_power(se, sol.total_power, s)))
                            .map_err(|e| e.to_string()),
                        Err(e) => Err(e.to_string()),
                    };
                    rows.push(row(seed, label, se, mode, outcome));
                }
            }
        }
    }
    Ok(rows)
}

/// EE-maximizing SE within `se_interval` for every drop, sweep point and
/// mode; `se` holds the maximizer, or 0 on failure.
pub fn run_max_ee(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    config.validate()?;
    let mut rows = Vec::new();
    for d in 0..config.n_drops as u64 {
        let seed = config.base_seed.wrapping_add(d);
        for (label, scenario) in scenarios(config, seed) {
            for &mode in &config.modes {
                let best = match &scenario {
                    Ok(s) => tradeoff::max_ee(mode, s, config.se_interval, config.tol_se, &config.solver)
                        .map_err(|e| e.to_string()),
                    Err(e) => Err(e.to_string()),
                };
                rows.push(match best {
                    Ok(b) => row(seed, label, b.se_star, mode, Ok((b.solution.total_power, b.ee_star))),
                    Err(e) => row(seed, label, 0.0, mode, Err(e)),
                });
            }
        }
    }
    Ok(rows)
}

/// Statistics of one `(sweep_value, se, mode)` group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub sweep_value: f64,
    pub se: f64,
    pub mode: Duplex,
    /// Rows that contributed.
    pub count: usize,
    /// Error rows left out.
    pub excluded: usize,
    pub ee_mean: Option<f64>,
    pub ee_median: Option<f64>,
    pub ee_std: Option<f64>,
    pub p_min_mean: Option<f64>,
    pub p_min_median: Option<f64>,
    pub p_min_std: Option<f64>,
    /// Every row of the group failed.
    pub all_failed: bool,
}

impl SummaryRow {
    pub const HEADER: [&'static str; 12] = [
        "sweep_value",
        "se",
        "mode",
        "count",
        "excluded",
        "ee_mean",
        "ee_median",
        "ee_std",
        "p_min_mean",
        "p_min_median",
        "p_min_std",
        "all_failed",
    ];
}

/// Mean, median and population standard deviation.
fn stats(values: &mut [f64]) -> Option<(f64, f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    values.sort_by(f64::total_cmp);
    let k = values.len() / 2;
    let median = if values.len() % 2 == 1 { values[k] } else { 0.5 * (values[k - 1] + values[k]) };
    Some((mean, median, var.sqrt()))
}

/// Groups rows by `(sweep_value, se, mode)`; the SE key is there so that
/// curve presets do not mix grid points. Groups are ordered by key.
pub fn aggregate(rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(u64, u64, Duplex), Vec<&ResultRow>> = BTreeMap::new();
    let key = |x: f64| {
        // Order-preserving map of f64 to u64.
        let b = x.to_bits();
        if b >> 63 == 1 { !b } else { b | (1 << 63) }
    };
    for r in rows {
        groups.entry((key(r.sweep_value), key(r.se), r.mode)).or_default().push(r);
    }
    groups
        .into_values()
        .map(|group| {
            let ok: Vec<&&ResultRow> = group.iter().filter(|r| !r.is_error()).collect();
            let mut ee: Vec<f64> = ok.iter().filter_map(|r| r.ee).collect();
            let mut p: Vec<f64> = ok.iter().filter_map(|r| r.p_min_w).collect();
            let ee_stats = stats(&mut ee);
            let p_stats = stats(&mut p);
            SummaryRow {
                sweep_value: group[0].sweep_value,
                se: group[0].se,
                mode: group[0].mode,
                count: ok.len(),
                excluded: group.len() - ok.len(),
                ee_mean: ee_stats.map(|s| s.0),
                ee_median: ee_stats.map(|s| s.1),
                ee_std: ee_stats.map(|s| s.2),
                p_min_mean: p_stats.map(|s| s.0),
                p_min_median: p_stats.map(|s| s.1),
                p_min_std: p_stats.map(|s| s.2),
                all_failed: ok.is_empty(),
            }
        })
        .collect()
}
