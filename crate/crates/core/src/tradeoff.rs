//! EE-SE curves and the SE that maximizes energy efficiency.

use serde::{Deserialize, Serialize};

use crate::channel::Scenario;
use crate::error::{Error, Result};
use crate::multi::{self, Duplex, PowerSolution, SolverConfig};
use crate::numeric::golden_max;

/// Default SE resolution of [`max_ee`], bit/s/Hz.
pub const TOL_SE: f64 = 1e-4;

/// Sampled `(SE, minimum power, EE)` triples for one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffCurve {
    /// bit/s/Hz, strictly increasing.
    pub se_points: Vec<f64>,
    /// Watts.
    pub p_min: Vec<f64>,
    /// bit/J.
    pub ee: Vec<f64>,
}

impl TradeoffCurve {
    pub fn len(&self) -> usize {
        self.se_points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.se_points.is_empty()
    }
}

fn check_grid(se_grid: &[f64]) -> Result<()> {
    if se_grid.iter().any(|s| !s.is_finite() || *s < 0.0) {
        return Err(Error::Domain("SE grid values must be finite and >= 0".into()));
    }
    if se_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("SE grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Evaluates the minimum power and EE at every grid point. Errors carry the
/// failing grid index.
pub fn trace_curve(
    mode: Duplex,
    scenario: &Scenario,
    se_grid: &[f64],
    config: &SolverConfig,
) -> Result<TradeoffCurve> {
    check_grid(se_grid)?;
    let mut p_min = Vec::with_capacity(se_grid.len());
    let mut ee = Vec::with_capacity(se_grid.len());
    for (k, &se) in se_grid.iter().enumerate() {
        let power = multi::min_total_power(mode, se, scenario, config)
            .map_err(|e| e.at_grid_index(k))?
            .total_power;
        p_min.push(power);
        ee.push(multi::ee_from_power(se, power, scenario));
    }
    Ok(TradeoffCurve { se_points: se_grid.to_vec(), p_min, ee })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxEe {
    pub se_star: f64,
    /// bit/J.
    pub ee_star: f64,
    pub solution: PowerSolution,
}

/// Maximizes the quasi-concave EE over `[lo, hi]` by golden-section search.
pub fn max_ee(
    mode: Duplex,
    scenario: &Scenario,
    (lo, hi): (f64, f64),
    tol_se: f64,
    config: &SolverConfig,
) -> Result<MaxEe> {
    if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::Domain(format!("need 0 <= lo < hi, got [{lo}, {hi}]")));
    }
    if !(tol_se > 0.0) {
        return Err(Error::Domain(format!("tol_se must be positive, got {tol_se}")));
    }
    let ee = |se: f64| multi::ee_for_mode(mode, se, scenario, config);
    let best = golden_max(ee, lo, hi, tol_se)?;
    let solution = multi::min_total_power(mode, best.x, scenario, config)?;
    let ee_star = multi::ee_from_power(best.x, solution.total_power, scenario);
    Ok(MaxEe { se_star: best.x, ee_star, solution })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnimodalityReport {
    pub unimodal: bool,
    pub first_violation: Option<usize>,
}

/// True iff the EE sequence has no interior dip deeper than `tol` below both
/// the best value before it and the best value after it. Plateaus pass.
///
/// `tol` is relative to the largest `|ee|` of the curve, since EE values are
/// reported in bit/J.
pub fn unimodality_report(curve: &TradeoffCurve, tol: f64) -> UnimodalityReport {
    unimodality_of(&curve.ee, tol)
}

pub fn unimodality_of(values: &[f64], tol: f64) -> UnimodalityReport {
    let n = values.len();
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let slack = tol * scale;
    let mut suffix = vec![f64::NEG_INFINITY; n + 1];
    for k in (0..n).rev() {
        suffix[k] = suffix[k + 1].max(values[k]);
    }
    let mut prefix = f64::NEG_INFINITY;
    for k in 0..n {
        if k > 0 && k + 1 < n && values[k] < prefix.min(suffix[k + 1]) - slack {
            return UnimodalityReport { unimodal: false, first_violation: Some(k) };
        }
        prefix = prefix.max(values[k]);
    }
    UnimodalityReport { unimodal: true, first_violation: None }
}
