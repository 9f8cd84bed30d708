//! Brute-force reference computations for the tests. Slow on purpose, and
//! independent of the solvers: everything is recomputed from the rate
//! expression `log2(1 + p_u h_u / (1 + chi)) + log2(1 + p_d h_d / (1 + p_u h_c))`.

use serde::{Deserialize, Serialize};

use crate::channel::Scenario;
use crate::error::{Error, Result};
use crate::pair::GainTriple;

/// An oracle value with a bound on its own resolution error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleValue {
    pub value: f64,
    pub resolution: f64,
}

const COARSE_POINTS: usize = 101;

/// Total power needed at uplink power `p_up` when the downlink carries the rest
/// of `rate`.
fn total_for_uplink(p_up: f64, rate: f64, g: &GainTriple) -> f64 {
    let up_rate = (1.0 + p_up * g.h_up / (1.0 + g.chi)).log2();
    let rest = (rate - up_rate).max(0.0);
    let p_down = (2f64.powf(rest) - 1.0) * (1.0 + p_up * g.h_cci) / g.h_down;
    p_up + p_down
}

/// Minimum of `p_up + p_down` over all splits delivering `rate`.
///
/// Scans a coarse grid of uplink powers, then shrinks the bracket around the
/// best grid point by ternary search until it is narrower than
/// `resolution` times the range. Works for any gains, including pairs where
/// full duplex is not worthwhile.
pub fn oracle_min_power_single(rate: f64, gains: &GainTriple, resolution: f64) -> Result<OracleValue> {
    if !(rate >= 0.0) || !(resolution > 0.0) {
        return Err(Error::Domain(format!("need rate >= 0 and resolution > 0, got {rate}, {resolution}")));
    }
    if rate == 0.0 {
        return Ok(OracleValue { value: 0.0, resolution: 0.0 });
    }
    let f = |p: f64| total_for_uplink(p, rate, gains);
    let p_max = (2f64.powf(rate) - 1.0) * (1.0 + gains.chi) / gains.h_up;
    let step = p_max / (COARSE_POINTS - 1) as f64;
    let mut best = 0;
    let mut best_value = f(0.0);
    for k in 1..COARSE_POINTS {
        let v = f(k as f64 * step);
        if v < best_value {
            best = k;
            best_value = v;
        }
    }
    let mut lo = best.saturating_sub(1) as f64 * step;
    let mut hi = ((best + 1).min(COARSE_POINTS - 1) as f64 * step).min(p_max);
    while hi - lo > resolution * p_max {
        let a = lo + (hi - lo) / 3.0;
        let b = hi - (hi - lo) / 3.0;
        if f(a) <= f(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    let mut value = f(0.5 * (lo + hi));
    for end in [0.0, p_max] {
        value = value.min(f(end));
    }
    let spread = f(lo).max(f(hi)) - value;
    Ok(OracleValue { value, resolution: spread.max(0.0) })
}

/// Parameters of [`oracle_min_power_multi`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiGrid {
    /// Points per dimension at every zoom level.
    pub steps: usize,
    /// Number of zoom levels.
    pub levels: usize,
    /// Resolution of the inner single-pair oracle.
    pub single_resolution: f64,
}

impl Default for MultiGrid {
    fn default() -> Self {
        Self { steps: 11, levels: 12, single_resolution: 1e-10 }
    }
}

struct OraclePair {
    row: usize,
    col: usize,
    gains: GainTriple,
}

fn admissible_pairs(scenario: &Scenario) -> Result<Vec<OraclePair>> {
    let mut pairs = Vec::new();
    for i in 0..scenario.h_up.len() {
        for j in 0..scenario.h_down.len() {
            let gains = GainTriple {
                h_up: scenario.h_up[i],
                h_down: scenario.h_down[j],
                h_cci: scenario.h_cci[(i, j)],
                chi: scenario.chi,
            };
            let ok = gains.h_cci * (1.0 + gains.chi) < gains.h_up.min(gains.h_down);
            if ok {
                pairs.push(OraclePair { row: i, col: j, gains });
            } else if !scenario.exclude_invalid_pairs {
                return Err(Error::PreconditionViolated(format!("pair ({i}, {j}) is not admissible")));
            }
        }
    }
    if pairs.is_empty() || pairs.len() > 2 {
        return Err(Error::Configuration(format!(
            "multi-pair oracle handles 1 or 2 admissible pairs, found {}",
            pairs.len()
        )));
    }
    Ok(pairs)
}

/// Exhaustive zooming grid over time shares and the rate split for tiny
/// instances with one or two admissible pairs.
///
/// Each level scans `steps` points per free variable (`gamma_1`, `gamma_2`,
/// `R_hat_1`) inside the current box, keeps the cheapest point meeting every
/// constraint, and shrinks the box to two cells around it. The reported
/// resolution is the largest cost increase from the best point to any of its
/// grid neighbors at the final level.
pub fn oracle_min_power_multi(r_tot: f64, scenario: &Scenario, grid: &MultiGrid) -> Result<OracleValue> {
    if !(r_tot >= 0.0) || grid.steps < 3 || grid.levels == 0 {
        return Err(Error::Domain("need r_tot >= 0, steps >= 3 and levels >= 1".into()));
    }
    let pairs = admissible_pairs(scenario)?;
    let (m, n) = (scenario.h_up.len(), scenario.h_down.len());
    let tol = 1e-12;
    let feasible = |gamma: &[f64]| -> bool {
        if gamma.iter().sum::<f64>() > 1.0 + tol {
            return false;
        }
        let mut rows = vec![0.0; m];
        let mut cols = vec![0.0; n];
        for (p, g) in pairs.iter().zip(gamma) {
            rows[p.row] += g;
            cols[p.col] += g;
        }
        rows.iter().all(|s| *s >= scenario.gamma_min_up - tol)
            && cols.iter().all(|s| *s >= scenario.gamma_min_down - tol)
    };
    let cost = |gamma: &[f64], rates: &[f64]| -> Result<f64> {
        let mut total = 0.0;
        for ((p, &g), &r) in pairs.iter().zip(gamma).zip(rates) {
            if r <= 0.0 {
                continue;
            }
            if g <= 0.0 {
                return Ok(f64::INFINITY);
            }
            total += g * oracle_min_power_single(r / g, &p.gains, grid.single_resolution)?.value;
        }
        Ok(total)
    };
    // Point: (gamma_1, gamma_2, R_hat_1); unused coordinates stay fixed.
    let dims = if pairs.len() == 1 { 1 } else { 3 };
    let evaluate = |x: &[f64; 3]| -> Result<f64> {
        let (gamma, rates) = if pairs.len() == 1 {
            (vec![x[0]], vec![r_tot])
        } else {
            (vec![x[0], x[1]], vec![x[2], r_tot - x[2]])
        };
        if !feasible(&gamma) {
            return Ok(f64::INFINITY);
        }
        cost(&gamma, &rates)
    };

    let mut lower = [0.0, 0.0, 0.0];
    let mut upper = [1.0, 1.0, r_tot];
    let mut best: Option<([f64; 3], f64)> = None;
    let mut spacing = [0.0; 3];
    let s = grid.steps;
    let total_points = s.pow(dims as u32);
    for _ in 0..grid.levels {
        for d in 0..3 {
            spacing[d] = (upper[d] - lower[d]) / (s - 1) as f64;
        }
        let mut level_best: Option<([f64; 3], f64)> = None;
        for idx in 0..total_points {
            let mut x = [0.0; 3];
            let mut rem = idx;
            for d in 0..dims {
                x[d] = lower[d] + (rem % s) as f64 * spacing[d];
                rem /= s;
            }
            let v = evaluate(&x)?;
            if v.is_finite() && level_best.is_none_or(|(_, b)| v < b) {
                level_best = Some((x, v));
            }
        }
        let Some((x, v)) = level_best else {
            if best.is_none() {
                return Err(Error::Configuration("no grid point meets the constraints".into()));
            }
            break;
        };
        if best.is_none_or(|(_, b)| v <= b) {
            best = Some((x, v));
        }
        let (centre, _) = best.expect("set above");
        for d in 0..dims {
            let bound = if d == 2 { r_tot } else { 1.0 };
            lower[d] = (centre[d] - 2.0 * spacing[d]).max(0.0);
            upper[d] = (centre[d] + 2.0 * spacing[d]).min(bound);
        }
    }
    let (x, value) = best.expect("at least one level found a point");
    let mut resolution: f64 = 0.0;
    for d in 0..dims {
        for sign in [-1.0, 1.0] {
            let mut y = x;
            let bound = if d == 2 { r_tot } else { 1.0 };
            y[d] = (y[d] + sign * spacing[d]).clamp(0.0, bound);
            let v = evaluate(&y)?;
            if v.is_finite() {
                resolution = resolution.max(v - value);
            }
        }
    }
    Ok(OracleValue { value, resolution })
}

/// Summary of sampled convexity checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvexityReport {
    pub min_first_difference: f64,
    pub min_second_difference: f64,
    /// Smallest `(f(a) + f(b)) / 2 - f((a + b) / 2)` over all sample pairs
    /// whose midpoint is also a sample.
    pub min_midpoint_slack: f64,
}

/// Samples `f` on `n` evenly spaced points of `[lo, hi]`.
pub fn convexity_probe<F>(f: F, (lo, hi): (f64, f64), n: usize) -> Result<ConvexityReport>
where
    F: Fn(f64) -> Result<f64>,
{
    if n < 3 || !(hi > lo) {
        return Err(Error::Domain(format!("need n >= 3 and lo < hi, got {n} on [{lo}, {hi}]")));
    }
    let step = (hi - lo) / (n - 1) as f64;
    let values = (0..n).map(|k| f(lo + k as f64 * step)).collect::<Result<Vec<f64>>>()?;
    let min_first_difference = values.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let min_second_difference =
        values.windows(3).map(|w| w[2] - 2.0 * w[1] + w[0]).fold(f64::INFINITY, f64::min);
    let mut min_midpoint_slack = f64::INFINITY;
    for a in 0..n {
        for b in (a + 2..n).step_by(2) {
            let slack = 0.5 * (values[a] + values[b]) - values[(a + b) / 2];
            min_midpoint_slack = min_midpoint_slack.min(slack);
        }
    }
    Ok(ConvexityReport { min_first_difference, min_second_difference, min_midpoint_slack })
}

/// Relative error of the central difference of `f` at `x` against `analytic`.
/// Returns 0 when both vanish.
pub fn finite_difference_check<F>(f: F, x: f64, analytic: f64, h: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(h > 0.0) {
        return Err(Error::Domain(format!("step must be positive, got {h}")));
    }
    let numeric = (f(x + h)? - f(x - h)?) / (2.0 * h);
    Ok(relative_difference(numeric, analytic))
}

/// Left and right difference quotients of `f` at `x` with step `h`.
pub fn one_sided_differences<F>(f: F, x: f64, h: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let centre = f(x)?;
    Ok(((centre - f(x - h)?) / h, (f(x + h)? - centre) / h))
}

pub fn relative_difference(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}
