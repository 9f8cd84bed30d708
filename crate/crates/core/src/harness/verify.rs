//! Quick oracle cross-checks behind the `verify` subcommand.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::channel::Scenario;
use crate::error::Result;
use crate::matrix::Matrix;
use crate::multi::{self, SolverConfig};
use crate::oracle::{self, MultiGrid};
use crate::pair::{self, GainTriple};

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp()
}

/// Random gains meeting the FD necessary condition.
pub fn random_valid_gains<R: Rng>(rng: &mut R) -> GainTriple {
    loop {
        let g = GainTriple {
            h_up: log_uniform(rng, 0.1, 1000.0),
            h_down: log_uniform(rng, 0.1, 1000.0),
            h_cci: log_uniform(rng, 0.1, 1000.0),
            chi: rng.random::<f64>(),
        };
        if pair::fd_necessary_condition(&g) {
            return g;
        }
    }
}

/// Runs `instances` random single-pair checks and a few two-pair solver
/// checks.
pub fn verify_suite(instances: usize, seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_oracle: f64 = 0.0;
    let mut worst_second: f64 = f64::INFINITY;
    for _ in 0..instances {
        let g = random_valid_gains(&mut rng);
        let rate = 10.0 * (1.0 - rng.random::<f64>());
        let closed = pair::min_power(rate, &g)?.0;
        let o = oracle::oracle_min_power_single(rate, &g, 1e-12)?;
        worst_oracle = worst_oracle.max((closed - o.value).abs() / closed);
        let report = oracle::convexity_probe(|r| Ok(pair::min_power(r, &g)?.0), (0.05, 10.0), 200)?;
        worst_second = worst_second.min(report.min_second_difference);
    }
    let mut checks = vec![
        Check {
            name: "closed form vs oracle",
            passed: worst_oracle <= 1e-4,
            detail: format!("worst relative error {worst_oracle:.3e} over {instances} instances"),
        },
        Check {
            name: "convexity in rate",
            passed: worst_second >= -1e-8,
            detail: format!("smallest second difference {worst_second:.3e}"),
        },
    ];

    let config = SolverConfig::default();
    let mut worst_multi: f64 = 0.0;
    let mut worst_gap: f64 = 0.0;
    for _ in 0..instances.clamp(1, 10) {
        let h_down = vec![log_uniform(&mut rng, 1.0, 100.0), log_uniform(&mut rng, 1.0, 100.0)];
        let h_up = vec![log_uniform(&mut rng, 1.0, 100.0)];
        let cci = Matrix::from_rows(&[vec![
            0.5 * rng.random::<f64>() * h_up[0].min(h_down[0]),
            0.5 * rng.random::<f64>() * h_up[0].min(h_down[1]),
        ]]);
        let s = Scenario::from_gains(h_up, h_down, cci, 0.5 * rng.random::<f64>())?;
        let r = 1.0 + 7.0 * rng.random::<f64>();
        let sol = multi::solve_min_total_power(r, &s, &config)?;
        let o = oracle::oracle_min_power_multi(r, &s, &MultiGrid::default())?;
        worst_multi = worst_multi.max((sol.total_power - o.value).abs() / o.value);
        worst_gap = worst_gap.max(sol.gap());
    }
    checks.push(Check {
        name: "two-pair solver vs grid oracle",
        passed: worst_multi <= 0.01 && worst_gap <= config.tol_gap,
        detail: format!("worst relative error {worst_multi:.3e}, worst gap {worst_gap:.3e}"),
    });
    Ok(checks)
}
