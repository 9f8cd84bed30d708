//! Projected subgradient ascent on all multipliers at once, with step
//! `a / (b + k)` along the normalized subgradient.
//!
//! Slower than the cutting-plane method and usually stops short of the
//! tightest gap tolerance; kept as an independent path through the same
//! decomposition.

use super::cost::Link;
use super::master::TimePolytope;
use super::{best_certificate, link_subproblem, water_fill, DualVars, LinkSolution};
use crate::error::Result;
use crate::multi::relative_gap;

pub(super) fn solve(
    links: &[Link],
    poly: &TimePolytope,
    (m, n): (usize, usize),
    floors: (f64, f64),
    r_tot: f64,
    config: &super::SolverConfig,
    (step_a, step_b): (f64, f64),
) -> Result<(LinkSolution, bool)> {
    let uniform = vec![1.0 / links.len() as f64; links.len()];
    let (_, _, mu0) = water_fill(links, &uniform, r_tot, config.gamma_floor)?;
    let mut duals = DualVars { lambda_time: 0.0, mu_rate: mu0, nu_up: vec![0.0; m], xi_down: vec![0.0; n] };

    let mut gamma_avg = vec![0.0; links.len()];
    let mut weight_sum = 0.0;
    let mut mu_candidates = vec![mu0];
    let mut last = None;

    for k in 0..config.max_iters {
        let step = step_a / (step_b + k as f64);
        let mut gamma = vec![0.0; links.len()];
        let mut r_hat = vec![0.0; links.len()];
        for (l, link) in links.iter().enumerate() {
            let nu = link.up.map_or(0.0, |i| duals.nu_up[i]);
            let xi = link.down.map_or(0.0, |j| duals.xi_down[j]);
            let choice = link_subproblem(&link.cost, duals.lambda_time - nu - xi, duals.mu_rate)?;
            gamma[l] = choice.gamma;
            r_hat[l] = choice.r_hat;
        }
        for l in 0..links.len() {
            gamma_avg[l] += step * gamma[l];
        }
        weight_sum += step;

        let time: f64 = gamma.iter().sum();
        let rate: f64 = r_hat.iter().sum();
        let mut rows = vec![0.0; m];
        let mut cols = vec![0.0; n];
        for (l, link) in links.iter().enumerate() {
            if let Some(i) = link.up {
                rows[i] += gamma[l];
            }
            if let Some(j) = link.down {
                cols[j] += gamma[l];
            }
        }
        let g_lambda = time - 1.0;
        let g_mu = r_tot - rate;
        let g_nu: Vec<f64> = rows.iter().map(|s| floors.0 - s).collect();
        let g_xi: Vec<f64> = cols.iter().map(|s| floors.1 - s).collect();
        let norm = (g_lambda * g_lambda
            + g_mu * g_mu
            + g_nu.iter().map(|g| g * g).sum::<f64>()
            + g_xi.iter().map(|g| g * g).sum::<f64>())
        .sqrt()
        .max(f64::MIN_POSITIVE);
        let t = step / norm;
        duals.lambda_time = (duals.lambda_time + t * g_lambda).max(0.0);
        duals.mu_rate += t * g_mu;
        for (v, g) in duals.nu_up.iter_mut().zip(&g_nu) {
            *v = (*v + t * g).max(0.0);
        }
        for (v, g) in duals.xi_down.iter_mut().zip(&g_xi) {
            *v = (*v + t * g).max(0.0);
        }
        mu_candidates.push(duals.mu_rate.max(0.0));

        // Check the averaged primal every so often.
        if (k + 1) % 50 == 0 || k + 1 == config.max_iters {
            let mut gamma: Vec<f64> = gamma_avg.iter().map(|g| g / weight_sum).collect();
            let time: f64 = gamma.iter().sum();
            if time > 1.0 {
                gamma.iter_mut().for_each(|g| *g /= time);
            }
            let (r_hat, power, mu_fill) = water_fill(links, &gamma, r_tot, config.gamma_floor)?;
            mu_candidates.push(mu_fill);
            let tail = mu_candidates.len().saturating_sub(8);
            let (cert, bound) = best_certificate(links, poly, floors, r_tot, &mu_candidates[tail..])?;
            let done = relative_gap(power, bound) <= config.tol_gap;
            let solution = LinkSolution { gamma, r_hat, power, duals: cert, bound, iterations: k + 1 };
            if done {
                return Ok((solution, true));
            }
            last = Some(solution);
        }
    }
    Ok((last.expect("at least one check at the final iteration"), false))
}
