//! Minimum total transmit power over time shares and time-averaged rates.
//!
//! With `R_hat = gamma * R`, each pair's cost `gamma * P(R_hat / gamma)` is a
//! perspective of the convex minimum-power curve, so the problem
//!
//! ```text
//! minimize   sum gamma_ij P_ij(R_hat_ij / gamma_ij)
//! subject to sum gamma_ij <= 1
//!            sum R_hat_ij = R_tot
//!            sum_j gamma_ij >= gamma_min_up,   sum_i gamma_ij >= gamma_min_down
//! ```
//!
//! is jointly convex. It is solved by dualizing the rate equality. For a
//! multiplier `mu` every pair independently picks the rate that maximizes
//! `mu R - P(R)`, and the time shares then solve a linear program over the
//! fairness polytope. The concave dual in `mu` is maximized by a cutting-plane
//! model built from the LP vertices; the primal is recovered by mixing the
//! two vertices active at the optimum and re-solving the rates for those
//! time shares exactly. The gap is certified through the fully decomposed
//! Lagrangian (see [`pair_subproblem`]).

mod cost;
mod master;
mod subgradient;

use serde::{Deserialize, Serialize};

use self::cost::{Link, LinkCost};
use self::master::TimePolytope;
use crate::channel::Scenario;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::numeric::{bisect, expand_upper};
use crate::pair::{self, GainTriple};

/// Full-duplex pairing or the half-duplex baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Duplex {
    #[serde(rename = "FD")]
    Fd,
    #[serde(rename = "HD")]
    Hd,
}

impl std::fmt::Display for Duplex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Duplex::Fd => "FD",
            Duplex::Hd => "HD",
        })
    }
}

/// Time shares and time-averaged rates for every FD pair `(i, j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    pub gamma: Matrix,
    pub r_hat: Matrix,
}

/// Time share and time-averaged rate of one HD link.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LinkShare {
    pub gamma: f64,
    pub r_hat: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HdAllocation {
    pub uplink: Vec<LinkShare>,
    pub downlink: Vec<LinkShare>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Shares {
    Fd(Allocation),
    Hd(HdAllocation),
}

/// Largest violation of the constraint set, taken over every constraint.
fn residual_of(
    gamma_rate: impl Iterator<Item = (f64, f64)>,
    row_sums: &[f64],
    col_sums: &[f64],
    scenario: &Scenario,
    r_tot: f64,
) -> f64 {
    let mut worst: f64 = 0.0;
    let (mut time, mut rate) = (0.0, 0.0);
    for (g, r) in gamma_rate {
        time += g;
        rate += r;
        worst = worst.max(-g).max(g - 1.0).max(-r);
        if g == 0.0 && r > 0.0 {
            worst = worst.max(r);
        }
    }
    worst = worst.max(time - 1.0).max((rate - r_tot).abs());
    for s in row_sums {
        worst = worst.max(scenario.gamma_min_up - s);
    }
    for s in col_sums {
        worst = worst.max(scenario.gamma_min_down - s);
    }
    worst.max(0.0)
}

impl Allocation {
    /// Largest constraint violation against `scenario` at total rate `r_tot`.
    pub fn constraint_residual(&self, scenario: &Scenario, r_tot: f64) -> f64 {
        residual_of(
            self.gamma.as_slice().iter().copied().zip(self.r_hat.as_slice().iter().copied()),
            &self.gamma.row_sums(),
            &self.gamma.col_sums(),
            scenario,
            r_tot,
        )
    }

    /// `sum gamma_ij P_ij(R_hat_ij / gamma_ij)` recomputed from the closed forms.
    pub fn total_power(&self, scenario: &Scenario) -> Result<f64> {
        let mut total = 0.0;
        for ((i, j), g) in self.gamma.iter() {
            let r = self.r_hat[(i, j)];
            if r > 0.0 {
                total += perspective_cost(g, r, &scenario.pair_gains(i, j))?;
            }
        }
        Ok(total)
    }
}

impl HdAllocation {
    pub fn constraint_residual(&self, scenario: &Scenario, r_tot: f64) -> f64 {
        let rows: Vec<f64> = self.uplink.iter().map(|s| s.gamma).collect();
        let cols: Vec<f64> = self.downlink.iter().map(|s| s.gamma).collect();
        residual_of(
            self.uplink.iter().chain(&self.downlink).map(|s| (s.gamma, s.r_hat)),
            &rows,
            &cols,
            scenario,
            r_tot,
        )
    }
}

/// Lagrange multipliers of the decomposed problem.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DualVars {
    /// Frame-length constraint, `>= 0`.
    pub lambda_time: f64,
    /// Rate equality, unrestricted in sign.
    pub mu_rate: f64,
    /// Uplink fairness floors, `>= 0`.
    pub nu_up: Vec<f64>,
    /// Downlink fairness floors, `>= 0`.
    pub xi_down: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DualMethod {
    /// Cutting-plane maximization of the dual in the rate multiplier with an
    /// exact LP over time shares.
    CuttingPlane,
    /// Projected subgradient ascent on all multipliers. Step `k` has length
    /// `step_a / (step_b + k)` along the normalized subgradient; primal
    /// iterates are averaged with the step lengths as weights.
    Subgradient { step_a: f64, step_b: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub max_iters: usize,
    pub method: DualMethod,
    /// Relative duality gap accepted at return.
    pub tol_gap: f64,
    /// Largest accepted constraint violation.
    pub tol_feas: f64,
    /// Time shares at or below this are treated as zero time.
    pub gamma_floor: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 200,
            method: DualMethod::CuttingPlane,
            tol_gap: 1e-5,
            tol_feas: 1e-6,
            gamma_floor: 1e-9,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let tolerances_ok = self.tol_gap > 0.0 && self.tol_feas > 0.0;
        let floor_ok = self.gamma_floor > 0.0 && self.gamma_floor <= 1e-3;
        let steps_ok = match self.method {
            DualMethod::CuttingPlane => true,
            DualMethod::Subgradient { step_a, step_b } => step_a > 0.0 && step_b >= 0.0,
        };
        if tolerances_ok && floor_ok && steps_ok && self.max_iters > 0 {
            Ok(())
        } else {
            Err(Error::Configuration(format!("invalid solver config {self:?}")))
        }
    }
}

/// Optimal (or best found) solution of the minimum-power problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSolution {
    pub total_power: f64,
    pub shares: Shares,
    pub duals: DualVars,
    /// Lagrangian lower bound on the optimal total power.
    pub dual_bound: f64,
    pub max_residual: f64,
    pub iterations: usize,
}

impl PowerSolution {
    /// Relative duality gap `(P - bound) / P`; zero when both vanish.
    pub fn gap(&self) -> f64 {
        relative_gap(self.total_power, self.dual_bound)
    }

    /// FD allocation. Panics on an HD solution.
    pub fn allocation(&self) -> &Allocation {
        match &self.shares {
            Shares::Fd(a) => a,
            Shares::Hd(_) => panic!("half-duplex solution has no pair allocation"),
        }
    }

    /// HD allocation. Panics on an FD solution.
    pub fn hd_allocation(&self) -> &HdAllocation {
        match &self.shares {
            Shares::Hd(a) => a,
            Shares::Fd(_) => panic!("full-duplex solution has no link allocation"),
        }
    }
}

pub(crate) fn relative_gap(primal: f64, bound: f64) -> f64 {
    if primal <= 0.0 && bound <= 0.0 {
        return 0.0;
    }
    ((primal - bound) / primal.abs().max(f64::MIN_POSITIVE)).max(0.0)
}

/// `gamma * min_power(r_hat / gamma)`, closed at the origin.
pub fn perspective_cost(gamma: f64, r_hat: f64, gains: &GainTriple) -> Result<f64> {
    if !(r_hat >= 0.0) || !(0.0..=1.0).contains(&gamma) {
        return Err(Error::Domain(format!("need gamma in [0, 1] and r_hat >= 0, got ({gamma}, {r_hat})")));
    }
    if r_hat == 0.0 {
        return Ok(0.0);
    }
    if gamma == 0.0 {
        return Err(Error::Domain(format!("rate {r_hat} with zero time share has infinite cost")));
    }
    Ok(gamma * pair::min_power(r_hat / gamma, gains)?.0)
}

/// Minimizer of one pair's term of the Lagrangian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubproblemChoice {
    pub gamma: f64,
    pub r_hat: f64,
    /// Minimum value of the pair's Lagrangian term (always `<= 0`).
    pub value: f64,
}

fn link_subproblem(cost: &LinkCost, price: f64, mu: f64) -> Result<SubproblemChoice> {
    // The term is gamma * (P(rho) - mu rho + price) with rho = r_hat / gamma,
    // linear in gamma once rho is optimal.
    let (profit, rate) = if mu > 0.0 { cost.profit(mu)? } else { (0.0, 0.0) };
    let per_time = price - profit;
    Ok(if per_time < 0.0 {
        SubproblemChoice { gamma: 1.0, r_hat: rate, value: per_time }
    } else {
        SubproblemChoice { gamma: 0.0, r_hat: 0.0, value: 0.0 }
    })
}

/// Minimize `perspective_cost(gamma, r_hat) + (lambda - nu_i - xi_j) gamma - mu r_hat`
/// over `gamma in [0, 1]`, `r_hat >= 0` for pair `(i, j)`.
///
/// The term is positively homogeneous, so for fixed `rho = r_hat / gamma` it is
/// linear in `gamma`. The inner optimum satisfies `P'(rho) = mu` and the outer
/// one sits at an endpoint; ties go to `gamma = 0`.
pub fn pair_subproblem(duals: &DualVars, i: usize, j: usize, gains: &GainTriple) -> Result<SubproblemChoice> {
    let nu = duals.nu_up.get(i).copied().unwrap_or(0.0);
    let xi = duals.xi_down.get(j).copied().unwrap_or(0.0);
    link_subproblem(&LinkCost::Pair(*gains), duals.lambda_time - nu - xi, duals.mu_rate)
}

/// Dual function value at `duals` for the given links.
fn dual_value(links: &[Link], duals: &DualVars, r_tot: f64, floors: (f64, f64)) -> Result<f64> {
    let mut value = -duals.lambda_time + duals.mu_rate * r_tot
        + floors.0 * duals.nu_up.iter().sum::<f64>()
        + floors.1 * duals.xi_down.iter().sum::<f64>();
    for link in links {
        let nu = link.up.map_or(0.0, |i| duals.nu_up[i]);
        let xi = link.down.map_or(0.0, |j| duals.xi_down[j]);
        value += link_subproblem(&link.cost, duals.lambda_time - nu - xi, duals.mu_rate)?.value;
    }
    Ok(value)
}

fn fd_links(scenario: &Scenario) -> Result<Vec<Link>> {
    let mut links = Vec::new();
    for i in 0..scenario.uplink_users() {
        for j in 0..scenario.downlink_users() {
            let gains = scenario.pair_gains(i, j);
            if pair::fd_necessary_condition(&gains) {
                links.push(Link { up: Some(i), down: Some(j), cost: LinkCost::Pair(gains) });
            } else if !scenario.exclude_invalid_pairs {
                return Err(Error::PreconditionViolated(format!(
                    "pair ({i}, {j}) fails h_cci (1 + chi) < min(h_up, h_down): {gains:?}"
                )));
            }
        }
    }
    Ok(links)
}

fn hd_links(scenario: &Scenario) -> Vec<Link> {
    let up = scenario.h_up.iter().enumerate().map(|(i, &h)| Link {
        up: Some(i),
        down: None,
        cost: LinkCost::Single(h),
    });
    let down = scenario.h_down.iter().enumerate().map(|(j, &h)| Link {
        up: None,
        down: Some(j),
        cost: LinkCost::Single(h),
    });
    up.chain(down).collect()
}

/// Solution over a generic link set, before mapping back to pairs or links.
#[derive(Debug, Clone)]
pub(crate) struct LinkSolution {
    pub gamma: Vec<f64>,
    pub r_hat: Vec<f64>,
    pub power: f64,
    pub duals: DualVars,
    pub bound: f64,
    pub iterations: usize,
}

/// Exact rates for fixed time shares: equalize marginal power across active
/// links so that the time-averaged rates sum to `r_tot`.
pub(crate) fn water_fill(links: &[Link], gamma: &[f64], r_tot: f64, floor: f64) -> Result<(Vec<f64>, f64, f64)> {
    let active: Vec<usize> = (0..links.len()).filter(|&l| gamma[l] > floor).collect();
    if r_tot == 0.0 {
        return Ok((vec![0.0; links.len()], 0.0, 0.0));
    }
    if active.is_empty() {
        return Err(Error::Solver("no link has positive time share".into()));
    }
    let delivered = |mu: f64| -> f64 {
        active
            .iter()
            .map(|&l| gamma[l] * links[l].cost.rate_at_marginal(mu).unwrap_or(f64::NAN))
            .sum::<f64>()
    };
    let hi = expand_upper(1e-12, |mu| delivered(mu) >= r_tot)?;
    let mu = bisect(|mu| delivered(mu) - r_tot, 0.0, hi)?;
    let mut r_hat = vec![0.0; links.len()];
    for &l in &active {
        r_hat[l] = gamma[l] * links[l].cost.rate_at_marginal(mu)?;
    }
    let sum: f64 = r_hat.iter().sum();
    if !(sum > 0.0) {
        return Err(Error::Solver(format!("water-filling delivered {sum} at mu = {mu}")));
    }
    let scale = r_tot / sum;
    let mut power = 0.0;
    for &l in &active {
        r_hat[l] *= scale;
        if r_hat[l] > 0.0 {
            power += gamma[l] * links[l].cost.power(r_hat[l] / gamma[l])?;
        }
    }
    Ok((r_hat, power, mu))
}

fn profits(links: &[Link], mu: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut w = Vec::with_capacity(links.len());
    let mut rho = Vec::with_capacity(links.len());
    for link in links {
        let (p, r) = link.cost.profit(mu)?;
        w.push(p);
        rho.push(r);
    }
    Ok((w, rho))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Index of the vertex with the largest model value at `mu`, its value and
/// its delivered rate.
fn model_argmax(vertices: &[Vec<f64>], w: &[f64], rho: &[f64]) -> (usize, f64, f64) {
    let mut best = (0, f64::NEG_INFINITY, 0.0);
    for (v, gamma) in vertices.iter().enumerate() {
        let value = dot(gamma, w);
        let rate = dot(gamma, rho);
        // Ties prefer the smaller rate; the recovery step mixes both ends.
        if value > best.1 || (value == best.1 && rate < best.2) {
            best = (v, value, rate);
        }
    }
    best
}

/// Maximize `mu r - max_v <gamma_v, w(mu)>` over `mu >= 0` by bisection on
/// its supergradient. Returns the final bracket.
fn maximize_model(links: &[Link], vertices: &[Vec<f64>], r_tot: f64) -> Result<(f64, f64)> {
    let excess = |mu: f64| -> Result<f64> {
        let (w, rho) = profits(links, mu)?;
        Ok(model_argmax(vertices, &w, &rho).2 - r_tot)
    };
    let mut lo = 0.0;
    let mut hi = 1e-12;
    while excess(hi)? < 0.0 {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::Solver("rate multiplier diverged".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if excess(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo, hi))
}


/// Solves the problem over a generic link set. The flag reports whether the
/// method's own stopping rule was met before the iteration cap.
fn solve_links(
    links: &[Link],
    m: usize,
    n: usize,
    floors: (f64, f64),
    r_tot: f64,
    config: &SolverConfig,
) -> Result<(LinkSolution, bool)> {
    config.validate()?;
    if !(r_tot >= 0.0) || !r_tot.is_finite() {
        return Err(Error::Domain(format!("total rate must be finite and >= 0, got {r_tot}")));
    }
    let poly = TimePolytope::new(links, m, n, floors.0, floors.1);
    if r_tot == 0.0 {
        let gamma = poly.maximize(&vec![0.0; links.len()])?;
        let duals = DualVars { nu_up: vec![0.0; m], xi_down: vec![0.0; n], ..Default::default() };
        let solution = LinkSolution {
            r_hat: vec![0.0; links.len()],
            gamma,
            power: 0.0,
            duals,
            bound: 0.0,
            iterations: 0,
        };
        return Ok((solution, true));
    }
    if links.is_empty() {
        return Err(Error::Configuration("no admissible links to carry rate".into()));
    }
    match config.method {
        DualMethod::CuttingPlane => cutting_plane(links, &poly, floors, r_tot, config),
        DualMethod::Subgradient { step_a, step_b } => subgradient::solve(
            links,
            &poly,
            (m, n),
            floors,
            r_tot,
            config,
            (step_a, step_b),
        ),
    }
}

fn cutting_plane(
    links: &[Link],
    poly: &TimePolytope,
    floors: (f64, f64),
    r_tot: f64,
    config: &SolverConfig,
) -> Result<(LinkSolution, bool)> {
    let uniform = vec![1.0 / links.len() as f64; links.len()];
    let (_, _, mu0) = water_fill(links, &uniform, r_tot, config.gamma_floor)?;
    let (w0, _) = profits(links, mu0)?;
    let mut vertices = vec![poly.maximize(&w0)?];

    let mut converged = false;
    let mut iterations = 0;
    let (mut lo, mut hi) = (0.0, 0.0);
    while iterations < config.max_iters {
        iterations += 1;
        (lo, hi) = maximize_model(links, &vertices, r_tot)?;
        let mu = 0.5 * (lo + hi);
        let (w, rho) = profits(links, mu)?;
        let (_, model_value, _) = model_argmax(&vertices, &w, &rho);
        let candidate = poly.maximize(&w)?;
        let value = dot(&candidate, &w);
        if value <= model_value + 1e-13 * model_value.abs().max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
        vertices.push(candidate);
    }

    // Mix the vertices active on either side of the optimal multiplier.
    let mu = 0.5 * (lo + hi);
    let (w_lo, rho_lo) = profits(links, lo)?;
    let (w_hi, rho_hi) = profits(links, hi)?;
    let (_, rho) = profits(links, mu)?;
    let a = model_argmax(&vertices, &w_lo, &rho_lo).0;
    let b = model_argmax(&vertices, &w_hi, &rho_hi).0;
    let (s_a, s_b) = (dot(&vertices[a], &rho), dot(&vertices[b], &rho));
    let theta = if a == b || s_b - s_a <= 0.0 {
        1.0
    } else {
        ((s_b - r_tot) / (s_b - s_a)).clamp(0.0, 1.0)
    };
    let gamma: Vec<f64> =
        vertices[a].iter().zip(&vertices[b]).map(|(x, y)| theta * x + (1.0 - theta) * y).collect();
    let (r_hat, power, mu_fill) = water_fill(links, &gamma, r_tot, config.gamma_floor)?;
    let (duals, bound) = best_certificate(links, poly, floors, r_tot, &[mu, mu_fill])?;
    Ok((LinkSolution { gamma, r_hat, power, duals, bound, iterations }, converged))
}

/// Completes each candidate rate multiplier with optimal time multipliers and
/// keeps the one with the largest dual value.
pub(crate) fn best_certificate(
    links: &[Link],
    poly: &TimePolytope,
    floors: (f64, f64),
    r_tot: f64,
    candidates: &[f64],
) -> Result<(DualVars, f64)> {
    let mut best: Option<(DualVars, f64)> = None;
    for &mu in candidates {
        let (w, _) = profits(links, mu)?;
        let t = poly.duals(&w)?;
        let duals = DualVars { lambda_time: t.lambda, mu_rate: mu, nu_up: t.nu, xi_down: t.xi };
        let bound = dual_value(links, &duals, r_tot, floors)?;
        if best.as_ref().is_none_or(|(_, b)| bound > *b) {
            best = Some((duals, bound));
        }
    }
    best.ok_or_else(|| Error::Solver("no dual candidate".into()))
}

fn finish(
    solution: LinkSolution,
    converged: bool,
    shares: Shares,
    residual: f64,
    config: &SolverConfig,
) -> Result<PowerSolution> {
    let result = PowerSolution {
        total_power: solution.power,
        shares,
        duals: solution.duals,
        dual_bound: solution.bound,
        max_residual: residual,
        iterations: solution.iterations,
    };
    let gap = result.gap();
    if converged && gap <= config.tol_gap && residual <= config.tol_feas {
        Ok(result)
    } else {
        Err(Error::Convergence { iterations: result.iterations, gap, best: Box::new(result) })
    }
}

/// Minimum total FD transmit power delivering `r_tot` bit/s/Hz, with the
/// optimal time shares and time-averaged rates.
///
/// Pairs failing `h_cci (1 + chi) < min(h_up, h_down)` are rejected with
/// [`Error::PreconditionViolated`] unless the scenario excludes them, in
/// which case their time share is fixed at zero.
pub fn solve_min_total_power(r_tot: f64, scenario: &Scenario, config: &SolverConfig) -> Result<PowerSolution> {
    scenario.validate()?;
    let (m, n) = (scenario.uplink_users(), scenario.downlink_users());
    let links = fd_links(scenario)?;
    let floors = (scenario.gamma_min_up, scenario.gamma_min_down);
    let (solution, converged) = solve_links(&links, m, n, floors, r_tot, config)?;
    let mut gamma = Matrix::zeros(m, n);
    let mut r_hat = Matrix::zeros(m, n);
    for (l, link) in links.iter().enumerate() {
        let (i, j) = (link.up.expect("pair link"), link.down.expect("pair link"));
        gamma[(i, j)] = solution.gamma[l];
        r_hat[(i, j)] = solution.r_hat[l];
    }
    let allocation = Allocation { gamma, r_hat };
    let residual = allocation.constraint_residual(scenario, r_tot);
    finish(solution, converged, Shares::Fd(allocation), residual, config)
}

/// Half-duplex baseline: the same time-sharing problem over the `M + N`
/// single links, each with cost `(2^R - 1) / h`.
pub fn hd_baseline_min_power(r_tot: f64, scenario: &Scenario, config: &SolverConfig) -> Result<PowerSolution> {
    scenario.validate()?;
    let (m, n) = (scenario.uplink_users(), scenario.downlink_users());
    let links = hd_links(scenario);
    let floors = (scenario.gamma_min_up, scenario.gamma_min_down);
    let (solution, converged) = solve_links(&links, m, n, floors, r_tot, config)?;
    let mut uplink = vec![LinkShare::default(); m];
    let mut downlink = vec![LinkShare::default(); n];
    for (l, link) in links.iter().enumerate() {
        let share = LinkShare { gamma: solution.gamma[l], r_hat: solution.r_hat[l] };
        match (link.up, link.down) {
            (Some(i), None) => uplink[i] = share,
            (None, Some(j)) => downlink[j] = share,
            _ => unreachable!("single links have one endpoint"),
        }
    }
    let allocation = HdAllocation { uplink, downlink };
    let residual = allocation.constraint_residual(scenario, r_tot);
    finish(solution, converged, Shares::Hd(allocation), residual, config)
}

pub fn min_total_power(mode: Duplex, r_tot: f64, scenario: &Scenario, config: &SolverConfig) -> Result<PowerSolution> {
    match mode {
        Duplex::Fd => solve_min_total_power(r_tot, scenario, config),
        Duplex::Hd => hd_baseline_min_power(r_tot, scenario, config),
    }
}

/// `W r / (omega P + P_fix)` in bit/J.
pub fn ee_from_power(r_tot: f64, power_w: f64, scenario: &Scenario) -> f64 {
    if r_tot == 0.0 {
        return 0.0;
    }
    scenario.bandwidth_hz * r_tot / (scenario.omega * power_w + scenario.p_fix_w)
}

/// Energy efficiency of the optimal FD allocation at `r_tot`, in bit/J.
pub fn ee_at(r_tot: f64, scenario: &Scenario, config: &SolverConfig) -> Result<f64> {
    ee_for_mode(Duplex::Fd, r_tot, scenario, config)
}

pub fn ee_for_mode(mode: Duplex, r_tot: f64, scenario: &Scenario, config: &SolverConfig) -> Result<f64> {
    if r_tot == 0.0 {
        return Ok(0.0);
    }
    let solution = min_total_power(mode, r_tot, scenario, config)?;
    Ok(ee_from_power(r_tot, solution.total_power, scenario))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p3_gains() -> GainTriple {
        GainTriple::new(20.0, 10.0, 0.5, 0.2).unwrap()
    }

    fn no_floors(s: Scenario) -> Scenario {
        s.with_floors(0.0, 0.0).unwrap()
    }

    fn two_by_two() -> Scenario {
        let cci = Matrix::from_rows(&[vec![0.3, 0.8], vec![1.1, 0.2]]);
        Scenario::from_gains(vec![20.0, 6.0], vec![10.0, 15.0], cci, 0.2).unwrap()
    }

    #[test]
    fn perspective_examples() {
        let g = p3_gains();
        assert_eq!(perspective_cost(1.0, 3.0, &g).unwrap(), pair::min_power(3.0, &g).unwrap().0);
        let p1 = GainTriple::new(5.0, 10.0, 0.5, 0.2).unwrap();
        assert!((perspective_cost(0.5, 0.5, &p1).unwrap() - 0.05).abs() < 1e-15);
        assert_eq!(perspective_cost(0.0, 0.0, &g).unwrap(), 0.0);
        assert!(matches!(perspective_cost(0.0, 1.0, &g), Err(Error::Domain(_))));
    }

    #[test]
    fn subproblem_without_rate_reward() {
        let g = p3_gains();
        let duals = DualVars { lambda_time: 0.3, mu_rate: -1.0, nu_up: vec![1.0], xi_down: vec![0.0] };
        let c = pair_subproblem(&duals, 0, 0, &g).unwrap();
        assert_eq!(c.r_hat, 0.0);
        let zero = DualVars::default();
        let c = pair_subproblem(&zero, 0, 0, &g).unwrap();
        assert_eq!((c.gamma, c.r_hat, c.value), (0.0, 0.0, 0.0));
    }

    #[test]
    fn subproblem_stationarity_matches_finite_difference() {
        let g = p3_gains();
        let duals = DualVars { mu_rate: 1.5, ..Default::default() };
        let c = pair_subproblem(&duals, 0, 0, &g).unwrap();
        assert_eq!(c.gamma, 1.0);
        let h = 1e-6;
        let p = |r: f64| pair::min_power(r, &g).unwrap().0;
        let fd = (p(c.r_hat + h) - p(c.r_hat - h)) / (2.0 * h);
        assert!((fd - 1.5).abs() < 1e-6, "{fd}");
    }

    #[test]
    fn single_pair_reduction() {
        let s = no_floors(Scenario::single_pair(p3_gains()).unwrap());
        for k in 1..=20 {
            let r = 0.5 * k as f64;
            let sol = solve_min_total_power(r, &s, &SolverConfig::default()).unwrap();
            let exact = pair::min_power(r, &p3_gains()).unwrap().0;
            assert!((sol.total_power - exact).abs() <= 1e-6 * exact, "{r}");
            let a = sol.allocation();
            assert!((a.gamma[(0, 0)] - 1.0).abs() < 1e-9);
            assert!((a.r_hat[(0, 0)] - r).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_rate_costs_nothing() {
        let s = two_by_two();
        let sol = solve_min_total_power(0.0, &s, &SolverConfig::default()).unwrap();
        assert_eq!(sol.total_power, 0.0);
        assert!(sol.max_residual <= 1e-9);
        assert_eq!(ee_at(0.0, &s, &SolverConfig::default()).unwrap(), 0.0);
    }

    #[test]
    fn two_by_two_certified() {
        let s = two_by_two();
        let cfg = SolverConfig::default();
        for r in [0.5, 2.0, 6.0, 10.0] {
            let sol = solve_min_total_power(r, &s, &cfg).unwrap();
            assert!(sol.gap() <= 1e-5, "gap {}", sol.gap());
            let a = sol.allocation();
            assert!(a.constraint_residual(&s, r) <= 1e-6);
            let recomputed = a.total_power(&s).unwrap();
            assert!((recomputed - sol.total_power).abs() <= 1e-9 * recomputed);
        }
    }

    #[test]
    fn invalid_pair_rejected_or_excluded() {
        let cci = Matrix::from_rows(&[vec![0.1, 50.0], vec![50.0, 0.1]]);
        let s = Scenario::from_gains(vec![10.0, 10.0], vec![10.0, 10.0], cci, 0.0).unwrap();
        let cfg = SolverConfig::default();
        assert!(matches!(solve_min_total_power(1.0, &s, &cfg), Err(Error::PreconditionViolated(_))));
        let s = s.excluding_invalid_pairs(true);
        let sol = solve_min_total_power(1.0, &s, &cfg).unwrap();
        assert_eq!(sol.allocation().gamma[(0, 1)], 0.0);
        assert_eq!(sol.allocation().gamma[(1, 0)], 0.0);
    }

    #[test]
    fn infeasible_floors_after_exclusion() {
        let cci = Matrix::from_rows(&[vec![0.1, 50.0], vec![50.0, 50.0]]);
        let s = Scenario::from_gains(vec![10.0, 10.0], vec![10.0, 10.0], cci, 0.0)
            .unwrap()
            .excluding_invalid_pairs(true);
        assert!(matches!(solve_min_total_power(1.0, &s, &SolverConfig::default()), Err(Error::Configuration(_))));
    }

    #[test]
    fn hd_single_uplink() {
        // Downlink so weak that it never gets rate.
        let s = no_floors(Scenario::from_gains(vec![20.0], vec![1e-12], Matrix::zeros(1, 1), 0.0).unwrap());
        let sol = hd_baseline_min_power(3.0, &s, &SolverConfig::default()).unwrap();
        let a = sol.hd_allocation();
        assert!((a.uplink[0].gamma - 1.0).abs() < 1e-9);
        assert!((sol.total_power - 7.0 / 20.0).abs() < 1e-9);
    }

    #[test]
    fn hd_equal_links() {
        // Equal CNRs: any split of the full frame costs (2^r - 1) / h.
        let s = Scenario::from_gains(vec![8.0, 8.0], vec![8.0, 8.0], Matrix::filled(2, 2, 0.1), 0.0).unwrap();
        let sol = hd_baseline_min_power(4.0, &s, &SolverConfig::default()).unwrap();
        assert!((sol.total_power - 15.0 / 8.0).abs() < 1e-9 * 15.0 / 8.0);
        assert!(sol.gap() <= 1e-5);
    }

    #[test]
    fn fd_beats_hd_with_small_cci() {
        let cci = Matrix::filled(2, 2, 0.01);
        let s = Scenario::from_gains(vec![20.0, 15.0], vec![12.0, 30.0], cci, 0.1).unwrap();
        let cfg = SolverConfig::default();
        for r in [1.0, 4.0, 8.0] {
            let fd = solve_min_total_power(r, &s, &cfg).unwrap().total_power;
            let hd = hd_baseline_min_power(r, &s, &cfg).unwrap().total_power;
            assert!(fd <= hd, "{r}: {fd} > {hd}");
        }
    }

    #[test]
    fn ee_decreases_with_fixed_power() {
        let s = no_floors(Scenario::single_pair(p3_gains()).unwrap()).with_power_model(1.0, 1.0, 0.1).unwrap();
        let cfg = SolverConfig::default();
        let ee = ee_at(3.0, &s, &cfg).unwrap();
        let exact = 3.0 / (pair::min_power(3.0, &p3_gains()).unwrap().0 + 0.1);
        assert!((ee - exact).abs() < 1e-9 * exact);
        let doubled = s.with_power_model(1.0, 1.0, 0.2).unwrap();
        assert!(ee_at(3.0, &doubled, &cfg).unwrap() < ee);
    }

    #[test]
    fn subgradient_gets_close() {
        let s = two_by_two();
        let exact = solve_min_total_power(4.0, &s, &SolverConfig::default()).unwrap().total_power;
        let cfg = SolverConfig {
            max_iters: 2000,
            method: DualMethod::Subgradient { step_a: 0.5, step_b: 10.0 },
            ..Default::default()
        };
        let best = match solve_min_total_power(4.0, &s, &cfg) {
            Ok(sol) => sol,
            Err(Error::Convergence { best, .. }) => *best,
            Err(e) => panic!("{e}"),
        };
        assert!(best.dual_bound <= exact * (1.0 + 1e-9));
        // Averaged time shares may be slightly infeasible, so the power can
        // land on either side of the optimum.
        assert!((best.total_power - exact).abs() / exact < 0.05, "{} vs {exact}", best.total_power);
    }

    #[test]
    fn convergence_error_carries_iterate() {
        let s = two_by_two();
        let cfg = SolverConfig { max_iters: 1, ..Default::default() };
        match solve_min_total_power(6.0, &s, &cfg) {
            Ok(sol) => assert!(sol.gap() <= 1e-5),
            Err(Error::Convergence { best, iterations, .. }) => {
                assert_eq!(iterations, 1);
                assert!(best.total_power > 0.0);
            }
            Err(e) => panic!("{e}"),
        }
    }
}
