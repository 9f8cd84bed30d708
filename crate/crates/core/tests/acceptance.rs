//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fdee::channel::{build_scenario, generate_drop, LinkModels, Scenario, ScenarioParams};
use fdee::harness::{self, random_valid_gains, ExperimentConfig, OutputFormat, Preset, ResultRow};
use fdee::matrix::Matrix;
use fdee::multi::{self, Duplex, SolverConfig};
use fdee::oracle::{self, MultiGrid};
use fdee::pair::{self, GainTriple};
use fdee::tradeoff::{self, TOL_SE};

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp()
}

/// Valid gains, CNRs log-uniform in [0.1, 1000], chi uniform in [0, 1].
fn population(n: usize, seed: u64) -> Vec<GainTriple> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| random_valid_gains(&mut rng)).collect()
}

fn closed_form_vs_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let gains = population(1000, 1);
    let mut worst: f64 = 0.0;
    for g in &gains {
        let rate = 10.0 * (1.0 - rng.random::<f64>());
        let closed = pair::min_power(rate, g).unwrap().0;
        let o = oracle::oracle_min_power_single(rate, g, 1e-12).unwrap();
        worst = worst.max((closed - o.value).abs() / closed);
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-4 && secs < 60.0,
        format!("1000 instances, worst relative error {worst:.2e} (<= 1e-4), {secs:.2} s (< 60 s)"),
    )
}

fn convexity_in_rate() -> Outcome {
    let gains = population(1000, 1);
    let mut violations = 0;
    let mut min_first = f64::INFINITY;
    let mut min_second = f64::INFINITY;
    for g in &gains {
        let report = oracle::convexity_probe(|r| Ok(pair::min_power(r, g)?.0), (0.05, 10.0), 200).unwrap();
        min_first = min_first.min(report.min_first_difference);
        min_second = min_second.min(report.min_second_difference);
        if report.min_first_difference <= 0.0 || report.min_second_difference < -1e-8 {
            violations += 1;
        }
    }
    outcome(
        violations == 0,
        format!(
            "1000 instances x 200 rates, violations {violations}, min first difference {min_first:.2e}, min second difference {min_second:.2e}"
        ),
    )
}

fn case_continuity() -> Outcome {
    let gains = population(400, 3);
    let mut worst_value: f64 = 0.0;
    let mut worst_slope: f64 = 0.0;
    let mut worst_fd: f64 = 0.0;
    for g in &gains {
        let re = pair::case_boundary_rate(g).unwrap();
        let boundary = pair::boundary_branch_power(re, g).unwrap();
        let interior = pair::interior_branch_power(re, g).unwrap();
        worst_value = worst_value.max((boundary - interior).abs());
        let (d_boundary, d_interior) = pair::branch_derivatives(re, g).unwrap();
        worst_slope = worst_slope.max(oracle::relative_difference(d_boundary, d_interior));
        // Analytic slopes against central differences just outside each side.
        if re > 1e-3 {
            let h = 1e-5;
            let left = oracle::finite_difference_check(
                |r| pair::boundary_branch_power(r, g),
                re - 1e-3,
                pair::branch_derivatives(re - 1e-3, g).unwrap().0,
                h,
            )
            .unwrap();
            worst_fd = worst_fd.max(left);
        }
        let right = oracle::finite_difference_check(
            |r| pair::interior_branch_power(r, g),
            re + 1e-3,
            pair::branch_derivatives(re + 1e-3, g).unwrap().1,
            1e-5,
        )
        .unwrap();
        worst_fd = worst_fd.max(right);
    }
    outcome(
        worst_value <= 1e-9 && worst_slope <= 1e-6 && worst_fd <= 1e-6,
        format!(
            "400 instances, value gap {worst_value:.2e} (<= 1e-9), slope gap {worst_slope:.2e} (<= 1e-6 rel), derivative vs finite difference {worst_fd:.2e}"
        ),
    )
}

fn fd_never_beats_hd_without_condition() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut instances = 0;
    let mut violations = 0;
    let mut worst: f64 = f64::INFINITY;
    while instances < 600 {
        let g = GainTriple {
            h_up: log_uniform(&mut rng, 0.1, 1000.0),
            h_down: log_uniform(&mut rng, 0.1, 1000.0),
            h_cci: log_uniform(&mut rng, 0.1, 1000.0),
            chi: rng.random::<f64>(),
        };
        if pair::fd_necessary_condition(&g) {
            continue;
        }
        instances += 1;
        for k in 1..=40 {
            let rate = 0.25 * k as f64;
            let hd = pair::hd_min_power(rate, g.h_up, g.h_down);
            let fd = pair::fd_min_power_any_gains(rate, &g).unwrap();
            let fd_oracle = oracle::oracle_min_power_single(rate, &g, 1e-12).unwrap().value;
            // Equality is the typical case; allow rounding only.
            let margin = fd.min(fd_oracle) / hd - 1.0;
            worst = worst.min(margin);
            if margin < -1e-12 {
                violations += 1;
            }
        }
    }
    outcome(
        violations == 0,
        format!("{instances} instances x 40 rates, violations {violations}, min (FD/HD - 1) {worst:.2e}"),
    )
}

/// Scenario from the first drop at or after `seed` whose fairness floors can
/// be met once invalid pairs are excluded.
fn random_drop_scenario(m: usize, seed: u64, chi: f64) -> Scenario {
    let params = ScenarioParams { chi, exclude_invalid_pairs: true, ..Default::default() };
    (seed..)
        .map(|s| build_scenario(&generate_drop(m, m, 150.0, s).unwrap(), &LinkModels::default(), &params).unwrap())
        .find(|s| multi::solve_min_total_power(1.0, s, &SolverConfig::default()).is_ok())
        .unwrap()
}

fn se_grid(points: usize, hi: f64) -> Vec<f64> {
    (1..=points).map(|k| hi * k as f64 / points as f64).collect()
}

fn quasi_concavity() -> Outcome {
    let config = SolverConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut failures = Vec::new();
    let grid = se_grid(400, 20.0);
    for k in 0..100 {
        let g = random_valid_gains(&mut rng);
        let s = Scenario::single_pair(g).unwrap().with_power_model(1.0, 1.0, 0.1).unwrap();
        let curve = tradeoff::trace_curve(Duplex::Fd, &s, &grid, &config).unwrap();
        if !tradeoff::unimodality_report(&curve, 1e-9).unimodal {
            failures.push(format!("single {k}"));
        }
    }
    let mut multi_ok = 0;
    for k in 0..20u64 {
        let chi = [0.0, 0.01, 0.1, 1.0][k as usize % 4];
        let s = random_drop_scenario(6, 500 + 100 * k, chi);
        match tradeoff::trace_curve(Duplex::Fd, &s, &grid, &config) {
            Ok(curve) if tradeoff::unimodality_report(&curve, 1e-9).unimodal => multi_ok += 1,
            Ok(curve) => failures.push(format!("6-pair {k} at {:?}", tradeoff::unimodality_report(&curve, 1e-9))),
            Err(e) => failures.push(format!("6-pair {k}: {e}")),
        }
    }
    outcome(
        failures.is_empty(),
        format!("100 single-pair and {multi_ok}/20 six-pair curves of 400 points unimodal; failures {failures:?}"),
    )
}

/// Two admissible pairs: one uplink user with two downlink users, or two
/// uplink users with one downlink user, default fairness floors.
fn two_pair_instance<R: Rng>(rng: &mut R, k: usize) -> Scenario {
    let a = log_uniform(rng, 1.0, 300.0);
    let b = [log_uniform(rng, 1.0, 300.0), log_uniform(rng, 1.0, 300.0)];
    let chi = rng.random::<f64>();
    let cci: Vec<f64> = b.iter().map(|&x| rng.random::<f64>() * a.min(x) / (1.0 + chi)).collect();
    if k.is_multiple_of(2) {
        Scenario::from_gains(vec![a], b.to_vec(), Matrix::from_rows(&[cci]), chi).unwrap()
    } else {
        Scenario::from_gains(b.to_vec(), vec![a], Matrix::from_rows(&[vec![cci[0]], vec![cci[1]]]), chi).unwrap()
    }
}

fn convex_solver() -> Outcome {
    let config = SolverConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst_err: f64 = 0.0;
    let mut worst_res_bound: f64 = 0.0;
    let mut worst_gap: f64 = 0.0;
    let mut worst_residual: f64 = 0.0;
    for k in 0..60 {
        let s = two_pair_instance(&mut rng, k);
        let r = 0.5 + 9.5 * rng.random::<f64>();
        let sol = multi::solve_min_total_power(r, &s, &config).unwrap();
        let o = oracle::oracle_min_power_multi(r, &s, &MultiGrid::default()).unwrap();
        worst_err = worst_err.max((sol.total_power - o.value).abs() / o.value);
        worst_res_bound = worst_res_bound.max(o.resolution / o.value);
        worst_gap = worst_gap.max(sol.gap());
        worst_residual = worst_residual.max(sol.allocation().constraint_residual(&s, r));
    }
    let mut worst_single: f64 = 0.0;
    for g in population(50, 7) {
        let s = Scenario::single_pair(g).unwrap().with_floors(0.0, 0.0).unwrap();
        for k in 1..=20 {
            let r = 0.5 * k as f64;
            let p = multi::solve_min_total_power(r, &s, &config).unwrap().total_power;
            let exact = pair::min_power(r, &g).unwrap().0;
            worst_single = worst_single.max((p - exact).abs() / exact);
        }
    }
    outcome(
        worst_err <= 0.01
            && worst_res_bound <= 0.005
            && worst_gap <= 1e-5
            && worst_residual <= 1e-6
            && worst_single <= 1e-6,
        format!(
            "60 two-pair instances: error vs oracle {worst_err:.2e} (<= 1e-2), oracle resolution {worst_res_bound:.2e} (<= 5e-3), gap {worst_gap:.2e} (<= 1e-5), residual {worst_residual:.2e} (<= 1e-6); single-pair reduction {worst_single:.2e} (<= 1e-6)"
        ),
    )
}

/// Argmax of a 1000-point grid over `[lo, hi]`, refined by a second
/// 1000-point grid spanning the two cells around it, and the largest value
/// seen.
fn dense_grid_argmax(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    let scan = |a: f64, b: f64| {
        let step = (b - a) / 999.0;
        let mut best = (a, f64::NEG_INFINITY, step);
        for k in 0..1000 {
            let x = a + k as f64 * step;
            let v = f(x);
            if v > best.1 {
                best = (x, v, step);
            }
        }
        best
    };
    let (x, _, step) = scan(lo, hi);
    let (x, v, _) = scan((x - step).max(lo), (x + step).min(hi));
    (x, v)
}

fn outer_loop() -> Outcome {
    let config = SolverConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    let mut worst_value: f64 = 0.0;
    let mut scenarios = Vec::new();
    for _ in 0..12 {
        let g = random_valid_gains(&mut rng);
        scenarios.push(Scenario::single_pair(g).unwrap().with_power_model(1.0, 1.0, 0.1).unwrap());
    }
    for k in 0..12u64 {
        scenarios.push(random_drop_scenario(2 + (k as usize % 5), 8000 + 100 * k, [0.0, 0.1][k as usize % 2]));
    }
    for s in &scenarios {
        let interval = (0.1, 25.0);
        let best = tradeoff::max_ee(Duplex::Fd, s, interval, TOL_SE, &config).unwrap();
        let ee = |x: f64| multi::ee_at(x, s, &config).unwrap();
        let (grid_x, grid_ee) = dense_grid_argmax(ee, interval.0, interval.1);
        worst = worst.max((best.se_star - grid_x).abs());
        worst_value = worst_value.max((grid_ee - best.ee_star) / grid_ee);
    }
    outcome(
        worst <= TOL_SE && worst_value <= 1e-6,
        format!(
            "{} scenarios, worst |se_star - grid argmax| {worst:.2e} (<= {TOL_SE:e}), worst grid EE excess {worst_value:.2e} (<= 1e-6 rel)",
            scenarios.len()
        ),
    )
}

type Means = BTreeMap<(u64, u64, Duplex), (f64, f64)>;

/// Mean (p_min, ee) per (sweep value, se, mode), keyed by the bit patterns of
/// the positive sweep values and SEs.
fn means(rows: &[ResultRow]) -> Means {
    harness::aggregate(rows)
        .into_iter()
        .filter(|s| !s.all_failed)
        .map(|s| ((s.sweep_value.to_bits(), s.se.to_bits(), s.mode), (s.p_min_mean.unwrap(), s.ee_mean.unwrap())))
        .collect()
}

fn series(m: &Means, mode: Duplex, by_sweep: bool, fixed: f64) -> Vec<(f64, f64, f64)> {
    m.iter()
        .filter(|((sw, se, md), _)| *md == mode && f64::from_bits(if by_sweep { *se } else { *sw }) == fixed)
        .map(|((sw, se, _), (p, ee))| (f64::from_bits(if by_sweep { *sw } else { *se }), *p, *ee))
        .collect()
}

fn trends() -> Outcome {
    let start = Instant::now();
    let mut notes = Vec::new();
    let mut passed = true;

    let curve = ExperimentConfig::preset(Preset::Curve);
    let rows = harness::run_preset(&curve).unwrap();
    let m = means(&rows);
    let chis: Vec<f64> = curve.sweep.values.iter().map(|v| v.map_or(0.0, |db| 10f64.powf(db / 10.0))).collect();
    let mut rises = Vec::new();
    let mut increasing = true;
    for &chi in &chis {
        let s = series(&m, Duplex::Fd, false, chi);
        increasing &= s.len() == curve.se_grid.len() && s.windows(2).all(|w| w[1].1 > w[0].1);
        rises.push(s.last().unwrap().1 - s.first().unwrap().1);
    }
    let mut ordered_in_chi = true;
    for &se in &curve.se_grid {
        let s = series(&m, Duplex::Fd, true, se);
        ordered_in_chi &= s.windows(2).all(|w| w[1].1 >= w[0].1);
    }
    let faster = rises.windows(2).all(|w| w[1] > w[0]);
    passed &= increasing && ordered_in_chi && faster;
    notes.push(format!(
        "(a) P strictly increasing in SE: {increasing}, nondecreasing in chi at every SE: {ordered_in_chi}, rise over SE grid {rises:?} strictly increasing in chi: {faster}"
    ));

    let rsi = ExperimentConfig::preset(Preset::RsiSweep);
    let m = means(&harness::run_preset(&rsi).unwrap());
    let s = series(&m, Duplex::Fd, true, 8.0);
    let ok = s.len() == rsi.sweep.values.len() && s.windows(2).all(|w| w[1].2 <= w[0].2);
    passed &= ok;
    let ees: Vec<f64> = s.iter().map(|x| x.2 / 1e6).collect();
    notes.push(format!("(b) FD EE nonincreasing in chi: {ok} {ees:.2?} Mbit/J"));

    let users = ExperimentConfig::preset(Preset::UserSweep);
    let m = means(&harness::run_preset(&users).unwrap());
    let fd = series(&m, Duplex::Fd, true, 8.0);
    let hd = series(&m, Duplex::Hd, true, 8.0);
    let fd_ok = fd.len() == 9 && fd.windows(2).all(|w| w[1].2 >= w[0].2);
    let hd_ok = hd.len() == 9 && hd.windows(2).all(|w| w[1].2 <= w[0].2);
    passed &= fd_ok && hd_ok;
    let fd_ee: Vec<f64> = fd.iter().map(|x| x.2 / 1e6).collect();
    let hd_ee: Vec<f64> = hd.iter().map(|x| x.2 / 1e6).collect();
    notes.push(format!("(c) FD EE nondecreasing in M: {fd_ok} {fd_ee:.2?}; HD EE nonincreasing in M: {hd_ok} {hd_ee:.2?}"));

    let secs = start.elapsed().as_secs_f64();
    passed &= secs < 600.0;
    notes.push(format!(
        "drops: {}, {}, {}; {secs:.1} s (< 600 s)",
        curve.n_drops, rsi.n_drops, users.n_drops
    ));
    outcome(passed, notes.join("\n      "))
}

fn determinism() -> Outcome {
    let mut identical = true;
    let mut sizes = Vec::new();
    for preset in [Preset::Curve, Preset::RsiSweep, Preset::UserSweep, Preset::SinglePair] {
        let mut config = ExperimentConfig::preset(preset);
        config.n_drops = 3;
        let render = || {
            let rows = harness::run_preset(&config).unwrap();
            let mut buf = Vec::new();
            harness::write_records(&rows, OutputFormat::Csv, &mut buf, std::path::Path::new("-")).unwrap();
            buf
        };
        let (a, b) = (render(), render());
        identical &= a == b;
        sizes.push(a.len());
    }
    outcome(identical, format!("two runs of each preset byte-identical: {identical} (CSV sizes {sizes:?})"))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("closed-form minimum power vs oracle", closed_form_vs_oracle),
        ("minimum power monotone and convex in rate", convexity_in_rate),
        ("continuity at the case boundary", case_continuity),
        ("FD never beats HD when the necessary condition fails", fd_never_beats_hd_without_condition),
        ("EE-SE curves unimodal", quasi_concavity),
        ("multi-user solver vs grid oracle", convex_solver),
        ("max-EE search vs dense grid", outer_loop),
        ("trend reproduction", trends),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let tag = if result.passed { "PASS" } else { "FAIL" };
        println!("{tag} criterion {}: {name} [{:.1} s]\n      {}", k + 1, start.elapsed().as_secs_f64(), result.detail);
        if !result.passed {
            failed += 1;
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
