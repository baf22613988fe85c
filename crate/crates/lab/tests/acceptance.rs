//! Acceptance suite: one line per criterion, `PASS` or `FAIL` with the
//! measured numbers. Statistical criteria that miss their tolerance are
//! reported, not hidden; the process fails only when an exact identity
//! (criteria 6, 10's property checks, 12) is violated or a criterion
//! cannot run at all.

use std::path::Path;
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config as PropConfig, TestRunner};
use rwrp::commands::{env_seed, event_rows, run, Command};
use rwrp::config::ExperimentConfig;
use rwrp::RayonExecutor;
use rwrp_core::asymptotics::{constant_potential_alpha, default_tilt, report, truncated_law};
use rwrp_core::coarse::{certify_region, GoodnessParams, Mode};
use rwrp_core::estimators::{
    annealed_alpha, annealed_cost, enumerate_annealed, exact_passage, exact_passage_converged, fit_exponent,
    quenched_alpha, quenched_cost, ExactOptions, FitMethod, McSetup, PassageBox,
};
use rwrp_core::perco::{directed_path, path_is_valid, OrientedGrid};
use rwrp_core::rng::derive_key;
use rwrp_core::walk::green::{frozen_q3, green_quadrature};
use rwrp_core::walk::{return_probability, visit_histogram, ReturnMethod, VisitSampling, WalkConfig};
use rwrp_core::{EnvironmentField, PotentialDistribution, Site, SiteBox};
use statrs::distribution::{ChiSquared, ContinuousCDF};

const SEED: u64 = 42;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome, String> {
    Ok(Outcome { pass, detail })
}

fn key(criterion: u64, k: u64) -> u64 {
    derive_key(SEED, &[1000 + criterion, k])
}

fn exec() -> RayonExecutor {
    RayonExecutor::new(None).expect("thread pool")
}

fn law(s: &str) -> PotentialDistribution {
    s.parse().expect("law")
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// Walk config with the default importance tilt.
fn tilted(mu: &PotentialDistribution, lambda: f64, d: usize, max_n: i64) -> Result<WalkConfig, String> {
    let q = if d >= 3 { frozen_q3_or(d)? } else { 1.0 };
    let tilt = default_tilt(mu, lambda, d, q).map_err(err)?;
    WalkConfig::new(d, tilt, WalkConfig::default_step_cap(max_n, d)).map_err(err)
}

fn frozen_q3_or(d: usize) -> Result<f64, String> {
    if d == 3 {
        return Ok(frozen_q3());
    }
    Ok(1.0 / green_quadrature(d, 1e-10).map_err(err)?.0)
}

fn c1_lattice_constants() -> Result<Outcome, String> {
    let x = exec();
    let quad = return_probability(3, ReturnMethod::DEFAULT, &x).map_err(err)?;
    let (g1, _) = green_quadrature(3, 1e-8).map_err(err)?;
    let (g2, _) = green_quadrature(3, 5e-9).map_err(err)?;
    let stable = (1.0 / g1 - 1.0 / g2).abs();
    let mc = return_probability(
        3,
        ReturnMethod::MonteCarlo {
            walks: 100_000,
            horizon: 10_000,
            seed: key(1, 0),
        },
        &x,
    )
    .map_err(err)?;
    let half = 2.576 * mc.error;
    let inside = (quad.q_d - mc.q_d).abs() <= half;
    outcome(
        inside && stable < 1e-6,
        format!(
            "quadrature q3 = {:.10}, Monte Carlo {:.5} +- {:.5} (99% CI), halving change {:.1e}",
            quad.q_d, mc.q_d, half, stable
        ),
    )
}

fn c2_constant_potential() -> Result<Outcome, String> {
    let x = exec();
    let mu = PotentialDistribution::point_mass(1.0).map_err(err)?;
    let env = EnvironmentField::new(key(2, 0), mu.clone(), 3).map_err(err)?;
    let mut pass = true;
    let mut parts = Vec::new();
    for (i, &lc) in [0.05, 0.1, 0.2].iter().enumerate() {
        let alpha = constant_potential_alpha(3, lc).map_err(err)?;
        let cfg = tilted(&mu, lc, 3, 200)?;
        let setup = McSetup::new(20_000, key(2, 1 + i as u64));
        let costs = [50, 100, 150, 200]
            .iter()
            .map(|&n| quenched_cost(&env, lc, n, &cfg, &setup, &x))
            .collect::<Result<Vec<_>, _>>()
            .map_err(err)?;
        let fit = fit_exponent(&costs, FitMethod::SlopeFit).map_err(err)?;
        let mc_rel = (fit.alpha / alpha - 1.0).abs();
        let start = PassageBox {
            behind: 12,
            half_width: 12,
        };
        let opts = ExactOptions::default();
        let z0 = exact_passage(&env, lc, 12, start, &opts).map_err(err)?.z;
        let conv = exact_passage_converged(&env, lc, 12, start, 1e-4 * z0, &opts).map_err(err)?;
        let exact_rel = (-conv.z.ln() / 12.0 / alpha - 1.0).abs();
        pass &= mc_rel <= 0.02 && exact_rel <= 0.005;
        parts.push(format!(
            "lambda c = {lc}: arccosh {alpha:.5}, MC slope {:.5} ({:.2}%), exact n=12 {:.5} ({:.3}%)",
            fit.alpha,
            100.0 * mc_rel,
            -conv.z.ln() / 12.0,
            100.0 * exact_rel
        ));
    }
    outcome(pass, parts.join("; "))
}

fn c3_quenched_oracle() -> Result<Outcome, String> {
    let x = exec();
    let mu = law("pareto:0.7,1");
    let env = EnvironmentField::new(env_seed(SEED, 0), mu.clone(), 3).map_err(err)?;
    let (lambda, n) = (0.5, 6);
    let start = PassageBox {
        behind: 6,
        half_width: 6,
    };
    let opts = ExactOptions::default();
    let z0 = exact_passage(&env, lambda, n, start, &opts).map_err(err)?.z;
    let exact = exact_passage_converged(&env, lambda, n, start, 1e-6 * z0, &opts)
        .map_err(err)?
        .z;
    let cfg = tilted(&mu, lambda, 3, n)?;
    let mc = quenched_cost(&env, lambda, n, &cfg, &McSetup::new(1_000_000, key(3, 0)), &x).map_err(err)?;
    let rel = (mc.z() - exact).abs() / exact;
    outcome(
        rel <= 0.01,
        format!(
            "exact Z_6 = {exact:.6e}, MC {:.6e} (rel se {:.2}%), |MC - exact| / exact = {:.2}%",
            mc.z(),
            100.0 * mc.stderr,
            100.0 * rel
        ),
    )
}

fn c4_annealed_oracle() -> Result<Outcome, String> {
    let x = exec();
    let mut pass = true;
    let mut parts = Vec::new();
    for (i, name) in ["bernoulli:0.5,3", "exp:1"].iter().enumerate() {
        let mu = law(name);
        let b = enumerate_annealed(&mu, 0.4, 3, 16).map_err(err)?;
        let cfg = tilted(&mu, 0.4, 1, 3)?;
        let mc = annealed_cost(&mu, 0.4, 3, &cfg, &McSetup::new(200_000, key(4, i as u64)), &x).map_err(err)?;
        let z = mc.z();
        let inside = b.lower <= z && z <= b.upper();
        let width = b.remainder / b.lower;
        pass &= inside && width < 0.01;
        parts.push(format!(
            "{name}: bracket [{:.5e}, {:.5e}], MC {z:.5e} ({}), width {:.1}% of Z",
            b.lower,
            b.upper(),
            if inside { "inside" } else { "outside" },
            100.0 * width
        ));
    }
    outcome(pass, parts.join("; "))
}

fn c5_geometric_visits() -> Result<Outcome, String> {
    let x = exec();
    let q = frozen_q3();
    let cfg = WalkConfig::new(3, 0.0, u64::MAX).map_err(err)?;
    let h = visit_histogram(
        &cfg,
        &Site::new(&[10, 0, 0]),
        40.0,
        200_000,
        key(5, 0),
        VisitSampling::Restart,
        &x,
    )
    .map_err(err)?;
    let total = h.samples as f64;
    let mut chi2 = 0.0;
    for k in 1..=6usize {
        let observed = if k < 6 {
            h.counts.get(k - 1).copied().unwrap_or(0)
        } else {
            h.counts.iter().skip(5).sum()
        } as f64;
        let p = if k < 6 {
            q * (1.0 - q).powi(k as i32 - 1)
        } else {
            (1.0 - q).powi(5)
        };
        chi2 += (observed - total * p).powi(2) / (total * p);
    }
    let pval = 1.0 - ChiSquared::new(5.0).map_err(err)?.cdf(chi2);
    let z = (h.mean - 1.0 / q) / h.stderr;
    outcome(
        pval > 0.01 && z.abs() <= 3.0,
        format!(
            "{} samples, chi-square {chi2:.1} (p = {pval:.2e}), mean {:.4} vs 1/q3 = {:.4} ({z:+.1} stderr)",
            h.samples,
            h.mean,
            1.0 / q
        ),
    )
}

fn c6_orderings() -> Result<Outcome, String> {
    let x = exec();
    let mu = law("pareto:0.7,1");
    let window = [4, 8, 12];
    let mut checks = 0;
    let mut violations = Vec::new();
    for (i, &lambda) in [0.5, 0.1].iter().enumerate() {
        let cfg = tilted(&mu, lambda, 3, 12)?;
        let setup = McSetup::new(2_000, key(6, i as u64));
        let seeds: Vec<u64> = (0..8).map(|k| env_seed(SEED, k)).collect();
        let sweep = quenched_alpha(&seeds, &mu, lambda, &window, &cfg, &setup, FitMethod::SlopeFit, &x).map_err(err)?;
        for (j, n) in window.iter().enumerate() {
            checks += 1;
            if sweep.jensen_gap(j) < 0.0 {
                violations.push(format!("Jensen at lambda {lambda}, n {n}"));
            }
        }
        let trunc = truncated_law(&mu, 0.2 / lambda).map_err(err)?;
        for &n in &window {
            let a = annealed_cost(&mu, lambda, n, &cfg, &setup, &x).map_err(err)?;
            let b = annealed_cost(&trunc, lambda, n, &cfg, &setup, &x).map_err(err)?;
            checks += 1;
            if b.value < a.value {
                violations.push(format!("truncation at lambda {lambda}, n {n}"));
            }
        }
    }
    for name in ["bernoulli:0.5,3", "exp:1", "pareto:0.7,1"] {
        let mu = law(name);
        for &lambda in &[0.4, 1.0] {
            let trunc = truncated_law(&mu, 0.2 / lambda).map_err(err)?;
            for n in 1..=4 {
                let a = enumerate_annealed(&mu, lambda, n, 14).map_err(err)?;
                let b = enumerate_annealed(&trunc, lambda, n, 14).map_err(err)?;
                checks += 1;
                if b.lower > a.lower || b.upper() > a.upper() {
                    violations.push(format!("enumeration {name} at lambda {lambda}, n {n}"));
                }
            }
        }
    }
    outcome(
        violations.is_empty(),
        format!("{checks} orderings checked, violations: [{}]", violations.join(", ")),
    )
}

/// Window with costs near `10, 20, 30, 40` for a predicted exponent.
fn window_for(alpha: f64) -> Vec<i64> {
    let mut w: Vec<i64> = [10.0, 20.0, 30.0, 40.0]
        .iter()
        .map(|c| (c / alpha).round().max(1.0) as i64)
        .collect();
    w.dedup();
    w
}

fn c7_integrable_asymptote() -> Result<Outcome, String> {
    let x = exec();
    let mu = law("exp:1");
    let lambda: f64 = 1e-3;
    let target = (6.0 * lambda).sqrt();
    let window = window_for(target);
    let cfg = tilted(&mu, lambda, 3, *window.last().unwrap())?;
    let e = annealed_alpha(
        &mu,
        lambda,
        &window,
        &cfg,
        &McSetup::new(5_000, key(7, 0)),
        FitMethod::SlopeFit,
        &x,
    )
    .map_err(err)?;
    let ratio = e.alpha / target;
    outcome(
        (0.85..=1.10).contains(&ratio),
        format!(
            "window {:?}, annealed alpha {:.5} +- {:.5}, ratio to sqrt(6e-3) = {ratio:.4}",
            window, e.alpha, e.stderr
        ),
    )
}

fn c8_main_trend() -> Result<Outcome, String> {
    let x = exec();
    let mu = law("pareto:0.7,1");
    let lambdas = [1e-1, 3e-2, 1e-2, 3e-3];
    let mut pass = true;
    let mut parts = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for (i, &lambda) in lambdas.iter().enumerate() {
        let r = report(&mu, 0.2, lambda, 3).map_err(err)?;
        let p = r.predicted_alpha;
        let window = window_for(p);
        let cfg = tilted(&mu, lambda, 3, *window.last().unwrap())?;
        let a = annealed_alpha(
            &mu,
            lambda,
            &window,
            &cfg,
            &McSetup::new(20_000, key(8, i as u64)),
            FitMethod::SlopeFit,
            &x,
        )
        .map_err(err)?;
        let seeds: Vec<u64> = (0..16).map(|k| env_seed(SEED, k)).collect();
        let q = quenched_alpha(
            &seeds,
            &mu,
            lambda,
            &window,
            &cfg,
            &McSetup::new(4_000, key(8, 100 + i as u64)),
            FitMethod::SlopeFit,
            &x,
        )
        .map_err(err)?;
        let (ra, sa) = (a.alpha / p, a.stderr / p);
        let (rq, sq) = (q.estimate.alpha / p, q.estimate.stderr / p);
        let band = (0.7..=1.4).contains(&ra);
        let toward = prev.is_none_or(|(r0, s0)| (ra - 1.0).abs() <= (r0 - 1.0).abs() + sa.max(s0));
        let order = rq >= ra - 2.0 * (sa * sa + sq * sq).sqrt();
        pass &= band && toward && order;
        parts.push(format!(
            "lambda {lambda}: annealed {ra:.4} +- {sa:.4}, quenched {rq:.4} +- {sq:.4}{}{}{}",
            if band { "" } else { " (out of band)" },
            if toward { "" } else { " (moves away from 1)" },
            if order { "" } else { " (quenched below annealed)" }
        ));
        prev = Some((ra, sa));
    }
    outcome(pass, parts.join("; "))
}

fn c9_coarse_trend() -> Result<Outcome, String> {
    let x = exec();
    let mu = law("pareto:0.7,1");
    let (m, eps, delta1) = (2.0, 0.2, (0.01f64 / 9.0).min(0.002));
    let mut fractions = Vec::new();
    let mut parts = Vec::new();
    for &lambda in &[1e-1, 1e-2, 1e-3] {
        let r = report(&mu, eps, lambda, 3).map_err(err)?;
        let l = r.l_lambda;
        let gp = GoodnessParams::new(eps, lambda, l, delta1, Mode::for_regime(r.regime)).and_then(|g| g.checked());
        let gp = match gp {
            Ok(g) => g,
            Err(e) => {
                parts.push(format!(
                    "lambda {lambda}: L = {l:.3}, default parameters rejected ({e})"
                ));
                fractions.push(f64::NAN);
                continue;
            }
        };
        let rad = (m * l).ceil() as i32;
        let region = SiteBox::centered(3, rad).map_err(err)?;
        let mut good = 0;
        for k in 0..200 {
            let env = EnvironmentField::new(env_seed(SEED, k), mu.clone(), 3).map_err(err)?;
            good += certify_region(&env, &mu, &region, &gp, &x).map_err(err)?.overall as u32;
        }
        let f = good as f64 / 200.0;
        parts.push(format!("lambda {lambda}: L = {l:.3}, good fraction {f:.3}"));
        fractions.push(f);
    }
    let increasing = fractions.windows(2).all(|w| w[1] >= w[0]);
    let last = *fractions.last().unwrap();
    outcome(increasing && last > 0.9, parts.join("; "))
}

/// Independent reachability oracle for directed paths.
fn reachable(g: &OrientedGrid) -> bool {
    let mut cur: Vec<i64> = if g.is_open(0, 0) { vec![0] } else { vec![] };
    for i in 1..=g.n {
        let mut next: Vec<i64> = cur
            .iter()
            .flat_map(|&j| [j - 1, j + 1])
            .filter(|&j| g.is_open(i, j))
            .collect();
        next.sort_unstable();
        next.dedup();
        cur = next;
    }
    !cur.is_empty()
}

fn c10_percolation() -> Result<Outcome, String> {
    let found = (0..1000u64)
        .filter(|&s| {
            let g = OrientedGrid::iid(200, 200, 0.995, key(10, s)).expect("grid");
            directed_path(&g).is_some_and(|p| path_is_valid(&g, &p))
        })
        .count();
    let mut runner = TestRunner::new(PropConfig {
        cases: 1000,
        failure_persistence: None,
        ..PropConfig::default()
    });
    let strategy = (1usize..25, 1i64..25, 0.0f64..1.0, any::<u64>(), 0usize..25, -25i64..25);
    let props = runner.run(&strategy, |(n, jmax, p, seed, oi, oj)| {
        let g = OrientedGrid::iid(n, jmax, p, seed).unwrap();
        let path = directed_path(&g);
        prop_assert_eq!(path.is_some(), reachable(&g));
        if let Some(pth) = &path {
            prop_assert!(path_is_valid(&g, pth));
        }
        let mut more = g.clone();
        more.set_open(oi.min(n), oj, true);
        prop_assert!(more.open_count() >= g.open_count());
        if path.is_some() {
            prop_assert!(directed_path(&more).is_some());
        }
        Ok(())
    });
    let props_ok = props.is_ok();
    outcome(
        found >= 995 && props_ok,
        format!(
            "paths found in {found}/1000 grids, property checks on 1000 grids {}",
            match props {
                Ok(()) => "passed".to_string(),
                Err(e) => format!("failed: {e}"),
            }
        ),
    )
}

fn c11_event_rates() -> Result<Outcome, String> {
    let cfg = ExperimentConfig::default();
    let rows = event_rows(&cfg, &exec()).map_err(err)?;
    let bound = 3f64.sqrt() / 2.0 + 0.3;
    let mut pass = true;
    let mut parts = Vec::new();
    for pair in rows.chunks(2) {
        let (a, t) = (&pair[0], &pair[1]);
        let ratio = t.probability / a.probability;
        pass &= a.rate <= bound && ratio >= 0.5;
        parts.push(format!(
            "M = {}: -ln P[A]/M = {:.3} (bound {bound:.3}), P[TildeA]/P[A] = {ratio:.2}",
            a.m, a.rate
        ));
    }
    outcome(pass, format!("L = {}: {}", cfg.events.l, parts.join("; ")))
}

fn scan_in(dir: &Path, workers: usize) -> Result<(Vec<u8>, Vec<u8>), String> {
    let cfg = ExperimentConfig {
        lambdas: vec![0.1, 0.03],
        n_window: vec![4, 8, 12],
        replicas: 3_000,
        env_seeds: 4,
        workers: Some(workers),
        ..ExperimentConfig::default()
    };
    run(&cfg, Command::Scan, dir).map_err(err)?;
    let read = |f: &str| std::fs::read(dir.join(f)).map_err(err);
    Ok((read("scan.csv")?, read("scan_costs.csv")?))
}

fn c12_determinism() -> Result<Outcome, String> {
    let a = tempfile::tempdir().map_err(err)?;
    let b = tempfile::tempdir().map_err(err)?;
    let first = scan_in(a.path(), 1)?;
    let second = scan_in(b.path(), 4)?;
    outcome(
        first == second,
        format!(
            "scan with 1 and 4 workers: scan.csv {} bytes, scan_costs.csv {} bytes, {}",
            first.0.len(),
            first.1.len(),
            if first == second { "bit-identical" } else { "different" }
        ),
    )
}

type Criterion = fn() -> Result<Outcome, String>;

fn main() {
    // (number, budget, hard, check)
    let criteria: [(u32, u64, bool, Criterion); 12] = [
        (1, 60, false, c1_lattice_constants),
        (2, 300, false, c2_constant_potential),
        (3, 300, false, c3_quenched_oracle),
        (4, 60, false, c4_annealed_oracle),
        (5, 300, false, c5_geometric_visits),
        (6, 600, true, c6_orderings),
        (7, 600, false, c7_integrable_asymptote),
        (8, 1800, false, c8_main_trend),
        (9, 600, false, c9_coarse_trend),
        (10, 60, true, c10_percolation),
        (11, 900, false, c11_event_rates),
        (12, 600, true, c12_determinism),
    ];
    let only: Vec<u32> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect())
        .unwrap_or_default();
    let mut broken = Vec::new();
    let mut passed = 0;
    let mut ran = 0;
    for (n, budget, hard, check) in criteria {
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        ran += 1;
        let t = Instant::now();
        let result = check();
        let elapsed = t.elapsed();
        let in_time = elapsed <= Duration::from_secs(budget);
        let (pass, detail) = match result {
            Ok(o) => (o.pass && in_time, o.detail),
            Err(e) => {
                broken.push(n);
                (false, format!("error: {e}"))
            }
        };
        if pass {
            passed += 1;
        } else if hard {
            broken.push(n);
        }
        println!(
            "criterion {n:>2}: {} [{:.1}s of {budget}s] {detail}",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    }
    println!("acceptance: {passed}/{ran} criteria pass");
    if !broken.is_empty() {
        eprintln!("acceptance: identity criteria or runs broken: {broken:?}");
        std::process::exit(1);
    }
}
