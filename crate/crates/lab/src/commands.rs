//! The subcommands. Each writes its artifacts into the output directory and
//! returns a short text summary for stdout.
//!
//! Randomness flows from the master seed through `derive_key`: the first
//! path word names the stream (see [`streams`]), the second is the lambda
//! or seed index, and the core estimators derive per-`n` and per-replica
//! streams below that. `annealed`, `quenched` and `scan` therefore share
//! keys, and every command draws environment `k` from the same seed.

use std::fmt::Write as _;
use std::path::Path;

use rwrp_core::asymptotics::{default_tilt, report_with_q, AsymptoticReport};
use rwrp_core::coarse::{
    certify_region, sample_events, EventContext, EventKind, GoodnessParams, GoodnessReport, Mode, ScenarioParams,
};
use rwrp_core::estimators::{
    annealed_alpha, annealed_cost, enumerate_annealed, exact_passage, exact_passage_converged, quenched_alpha,
    quenched_cost, ExactOptions, ExponentEstimate, McSetup, PassageBox, QuenchedSweep,
};
use rwrp_core::perco::{build_grid, directed_path, render, BlockGeometry, OrientedGrid};
use rwrp_core::rng::derive_key;
use rwrp_core::site::OpenBox;
use rwrp_core::walk::{return_probability, tilt_for_drift, LatticeConstants, ReturnMethod, WalkConfig};
use rwrp_core::{EnvironmentField, PotentialDistribution, Site, SiteBox};
use serde::Serialize;

use crate::cache::{q_for_tilt, QdCache};
use crate::config::ExperimentConfig;
use crate::error::{LabError, Result};
use crate::output::{write_csv, write_json, write_text, CostRow, RowContext};
use crate::pool::RayonExecutor;

/// First word of every key path.
pub mod streams {
    pub const QD: u64 = 1;
    pub const ANNEALED: u64 = 2;
    pub const QUENCHED: u64 = 3;
    pub const ENVIRONMENTS: u64 = 4;
    pub const PERC: u64 = 5;
    pub const EVENTS: u64 = 6;
    pub const ORACLE: u64 = 7;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Qd { mc: bool },
    Predict,
    Annealed,
    Quenched,
    Scan,
    Certify,
    Perc,
    Events,
    Oracle,
}

/// Seed of environment `k`.
pub fn env_seed(master: u64, k: u64) -> u64 {
    derive_key(master, &[streams::ENVIRONMENTS, k])
}

struct Context<'a> {
    cfg: &'a ExperimentConfig,
    mu: PotentialDistribution,
    out: &'a Path,
    exec: RayonExecutor,
    cache: QdCache,
}

/// Validates `cfg`, then runs `cmd`.
pub fn run(cfg: &ExperimentConfig, cmd: Command, out: &Path) -> Result<String> {
    let mu = cfg.validate()?;
    std::fs::create_dir_all(out).map_err(|e| LabError::io(out, e))?;
    let mut cx = Context {
        cfg,
        mu,
        out,
        exec: RayonExecutor::new(cfg.workers)?,
        cache: QdCache::open(out),
    };
    match cmd {
        Command::Qd { mc } => qd(&mut cx, mc),
        Command::Predict => predict(&mut cx),
        Command::Annealed => annealed(&mut cx),
        Command::Quenched => quenched(&mut cx),
        Command::Scan => scan(&mut cx),
        Command::Certify => certify(&mut cx),
        Command::Perc => perc(&mut cx),
        Command::Events => events(&mut cx),
        Command::Oracle => oracle(&mut cx),
    }
}

impl Context<'_> {
    fn rows(&self, lambda: f64) -> RowContext {
        RowContext {
            mu: self.cfg.mu.clone(),
            lambda,
            eps: self.cfg.eps,
            d: self.cfg.d,
            seed: self.cfg.seed,
        }
    }

    fn q(&mut self) -> Result<f64> {
        q_for_tilt(Some(&mut self.cache), self.cfg.d, self.cfg.qd.tolerance)
    }

    fn report(&mut self, lambda: f64) -> Result<AsymptoticReport> {
        if self.cfg.d < 3 {
            return Err(LabError::config("d", "closed-form predictions need d >= 3"));
        }
        let q = self.q()?;
        Ok(report_with_q(&self.mu, self.cfg.eps, lambda, self.cfg.d, q)?)
    }

    fn walk(&mut self, lambda: f64, max_n: i64) -> Result<WalkConfig> {
        let tilt = match self.cfg.tilt {
            Some(t) => t,
            None => {
                let q = self.q()?;
                default_tilt(&self.mu, lambda, self.cfg.d, q)?
            }
        };
        let cap = self
            .cfg
            .caps
            .step_cap
            .unwrap_or(WalkConfig::default_step_cap(max_n, self.cfg.d));
        Ok(WalkConfig::new(self.cfg.d, tilt, cap)?)
    }

    fn setup(&self, stream: u64, index: u64, replicas: u64) -> McSetup {
        let caps = &self.cfg.caps;
        let tube = if caps.tube_behind.is_some() || caps.tube_half_width.is_some() {
            let mut b = OpenBox::unbounded(self.cfg.d);
            if let Some(behind) = caps.tube_behind {
                b = b.with_side(0, -behind, f64::INFINITY);
            }
            if let Some(w) = caps.tube_half_width {
                for k in 1..self.cfg.d {
                    b = b.with_side(k, -w, w);
                }
            }
            Some(b)
        } else {
            None
        };
        McSetup {
            replicas,
            seed: derive_key(self.cfg.seed, &[stream, index]),
            tube,
        }
    }

    fn env(&self, k: u64) -> Result<EnvironmentField> {
        Ok(EnvironmentField::new(
            env_seed(self.cfg.seed, k),
            self.mu.clone(),
            self.cfg.d,
        )?)
    }

    /// The window of a fitted command: at least three distinct `n`.
    fn fit_window(&self) -> Result<Vec<i64>> {
        let w = self.cfg.window();
        if w.len() < 3 {
            return Err(LabError::config("n_window", "a slope fit needs at least 3 distinct n"));
        }
        Ok(w)
    }

    fn annealed_at(&mut self, i: usize) -> Result<ExponentEstimate> {
        let lambda = self.cfg.lambdas[i];
        let window = self.fit_window()?;
        let walk = self.walk(lambda, *window.last().unwrap())?;
        let setup = self.setup(streams::ANNEALED, i as u64, self.cfg.replicas);
        Ok(annealed_alpha(
            &self.mu,
            lambda,
            &window,
            &walk,
            &setup,
            self.cfg.fit.into(),
            &self.exec,
        )?)
    }

    fn quenched_at(&mut self, i: usize) -> Result<QuenchedSweep> {
        let lambda = self.cfg.lambdas[i];
        let window = self.fit_window()?;
        let walk = self.walk(lambda, *window.last().unwrap())?;
        let setup = self.setup(streams::QUENCHED, i as u64, self.cfg.replicas);
        let seeds: Vec<u64> = (0..self.cfg.env_seeds).map(|k| env_seed(self.cfg.seed, k)).collect();
        Ok(quenched_alpha(
            &seeds,
            &self.mu,
            lambda,
            &window,
            &walk,
            &setup,
            self.cfg.fit.into(),
            &self.exec,
        )?)
    }

    fn path(&self, name: &str) -> std::path::PathBuf {
        self.out.join(name)
    }
}

fn qd(cx: &mut Context, mc: bool) -> Result<String> {
    let d = cx.cfg.d;
    if d < 3 {
        return Err(LabError::config("d", "q_d is defined for d >= 3"));
    }
    let mut out = Vec::new();
    let (e, cached) = cx.cache.quadrature(d, cx.cfg.qd.tolerance)?;
    out.push(LatticeConstants {
        d,
        q_d: e.q_d,
        green_at_origin: e.green_at_origin,
        method: ReturnMethod::Quadrature { tolerance: e.tolerance },
        error: e.error,
        bias_correction: 0.0,
        bias_bound: 0.0,
    });
    let mut text = format!(
        "q_{d} = {:.13} (G(0) = {:.13}, error {:.1e}{})\n",
        e.q_d,
        e.green_at_origin,
        e.error,
        if cached { ", cached" } else { "" }
    );
    if mc || cx.cfg.qd.mc_walks.is_some() {
        let walks = cx.cfg.qd.mc_walks.unwrap_or(1_000_000);
        let method = ReturnMethod::MonteCarlo {
            walks,
            horizon: cx.cfg.qd.mc_horizon,
            seed: derive_key(cx.cfg.seed, &[streams::QD, 0]),
        };
        let c = return_probability(d, method, &cx.exec)?;
        writeln!(
            text,
            "q_{d} (Monte Carlo, {walks} walks) = {:.6} +- {:.6}",
            c.q_d, c.error
        )
        .unwrap();
        out.push(c);
    }
    write_json(&cx.path("qd.json"), &out)?;
    Ok(text)
}

#[derive(Serialize)]
struct PredictRow {
    mu: String,
    lambda: f64,
    eps: f64,
    d: usize,
    qd: f64,
    i_lambda: f64,
    i_eps_lambda: f64,
    l_lambda: f64,
    predicted_alpha: f64,
    tail_mass: f64,
    regime: String,
}

impl From<&AsymptoticReport> for PredictRow {
    fn from(r: &AsymptoticReport) -> PredictRow {
        PredictRow {
            mu: r.mu.clone(),
            lambda: r.lambda,
            eps: r.eps,
            d: r.d,
            qd: r.qd,
            i_lambda: r.i_lambda,
            i_eps_lambda: r.i_eps_lambda,
            l_lambda: r.l_lambda,
            predicted_alpha: r.predicted_alpha,
            tail_mass: r.tail_mass,
            regime: rwrp_core::asymptotics::regime_name(r.regime),
        }
    }
}

fn predict(cx: &mut Context) -> Result<String> {
    let mut reports = Vec::new();
    let mut text = String::new();
    for &lambda in &cx.cfg.lambdas.clone() {
        let r = cx.report(lambda)?;
        writeln!(
            text,
            "lambda = {lambda}: I = {:.6e}, L = {:.4}, alpha = {:.6}, {:?}",
            r.i_lambda, r.l_lambda, r.predicted_alpha, r.regime
        )
        .unwrap();
        reports.push(r);
    }
    let rows: Vec<PredictRow> = reports.iter().map(PredictRow::from).collect();
    write_csv(&cx.path("predict.csv"), &rows)?;
    write_json(&cx.path("predict.json"), &reports)?;
    Ok(text)
}

fn estimate_rows(rc: &RowContext, kind: &str, e: &ExponentEstimate) -> Vec<CostRow> {
    let mut rows: Vec<CostRow> = e.per_n.iter().map(|c| rc.cost(kind, c)).collect();
    let last = e.per_n.iter().max_by_key(|c| c.n).unwrap();
    let mut a = rc.value(&format!("{kind}_alpha"), last.n, e.alpha, e.stderr, last.replicas);
    a.censored = e.per_n.iter().map(|c| c.censored_mass).fold(0.0, f64::max);
    rows.push(a);
    rows
}

fn annealed(cx: &mut Context) -> Result<String> {
    let mut rows = Vec::new();
    let mut estimates = Vec::new();
    let mut text = String::new();
    for i in 0..cx.cfg.lambdas.len() {
        let lambda = cx.cfg.lambdas[i];
        let e = cx.annealed_at(i)?;
        writeln!(
            text,
            "lambda = {lambda}: annealed alpha = {:.6} +- {:.6}",
            e.alpha, e.stderr
        )
        .unwrap();
        rows.extend(estimate_rows(&cx.rows(lambda), "annealed", &e));
        estimates.push(e);
    }
    write_csv(&cx.path("annealed.csv"), &rows)?;
    write_json(&cx.path("annealed.json"), &estimates)?;
    Ok(text)
}

fn quenched(cx: &mut Context) -> Result<String> {
    let mut rows = Vec::new();
    let mut sweeps = Vec::new();
    let mut text = String::new();
    for i in 0..cx.cfg.lambdas.len() {
        let lambda = cx.cfg.lambdas[i];
        let s = cx.quenched_at(i)?;
        writeln!(
            text,
            "lambda = {lambda}: quenched alpha = {:.6} +- {:.6}",
            s.estimate.alpha, s.estimate.stderr
        )
        .unwrap();
        rows.extend(estimate_rows(&cx.rows(lambda), "quenched", &s.estimate));
        sweeps.push(s);
    }
    write_csv(&cx.path("quenched.csv"), &rows)?;
    write_json(&cx.path("quenched.json"), &sweeps)?;
    Ok(text)
}

/// One line of the lambda sweep: both fitted exponents and their ratios
/// to the prediction `sqrt(2 d I_lambda)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanRow {
    pub mu: String,
    pub lambda: f64,
    pub eps: f64,
    pub d: usize,
    pub i_lambda: f64,
    pub l_lambda: f64,
    pub predicted_alpha: f64,
    pub annealed_alpha: f64,
    pub annealed_stderr: f64,
    pub quenched_alpha: f64,
    pub quenched_stderr: f64,
    pub annealed_ratio: f64,
    pub annealed_ratio_stderr: f64,
    pub quenched_ratio: f64,
    pub quenched_ratio_stderr: f64,
    /// Largest censored mass over the window, both estimators.
    pub censored: f64,
    pub replicas: u64,
    pub seed: u64,
}

fn scan(cx: &mut Context) -> Result<String> {
    let mut rows = Vec::new();
    let mut costs = Vec::new();
    let mut text = String::new();
    for i in 0..cx.cfg.lambdas.len() {
        let lambda = cx.cfg.lambdas[i];
        let r = cx.report(lambda)?;
        let a = cx.annealed_at(i)?;
        let q = cx.quenched_at(i)?;
        let rc = cx.rows(lambda);
        costs.extend(estimate_rows(&rc, "annealed", &a));
        costs.extend(estimate_rows(&rc, "quenched", &q.estimate));
        let p = r.predicted_alpha;
        let censored = a
            .per_n
            .iter()
            .chain(&q.estimate.per_n)
            .map(|c| c.censored_mass)
            .fold(0.0, f64::max);
        let row = ScanRow {
            mu: cx.cfg.mu.clone(),
            lambda,
            eps: cx.cfg.eps,
            d: cx.cfg.d,
            i_lambda: r.i_lambda,
            l_lambda: r.l_lambda,
            predicted_alpha: p,
            annealed_alpha: a.alpha,
            annealed_stderr: a.stderr,
            quenched_alpha: q.estimate.alpha,
            quenched_stderr: q.estimate.stderr,
            annealed_ratio: a.alpha / p,
            annealed_ratio_stderr: a.stderr / p,
            quenched_ratio: q.estimate.alpha / p,
            quenched_ratio_stderr: q.estimate.stderr / p,
            censored,
            replicas: cx.cfg.replicas,
            seed: cx.cfg.seed,
        };
        writeln!(
            text,
            "lambda = {lambda}: annealed ratio {:.4} +- {:.4}, quenched ratio {:.4} +- {:.4}",
            row.annealed_ratio, row.annealed_ratio_stderr, row.quenched_ratio, row.quenched_ratio_stderr
        )
        .unwrap();
        rows.push(row);
    }
    write_csv(&cx.path("scan.csv"), &rows)?;
    write_csv(&cx.path("scan_costs.csv"), &costs)?;
    Ok(text)
}

/// Goodness parameters for the configured scenario at `lambda`.
fn goodness(cx: &mut Context, lambda: f64) -> Result<(AsymptoticReport, GoodnessParams)> {
    let r = cx.report(lambda)?;
    let s = &cx.cfg.scenario;
    let mut gp = GoodnessParams::new(
        cx.cfg.eps,
        lambda,
        r.l_lambda,
        s.delta1_for(cx.cfg.d),
        Mode::for_regime(r.regime),
    )?;
    gp.delta = s.delta;
    gp.k_prime = s.k_prime;
    gp.volume_cap = cx.cfg.caps.volume_cap;
    Ok((r, gp.checked()?))
}

/// `[-ceil(M L), ceil(M L)]^d`.
pub fn certify_box(d: usize, m: f64, l: f64) -> Result<SiteBox> {
    let r = (m * l).ceil();
    if r > i32::MAX as f64 / 4.0 {
        return Err(LabError::config(
            "scenario.m",
            "region does not fit the lattice coordinates",
        ));
    }
    Ok(SiteBox::centered(d, r as i32)?)
}

#[derive(Serialize)]
struct CertifySummary {
    lambda: f64,
    l_lambda: f64,
    mode: Mode,
    seeds: u64,
    good: u64,
    good_fraction: f64,
    stderr: f64,
    first: GoodnessReport,
}

fn certify(cx: &mut Context) -> Result<String> {
    let mut out = Vec::new();
    let mut rows = Vec::new();
    let mut text = String::new();
    for &lambda in &cx.cfg.lambdas.clone() {
        let (r, gp) = goodness(cx, lambda)?;
        let region = certify_box(cx.cfg.d, cx.cfg.scenario.m, r.l_lambda)?;
        let seeds = cx.cfg.scenario.certify_seeds;
        let mut good = 0;
        let mut first = None;
        for k in 0..seeds {
            let env = cx.env(k)?;
            let rep = certify_region(&env, &cx.mu, &region, &gp, &cx.exec)?;
            good += rep.overall as u64;
            first.get_or_insert(rep);
        }
        let f = good as f64 / seeds as f64;
        let se = (f * (1.0 - f) / seeds as f64).sqrt();
        writeln!(
            text,
            "lambda = {lambda}: L = {:.3}, good in {good}/{seeds} environments",
            r.l_lambda
        )
        .unwrap();
        rows.push(cx.rows(lambda).value("good_fraction", 0, f, se, seeds));
        out.push(CertifySummary {
            lambda,
            l_lambda: r.l_lambda,
            mode: gp.mode,
            seeds,
            good,
            good_fraction: f,
            stderr: se,
            first: first.unwrap(),
        });
    }
    write_csv(&cx.path("certify.csv"), &rows)?;
    write_json(&cx.path("certify.json"), &out)?;
    Ok(text)
}

#[derive(Serialize)]
struct PercSummary {
    source: String,
    n: usize,
    jmax: i64,
    open: usize,
    sites: usize,
    path: Option<Vec<i64>>,
}

fn perc(cx: &mut Context) -> Result<String> {
    let pc = &cx.cfg.percolation;
    let n = pc.columns;
    let jmax = pc.jmax.unwrap_or(n as i64);
    let (grid, source): (OrientedGrid, String) = match pc.p_open {
        Some(p) => (
            OrientedGrid::iid(n, jmax, p, derive_key(cx.cfg.seed, &[streams::PERC, 0]))?,
            format!("iid:{p}"),
        ),
        None => {
            let lambda = cx.cfg.lambdas[0];
            let (r, gp) = goodness(cx, lambda)?;
            let geom = BlockGeometry::new(cx.cfg.d, cx.cfg.scenario.m, r.l_lambda)?;
            let env = cx.env(0)?;
            let g = build_grid(&env, &cx.mu, &gp, &geom, n, jmax, &cx.exec)?;
            (g, format!("blocks:lambda={lambda}"))
        }
    };
    let path = directed_path(&grid);
    write_text(&cx.path("perc.txt"), &render(&grid, path.as_deref()))?;
    let s = PercSummary {
        source,
        n,
        jmax,
        open: grid.open_count(),
        sites: grid.site_count(),
        path,
    };
    write_json(&cx.path("perc.json"), &s)?;
    Ok(format!(
        "{} of {} sites open; directed path {}\n",
        s.open,
        s.sites,
        if s.path.is_some() { "found" } else { "not found" }
    ))
}

/// One event rate at one `M`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EventRow {
    pub d: usize,
    pub m: f64,
    pub l: f64,
    pub eps0: f64,
    pub kind: String,
    pub probability: f64,
    pub stderr: f64,
    /// `-ln P / M`.
    pub rate: f64,
    pub replicas: u64,
    pub censored: u64,
    pub seed: u64,
}

/// Rates of `A^{h,L}_M` and its sigma-clock version at each configured `M`,
/// sampled under a drift of `drift_factor h / L` along the first axis.
pub fn event_rows<X: rwrp_core::Executor + ?Sized>(cfg: &ExperimentConfig, exec: &X) -> Result<Vec<EventRow>> {
    let e = &cfg.events;
    let d = cfg.d;
    let kinds = [EventKind::AhLM, EventKind::TildeA];
    let mut rows = Vec::new();
    for (i, &m) in e.m_values.iter().enumerate() {
        let s = &cfg.scenario;
        let p = ScenarioParams::new(d, m, cfg.eps, s.eps0, s.delta, s.delta1_for(d), cfg.lambdas[0], e.l)?;
        let v = e.drift_factor * p.h() / e.l;
        let tilt = tilt_for_drift(d, v)?;
        let cap = cfg
            .caps
            .step_cap
            .unwrap_or(WalkConfig::default_step_cap((m * e.l).ceil() as i64, d));
        let walk = WalkConfig::new(d, tilt, cap)?;
        let seed = derive_key(cfg.seed, &[streams::EVENTS, i as u64]);
        let r = sample_events(
            &kinds,
            &p,
            Site::ORIGIN,
            &walk,
            e.replicas,
            seed,
            &EventContext::default(),
            exec,
        )?;
        for (k, est) in r.kinds.iter().zip(&r.estimates) {
            rows.push(EventRow {
                d,
                m,
                l: e.l,
                eps0: s.eps0,
                kind: k.to_string(),
                probability: est.value,
                stderr: est.stderr,
                rate: -est.value.ln() / m,
                replicas: r.replicas,
                censored: r.censored,
                seed: cfg.seed,
            });
        }
    }
    Ok(rows)
}

fn events(cx: &mut Context) -> Result<String> {
    let rows = event_rows(cx.cfg, &cx.exec)?;
    let mut text = String::new();
    for r in &rows {
        writeln!(
            text,
            "M = {}: P[{}] = {:.4e} +- {:.1e}, -ln P / M = {:.4}",
            r.m, r.kind, r.probability, r.stderr, r.rate
        )
        .unwrap();
    }
    write_csv(&cx.path("events.csv"), &rows)?;
    Ok(text)
}

/// Monte Carlo against an exact value or bracket at one `(lambda, n)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleRow {
    pub mu: String,
    pub d: usize,
    pub lambda: f64,
    pub n: i64,
    pub oracle: String,
    pub mc_z: f64,
    pub mc_rel_stderr: f64,
    pub censored: f64,
    pub exact_lower: f64,
    pub exact_upper: f64,
    /// `|mc - exact| / exact` against the bracket midpoint.
    pub rel_diff: f64,
    pub seed: u64,
}

fn oracle(cx: &mut Context) -> Result<String> {
    let d = cx.cfg.d;
    let limit = if d == 1 { 4 } else { 12 };
    let ns: Vec<i64> = cx.cfg.window().into_iter().filter(|&n| n <= limit).collect();
    if ns.is_empty() {
        return Err(LabError::config(
            "n_window",
            format!("oracle needs some n <= {limit} in d = {d}"),
        ));
    }
    let mut rows = Vec::new();
    let mut text = String::new();
    for i in 0..cx.cfg.lambdas.len() {
        let lambda = cx.cfg.lambdas[i];
        for &n in &ns {
            let walk = cx.walk(lambda, n)?;
            let setup = cx.setup(streams::ORACLE, i as u64, cx.cfg.replicas);
            let (mc, lo, hi, name) = if d == 1 {
                let b = enumerate_annealed(&cx.mu, lambda, n, 16)?;
                let mc = annealed_cost(&cx.mu, lambda, n, &walk, &setup, &cx.exec)?;
                (mc, b.lower, b.upper(), "enumerate_annealed")
            } else {
                let env = cx.env(0)?;
                let start = PassageBox {
                    behind: n,
                    half_width: n,
                };
                let opts = ExactOptions {
                    volume_cap: cx.cfg.caps.volume_cap,
                    ..ExactOptions::default()
                };
                let z0 = exact_passage(&env, lambda, n, start, &opts)?.z;
                let c = exact_passage_converged(&env, lambda, n, start, 1e-6 * z0, &opts)?;
                let mc = quenched_cost(&env, lambda, n, &walk, &setup, &cx.exec)?;
                (mc, c.z, c.z, "exact_passage")
            };
            let mid = 0.5 * (lo + hi);
            let row = OracleRow {
                mu: cx.cfg.mu.clone(),
                d,
                lambda,
                n,
                oracle: name.to_string(),
                mc_z: mc.z(),
                mc_rel_stderr: mc.stderr,
                censored: mc.censored_mass,
                exact_lower: lo,
                exact_upper: hi,
                rel_diff: (mc.z() - mid).abs() / mid,
                seed: cx.cfg.seed,
            };
            writeln!(
                text,
                "lambda = {lambda}, n = {n}: MC {:.6e} (rel se {:.1e}), {name} [{:.6e}, {:.6e}]",
                row.mc_z, row.mc_rel_stderr, lo, hi
            )
            .unwrap();
            rows.push(row);
        }
    }
    write_csv(&cx.path("oracle.csv"), &rows)?;
    Ok(text)
}
