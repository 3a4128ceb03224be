//! Seeded Monte Carlo engine: event probabilities over model draws,
//! parameter sweeps, bisection threshold location, and the standing
//! verification suites (clause density, coupling agreement, moment
//! checks).
//!
//! Trial i of a run draws its own generator stream from
//! substream(master_seed, i), so a batch is reproducible bit for bit
//! from its config regardless of parallelism; only the recorded
//! wall-clock times vary, and they are excluded from equality.

use std::collections::HashMap;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::analytics;
use crate::error::{Error, Result};
use crate::geometry::within;
use crate::models::{self, CollisionReport, Generated, ModelParams};
use crate::rng::{RngStream, stream, substream_seed};
use crate::solvers::{
    DEFAULT_VAR_LIMIT, component_stats, count_bicycles, count_snakes, solve_2sat,
    solve_ksat_complete,
};

/// Two-sided 95% normal quantile used by every Wilson interval.
pub const WILSON_Z: f64 = 1.959963984540054;
/// Trials a threshold probe starts with.
pub const ESCALATION_START: u64 = 100;
/// Trial ceiling per threshold probe; doubling stops here.
pub const ESCALATION_CAP: u64 = 10_000;
/// Absolute difference at which an exact-series check counts as a
/// 3-sigma failure; see `verify_moment`.
pub const SERIES_TOLERANCE: f64 = 1e-10;

const WIDTH_SWEEP_POINTS: usize = 9;
const WIDTH_SWEEP_TRIALS: u64 = 600;
const MAX_BISECTIONS: usize = 60;

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Event {
    Sat,
    Unsat,
    Connected,
    HasBicycle { l_max: usize },
    SnakeCount { s: usize },
    ClauseCount,
}

impl Event {
    /// Stable name used in results CSV and error messages.
    pub fn label(&self) -> String {
        match self {
            Event::Sat => "sat".into(),
            Event::Unsat => "unsat".into(),
            Event::Connected => "connected".into(),
            Event::HasBicycle { l_max } => format!("has_bicycle_l{l_max}"),
            Event::SnakeCount { s } => format!("snake_count_s{s}"),
            Event::ClauseCount => "clause_count".into(),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Flag(bool),
    Count(u64),
}

impl Outcome {
    pub fn as_flag(&self) -> Result<bool> {
        match self {
            Outcome::Flag(b) => Ok(*b),
            Outcome::Count(_) => Err(Error::WrongOutcomeKind(
                "expected a boolean outcome, found a count".into(),
            )),
        }
    }

    pub fn numeric(&self) -> f64 {
        match self {
            Outcome::Flag(b) => *b as u64 as f64,
            Outcome::Count(c) => *c as f64,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Debug, Serialize)]
pub struct ExperimentConfig {
    pub params: ModelParams,
    pub event: Event,
    pub trials: u64,
    pub master_seed: u64,
    /// Worker threads; 0 delegates to the global pool.
    pub parallelism: usize,
    /// Optional cap on n * trials of work per run.
    pub budget: Option<u64>,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub seed: u64,
    pub outcome: Outcome,
    pub elapsed_ms: u64,
}

/// Equality ignores `elapsed_ms`: reproducibility is about outcomes,
/// not timing.
impl PartialEq for TrialRecord {
    fn eq(&self, other: &Self) -> bool {
        self.trial == other.trial && self.seed == other.seed && self.outcome == other.outcome
    }
}

#[derive(Clone, PartialEq, Debug, Serialize)]
pub struct TrialBatch {
    pub config: ExperimentConfig,
    pub outcomes: Vec<TrialRecord>,
}

impl TrialBatch {
    pub fn successes(&self) -> Result<u64> {
        let mut total = 0;
        for r in &self.outcomes {
            total += r.outcome.as_flag()? as u64;
        }
        Ok(total)
    }
}

fn check_budget(params: &ModelParams, budget: Option<u64>, trials: u64) -> Result<()> {
    if let Some(budget) = budget {
        let requested = params.n.saturating_mul(trials);
        if requested > budget {
            return Err(Error::BudgetExceeded { requested, budget });
        }
    }
    Ok(())
}

fn with_pool<T: Send>(
    parallelism: usize,
    f: impl FnOnce() -> Result<T> + Send,
) -> Result<T> {
    if parallelism == 0 {
        f()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(parallelism)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
        pool.install(f)
    }
}

fn eval_event(params: &ModelParams, event: Event, seed: u64) -> Result<Outcome> {
    match models::generate(params, seed)? {
        Generated::Graph { graph, .. } => match event {
            Event::Connected => Ok(Outcome::Flag(component_stats(&graph)?.connected)),
            Event::ClauseCount => Ok(Outcome::Count(graph.edges.len() as u64)),
            other => Err(Error::UnsupportedEvent {
                event: other.label(),
                model: format!("{:?}", params.model),
            }),
        },
        Generated::Formula { formula, .. } => match event {
            Event::Sat | Event::Unsat => {
                let result = if formula.k == 2 {
                    solve_2sat(&formula)?
                } else {
                    solve_ksat_complete(&formula, DEFAULT_VAR_LIMIT)?
                };
                let sat = result.is_sat();
                Ok(Outcome::Flag(if event == Event::Sat { sat } else { !sat }))
            }
            Event::HasBicycle { l_max } => {
                let total: u64 = count_bicycles(&formula, l_max)?.values().sum();
                Ok(Outcome::Flag(total > 0))
            }
            Event::SnakeCount { s } => Ok(Outcome::Count(count_snakes(&formula, s)?)),
            Event::ClauseCount => Ok(Outcome::Count(formula.clauses.len() as u64)),
            Event::Connected => Err(Error::UnsupportedEvent {
                event: event.label(),
                model: format!("{:?}", params.model),
            }),
        },
    }
}

/// Runs `config.trials` independent trials, one substream each.
pub fn run_trials(config: &ExperimentConfig) -> Result<TrialBatch> {
    if config.trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    check_budget(&config.params, config.budget, config.trials)?;
    let params = config.params;
    let event = config.event;
    let master = config.master_seed;
    let outcomes = with_pool(config.parallelism, || {
        (0..config.trials)
            .into_par_iter()
            .map(|i| {
                let seed = substream_seed(master, i);
                let start = Instant::now();
                let outcome = eval_event(&params, event, seed)?;
                Ok(TrialRecord {
                    trial: i,
                    seed,
                    outcome,
                    elapsed_ms: start.elapsed().as_millis() as u64,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(TrialBatch {
        config: *config,
        outcomes,
    })
}

/// Wilson 95% score interval: (p_hat, ci_lo, ci_hi).
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64, f64) {
    assert!(trials > 0 && successes <= trials);
    let t = trials as f64;
    let p = successes as f64 / t;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / t;
    let center = (p + z2 / (2.0 * t)) / denom;
    let half = WILSON_Z * (p * (1.0 - p) / t + z2 / (4.0 * t * t)).sqrt() / denom;
    // At the boundary counts the analytic endpoint is exact; avoid
    // returning rounding dust like 3e-18.
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (center + half).min(1.0) };
    (p, lo, hi)
}

/// Success frequency of a boolean-event batch with its Wilson
/// interval. Count-event batches are rejected.
pub fn estimate_probability(batch: &TrialBatch) -> Result<(f64, f64, f64)> {
    if batch.outcomes.is_empty() {
        return Err(Error::InvalidParameter("empty batch".into()));
    }
    let successes = batch.successes()?;
    Ok(wilson_interval(successes, batch.outcomes.len() as u64))
}

#[derive(Clone, Copy, PartialEq, Debug, Serialize)]
pub struct CurvePoint {
    pub param: f64,
    pub p_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub trials: u64,
}

#[derive(Clone, PartialEq, Debug, Serialize)]
pub struct Curve {
    pub points: Vec<CurvePoint>,
}

impl Curve {
    /// Adjacent pairs that move against the expected direction with
    /// disjoint confidence intervals. Wiggles inside CI overlap are
    /// expected sampling noise and not counted.
    pub fn monotone_violations(&self, increasing: bool) -> usize {
        self.points
            .windows(2)
            .filter(|w| {
                if increasing {
                    w[1].ci_hi < w[0].ci_lo
                } else {
                    w[1].ci_lo > w[0].ci_hi
                }
            })
            .count()
    }
}

/// One probability estimate per grid point, sharing the event, n, and
/// master seed of `config`. The grid must be strictly increasing.
pub fn sweep(config: &ExperimentConfig, grid: &[f64]) -> Result<Curve> {
    if grid.is_empty() || grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::BadGrid);
    }
    let mut points = Vec::with_capacity(grid.len());
    for &param in grid {
        let mut cfg = *config;
        cfg.params.param = param;
        let batch = run_trials(&cfg)?;
        let (p_hat, ci_lo, ci_hi) = estimate_probability(&batch)?;
        points.push(CurvePoint {
            param,
            p_hat,
            ci_lo,
            ci_hi,
            trials: cfg.trials,
        });
    }
    Ok(Curve { points })
}

#[derive(Clone, Copy, PartialEq, Debug, Serialize)]
pub struct ThresholdEstimate {
    pub param_at_half: f64,
    pub bracket: (f64, f64),
    pub width_10_90: f64,
    pub n: u64,
}

/// Success counts over half-open trial index ranges at a parameter
/// value: `(param, from, to)` returns the successes among trials
/// `from..to`. Must be a pure function of its arguments so cached
/// prefixes stay valid.
pub type SuccessSource<'a> = dyn FnMut(f64, u64, u64) -> Result<u64> + 'a;

/// Probe cache for threshold search: per parameter value, cumulative
/// (successes, trials) so bisection revisits extend earlier work
/// instead of repeating it.
struct Prober<'a, 'b> {
    source: &'a mut SuccessSource<'b>,
    target: f64,
    cache: HashMap<u64, (u64, u64)>,
}

impl Prober<'_, '_> {
    /// Estimate p at `param`, escalating trials (doubling, capped)
    /// while the Wilson interval still straddles the target.
    fn probe(&mut self, param: f64) -> Result<f64> {
        let key = param.to_bits();
        let (mut succ, mut done) = self.cache.get(&key).copied().unwrap_or((0, 0));
        if done == 0 {
            done = ESCALATION_START.min(ESCALATION_CAP);
            succ = (self.source)(param, 0, done)?;
        }
        loop {
            let (_, lo, hi) = wilson_interval(succ, done);
            if done >= ESCALATION_CAP || !(lo < self.target && self.target < hi) {
                break;
            }
            let add = done.min(ESCALATION_CAP - done);
            succ += (self.source)(param, done, done + add)?;
            done += add;
        }
        self.cache.insert(key, (succ, done));
        Ok(succ as f64 / done as f64)
    }

    /// Estimate p at `param` from at least `min_trials` trials,
    /// reusing whatever the cache already holds.
    fn ensure(&mut self, param: f64, min_trials: u64) -> Result<(f64, u64)> {
        let key = param.to_bits();
        let (mut succ, mut done) = self.cache.get(&key).copied().unwrap_or((0, 0));
        if done < min_trials {
            succ += (self.source)(param, done, min_trials)?;
            done = min_trials;
        }
        self.cache.insert(key, (succ, done));
        Ok((succ as f64 / done as f64, done))
    }
}

/// Weighted pool-adjacent-violators fit, nondecreasing.
fn isotonic_increasing(ys: &[f64], ws: &[f64]) -> Vec<f64> {
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(ys.len());
    for (&y, &w) in ys.iter().zip(ws) {
        blocks.push((w, y, 1));
        while blocks.len() >= 2 {
            let (lw, ly, lc) = blocks[blocks.len() - 1];
            let (pw, py, pc) = blocks[blocks.len() - 2];
            if py <= ly {
                break;
            }
            blocks.truncate(blocks.len() - 2);
            let w = pw + lw;
            blocks.push((w, (pw * py + lw * ly) / w, pc + lc));
        }
    }
    blocks
        .into_iter()
        .flat_map(|(_, mean, count)| std::iter::repeat_n(mean, count))
        .collect()
}

/// Abscissa where the nondecreasing polyline (xs, fit) crosses
/// `level`, clamped to the grid ends if it never does.
fn crossing(xs: &[f64], fit: &[f64], level: f64) -> f64 {
    if fit[0] >= level {
        return xs[0];
    }
    for i in 0..fit.len() - 1 {
        if fit[i] < level && fit[i + 1] >= level {
            let span = fit[i + 1] - fit[i];
            return xs[i] + (level - fit[i]) / span * (xs[i + 1] - xs[i]);
        }
    }
    *xs.last().expect("non-empty grid")
}

/// Locates the parameter where the event probability crosses `target`
/// by bisection on [lo, hi], assuming the caller picked an event
/// monotone in the parameter. Each probe starts at 100 trials and
/// doubles while its interval straddles the target, capped at 10^4,
/// so samples concentrate near the transition. The returned
/// width_10_90 comes from an isotonic fit over a fixed grid spanning
/// [lo, hi]. `config.trials` is ignored; the engine chooses trial
/// counts.
pub fn find_threshold(
    config: &ExperimentConfig,
    lo: f64,
    hi: f64,
    target: f64,
    rel_tol: f64,
) -> Result<ThresholdEstimate> {
    let params = config.params;
    let event = config.event;
    let master = config.master_seed;
    let parallelism = config.parallelism;
    let budget = config.budget;
    let mut source = move |param: f64, from: u64, to: u64| -> Result<u64> {
        let mut p = params;
        p.param = param;
        check_budget(&p, budget, to)?;
        with_pool(parallelism, || {
            (from..to)
                .into_par_iter()
                .map(|i| {
                    let outcome = eval_event(&p, event, substream_seed(master, i))?;
                    Ok(outcome.as_flag()? as u64)
                })
                .try_reduce(|| 0, |a, b| Ok(a + b))
        })
    };
    find_threshold_by(&mut source, lo, hi, target, rel_tol, config.params.n)
}

/// The threshold engine behind [`find_threshold`], driven by an
/// arbitrary success source. Exposed so the search logic can be
/// exercised against synthetic response curves.
pub fn find_threshold_by(
    source: &mut SuccessSource<'_>,
    lo: f64,
    hi: f64,
    target: f64,
    rel_tol: f64,
    n: u64,
) -> Result<ThresholdEstimate> {
    if !(rel_tol >= 0.01) || !rel_tol.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "rel_tol must be at least 0.01, got {rel_tol}"
        )));
    }
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "target must lie strictly between 0 and 1, got {target}"
        )));
    }
    if !(lo > 0.0) || !(hi > lo) || !hi.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "bracket must satisfy 0 < lo < hi, got [{lo}, {hi}]"
        )));
    }
    let mut prober = Prober {
        source,
        target,
        cache: HashMap::new(),
    };

    let p_lo = prober.probe(lo)?;
    let p_hi = prober.probe(hi)?;
    let bracketed = (p_lo < target && target < p_hi) || (p_lo > target && target > p_hi);
    if !bracketed {
        return Err(Error::NonBracketing {
            lo,
            hi,
            p_lo,
            p_hi,
            target,
        });
    }
    let increasing = p_hi > p_lo;

    let (mut blo, mut bhi) = (lo, hi);
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (blo + bhi);
        if bhi - blo <= rel_tol * mid {
            break;
        }
        let p_mid = prober.probe(mid)?;
        if (p_mid >= target) == increasing {
            bhi = mid;
        } else {
            blo = mid;
        }
    }
    let param_at_half = 0.5 * (blo + bhi);

    let mut xs = Vec::with_capacity(WIDTH_SWEEP_POINTS);
    let mut ys = Vec::with_capacity(WIDTH_SWEEP_POINTS);
    let mut ws = Vec::with_capacity(WIDTH_SWEEP_POINTS);
    for i in 0..WIDTH_SWEEP_POINTS {
        let x = lo + (hi - lo) * i as f64 / (WIDTH_SWEEP_POINTS - 1) as f64;
        let (p, t) = prober.ensure(x, WIDTH_SWEEP_TRIALS)?;
        xs.push(x);
        ys.push(if increasing { p } else { 1.0 - p });
        ws.push(t as f64);
    }
    let fit = isotonic_increasing(&ys, &ws);
    let width_10_90 = (crossing(&xs, &fit, 0.9) - crossing(&xs, &fit, 0.1)).abs();

    Ok(ThresholdEstimate {
        param_at_half,
        bracket: (blo, bhi),
        width_10_90,
        n,
    })
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Mean z-score against a sampled standard error, falling back to a
/// Poisson-style theoretical error when the sample is degenerate.
fn mean_z(mean: f64, sd: f64, analytic: f64, trials: u64) -> f64 {
    if mean == analytic {
        return 0.0;
    }
    let se = if sd > 0.0 {
        sd / (trials as f64).sqrt()
    } else {
        (analytic.abs().max(f64::MIN_POSITIVE) / trials as f64).sqrt()
    };
    (mean - analytic) / se
}

#[derive(Clone, Copy, PartialEq, Debug, Serialize)]
pub struct DensityReport {
    pub empirical_mean: f64,
    pub analytic: f64,
    pub z: f64,
    pub trials: u64,
    pub per_trial_sd: f64,
}

/// Compares the mean generated clause count against the closed form.
/// Rejects parameter sets whose expected count is below the CLT
/// regime (30).
pub fn verify_clause_density(
    params: &ModelParams,
    trials: u64,
    master_seed: u64,
) -> Result<DensityReport> {
    if trials < 2 {
        return Err(Error::InvalidParameter(
            "density check needs at least 2 trials".into(),
        ));
    }
    let analytic = analytics::expected_clauses(params)?.value;
    if analytic < 30.0 {
        return Err(Error::DegenerateParams(format!(
            "expected clause count {analytic:.2} is below the CLT regime (30)"
        )));
    }
    let config = ExperimentConfig {
        params: *params,
        event: Event::ClauseCount,
        trials,
        master_seed,
        parallelism: 0,
        budget: None,
    };
    let batch = run_trials(&config)?;
    let values: Vec<f64> = batch.outcomes.iter().map(|r| r.outcome.numeric()).collect();
    let (mean, sd) = mean_sd(&values);
    Ok(DensityReport {
        empirical_mean: mean,
        analytic,
        z: mean_z(mean, sd, analytic, trials),
        trials,
        per_trial_sd: sd,
    })
}

#[derive(Clone, Copy, PartialEq, Debug, Serialize)]
pub struct CouplingReport {
    pub trials: u64,
    pub identical: u64,
    pub agreement_rate: f64,
    /// Collision counters summed over all trials.
    pub collisions: CollisionReport,
    pub heads_mean: f64,
    pub heads_expected: f64,
    pub heads_z: f64,
}

/// Runs coupled continuous/discrete draws and reports the fraction
/// that produced identical clause multisets, plus the repair-coin
/// count against its closed form.
pub fn verify_coupling(
    n: u64,
    k: usize,
    d: usize,
    mu: f64,
    trials: u64,
    master_seed: u64,
) -> Result<CouplingReport> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let mut identical = 0u64;
    let mut collisions = CollisionReport {
        extra_heads: 0,
        same_cell_duplicates: 0,
        boundary_flip_pairs: 0,
    };
    let mut heads = Vec::with_capacity(trials as usize);
    for i in 0..trials {
        let pair = models::generate_discrete_coupled(n, k, d, mu, substream_seed(master_seed, i))?;
        if pair.identical() {
            identical += 1;
        }
        collisions.extra_heads += pair.collisions.extra_heads;
        collisions.same_cell_duplicates += pair.collisions.same_cell_duplicates;
        collisions.boundary_flip_pairs += pair.collisions.boundary_flip_pairs;
        heads.push(pair.collisions.extra_heads as f64);
    }
    let (heads_mean, sd) = mean_sd(&heads);
    let heads_expected = models::expected_extra_heads(n, d, mu)?;
    Ok(CouplingReport {
        trials,
        identical,
        agreement_rate: identical as f64 / trials as f64,
        collisions,
        heads_mean,
        heads_expected,
        heads_z: mean_z(heads_mean, sd, heads_expected, trials),
    })
}

#[derive(Clone, PartialEq, Debug, Serialize)]
pub struct MomentReport {
    pub formula_id: String,
    pub empirical: f64,
    pub analytic: f64,
    pub z: f64,
    pub trials: u64,
}

/// Checks one closed form against an independent computation.
///
/// `poisson_moment` compares all four moments at mu = params.param
/// against brute-force series summation; the reported z is scaled so
/// that |z| = 3 corresponds to an absolute difference of exactly
/// `SERIES_TOLERANCE` (trials is not used and reported as 0).
/// `wedge_prob`, `triple_path`, and `triple_star` estimate the fixed
/// clause-pattern frequency by sampling only the participating label
/// processes, which is distribution-identical to full generation.
/// `expected_snakes_exact` runs full gamma-model draws and counts
/// length-3 snakes.
pub fn verify_moment(
    formula_id: &str,
    params: &ModelParams,
    trials: u64,
    master_seed: u64,
) -> Result<MomentReport> {
    match formula_id {
        "poisson_moment" => {
            let mu = params.param;
            let mut worst = MomentReport {
                formula_id: formula_id.into(),
                empirical: 0.0,
                analytic: 0.0,
                z: 0.0,
                trials: 0,
            };
            for order in 1..=4 {
                let analytic = analytics::poisson_moment(mu, order)?.value;
                let series = poisson_moment_series(mu, order);
                let z = 3.0 * (series - analytic) / SERIES_TOLERANCE;
                if z.abs() >= worst.z.abs() {
                    worst.empirical = series;
                    worst.analytic = analytic;
                    worst.z = z;
                }
            }
            Ok(worst)
        }
        "wedge_prob" => {
            check_mc_trials(trials)?;
            let analytic = analytics::wedge_prob(params.param, params.d, params.n)?.value;
            let successes = mc_flag_trials(trials, master_seed, |rng| {
                pattern_event(params, &[(0, 1), (0, 2)], rng)
            });
            Ok(flag_report(formula_id, successes, trials, analytic))
        }
        "triple_path" | "triple_star" => {
            check_mc_trials(trials)?;
            let (path, star) = analytics::triple_probs(params.param, params.d, params.n)?;
            let (analytic, clauses): (f64, &[(usize, usize)]) = if formula_id == "triple_path" {
                (path.value, &[(0, 1), (1, 2), (2, 3)])
            } else {
                (star.value, &[(0, 1), (0, 2), (0, 3)])
            };
            let successes =
                mc_flag_trials(trials, master_seed, |rng| pattern_event(params, clauses, rng));
            Ok(flag_report(formula_id, successes, trials, analytic))
        }
        "expected_snakes_exact" => {
            check_mc_trials(trials)?;
            let s = 3;
            let analytic = analytics::expected_snakes_exact(params, s)?.value;
            let mut counts = Vec::with_capacity(trials as usize);
            for i in 0..trials {
                let (_, formula) = models::generate_f_gamma(
                    params.n,
                    params.k,
                    params.d,
                    params.param,
                    params.metric,
                    params.boundary,
                    substream_seed(master_seed, i),
                )?;
                counts.push(count_snakes(&formula, s)? as f64);
            }
            let (mean, sd) = mean_sd(&counts);
            Ok(MomentReport {
                formula_id: formula_id.into(),
                empirical: mean,
                analytic,
                z: mean_z(mean, sd, analytic, trials),
                trials,
            })
        }
        other => Err(Error::UnknownFormula(other.to_string())),
    }
}

fn check_mc_trials(trials: u64) -> Result<()> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    Ok(())
}

/// Brute-force E[N^order] for N ~ Poisson(mu) by series summation.
fn poisson_moment_series(mu: f64, order: u32) -> f64 {
    if mu == 0.0 {
        return 0.0;
    }
    let mut sum = 0.0;
    let mut p = (-mu).exp();
    let mut j = 0u64;
    loop {
        sum += p * (j as f64).powi(order as i32);
        j += 1;
        p *= mu / j as f64;
        if (j as f64 > mu + 20.0 && p * (j as f64).powi(order as i32) < 1e-18) || j > 100_000 {
            return sum;
        }
    }
}

/// Whether every listed clause (a pair of label-process indices) has
/// some point pair within the scaling radius. Samples only the
/// processes the pattern touches, in index order.
fn pattern_event(params: &ModelParams, clauses: &[(usize, usize)], rng: &mut RngStream) -> bool {
    let process_count = clauses.iter().map(|&(a, b)| a.max(b)).max().unwrap_or(0) + 1;
    let r = (params.n as f64).powf(-1.0 / params.d as f64);
    let mut processes: Vec<Vec<Vec<f64>>> = Vec::with_capacity(process_count);
    for _ in 0..process_count {
        let count = crate::geometry::poisson_u64(params.param, rng);
        processes.push(
            (0..count)
                .map(|_| (0..params.d).map(|_| rng.random::<f64>()).collect())
                .collect(),
        );
    }
    clauses.iter().all(|&(a, b)| {
        processes[a].iter().any(|p| {
            processes[b]
                .iter()
                .any(|q| within(p, q, r, params.metric, params.boundary))
        })
    })
}

fn mc_flag_trials(
    trials: u64,
    master_seed: u64,
    mut event: impl FnMut(&mut RngStream) -> bool,
) -> u64 {
    let mut successes = 0;
    for i in 0..trials {
        let mut rng = stream(substream_seed(master_seed, i));
        successes += event(&mut rng) as u64;
    }
    successes
}

fn flag_report(formula_id: &str, successes: u64, trials: u64, analytic: f64) -> MomentReport {
    let t = trials as f64;
    let p = successes as f64 / t;
    let sample_var = p * (1.0 - p);
    let fallback_var = (analytic * (1.0 - analytic)).max(f64::MIN_POSITIVE);
    let se = (sample_var.max(fallback_var) / t).sqrt();
    MomentReport {
        formula_id: formula_id.into(),
        empirical: p,
        analytic,
        z: (p - analytic) / se,
        trials,
    }
}
