//! Seeded experiment drivers.
//!
//! Every run gets its seed from [`run_seed`]`(master, cell, run)`, so results
//! do not depend on how runs are scheduled across worker threads. Runs are
//! executed on a rayon pool and collected in job order.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::graph::{triad_census, weakly_connected_components};
use crate::metrics::{
    count_opinion_peaks, exclusion_check, max_opinion_distance, screen_entropy, state_is_echo_chamber,
    DEFAULT_PEAK_BINS, DEFAULT_PEAK_MIN_HEIGHT,
};
use crate::params::{edges_for_density, Params, Strategy};
use crate::seed::run_seed;
use crate::sim::SimState;

/// Number of early epochs whose screen entropy is recorded.
pub const EARLY_EPOCHS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "status", content = "t", rename_all = "lowercase")]
pub enum EchoOutcome {
    Converged(u64),
    Censored(u64),
    Excluded(u64),
}

impl EchoOutcome {
    pub fn t(self) -> u64 {
        match self {
            EchoOutcome::Converged(t) | EchoOutcome::Censored(t) | EchoOutcome::Excluded(t) => t,
        }
    }

    pub fn is_converged(self) -> bool {
        matches!(self, EchoOutcome::Converged(_))
    }

    pub fn is_excluded(self) -> bool {
        matches!(self, EchoOutcome::Excluded(_))
    }
}

/// A run advanced to the echo-chamber steady state, `t_max`, or exclusion.
#[derive(Debug, Clone)]
pub struct SteadyStateRun {
    pub outcome: EchoOutcome,
    pub state: SimState,
    /// Mean screen entropy at the end of each of the first epochs.
    pub early_entropy: Vec<f64>,
}

impl SteadyStateRun {
    pub fn components(&self) -> usize {
        weakly_connected_components(self.state.graph()).num_labels()
    }

    pub fn peaks(&self) -> usize {
        count_opinion_peaks(self.state.opinions(), DEFAULT_PEAK_BINS, DEFAULT_PEAK_MIN_HEIGHT)
            .expect("default bin count is valid")
    }

    pub fn final_entropy(&self) -> f64 {
        screen_entropy(&self.state)
    }
}

/// Steps `params` with the steady-state predicate checked once per epoch
/// (N steps). With `apply_exclusion`, runs that can never segregate are
/// stopped and reported as excluded.
pub fn run_to_steady_state(params: &Params, apply_exclusion: bool) -> Result<SteadyStateRun> {
    let mut state = SimState::new(params.clone(), None)?.with_event_log(false);
    let epoch = state.node_count().max(1) as u64;
    let mut early_entropy = Vec::with_capacity(EARLY_EPOCHS);
    let outcome = loop {
        if state_is_echo_chamber(&state) {
            break EchoOutcome::Converged(state.t());
        }
        if apply_exclusion && exclusion_check(state.graph(), state.opinions(), params.epsilon) {
            break EchoOutcome::Excluded(state.t());
        }
        if state.t() >= params.t_max {
            break EchoOutcome::Censored(state.t());
        }
        state.advance(epoch);
        if early_entropy.len() < EARLY_EPOCHS {
            early_entropy.push(screen_entropy(&state));
        }
    };
    Ok(SteadyStateRun {
        outcome,
        state,
        early_entropy,
    })
}

/// Time until the echo-chamber steady state, with exclusion applied.
pub fn time_to_echo_chamber(params: &Params, seed: u64) -> Result<EchoOutcome> {
    let params = Params {
        seed,
        ..params.clone()
    };
    Ok(run_to_steady_state(&params, true)?.outcome)
}

fn pool(workers: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        b = b.num_threads(w);
    }
    b.build().map_err(|e| Error::Config(format!("thread pool: {e}")))
}

/// Runs `f` over `jobs` on `workers` threads, preserving job order.
pub fn par_map<J, T, F>(jobs: &[J], workers: Option<usize>, f: F) -> Result<Vec<T>>
where
    J: Sync,
    T: Send,
    F: Fn(&J) -> Result<T> + Sync + Send,
{
    pool(workers)?.install(|| jobs.par_iter().map(&f).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
    pub count: usize,
}

/// Sample mean and (n-1) standard deviation; NaN mean for an empty sample,
/// zero sd for a single value.
pub fn mean_sd(xs: &[f64]) -> MeanSd {
    let n = xs.len();
    if n == 0 {
        return MeanSd {
            mean: f64::NAN,
            sd: f64::NAN,
            count: 0,
        };
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let sd = if n < 2 {
        0.0
    } else {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    };
    MeanSd { mean, sd, count: n }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellStats {
    pub runs: usize,
    pub converged: usize,
    pub censored: usize,
    pub excluded: usize,
    /// Over converged runs only.
    pub time: MeanSd,
    /// Over non-excluded runs, censored runs counted at their stop time.
    pub time_with_censored: MeanSd,
}

impl CellStats {
    pub fn from_outcomes(outcomes: &[EchoOutcome]) -> Self {
        let converged: Vec<f64> = outcomes
            .iter()
            .filter(|o| o.is_converged())
            .map(|o| o.t() as f64)
            .collect();
        let kept: Vec<f64> = outcomes
            .iter()
            .filter(|o| !o.is_excluded())
            .map(|o| o.t() as f64)
            .collect();
        let excluded = outcomes.iter().filter(|o| o.is_excluded()).count();
        CellStats {
            runs: outcomes.len(),
            converged: converged.len(),
            censored: kept.len() - converged.len(),
            excluded,
            time: mean_sd(&converged),
            time_with_censored: mean_sd(&kept),
        }
    }
}

/// Grid over influence strength and rewiring probability.
#[derive(Debug, Clone, Serialize)]
pub struct SweepSpec {
    pub mu: Vec<f64>,
    pub q: Vec<f64>,
    pub runs_per_cell: usize,
    pub base: Params,
    pub master_seed: u64,
}

/// `per_decade` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let decades = (hi / lo).log10();
    let steps = (decades * per_decade as f64).round() as usize;
    (0..=steps)
        .map(|k| lo * 10f64.powf(decades * k as f64 / steps.max(1) as f64))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCell {
    pub mu: f64,
    pub q: f64,
    pub stats: CellStats,
    pub outcomes: Vec<EchoOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    /// Row-major: `mu` outer, `q` inner.
    pub cells: Vec<SweepCell>,
}

impl SweepResult {
    pub fn cell(&self, mu: f64, q: f64) -> Option<&SweepCell> {
        self.cells.iter().find(|c| c.mu == mu && c.q == q)
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(
            out,
            "mu,q,runs,converged,censored,excluded,mean_time,sd_time,mean_time_with_censored,sd_time_with_censored"
        )?;
        for c in &self.cells {
            let s = &c.stats;
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                c.mu,
                c.q,
                s.runs,
                s.converged,
                s.censored,
                s.excluded,
                s.time.mean,
                s.time.sd,
                s.time_with_censored.mean,
                s.time_with_censored.sd
            )?;
        }
        Ok(())
    }
}

pub fn sweep_mu_q(spec: &SweepSpec, workers: Option<usize>) -> Result<SweepResult> {
    if spec.runs_per_cell == 0 {
        return Err(Error::param("runs_per_cell must be >= 1"));
    }
    let mut jobs = Vec::new();
    for (a, &mu) in spec.mu.iter().enumerate() {
        for (b, &q) in spec.q.iter().enumerate() {
            let cell = (a * spec.q.len() + b) as u64;
            let params = Params {
                mu,
                q,
                ..spec.base.clone()
            };
            params.validate()?;
            for run in 0..spec.runs_per_cell as u64 {
                jobs.push((params.clone(), run_seed(spec.master_seed, cell, run)));
            }
        }
    }
    let outcomes = par_map(&jobs, workers, |(p, seed)| time_to_echo_chamber(p, *seed))?;
    let cells = outcomes
        .chunks(spec.runs_per_cell)
        .zip(jobs.chunks(spec.runs_per_cell))
        .map(|(outs, js)| SweepCell {
            mu: js[0].0.mu,
            q: js[0].0.q,
            stats: CellStats::from_outcomes(outs),
            outcomes: outs.to_vec(),
        })
        .collect();
    Ok(SweepResult { cells })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsilonRow {
    pub epsilon: f64,
    pub peaks: MeanSd,
    pub max_distance: MeanSd,
    pub converged: usize,
    pub runs: usize,
}

pub fn sweep_epsilon(
    values: &[f64],
    runs: usize,
    base: &Params,
    master_seed: u64,
    workers: Option<usize>,
) -> Result<Vec<EpsilonRow>> {
    let mut jobs = Vec::new();
    for (cell, &epsilon) in values.iter().enumerate() {
        for run in 0..runs as u64 {
            let p = Params {
                epsilon,
                seed: run_seed(master_seed, cell as u64, run),
                ..base.clone()
            };
            p.validate()?;
            jobs.push(p);
        }
    }
    let results = par_map(&jobs, workers, |p| {
        let r = run_to_steady_state(p, false)?;
        Ok((
            r.peaks() as f64,
            max_opinion_distance(r.state.opinions())?,
            r.outcome.is_converged(),
        ))
    })?;
    Ok(values
        .iter()
        .zip(results.chunks(runs.max(1)))
        .map(|(&epsilon, rs)| EpsilonRow {
            epsilon,
            peaks: mean_sd(&rs.iter().map(|r| r.0).collect::<Vec<_>>()),
            max_distance: mean_sd(&rs.iter().map(|r| r.1).collect::<Vec<_>>()),
            converged: rs.iter().filter(|r| r.2).count(),
            runs,
        })
        .collect())
}

pub fn write_epsilon_csv<W: Write>(out: &mut W, rows: &[EpsilonRow]) -> std::io::Result<()> {
    writeln!(out, "epsilon,runs,converged,mean_peaks,sd_peaks,mean_max_distance,sd_max_distance")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.epsilon, r.runs, r.converged, r.peaks.mean, r.peaks.sd, r.max_distance.mean, r.max_distance.sd
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRow {
    pub n: usize,
    pub e: usize,
    pub stats: CellStats,
}

/// Time to echo chamber as a function of N at fixed density.
pub fn scaling_in_n(
    n_values: &[usize],
    runs: usize,
    base: &Params,
    density: f64,
    master_seed: u64,
    workers: Option<usize>,
) -> Result<Vec<ScalingRow>> {
    let mut jobs = Vec::new();
    for (cell, &n) in n_values.iter().enumerate() {
        let p = base.with_n_at_density(n, density);
        p.validate()?;
        for run in 0..runs as u64 {
            jobs.push((p.clone(), run_seed(master_seed, cell as u64, run)));
        }
    }
    let outcomes = par_map(&jobs, workers, |(p, seed)| time_to_echo_chamber(p, *seed))?;
    Ok(n_values
        .iter()
        .zip(outcomes.chunks(runs.max(1)))
        .map(|(&n, outs)| ScalingRow {
            n,
            e: edges_for_density(n, density),
            stats: CellStats::from_outcomes(outs),
        })
        .collect())
}

pub fn write_scaling_csv<W: Write>(out: &mut W, rows: &[ScalingRow]) -> std::io::Result<()> {
    writeln!(out, "n,e,runs,converged,censored,excluded,mean_time,sd_time")?;
    for r in rows {
        let s = &r.stats;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.n, r.e, s.runs, s.converged, s.censored, s.excluded, s.time_with_censored.mean, s.time_with_censored.sd
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares `y = slope x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() {
        return Err(Error::param("x and y lengths differ"));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if xs.len() < 2 || sxx == 0.0 {
        return Err(Error::param("linear fit needs at least two distinct x values"));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LinearFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RankTest {
    pub u: f64,
    pub z: f64,
    pub p_value: f64,
}

/// Two-sided Mann-Whitney U test (normal approximation with tie and
/// continuity corrections).
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<RankTest> {
    let (n1, n2) = (a.len(), b.len());
    if n1 == 0 || n2 == 0 {
        return Err(Error::param("rank test needs two nonempty samples"));
    }
    let mut all: Vec<(f64, bool)> = a.iter().map(|&x| (x, true)).chain(b.iter().map(|&x| (x, false))).collect();
    all.sort_by(|x, y| x.0.total_cmp(&y.0));
    let n = all.len();
    let mut rank_sum_a = 0.0;
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        rank_sum_a += all[i..=j].iter().filter(|x| x.1).count() as f64 * avg_rank;
        i = j + 1;
    }
    let (f1, f2, fn_) = (n1 as f64, n2 as f64, n as f64);
    let u = rank_sum_a - f1 * (f1 + 1.0) / 2.0;
    let mean = f1 * f2 / 2.0;
    let var = f1 * f2 / 12.0 * ((fn_ + 1.0) - tie_term / (fn_ * (fn_ - 1.0)));
    if var <= 0.0 {
        return Ok(RankTest {
            u,
            z: 0.0,
            p_value: 1.0,
        });
    }
    let diff = u - mean;
    let z = (diff.abs() - 0.5).max(0.0) * diff.signum() / var.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let p_value = (2.0 * (1.0 - normal.cdf(z.abs()))).min(1.0);
    Ok(RankTest { u, z, p_value })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrategyRun {
    pub outcome: EchoOutcome,
    pub closed_triads: u64,
    pub max_in_degree: usize,
    pub peaks: usize,
    pub in_degrees: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrategySummary {
    pub strategy: Strategy,
    pub closed_triads: MeanSd,
    pub time_with_censored: MeanSd,
    pub converged: usize,
    pub peaks: MeanSd,
    pub max_in_degree: MeanSd,
    /// In-degree CCDF pooled over all runs.
    pub ccdf: Vec<(usize, f64)>,
    pub runs: Vec<StrategyRun>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrategyComparison {
    pub strategies: Vec<StrategySummary>,
    /// Rank tests of closed-triad counts against the random strategy.
    pub triad_tests: Vec<(Strategy, RankTest)>,
}

impl StrategyComparison {
    pub fn get(&self, s: Strategy) -> &StrategySummary {
        self.strategies
            .iter()
            .find(|x| x.strategy == s)
            .expect("every strategy is run")
    }

    pub fn write_summary_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(
            out,
            "strategy,runs,converged,mean_closed_triads,sd_closed_triads,mean_time,sd_time,mean_peaks,sd_peaks,mean_max_in_degree,p_value_vs_random"
        )?;
        for s in &self.strategies {
            let p = self
                .triad_tests
                .iter()
                .find(|(k, _)| *k == s.strategy)
                .map(|(_, t)| t.p_value.to_string())
                .unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                s.strategy,
                s.runs.len(),
                s.converged,
                s.closed_triads.mean,
                s.closed_triads.sd,
                s.time_with_censored.mean,
                s.time_with_censored.sd,
                s.peaks.mean,
                s.peaks.sd,
                s.max_in_degree.mean,
                p
            )?;
        }
        Ok(())
    }

    pub fn write_ccdf_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "strategy,in_degree,fraction_at_least")?;
        for s in &self.strategies {
            for (d, f) in &s.ccdf {
                writeln!(out, "{},{},{}", s.strategy, d, f)?;
            }
        }
        Ok(())
    }
}

fn pooled_ccdf(runs: &[StrategyRun]) -> Vec<(usize, f64)> {
    let all: Vec<usize> = runs.iter().flat_map(|r| r.in_degrees.iter().copied()).collect();
    let max = all.iter().copied().max().unwrap_or(0);
    let mut counts = vec![0usize; max + 1];
    for &d in &all {
        counts[d] += 1;
    }
    let total = all.len().max(1) as f64;
    let mut at_least = all.len();
    counts
        .into_iter()
        .enumerate()
        .map(|(d, c)| {
            let f = at_least as f64 / total;
            at_least -= c;
            (d, f)
        })
        .collect()
}

/// Runs all three rewiring strategies from matched seeds (run `k` of every
/// strategy starts from the same graph and opinions).
pub fn compare_strategies(
    runs: usize,
    base: &Params,
    master_seed: u64,
    workers: Option<usize>,
) -> Result<StrategyComparison> {
    let mut jobs = Vec::new();
    for strategy in Strategy::ALL {
        for run in 0..runs as u64 {
            let p = Params {
                strategy,
                seed: run_seed(master_seed, 0, run),
                ..base.clone()
            };
            p.validate()?;
            jobs.push(p);
        }
    }
    let results = par_map(&jobs, workers, |p| {
        let r = run_to_steady_state(p, false)?;
        let g = r.state.graph();
        let in_degrees = g.in_degrees();
        Ok(StrategyRun {
            outcome: r.outcome,
            closed_triads: triad_census(g).closed,
            max_in_degree: in_degrees.iter().copied().max().unwrap_or(0),
            peaks: r.peaks(),
            in_degrees,
        })
    })?;
    let mut strategies = Vec::new();
    for (strategy, rs) in Strategy::ALL.into_iter().zip(results.chunks(runs.max(1))) {
        let f = |g: &dyn Fn(&StrategyRun) -> f64| mean_sd(&rs.iter().map(g).collect::<Vec<_>>());
        strategies.push(StrategySummary {
            strategy,
            closed_triads: f(&|r| r.closed_triads as f64),
            time_with_censored: f(&|r| r.outcome.t() as f64),
            converged: rs.iter().filter(|r| r.outcome.is_converged()).count(),
            peaks: f(&|r| r.peaks as f64),
            max_in_degree: f(&|r| r.max_in_degree as f64),
            ccdf: pooled_ccdf(rs),
            runs: rs.to_vec(),
        });
    }
    let triads = |s: &StrategySummary| s.runs.iter().map(|r| r.closed_triads as f64).collect::<Vec<_>>();
    let random = triads(&strategies[0]);
    let mut triad_tests = Vec::new();
    for s in &strategies[1..] {
        triad_tests.push((s.strategy, mann_whitney_u(&triads(s), &random)?));
    }
    Ok(StrategyComparison {
        strategies,
        triad_tests,
    })
}

/// Per-run outcome of the single-run reproduction protocol.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmergenceRun {
    pub seed: u64,
    pub outcome: EchoOutcome,
    pub components: usize,
    pub peaks: usize,
    pub early_entropy: f64,
    pub final_entropy: f64,
}

/// Repeats the steady-state protocol for `runs` seeds, recording structure
/// and screen entropy at the stop time.
pub fn emergence_runs(runs: usize, base: &Params, master_seed: u64, workers: Option<usize>) -> Result<Vec<EmergenceRun>> {
    let seeds: Vec<u64> = (0..runs as u64).map(|r| run_seed(master_seed, 0, r)).collect();
    par_map(&seeds, workers, |&seed| {
        let p = Params {
            seed,
            ..base.clone()
        };
        let r = run_to_steady_state(&p, true)?;
        let early = mean_sd(&r.early_entropy).mean;
        Ok(EmergenceRun {
            seed,
            outcome: r.outcome,
            components: r.components(),
            peaks: r.peaks(),
            early_entropy: early,
            final_entropy: r.final_entropy(),
        })
    })
}

pub fn write_emergence_csv<W: Write>(out: &mut W, rows: &[EmergenceRun]) -> std::io::Result<()> {
    writeln!(out, "seed,status,t,components,peaks,early_entropy,final_entropy")?;
    for r in rows {
        let status = match r.outcome {
            EchoOutcome::Converged(_) => "converged",
            EchoOutcome::Censored(_) => "censored",
            EchoOutcome::Excluded(_) => "excluded",
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.seed,
            status,
            r.outcome.t(),
            r.components,
            r.peaks,
            r.early_entropy,
            r.final_entropy
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_sd_basic() {
        let m = mean_sd(&[1.0, 2.0, 3.0]);
        assert_eq!((m.mean, m.sd, m.count), (2.0, 1.0, 3));
        assert_eq!(mean_sd(&[4.0]).sd, 0.0);
        assert!(mean_sd(&[]).mean.is_nan());
    }

    #[test]
    fn fit_recovers_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x - 1.0).collect();
        let f = linear_fit(&xs, &ys).unwrap();
        assert!((f.slope - 3.0).abs() < 1e-12);
        assert!((f.intercept + 1.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        assert!(linear_fit(&[2.0], &[1.0]).is_err());
        assert!(linear_fit(&[2.0, 2.0], &[1.0, 3.0]).is_err());
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(1e-3, 1.0, 10);
        assert_eq!(g.len(), 31);
        assert!((g[0] - 1e-3).abs() < 1e-15);
        assert!((g[30] - 1.0).abs() < 1e-12);
        assert!((g[10] - 1e-2).abs() < 1e-14);
    }

    #[test]
    fn rank_test_matches_reference() {
        // scipy.stats.mannwhitneyu(a, b, alternative="two-sided",
        //   method="asymptotic", use_continuity=True)
        let a = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let b = [4.5, 7.0, 8.0, 9.0, 10.0, 11.0];
        let t = mann_whitney_u(&a, &b).unwrap();
        assert_eq!(t.u, 2.0);
        assert!((t.p_value - 0.013_065_226_764_425_961).abs() < 1e-9, "p={}", t.p_value);

        let tied = mann_whitney_u(&[1.0, 1.0, 2.0, 3.0, 5.0, 5.0], &[1.0, 4.0, 5.0, 6.0, 6.0, 7.0]).unwrap();
        assert_eq!(tied.u, 8.0);
        assert!((tied.p_value - 0.122_169_102_687_390_29).abs() < 1e-9, "p={}", tied.p_value);

        let same = mann_whitney_u(&[1.0; 4], &[1.0; 4]).unwrap();
        assert_eq!(same.p_value, 1.0);
    }

    #[test]
    fn cell_stats_reconcile() {
        let outs = [
            EchoOutcome::Converged(100),
            EchoOutcome::Censored(1000),
            EchoOutcome::Excluded(50),
            EchoOutcome::Converged(300),
        ];
        let s = CellStats::from_outcomes(&outs);
        assert_eq!(s.converged + s.censored + s.excluded, s.runs);
        assert_eq!(s.time.mean, 200.0);
        assert!((s.time_with_censored.mean - 1400.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn sweep_bookkeeping_and_determinism() {
        let spec = SweepSpec {
            mu: vec![0.1, 0.5],
            q: vec![0.1, 0.5],
            runs_per_cell: 5,
            base: Params {
                t_max: 20_000,
                ..Params::default()
            },
            master_seed: 11,
        };
        let a = sweep_mu_q(&spec, Some(1)).unwrap();
        assert_eq!(a.cells.len(), 4);
        for c in &a.cells {
            assert_eq!(c.stats.converged + c.stats.censored + c.stats.excluded, 5);
        }
        let b = sweep_mu_q(&spec, Some(3)).unwrap();
        let outcomes = |r: &SweepResult| r.cells.iter().map(|c| c.outcomes.clone()).collect::<Vec<_>>();
        assert_eq!(outcomes(&a), outcomes(&b));
    }
}
