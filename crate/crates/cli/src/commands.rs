use std::collections::HashMap;
use std::fs;
use std::path::Path;

use echo_core::empirical::{calibrated_params, hashtag_vectors, load_labeled_network, validation_run, ValidationConfig};
use echo_core::graph::{largest_strongly_connected_component, triad_census, weakly_connected_components};
use echo_core::harness::{
    compare_strategies, linear_fit, log_grid, scaling_in_n, sweep_epsilon, sweep_mu_q, write_epsilon_csv,
    write_scaling_csv, SweepSpec,
};
use echo_core::io::{load_edge_list, write_edge_list};
use echo_core::metrics::{
    count_opinion_peaks, histogram, is_echo_chamber, max_opinion_distance, neighbor_opinion_diversity,
    opinion_histogram, opinion_partition, segregation_index, state_is_echo_chamber, write_metrics_csv,
    DEFAULT_PEAK_BINS, DEFAULT_PEAK_MIN_HEIGHT,
};
use echo_core::presets::{
    preset, small_network_density, DEFAULT_RUNS, EPSILON_SWEEP, MU_Q_GRID, SCALING_N, SCALING_RUNS,
};
use echo_core::sim::write_events_csv;
use echo_core::{DirectedGraph, MetricsSnapshot, Params, SimState};
use serde_json::{json, Value};

use crate::args::*;
use crate::error::{CliError, Result};
use crate::manifest::OutDir;
use crate::svg::{self, Series};

pub fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Run(a) => run(&a),
        Command::Sweep(a) => sweep(&a),
        Command::Epsilon(a) => epsilon(&a),
        Command::Scaling(a) => scaling(&a),
        Command::Strategies(a) => strategies(&a),
        Command::Validate(a) => validate(&a),
        Command::Metrics(a) => metrics(&a),
        Command::Serve(a) => crate::serve::serve(&a),
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn runs_or(runs: Option<usize>, default: usize) -> Result<usize> {
    match runs.unwrap_or(default) {
        0 => Err(usage("--runs must be >= 1")),
        r => Ok(r),
    }
}

fn bounded_t_max(p: &Params) -> Result<()> {
    if p.t_max == u64::MAX {
        return Err(usage("this preset has no step budget; pass --t-max"));
    }
    Ok(())
}

fn run(a: &RunArgs) -> Result<()> {
    let params = a.params.resolve("fig3")?;
    let loaded = a.graph.as_deref().map(load_edge_list).transpose()?;
    let mut state = SimState::new(params, loaded.as_ref().map(|l| l.graph.clone()))?.with_event_log(!a.no_events);
    let params = state.params().clone();
    bounded_t_max(&params)?;

    let every = a.every.unwrap_or(params.n as u64);
    if every == 0 {
        return Err(usage("--every must be >= 1"));
    }
    let mut snaps = Vec::new();
    let full = a.full;
    let outcome = state.run_until(
        |s| {
            snaps.push(MetricsSnapshot::of_state(s));
            !full && state_is_echo_chamber(s)
        },
        every,
    );
    // run_until stops on t_max without a final check.
    if snaps.last().is_some_and(|m| m.t != state.t()) {
        snaps.push(MetricsSnapshot::of_state(&state));
    }

    let mut out = OutDir::create(&a.out)?;
    out.write_with("metrics.csv", |w| write_metrics_csv(w, &snaps))?;
    out.write_with("opinions.csv", |w| {
        use std::io::Write;
        writeln!(w, "node,opinion")?;
        for (i, o) in state.opinions().iter().enumerate() {
            writeln!(w, "{i},{o}")?;
        }
        Ok(())
    })?;
    out.write_with("edges.txt", |w| write_edge_list(w, state.graph(), None))?;
    if !a.no_events {
        out.write_with("events.csv", |w| write_events_csv(w, state.events()))?;
    }
    if let Some(l) = &loaded {
        out.write_with("node_map.csv", |w| {
            use std::io::Write;
            writeln!(w, "node,name")?;
            for (i, name) in l.index.names().iter().enumerate() {
                writeln!(w, "{i},{name}")?;
            }
            Ok(())
        })?;
    }

    let series = |name: &'static str, f: fn(&MetricsSnapshot) -> Option<f64>| Series {
        name,
        points: snaps.iter().map(|m| (m.t as f64, f(m).unwrap_or(f64::NAN))).collect(),
    };
    let chart = svg::line_chart(
        "Metrics over time",
        "step",
        "value",
        &[
            series("segregation", |m| m.segregation),
            series("triad fraction", |m| Some(m.triad_fraction)),
            series("screen entropy", |m| Some(m.mean_screen_entropy)),
            series("neighbor diversity", |m| m.neighbor_diversity),
        ],
        false,
    );
    out.write("metrics.svg", chart)?;
    let final_hist = histogram(state.opinions().iter().copied(), -1.0, 1.0, DEFAULT_PEAK_BINS);
    out.write("opinions.svg", svg::histogram("Final opinions", "opinion", &final_hist, -1.0, 1.0))?;

    let last = snaps.last().expect("at least one snapshot");
    println!(
        "{} at t = {} (segregation {}, triad fraction {:.4})",
        if outcome.converged() { "echo chamber" } else { "stopped" },
        outcome.t(),
        last.segregation.map_or("n/a".into(), |s| format!("{s:.4}")),
        last.triad_fraction
    );
    out.finish(
        "run",
        &params,
        params.seed,
        json!({ "outcome": outcome, "final": last, "snapshot_every": every }),
    )
}

fn sweep(a: &SweepArgs) -> Result<()> {
    let base = a.params.resolve("fig6a")?;
    bounded_t_max(&base)?;
    let (mu, q) = match a.per_decade {
        Some(0) => return Err(usage("--per-decade must be >= 1")),
        Some(k) => (log_grid(1e-3, 1.0, k), log_grid(1e-3, 1.0, k)),
        None => {
            let or_grid = |v: &Vec<f64>| if v.is_empty() { MU_Q_GRID.to_vec() } else { v.clone() };
            (or_grid(&a.mu_values), or_grid(&a.q_values))
        }
    };
    let spec = SweepSpec {
        mu: mu.clone(),
        q: q.clone(),
        runs_per_cell: runs_or(a.runs, DEFAULT_RUNS)?,
        base: base.clone(),
        master_seed: base.seed,
    };
    let result = sweep_mu_q(&spec, a.exp.workers)?;
    let mut out = OutDir::create(&a.exp.out)?;
    out.write_with("sweep.csv", |w| result.write_csv(w))?;
    let cell = |i: usize, j: usize| result.cells[i * q.len() + j].stats.time_with_censored.mean;
    out.write("sweep.svg", svg::heatmap("Mean time to echo chamber (censored at t_max)", "mu", "q", &mu, &q, cell))?;
    println!("{} cells written to {}", result.cells.len(), out.dir.display());
    out.finish(
        "sweep",
        &base,
        base.seed,
        json!({ "mu": mu, "q": q, "runs_per_cell": spec.runs_per_cell }),
    )
}

fn epsilon(a: &EpsilonArgs) -> Result<()> {
    let base = a.params.resolve("fig4")?;
    bounded_t_max(&base)?;
    let values = if a.values.is_empty() { EPSILON_SWEEP.to_vec() } else { a.values.clone() };
    let runs = runs_or(a.runs, DEFAULT_RUNS)?;
    let rows = sweep_epsilon(&values, runs, &base, base.seed, a.exp.workers)?;
    let mut out = OutDir::create(&a.exp.out)?;
    out.write_with("epsilon.csv", |w| write_epsilon_csv(w, &rows))?;
    let chart = svg::line_chart(
        "Steady state versus confidence bound",
        "epsilon",
        "mean",
        &[
            Series {
                name: "opinion peaks",
                points: rows.iter().map(|r| (r.epsilon, r.peaks.mean)).collect(),
            },
            Series {
                name: "max opinion distance",
                points: rows.iter().map(|r| (r.epsilon, r.max_distance.mean)).collect(),
            },
        ],
        false,
    );
    out.write("epsilon.svg", chart)?;
    for r in &rows {
        println!("epsilon {}: peaks {:.2} +- {:.2}", r.epsilon, r.peaks.mean, r.peaks.sd);
    }
    out.finish("epsilon", &base, base.seed, json!({ "values": values, "runs": runs }))
}

fn scaling(a: &ScalingArgs) -> Result<()> {
    let base = a.params.resolve("fig6b")?;
    bounded_t_max(&base)?;
    let ns = if a.n_values.is_empty() { SCALING_N.to_vec() } else { a.n_values.clone() };
    let density = a.at_density.unwrap_or_else(small_network_density);
    let runs = runs_or(a.runs, SCALING_RUNS)?;
    let rows = scaling_in_n(&ns, runs, &base, density, base.seed, a.exp.workers)?;
    let mut out = OutDir::create(&a.exp.out)?;
    out.write_with("scaling.csv", |w| write_scaling_csv(w, &rows))?;
    let xs: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.stats.time.mean).collect();
    let fit = if ys.iter().all(|y| y.is_finite()) { linear_fit(&xs, &ys).ok() } else { None };
    let chart = svg::line_chart(
        "Time to echo chamber versus N",
        "N",
        "steps",
        &[
            Series {
                name: "converged runs",
                points: xs.iter().copied().zip(ys.iter().copied()).collect(),
            },
            Series {
                name: "censored at t_max",
                points: rows.iter().map(|r| (r.n as f64, r.stats.time_with_censored.mean)).collect(),
            },
        ],
        false,
    );
    out.write("scaling.svg", chart)?;
    match &fit {
        Some(f) => println!("slope {:.2} steps per node, R^2 {:.3}", f.slope, f.r_squared),
        None => println!("no linear fit: some N had no converged run"),
    }
    out.finish(
        "scaling",
        &base,
        base.seed,
        json!({ "n_values": ns, "density": density, "runs": runs, "fit": fit }),
    )
}

fn strategies(a: &StrategiesArgs) -> Result<()> {
    let base = a.params.resolve("fig7a")?;
    bounded_t_max(&base)?;
    let runs = runs_or(a.runs, DEFAULT_RUNS)?;
    let cmp = compare_strategies(runs, &base, base.seed, a.exp.workers)?;
    let mut out = OutDir::create(&a.exp.out)?;
    out.write_with("strategies.csv", |w| cmp.write_summary_csv(w))?;
    out.write_with("ccdf.csv", |w| cmp.write_ccdf_csv(w))?;
    let series: Vec<Series> = cmp
        .strategies
        .iter()
        .map(|s| Series {
            name: s.strategy.as_str(),
            points: s.ccdf.iter().filter(|(d, _)| *d > 0).map(|&(d, f)| (d as f64, f)).collect(),
        })
        .collect();
    out.write("ccdf.svg", svg::line_chart("In-degree CCDF", "in-degree", "P(k >= x)", &series, true))?;
    for s in &cmp.strategies {
        println!(
            "{}: closed triads {:.1}, max in-degree {:.1}",
            s.strategy, s.closed_triads.mean, s.max_in_degree.mean
        );
    }
    let tests: Vec<Value> = cmp
        .triad_tests
        .iter()
        .map(|(s, t)| json!({ "strategy": s, "u": t.u, "z": t.z, "p_value": t.p_value }))
        .collect();
    out.finish("strategies", &base, base.seed, json!({ "runs": runs, "triad_tests": tests }))
}

fn validate(a: &ValidateArgs) -> Result<()> {
    let overrides = a.params.overrides()?;
    if overrides.n.is_some() {
        return Err(usage("N is taken from the network; drop --n"));
    }
    let net = load_labeled_network(&a.edges, &a.labels)?;
    let n = net.graph.node_count();
    let params = match a.params.preset_name("conover2011") {
        "conover2011" => calibrated_params(n, &overrides)?,
        name => {
            let base = preset(name)?;
            let mut p = base.with_n_at_density(n, base.density());
            p.apply(&overrides);
            p.validate()?;
            p
        }
    };
    let defaults = ValidationConfig::default();
    let config = ValidationConfig {
        snapshot_every: a.snapshot_every.unwrap_or(defaults.snapshot_every),
        epoch_budget: a.epoch_budget.unwrap_or(defaults.epoch_budget),
        hashtag_dim: a.hashtag_dim.unwrap_or(defaults.hashtag_dim),
    };
    let table = a
        .hashtags
        .as_deref()
        .map(|p| hashtag_vectors(p, config.hashtag_dim))
        .transpose()?;
    let report = validation_run(&params, &net, table.as_ref(), &config)?;

    let mut out = OutDir::create(&a.out)?;
    report.write_dir(&out.dir)?;
    for f in ["series.csv", "do_hist.csv", "meta.json"] {
        out.record(f);
    }
    if report.dt_hist.is_some() {
        out.record("dt_hist.csv");
    }
    let seg = Series {
        name: "simulated",
        points: report
            .snapshots
            .iter()
            .map(|s| (s.epoch as f64, s.metrics.segregation.unwrap_or(f64::NAN)))
            .collect(),
    };
    let target = Series {
        name: "empirical",
        points: report.snapshots.iter().map(|s| (s.epoch as f64, report.s_emp)).collect(),
    };
    out.write(
        "segregation.svg",
        svg::line_chart("Retweet-network segregation", "epoch", "s", &[seg, target], false),
    )?;
    out.write("do_hist.svg", svg::histogram("Simulated opinion distances", "d_o", &report.do_hist, 0.0, 2.0))?;
    if let Some(h) = &report.dt_hist {
        out.write("dt_hist.svg", svg::histogram("Hashtag distances", "d_t", h, 0.0, 1.0))?;
    }

    match report.stop_epoch {
        Some(e) => println!("s_emp {:.4} reached at epoch {e}; d_o peaks {}", report.s_emp, report.do_peaks),
        None => println!(
            "s_emp {:.4} not reached within {} epochs",
            report.s_emp, config.epoch_budget
        ),
    }
    out.finish(
        "validate",
        &params,
        params.seed,
        json!({
            "empirical_nodes": report.empirical_nodes,
            "empirical_edges": report.empirical_edges,
            "s_emp": report.s_emp,
            "stop_epoch": report.stop_epoch,
            "do_peaks": report.do_peaks,
            "dt_peaks": report.dt_peaks,
            "hashtag_coverage": report.hashtag_coverage,
        }),
    )
}

/// Reads `node opinion` lines (comma or whitespace separated, optional header).
fn read_opinions(path: &Path) -> Result<Vec<(String, f64)>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut rows = Vec::new();
    let mut first = true;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let header_allowed = std::mem::take(&mut first);
        let fields: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|f| !f.is_empty()).collect();
        let bad = |msg: &str| {
            CliError::Core(echo_core::Error::Format {
                path: path.to_owned(),
                line: i + 1,
                msg: msg.into(),
            })
        };
        if fields.len() < 2 {
            return Err(bad("expected `node opinion`"));
        }
        match fields[1].parse::<f64>() {
            Ok(o) if (-1.0..=1.0).contains(&o) => rows.push((fields[0].to_string(), o)),
            Ok(_) => return Err(bad("opinion outside [-1, 1]")),
            Err(_) if header_allowed => {}
            Err(_) => return Err(bad("opinion is not a number")),
        }
    }
    Ok(rows)
}

fn structure(g: &DirectedGraph) -> Value {
    let t = triad_census(g);
    let scc = largest_strongly_connected_component(g);
    json!({
        "nodes": g.node_count(),
        "edges": g.edge_count(),
        "density": g.density(),
        "closed_triads": t.closed,
        "open_triads": t.open,
        "triad_fraction": t.closed_fraction(),
        "weak_components": weakly_connected_components(g).num_labels(),
        "largest_scc_nodes": scc.graph.node_count(),
        "largest_scc_edges": scc.graph.edge_count(),
    })
}

fn metrics(a: &MetricsArgs) -> Result<()> {
    let report = if let Some(labels) = &a.labels {
        let net = load_labeled_network(&a.edges, labels)?;
        json!({
            "graph": { "nodes": net.full_nodes, "edges": net.full_edges },
            "largest_scc": structure(&net.graph),
            "labels": net.label_names,
            "segregation": net.segregation().ok(),
        })
    } else if let Some(path) = &a.opinions {
        let rows = read_opinions(path)?;
        let index: HashMap<&str, usize> = rows.iter().enumerate().map(|(i, (n, _))| (n.as_str(), i)).collect();
        if index.len() != rows.len() {
            return Err(echo_core::Error::Data(format!("{}: repeated node ids", path.display())).into());
        }
        let loaded = load_edge_list(&a.edges)?;
        let names = loaded.index.names();
        let lookup = |u: usize| {
            index.get(names[u].as_str()).copied().ok_or_else(|| {
                echo_core::Error::Data(format!("node `{}` has no opinion in {}", names[u], path.display()))
            })
        };
        let mut edges = Vec::with_capacity(loaded.graph.edge_count());
        for (u, v) in loaded.graph.edges() {
            edges.push((lookup(u)?, lookup(v)?));
        }
        let g = DirectedGraph::from_edges(rows.len(), edges)?;
        let opinions: Vec<f64> = rows.iter().map(|r| r.1).collect();
        json!({
            "graph": structure(&g),
            "segregation": segregation_index(&g, &opinion_partition(&opinions)).ok(),
            "neighbor_diversity": neighbor_opinion_diversity(&g, &opinions).ok(),
            "opinion_histogram": opinion_histogram(&opinions),
            "peaks": count_opinion_peaks(&opinions, DEFAULT_PEAK_BINS, DEFAULT_PEAK_MIN_HEIGHT).ok(),
            "max_opinion_distance": max_opinion_distance(&opinions).ok(),
            "epsilon": a.epsilon,
            "echo_chamber": is_echo_chamber(&g, &opinions, a.epsilon),
        })
    } else {
        json!({ "graph": structure(&load_edge_list(&a.edges)?.graph) })
    };
    let text = serde_json::to_string_pretty(&report).expect("metrics serialize") + "\n";
    match &a.out {
        Some(path) => fs::write(path, text).map_err(|e| CliError::io(path, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn opinions_accept_csv_header_and_whitespace() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("o.csv");
        fs::write(&p, "node,opinion\n0,0.5\n1 -0.25\n").unwrap();
        let rows = read_opinions(&p).unwrap();
        assert_eq!(rows, vec![("0".to_string(), 0.5), ("1".to_string(), -0.25)]);
        fs::write(&p, "0,0.5\n1,abc\n").unwrap();
        assert!(read_opinions(&p).is_err());
        fs::write(&p, "0,1.5\n").unwrap();
        assert!(read_opinions(&p).is_err());
    }
}
