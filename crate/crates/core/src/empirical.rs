//! Empirical data: labelled retweet networks, hashtag opinion vectors, the
//! synthetic retweet network built from simulated reposts, and the
//! validation pipeline that compares the two.
//!
//! Retweet edges point from the retweeted user to the retweeter.

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{largest_strongly_connected_component, triad_census, DirectedGraph, NodeId, Partition};
use crate::io::{load_edge_list, parse_pairs, read_to_string};
use crate::metrics::{
    count_peaks, histogram, pairwise_opinion_distances, screen_entropy, segregation_index,
    MetricsSnapshot, DEFAULT_PEAK_BINS, DEFAULT_PEAK_MIN_HEIGHT,
};
use crate::params::{Params, ParamsOverrides};
use crate::presets::{self, CONOVER_DENSITY};
use crate::sim::{Event, SimState};

/// Largest SCC of a retweet network with a cluster label per node.
#[derive(Debug, Clone)]
pub struct LabeledNetwork {
    pub graph: DirectedGraph,
    /// Original id of each node.
    pub names: Vec<String>,
    pub partition: Partition,
    /// Label strings, indexed by partition label (sorted).
    pub label_names: Vec<String>,
    pub full_nodes: usize,
    pub full_edges: usize,
}

impl LabeledNetwork {
    pub fn segregation(&self) -> Result<f64> {
        segregation_index(&self.graph, &self.partition)
    }

    pub fn triad_fraction(&self) -> f64 {
        triad_census(&self.graph).closed_fraction()
    }
}

/// Loads an edge list, restricts it to its largest SCC, and attaches labels
/// from `node_id label` lines.
pub fn load_labeled_network(edges_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<LabeledNetwork> {
    let loaded = load_edge_list(edges_path)?;
    let labels_path = labels_path.as_ref();
    let text = read_to_string(labels_path)?;
    let pairs = parse_pairs(&text, labels_path)?;
    let labels: HashMap<&str, &str> = pairs.into_iter().collect();

    let scc = largest_strongly_connected_component(&loaded.graph);
    let names: Vec<String> = scc.nodes.iter().map(|&u| loaded.index.name(u).to_owned()).collect();
    let missing: Vec<&str> = names
        .iter()
        .filter(|n| !labels.contains_key(n.as_str()))
        .map(String::as_str)
        .collect();
    if !missing.is_empty() {
        let shown: Vec<_> = missing.iter().take(20).collect();
        return Err(Error::Data(format!(
            "{} node(s) in the largest SCC have no label in {}: {:?}{}",
            missing.len(),
            labels_path.display(),
            shown,
            if missing.len() > 20 { " ..." } else { "" }
        )));
    }
    let mut label_names: Vec<String> = names.iter().map(|n| labels[n.as_str()].to_owned()).collect();
    label_names.sort();
    label_names.dedup();
    let ids: Vec<usize> = names
        .iter()
        .map(|n| label_names.binary_search_by(|l| l.as_str().cmp(labels[n.as_str()])).expect("label listed"))
        .collect();
    let partition = Partition::new(ids, label_names.len())?;
    Ok(LabeledNetwork {
        graph: scc.graph,
        names,
        partition,
        label_names,
        full_nodes: loaded.graph.node_count(),
        full_edges: loaded.graph.edge_count(),
    })
}

/// Binary adoption vector over the top-`dim` hashtags.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HashtagVector {
    pub user: String,
    bits: u64,
    dim: u8,
}

impl HashtagVector {
    pub fn from_adopted(user: impl Into<String>, adopted: &[bool]) -> Result<Self> {
        if adopted.len() > 64 {
            return Err(Error::param("hashtag vectors support at most 64 dimensions"));
        }
        let bits = adopted
            .iter()
            .enumerate()
            .fold(0u64, |acc, (k, &a)| if a { acc | (1 << k) } else { acc });
        Ok(HashtagVector {
            user: user.into(),
            bits,
            dim: adopted.len() as u8,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn adopted(&self, k: usize) -> bool {
        k < self.dim() && self.bits >> k & 1 == 1
    }

    /// L1 norm: number of adopted hashtags.
    pub fn norm(&self) -> u32 {
        self.bits.count_ones()
    }
}

/// `1 - (a . b) / min(|a|_1, |b|_1)`.
pub fn empirical_opinion_distance(a: &HashtagVector, b: &HashtagVector) -> Result<f64> {
    if a.dim != b.dim {
        return Err(Error::param("hashtag vectors of different dimension"));
    }
    let min = a.norm().min(b.norm());
    if min == 0 {
        return Err(Error::param("distance undefined for an all-zero hashtag vector"));
    }
    Ok(1.0 - (a.bits & b.bits).count_ones() as f64 / min as f64)
}

#[derive(Debug, Clone, Serialize)]
pub struct HashtagTable {
    /// Selected hashtags, most popular first.
    pub hashtags: Vec<String>,
    /// Users with at least one selected hashtag, in first-appearance order.
    pub vectors: Vec<HashtagVector>,
    /// Distinct users in the adoption file.
    pub total_users: usize,
}

impl HashtagTable {
    /// Share of the adoption file's users that kept a nonzero vector.
    pub fn coverage(&self) -> f64 {
        if self.total_users == 0 {
            0.0
        } else {
            self.vectors.len() as f64 / self.total_users as f64
        }
    }

    /// Share of `users` holding a nonzero vector.
    pub fn coverage_of<'a>(&self, users: impl IntoIterator<Item = &'a String>) -> f64 {
        let have: std::collections::HashSet<&str> = self.vectors.iter().map(|v| v.user.as_str()).collect();
        let (mut hit, mut total) = (0usize, 0usize);
        for u in users {
            total += 1;
            hit += usize::from(have.contains(u.as_str()));
        }
        if total == 0 {
            0.0
        } else {
            hit as f64 / total as f64
        }
    }

    pub fn restricted_to<'a>(&self, users: impl IntoIterator<Item = &'a String>) -> Vec<&HashtagVector> {
        let keep: std::collections::HashSet<&str> = users.into_iter().map(String::as_str).collect();
        self.vectors.iter().filter(|v| keep.contains(v.user.as_str())).collect()
    }
}

pub fn parse_hashtag_vectors(text: &str, path: &Path, d: usize) -> Result<HashtagTable> {
    if d == 0 || d > 64 {
        return Err(Error::param(format!("hashtag dimension {d} outside 1..=64")));
    }
    let pairs = parse_pairs(text, path)?;
    let mut users: Vec<&str> = Vec::new();
    let mut user_idx: HashMap<&str, usize> = HashMap::new();
    let mut adoptions: Vec<(usize, &str)> = Vec::with_capacity(pairs.len());
    for (user, tag) in pairs {
        let next = users.len();
        let ui = *user_idx.entry(user).or_insert_with(|| {
            users.push(user);
            next
        });
        adoptions.push((ui, tag));
    }
    adoptions.sort_unstable();
    adoptions.dedup();

    let mut popularity: BTreeMap<&str, usize> = BTreeMap::new();
    for &(_, tag) in &adoptions {
        *popularity.entry(tag).or_default() += 1;
    }
    let mut ranked: Vec<(&str, usize)> = popularity.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    ranked.truncate(d);
    let column: HashMap<&str, usize> = ranked.iter().enumerate().map(|(k, (t, _))| (*t, k)).collect();

    let mut bits = vec![0u64; users.len()];
    for &(ui, tag) in &adoptions {
        if let Some(&k) = column.get(tag) {
            bits[ui] |= 1 << k;
        }
    }
    let dim = ranked.len() as u8;
    let vectors = users
        .iter()
        .zip(&bits)
        .filter(|(_, &b)| b != 0)
        .map(|(u, &b)| HashtagVector {
            user: (*u).to_owned(),
            bits: b,
            dim,
        })
        .collect();
    Ok(HashtagTable {
        hashtags: ranked.into_iter().map(|(t, _)| t.to_owned()).collect(),
        vectors,
        total_users: users.len(),
    })
}

/// Binary vectors over the `d` most adopted hashtags (ties broken
/// lexicographically) from `user_id hashtag` lines.
pub fn hashtag_vectors(adoption_path: impl AsRef<Path>, d: usize) -> Result<HashtagTable> {
    let path = adoption_path.as_ref();
    parse_hashtag_vectors(&read_to_string(path)?, path, d)
}

/// `d_t` over all unordered pairs.
pub fn pairwise_hashtag_distances(vectors: &[&HashtagVector]) -> Result<Vec<f64>> {
    let n = vectors.len();
    let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            out.push(empirical_opinion_distance(vectors[i], vectors[j])?);
        }
    }
    Ok(out)
}

/// Retweet network from the `e` most recent distinct (originator, reposter)
/// pairs in `events`, scanning newest first. Self-reposts are ignored.
pub fn build_retweet_network(events: &[Event], e: usize, n: usize) -> DirectedGraph {
    let mut g = DirectedGraph::new(n);
    for ev in events.iter().rev() {
        if g.edge_count() >= e {
            break;
        }
        if let Event::Repost { actor, originator, .. } = *ev {
            if actor != originator && !g.has_edge(originator, actor) {
                g.add_edge(originator, actor).expect("fresh edge");
            }
        }
    }
    g
}

/// Incremental equivalent of [`build_retweet_network`] for long runs: keeps
/// the last step at which each retweet edge was seen.
#[derive(Debug, Clone, Default)]
pub struct RetweetTracker {
    last_seen: HashMap<(NodeId, NodeId), u64>,
}

impl RetweetTracker {
    pub fn observe(&mut self, events: &[Event]) {
        for ev in events {
            if let Event::Repost {
                step,
                actor,
                originator,
                ..
            } = *ev
            {
                if actor != originator {
                    self.last_seen.insert((originator, actor), step);
                }
            }
        }
    }

    /// The `e` most recently seen edges. Older edges are forgotten, since
    /// they can only re-enter the window by being seen again.
    pub fn latest(&mut self, e: usize, n: usize) -> DirectedGraph {
        let mut all: Vec<((NodeId, NodeId), u64)> = self.last_seen.iter().map(|(&k, &v)| (k, v)).collect();
        all.sort_unstable_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        all.truncate(e);
        self.last_seen = all.iter().copied().collect();
        let mut g = DirectedGraph::new(n);
        for ((u, v), _) in all {
            g.add_edge(u, v).expect("distinct edges");
        }
        g
    }
}

/// Calibrated parameters for an empirical network with `n` nodes: the
/// `conover2011` preset at its follower density, then `overrides`.
pub fn calibrated_params(n: usize, overrides: &ParamsOverrides) -> Result<Params> {
    let mut p = presets::preset("conover2011")?.with_n_at_density(n, CONOVER_DENSITY);
    p.apply(overrides);
    p.validate()?;
    Ok(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidationConfig {
    pub snapshot_every: u64,
    pub epoch_budget: u64,
    pub hashtag_dim: usize,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        ValidationConfig {
            snapshot_every: 10,
            epoch_budget: presets::VALIDATION_EPOCH_BUDGET,
            hashtag_dim: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationSnapshot {
    pub epoch: u64,
    /// Edges of the retweet snapshot before SCC restriction.
    pub retweet_edges: usize,
    pub scc_nodes: usize,
    pub scc_edges: usize,
    pub metrics: MetricsSnapshot,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub params: Params,
    pub config: ValidationConfig,
    pub empirical_nodes: usize,
    pub empirical_edges: usize,
    pub s_emp: f64,
    pub empirical_triad_fraction: f64,
    pub snapshots: Vec<ValidationSnapshot>,
    pub stop_epoch: Option<u64>,
    pub censored: bool,
    pub do_hist: Vec<u64>,
    pub do_peaks: usize,
    pub dt_hist: Option<Vec<u64>>,
    pub dt_peaks: Option<usize>,
    pub hashtag_coverage: Option<f64>,
}

fn hist_peaks(h: &[u64]) -> usize {
    let total: u64 = h.iter().sum();
    count_peaks(h, DEFAULT_PEAK_MIN_HEIGHT * total as f64)
}

/// Simulates `params` in epochs of N steps. Every `snapshot_every` epochs
/// the latest E distinct retweet edges (E = empirical edge count) form a
/// snapshot whose largest SCC is scored; the run stops at the first snapshot
/// whose segregation reaches the empirical value.
pub fn validation_run(
    params: &Params,
    empirical: &LabeledNetwork,
    hashtags: Option<&HashtagTable>,
    config: &ValidationConfig,
) -> Result<ValidationReport> {
    if config.snapshot_every == 0 {
        return Err(Error::param("snapshot_every must be >= 1"));
    }
    let s_emp = empirical.segregation()?;
    let target_edges = empirical.graph.edge_count();
    let mut state = SimState::new(
        Params {
            t_max: u64::MAX,
            ..params.clone()
        },
        None,
    )?;
    let n = state.node_count();
    let mut tracker = RetweetTracker::default();
    let mut snapshots = Vec::new();
    let mut stop_epoch = None;
    let mut stop_opinions: Vec<f64> = Vec::new();

    let mut epoch = 0;
    while epoch < config.epoch_budget {
        for _ in 0..config.snapshot_every {
            state.advance(n as u64);
            epoch += 1;
        }
        tracker.observe(&state.drain_events());
        let retweets = tracker.latest(target_edges, n);
        let scc = largest_strongly_connected_component(&retweets);
        let opinions: Vec<f64> = scc.nodes.iter().map(|&u| state.opinions()[u]).collect();
        let metrics = MetricsSnapshot::of_graph(state.t(), &scc.graph, &opinions, screen_entropy(&state));
        let reached = metrics.segregation.is_some_and(|s| s >= s_emp);
        snapshots.push(ValidationSnapshot {
            epoch,
            retweet_edges: retweets.edge_count(),
            scc_nodes: scc.graph.node_count(),
            scc_edges: scc.graph.edge_count(),
            metrics,
        });
        if reached {
            stop_epoch = Some(epoch);
            stop_opinions = opinions;
            break;
        }
        stop_opinions = opinions;
    }

    let do_hist = match pairwise_opinion_distances(&stop_opinions) {
        Ok(d) => histogram(d, 0.0, 2.0, DEFAULT_PEAK_BINS),
        Err(_) => vec![0; DEFAULT_PEAK_BINS],
    };
    let (dt_hist, hashtag_coverage) = match hashtags {
        Some(table) => {
            let users = table.restricted_to(&empirical.names);
            let d = pairwise_hashtag_distances(&users)?;
            (
                Some(histogram(d, 0.0, 1.0, DEFAULT_PEAK_BINS)),
                Some(table.coverage_of(&empirical.names)),
            )
        }
        None => (None, None),
    };
    Ok(ValidationReport {
        params: params.clone(),
        config: *config,
        empirical_nodes: empirical.graph.node_count(),
        empirical_edges: target_edges,
        s_emp,
        empirical_triad_fraction: empirical.triad_fraction(),
        do_peaks: hist_peaks(&do_hist),
        dt_peaks: dt_hist.as_deref().map(hist_peaks),
        snapshots,
        stop_epoch,
        censored: stop_epoch.is_none(),
        do_hist,
        dt_hist,
        hashtag_coverage,
    })
}

fn write_hist(path: &Path, h: &[u64], lo: f64, hi: f64) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let width = (hi - lo) / h.len() as f64;
    let res: std::io::Result<()> = (|| {
        writeln!(out, "bin_lo,bin_hi,count")?;
        for (k, c) in h.iter().enumerate() {
            writeln!(out, "{},{},{}", lo + k as f64 * width, lo + (k + 1) as f64 * width, c)?;
        }
        out.flush()
    })();
    res.map_err(|e| Error::io(path, e))
}

impl ValidationReport {
    pub fn final_snapshot(&self) -> Option<&ValidationSnapshot> {
        self.snapshots.last()
    }

    /// Writes `series.csv`, `do_hist.csv`, `dt_hist.csv` (when hashtags were
    /// given) and `meta.json` into `dir`.
    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

        let series = dir.join("series.csv");
        let file = File::create(&series).map_err(|e| Error::io(&series, e))?;
        let mut out = BufWriter::new(file);
        let res: std::io::Result<()> = (|| {
            writeln!(
                out,
                "epoch,t,retweet_edges,scc_nodes,scc_edges,segregation,triad_fraction,entropy,diversity"
            )?;
            for s in &self.snapshots {
                let m = &s.metrics;
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{}",
                    s.epoch,
                    m.t,
                    s.retweet_edges,
                    s.scc_nodes,
                    s.scc_edges,
                    m.segregation.map(|x| x.to_string()).unwrap_or_default(),
                    m.triad_fraction,
                    m.mean_screen_entropy,
                    m.neighbor_diversity.map(|x| x.to_string()).unwrap_or_default()
                )?;
            }
            out.flush()
        })();
        res.map_err(|e| Error::io(&series, e))?;

        write_hist(&dir.join("do_hist.csv"), &self.do_hist, 0.0, 2.0)?;
        if let Some(h) = &self.dt_hist {
            write_hist(&dir.join("dt_hist.csv"), h, 0.0, 1.0)?;
        }

        let meta = serde_json::json!({
            "params": self.params,
            "config": self.config,
            "empirical_nodes": self.empirical_nodes,
            "empirical_edges": self.empirical_edges,
            "s_emp": self.s_emp,
            "empirical_triad_fraction": self.empirical_triad_fraction,
            "stop_epoch": self.stop_epoch,
            "censored": self.censored,
            "do_peaks": self.do_peaks,
            "dt_peaks": self.dt_peaks,
            "hashtag_coverage": self.hashtag_coverage,
        });
        let path = dir.join("meta.json");
        let text = serde_json::to_string_pretty(&meta).expect("meta serializes");
        fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
    }
}
