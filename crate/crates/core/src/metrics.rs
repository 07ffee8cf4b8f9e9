//! Observables of a run: screen entropy, opinion peaks and distances,
//! segregation, neighbour diversity and the echo-chamber steady state.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{triad_census, weakly_connected_components, DirectedGraph, Partition};
use crate::sim::SimState;

pub const HISTOGRAM_BINS: usize = 10;
pub const DEFAULT_PEAK_BINS: usize = 20;
pub const DEFAULT_PEAK_MIN_HEIGHT: f64 = 0.05;

/// Bin index of `x` among `bins` equal bins over `[lo, hi]`; the upper edge
/// belongs to the last bin and out-of-range values are clamped.
#[inline]
pub fn bin_of(x: f64, lo: f64, hi: f64, bins: usize) -> usize {
    let b = ((x - lo) / (hi - lo) * bins as f64).floor();
    if b <= 0.0 {
        0
    } else {
        (b as usize).min(bins - 1)
    }
}

pub fn histogram(values: impl IntoIterator<Item = f64>, lo: f64, hi: f64, bins: usize) -> Vec<u64> {
    let mut h = vec![0u64; bins];
    for v in values {
        h[bin_of(v, lo, hi, bins)] += 1;
    }
    h
}

pub fn opinion_histogram(opinions: &[f64]) -> Vec<u64> {
    histogram(opinions.iter().copied(), -1.0, 1.0, HISTOGRAM_BINS)
}

/// Shannon entropy (nats) of a count vector; 0 for an all-zero vector.
pub fn entropy(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let total = total as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.ln()
        })
        .sum()
}

/// Mean over users with a non-empty screen of the entropy of their screen's
/// message opinions in 10 bins over [-1, 1]. Zero if every screen is empty.
pub fn screen_entropy(state: &SimState) -> f64 {
    let (mut sum, mut users) = (0.0, 0usize);
    for screen in state.screens() {
        if screen.is_empty() {
            continue;
        }
        let h = histogram(screen.entries().map(|e| e.opinion), -1.0, 1.0, HISTOGRAM_BINS);
        sum += entropy(&h);
        users += 1;
    }
    if users == 0 {
        0.0
    } else {
        sum / users as f64
    }
}

/// Strict local maxima of `counts` with height at least `min_count`. Edge
/// bins are compared with their single neighbour.
pub fn count_peaks(counts: &[u64], min_count: f64) -> usize {
    let n = counts.len();
    (0..n)
        .filter(|&b| {
            let c = counts[b];
            let left_ok = b == 0 || c > counts[b - 1];
            let right_ok = b + 1 == n || c > counts[b + 1];
            left_ok && right_ok && c as f64 >= min_count && c > 0
        })
        .count()
}

/// Number of peaks of the opinion histogram with `bins` bins over [-1, 1];
/// a peak must hold at least `min_height_fraction` of all opinions.
pub fn count_opinion_peaks(opinions: &[f64], bins: usize, min_height_fraction: f64) -> Result<usize> {
    if bins < 3 {
        return Err(Error::param(format!("bins={bins} must be >= 3")));
    }
    let h = histogram(opinions.iter().copied(), -1.0, 1.0, bins);
    Ok(count_peaks(&h, min_height_fraction * opinions.len() as f64))
}

pub fn max_opinion_distance(opinions: &[f64]) -> Result<f64> {
    if opinions.is_empty() {
        return Err(Error::param("max_opinion_distance of empty opinion set"));
    }
    let (lo, hi) = opinions
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &o| (lo.min(o), hi.max(o)));
    Ok(hi - lo)
}

/// `s = 1 - |E_b| / (2 d |C+| |C-|)`, with `E_b` the edges between the two
/// clusters and `d = E / (N (N - 1))`. Equals 1 whenever there are no
/// cross edges (including the edgeless graph); may be negative.
pub fn segregation_index(g: &DirectedGraph, partition: &Partition) -> Result<f64> {
    if partition.num_labels() != 2 {
        return Err(Error::param(format!(
            "segregation needs exactly two clusters, got {}",
            partition.num_labels()
        )));
    }
    if partition.len() != g.node_count() {
        return Err(Error::param("partition size differs from node count"));
    }
    let sizes = partition.sizes();
    if sizes.contains(&0) {
        return Err(Error::param("segregation needs two nonempty clusters"));
    }
    let cross = g
        .edges()
        .filter(|&(u, v)| partition.label(u) != partition.label(v))
        .count();
    if cross == 0 {
        return Ok(1.0);
    }
    let expected = 2.0 * g.density() * sizes[0] as f64 * sizes[1] as f64;
    Ok(1.0 - cross as f64 / expected)
}

/// Label 0 = C- (o < 0), label 1 = C+ (o >= 0).
pub fn opinion_partition(opinions: &[f64]) -> Partition {
    let labels = opinions.iter().map(|&o| usize::from(o >= 0.0)).collect();
    Partition::new(labels, 2).expect("labels are 0 or 1")
}

/// `|o_i - o_j|` over all unordered pairs `i < j`, in lexicographic pair order.
pub fn pairwise_opinion_distances(opinions: &[f64]) -> Result<Vec<f64>> {
    let n = opinions.len();
    if n < 2 {
        return Err(Error::param("pairwise distances need at least two opinions"));
    }
    let mut out = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            out.push((opinions[i] - opinions[j]).abs());
        }
    }
    Ok(out)
}

/// Mean of `|o_u - o_v|` over edges.
pub fn neighbor_opinion_diversity(g: &DirectedGraph, opinions: &[f64]) -> Result<f64> {
    if g.edge_count() == 0 {
        return Err(Error::param("diversity undefined without edges"));
    }
    let sum: f64 = g.edges().map(|(u, v)| (opinions[u] - opinions[v]).abs()).sum();
    Ok(sum / g.edge_count() as f64)
}

/// Steady state: no edge spans an opinion gap >= epsilon and every weakly
/// connected component has opinion spread < epsilon.
pub fn is_echo_chamber(g: &DirectedGraph, opinions: &[f64], epsilon: f64) -> bool {
    if g.edges().any(|(u, v)| (opinions[u] - opinions[v]).abs() >= epsilon) {
        return false;
    }
    let wcc = weakly_connected_components(g);
    let k = wcc.num_labels();
    let mut lo = vec![f64::INFINITY; k];
    let mut hi = vec![f64::NEG_INFINITY; k];
    for (u, &c) in wcc.labels().iter().enumerate() {
        lo[c] = lo[c].min(opinions[u]);
        hi[c] = hi[c].max(opinions[u]);
    }
    lo.iter().zip(&hi).all(|(l, h)| h - l < epsilon)
}

pub fn state_is_echo_chamber(state: &SimState) -> bool {
    is_echo_chamber(state.graph(), state.opinions(), state.params().epsilon)
}

/// Single-linkage opinion clusters: sorted opinions split wherever adjacent
/// values are `>= epsilon` apart. Returns cluster id per node and sizes.
pub fn opinion_clusters(opinions: &[f64], epsilon: f64) -> (Vec<usize>, Vec<usize>) {
    let mut order: Vec<usize> = (0..opinions.len()).collect();
    order.sort_by(|&a, &b| opinions[a].total_cmp(&opinions[b]).then(a.cmp(&b)));
    let mut label = vec![0; opinions.len()];
    let mut sizes = Vec::new();
    let mut prev: Option<f64> = None;
    for &u in &order {
        let o = opinions[u];
        if prev.is_none_or(|p| o - p >= epsilon) {
            sizes.push(0);
        }
        label[u] = sizes.len() - 1;
        *sizes.last_mut().expect("cluster opened") += 1;
        prev = Some(o);
    }
    (label, sizes)
}

/// True when some node has more friends than the other members of its
/// opinion cluster, so it can never stop following outsiders.
pub fn exclusion_check(g: &DirectedGraph, opinions: &[f64], epsilon: f64) -> bool {
    let (label, sizes) = opinion_clusters(opinions, epsilon);
    (0..g.node_count()).any(|u| g.out_degree(u) > sizes[label[u]] - 1)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsSnapshot {
    pub t: u64,
    /// `None` when one sign-cluster is empty.
    pub segregation: Option<f64>,
    pub triad_fraction: f64,
    pub mean_screen_entropy: f64,
    /// `None` when the graph has no edges.
    pub neighbor_diversity: Option<f64>,
    pub opinion_histogram: Vec<u64>,
}

impl MetricsSnapshot {
    /// Metrics of the follower graph with the sign-of-opinion partition.
    pub fn of_state(state: &SimState) -> Self {
        Self::of_graph(state.t(), state.graph(), state.opinions(), screen_entropy(state))
    }

    pub fn of_graph(t: u64, g: &DirectedGraph, opinions: &[f64], mean_screen_entropy: f64) -> Self {
        MetricsSnapshot {
            t,
            segregation: segregation_index(g, &opinion_partition(opinions)).ok(),
            triad_fraction: triad_census(g).closed_fraction(),
            mean_screen_entropy,
            neighbor_diversity: neighbor_opinion_diversity(g, opinions).ok(),
            opinion_histogram: opinion_histogram(opinions),
        }
    }
}

pub fn metrics_csv_header() -> String {
    let mut h = String::from("t,segregation,triad_fraction,entropy,diversity");
    for b in 0..HISTOGRAM_BINS {
        h.push_str(&format!(",hist_{b}"));
    }
    h
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_metrics_csv<W: Write>(out: &mut W, rows: &[MetricsSnapshot]) -> std::io::Result<()> {
    writeln!(out, "{}", metrics_csv_header())?;
    for r in rows {
        write!(
            out,
            "{},{},{},{},{}",
            r.t,
            opt(r.segregation),
            r.triad_fraction,
            r.mean_screen_entropy,
            opt(r.neighbor_diversity)
        )?;
        for c in &r.opinion_histogram {
            write!(out, ",{c}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(n: usize, edges: &[(usize, usize)]) -> DirectedGraph {
        DirectedGraph::from_edges(n, edges.iter().copied()).unwrap()
    }

    #[test]
    fn entropy_cases() {
        assert_eq!(entropy(&[5, 0, 0]), 0.0);
        assert!((entropy(&[1; 10]) - 10f64.ln()).abs() < 1e-12);
        assert_eq!(entropy(&[0, 0]), 0.0);
    }

    #[test]
    fn histogram_edges() {
        assert_eq!(bin_of(-1.0, -1.0, 1.0, 10), 0);
        assert_eq!(bin_of(1.0, -1.0, 1.0, 10), 9);
        assert_eq!(bin_of(0.0, -1.0, 1.0, 10), 5);
        assert_eq!(bin_of(-0.0001, -1.0, 1.0, 10), 4);
    }

    #[test]
    fn peak_examples() {
        assert_eq!(count_opinion_peaks(&[0.3; 40], 20, 0.05).unwrap(), 1);
        let bimodal: Vec<f64> = (0..50).map(|i| if i % 2 == 0 { -0.5 } else { 0.5 }).collect();
        assert_eq!(count_opinion_peaks(&bimodal, 20, 0.05).unwrap(), 2);
        assert!(count_opinion_peaks(&bimodal, 2, 0.05).is_err());
        // Plateaus are not strict maxima.
        assert_eq!(count_peaks(&[0, 3, 3, 0], 0.0), 0);
        // Below height threshold.
        assert_eq!(count_peaks(&[10, 0, 1, 0], 2.0), 1);
    }

    #[test]
    fn distance_examples() {
        assert_eq!(max_opinion_distance(&[0.3]).unwrap(), 0.0);
        assert_eq!(max_opinion_distance(&[-1.0, 1.0]).unwrap(), 2.0);
        assert!(max_opinion_distance(&[]).is_err());
        assert_eq!(pairwise_opinion_distances(&[0.0; 3]).unwrap(), vec![0.0; 3]);
        assert_eq!(pairwise_opinion_distances(&[-1.0, 1.0]).unwrap(), vec![2.0]);
        assert!(pairwise_opinion_distances(&[0.1]).is_err());
    }

    #[test]
    fn segregation_examples() {
        let p = Partition::new(vec![1, 1, 0, 0], 2).unwrap();
        assert_eq!(segregation_index(&graph(4, &[(0, 1), (2, 3)]), &p).unwrap(), 1.0);

        let complete: Vec<_> = (0..4).flat_map(|u| (0..4).filter(move |&v| v != u).map(move |v| (u, v))).collect();
        let s = segregation_index(&graph(4, &complete), &p).unwrap();
        assert!(s.abs() < 1e-15);

        let s = segregation_index(&graph(4, &[(0, 1), (2, 3), (0, 2)]), &p).unwrap();
        assert!((s - 0.5).abs() < 1e-15);

        let one_sided = Partition::new(vec![1, 1, 1, 1], 2).unwrap();
        assert!(segregation_index(&graph(4, &[(0, 1)]), &one_sided).is_err());
    }

    #[test]
    fn partition_by_sign() {
        let p = opinion_partition(&[-0.2, 0.0, 0.7]);
        assert_eq!(p.groups(), vec![vec![0], vec![1, 2]]);
        assert_eq!(opinion_partition(&[0.1, 0.2]).sizes(), vec![0, 2]);
        assert_eq!(opinion_partition(&[-1.0, 1.0]).groups(), vec![vec![0], vec![1]]);
    }

    #[test]
    fn diversity_examples() {
        let g = graph(3, &[(0, 1), (1, 2)]);
        assert_eq!(neighbor_opinion_diversity(&g, &[0.2; 3]).unwrap(), 0.0);
        assert_eq!(neighbor_opinion_diversity(&graph(2, &[(0, 1)]), &[-1.0, 1.0]).unwrap(), 2.0);
        assert!(neighbor_opinion_diversity(&DirectedGraph::new(2), &[0.0, 0.0]).is_err());
    }

    #[test]
    fn echo_chamber_examples() {
        let g = graph(4, &[(0, 1), (1, 2), (2, 3)]);
        assert!(is_echo_chamber(&g, &[0.1; 4], 0.4));
        assert!(!is_echo_chamber(&graph(2, &[(0, 1)]), &[0.0, 0.5], 0.4));
        // Edges fine but the chain spreads the component too wide.
        assert!(!is_echo_chamber(&g, &[0.0, 0.3, 0.6, 0.9], 0.4));
        let split = graph(4, &[(0, 1), (2, 3)]);
        assert!(is_echo_chamber(&split, &[-0.5, -0.4, 0.5, 0.6], 0.4));
    }

    #[test]
    fn exclusion_examples() {
        // Node 0 has out-degree 4 but its opinion cluster {0,1,2} has size 3.
        let mut edges = vec![(0, 1), (0, 2), (0, 3), (0, 4)];
        let mut opinions = vec![0.9, 0.95, 0.85];
        opinions.extend(std::iter::repeat_n(-0.5, 97));
        for u in 1..100 {
            for k in 1..=4 {
                edges.push((u, (u + k * 7) % 100));
            }
        }
        edges.retain(|&(u, v)| u != v);
        edges.sort_unstable();
        edges.dedup();
        let g = graph(100, &edges);
        assert!(exclusion_check(&g, &opinions, 0.4));

        let same = vec![0.0; 100];
        assert!(!exclusion_check(&g, &same, 0.4));

        let lonely = graph(3, &[(1, 2)]);
        assert!(!exclusion_check(&lonely, &[-0.9, 0.5, 0.5], 0.4));
    }

    #[test]
    fn single_linkage_chains() {
        let (label, sizes) = opinion_clusters(&[0.0, 0.3, 0.6, -0.9], 0.4);
        assert_eq!(sizes, vec![1, 3]);
        assert_eq!(label, vec![1, 1, 1, 0]);
    }
}
