//! Simple directed graph with in-place rewiring and the structural
//! algorithms used by the metrics and the data-preparation pipeline.
//!
//! An edge `u -> v` means "u follows v": `v` is a friend of `u` and `u` is
//! a follower of `v`.

use std::collections::HashSet;

use rand::seq::index;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};

pub type NodeId = usize;

#[inline]
fn key(u: NodeId, v: NodeId) -> u64 {
    ((u as u64) << 32) | v as u64
}

#[derive(Debug, Clone)]
pub struct DirectedGraph {
    friends: Vec<Vec<NodeId>>,
    followers: Vec<Vec<NodeId>>,
    edge_set: HashSet<u64>,
}

impl DirectedGraph {
    pub fn new(n: usize) -> Self {
        assert!(n <= u32::MAX as usize, "node count exceeds u32 range");
        DirectedGraph {
            friends: vec![Vec::new(); n],
            followers: vec![Vec::new(); n],
            edge_set: HashSet::new(),
        }
    }

    /// Builds a graph from an edge list, rejecting self-loops, duplicates and
    /// out-of-range endpoints.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (NodeId, NodeId)>) -> Result<Self> {
        let mut g = DirectedGraph::new(n);
        for (u, v) in edges {
            g.add_edge(u, v)?;
        }
        Ok(g)
    }

    pub fn node_count(&self) -> usize {
        self.friends.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_set.len()
    }

    /// E / (N (N - 1)); zero for graphs with fewer than two nodes.
    pub fn density(&self) -> f64 {
        let n = self.node_count() as f64;
        if n < 2.0 {
            0.0
        } else {
            self.edge_count() as f64 / (n * (n - 1.0))
        }
    }

    #[inline]
    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.edge_set.contains(&key(u, v))
    }

    /// Out-neighbours ("friends") of `u`.
    #[inline]
    pub fn friends(&self, u: NodeId) -> &[NodeId] {
        &self.friends[u]
    }

    /// In-neighbours ("followers") of `v`.
    #[inline]
    pub fn followers(&self, v: NodeId) -> &[NodeId] {
        &self.followers[v]
    }

    #[inline]
    pub fn out_degree(&self, u: NodeId) -> usize {
        self.friends[u].len()
    }

    #[inline]
    pub fn in_degree(&self, v: NodeId) -> usize {
        self.followers[v].len()
    }

    pub fn out_degrees(&self) -> Vec<usize> {
        self.friends.iter().map(Vec::len).collect()
    }

    pub fn in_degrees(&self) -> Vec<usize> {
        self.followers.iter().map(Vec::len).collect()
    }

    /// Edges grouped by source in node order. Order within a source follows
    /// insertion/rewire history; use [`sorted_edges`](Self::sorted_edges) for
    /// a canonical order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.friends
            .iter()
            .enumerate()
            .flat_map(|(u, fs)| fs.iter().map(move |&v| (u, v)))
    }

    pub fn sorted_edges(&self) -> Vec<(NodeId, NodeId)> {
        let mut e: Vec<_> = self.edges().collect();
        e.sort_unstable();
        e
    }

    pub fn add_edge(&mut self, u: NodeId, v: NodeId) -> Result<()> {
        let n = self.node_count();
        if u >= n || v >= n {
            return Err(Error::param(format!("edge ({u},{v}) out of range for n={n}")));
        }
        if u == v {
            return Err(Error::param(format!("self-loop at {u}")));
        }
        if !self.edge_set.insert(key(u, v)) {
            return Err(Error::param(format!("duplicate edge ({u},{v})")));
        }
        self.friends[u].push(v);
        self.followers[v].push(u);
        Ok(())
    }

    fn unlink(list: &mut Vec<NodeId>, x: NodeId) {
        let pos = list.iter().position(|&y| y == x).expect("adjacency out of sync");
        list.swap_remove(pos);
    }

    /// Replaces `u -> old_v` by `u -> new_v`, keeping E and u's out-degree.
    pub fn rewire_edge(&mut self, u: NodeId, old_v: NodeId, new_v: NodeId) -> Result<()> {
        let n = self.node_count();
        if u >= n || old_v >= n || new_v >= n {
            return Err(Error::Rewire(format!("node out of range for n={n}")));
        }
        if !self.has_edge(u, old_v) {
            return Err(Error::Rewire(format!("edge ({u},{old_v}) does not exist")));
        }
        if new_v == u {
            return Err(Error::Rewire(format!("rewire ({u},{old_v}) onto self-loop")));
        }
        if self.has_edge(u, new_v) {
            return Err(Error::Rewire(format!("{u} already follows {new_v}")));
        }
        self.edge_set.remove(&key(u, old_v));
        self.edge_set.insert(key(u, new_v));
        // Keep the friend slot in place so out-list order is stable.
        let slot = self.friends[u]
            .iter()
            .position(|&y| y == old_v)
            .expect("adjacency out of sync");
        self.friends[u][slot] = new_v;
        Self::unlink(&mut self.followers[old_v], u);
        self.followers[new_v].push(u);
        Ok(())
    }

    /// Induced subgraph on `nodes` (relabelled densely in the given order).
    pub fn induced_subgraph(&self, nodes: &[NodeId]) -> Subgraph {
        let mut local = vec![usize::MAX; self.node_count()];
        for (i, &u) in nodes.iter().enumerate() {
            local[u] = i;
        }
        let mut g = DirectedGraph::new(nodes.len());
        for (i, &u) in nodes.iter().enumerate() {
            for &v in &self.friends[u] {
                let j = local[v];
                if j != usize::MAX {
                    g.add_edge(i, j).expect("induced subgraph of a simple graph is simple");
                }
            }
        }
        Subgraph {
            graph: g,
            nodes: nodes.to_vec(),
        }
    }
}

impl PartialEq for DirectedGraph {
    fn eq(&self, other: &Self) -> bool {
        self.node_count() == other.node_count() && self.edge_set == other.edge_set
    }
}

impl Eq for DirectedGraph {}

/// A subgraph together with the parent-graph id of each of its nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subgraph {
    pub graph: DirectedGraph,
    pub nodes: Vec<NodeId>,
}

/// Samples `e` distinct ordered pairs uniformly from the `n(n-1)`
/// non-self-loop pairs.
pub fn random_directed_graph<R: Rng + ?Sized>(n: usize, e: usize, rng: &mut R) -> Result<DirectedGraph> {
    let pairs = n.saturating_mul(n.saturating_sub(1));
    if e > pairs {
        return Err(Error::param(format!("e={e} exceeds n(n-1)={pairs}")));
    }
    let mut g = DirectedGraph::new(n);
    if e == 0 {
        return Ok(g);
    }
    let mut picks = index::sample(rng, pairs, e).into_vec();
    picks.sort_unstable();
    for k in picks {
        let u = k / (n - 1);
        let r = k % (n - 1);
        let v = if r >= u { r + 1 } else { r };
        g.add_edge(u, v)?;
    }
    Ok(g)
}

/// Assignment of every node to exactly one cluster label `0..num_labels`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Partition {
    labels: Vec<usize>,
    num_labels: usize,
}

impl Partition {
    pub fn new(labels: Vec<usize>, num_labels: usize) -> Result<Self> {
        if let Some(&bad) = labels.iter().find(|&&l| l >= num_labels) {
            return Err(Error::param(format!("label {bad} >= num_labels {num_labels}")));
        }
        Ok(Partition { labels, num_labels })
    }

    pub fn label(&self, u: NodeId) -> usize {
        self.labels[u]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.num_labels];
        for &l in &self.labels {
            s[l] += 1;
        }
        s
    }

    /// Members grouped by label, each group ascending.
    pub fn groups(&self) -> Vec<Vec<NodeId>> {
        let mut g = vec![Vec::new(); self.num_labels];
        for (u, &l) in self.labels.iter().enumerate() {
            g[l].push(u);
        }
        g
    }

    /// Restricts to the given nodes (in order), keeping label ids.
    pub fn restrict(&self, nodes: &[NodeId]) -> Partition {
        Partition {
            labels: nodes.iter().map(|&u| self.labels[u]).collect(),
            num_labels: self.num_labels,
        }
    }
}

struct DisjointSet {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
    }
}

/// Components ignoring edge direction. Labels are assigned in order of each
/// component's smallest node id.
pub fn weakly_connected_components(g: &DirectedGraph) -> Partition {
    let n = g.node_count();
    let mut ds = DisjointSet::new(n);
    for (u, v) in g.edges() {
        ds.union(u, v);
    }
    let mut root_label = vec![usize::MAX; n];
    let mut labels = vec![0; n];
    let mut next = 0;
    for (u, label) in labels.iter_mut().enumerate() {
        let r = ds.find(u);
        if root_label[r] == usize::MAX {
            root_label[r] = next;
            next += 1;
        }
        *label = root_label[r];
    }
    Partition {
        labels,
        num_labels: next,
    }
}

/// Strongly connected components (iterative Tarjan). Each component is sorted
/// ascending; components are returned in order of their smallest node.
pub fn strongly_connected_components(g: &DirectedGraph) -> Vec<Vec<NodeId>> {
    const UNSEEN: usize = usize::MAX;
    let n = g.node_count();
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comps = Vec::new();
    let mut next_index = 0;
    // (node, position in its friend list)
    let mut call: Vec<(NodeId, usize)> = Vec::new();

    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        call.push((root, 0));
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (u, ref mut pos)) = call.last_mut() {
            let fs = g.friends(u);
            if *pos < fs.len() {
                let v = fs[*pos];
                *pos += 1;
                if index[v] == UNSEEN {
                    index[v] = next_index;
                    low[v] = next_index;
                    next_index += 1;
                    stack.push(v);
                    on_stack[v] = true;
                    call.push((v, 0));
                } else if on_stack[v] {
                    low[u] = low[u].min(index[v]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[u]);
                }
                if low[u] == index[u] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack underflow");
                        on_stack[w] = false;
                        comp.push(w);
                        if w == u {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    comps.push(comp);
                }
            }
        }
    }
    comps.sort_unstable_by_key(|c| c[0]);
    comps
}

/// Induced subgraph on the largest SCC; ties go to the component with the
/// smallest minimum node id. Empty graph in, empty graph out.
pub fn largest_strongly_connected_component(g: &DirectedGraph) -> Subgraph {
    let comps = strongly_connected_components(g);
    // Components are ordered by min id, so the first maximum wins ties.
    let best = comps
        .iter()
        .fold(None::<&Vec<NodeId>>, |best, c| match best {
            Some(b) if b.len() >= c.len() => Some(b),
            _ => Some(c),
        });
    match best {
        Some(c) => g.induced_subgraph(c),
        None => g.induced_subgraph(&[]),
    }
}

/// Maximal induced subgraph in which every node has in + out degree >= k.
pub fn k_core(g: &DirectedGraph, k: usize) -> Subgraph {
    let n = g.node_count();
    let mut degree: Vec<usize> = (0..n).map(|u| g.in_degree(u) + g.out_degree(u)).collect();
    let mut removed = vec![false; n];
    let mut queue: Vec<NodeId> = (0..n).filter(|&u| degree[u] < k).collect();
    for &u in &queue {
        removed[u] = true;
    }
    while let Some(u) = queue.pop() {
        for &v in g.friends(u).iter().chain(g.followers(u)) {
            if removed[v] {
                continue;
            }
            degree[v] -= 1;
            if degree[v] < k {
                removed[v] = true;
                queue.push(v);
            }
        }
    }
    let keep: Vec<NodeId> = (0..n).filter(|&u| !removed[u]).collect();
    g.induced_subgraph(&keep)
}

/// Counts over ordered triplets `(i, j, k)` of distinct nodes, relative to
/// the feed-forward pattern `{i->j, j->k, i->k}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct TriadCensus {
    /// All three pattern edges present.
    pub closed: u64,
    /// A nonempty proper subset of the pattern edges present.
    pub open: u64,
}

impl TriadCensus {
    /// closed / (closed + open); zero when no triplet touches any edge.
    pub fn closed_fraction(&self) -> f64 {
        let total = self.closed + self.open;
        if total == 0 {
            0.0
        } else {
            self.closed as f64 / total as f64
        }
    }
}

/// Closed feed-forward triplets and open triplets, by inclusion-exclusion
/// over the three pattern edges.
pub fn triad_census(g: &DirectedGraph) -> TriadCensus {
    let n = g.node_count() as u64;
    let e = g.edge_count() as u64;
    if n < 3 {
        return TriadCensus::default();
    }

    let mut closed = 0u64;
    for i in 0..g.node_count() {
        for &j in g.friends(i) {
            for &k in g.friends(j) {
                if k != i && g.has_edge(i, k) {
                    closed += 1;
                }
            }
        }
    }

    let mut paths = 0u64; // i->j->k with i != k
    let mut fan_out = 0u64; // i->j, i->k with j != k
    let mut fan_in = 0u64; // i->k, j->k with i != j
    let mut reciprocal = 0u64;
    for u in 0..g.node_count() {
        let (din, dout) = (g.in_degree(u) as u64, g.out_degree(u) as u64);
        paths += din * dout;
        fan_out += dout * dout.saturating_sub(1);
        fan_in += din * din.saturating_sub(1);
        reciprocal += g.friends(u).iter().filter(|&&v| g.has_edge(v, u)).count() as u64;
    }
    paths -= reciprocal;

    let union = 3 * e * (n - 2) - paths - fan_out - fan_in + closed;
    TriadCensus {
        closed,
        open: union - closed,
    }
}

/// `(d, fraction of nodes with in-degree >= d)` for `d = 0..=max in-degree`.
pub fn in_degree_ccdf(g: &DirectedGraph) -> Vec<(usize, f64)> {
    let n = g.node_count();
    if n == 0 {
        return vec![(0, 1.0)];
    }
    let degs = g.in_degrees();
    let max = degs.iter().copied().max().unwrap_or(0);
    let mut counts = vec![0usize; max + 1];
    for d in degs {
        counts[d] += 1;
    }
    let mut out = Vec::with_capacity(max + 1);
    let mut at_least = n;
    for (d, c) in counts.into_iter().enumerate() {
        out.push((d, at_least as f64 / n as f64));
        at_least -= c;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn graph(n: usize, edges: &[(usize, usize)]) -> DirectedGraph {
        DirectedGraph::from_edges(n, edges.iter().copied()).unwrap()
    }

    #[test]
    fn saturated_random_graph() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = random_directed_graph(2, 2, &mut rng).unwrap();
        assert_eq!(g.sorted_edges(), vec![(0, 1), (1, 0)]);
    }

    #[test]
    fn random_graph_sizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = random_directed_graph(100, 400, &mut rng).unwrap();
        assert_eq!(g.edge_count(), 400);
        assert_eq!(g.out_degrees().iter().sum::<usize>(), 400);
        assert!(g.edges().all(|(u, v)| u != v));
        assert_eq!(random_directed_graph(5, 0, &mut rng).unwrap().edge_count(), 0);
        assert!(random_directed_graph(3, 7, &mut rng).is_err());
    }

    #[test]
    fn rewire_basic_and_errors() {
        let mut g = graph(3, &[(0, 1)]);
        g.rewire_edge(0, 1, 2).unwrap();
        assert_eq!(g.sorted_edges(), vec![(0, 2)]);
        assert_eq!(g.followers(1), &[] as &[usize]);
        assert_eq!(g.followers(2), &[0]);

        let mut g = graph(3, &[(0, 1), (0, 2)]);
        assert!(matches!(g.rewire_edge(0, 1, 2), Err(Error::Rewire(_))));
        assert!(matches!(g.rewire_edge(0, 1, 0), Err(Error::Rewire(_))));
        assert!(matches!(g.rewire_edge(1, 0, 2), Err(Error::Rewire(_))));
        assert_eq!(g.sorted_edges(), vec![(0, 1), (0, 2)]);
    }

    #[test]
    fn wcc_examples() {
        let p = weakly_connected_components(&graph(4, &[(0, 1), (2, 3)]));
        assert_eq!(p.groups(), vec![vec![0, 1], vec![2, 3]]);
        let ring = graph(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]);
        assert_eq!(weakly_connected_components(&ring).num_labels(), 1);
        assert_eq!(weakly_connected_components(&DirectedGraph::new(3)).num_labels(), 3);
    }

    #[test]
    fn scc_examples() {
        let s = largest_strongly_connected_component(&graph(3, &[(0, 1), (1, 0), (1, 2)]));
        assert_eq!(s.nodes, vec![0, 1]);
        assert_eq!(s.graph.sorted_edges(), vec![(0, 1), (1, 0)]);

        let cycle = graph(3, &[(0, 1), (1, 2), (2, 0)]);
        let s = largest_strongly_connected_component(&cycle);
        assert_eq!(s.nodes, vec![0, 1, 2]);
        assert_eq!(s.graph, cycle);

        let dag = graph(4, &[(3, 2), (2, 1), (1, 0)]);
        let s = largest_strongly_connected_component(&dag);
        assert_eq!(s.nodes, vec![0]);
        assert_eq!(s.graph.edge_count(), 0);
    }

    #[test]
    fn deep_scc_does_not_recurse() {
        let n = 200_000;
        let g = DirectedGraph::from_edges(n, (0..n).map(|i| (i, (i + 1) % n))).unwrap();
        assert_eq!(largest_strongly_connected_component(&g).nodes.len(), n);
    }

    #[test]
    fn k_core_examples() {
        let tri = graph(3, &[(0, 1), (1, 2), (2, 0)]);
        assert_eq!(k_core(&tri, 2).nodes, vec![0, 1, 2]);
        // Star 1 -> {2,3,4}: leaves drop at k=2, then the hub's degree falls to 0.
        let star = graph(5, &[(1, 2), (1, 3), (1, 4)]);
        assert!(k_core(&star, 2).nodes.is_empty());
        assert_eq!(k_core(&star, 0).nodes, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn triad_examples() {
        // A=0, B=1, C=2: A->B, A->C, C->B; only (A, C, B) is closed.
        let g = graph(3, &[(0, 1), (0, 2), (2, 1)]);
        let t = triad_census(&g);
        assert_eq!(t.closed, 1);
        // Of the 6 orderings only (B, C, A) touches no pattern edge.
        assert_eq!(t.open, 4);

        let empty = triad_census(&DirectedGraph::new(5));
        assert_eq!(empty, TriadCensus { closed: 0, open: 0 });
        assert_eq!(empty.closed_fraction(), 0.0);

        let complete = graph(3, &[(0, 1), (1, 0), (0, 2), (2, 0), (1, 2), (2, 1)]);
        let t = triad_census(&complete);
        assert_eq!(t, TriadCensus { closed: 6, open: 0 });
        assert_eq!(t.closed_fraction(), 1.0);
    }

    #[test]
    fn ccdf_examples() {
        assert_eq!(
            in_degree_ccdf(&graph(3, &[(0, 1), (2, 1)])),
            vec![(0, 1.0), (1, 1.0 / 3.0), (2, 1.0 / 3.0)]
        );
        assert_eq!(in_degree_ccdf(&DirectedGraph::new(4)), vec![(0, 1.0)]);
        let ring = graph(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]);
        assert_eq!(in_degree_ccdf(&ring), vec![(0, 1.0), (1, 1.0)]);
    }
}
