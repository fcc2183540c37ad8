//! Social Distance Attachment (SDA) networks and their community structure.
//!
//! Agents are linked with a probability that decays with the distance
//! between their wealth levels. Disconnected pieces are stitched onto the
//! largest component, communities are found by semi-synchronous label
//! propagation, and every agent is also considered a member of each
//! community one of its neighbours belongs to.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};

/// Default divisor turning the mean pairwise wealth distance into `b`.
pub const DISTANCE_DIVISOR: f64 = 15.0;

/// Per-agent wealth levels. Holds at least two finite values.
#[derive(Debug, Clone, PartialEq)]
pub struct WealthVector(Vec<f64>);

impl WealthVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidInput("wealth vector needs at least 2 agents"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("wealth values must be finite"));
        }
        Ok(WealthVector(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

pub fn sample_initial_wealth(n: usize, mean: f64, sd: f64, seed: u64) -> Result<WealthVector> {
    if n < 2 {
        return Err(Error::InvalidInput("need at least 2 agents"));
    }
    if !(sd > 0.0) || !mean.is_finite() {
        return Err(Error::InvalidInput("wealth sd must be positive"));
    }
    let normal = Normal::new(mean, sd).map_err(|_| Error::InvalidInput("bad normal law"))?;
    let mut rng = rng_from_seed(seed);
    WealthVector::new((0..n).map(|_| normal.sample(&mut rng)).collect())
}

/// Mean absolute pairwise difference over all unordered pairs.
pub fn mean_pairwise_distance(w: &[f64]) -> f64 {
    let n = w.len();
    if n < 2 {
        return 0.0;
    }
    let mut sorted = w.to_vec();
    sorted.sort_by(f64::total_cmp);
    // sum_{i<j} (x_(j) - x_(i)) = sum_k x_(k) * (2k - n + 1), k 0-based
    let total: f64 = sorted
        .iter()
        .enumerate()
        .map(|(k, &x)| x * (2.0 * k as f64 - n as f64 + 1.0))
        .sum();
    total / (n * (n - 1) / 2) as f64
}

/// Characteristic distance `b`: mean pairwise wealth distance over 15.
pub fn characteristic_distance(w: &WealthVector) -> f64 {
    characteristic_distance_with(w, DISTANCE_DIVISOR)
}

pub fn characteristic_distance_with(w: &WealthVector, divisor: f64) -> f64 {
    mean_pairwise_distance(w.as_slice()) / divisor
}

/// SDA link probability `1 / (1 + (d/b)^alpha)`.
///
/// With `b = 0` every agent has the same wealth and the graph is complete.
pub fn edge_probability(d: f64, b: f64, alpha: f64) -> f64 {
    if b <= 0.0 {
        return if d <= 0.0 { 1.0 } else { 0.0 };
    }
    if d <= 0.0 {
        return 1.0;
    }
    1.0 / (1.0 + libm::pow(d / b, alpha))
}

/// Undirected simple graph over agents `0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SocialGraph {
    /// Sorted neighbour lists.
    adjacency: Vec<Vec<usize>>,
    n_edges: usize,
    pub homophily: f64,
    pub characteristic_distance: f64,
}

impl SocialGraph {
    pub fn empty(n: usize) -> Self {
        SocialGraph {
            adjacency: vec![Vec::new(); n],
            n_edges: 0,
            homophily: 0.0,
            characteristic_distance: 0.0,
        }
    }

    /// Builds a graph from an edge list; self-loops and duplicates are skipped.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut g = Self::empty(n);
        for &(a, b) in edges {
            g.add_edge(a, b);
        }
        g
    }

    pub fn n_nodes(&self) -> usize {
        self.adjacency.len()
    }

    pub fn n_edges(&self) -> usize {
        self.n_edges
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adjacency[a].binary_search(&b).is_ok()
    }

    /// Inserts `{a, b}`. Returns false for self-loops and existing edges.
    pub fn add_edge(&mut self, a: usize, b: usize) -> bool {
        if a == b {
            return false;
        }
        match self.adjacency[a].binary_search(&b) {
            Ok(_) => false,
            Err(pos) => {
                self.adjacency[a].insert(pos, b);
                let pos_b = self.adjacency[b].binary_search(&a).unwrap_err();
                self.adjacency[b].insert(pos_b, a);
                self.n_edges += 1;
                true
            }
        }
    }

    /// Edges as `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(i, nb)| nb.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
    }

    /// Connected components, each sorted, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.n_nodes();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        let mut stack = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            stack.push(start);
            let mut comp = Vec::new();
            while let Some(u) = stack.pop() {
                comp.push(u);
                for &v in &self.adjacency[u] {
                    if !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() <= 1
    }
}

/// Samples every pair independently with [`edge_probability`], then repairs
/// connectivity.
pub fn build_sda_graph(w: &WealthVector, alpha: f64, seed: u64) -> Result<SocialGraph> {
    build_sda_graph_with(w, alpha, DISTANCE_DIVISOR, seed)
}

pub fn build_sda_graph_with(
    w: &WealthVector,
    alpha: f64,
    divisor: f64,
    seed: u64,
) -> Result<SocialGraph> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidInput("homophily must be positive"));
    }
    let b = characteristic_distance_with(w, divisor);
    let g = sample_sda_edges(w, alpha, b, derive_seed(seed, 0, 0));
    Ok(repair_connectivity(g, w, derive_seed(seed, 1, 0)))
}

/// Raw SDA sampling, before any connectivity repair.
pub fn sample_sda_edges(w: &WealthVector, alpha: f64, b: f64, seed: u64) -> SocialGraph {
    let xs = w.as_slice();
    let n = xs.len();
    let mut rng = rng_from_seed(seed);
    let mut adjacency = vec![Vec::new(); n];
    let mut n_edges = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            let p = edge_probability(libm::fabs(xs[i] - xs[j]), b, alpha);
            let u: f64 = rng.random();
            if u < p {
                // (i, j) visited in lexicographic order keeps lists sorted
                adjacency[i].push(j);
                adjacency[j].push(i);
                n_edges += 1;
            }
        }
    }
    SocialGraph {
        adjacency,
        n_edges,
        homophily: alpha,
        characteristic_distance: b,
    }
}

/// Joins every component to the largest one.
///
/// For each smaller component a node is picked uniformly at random and linked
/// to the node of the largest component whose wealth is closest to it. Ties
/// between equally large components go to the one with the smallest node id;
/// ties in wealth distance go to the smallest node id.
pub fn repair_connectivity(mut g: SocialGraph, w: &WealthVector, seed: u64) -> SocialGraph {
    let comps = g.components();
    if comps.len() <= 1 {
        return g;
    }
    let xs = w.as_slice();
    let largest = comps
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.len().cmp(&b.1.len()).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i)
        .unwrap();
    let mut rng = rng_from_seed(seed);
    let mut new_edges = Vec::with_capacity(comps.len() - 1);
    for (ci, comp) in comps.iter().enumerate() {
        if ci == largest {
            continue;
        }
        let u = comp[rng.random_range(0..comp.len())];
        let mut best = comps[largest][0];
        let mut best_d = f64::INFINITY;
        for &v in &comps[largest] {
            let d = libm::fabs(xs[u] - xs[v]);
            if d < best_d {
                best_d = d;
                best = v;
            }
        }
        new_edges.push((u, best));
    }
    for (u, v) in new_edges {
        g.add_edge(u, v);
    }
    g
}

/// Community structure of a graph.
#[derive(Debug, Clone, PartialEq)]
pub struct CommunityAssignment {
    /// Community id of each node; ids are `0..n_communities`, numbered by
    /// smallest member.
    pub core_label: Vec<usize>,
    /// Sorted members of each community.
    pub members: Vec<Vec<usize>>,
    /// Sorted community ids each node belongs to: its own plus its
    /// neighbours'.
    pub extended_membership: Vec<Vec<usize>>,
}

impl CommunityAssignment {
    /// Builds an assignment from arbitrary per-node labels, renumbering them
    /// by first appearance. Extended membership is left as the core label.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut remap: BTreeMap<usize, usize> = BTreeMap::new();
        let mut core_label = Vec::with_capacity(labels.len());
        let mut members: Vec<Vec<usize>> = Vec::new();
        for (node, &l) in labels.iter().enumerate() {
            let next = remap.len();
            let id = *remap.entry(l).or_insert(next);
            if id == members.len() {
                members.push(Vec::new());
            }
            members[id].push(node);
            core_label.push(id);
        }
        let extended_membership = core_label.iter().map(|&c| vec![c]).collect();
        CommunityAssignment {
            core_label,
            members,
            extended_membership,
        }
    }

    pub fn n_communities(&self) -> usize {
        self.members.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.core_label.len()
    }

    /// Nodes whose extended membership contains community `c`.
    pub fn eligible_members(&self, c: usize) -> Vec<usize> {
        self.extended_membership
            .iter()
            .enumerate()
            .filter(|(_, ext)| ext.binary_search(&c).is_ok())
            .map(|(i, _)| i)
            .collect()
    }
}

/// Greedy colouring, nodes visited by decreasing degree (ties by id).
pub fn greedy_coloring(g: &SocialGraph) -> Vec<usize> {
    let n = g.n_nodes();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| g.degree(b).cmp(&g.degree(a)).then(a.cmp(&b)));
    let mut color = vec![usize::MAX; n];
    let mut used: Vec<bool> = Vec::new();
    for &u in &order {
        used.clear();
        used.resize(g.degree(u) + 1, false);
        for &v in g.neighbors(u) {
            let c = color[v];
            if c < used.len() {
                used[c] = true;
            }
        }
        color[u] = used.iter().position(|&x| !x).unwrap();
    }
    color
}

struct LabelCounter {
    counts: Vec<usize>,
    touched: Vec<usize>,
}

impl LabelCounter {
    fn new(n: usize) -> Self {
        LabelCounter {
            counts: vec![0; n],
            touched: Vec::new(),
        }
    }

    /// Writes the labels of maximal frequency among the neighbours of `u`
    /// into `out`, ascending. Empty for isolated nodes.
    fn most_frequent(&mut self, g: &SocialGraph, labels: &[usize], u: usize, out: &mut Vec<usize>) {
        out.clear();
        let mut best = 0;
        for &v in g.neighbors(u) {
            let l = labels[v];
            if self.counts[l] == 0 {
                self.touched.push(l);
            }
            self.counts[l] += 1;
            best = best.max(self.counts[l]);
        }
        for &l in &self.touched {
            if self.counts[l] == best {
                out.push(l);
            }
        }
        for &l in &self.touched {
            self.counts[l] = 0;
        }
        self.touched.clear();
        out.sort_unstable();
    }
}

/// Semi-synchronous label propagation.
///
/// Nodes are greedily coloured; colour classes (independent sets) are
/// updated one after another, all nodes of a class against the same labels.
/// A node keeps its label while that label is among the most frequent in
/// its neighbourhood; otherwise it adopts one of the most frequent labels,
/// chosen uniformly at random. Stops once every node's label is among its
/// neighbourhood's most frequent ones. Fails after `100 * n` rounds.
pub fn detect_communities(g: &SocialGraph, seed: u64) -> Result<CommunityAssignment> {
    detect_communities_capped(g, seed, 100 * g.n_nodes().max(1))
}

pub fn detect_communities_capped(
    g: &SocialGraph,
    seed: u64,
    max_rounds: usize,
) -> Result<CommunityAssignment> {
    let n = g.n_nodes();
    let coloring = greedy_coloring(g);
    let n_colors = coloring.iter().copied().max().map_or(0, |c| c + 1);
    let mut classes: Vec<Vec<usize>> = vec![Vec::new(); n_colors];
    for (u, &c) in coloring.iter().enumerate() {
        classes[c].push(u);
    }
    let mut labels: Vec<usize> = (0..n).collect();
    let mut counter = LabelCounter::new(n);
    let mut rng = rng_from_seed(seed);
    let mut top = Vec::new();
    let mut updates: Vec<(usize, usize)> = Vec::new();
    let mut rounds = 0;
    loop {
        let stable = (0..n).all(|u| {
            if g.degree(u) == 0 {
                return true;
            }
            counter.most_frequent(g, &labels, u, &mut top);
            top.binary_search(&labels[u]).is_ok()
        });
        if stable {
            break;
        }
        if rounds >= max_rounds {
            return Err(Error::Convergence { rounds });
        }
        rounds += 1;
        for class in &classes {
            updates.clear();
            for &u in class {
                if g.degree(u) == 0 {
                    continue;
                }
                counter.most_frequent(g, &labels, u, &mut top);
                if top.binary_search(&labels[u]).is_err() {
                    let pick = if top.len() == 1 {
                        top[0]
                    } else {
                        top[rng.random_range(0..top.len())]
                    };
                    updates.push((u, pick));
                }
            }
            for &(u, l) in &updates {
                labels[u] = l;
            }
        }
    }
    let mut c = CommunityAssignment::from_labels(&labels);
    c.extended_membership = extended_membership(g, &c);
    Ok(c)
}

/// Own community plus every neighbour's community, sorted.
pub fn extended_membership(g: &SocialGraph, c: &CommunityAssignment) -> Vec<Vec<usize>> {
    (0..g.n_nodes())
        .map(|i| {
            let mut set: Vec<usize> = g
                .neighbors(i)
                .iter()
                .map(|&j| c.core_label[j])
                .chain(core::iter::once(c.core_label[i]))
                .collect();
            set.sort_unstable();
            set.dedup();
            set
        })
        .collect()
}

/// Network statistics aggregated over communities.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSummary {
    pub n_communities: usize,
    pub community_sizes: Vec<usize>,
    /// Number of other communities each community shares a cross edge with.
    pub community_degrees: Vec<usize>,
    pub size_histogram: BTreeMap<usize, usize>,
    pub degree_histogram: BTreeMap<usize, usize>,
}

pub fn graph_distribution_summary(c: &CommunityAssignment, g: &SocialGraph) -> GraphSummary {
    let k = c.n_communities();
    let mut touching: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); k];
    for (a, b) in g.edges() {
        let (ca, cb) = (c.core_label[a], c.core_label[b]);
        if ca != cb {
            touching[ca].insert(cb);
            touching[cb].insert(ca);
        }
    }
    let community_sizes: Vec<usize> = c.members.iter().map(Vec::len).collect();
    let community_degrees: Vec<usize> = touching.iter().map(BTreeSet::len).collect();
    let mut size_histogram = BTreeMap::new();
    for &s in &community_sizes {
        *size_histogram.entry(s).or_insert(0) += 1;
    }
    let mut degree_histogram = BTreeMap::new();
    for &d in &community_degrees {
        *degree_histogram.entry(d).or_insert(0) += 1;
    }
    GraphSummary {
        n_communities: k,
        community_sizes,
        community_degrees,
        size_histogram,
        degree_histogram,
    }
}
