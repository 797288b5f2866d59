//! Time-varying undirected communication graphs.
//!
//! A [`GraphSequence`] is a random-access stream of [`EdgeSet`]s: the edge
//! set at step `k` is a pure function of the sequence parameters, its seed
//! and `k`. Randomness is drawn from a ChaCha stream keyed by `(seed, k)`,
//! so arbitrary steps can be replayed without walking the whole stream.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Number of geometric draws tried before giving up on connectivity.
pub const DEFAULT_GEOMETRIC_RETRIES: usize = 100;

/// Undirected simple graph on agents `0..n`. Pairs are stored as `(i, j)`
/// with `i < j`, sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EdgeSet {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl EdgeSet {
    /// Validates and normalizes a list of unordered pairs.
    pub fn new(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (i, j) in pairs {
            if i == j || i >= n || j >= n {
                return Err(Error::InvalidEdge(i, j, n));
            }
            let key = (i.min(j), i.max(j));
            if !set.insert(key) {
                return Err(Error::DuplicateEdge(key.0, key.1));
            }
        }
        Ok(Self {
            n,
            edges: set.into_iter().collect(),
        })
    }

    pub fn empty(n: usize) -> Self {
        Self { n, edges: Vec::new() }
    }

    pub fn complete(n: usize) -> Self {
        Self::from_normalized(n, ordered_pairs(Topology::Complete, n))
    }

    pub fn ring(n: usize) -> Self {
        Self::from_normalized(n, ordered_pairs(Topology::Ring, n))
    }

    pub fn path(n: usize) -> Self {
        Self::from_normalized(n, ordered_pairs(Topology::Path, n))
    }

    pub fn star(n: usize) -> Self {
        Self::from_normalized(n, ordered_pairs(Topology::Star, n))
    }

    // Caller guarantees valid, distinct pairs.
    fn from_normalized(n: usize, pairs: Vec<(usize, usize)>) -> Self {
        let set: BTreeSet<_> = pairs.into_iter().map(|(i, j)| (i.min(j), i.max(j))).collect();
        Self {
            n,
            edges: set.into_iter().collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.edges.binary_search(&(i.min(j), i.max(j))).is_ok()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for &(i, j) in &self.edges {
            deg[i] += 1;
            deg[j] += 1;
        }
        deg
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(i, j) in &self.edges {
            adj[i].push(j);
            adj[j].push(i);
        }
        adj
    }

    /// Breadth-first search from agent 0. The graph on zero or one agent is
    /// connected.
    pub fn is_connected(&self) -> bool {
        if self.n <= 1 {
            return true;
        }
        let adj = self.adjacency();
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    queue.push_back(w);
                }
            }
        }
        count == self.n
    }

    pub fn union(&self, other: &EdgeSet) -> Result<EdgeSet> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: other.n,
            });
        }
        let set: BTreeSet<_> = self.edges.iter().chain(&other.edges).copied().collect();
        Ok(EdgeSet {
            n: self.n,
            edges: set.into_iter().collect(),
        })
    }

    /// Debug dump: one `i j` pair per line.
    pub fn to_adjacency_text(&self) -> String {
        let mut out = String::new();
        for &(i, j) in &self.edges {
            let _ = writeln!(out, "{i} {j}");
        }
        out
    }
}

/// Deterministic base topologies, plus the two random ones used for
/// experiments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Topology {
    Complete,
    Ring,
    Path,
    Star,
    /// Unit-square random geometric graph, resampled until connected.
    Geometric { radius: f64 },
    /// Random spanning tree plus independent extra edges with probability `p`.
    RandomConnected { p: f64 },
}

impl Topology {
    /// Edges in the topology's natural order (ring order for rings). Random
    /// topologies draw from `seed`.
    pub fn ordered_edges(&self, n: usize, seed: u64) -> Result<Vec<(usize, usize)>> {
        match *self {
            Topology::Geometric { radius } => {
                let edges = connected_geometric(n, radius, seed, DEFAULT_GEOMETRIC_RETRIES)?;
                Ok(edges.edges)
            }
            Topology::RandomConnected { p } => {
                check_probability(p)?;
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                Ok(random_connected_pairs(n, p, &mut rng))
            }
            other => Ok(ordered_pairs(other, n)),
        }
    }
}

fn check_probability(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("edge probability {p} outside [0, 1]")));
    }
    Ok(())
}

fn ordered_pairs(topology: Topology, n: usize) -> Vec<(usize, usize)> {
    match topology {
        Topology::Complete => (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect(),
        Topology::Ring => match n {
            0 | 1 => Vec::new(),
            2 => vec![(0, 1)],
            _ => (0..n).map(|i| (i, (i + 1) % n)).collect(),
        },
        Topology::Path => (1..n).map(|i| (i - 1, i)).collect(),
        Topology::Star => (1..n).map(|i| (0, i)).collect(),
        Topology::Geometric { .. } | Topology::RandomConnected { .. } => {
            unreachable!("random topologies need a seed")
        }
    }
}

/// Random recursive spanning tree over a shuffled vertex order, then each
/// remaining pair independently with probability `p`.
fn random_connected_pairs(n: usize, p: f64, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut set = BTreeSet::new();
    let mut pairs = Vec::new();
    for pos in 1..n {
        let parent = order[rng.random_range(0..pos)];
        let child = order[pos];
        let key = (parent.min(child), parent.max(child));
        set.insert(key);
        pairs.push(key);
    }
    if p > 0.0 {
        for i in 0..n {
            for j in i + 1..n {
                if !set.contains(&(i, j)) && rng.random::<f64>() < p {
                    set.insert((i, j));
                    pairs.push((i, j));
                }
            }
        }
    }
    pairs
}

fn geometric_draw(n: usize, radius: f64, rng: &mut ChaCha8Rng) -> EdgeSet {
    let points: Vec<(f64, f64)> = (0..n).map(|_| (rng.random(), rng.random())).collect();
    let r2 = radius * radius;
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let dx = points[i].0 - points[j].0;
            let dy = points[i].1 - points[j].1;
            if dx * dx + dy * dy <= r2 {
                edges.push((i, j));
            }
        }
    }
    EdgeSet { n, edges }
}

fn connected_geometric(n: usize, radius: f64, seed: u64, retries: usize) -> Result<EdgeSet> {
    if n == 0 {
        return Err(Error::InvalidParameter("geometric graph needs n >= 1".into()));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidParameter(format!("radius {radius} must be positive")));
    }
    let attempts = retries.max(1);
    for attempt in 0..attempts {
        let mut rng = step_rng(seed, attempt as u64);
        let edges = geometric_draw(n, radius, &mut rng);
        if edges.is_connected() {
            return Ok(edges);
        }
    }
    Err(Error::DisconnectedGeometric { n, radius, attempts })
}

/// ChaCha stream for `(seed, k)`: random access by construction.
pub fn step_rng(seed: u64, k: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub enum SequenceKind {
    /// The same edge set at every step.
    Static(EdgeSet),
    /// A fresh random connected graph at every step.
    PerStepConnected { p: f64 },
    /// Step `k` uses group `k mod tau` of a cyclic partition of a connected
    /// base graph, so every window of `tau` steps covers the base graph.
    TauConnected { groups: Vec<EdgeSet> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphSequence {
    n: usize,
    seed: u64,
    tau: usize,
    kind: SequenceKind,
}

impl GraphSequence {
    pub fn fixed(edges: EdgeSet) -> Self {
        Self {
            n: edges.n(),
            seed: 0,
            tau: 1,
            kind: SequenceKind::Static(edges),
        }
    }

    pub fn static_topology(topology: Topology, n: usize, seed: u64) -> Result<Self> {
        let edges = EdgeSet::new(n, topology.ordered_edges(n, seed)?)?;
        let mut seq = Self::fixed(edges);
        seq.seed = seed;
        Ok(seq)
    }

    /// Static random geometric graph in the unit square. Disconnected draws
    /// are resampled with the next sub-seed, up to `retries` draws.
    pub fn random_geometric(n: usize, radius: f64, seed: u64) -> Result<Self> {
        Self::random_geometric_with_retries(n, radius, seed, DEFAULT_GEOMETRIC_RETRIES)
    }

    pub fn random_geometric_with_retries(
        n: usize,
        radius: f64,
        seed: u64,
        retries: usize,
    ) -> Result<Self> {
        let edges = connected_geometric(n, radius, seed, retries)?;
        let mut seq = Self::fixed(edges);
        seq.seed = seed;
        Ok(seq)
    }

    pub fn per_step_connected(n: usize, p: f64, seed: u64) -> Result<Self> {
        check_probability(p)?;
        Ok(Self {
            n,
            seed,
            tau: 1,
            kind: SequenceKind::PerStepConnected { p },
        })
    }

    /// Partitions `ordered` cyclically: edge `j` goes to group `j mod tau`.
    pub fn tau_connected(n: usize, ordered: &[(usize, usize)], tau: usize) -> Result<Self> {
        if tau == 0 {
            return Err(Error::InvalidParameter("tau must be positive".into()));
        }
        let base = EdgeSet::new(n, ordered.iter().copied())?;
        if !base.is_connected() {
            return Err(Error::DisconnectedBase);
        }
        let groups = (0..tau)
            .map(|g| {
                let pairs = ordered.iter().copied().skip(g).step_by(tau);
                EdgeSet::new(n, pairs)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n,
            seed: 0,
            tau,
            kind: SequenceKind::TauConnected { groups },
        })
    }

    /// Draws a base topology from `seed`, shuffles its edge order, then
    /// partitions it cyclically into `tau` groups.
    pub fn tau_connected_random(topology: Topology, n: usize, tau: usize, seed: u64) -> Result<Self> {
        let mut ordered = topology.ordered_edges(n, seed)?;
        let mut rng = step_rng(seed, u64::MAX);
        ordered.shuffle(&mut rng);
        let mut seq = Self::tau_connected(n, &ordered, tau)?;
        seq.seed = seed;
        Ok(seq)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Declared connectivity window.
    pub fn tau(&self) -> usize {
        self.tau
    }

    pub fn kind(&self) -> &SequenceKind {
        &self.kind
    }

    /// Smallest `p` with `edge_set_at(k + p) == edge_set_at(k)` for all `k`,
    /// if the sequence is periodic.
    pub fn period(&self) -> Option<usize> {
        match &self.kind {
            SequenceKind::Static(_) => Some(1),
            SequenceKind::TauConnected { groups } => Some(groups.len()),
            SequenceKind::PerStepConnected { .. } => None,
        }
    }

    pub fn edge_set_at(&self, k: usize) -> EdgeSet {
        match &self.kind {
            SequenceKind::Static(edges) => edges.clone(),
            SequenceKind::TauConnected { groups } => groups[k % groups.len()].clone(),
            SequenceKind::PerStepConnected { p } => {
                let mut rng = step_rng(self.seed, k as u64);
                EdgeSet::from_normalized(self.n, random_connected_pairs(self.n, *p, &mut rng))
            }
        }
    }

    /// Whether `E^k ∪ … ∪ E^{k+tau-1}` is connected.
    pub fn is_union_connected(&self, k: usize, tau: usize) -> bool {
        let mut union = EdgeSet::empty(self.n);
        for step in k..k + tau.max(1) {
            union = union
                .union(&self.edge_set_at(step))
                .expect("edge sets of one sequence share n");
        }
        union.is_connected()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(n: usize, pairs: &[(usize, usize)]) -> EdgeSet {
        EdgeSet::new(n, pairs.iter().copied()).unwrap()
    }

    #[test]
    fn static_complete_repeats() {
        let seq = GraphSequence::fixed(EdgeSet::complete(3));
        for k in [0, 1, 17, 1000] {
            assert_eq!(seq.edge_set_at(k), set(3, &[(0, 1), (0, 2), (1, 2)]));
        }
    }

    #[test]
    fn ring_partition_into_matchings() {
        let ring: Vec<_> = (0..4).map(|i| (i, (i + 1) % 4)).collect();
        let seq = GraphSequence::tau_connected(4, &ring, 2).unwrap();
        assert_eq!(seq.edge_set_at(0), set(4, &[(0, 1), (2, 3)]));
        assert_eq!(seq.edge_set_at(1), set(4, &[(1, 2), (3, 0)]));
        assert!(!seq.is_union_connected(0, 1));
        assert!(seq.is_union_connected(0, 2));
        assert!(seq.is_union_connected(1, 2));
    }

    #[test]
    fn single_agent_has_no_edges() {
        let seq = GraphSequence::fixed(EdgeSet::complete(1));
        assert!(seq.edge_set_at(5).is_empty());
        assert!(seq.is_union_connected(0, 1));
        let per_step = GraphSequence::per_step_connected(1, 0.5, 3).unwrap();
        assert!(per_step.edge_set_at(9).is_empty());
    }

    #[test]
    fn rejects_bad_edges() {
        assert_eq!(EdgeSet::new(3, [(1, 1)]), Err(Error::InvalidEdge(1, 1, 3)));
        assert_eq!(EdgeSet::new(3, [(0, 3)]), Err(Error::InvalidEdge(0, 3, 3)));
        assert_eq!(EdgeSet::new(3, [(0, 1), (1, 0)]), Err(Error::DuplicateEdge(0, 1)));
    }

    #[test]
    fn geometric_two_points_always_adjacent() {
        for seed in 0..20 {
            let seq = GraphSequence::random_geometric(2, 1.5, seed).unwrap();
            assert_eq!(seq.edge_set_at(0), set(2, &[(0, 1)]));
        }
    }

    #[test]
    fn geometric_twenty_nodes_connected() {
        let seq = GraphSequence::random_geometric(20, 0.5, 7).unwrap();
        let edges = seq.edge_set_at(0);
        assert!(edges.is_connected());
        assert!(edges.len() >= 19);
    }

    #[test]
    fn geometric_tiny_radius_exhausts_retries() {
        let err = GraphSequence::random_geometric(3, 1e-4, 1).unwrap_err();
        assert!(matches!(err, Error::DisconnectedGeometric { n: 3, attempts: 100, .. }));
        assert!(err.to_string().contains("could not generate connected geometric graph"));
    }

    #[test]
    fn per_step_graphs_are_connected_and_replayable() {
        let a = GraphSequence::per_step_connected(12, 0.1, 42).unwrap();
        let b = GraphSequence::per_step_connected(12, 0.1, 42).unwrap();
        assert!((0..50).all(|k| a.edge_set_at(k).is_connected()));
        assert_eq!(a.edge_set_at(31), b.edge_set_at(31));
        assert_ne!(a.edge_set_at(0), a.edge_set_at(1));
    }

    #[test]
    fn tau_connected_needs_connected_base() {
        let err = GraphSequence::tau_connected(4, &[(0, 1), (2, 3)], 2).unwrap_err();
        assert_eq!(err, Error::DisconnectedBase);
    }

    #[test]
    fn adjacency_text_dump() {
        assert_eq!(EdgeSet::path(3).to_adjacency_text(), "0 1\n1 2\n");
    }

    #[test]
    fn ring_of_two_is_single_edge() {
        assert_eq!(EdgeSet::ring(2), set(2, &[(0, 1)]));
        assert_eq!(EdgeSet::ring(5).len(), 5);
    }
}
