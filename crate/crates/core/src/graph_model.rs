//! Growing simple graphs and the attachment schemes that drive them.
//!
//! Vertices are stored by dense index. The `m0` initial vertices occupy
//! indices `0..m0` and carry the labels `-m0..=-1`; the vertex added at step
//! `s` sits at index `m0 + s - 1` and carries label `s`. There is no vertex 0.
//!
//! Two schemes are provided:
//!
//! * [`AttachmentScheme::HolmeKimSpecial`]: one endpoint `l` is drawn with
//!   probability `k_l / sum_j k_j`, the remaining `m - 1` endpoints are drawn
//!   uniformly without replacement from the neighborhood of `l`. Every
//!   existing vertex then receives an edge with probability exactly
//!   `m k_i / sum_j k_j`, which [`attachment_probability_exact`] checks by
//!   enumeration.
//! * [`AttachmentScheme::SequentialPreferential`]: `m` endpoints drawn one
//!   at a time proportionally to (step-start) degree among vertices not yet
//!   chosen. A baseline only; its receive probabilities are not `m k_i / sum k`
//!   once `m >= 2`.

use std::collections::BTreeMap;
use std::fmt;

use itertools::Itertools;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Stream};

/// Default cap on the vertex count accepted by the exhaustive enumerators.
pub const DEFAULT_ENUMERATION_BOUND: usize = 12;

/// Signed vertex label: `-m0..=-1` for the initial clique, `1..=t` afterwards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Label(pub i64);

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AttachmentScheme {
    HolmeKimSpecial,
    SequentialPreferential,
}

impl AttachmentScheme {
    pub fn name(self) -> &'static str {
        match self {
            AttachmentScheme::HolmeKimSpecial => "holme-kim",
            AttachmentScheme::SequentialPreferential => "sequential",
        }
    }
}

impl fmt::Display for AttachmentScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parameters of one experiment. Bounds are checked in [`RunConfig::new`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunConfig {
    m0: usize,
    m: usize,
    t: usize,
    scheme: AttachmentScheme,
    seed: u64,
    replicates: usize,
}

impl RunConfig {
    pub fn new(
        m0: usize,
        m: usize,
        t: usize,
        scheme: AttachmentScheme,
        seed: u64,
        replicates: usize,
    ) -> Result<Self> {
        if m0 < 2 {
            return Err(Error::config("m0", format!("m0 >= 2 required (got m0={m0})")));
        }
        if m < 1 || m > m0 {
            return Err(Error::config(
                "m",
                format!("1 <= m <= m0 required (got m={m}, m0={m0})"),
            ));
        }
        if replicates < 1 {
            return Err(Error::config(
                "replicates",
                format!("replicates >= 1 required (got {replicates})"),
            ));
        }
        Ok(RunConfig {
            m0,
            m,
            t,
            scheme,
            seed,
            replicates,
        })
    }

    pub fn m0(&self) -> usize {
        self.m0
    }
    pub fn m(&self) -> usize {
        self.m
    }
    pub fn t(&self) -> usize {
        self.t
    }
    pub fn scheme(&self) -> AttachmentScheme {
        self.scheme
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
    pub fn replicates(&self) -> usize {
        self.replicates
    }

    /// Total degree of the initial clique, `m0 (m0 - 1)`.
    pub fn n0(&self) -> usize {
        self.m0 * (self.m0 - 1)
    }
}

/// A growing undirected simple graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphState {
    adjacency: Vec<Vec<usize>>,
    // Every edge contributes both endpoints once, so a uniform draw from this
    // list picks vertex i with probability k_i / total_degree.
    endpoints: Vec<usize>,
    edges: Vec<(usize, usize)>,
    num_initial: usize,
    step_count: usize,
}

impl GraphState {
    /// The complete graph `K_m0` on labels `-m0..=-1`.
    pub fn new_complete(m0: usize) -> Result<Self> {
        if m0 < 2 {
            return Err(Error::config("m0", format!("m0 >= 2 required (got m0={m0})")));
        }
        let mut edges = Vec::with_capacity(m0 * (m0 - 1) / 2);
        for a in 0..m0 {
            for b in a + 1..m0 {
                edges.push((a, b));
            }
        }
        Self::from_edges(m0, &edges)
    }

    /// Builds a state with `n` initial vertices (labels `-n..=-1`) from an
    /// edge list over dense indices. Rejects loops and repeated edges.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut state = GraphState {
            adjacency: vec![Vec::new(); n],
            endpoints: Vec::with_capacity(2 * edges.len()),
            edges: Vec::with_capacity(edges.len()),
            num_initial: n,
            step_count: 0,
        };
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::Invariant(format!("edge ({a}, {b}) out of range for {n} vertices")));
            }
            if a == b {
                return Err(Error::Invariant(format!("self-loop at vertex index {a}")));
            }
            if state.adjacency[a].contains(&b) {
                return Err(Error::Invariant(format!("repeated edge ({a}, {b})")));
            }
            state.push_edge(a, b);
        }
        Ok(state)
    }

    fn push_edge(&mut self, a: usize, b: usize) {
        self.adjacency[a].push(b);
        self.adjacency[b].push(a);
        self.endpoints.push(a);
        self.endpoints.push(b);
        self.edges.push((a, b));
    }

    pub fn num_vertices(&self) -> usize {
        self.adjacency.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_initial(&self) -> usize {
        self.num_initial
    }

    pub fn step_count(&self) -> usize {
        self.step_count
    }

    pub fn total_degree(&self) -> usize {
        self.endpoints.len()
    }

    pub fn degree(&self, index: usize) -> usize {
        self.adjacency[index].len()
    }

    pub fn degrees(&self) -> impl ExactSizeIterator<Item = usize> + '_ {
        self.adjacency.iter().map(Vec::len)
    }

    pub fn max_degree(&self) -> usize {
        self.degrees().max().unwrap_or(0)
    }

    pub fn min_degree(&self) -> usize {
        self.degrees().min().unwrap_or(0)
    }

    pub fn neighbors(&self, index: usize) -> &[usize] {
        &self.adjacency[index]
    }

    pub fn label(&self, index: usize) -> Label {
        if index < self.num_initial {
            Label(index as i64 - self.num_initial as i64)
        } else {
            Label((index - self.num_initial) as i64 + 1)
        }
    }

    pub fn index_of(&self, label: Label) -> Option<usize> {
        let n0 = self.num_initial as i64;
        let idx = match label.0 {
            l if l < 0 && l >= -n0 => l + n0,
            l if l > 0 => n0 + l - 1,
            _ => return None,
        };
        let idx = idx as usize;
        (idx < self.num_vertices()).then_some(idx)
    }

    /// Edges in insertion order, as dense indices.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Edges in insertion order, as labels. New-vertex edges are reported
    /// `(new, existing)`.
    pub fn labeled_edges(&self) -> impl Iterator<Item = (Label, Label)> + '_ {
        self.edges.iter().map(|&(a, b)| (self.label(a), self.label(b)))
    }

    /// Checks symmetry, simplicity and the degree bookkeeping.
    pub fn validate(&self) -> Result<()> {
        let n = self.num_vertices();
        let mut deg_sum = 0;
        for (i, adj) in self.adjacency.iter().enumerate() {
            let mut seen = vec![false; n];
            for &j in adj {
                if j == i {
                    return Err(Error::Invariant(format!("self-loop at {}", self.label(i))));
                }
                if seen[j] {
                    return Err(Error::Invariant(format!(
                        "parallel edge {} - {}",
                        self.label(i),
                        self.label(j)
                    )));
                }
                seen[j] = true;
                if !self.adjacency[j].contains(&i) {
                    return Err(Error::Invariant(format!(
                        "asymmetric adjacency {} -> {}",
                        self.label(i),
                        self.label(j)
                    )));
                }
            }
            deg_sum += adj.len();
        }
        if deg_sum != self.endpoints.len() || deg_sum != 2 * self.edges.len() {
            return Err(Error::Invariant(format!(
                "degree sum {deg_sum} disagrees with {} endpoints / {} edges",
                self.endpoints.len(),
                self.edges.len()
            )));
        }
        Ok(())
    }

    fn attach_new_vertex(&mut self, targets: &[usize]) {
        let new = self.adjacency.len();
        self.adjacency.push(Vec::with_capacity(targets.len()));
        for &target in targets {
            self.push_edge(new, target);
        }
        self.step_count += 1;
    }

    /// One step of the special Holme-Kim scheme. Returns the chosen
    /// endpoints as dense indices, first endpoint first.
    pub fn step_holme_kim(&mut self, m: usize, rng: &mut Stream) -> Result<Vec<usize>> {
        if m == 0 {
            return Err(Error::config("m", "m >= 1 required"));
        }
        if self.endpoints.is_empty() {
            return Err(Error::Invariant("no edges to attach to".into()));
        }
        let first = self.endpoints[rng.gen_range(0..self.endpoints.len())];
        let hood = &self.adjacency[first];
        if hood.len() < m - 1 {
            return Err(Error::Invariant(format!(
                "neighborhood of {} has {} vertices, fewer than m-1={}",
                self.label(first),
                hood.len(),
                m - 1
            )));
        }
        let mut pool = hood.clone();
        // Partial Fisher-Yates: the first m-1 slots become a uniform
        // (m-1)-subset of the neighborhood.
        for slot in 0..m - 1 {
            let pick = rng.gen_range(slot..pool.len());
            pool.swap(slot, pick);
        }
        let mut targets = Vec::with_capacity(m);
        targets.push(first);
        targets.extend_from_slice(&pool[..m - 1]);
        self.attach_new_vertex(&targets);
        debug_assert!(self.check_last_vertex(m).is_ok());
        Ok(targets)
    }

    /// One step of the sequential baseline: `m` distinct endpoints, each
    /// drawn proportionally to its step-start degree among vertices not yet
    /// chosen.
    pub fn step_sequential(&mut self, m: usize, rng: &mut Stream) -> Result<Vec<usize>> {
        if m == 0 {
            return Err(Error::config("m", "m >= 1 required"));
        }
        let candidates = self.degrees().filter(|&k| k > 0).count();
        if candidates < m {
            return Err(Error::config(
                "m",
                format!("m={m} exceeds the {candidates} vertices with positive degree"),
            ));
        }
        let mut chosen = vec![false; self.num_vertices()];
        let mut targets = Vec::with_capacity(m);
        // Rejection against the endpoint list samples from the degree law
        // conditioned on not-yet-chosen vertices.
        while targets.len() < m {
            let v = self.endpoints[rng.gen_range(0..self.endpoints.len())];
            if !chosen[v] {
                chosen[v] = true;
                targets.push(v);
            }
        }
        self.attach_new_vertex(&targets);
        debug_assert!(self.check_last_vertex(m).is_ok());
        Ok(targets)
    }

    pub fn step(&mut self, scheme: AttachmentScheme, m: usize, rng: &mut Stream) -> Result<Vec<usize>> {
        match scheme {
            AttachmentScheme::HolmeKimSpecial => self.step_holme_kim(m, rng),
            AttachmentScheme::SequentialPreferential => self.step_sequential(m, rng),
        }
    }

    fn check_last_vertex(&self, m: usize) -> Result<()> {
        let last = self.num_vertices() - 1;
        let adj = &self.adjacency[last];
        if adj.len() != m {
            return Err(Error::Invariant(format!("new vertex has degree {}", adj.len())));
        }
        for (pos, &a) in adj.iter().enumerate() {
            if a == last || adj[..pos].contains(&a) {
                return Err(Error::Invariant("new vertex has a loop or parallel edge".into()));
            }
        }
        Ok(())
    }

    /// Degree to vertex-count map.
    pub fn degree_histogram(&self) -> BTreeMap<usize, usize> {
        let mut hist = BTreeMap::new();
        for k in self.degrees() {
            *hist.entry(k).or_insert(0) += 1;
        }
        hist
    }

    /// Dense degree counts indexed by degree (`counts[k]`).
    pub fn degree_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.max_degree() + 1];
        for k in self.degrees() {
            counts[k] += 1;
        }
        counts
    }
}

/// Runs `config.t()` steps from `K_m0` using random stream 0 of `config.seed()`.
pub fn generate(config: &RunConfig) -> Result<GraphState> {
    generate_stream(config, 0)
}

/// Like [`generate`] but on replicate stream `index`.
pub fn generate_stream(config: &RunConfig, index: u64) -> Result<GraphState> {
    let mut rng = rng::stream(config.seed(), index);
    let mut state = GraphState::new_complete(config.m0())?;
    state.endpoints.reserve(2 * config.m() * config.t());
    state.edges.reserve(config.m() * config.t());
    state.adjacency.reserve(config.t());
    for _ in 0..config.t() {
        state.step(config.scheme(), config.m(), &mut rng)?;
    }
    state.validate()?;
    Ok(state)
}

/// `m k_i / sum_j k_j` for every vertex, as exact rationals.
pub fn mpi_target(state: &GraphState, m: usize) -> Vec<BigRational> {
    let total = BigInt::from(state.total_degree());
    state
        .degrees()
        .map(|k| BigRational::new(BigInt::from(m * k), total.clone()))
        .collect()
}

fn check_enumerable(state: &GraphState, bound: usize) -> Result<()> {
    if state.num_vertices() > bound {
        return Err(Error::EnumerationBound {
            vertices: state.num_vertices(),
            bound,
        });
    }
    if state.total_degree() == 0 {
        return Err(Error::domain("state has no edges"));
    }
    Ok(())
}

/// Per-vertex probability of receiving an edge in one Holme-Kim step,
/// by enumerating every (first endpoint, (m-1)-subset of its neighborhood)
/// outcome with weight `k_l / sum k * 1 / C(k_l, m-1)`.
pub fn attachment_probability_exact(
    state: &GraphState,
    m: usize,
    bound: usize,
) -> Result<Vec<BigRational>> {
    check_enumerable(state, bound)?;
    if m == 0 {
        return Err(Error::config("m", "m >= 1 required"));
    }
    let n = state.num_vertices();
    let total = BigInt::from(state.total_degree());
    let mut receive = vec![BigRational::zero(); n];
    for l in 0..n {
        let hood = state.neighbors(l);
        if hood.is_empty() {
            continue;
        }
        if hood.len() < m - 1 {
            return Err(Error::domain(format!(
                "vertex {} has degree {} < m-1={}; scheme undefined",
                state.label(l),
                hood.len(),
                m - 1
            )));
        }
        let subsets: Vec<Vec<usize>> = hood.iter().copied().combinations(m - 1).collect();
        let first = BigRational::new(BigInt::from(hood.len()), total.clone());
        let weight = &first / BigRational::from_integer(BigInt::from(subsets.len()));
        receive[l] += &first;
        for subset in &subsets {
            for &v in subset {
                receive[v] += &weight;
            }
        }
    }
    Ok(receive)
}

/// Per-vertex receive probability for one sequential-preferential step,
/// enumerating every ordered sequence of `m` distinct endpoints.
pub fn sequential_attachment_probability_exact(
    state: &GraphState,
    m: usize,
    bound: usize,
) -> Result<Vec<BigRational>> {
    check_enumerable(state, bound)?;
    let degrees: Vec<usize> = state.degrees().collect();
    let positive = degrees.iter().filter(|&&k| k > 0).count();
    if m == 0 || m > positive {
        return Err(Error::config(
            "m",
            format!("1 <= m <= {positive} required for the sequential scheme (got m={m})"),
        ));
    }
    let mut receive = vec![BigRational::zero(); degrees.len()];
    let mut chosen = vec![false; degrees.len()];
    sequential_walk(
        &degrees,
        m,
        state.total_degree(),
        BigRational::one(),
        &mut chosen,
        &mut receive,
    );
    Ok(receive)
}

fn sequential_walk(
    degrees: &[usize],
    remaining: usize,
    free_weight: usize,
    prob: BigRational,
    chosen: &mut [bool],
    receive: &mut [BigRational],
) {
    if remaining == 0 {
        for (v, &c) in chosen.iter().enumerate() {
            if c {
                receive[v] += &prob;
            }
        }
        return;
    }
    for v in 0..degrees.len() {
        if chosen[v] || degrees[v] == 0 {
            continue;
        }
        let p = &prob * BigRational::new(BigInt::from(degrees[v]), BigInt::from(free_weight));
        chosen[v] = true;
        sequential_walk(degrees, remaining - 1, free_weight - degrees[v], p, chosen, receive);
        chosen[v] = false;
    }
}
