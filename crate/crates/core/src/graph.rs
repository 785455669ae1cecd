//! Configuration-model multigraphs built by uniform half-edge pairing.
//!
//! Half-edges are numbered vertex-major: vertex `v` owns the half-edges
//! `offsets[v]..offsets[v + 1]`, so the adjacency index and the half-edge
//! table coincide. Self-loops and parallel edges are kept.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use thiserror::Error;

use crate::distributions::binomial;
use crate::weights::WeightLaw;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("degree sequence is empty")]
    Empty,
    #[error("too many half-edges ({0}); at most 2^32 - 2 are supported")]
    TooLarge(u64),
    #[error("vertex {vertex} out of range for {n} vertices")]
    VertexOutOfRange { vertex: u64, n: usize },
    #[error("probability {0} outside [0, 1]")]
    BadProbability(f64),
}

/// One end of an edge as seen from a vertex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    pub to: u32,
    pub edge: u32,
    pub weight: f64,
}

/// Neighbourhood access shared by materialized and lazily paired graphs.
pub trait Adjacency {
    fn vertex_count(&self) -> usize;
    fn degree(&self, v: u32) -> u64;
    /// Calls `f` once per half-edge of `v` (a self-loop shows up twice).
    fn visit(&mut self, v: u32, f: &mut dyn FnMut(Arc));
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiGraph {
    offsets: Vec<u32>,
    owner: Vec<u32>,
    partner: Vec<u32>,
    edge_of: Vec<u32>,
    /// `(u, v)` per edge id; `u` owns the lower-numbered half-edge.
    edges: Vec<(u32, u32)>,
    weights: Vec<f64>,
    parity_fixed: bool,
}

fn offsets_for(degrees: impl ExactSizeIterator<Item = u64>) -> Result<Vec<u32>, GraphError> {
    let mut offsets = Vec::with_capacity(degrees.len() + 1);
    let mut total: u64 = 0;
    offsets.push(0);
    for d in degrees {
        total = total.saturating_add(d);
        if total > u32::MAX as u64 - 1 {
            return Err(GraphError::TooLarge(total));
        }
        offsets.push(total as u32);
    }
    Ok(offsets)
}

impl MultiGraph {
    /// Uniform configuration model on `degrees`. If the degree sum is odd the
    /// last vertex receives one extra half-edge.
    pub fn build_cm<R: Rng + ?Sized>(degrees: &[u64], rng: &mut R) -> Result<Self, GraphError> {
        if degrees.is_empty() {
            return Err(GraphError::Empty);
        }
        let total: u64 = degrees.iter().fold(0u64, |a, d| a.saturating_add(*d));
        let parity_fixed = total % 2 == 1;
        let last = degrees.len() - 1;
        let offsets = offsets_for(
            degrees
                .iter()
                .enumerate()
                .map(|(i, d)| if parity_fixed && i == last { d + 1 } else { *d }),
        )?;
        let len = *offsets.last().unwrap() as usize;

        // Pool of unpaired half-edges with a position index; removal swaps
        // with the end.
        let mut pool: Vec<u32> = (0..len as u32).collect();
        let mut pos: Vec<u32> = (0..len as u32).collect();
        let mut partner = vec![u32::MAX; len];
        let mut edge_of = vec![0u32; len];
        let remove = |pool: &mut Vec<u32>, pos: &mut Vec<u32>, h: u32| {
            let i = pos[h as usize] as usize;
            let end = *pool.last().unwrap();
            pool[i] = end;
            pos[end as usize] = i as u32;
            pool.pop();
        };
        let mut edge = 0u32;
        for h in 0..len as u32 {
            if partner[h as usize] != u32::MAX {
                continue;
            }
            remove(&mut pool, &mut pos, h);
            let g = pool[rng.random_range(0..pool.len())];
            remove(&mut pool, &mut pos, g);
            partner[h as usize] = g;
            partner[g as usize] = h;
            edge_of[h as usize] = edge;
            edge_of[g as usize] = edge;
            edge += 1;
        }
        Ok(Self::from_pairing(offsets, partner, edge_of, parity_fixed))
    }

    /// Explicit multigraph on `n` vertices; edge `i` of the input gets id `i`.
    pub fn from_edges(n: usize, edges: &[(u32, u32, f64)]) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::Empty);
        }
        let mut degree = vec![0u64; n];
        for &(u, v, _) in edges {
            for x in [u, v] {
                if x as usize >= n {
                    return Err(GraphError::VertexOutOfRange { vertex: x as u64, n });
                }
            }
            degree[u as usize] += 1;
            degree[v as usize] += 1;
        }
        let offsets = offsets_for(degree.iter().copied())?;
        let len = *offsets.last().unwrap() as usize;
        let mut cursor: Vec<u32> = offsets[..n].to_vec();
        let mut partner = vec![0u32; len];
        let mut edge_of = vec![0u32; len];
        let mut ends = Vec::with_capacity(edges.len());
        for (i, &(u, v, _)) in edges.iter().enumerate() {
            let hu = cursor[u as usize];
            cursor[u as usize] += 1;
            let hv = cursor[v as usize];
            cursor[v as usize] += 1;
            partner[hu as usize] = hv;
            partner[hv as usize] = hu;
            edge_of[hu as usize] = i as u32;
            edge_of[hv as usize] = i as u32;
            ends.push((u, v));
        }
        let mut g = Self::from_pairing(offsets, partner, edge_of, false);
        g.edges = ends;
        g.weights = edges.iter().map(|e| e.2).collect();
        Ok(g)
    }

    fn from_pairing(offsets: Vec<u32>, partner: Vec<u32>, edge_of: Vec<u32>, parity_fixed: bool) -> Self {
        let n = offsets.len() - 1;
        let len = partner.len();
        let mut owner = vec![0u32; len];
        for v in 0..n {
            for h in offsets[v]..offsets[v + 1] {
                owner[h as usize] = v as u32;
            }
        }
        let mut edges = vec![(0u32, 0u32); len / 2];
        for h in 0..len {
            let g = partner[h] as usize;
            if h < g {
                edges[edge_of[h] as usize] = (owner[h], owner[g]);
            }
        }
        Self { offsets, owner, partner, edge_of, weights: vec![1.0; len / 2], edges, parity_fixed }
    }

    /// One i.i.d. draw per edge, in edge-id order.
    pub fn assign_weights<R: Rng + ?Sized>(&mut self, law: &WeightLaw, rng: &mut R) {
        for w in &mut self.weights {
            *w = law.sample(rng);
        }
    }

    pub fn with_weights<R: Rng + ?Sized>(mut self, law: &WeightLaw, rng: &mut R) -> Self {
        self.assign_weights(law, rng);
        self
    }

    pub fn vertex_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn half_edge_count(&self) -> usize {
        self.partner.len()
    }

    pub fn degree(&self, v: u32) -> u64 {
        (self.offsets[v as usize + 1] - self.offsets[v as usize]) as u64
    }

    /// Degrees after the parity fix.
    pub fn degrees(&self) -> Vec<u64> {
        self.offsets.windows(2).map(|w| (w[1] - w[0]) as u64).collect()
    }

    pub fn parity_fixed(&self) -> bool {
        self.parity_fixed
    }

    pub fn partner(&self, h: u32) -> u32 {
        self.partner[h as usize]
    }

    pub fn owner(&self, h: u32) -> u32 {
        self.owner[h as usize]
    }

    pub fn edge(&self, e: u32) -> (u32, u32, f64) {
        let (u, v) = self.edges[e as usize];
        (u, v, self.weights[e as usize])
    }

    pub fn weight(&self, e: u32) -> f64 {
        self.weights[e as usize]
    }

    pub fn edges(&self) -> impl Iterator<Item = (u32, u32, u32, f64)> + '_ {
        self.edges
            .iter()
            .zip(&self.weights)
            .enumerate()
            .map(|(i, (&(u, v), &w))| (i as u32, u, v, w))
    }

    pub fn arcs(&self, v: u32) -> impl Iterator<Item = Arc> + '_ {
        let range = self.offsets[v as usize]..self.offsets[v as usize + 1];
        range.map(move |h| {
            let e = self.edge_of[h as usize];
            Arc {
                to: self.owner[self.partner[h as usize] as usize],
                edge: e,
                weight: self.weights[e as usize],
            }
        })
    }

    pub fn check_vertex(&self, v: u64) -> Result<u32, GraphError> {
        if (v as usize) < self.vertex_count() {
            Ok(v as u32)
        } else {
            Err(GraphError::VertexOutOfRange { vertex: v, n: self.vertex_count() })
        }
    }

    /// Keeps each edge independently with probability `p`, on the same
    /// vertex set. Weights travel with their edges; edge ids are renumbered.
    pub fn bond_percolate<R: Rng + ?Sized>(&self, p: f64, rng: &mut R) -> Result<Self, GraphError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(GraphError::BadProbability(p));
        }
        let kept: Vec<(u32, u32, f64)> = self
            .edges()
            .filter(|_| rng.random::<f64>() < p)
            .map(|(_, u, v, w)| (u, v, w))
            .collect();
        Self::from_edges(self.vertex_count(), &kept)
    }

    /// Exact connected components by union-find.
    pub fn components(&self) -> ComponentLabeling {
        let n = self.vertex_count();
        let mut uf = UnionFind::new(n);
        for &(u, v) in &self.edges {
            uf.union(u, v);
        }
        let mut label = vec![u32::MAX; n];
        let mut root_label = vec![u32::MAX; n];
        let mut count = 0u32;
        for v in 0..n as u32 {
            let r = uf.find(v) as usize;
            if root_label[r] == u32::MAX {
                root_label[r] = count;
                count += 1;
            }
            label[v as usize] = root_label[r];
        }
        ComponentLabeling::from_labels(label, count as usize, |v| self.degree(v))
    }

    /// Components by breadth-first search; labels agree with `components`.
    pub fn components_bfs(&self) -> ComponentLabeling {
        let n = self.vertex_count();
        let mut label = vec![u32::MAX; n];
        let mut count = 0u32;
        let mut queue = VecDeque::new();
        for s in 0..n as u32 {
            if label[s as usize] != u32::MAX {
                continue;
            }
            label[s as usize] = count;
            queue.push_back(s);
            while let Some(x) = queue.pop_front() {
                for a in self.arcs(x) {
                    if label[a.to as usize] == u32::MAX {
                        label[a.to as usize] = count;
                        queue.push_back(a.to);
                    }
                }
            }
            count += 1;
        }
        ComponentLabeling::from_labels(label, count as usize, |v| self.degree(v))
    }
}

impl Adjacency for &MultiGraph {
    fn vertex_count(&self) -> usize {
        MultiGraph::vertex_count(self)
    }

    fn degree(&self, v: u32) -> u64 {
        MultiGraph::degree(self, v)
    }

    fn visit(&mut self, v: u32, f: &mut dyn FnMut(Arc)) {
        for a in self.arcs(v) {
            f(a);
        }
    }
}

struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n as u32).collect(), size: vec![1; n] }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let p = self.parent[x as usize];
            self.parent[x as usize] = self.parent[p as usize];
            x = p;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        if self.size[a as usize] < self.size[b as usize] {
            core::mem::swap(&mut a, &mut b);
        }
        self.parent[b as usize] = a;
        self.size[a as usize] += self.size[b as usize];
    }
}

/// Component labels numbered by smallest member vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentLabeling {
    pub labels: Vec<u32>,
    /// Size per label.
    pub label_sizes: Vec<u64>,
    /// All component sizes, descending.
    pub sizes: Vec<u64>,
    /// Label of the largest component (lowest label among ties).
    pub giant: u32,
    /// `giant_degree_counts[k]`: vertices of degree `k` in the largest component.
    pub giant_degree_counts: Vec<u64>,
}

impl ComponentLabeling {
    fn from_labels(labels: Vec<u32>, count: usize, degree: impl Fn(u32) -> u64) -> Self {
        let mut label_sizes = vec![0u64; count];
        for &l in &labels {
            label_sizes[l as usize] += 1;
        }
        let mut giant = 0u32;
        for (l, &s) in label_sizes.iter().enumerate() {
            if s > label_sizes[giant as usize] {
                giant = l as u32;
            }
        }
        let mut sizes = label_sizes.clone();
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        let mut me = Self { labels, label_sizes, sizes, giant, giant_degree_counts: Vec::new() };
        me.giant_degree_counts = me.giant_counts_by(|v| degree(v));
        me
    }

    pub fn giant_size(&self) -> u64 {
        self.sizes.first().copied().unwrap_or(0)
    }

    pub fn giant_fraction(&self) -> f64 {
        self.giant_size() as f64 / self.labels.len() as f64
    }

    pub fn in_giant(&self, v: u32) -> bool {
        self.labels[v as usize] == self.giant
    }

    /// Histogram of `key(v)` over vertices of the largest component.
    pub fn giant_counts_by(&self, key: impl Fn(u32) -> u64) -> Vec<u64> {
        let mut counts = Vec::new();
        for (v, &l) in self.labels.iter().enumerate() {
            if l == self.giant {
                let k = key(v as u32) as usize;
                if counts.len() <= k {
                    counts.resize(k + 1, 0);
                }
                counts[k] += 1;
            }
        }
        counts
    }
}

/// Result of thinning every half-edge independently.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThinnedDegrees {
    pub degrees: Vec<u64>,
    /// Removed half-edges; each becomes a degree-1 appendix vertex.
    pub appendix: u64,
}

/// Keeps every half-edge of every vertex independently with probability `√p`.
pub fn half_edge_percolate<R: Rng + ?Sized>(
    degrees: &[u64],
    p: f64,
    rng: &mut R,
) -> Result<ThinnedDegrees, GraphError> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(GraphError::BadProbability(p));
    }
    let r = libm::sqrt(p);
    let mut appendix = 0;
    let degrees = degrees
        .iter()
        .map(|&d| {
            let k = binomial(d, r, rng);
            appendix += d - k;
            k
        })
        .collect();
    Ok(ThinnedDegrees { degrees, appendix })
}

/// Percolated graph obtained by pairing the thinned half-edges together with
/// one half-edge per appendix vertex, then discarding the appendix vertices.
#[derive(Debug, Clone)]
pub struct Rebuilt {
    pub graph: MultiGraph,
    /// Edges that touched an appendix vertex and were dropped.
    pub dropped_edges: u64,
    pub appendix_vertices: u64,
}

pub fn rebuild_percolated<R: Rng + ?Sized>(
    thinned: &ThinnedDegrees,
    rng: &mut R,
) -> Result<Rebuilt, GraphError> {
    let n = thinned.degrees.len();
    let mut all = thinned.degrees.clone();
    all.resize(n + thinned.appendix as usize, 1);
    let full = MultiGraph::build_cm(&all, rng)?;
    let mut kept = Vec::with_capacity(full.edge_count());
    let mut dropped = 0;
    for (_, u, v, w) in full.edges() {
        if (u as usize) < n && (v as usize) < n {
            kept.push((u, v, w));
        } else {
            dropped += 1;
        }
    }
    Ok(Rebuilt {
        graph: MultiGraph::from_edges(n, &kept)?,
        dropped_edges: dropped,
        appendix_vertices: thinned.appendix,
    })
}

/// Configuration model whose half-edges are paired only when an exploration
/// first looks at them. Each new edge draws its weight at pairing time.
///
/// Pairing an arbitrary unpaired half-edge with a uniform other unpaired one
/// yields the same uniform matching as the eager build, whatever order the
/// half-edges are visited in.
#[derive(Debug, Clone)]
pub struct LazyCm<R> {
    offsets: Vec<u32>,
    partner: BTreeMap<u32, (u32, u32)>,
    weights: Vec<f64>,
    law: WeightLaw,
    rng: R,
}

impl<R: Rng> LazyCm<R> {
    pub fn new(degrees: &[u64], law: WeightLaw, rng: R) -> Result<Self, GraphError> {
        if degrees.is_empty() {
            return Err(GraphError::Empty);
        }
        let total: u64 = degrees.iter().sum();
        let last = degrees.len() - 1;
        let offsets = offsets_for(
            degrees
                .iter()
                .enumerate()
                .map(|(i, d)| if total % 2 == 1 && i == last { d + 1 } else { *d }),
        )?;
        Ok(Self { offsets, partner: BTreeMap::new(), weights: Vec::new(), law, rng })
    }

    fn half_edges(&self) -> u32 {
        *self.offsets.last().unwrap()
    }

    fn owner(&self, h: u32) -> u32 {
        (self.offsets.partition_point(|&o| o <= h) - 1) as u32
    }

    pub fn paired_edges(&self) -> usize {
        self.weights.len()
    }

    /// Partner half-edge, edge id and weight for `h`, pairing it if needed.
    fn pair(&mut self, h: u32) -> (u32, u32) {
        if let Some(&p) = self.partner.get(&h) {
            return p;
        }
        let len = self.half_edges();
        let unpaired = len as usize - self.partner.len();
        let g = if unpaired * 4 >= len as usize {
            loop {
                let g = self.rng.random_range(0..len);
                if g != h && !self.partner.contains_key(&g) {
                    break g;
                }
            }
        } else {
            let free: Vec<u32> = (0..len).filter(|g| *g != h && !self.partner.contains_key(g)).collect();
            free[self.rng.random_range(0..free.len())]
        };
        let e = self.weights.len() as u32;
        let w = self.law.sample(&mut self.rng);
        self.weights.push(w);
        self.partner.insert(h, (g, e));
        self.partner.insert(g, (h, e));
        (g, e)
    }
}

impl<R: Rng> Adjacency for LazyCm<R> {
    fn vertex_count(&self) -> usize {
        self.offsets.len() - 1
    }

    fn degree(&self, v: u32) -> u64 {
        (self.offsets[v as usize + 1] - self.offsets[v as usize]) as u64
    }

    fn visit(&mut self, v: u32, f: &mut dyn FnMut(Arc)) {
        for h in self.offsets[v as usize]..self.offsets[v as usize + 1] {
            let (g, e) = self.pair(h);
            f(Arc { to: self.owner(g), edge: e, weight: self.weights[e as usize] });
        }
    }
}
