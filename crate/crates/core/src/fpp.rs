//! First-passage percolation: shortest-weight graph growth, passage times,
//! hopcounts, graph distances and metric balls.
//!
//! Keys are compared lexicographically as `(weight, hops, vertex)`, so ties in
//! weight (null events for continuous laws) go to fewer hops, then to the
//! lower vertex index.

use alloc::collections::{BTreeMap, BTreeSet, BinaryHeap};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::graph::{Adjacency, MultiGraph};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stop {
    /// Settle this many vertices beyond the source.
    Vertices(usize),
    /// Settle every vertex with passage time at most `t`.
    Time(f64),
    /// Settle up to and including this vertex.
    Target(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Growth {
    Reached,
    /// The component of the source ran out before the stop condition.
    Exhausted,
}

/// One settled vertex of a shortest-weight graph.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settlement {
    pub vertex: u32,
    pub via_edge: Option<u32>,
    pub parent: Option<u32>,
    /// Weight of `via_edge` (0 for the source).
    pub edge_weight: f64,
    /// Passage time from the source.
    pub time: f64,
    pub hops: u32,
    /// `degree - 1`; the source records its full degree.
    pub forward_degree: u64,
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    time: f64,
    hops: u32,
    vertex: u32,
    parent: u32,
    edge: u32,
    weight: f64,
}

impl Entry {
    fn key_cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.hops.cmp(&other.hops))
            .then(self.vertex.cmp(&other.vertex))
            .then(self.edge.cmp(&other.edge))
    }
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.key_cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other.key_cmp(self)
    }
}

/// Resumable Dijkstra exploration from one source.
#[derive(Debug, Clone)]
pub struct SwgTrace {
    source: u32,
    records: Vec<Settlement>,
    settled: BTreeMap<u32, usize>,
    frontier: BinaryHeap<Entry>,
    exhausted: bool,
}

impl SwgTrace {
    /// A trace holding only the settled source.
    pub fn new<A: Adjacency + ?Sized>(adj: &mut A, source: u32) -> Self {
        let mut trace = Self {
            source,
            records: Vec::new(),
            settled: BTreeMap::new(),
            frontier: BinaryHeap::new(),
            exhausted: false,
        };
        trace.settle(
            adj,
            Entry { time: 0.0, hops: 0, vertex: source, parent: u32::MAX, edge: u32::MAX, weight: 0.0 },
        );
        trace
    }

    fn settle<A: Adjacency + ?Sized>(&mut self, adj: &mut A, e: Entry) {
        let degree = adj.degree(e.vertex);
        let is_source = e.parent == u32::MAX;
        self.settled.insert(e.vertex, self.records.len());
        self.records.push(Settlement {
            vertex: e.vertex,
            via_edge: (!is_source).then_some(e.edge),
            parent: (!is_source).then_some(e.parent),
            edge_weight: e.weight,
            time: e.time,
            hops: e.hops,
            forward_degree: if is_source { degree } else { degree - 1 },
        });
        let settled = &self.settled;
        let frontier = &mut self.frontier;
        adj.visit(e.vertex, &mut |a| {
            if !settled.contains_key(&a.to) {
                frontier.push(Entry {
                    time: e.time + a.weight,
                    hops: e.hops + 1,
                    vertex: a.to,
                    parent: e.vertex,
                    edge: a.edge,
                    weight: a.weight,
                });
            }
        });
    }

    fn pop_unsettled(&mut self) -> Option<Entry> {
        while let Some(top) = self.frontier.peek() {
            if self.settled.contains_key(&top.vertex) {
                self.frontier.pop();
            } else {
                return Some(*top);
            }
        }
        None
    }

    /// Continues the exploration until `stop` holds or the component is used up.
    pub fn grow<A: Adjacency + ?Sized>(&mut self, adj: &mut A, stop: Stop) -> Growth {
        loop {
            let done = match stop {
                Stop::Vertices(m) => self.records.len() > m,
                Stop::Target(v) => self.settled.contains_key(&v),
                Stop::Time(_) => false,
            };
            if done {
                return Growth::Reached;
            }
            let Some(next) = self.pop_unsettled() else {
                self.exhausted = true;
                return Growth::Exhausted;
            };
            if let Stop::Time(t) = stop {
                if next.time > t {
                    return Growth::Reached;
                }
            }
            self.frontier.pop();
            self.settle(adj, next);
        }
    }

    pub fn source(&self) -> u32 {
        self.source
    }

    pub fn records(&self) -> &[Settlement] {
        &self.records
    }

    /// Settled vertices beyond the source.
    pub fn settled_count(&self) -> usize {
        self.records.len() - 1
    }

    pub fn exhausted(&self) -> bool {
        self.exhausted
    }

    pub fn contains(&self, v: u32) -> bool {
        self.settled.contains_key(&v)
    }

    pub fn time_of(&self, v: u32) -> Option<f64> {
        self.settled.get(&v).map(|&i| self.records[i].time)
    }

    pub fn vertices(&self) -> BTreeSet<u32> {
        self.settled.keys().copied().collect()
    }

    /// Forward degrees `B̃_1, B̃_2, …` of the settled non-source vertices.
    pub fn forward_degrees(&self) -> Vec<u64> {
        self.records[1..].iter().map(|r| r.forward_degree).collect()
    }

    /// Passage time of the last settled vertex.
    pub fn time(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.time)
    }
}

/// `{v : W(u, v) ≤ t}`.
pub fn ball<A: Adjacency + ?Sized>(adj: &mut A, u: u32, t: f64) -> BTreeSet<u32> {
    let mut trace = SwgTrace::new(adj, u);
    trace.grow(adj, Stop::Time(t));
    trace.vertices()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Overlap {
    pub shared: usize,
    pub disjoint: bool,
}

pub fn swg_disjointness(a: &SwgTrace, b: &SwgTrace) -> Overlap {
    let (small, large) = if a.settled.len() <= b.settled.len() { (a, b) } else { (b, a) };
    let shared = small.settled.keys().filter(|v| large.contains(**v)).count();
    Overlap { shared, disjoint: shared == 0 }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathResult {
    pub found: bool,
    /// Passage time; `f64::INFINITY` if not found.
    pub weight: f64,
    pub hops: u32,
    /// Vertices from `u` to `v`.
    pub vertices: Vec<u32>,
    pub edges: Vec<u32>,
}

impl PathResult {
    fn not_found() -> Self {
        Self { found: false, weight: f64::INFINITY, hops: u32::MAX, vertices: Vec::new(), edges: Vec::new() }
    }
}

type Key = (f64, u32);

fn key_cmp(a: Key, b: Key) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

fn key_add(a: Key, b: Key) -> Key {
    (a.0 + b.0, a.1 + b.1)
}

#[derive(Debug, Clone, Default)]
struct Side {
    seen: Vec<u32>,
    done: Vec<u32>,
    key: Vec<Key>,
    parent: Vec<(u32, u32)>,
    heap: BinaryHeap<Entry>,
    frontier: Vec<u32>,
}

impl Side {
    fn resize(&mut self, n: usize) {
        if self.seen.len() != n {
            self.seen = vec![0; n];
            self.done = vec![0; n];
            self.key = vec![(0.0, 0); n];
            self.parent = vec![(u32::MAX, u32::MAX); n];
        }
        self.heap.clear();
        self.frontier.clear();
    }

    fn top(&mut self, stamp: u32) -> Option<Key> {
        while let Some(e) = self.heap.peek() {
            if self.done[e.vertex as usize] == stamp {
                self.heap.pop();
            } else {
                return Some((e.time, e.hops));
            }
        }
        None
    }

    fn label(&mut self, stamp: u32, v: u32, key: Key, parent: (u32, u32)) {
        self.seen[v as usize] = stamp;
        self.key[v as usize] = key;
        self.parent[v as usize] = parent;
    }

    /// Vertices and edges from the side's root to `v`, root first.
    fn chain(&self, mut v: u32) -> (Vec<u32>, Vec<u32>) {
        let mut vs = vec![v];
        let mut es = Vec::new();
        while self.parent[v as usize].0 != u32::MAX {
            let (p, e) = self.parent[v as usize];
            es.push(e);
            vs.push(p);
            v = p;
        }
        vs.reverse();
        es.reverse();
        (vs, es)
    }
}

/// Reusable buffers for repeated point-to-point queries on one graph.
#[derive(Debug, Clone, Default)]
pub struct PathWorkspace {
    stamp: u32,
    sides: [Side; 2],
}

impl PathWorkspace {
    pub fn new() -> Self {
        Self::default()
    }

    fn reset(&mut self, n: usize) {
        if self.stamp == u32::MAX || self.sides[0].seen.len() != n {
            self.stamp = 0;
            for s in &mut self.sides {
                s.seen.clear();
                s.resize(n);
            }
        }
        for s in &mut self.sides {
            s.resize(n);
        }
        self.stamp += 1;
    }

    /// Exact `W(u, v)` and `H(u, v)` by bidirectional Dijkstra.
    ///
    /// The reported weight is summed along the path starting from the
    /// endpoint with the smaller index, so `W(u, v) == W(v, u)` bit for bit.
    pub fn shortest_path(&mut self, g: &MultiGraph, u: u32, v: u32) -> PathResult {
        if u == v {
            return PathResult { found: true, weight: 0.0, hops: 0, vertices: vec![u], edges: Vec::new() };
        }
        self.reset(g.vertex_count());
        let stamp = self.stamp;
        for (s, root) in [(0usize, u), (1, v)] {
            let side = &mut self.sides[s];
            side.label(stamp, root, (0.0, 0), (u32::MAX, u32::MAX));
            side.heap.push(Entry { time: 0.0, hops: 0, vertex: root, parent: u32::MAX, edge: u32::MAX, weight: 0.0 });
        }
        // (key, forward vertex, backward vertex, edge)
        let mut best: Option<(Key, u32, u32, u32)> = None;
        loop {
            let (Some(ta), Some(tb)) = (self.sides[0].top(stamp), self.sides[1].top(stamp)) else {
                break;
            };
            if let Some((bk, ..)) = best {
                if key_cmp(key_add(ta, tb), bk) != Ordering::Less {
                    break;
                }
            }
            let s = if key_cmp(ta, tb) == Ordering::Greater { 1 } else { 0 };
            let [a, b] = &mut self.sides;
            let (this, other) = if s == 0 { (a, b) } else { (b, a) };
            let e = this.heap.pop().unwrap();
            let x = e.vertex;
            this.done[x as usize] = stamp;
            let kx = this.key[x as usize];
            for arc in g.arcs(x) {
                let y = arc.to;
                if y == x {
                    continue;
                }
                let ky = key_add(kx, (arc.weight, 1));
                if this.done[y as usize] != stamp
                    && (this.seen[y as usize] != stamp || key_cmp(ky, this.key[y as usize]) == Ordering::Less)
                {
                    this.label(stamp, y, ky, (x, arc.edge));
                    this.heap.push(Entry { time: ky.0, hops: ky.1, vertex: y, parent: x, edge: arc.edge, weight: arc.weight });
                }
                if other.seen[y as usize] == stamp {
                    let cand = key_add(ky, other.key[y as usize]);
                    if best.is_none_or(|(bk, ..)| key_cmp(cand, bk) == Ordering::Less) {
                        let (f, bw) = if s == 0 { (x, y) } else { (y, x) };
                        best = Some((cand, f, bw, arc.edge));
                    }
                }
            }
        }
        let Some((_, f, bw, edge)) = best else {
            return PathResult::not_found();
        };
        let (mut vertices, mut edges) = self.sides[0].chain(f);
        let (bv, be) = self.sides[1].chain(bw);
        edges.push(edge);
        vertices.extend(bv.iter().rev());
        edges.extend(be.iter().rev());
        let weight = if u <= v {
            edges.iter().fold(0.0, |acc, &e| acc + g.weight(e))
        } else {
            edges.iter().rev().fold(0.0, |acc, &e| acc + g.weight(e))
        };
        PathResult { found: true, weight, hops: edges.len() as u32, vertices, edges }
    }

    /// Graph distance by bidirectional breadth-first search.
    pub fn graph_distance(&mut self, g: &MultiGraph, u: u32, v: u32) -> Option<u32> {
        if u == v {
            return Some(0);
        }
        self.reset(g.vertex_count());
        let stamp = self.stamp;
        let mut depth = [0u32; 2];
        for (s, root) in [(0usize, u), (1, v)] {
            let side = &mut self.sides[s];
            side.label(stamp, root, (0.0, 0), (u32::MAX, u32::MAX));
            side.frontier.push(root);
        }
        loop {
            let [a, b] = &mut self.sides;
            if a.frontier.is_empty() || b.frontier.is_empty() {
                return None;
            }
            let s = if a.frontier.len() <= b.frontier.len() { 0 } else { 1 };
            let (this, other) = if s == 0 { (a, b) } else { (b, a) };
            let current = core::mem::take(&mut this.frontier);
            let mut next = Vec::new();
            let mut best: Option<u32> = None;
            for &x in &current {
                for arc in g.arcs(x) {
                    let y = arc.to;
                    if other.seen[y as usize] == stamp {
                        let d = depth[s] + 1 + other.key[y as usize].1;
                        best = Some(best.map_or(d, |b| b.min(d)));
                    }
                    if this.seen[y as usize] != stamp {
                        this.label(stamp, y, (0.0, depth[s] + 1), (x, arc.edge));
                        next.push(y);
                    }
                }
            }
            if best.is_some() {
                return best;
            }
            this.frontier = next;
            depth[s] += 1;
        }
    }
}

pub fn shortest_path(g: &MultiGraph, u: u32, v: u32) -> PathResult {
    PathWorkspace::new().shortest_path(g, u, v)
}

pub fn graph_distance(g: &MultiGraph, u: u32, v: u32) -> Option<u32> {
    PathWorkspace::new().graph_distance(g, u, v)
}
