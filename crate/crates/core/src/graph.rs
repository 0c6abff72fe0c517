//! Unit ball graphs, edge lists and the classical subroutines the
//! constructions and oracles rely on.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};
use std::io::{Read, Write};

use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{format_coord, NodeId, Point, PointSet};

/// An undirected weighted edge, stored with `u < v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: NodeId,
    pub v: NodeId,
    pub w: f64,
}

impl Edge {
    pub fn new(a: NodeId, b: NodeId, w: f64) -> Self {
        let (u, v) = if a < b { (a, b) } else { (b, a) };
        Self { u, v, w }
    }

    pub fn key(&self) -> (NodeId, NodeId) {
        (self.u, self.v)
    }
}

/// Orders by weight, ties broken by the `(min id, max id)` pair.
pub(crate) fn weight_order(a: &Edge, b: &Edge) -> std::cmp::Ordering {
    a.w.total_cmp(&b.w).then_with(|| a.key().cmp(&b.key()))
}

/// A duplicate-free edge set kept sorted by `(u, v)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EdgeList {
    edges: Vec<Edge>,
}

impl EdgeList {
    pub fn new() -> Self {
        Self::default()
    }

    /// Normalizes, sorts and de-duplicates (first weight wins). Self-loops
    /// are dropped.
    pub fn from_edges<I: IntoIterator<Item = Edge>>(edges: I) -> Self {
        let mut edges: Vec<Edge> = edges.into_iter().filter(|e| e.u != e.v).map(|e| Edge::new(e.u, e.v, e.w)).collect();
        edges.sort_by_key(|e| e.key());
        edges.dedup_by_key(|e| e.key());
        Self { edges }
    }

    /// Builds from id pairs, weighting each edge by its length in `ps`.
    pub fn from_pairs<I: IntoIterator<Item = (NodeId, NodeId)>>(ps: &PointSet, pairs: I) -> Self {
        Self::from_edges(pairs.into_iter().map(|(a, b)| Edge::new(a, b, ps.dist(a, b))))
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn contains(&self, a: NodeId, b: NodeId) -> bool {
        let key = if a < b { (a, b) } else { (b, a) };
        self.edges.binary_search_by_key(&key, |e| e.key()).is_ok()
    }

    pub fn insert(&mut self, e: Edge) -> bool {
        let e = Edge::new(e.u, e.v, e.w);
        if e.u == e.v {
            return false;
        }
        match self.edges.binary_search_by_key(&e.key(), |x| x.key()) {
            Ok(_) => false,
            Err(pos) => {
                self.edges.insert(pos, e);
                true
            }
        }
    }

    pub fn remove(&mut self, a: NodeId, b: NodeId) -> bool {
        let key = if a < b { (a, b) } else { (b, a) };
        match self.edges.binary_search_by_key(&key, |e| e.key()) {
            Ok(pos) => {
                self.edges.remove(pos);
                true
            }
            Err(_) => false,
        }
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.w).sum()
    }

    /// Union of two edge sets.
    pub fn union(&self, other: &EdgeList) -> EdgeList {
        EdgeList::from_edges(self.edges.iter().chain(other.edges.iter()).copied())
    }

    pub fn is_subset_of(&self, other: &EdgeList) -> bool {
        self.edges.iter().all(|e| other.contains(e.u, e.v))
    }

    /// Degree of every node in `0..n`.
    pub fn degrees(&self, n: usize) -> Vec<usize> {
        let mut deg = vec![0; n];
        for e in &self.edges {
            deg[e.u] += 1;
            deg[e.v] += 1;
        }
        deg
    }

    /// Maps local ids through `ids` (see [`PointSet::subset`]).
    pub fn relabel(&self, ids: &[NodeId]) -> EdgeList {
        EdgeList::from_edges(self.edges.iter().map(|e| Edge::new(ids[e.u], ids[e.v], e.w)))
    }

    /// `u,v,w` CSV, rows sorted by `(u, v)`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["u", "v", "w"])?;
        for e in &self.edges {
            w.write_record([e.u.to_string(), e.v.to_string(), format_coord(e.w)])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        let header = rdr.headers()?.clone();
        if header.iter().collect::<Vec<_>>() != ["u", "v", "w"] {
            return Err(Error::Parse { line: 1, message: "expected header `u,v,w`".into() });
        }
        let mut edges = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| Error::Parse { line, message: e.to_string() })?;
            let field = |k: usize| -> Result<&str> {
                rec.get(k).map(str::trim).ok_or(Error::Parse { line, message: "missing field".into() })
            };
            let parse_err = |m: String| Error::Parse { line, message: m };
            let u: NodeId = field(0)?.parse().map_err(|e| parse_err(format!("bad u: {e}")))?;
            let v: NodeId = field(1)?.parse().map_err(|e| parse_err(format!("bad v: {e}")))?;
            let w: f64 = field(2)?.parse().map_err(|e| parse_err(format!("bad w: {e}")))?;
            if u >= v || !(w > 0.0) {
                return Err(parse_err(format!("edge ({u},{v},{w}) must have u < v and w > 0")));
            }
            edges.push(Edge::new(u, v, w));
        }
        Ok(EdgeList::from_edges(edges))
    }
}

/// Adjacency lists over `0..n` for repeated shortest-path queries.
#[derive(Debug, Clone)]
pub struct Adjacency {
    adj: Vec<Vec<(NodeId, f64)>>,
}

impl Adjacency {
    pub fn new(n: usize) -> Self {
        Self { adj: vec![Vec::new(); n] }
    }

    pub fn from_edges(n: usize, edges: &EdgeList) -> Self {
        let mut a = Self::new(n);
        for e in edges.edges() {
            a.add(e.u, e.v, e.w);
        }
        a
    }

    pub fn add(&mut self, u: NodeId, v: NodeId, w: f64) {
        self.adj[u].push((v, w));
        self.adj[v].push((u, w));
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn neighbors(&self, u: NodeId) -> &[(NodeId, f64)] {
        &self.adj[u]
    }

    /// Single-source distances (`INFINITY` where unreachable).
    pub fn dijkstra(&self, src: NodeId) -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; self.adj.len()];
        let mut heap = BinaryHeap::new();
        dist[src] = 0.0;
        heap.push(Reverse((OrdF64(0.0), src)));
        while let Some(Reverse((OrdF64(d), u))) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            for &(v, w) in &self.adj[u] {
                let nd = d + w;
                if nd < dist[v] {
                    dist[v] = nd;
                    heap.push(Reverse((OrdF64(nd), v)));
                }
            }
        }
        dist
    }
}

/// Dijkstra with an early exit, reusing buffers across queries.
pub(crate) struct BoundedDijkstra {
    dist: Vec<f64>,
    touched: Vec<NodeId>,
    heap: BinaryHeap<Reverse<(OrdF64, NodeId)>>,
}

impl BoundedDijkstra {
    pub(crate) fn new(n: usize) -> Self {
        Self { dist: vec![f64::INFINITY; n], touched: Vec::new(), heap: BinaryHeap::new() }
    }

    /// Shortest distance from `src` to `dst`, or `INFINITY` if it exceeds
    /// `cutoff`.
    pub(crate) fn query(&mut self, adj: &Adjacency, src: NodeId, dst: NodeId, cutoff: f64) -> f64 {
        for &t in &self.touched {
            self.dist[t] = f64::INFINITY;
        }
        self.touched.clear();
        self.heap.clear();
        self.dist[src] = 0.0;
        self.touched.push(src);
        self.heap.push(Reverse((OrdF64(0.0), src)));
        while let Some(Reverse((OrdF64(d), u))) = self.heap.pop() {
            if d > self.dist[u] {
                continue;
            }
            if u == dst {
                return d;
            }
            for &(v, w) in adj.neighbors(u) {
                let nd = d + w;
                if nd <= cutoff && nd < self.dist[v] {
                    if self.dist[v].is_infinite() {
                        self.touched.push(v);
                    }
                    self.dist[v] = nd;
                    self.heap.push(Reverse((OrdF64(nd), v)));
                }
            }
        }
        f64::INFINITY
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct OrdF64(pub f64);

impl Eq for OrdF64 {}

impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Graph on a point set whose edges are exactly the pairs at distance at
/// most `radius`, weighted by distance.
#[derive(Debug, Clone)]
pub struct UnitBallGraph {
    points: PointSet,
    radius: f64,
    adj: Vec<Vec<(NodeId, f64)>>,
}

impl UnitBallGraph {
    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Neighbors of `u` sorted by id, with edge weights.
    pub fn neighbors(&self, u: NodeId) -> &[(NodeId, f64)] {
        &self.adj[u]
    }

    pub fn neighbor_ids(&self, u: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.adj[u].iter().map(|&(v, _)| v)
    }

    pub fn is_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.adj[u].binary_search_by_key(&v, |&(x, _)| x).is_ok()
    }

    pub fn edge_list(&self) -> EdgeList {
        EdgeList::from_edges(
            self.adj
                .iter()
                .enumerate()
                .flat_map(|(u, nb)| nb.iter().filter(move |&&(v, _)| u < v).map(move |&(v, w)| Edge::new(u, v, w))),
        )
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn adjacency(&self) -> Adjacency {
        Adjacency { adj: self.adj.clone() }
    }
}

/// Builds the unit ball graph of `ps` at the given radius (O(n^2)).
pub fn build_ubg(ps: &PointSet, radius: f64) -> Result<UnitBallGraph> {
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter(format!("radius must be positive, got {radius}")));
    }
    let n = ps.len();
    let mut adj = vec![Vec::new(); n];
    for u in 0..n {
        for v in (u + 1)..n {
            let d = ps.dist(u, v);
            if d <= radius {
                adj[u].push((v, d));
                adj[v].push((u, d));
            }
        }
    }
    for nb in &mut adj {
        nb.sort_by_key(|&(v, _)| v);
    }
    Ok(UnitBallGraph { points: ps.clone(), radius, adj })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Threshold {
    /// `G_{<=alpha}`
    AtMost,
    /// `G_{>alpha}`
    Above,
}

/// Edges of `g` with weight `<= alpha` or `> alpha`.
pub fn threshold_subgraph(g: &UnitBallGraph, alpha: f64, mode: Threshold) -> EdgeList {
    let all = g.edge_list();
    EdgeList::from_edges(all.edges().iter().copied().filter(|e| match mode {
        Threshold::AtMost => e.w <= alpha,
        Threshold::Above => e.w > alpha,
    }))
}

/// Exact shortest-path distance between `u` and `v` over `edges` on `n`
/// nodes; `INFINITY` when disconnected.
pub fn shortest_path_distance(edges: &EdgeList, n: usize, u: NodeId, v: NodeId) -> f64 {
    if u == v {
        return 0.0;
    }
    Adjacency::from_edges(n, edges).dijkstra(u)[v]
}

/// Total weight of a minimum spanning forest of `g` (Kruskal).
pub fn mst_weight(g: &UnitBallGraph) -> f64 {
    let mut edges = g.edge_list().edges().to_vec();
    edges.sort_by(weight_order);
    let mut uf = UnionFind::<usize>::new(g.len());
    edges.iter().filter(|e| uf.union(e.u, e.v)).map(|e| e.w).sum()
}

/// All vertices within `k` hops of `w` (including `w`), sorted by id.
pub fn k_hop_neighborhood(g: &UnitBallGraph, w: NodeId, k: usize) -> Vec<NodeId> {
    let mut depth = vec![usize::MAX; g.len()];
    let mut queue = VecDeque::new();
    depth[w] = 0;
    queue.push_back(w);
    while let Some(u) = queue.pop_front() {
        if depth[u] == k {
            continue;
        }
        for v in g.neighbor_ids(u) {
            if depth[v] == usize::MAX {
                depth[v] = depth[u] + 1;
                queue.push_back(v);
            }
        }
    }
    (0..g.len()).filter(|&v| depth[v] != usize::MAX).collect()
}

/// Absolute tolerance on orientation determinants below which three points
/// count as collinear.
pub const ORIENTATION_EPS: f64 = 1e-12;

fn orient(a: &[f64], b: &[f64], c: &[f64]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn same_endpoint(p: &Point, q: &Point) -> bool {
    p.id == q.id || p.coords == q.coords
}

/// True iff the open segments `ab` and `cd` share a point and the four
/// endpoints are distinct. Touching at an endpoint is not a crossing;
/// overlapping collinear segments are.
pub fn segments_properly_cross(a: &Point, b: &Point, c: &Point, d: &Point) -> bool {
    if same_endpoint(a, c) || same_endpoint(a, d) || same_endpoint(b, c) || same_endpoint(b, d) {
        return false;
    }
    let (pa, pb, pc, pd) = (&a.coords[..], &b.coords[..], &c.coords[..], &d.coords[..]);
    let o1 = orient(pa, pb, pc);
    let o2 = orient(pa, pb, pd);
    let o3 = orient(pc, pd, pa);
    let o4 = orient(pc, pd, pb);
    let zero = |o: f64| o.abs() <= ORIENTATION_EPS;
    if zero(o1) && zero(o2) {
        // Collinear: project onto the dominant axis and test open-interval
        // overlap.
        let axis = if (pb[0] - pa[0]).abs() >= (pb[1] - pa[1]).abs() { 0 } else { 1 };
        let (lo1, hi1) = minmax(pa[axis], pb[axis]);
        let (lo2, hi2) = minmax(pc[axis], pd[axis]);
        return lo1.max(lo2) < hi1.min(hi2);
    }
    if zero(o1) || zero(o2) || zero(o3) || zero(o4) {
        return false;
    }
    (o1 > 0.0) != (o2 > 0.0) && (o3 > 0.0) != (o4 > 0.0)
}

fn minmax(a: f64, b: f64) -> (f64, f64) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}
