//! Centralized constructions: the naive greedy spanner, its truncated
//! Euclidean variant, and the replacement-edge refinement that turns a
//! spanner of the complete graph into a spanner of the unit ball graph.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{build_ubg, weight_order, Adjacency, BoundedDijkstra, Edge, EdgeList, UnitBallGraph};
use crate::metric::{packing_bound, NodeId, PointSet};

/// An edge set over the nodes `0..n` of some point set, together with the
/// stretch it was built to achieve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spanner {
    pub n: usize,
    pub edges: EdgeList,
    pub stretch_target: f64,
}

impl Spanner {
    pub fn new(n: usize, edges: EdgeList, stretch_target: f64) -> Self {
        Self { n, edges, stretch_target }
    }

    pub fn weight(&self) -> f64 {
        self.edges.total_weight()
    }

    pub fn max_degree(&self) -> usize {
        self.edges.degrees(self.n).into_iter().max().unwrap_or(0)
    }

    /// The one-line metadata record written next to the edge CSV.
    pub fn metadata(&self) -> SpannerMeta {
        SpannerMeta { n: self.n, t: self.stretch_target, w_total: self.weight(), max_degree: self.max_degree() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpannerMeta {
    pub n: usize,
    pub t: f64,
    pub w_total: f64,
    pub max_degree: usize,
}

/// Replacement pairs `(x, y)` added by [`refine`], in insertion order. The
/// first component is the end near the removed edge's lower-id endpoint.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReplacementRegistry {
    pub pairs: Vec<(NodeId, NodeId)>,
}

impl ReplacementRegistry {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Partners of `x` across all pairs.
    pub fn partners(&self, x: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.pairs.iter().filter_map(move |&(a, b)| {
            if a == x {
                Some(b)
            } else if b == x {
                Some(a)
            } else {
                None
            }
        })
    }

    /// Maps local ids through `ids` (see [`PointSet::subset`]).
    pub fn relabel(&self, ids: &[NodeId]) -> ReplacementRegistry {
        ReplacementRegistry { pairs: self.pairs.iter().map(|&(a, b)| (ids[a], ids[b])).collect() }
    }
}

fn check_stretch_param(t: f64) -> Result<()> {
    if !(t > 1.0) || !t.is_finite() {
        return Err(Error::InvalidParameter(format!("stretch must be > 1, got {t}")));
    }
    Ok(())
}

/// Greedy over the given candidate pairs, which must already be in
/// processing order.
fn greedy_over(n: usize, t: f64, candidates: impl IntoIterator<Item = Edge>) -> EdgeList {
    let mut adj = Adjacency::new(n);
    let mut search = BoundedDijkstra::new(n);
    let mut kept = Vec::new();
    for e in candidates {
        let cutoff = t * e.w;
        if search.query(&adj, e.u, e.v, cutoff) > cutoff {
            adj.add(e.u, e.v, e.w);
            kept.push(e);
        }
    }
    EdgeList::from_edges(kept)
}

fn all_pairs_sorted(ps: &PointSet) -> Vec<Edge> {
    let n = ps.len();
    let mut pairs = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for u in 0..n {
        for v in (u + 1)..n {
            pairs.push(Edge::new(u, v, ps.dist(u, v)));
        }
    }
    pairs.sort_by(weight_order);
    pairs
}

/// The greedy t-spanner of the complete graph on `ps`: pairs in ascending
/// distance (ties by id pair) get an edge unless the edges kept so far
/// already connect them within `t` times their distance.
pub fn naive_greedy(ps: &PointSet, t: f64) -> Result<Spanner> {
    check_stretch_param(t)?;
    let edges = greedy_over(ps.len(), t, all_pairs_sorted(ps));
    Ok(Spanner::new(ps.len(), edges, t))
}

/// Greedy restricted to pairs at distance at most 1, i.e. the naive greedy
/// stopped at the first pair longer than a unit.
pub fn centralized_euclidean_spanner(g: &UnitBallGraph, t: f64) -> Result<Spanner> {
    check_stretch_param(t)?;
    let mut pairs = g.edge_list().edges().to_vec();
    pairs.retain(|e| e.w <= 1.0);
    pairs.sort_by(weight_order);
    let edges = greedy_over(g.len(), t, pairs);
    Ok(Spanner::new(g.len(), edges, t))
}

/// A light spanner of the complete graph on a point set, used as the first
/// stage of [`centralized_spanner`].
pub trait BaseSpanner {
    fn build(&self, ps: &PointSet, eps_prime: f64) -> Result<Spanner>;
}

/// Default base: `naive_greedy(ps, 1 + eps')`.
#[derive(Debug, Clone, Copy, Default)]
pub struct NaiveGreedyBase;

impl BaseSpanner for NaiveGreedyBase {
    fn build(&self, ps: &PointSet, eps_prime: f64) -> Result<Spanner> {
        if !(eps_prime > 0.0) {
            return Err(Error::InvalidParameter(format!("eps' must be positive, got {eps_prime}")));
        }
        naive_greedy(ps, 1.0 + eps_prime)
    }
}

/// A `(1 + eps')`-spanner of the complete graph on `ps`.
pub fn base_spanner(ps: &PointSet, eps_prime: f64) -> Result<Spanner> {
    NaiveGreedyBase.build(ps, eps_prime)
}

/// Replaces every edge of `s` longer than 1 by a unit-ball-graph edge.
///
/// Edges are visited in ascending weight over a snapshot of `s`. Edges
/// longer than 1 are removed; those with weight in `(1, 1 + eps']` get a
/// replacement `(x, y)` with `|ux| <= eps'` and `|vy| <= eps'` unless the
/// registry already holds a pair within `2 eps'` of both ends (in either
/// orientation). Among valid replacements the lexicographically smallest
/// `(x, y)` is taken.
pub fn refine(s: &Spanner, g: &UnitBallGraph, eps_prime: f64) -> Result<(Spanner, ReplacementRegistry)> {
    if !(eps_prime > 0.0 && eps_prime <= 1.0 / 36.0 + 1e-15) {
        return Err(Error::InvalidParameter(format!("eps' must lie in (0, 1/36], got {eps_prime}")));
    }
    if s.n != g.len() {
        return Err(Error::InvalidParameter(format!(
            "spanner on {} nodes does not match graph on {} nodes",
            s.n,
            g.len()
        )));
    }
    let ps = g.points();
    let mut snapshot = s.edges.edges().to_vec();
    snapshot.sort_by(weight_order);

    let mut out = s.edges.clone();
    let mut registry = ReplacementRegistry::default();
    let near = |c: NodeId, r: f64| -> Vec<NodeId> { (0..ps.len()).filter(|&p| ps.dist(c, p) <= r).collect() };

    for e in snapshot {
        if e.w <= 1.0 {
            continue;
        }
        out.remove(e.u, e.v);
        if e.w > 1.0 + eps_prime {
            continue;
        }
        let (u, v) = (e.u, e.v);
        let candidate = near(u, eps_prime)
            .into_iter()
            .find_map(|x| near(v, eps_prime).into_iter().find(|&y| x != y && g.is_edge(x, y)).map(|y| (x, y)));
        let Some((x, y)) = candidate else { continue };
        let two = 2.0 * eps_prime;
        let weak_exists = registry.pairs.iter().any(|&(a, b)| {
            (ps.dist(u, a) <= two && ps.dist(v, b) <= two) || (ps.dist(u, b) <= two && ps.dist(v, a) <= two)
        });
        if !weak_exists {
            out.insert(Edge::new(x, y, ps.dist(x, y)));
            registry.pairs.push((x, y));
        }
    }
    Ok((Spanner::new(s.n, out, s.stretch_target), registry))
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidParameter(format!("eps must lie in (0, 1], got {eps}")));
    }
    Ok(())
}

/// `(1 + eps)`-spanner of `g` contained in `g`: a `(1 + eps/36)` base
/// spanner followed by [`refine`].
pub fn centralized_spanner(g: &UnitBallGraph, eps: f64) -> Result<Spanner> {
    centralized_spanner_with(g, eps, &NaiveGreedyBase).map(|(s, _)| s)
}

/// [`centralized_spanner`] with an explicit base, also returning the
/// replacement registry.
pub fn centralized_spanner_with(
    g: &UnitBallGraph,
    eps: f64,
    base: &dyn BaseSpanner,
) -> Result<(Spanner, ReplacementRegistry)> {
    check_eps(eps)?;
    let eps_prime = eps / 36.0;
    let s = base.build(g.points(), eps_prime)?;
    let (mut refined, registry) = refine(&s, g, eps_prime)?;
    refined.stretch_target = 1.0 + eps;
    Ok((refined, registry))
}

/// Runs [`centralized_spanner_with`] on the unit ball graph induced by
/// `ids`, returning edges and registry in global ids.
pub fn centralized_spanner_on(ps: &PointSet, ids: &[NodeId], eps: f64) -> Result<(EdgeList, ReplacementRegistry)> {
    let local = ps.subset(ids);
    let g = build_ubg(&local, 1.0)?;
    let (s, reg) = centralized_spanner_with(&g, eps, &NaiveGreedyBase)?;
    Ok((s.edges.relabel(ids), reg.relabel(ids)))
}

/// Truncated Euclidean greedy on the unit ball graph induced by `ids`, in
/// global ids.
pub fn euclidean_spanner_on(ps: &PointSet, ids: &[NodeId], t: f64) -> Result<EdgeList> {
    let local = ps.subset(ids);
    let g = build_ubg(&local, 1.0)?;
    Ok(centralized_euclidean_spanner(&g, t)?.edges.relabel(ids))
}

/// Upper bound on the degree of the greedy `t`-spanner of any Euclidean
/// point set of the given dimension.
///
/// In the plane, two greedy edges `(a,b)`, `(a,c)` at angle at most theta
/// with `cos(theta) - sin(theta) >= 1/t` cannot both exist, so each of `k`
/// cones of angle `2 pi / k` holds at most one edge.
pub fn greedy_degree_bound(t: f64, dimension: usize) -> Result<u64> {
    check_stretch_param(t)?;
    match dimension {
        1 => Ok(2),
        2 => {
            let target = 1.0 / t;
            let mut k: u64 = 7;
            loop {
                let theta = std::f64::consts::TAU / k as f64;
                if theta.cos() - theta.sin() > target * (1.0 + 1e-12) {
                    return Ok(k);
                }
                k += 1;
            }
        }
        d => Err(Error::Unsupported(format!("greedy degree bound for dimension {d}"))),
    }
}

/// Degree bound for [`centralized_spanner`] output: greedy edges of the
/// `(1 + eps/36)` base plus at most `packing_bound(1, eps/36, d)`
/// replacement partners.
pub fn centralized_degree_bound(eps: f64, dimension: usize, d: u32) -> Result<u64> {
    check_eps(eps)?;
    let eps_prime = eps / 36.0;
    Ok(greedy_degree_bound(1.0 + eps_prime, dimension)? + packing_bound(1.0, eps_prime, d)?)
}
