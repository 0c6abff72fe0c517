//! Exact checks for the properties a spanner run is expected to have.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{k_hop_neighborhood, mst_weight, segments_properly_cross, Adjacency, EdgeList, UnitBallGraph};
use crate::metric::{packing_bound, NodeId, PointSet};
use crate::protocols::{OwnedRegistry, ProtocolKind, ProtocolRun};
use crate::spanner::{ReplacementRegistry, Spanner};

/// Slack allowed on stretch ratios.
pub const STRETCH_TOLERANCE: f64 = 1e-9;

/// Largest instance accepted by [`check_stretch_all_pairs`].
pub const ALL_PAIRS_LIMIT: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StretchCheck {
    /// Max over unit ball graph edges of `dist_S(u, v) / |uv|`; infinite
    /// when some edge's endpoints are disconnected in the spanner.
    pub max_ratio: f64,
    pub worst_edge: Option<(NodeId, NodeId)>,
    pub pass: bool,
}

fn ratio(d_s: f64, d_g: f64) -> f64 {
    if d_g > 0.0 {
        d_s / d_g
    } else if d_s == 0.0 {
        1.0
    } else {
        f64::INFINITY
    }
}

/// Edge-wise stretch of `s` against `g`, one Dijkstra per node.
pub fn check_stretch(g: &UnitBallGraph, s: &Spanner, bound: f64) -> StretchCheck {
    let adj = Adjacency::from_edges(g.len(), &s.edges);
    let per_node: Vec<(f64, Option<(NodeId, NodeId)>)> = (0..g.len())
        .into_par_iter()
        .map(|u| {
            let mut best = (1.0f64, None);
            if g.neighbors(u).iter().all(|&(v, _)| v < u) {
                return (f64::NEG_INFINITY, None);
            }
            let dist = adj.dijkstra(u);
            for &(v, w) in g.neighbors(u) {
                if v > u {
                    let r = ratio(dist[v], w);
                    if r > best.0 || best.1.is_none() {
                        best = (r, Some((u, v)));
                    }
                }
            }
            best
        })
        .collect();
    let (max_ratio, worst_edge) = per_node.into_iter().filter(|p| p.1.is_some()).fold((1.0, None), |acc, p| {
        if p.0 > acc.0 || acc.1.is_none() {
            p
        } else {
            acc
        }
    });
    StretchCheck { max_ratio, worst_edge, pass: max_ratio <= bound + STRETCH_TOLERANCE }
}

/// Max over all pairs connected in `g` of `dist_S / dist_G`. Only for
/// instances of at most [`ALL_PAIRS_LIMIT`] points.
pub fn check_stretch_all_pairs(g: &UnitBallGraph, s: &Spanner) -> Result<f64> {
    if g.len() > ALL_PAIRS_LIMIT {
        return Err(Error::InvalidParameter(format!(
            "all-pairs stretch is limited to {ALL_PAIRS_LIMIT} points, got {}",
            g.len()
        )));
    }
    let gs = g.adjacency();
    let hs = Adjacency::from_edges(g.len(), &s.edges);
    let worst = (0..g.len())
        .into_par_iter()
        .map(|u| {
            let dg = gs.dijkstra(u);
            let dh = hs.dijkstra(u);
            (u + 1..g.len()).filter(|&v| dg[v].is_finite()).map(|v| ratio(dh[v], dg[v])).fold(1.0f64, f64::max)
        })
        .reduce(|| 1.0, f64::max);
    Ok(worst)
}

/// `w(s)` over the weight of a minimum spanning forest of `g`.
pub fn lightness(g: &UnitBallGraph, s: &Spanner) -> Result<f64> {
    let mst = mst_weight(g);
    let w = s.weight();
    if mst > 0.0 {
        Ok(w / mst)
    } else if s.edges.is_empty() {
        Ok(1.0)
    } else {
        Err(Error::InvalidParameter(
            "lightness undefined: spanning forest has zero weight but the spanner has edges".into(),
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeReport {
    pub max_degree: usize,
    /// `histogram[k]` is the number of nodes of degree `k`.
    pub histogram: Vec<usize>,
}

pub fn degree_report(s: &Spanner) -> DegreeReport {
    let degrees = s.edges.degrees(s.n);
    let max_degree = degrees.iter().copied().max().unwrap_or(0);
    let mut histogram = vec![0; max_degree + 1];
    for d in degrees {
        histogram[d] += 1;
    }
    DegreeReport { max_degree, histogram }
}

/// Each node has at most `packing_bound(1, eps', d)` registry partners, and
/// any two partners of the same node are more than `eps'` apart.
pub fn replacement_packing_check(registry: &ReplacementRegistry, ps: &PointSet, eps_prime: f64, d: u32) -> bool {
    let Ok(limit) = packing_bound(1.0, eps_prime, d) else {
        return false;
    };
    let mut nodes: Vec<NodeId> = registry.pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
    nodes.sort_unstable();
    nodes.dedup();
    nodes.into_iter().all(|x| {
        let partners: Vec<NodeId> = registry.partners(x).collect();
        if partners.len() as u64 > limit {
            return false;
        }
        partners.iter().enumerate().all(|(i, &y)| partners[i + 1..].iter().all(|&z| ps.dist(y, z) > eps_prime))
    })
}

/// Every target lies within `r` of some center.
pub fn covering_check(ps: &PointSet, centers: &[NodeId], targets: &[NodeId], r: f64) -> bool {
    targets.iter().all(|&t| centers.iter().any(|&c| ps.dist(c, t) <= r))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingReport {
    pub total: usize,
    /// `total / n`.
    pub per_node: f64,
    /// Max over edges `e` of the number of strictly longer edges crossing `e`.
    pub max_longer_crossings_per_edge: usize,
}

/// Counts proper crossings between spanner edges. Planar points only.
pub fn crossing_report(ps: &PointSet, s: &Spanner) -> Result<CrossingReport> {
    if ps.dimension() != 2 {
        return Err(Error::Unsupported(format!("crossings need planar points, got dimension {}", ps.dimension())));
    }
    let edges = s.edges.edges();
    let rows: Vec<(usize, usize)> = (0..edges.len())
        .into_par_iter()
        .map(|i| {
            let e = &edges[i];
            let (a, b) = (ps.point(e.u), ps.point(e.v));
            let mut later = 0;
            let mut longer = 0;
            for (j, f) in edges.iter().enumerate() {
                if i == j || !segments_properly_cross(a, b, ps.point(f.u), ps.point(f.v)) {
                    continue;
                }
                if j > i {
                    later += 1;
                }
                if f.w > e.w {
                    longer += 1;
                }
            }
            (later, longer)
        })
        .collect();
    let total: usize = rows.iter().map(|r| r.0).sum();
    Ok(CrossingReport {
        total,
        per_node: if ps.is_empty() { 0.0 } else { total as f64 / ps.len() as f64 },
        max_longer_crossings_per_edge: rows.iter().map(|r| r.1).max().unwrap_or(0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    MaxDegree,
    Size,
    Weight,
}

/// `greedy_value / alg_value`.
pub fn efficiency(measure: Measure, greedy_value: f64, alg_value: f64) -> Result<f64> {
    if !(alg_value > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "efficiency of {measure:?} needs a positive denominator, got {alg_value}"
        )));
    }
    Ok(greedy_value / alg_value)
}

mod inf_as_string {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str("inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) if t == "inf" => Ok(f64::INFINITY),
            Repr::Text(t) => Err(serde::de::Error::custom(format!("expected a number or \"inf\", got {t:?}"))),
        }
    }
}

/// Summary of all checks for one spanner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    #[serde(with = "inf_as_string")]
    pub max_edge_stretch: f64,
    pub lightness: f64,
    pub max_degree: usize,
    pub total_crossings: usize,
    pub crossings_per_node: f64,
    pub covering_ok: bool,
    pub replacement_bound_ok: bool,
}

impl Report {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// Builds a report. `covering_ok` comes from the caller since only it knows
/// which covers the construction relied on.
pub fn build_report(g: &UnitBallGraph, s: &Spanner, covering_ok: bool, registries: &[OwnedRegistry]) -> Result<Report> {
    let ps = g.points();
    let crossings = crossing_report(ps, s)?;
    let d = ps.doubling_dim_hint();
    Ok(Report {
        max_edge_stretch: check_stretch(g, s, s.stretch_target).max_ratio,
        lightness: lightness(g, s)?,
        max_degree: degree_report(s).max_degree,
        total_crossings: crossings.total,
        crossings_per_node: crossings.per_node,
        covering_ok,
        replacement_bound_ok: registries.iter().all(|r| replacement_packing_check(&r.registry, ps, r.eps / 36.0, d)),
    })
}

/// Checks the covers a protocol run relied on: MIS domination for the LOCAL
/// protocols; for CONGEST, both covers of every center's 2-hop ball and
/// their size bounds.
pub fn run_covering_ok(g: &UnitBallGraph, run: &ProtocolRun) -> bool {
    let ps = g.points();
    let all: Vec<NodeId> = (0..g.len()).collect();
    match run.protocol {
        ProtocolKind::Local | ProtocolKind::Euclid => covering_check(ps, &run.mis.members, &all, 1.0),
        ProtocolKind::Congest => {
            let d = ps.doubling_dim_hint();
            let eps = run.param;
            let (Ok(coarse_max), Ok(fine_max)) = (packing_bound(2.0, 0.25, d), packing_bound(2.0, eps / 40.0, d))
            else {
                return false;
            };
            run.centers.len() == run.mis.members.len()
                && run.centers.iter().all(|c| {
                    let ball = k_hop_neighborhood(g, c.center, 2);
                    covering_check(ps, &c.cover, &ball, 0.5)
                        && covering_check(ps, &c.fine_cover, &ball, eps / 20.0)
                        && c.cover.len() as u64 <= coarse_max
                        && c.fine_cover.len() as u64 <= fine_max
                })
        }
    }
}

/// Report for a protocol run.
pub fn run_report(g: &UnitBallGraph, run: &ProtocolRun) -> Result<Report> {
    build_report(g, &run.spanner, run_covering_ok(g, run), &run.registries)
}

/// Edges of `s` not present in `g`.
pub fn non_ubg_edges(g: &UnitBallGraph, s: &EdgeList) -> Vec<(NodeId, NodeId)> {
    s.edges().iter().filter(|e| !g.is_edge(e.u, e.v)).map(|e| e.key()).collect()
}
