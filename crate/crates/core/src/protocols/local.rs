//! LOCAL-model spanner: after the MIS every center learns its 2-hop
//! neighborhood, builds a spanner of it, and ships each edge to both
//! endpoints (through a relay when the endpoint is two hops away).

use std::collections::{BTreeMap, BTreeSet};

use super::{local_point_set, run_mis, LocalSpannerShare, OwnedRegistry, ProtocolKind, ProtocolRun};
use crate::error::{Error, Result};
use crate::graph::{build_ubg, k_hop_neighborhood, Edge, EdgeList, UnitBallGraph};
use crate::metric::{Euclidean, Metric, NodeId};
use crate::netsim::{self, point_words, read_points, EngineConfig, Kind, Message, Model, NodeCtx, NodeProgram, Word};
use crate::spanner::{
    centralized_euclidean_spanner, centralized_spanner_on, centralized_spanner_with, euclidean_spanner_on,
    NaiveGreedyBase, ReplacementRegistry, Spanner,
};

/// What a center runs on its 2-hop ball.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LocalAlgo {
    Centralized { eps: f64 },
    Euclidean { t: f64 },
}

impl LocalAlgo {
    fn stretch(self) -> f64 {
        match self {
            LocalAlgo::Centralized { eps } => 1.0 + eps,
            LocalAlgo::Euclidean { t } => t,
        }
    }

    /// Runs on the points given as `(global id, coords)`; output in global ids.
    pub(crate) fn compute(
        self,
        points: &BTreeMap<NodeId, Vec<f64>>,
    ) -> Result<(EdgeList, Option<ReplacementRegistry>)> {
        let (ps, ids) = local_point_set(points);
        let g = build_ubg(&ps, 1.0)?;
        match self {
            LocalAlgo::Centralized { eps } => {
                let (s, reg) = centralized_spanner_with(&g, eps, &NaiveGreedyBase)?;
                Ok((s.edges.relabel(&ids), Some(reg.relabel(&ids))))
            }
            LocalAlgo::Euclidean { t } => Ok((centralized_euclidean_spanner(&g, t)?.edges.relabel(&ids), None)),
        }
    }

    fn validate(self) -> Result<()> {
        match self {
            LocalAlgo::Centralized { eps } if !(eps > 0.0 && eps <= 1.0) => {
                Err(Error::InvalidParameter(format!("eps must lie in (0, 1], got {eps}")))
            }
            LocalAlgo::Euclidean { t } if !(t > 1.0 && t.is_finite()) => {
                Err(Error::InvalidParameter(format!("stretch must be > 1, got {t}")))
            }
            _ => Ok(()),
        }
    }
}

const NEIGHBORHOOD: Kind = Kind::Data(1);
const ROUTED_EDGES: Kind = Kind::Data(2);
const EDGES: Kind = Kind::Data(3);

fn edge_record(target: Option<NodeId>, e: &Edge, known: &BTreeMap<NodeId, Vec<f64>>) -> Vec<Word> {
    let mut rec = Vec::with_capacity(5);
    if let Some(t) = target {
        rec.push(Word::Id(t));
    }
    rec.extend([Word::Id(e.u), Word::Id(e.v), Word::Coord(known[&e.u].clone()), Word::Coord(known[&e.v].clone())]);
    rec
}

fn decode_edge(rec: &[Word]) -> Option<Edge> {
    let a = rec.first()?.id()?;
    let b = rec.get(1)?.id()?;
    let ca = rec.get(2)?.coord()?;
    let cb = rec.get(3)?.coord()?;
    Some(Edge::new(a, b, Euclidean.dist(ca, cb)))
}

struct LocalNode {
    algo: LocalAlgo,
    center: bool,
    n1: BTreeMap<NodeId, Vec<f64>>,
    weights: BTreeMap<(NodeId, NodeId), f64>,
    share: Option<LocalSpannerShare>,
    registry: Option<ReplacementRegistry>,
    error: Option<String>,
    halted: bool,
}

impl LocalNode {
    fn store(&mut self, e: Edge) {
        self.weights.insert(e.key(), e.w);
    }

    fn run_center(&mut self, ctx: &mut NodeCtx<'_>, inbox: &[Message]) {
        let mut known: BTreeMap<NodeId, Vec<f64>> = self.n1.clone();
        known.insert(ctx.id, ctx.coords.to_vec());
        let mut reports: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();
        for m in inbox.iter().filter(|m| m.kind == NEIGHBORHOOD) {
            for (id, c) in read_points(m) {
                reports.entry(m.src).or_default().insert(id);
                known.entry(id).or_insert(c);
            }
        }
        let (edges, registry) = match self.algo.compute(&known) {
            Ok(r) => r,
            Err(e) => {
                self.error = Some(e.to_string());
                return;
            }
        };
        let mut routed: BTreeMap<NodeId, Vec<Word>> = BTreeMap::new();
        let mut direct: BTreeMap<NodeId, Vec<Word>> = BTreeMap::new();
        for e in edges.edges() {
            for p in [e.u, e.v] {
                if p == ctx.id {
                    self.store(*e);
                } else if self.n1.contains_key(&p) {
                    direct.entry(p).or_default().extend(edge_record(None, e, &known));
                } else {
                    let relay = reports
                        .iter()
                        .find(|(_, ids)| ids.contains(&p))
                        .map(|(&x, _)| x)
                        .expect("every 2-hop node was reported by some neighbor");
                    routed.entry(relay).or_default().extend(edge_record(Some(p), e, &known));
                }
            }
        }
        for (dst, words) in direct {
            ctx.send(dst, EDGES, words, 4);
        }
        for (dst, words) in routed {
            ctx.send(dst, ROUTED_EDGES, words, 5);
        }
        self.share = Some(LocalSpannerShare { owner: ctx.id, edges });
        self.registry = registry;
    }
}

impl NodeProgram for LocalNode {
    fn init(&mut self, ctx: &mut NodeCtx<'_>) {
        let words = point_words(self.n1.iter().map(|(&id, c)| (id, c.as_slice())));
        for i in 0..ctx.neighbors.len() {
            let v = ctx.neighbors[i];
            ctx.send(v, NEIGHBORHOOD, words.clone(), 2);
        }
    }

    fn on_round(&mut self, ctx: &mut NodeCtx<'_>, inbox: &[Message]) {
        match ctx.round {
            1 => {
                if self.center {
                    self.run_center(ctx, inbox);
                }
            }
            2 => {
                let mut forward: BTreeMap<NodeId, Vec<Word>> = BTreeMap::new();
                for m in inbox {
                    for rec in m.records() {
                        if m.kind == EDGES {
                            if let Some(e) = decode_edge(rec) {
                                self.store(e);
                            }
                        } else if m.kind == ROUTED_EDGES {
                            let target = rec[0].id().unwrap_or(usize::MAX);
                            if target == ctx.id {
                                if let Some(e) = decode_edge(&rec[1..]) {
                                    self.store(e);
                                }
                            } else {
                                forward.entry(target).or_default().extend(rec[1..].iter().cloned());
                            }
                        }
                    }
                }
                for (dst, words) in forward {
                    ctx.send(dst, EDGES, words, 4);
                }
            }
            _ => {
                for m in inbox.iter().filter(|m| m.kind == EDGES) {
                    for rec in m.records() {
                        if let Some(e) = decode_edge(rec) {
                            self.store(e);
                        }
                    }
                }
                self.halted = true;
            }
        }
    }

    fn is_halted(&self) -> bool {
        self.halted
    }

    fn next_wakeup(&self, now: u64) -> Option<u64> {
        (!self.halted && now < 3).then_some(now + 1)
    }
}

fn run_local(g: &UnitBallGraph, algo: LocalAlgo, seed: u64, protocol: ProtocolKind, param: f64) -> Result<ProtocolRun> {
    algo.validate()?;
    let (mis, coords, mut trace) = run_mis(g, seed, Model::Local)?;
    let mut is_center = vec![false; g.len()];
    for &m in &mis.members {
        is_center[m] = true;
    }
    let mut coords = coords.into_iter();
    let cfg = EngineConfig::new(Model::Local, seed).with_round_limit(3);
    let out = netsim::run(
        g,
        |id| LocalNode {
            algo,
            center: is_center[id],
            n1: coords.next().unwrap_or_default(),
            weights: BTreeMap::new(),
            share: None,
            registry: None,
            error: None,
            halted: false,
        },
        cfg,
    )?;
    trace.append(&out.trace);
    if let Some(e) = out.nodes.iter().find_map(|n| n.error.clone()) {
        return Err(Error::InvalidParameter(e));
    }
    let mut weights = BTreeMap::new();
    let mut shares = Vec::new();
    let mut registries = Vec::new();
    for (id, node) in out.nodes.into_iter().enumerate() {
        weights.extend(node.weights);
        if let Some(s) = node.share {
            shares.push(s);
        }
        if let (Some(registry), LocalAlgo::Centralized { eps }) = (node.registry, algo) {
            registries.push(OwnedRegistry { owner: id, eps, registry });
        }
    }
    let edges = EdgeList::from_edges(weights.into_iter().map(|((a, b), w)| Edge::new(a, b, w)));
    Ok(ProtocolRun {
        protocol,
        param,
        spanner: Spanner::new(g.len(), edges, algo.stretch()),
        mis,
        trace,
        shares,
        registries,
        centers: Vec::new(),
    })
}

/// LOCAL spanner: each MIS center runs the centralized spanner on its
/// 2-hop ball. Takes the MIS rounds plus 3.
pub fn distributed_spanner(g: &UnitBallGraph, eps: f64, seed: u64) -> Result<ProtocolRun> {
    run_local(g, LocalAlgo::Centralized { eps }, seed, ProtocolKind::Local, eps)
}

/// LOCAL spanner with the truncated Euclidean greedy on each 2-hop ball.
pub fn distributed_euclidean_spanner(g: &UnitBallGraph, t: f64, seed: u64) -> Result<ProtocolRun> {
    run_local(g, LocalAlgo::Euclidean { t }, seed, ProtocolKind::Euclid, t)
}

/// Reference result without message passing: the union over `centers` of
/// the spanners of their 2-hop balls.
pub fn offline_local_spanner(g: &UnitBallGraph, centers: &[NodeId], algo: LocalAlgo) -> Result<EdgeList> {
    algo.validate()?;
    let mut out = EdgeList::new();
    for &w in centers {
        let ids = k_hop_neighborhood(g, w, 2);
        let edges = match algo {
            LocalAlgo::Centralized { eps } => centralized_spanner_on(g.points(), &ids, eps)?.0,
            LocalAlgo::Euclidean { t } => euclidean_spanner_on(g.points(), &ids, t)?,
        };
        out = out.union(&edges);
    }
    Ok(out)
}
