//! Distributed node programs: MIS, the LOCAL spanner (general and
//! Euclidean), and the CONGEST spanner.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EdgeList, UnitBallGraph};
use crate::metric::{Euclidean, Metric, NodeId, Point, PointSet};
use crate::netsim::{self, EngineConfig, Kind, Message, Model, NodeCtx, NodeProgram, RoundTrace, Word};
use crate::spanner::{ReplacementRegistry, Spanner};

mod congest;
mod local;

pub use congest::{
    congest_spanner, offline_congest_spanner, span_long_edges, span_short_edges, CenterContext, CongestCenter,
    CongestSchedule, LongEdges, ShortEdges,
};
pub use local::{distributed_euclidean_spanner, distributed_spanner, offline_local_spanner, LocalAlgo};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolKind {
    /// General LOCAL spanner (centralized spanner on each 2-hop ball).
    Local,
    /// CONGEST spanner (short and long edge phases).
    Congest,
    /// LOCAL spanner with the truncated Euclidean greedy per ball.
    Euclid,
}

impl ProtocolKind {
    pub fn name(self) -> &'static str {
        match self {
            ProtocolKind::Local => "local",
            ProtocolKind::Congest => "congest",
            ProtocolKind::Euclid => "euclid",
        }
    }

    pub fn model(self) -> Model {
        match self {
            ProtocolKind::Congest => Model::Congest,
            _ => Model::Local,
        }
    }
}

impl std::str::FromStr for ProtocolKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "local" => Ok(ProtocolKind::Local),
            "congest" => Ok(ProtocolKind::Congest),
            "euclid" => Ok(ProtocolKind::Euclid),
            other => {
                Err(Error::InvalidParameter(format!("unknown protocol `{other}` (expected local, congest or euclid)")))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MisResult {
    pub members: Vec<NodeId>,
    pub rounds: u64,
}

/// Edges computed by one node for its neighborhood.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalSpannerShare {
    pub owner: NodeId,
    pub edges: EdgeList,
}

/// A replacement registry produced by `owner` while running the
/// centralized spanner with parameter `eps`.
#[derive(Debug, Clone, PartialEq)]
pub struct OwnedRegistry {
    pub owner: NodeId,
    pub eps: f64,
    pub registry: ReplacementRegistry,
}

/// Everything a protocol run produced.
#[derive(Debug, Clone)]
pub struct ProtocolRun {
    pub protocol: ProtocolKind,
    pub param: f64,
    pub spanner: Spanner,
    pub mis: MisResult,
    /// MIS rounds followed by the protocol's own rounds.
    pub trace: RoundTrace,
    /// One share per computing node (centers for LOCAL; selected cover
    /// members and centers for CONGEST).
    pub shares: Vec<LocalSpannerShare>,
    /// Replacement registries, in global ids, per computing node.
    pub registries: Vec<OwnedRegistry>,
    /// Per-center covering artifacts (CONGEST only).
    pub centers: Vec<CongestCenter>,
}

impl ProtocolRun {
    pub fn summary(&self) -> ProtocolSummary {
        ProtocolSummary {
            protocol: self.protocol,
            n: self.spanner.n,
            param: self.param,
            rounds: self.trace.rounds_elapsed,
            mis_rounds: self.mis.rounds,
            active_rounds: self.trace.active_rounds(),
            max_words: self.trace.max_words(),
        }
    }
}

/// JSON summary written next to the spanner and trace CSVs. `param` is
/// epsilon for `local`/`congest` and t for `euclid`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolSummary {
    pub protocol: ProtocolKind,
    pub n: usize,
    pub param: f64,
    pub rounds: u64,
    pub mis_rounds: u64,
    pub active_rounds: u64,
    pub max_words: usize,
}

/// Greedy maximal `r`-independent subset: points are scanned by ascending
/// id and kept unless an already kept point lies within distance `r`.
pub fn local_mis_greedy(ps: &PointSet, r: f64) -> Vec<NodeId> {
    let pts: Vec<(NodeId, &[f64])> = ps.points().iter().map(|p| (p.id, p.coords.as_slice())).collect();
    greedy_independent(&pts, r)
}

pub(crate) fn greedy_independent(points: &[(NodeId, &[f64])], r: f64) -> Vec<NodeId> {
    let mut order: Vec<&(NodeId, &[f64])> = points.iter().collect();
    order.sort_by_key(|p| p.0);
    let mut chosen: Vec<&(NodeId, &[f64])> = Vec::new();
    for p in order {
        if chosen.iter().all(|c| Euclidean.dist(c.1, p.1) > r) {
            chosen.push(p);
        }
    }
    chosen.iter().map(|c| c.0).collect()
}

/// Builds a point set from `(global id, coords)` pairs sorted by id, and
/// returns it with the local-to-global id map.
/// Coordinates by node id.
pub(crate) type PointMap = BTreeMap<NodeId, Vec<f64>>;

pub(crate) fn local_point_set(points: &BTreeMap<NodeId, Vec<f64>>) -> (PointSet, Vec<NodeId>) {
    let ids: Vec<NodeId> = points.keys().copied().collect();
    let pts = points.values().enumerate().map(|(i, c)| Point::new(i, c.clone())).collect();
    let ps = PointSet::new(pts).expect("local ids are dense by construction");
    (ps, ids)
}

const PRIO: Kind = Kind::Data(100);
const JOIN: Kind = Kind::Signal(100);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum MisState {
    Undecided,
    In,
    Out,
}

/// Luby-style randomized MIS. Odd rounds deliver priorities (which also
/// carry the sender's coordinates), even rounds deliver join notices.
pub(crate) struct MisNode {
    state: MisState,
    prio: u64,
    pub(crate) neighbor_coords: BTreeMap<NodeId, Vec<f64>>,
}

impl MisNode {
    pub(crate) fn new() -> Self {
        Self { state: MisState::Undecided, prio: 0, neighbor_coords: BTreeMap::new() }
    }

    pub(crate) fn in_mis(&self) -> bool {
        self.state == MisState::In
    }

    fn draw(&mut self, ctx: &mut NodeCtx<'_>) {
        self.prio = ctx.rng.gen();
        let payload = vec![Word::Value(self.prio), Word::Coord(ctx.coords.to_vec())];
        for i in 0..ctx.neighbors.len() {
            let v = ctx.neighbors[i];
            ctx.send(v, PRIO, payload.clone(), 2);
        }
    }
}

impl NodeProgram for MisNode {
    fn init(&mut self, ctx: &mut NodeCtx<'_>) {
        self.draw(ctx);
    }

    fn on_round(&mut self, ctx: &mut NodeCtx<'_>, inbox: &[Message]) {
        if ctx.round % 2 == 1 {
            let mut best = true;
            for m in inbox.iter().filter(|m| m.kind == PRIO) {
                if let Some(c) = m.payload.get(1).and_then(Word::coord) {
                    self.neighbor_coords.entry(m.src).or_insert_with(|| c.to_vec());
                }
                let theirs = m.payload.first().and_then(Word::value).unwrap_or(0);
                if (theirs, m.src) > (self.prio, ctx.id) {
                    best = false;
                }
            }
            if best {
                self.state = MisState::In;
                for i in 0..ctx.neighbors.len() {
                    let v = ctx.neighbors[i];
                    ctx.send(v, JOIN, vec![Word::Id(ctx.id)], 1);
                }
            }
        } else if inbox.iter().any(|m| m.kind == JOIN) {
            self.state = MisState::Out;
        } else {
            self.draw(ctx);
        }
    }

    fn is_halted(&self) -> bool {
        self.state != MisState::Undecided
    }

    fn next_wakeup(&self, now: u64) -> Option<u64> {
        (self.state == MisState::Undecided).then_some(now + 1)
    }
}

/// Runs the MIS; returns the result, what each node learned about its
/// neighbors' coordinates, and the trace.
pub(crate) fn run_mis(g: &UnitBallGraph, seed: u64, model: Model) -> Result<(MisResult, Vec<PointMap>, RoundTrace)> {
    let cfg = EngineConfig::new(model, seed).with_round_limit(100_000);
    let out = netsim::run(g, |_| MisNode::new(), cfg)?;
    let members = out.nodes.iter().enumerate().filter(|(_, n)| n.in_mis()).map(|(i, _)| i).collect();
    let rounds = out.trace.rounds_elapsed;
    let coords = out.nodes.into_iter().map(|n| n.neighbor_coords).collect();
    Ok((MisResult { members, rounds }, coords, out.trace))
}

/// Randomized distributed MIS of `g` on the round engine.
pub fn distributed_mis(g: &UnitBallGraph, seed: u64) -> Result<MisResult> {
    run_mis(g, seed, Model::Local).map(|(m, _, _)| m)
}
