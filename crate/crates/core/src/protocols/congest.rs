//! CONGEST-model spanner.
//!
//! Every message is a bundle of O(1)-word records, so nodes never see their
//! 2-hop balls. Short edges are covered by spanners of 1-hop balls around a
//! 1/4-separated cover of each center's 2-hop ball; long edges by a
//! spanner on a finer cover plus spanners of small balls around its members.
//!
//! The run follows a fixed schedule of twelve stages. Each stage has a
//! window long enough for its worst-case traffic, so a node that finishes
//! early simply waits; a message arriving after its window closes is an
//! error.

use std::collections::{BTreeMap, BTreeSet};

use super::{
    greedy_independent, run_mis, LocalAlgo, LocalSpannerShare, OwnedRegistry, PointMap, ProtocolKind, ProtocolRun,
};
use crate::error::{Error, NetError, Result};
use crate::graph::{Edge, EdgeList, UnitBallGraph};
use crate::metric::{packing_bound, Euclidean, Metric, NodeId};
use crate::netsim::{self, point_words, read_points, EngineConfig, Kind, Message, Model, NodeCtx, NodeProgram, Word};
use crate::spanner::{centralized_degree_bound, centralized_spanner_on, ReplacementRegistry, Spanner};

pub const STAGES: usize = 12;

const POINT_WORDS: u128 = 2;
const EDGE_WORDS: u128 = 4;
const ROUTED_EDGE_WORDS: u128 = 5;

/// Round windows of the twelve stages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CongestSchedule {
    pub windows: [u64; STAGES],
    ends: [u64; STAGES],
}

impl CongestSchedule {
    /// Windows for parameter `eps` on points of the given Euclidean
    /// dimension and doubling dimension, with `w_max` words per message.
    pub fn new(eps: f64, dimension: usize, d: u32, w_max: usize) -> Result<Self> {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::InvalidParameter(format!("eps must lie in (0, 1], got {eps}")));
        }
        if (w_max as u128) < ROUTED_EDGE_WORDS {
            return Err(Error::InvalidParameter(format!("w_max must be at least {ROUTED_EDGE_WORDS}, got {w_max}")));
        }
        let pb = |big_r: f64, r: f64| packing_bound(big_r, r, d).map(u128::from);
        let deg = centralized_degree_bound(eps, dimension, d)? as u128;
        let deg_fine = centralized_degree_bound(eps / 5.0, dimension, d)? as u128;
        let words: [u128; STAGES] = [
            1,
            POINT_WORDS * pb(1.0, 0.25)?,
            pb(2.0, 0.25)?,
            1,
            EDGE_WORDS * deg,
            1,
            POINT_WORDS * pb(1.0, eps / 40.0)?,
            pb(2.0, eps / 40.0)?,
            1,
            EDGE_WORDS * deg,
            ROUTED_EDGE_WORDS * pb(1.0, eps / 40.0)? * deg_fine,
            EDGE_WORDS * pb(1.0, 1.0)? * deg_fine,
        ];
        let mut windows = [0u64; STAGES];
        let mut ends = [0u64; STAGES];
        let mut acc: u64 = 0;
        for s in 0..STAGES {
            let w = u64::try_from(words[s].div_ceil(w_max as u128).max(1))
                .map_err(|_| Error::Unsupported(format!("stage {} window overflows for eps={eps}", s + 1)))?;
            windows[s] = w;
            acc = acc
                .checked_add(w)
                .ok_or_else(|| Error::Unsupported(format!("schedule length overflows for eps={eps}")))?;
            ends[s] = acc;
        }
        Ok(Self { windows, ends })
    }

    /// Last round of `stage` (1-based).
    pub fn end(&self, stage: usize) -> u64 {
        self.ends[stage - 1]
    }

    pub fn total(&self) -> u64 {
        self.ends[STAGES - 1]
    }
}

const SIGNAL_1: Kind = Kind::Signal(1);
const REPLY_COARSE: Kind = Kind::Data(2);
const SIGNAL_2: Kind = Kind::Signal(2);
const FORWARD_2: Kind = Kind::Data(4);
const SHORT_EDGES: Kind = Kind::Data(5);
const SIGNAL_3: Kind = Kind::Signal(3);
const REPLY_FINE: Kind = Kind::Data(7);
const SIGNAL_4: Kind = Kind::Signal(4);
const FORWARD_4: Kind = Kind::Data(9);
const BALL_EDGES: Kind = Kind::Data(10);
const LONG_ROUTED: Kind = Kind::Data(11);
const LONG_EDGES: Kind = Kind::Data(12);

fn stage_of(kind: Kind) -> Option<usize> {
    Some(match kind {
        SIGNAL_1 => 1,
        REPLY_COARSE => 2,
        SIGNAL_2 => 3,
        FORWARD_2 => 4,
        SHORT_EDGES => 5,
        SIGNAL_3 => 6,
        REPLY_FINE => 7,
        SIGNAL_4 => 8,
        FORWARD_4 => 9,
        BALL_EDGES => 10,
        LONG_ROUTED => 11,
        LONG_EDGES => 12,
        _ => return None,
    })
}

/// What a center learned and computed.
#[derive(Debug, Clone, PartialEq)]
pub struct CongestCenter {
    pub center: NodeId,
    /// 1/4-separated cover of the center's 2-hop ball.
    pub cover: Vec<NodeId>,
    /// eps/40-separated cover of the center's 2-hop ball.
    pub fine_cover: Vec<NodeId>,
    /// Spanner of the unit ball graph on `fine_cover`.
    pub long_share: EdgeList,
}

fn separated(points: &PointMap, r: f64) -> Vec<NodeId> {
    let pts: Vec<(NodeId, &[f64])> = points.iter().map(|(&id, c)| (id, c.as_slice())).collect();
    greedy_independent(&pts, r)
}

fn restrict(points: &PointMap, ids: &[NodeId]) -> PointMap {
    ids.iter().map(|id| (*id, points[id].clone())).collect()
}

fn edge_words(e: &Edge, known: &PointMap) -> [Word; 4] {
    [Word::Id(e.u), Word::Id(e.v), Word::Coord(known[&e.u].clone()), Word::Coord(known[&e.v].clone())]
}

fn decode_edge(rec: &[Word]) -> Option<Edge> {
    let a = rec.first()?.id()?;
    let b = rec.get(1)?.id()?;
    Some(Edge::new(a, b, Euclidean.dist(rec.get(2)?.coord()?, rec.get(3)?.coord()?)))
}

#[derive(Debug, Clone)]
enum Fault {
    Overrun { stage: usize, round: u64, deadline: u64 },
    Compute(String),
}

struct CongestNode {
    sched: CongestSchedule,
    eps: f64,
    center: bool,
    /// Closed 1-hop neighborhood with coordinates.
    ball: PointMap,
    buffers: BTreeMap<usize, Vec<Message>>,
    reports: BTreeMap<NodeId, PointMap>,
    relay: BTreeMap<NodeId, NodeId>,
    /// Coordinates of the fine cover, kept until the long share is routed.
    fine_known: PointMap,
    summary: Option<CongestCenter>,
    long_registry: Option<ReplacementRegistry>,
    selected: bool,
    shares: Vec<LocalSpannerShare>,
    registries: Vec<OwnedRegistry>,
    weights: BTreeMap<(NodeId, NodeId), f64>,
    fault: Option<Fault>,
    halted: bool,
}

impl CongestNode {
    fn take(&mut self, stage: usize) -> Vec<Message> {
        self.buffers.remove(&stage).unwrap_or_default()
    }

    fn store_edges(&mut self, msgs: &[Message]) {
        for m in msgs {
            for rec in m.records() {
                if let Some(e) = decode_edge(rec) {
                    self.weights.insert(e.key(), e.w);
                }
            }
        }
    }

    fn fail(&mut self, e: Error) {
        self.fault.get_or_insert(Fault::Compute(e.to_string()));
    }

    /// Replies to the centers that signalled with the `r`-separated subset
    /// of the closed neighborhood.
    fn reply_cover(&mut self, ctx: &mut NodeCtx<'_>, signals: &[Message], r: f64, kind: Kind) {
        let mine = restrict(&self.ball, &separated(&self.ball, r));
        let words = point_words(mine.iter().map(|(&id, c)| (id, c.as_slice())));
        for m in signals {
            ctx.send(m.src, kind, words.clone(), 2);
        }
        if self.center {
            self.reports.clear();
            self.reports.insert(ctx.id, mine);
        }
    }

    /// Center side: merges the replies, picks the `r`-separated cover and
    /// tells every cover member (directly or via a reporting neighbor).
    fn select_cover(&mut self, ctx: &mut NodeCtx<'_>, replies: &[Message], r: f64, kind: Kind) -> Vec<NodeId> {
        for m in replies {
            self.reports.insert(m.src, read_points(m).into_iter().collect());
        }
        let mut union = PointMap::new();
        for pts in self.reports.values() {
            for (id, c) in pts {
                union.entry(*id).or_insert_with(|| c.clone());
            }
        }
        let cover = separated(&union, r);
        self.relay.clear();
        let mut bundles: BTreeMap<NodeId, Vec<Word>> = BTreeMap::new();
        for &m in &cover {
            if m == ctx.id {
                self.selected = true;
                continue;
            }
            let via = if self.ball.contains_key(&m) {
                m
            } else {
                *self
                    .reports
                    .iter()
                    .find(|(&x, pts)| x != ctx.id && pts.contains_key(&m))
                    .expect("cover members come from some report")
                    .0
            };
            self.relay.insert(m, via);
            bundles.entry(via).or_default().push(Word::Id(m));
        }
        for (dst, words) in bundles {
            ctx.send(dst, kind, words, 1);
        }
        self.summary.get_or_insert_with(|| CongestCenter {
            center: ctx.id,
            cover: Vec::new(),
            fine_cover: Vec::new(),
            long_share: EdgeList::new(),
        });
        cover
    }

    fn relay_targets(&mut self, ctx: &mut NodeCtx<'_>, msgs: &[Message], kind: Kind) {
        let mut forward = BTreeSet::new();
        for m in msgs {
            for w in &m.payload {
                match w.id() {
                    Some(t) if t == ctx.id => self.selected = true,
                    Some(t) => {
                        forward.insert(t);
                    }
                    None => {}
                }
            }
        }
        for t in forward {
            ctx.send(t, kind, vec![Word::Id(t)], 1);
        }
    }

    /// Runs the centralized spanner on `points`, keeps own edges and sends
    /// every other edge to its endpoint, which must be a neighbor.
    fn spread_local(&mut self, ctx: &mut NodeCtx<'_>, points: &PointMap, eps: f64, kind: Kind) {
        let (edges, reg) = match (LocalAlgo::Centralized { eps }).compute(points) {
            Ok(r) => r,
            Err(e) => return self.fail(e),
        };
        let mut bundles: BTreeMap<NodeId, Vec<Word>> = BTreeMap::new();
        for e in edges.edges() {
            for p in [e.u, e.v] {
                if p == ctx.id {
                    self.weights.insert(e.key(), e.w);
                } else {
                    bundles.entry(p).or_default().extend(edge_words(e, points));
                }
            }
        }
        for (dst, words) in bundles {
            ctx.send(dst, kind, words, 4);
        }
        self.shares.push(LocalSpannerShare { owner: ctx.id, edges });
        if let Some(registry) = reg {
            self.registries.push(OwnedRegistry { owner: ctx.id, eps, registry });
        }
    }

    fn finish_stage(&mut self, stage: usize, ctx: &mut NodeCtx<'_>) {
        let msgs = self.take(stage);
        let eps = self.eps;
        match stage {
            1 => self.reply_cover(ctx, &msgs, 0.25, REPLY_COARSE),
            2 => {
                if self.center {
                    let cover = self.select_cover(ctx, &msgs, 0.25, SIGNAL_2);
                    if let Some(s) = self.summary.as_mut() {
                        s.cover = cover;
                    }
                }
            }
            3 => self.relay_targets(ctx, &msgs, FORWARD_2),
            4 => {
                if msgs.iter().any(|m| m.payload.iter().any(|w| w.id() == Some(ctx.id))) {
                    self.selected = true;
                }
                if std::mem::take(&mut self.selected) {
                    let ball = self.ball.clone();
                    self.spread_local(ctx, &ball, eps, SHORT_EDGES);
                }
            }
            5 => {
                self.store_edges(&msgs);
                if self.center {
                    for i in 0..ctx.neighbors.len() {
                        let v = ctx.neighbors[i];
                        ctx.send(v, SIGNAL_3, vec![Word::Id(ctx.id)], 1);
                    }
                }
            }
            6 => self.reply_cover(ctx, &msgs, eps / 40.0, REPLY_FINE),
            7 => {
                if self.center {
                    let fine = self.select_cover(ctx, &msgs, eps / 40.0, SIGNAL_4);
                    let mut union = PointMap::new();
                    for pts in self.reports.values() {
                        for (id, c) in pts {
                            union.entry(*id).or_insert_with(|| c.clone());
                        }
                    }
                    match (LocalAlgo::Centralized { eps: eps / 5.0 }).compute(&restrict(&union, &fine)) {
                        Ok((edges, reg)) => {
                            self.long_registry = reg;
                            if let Some(s) = self.summary.as_mut() {
                                s.fine_cover = fine;
                                s.long_share = edges;
                            }
                            self.fine_known = union;
                        }
                        Err(e) => self.fail(e),
                    }
                }
            }
            8 => self.relay_targets(ctx, &msgs, FORWARD_4),
            9 => {
                if msgs.iter().any(|m| m.payload.iter().any(|w| w.id() == Some(ctx.id))) {
                    self.selected = true;
                }
                if std::mem::take(&mut self.selected) {
                    let me = self.ball[&ctx.id].clone();
                    let small: PointMap = self
                        .ball
                        .iter()
                        .filter(|(_, c)| Euclidean.dist(&me, c) <= eps / 20.0)
                        .map(|(&id, c)| (id, c.clone()))
                        .collect();
                    self.spread_local(ctx, &small, eps, BALL_EDGES);
                }
            }
            10 => {
                self.store_edges(&msgs);
                if let Some(summary) = self.summary.clone() {
                    let known = std::mem::take(&mut self.fine_known);
                    let mut bundles: BTreeMap<NodeId, Vec<Word>> = BTreeMap::new();
                    for e in summary.long_share.edges() {
                        for p in [e.u, e.v] {
                            if p == ctx.id {
                                self.weights.insert(e.key(), e.w);
                            } else {
                                let mut rec = vec![Word::Id(p)];
                                rec.extend(edge_words(e, &known));
                                bundles.entry(self.relay[&p]).or_default().extend(rec);
                            }
                        }
                    }
                    for (dst, words) in bundles {
                        ctx.send(dst, LONG_ROUTED, words, 5);
                    }
                    if let Some(registry) = self.long_registry.take() {
                        self.registries.push(OwnedRegistry { owner: ctx.id, eps: eps / 5.0, registry });
                    }
                    self.shares.push(LocalSpannerShare { owner: ctx.id, edges: summary.long_share });
                }
            }
            11 => {
                let mut forward: BTreeMap<NodeId, Vec<Word>> = BTreeMap::new();
                for m in &msgs {
                    for rec in m.records() {
                        let Some(target) = rec.first().and_then(Word::id) else {
                            continue;
                        };
                        if target == ctx.id {
                            if let Some(e) = decode_edge(&rec[1..]) {
                                self.weights.insert(e.key(), e.w);
                            }
                        } else {
                            forward.entry(target).or_default().extend(rec[1..].iter().cloned());
                        }
                    }
                }
                for (dst, words) in forward {
                    ctx.send(dst, LONG_EDGES, words, 4);
                }
            }
            _ => {
                self.store_edges(&msgs);
                self.halted = true;
            }
        }
    }
}

impl NodeProgram for CongestNode {
    fn init(&mut self, ctx: &mut NodeCtx<'_>) {
        if self.center {
            for i in 0..ctx.neighbors.len() {
                let v = ctx.neighbors[i];
                ctx.send(v, SIGNAL_1, vec![Word::Id(ctx.id)], 1);
            }
        }
    }

    fn on_round(&mut self, ctx: &mut NodeCtx<'_>, inbox: &[Message]) {
        for m in inbox {
            let Some(stage) = stage_of(m.kind) else { continue };
            let deadline = self.sched.end(stage);
            if ctx.round > deadline {
                self.fault.get_or_insert(Fault::Overrun { stage, round: ctx.round, deadline });
                continue;
            }
            self.buffers.entry(stage).or_default().push(m.clone());
        }
        if let Some(stage) = (1..=STAGES).find(|&s| self.sched.end(s) == ctx.round) {
            self.finish_stage(stage, ctx);
        }
    }

    fn is_halted(&self) -> bool {
        self.halted
    }

    fn next_wakeup(&self, now: u64) -> Option<u64> {
        if self.halted {
            return None;
        }
        (1..=STAGES).map(|s| self.sched.end(s)).find(|&e| e > now)
    }
}

/// CONGEST spanner with the default message width.
pub fn congest_spanner(g: &UnitBallGraph, eps: f64, seed: u64) -> Result<ProtocolRun> {
    let ps = g.points();
    let sched = CongestSchedule::new(eps, ps.dimension(), ps.doubling_dim_hint(), netsim::DEFAULT_W_MAX)?;
    let (mis, coords, mut trace) = run_mis(g, seed, Model::Congest)?;
    let mut is_center = vec![false; g.len()];
    for &m in &mis.members {
        is_center[m] = true;
    }
    let mut coords = coords.into_iter();
    let cfg = EngineConfig::new(Model::Congest, seed).with_round_limit(sched.total());
    let out = netsim::run(
        g,
        |id| {
            let mut ball = coords.next().unwrap_or_default();
            ball.insert(id, ps.coords(id).to_vec());
            CongestNode {
                sched,
                eps,
                center: is_center[id],
                ball,
                buffers: BTreeMap::new(),
                reports: BTreeMap::new(),
                relay: BTreeMap::new(),
                fine_known: PointMap::new(),
                summary: None,
                long_registry: None,
                selected: false,
                shares: Vec::new(),
                registries: Vec::new(),
                weights: BTreeMap::new(),
                fault: None,
                halted: false,
            }
        },
        cfg,
    )?;
    trace.append(&out.trace);

    let mut weights = BTreeMap::new();
    let mut shares = Vec::new();
    let mut registries = Vec::new();
    let mut centers = Vec::new();
    for node in out.nodes {
        match node.fault {
            Some(Fault::Overrun { stage, round, deadline }) => {
                return Err(NetError::ScheduleOverrun { stage, round, deadline }.into())
            }
            Some(Fault::Compute(msg)) => return Err(Error::InvalidParameter(msg)),
            None => {}
        }
        weights.extend(node.weights);
        shares.extend(node.shares);
        registries.extend(node.registries);
        centers.extend(node.summary);
    }
    let edges = EdgeList::from_edges(weights.into_iter().map(|((a, b), w)| Edge::new(a, b, w)));
    Ok(ProtocolRun {
        protocol: ProtocolKind::Congest,
        param: eps,
        spanner: Spanner::new(g.len(), edges, 1.0 + eps),
        mis,
        trace,
        shares,
        registries,
        centers,
    })
}

/// A center `w` of `g`, for the offline per-center computations.
#[derive(Debug, Clone, Copy)]
pub struct CenterContext<'a> {
    pub g: &'a UnitBallGraph,
    pub w: NodeId,
}

impl CenterContext<'_> {
    fn closed_ball(&self, v: NodeId) -> Vec<NodeId> {
        let mut ids: Vec<NodeId> = self.g.neighbor_ids(v).collect();
        ids.push(v);
        ids.sort_unstable();
        ids
    }

    fn points(&self, ids: &[NodeId]) -> PointMap {
        ids.iter().map(|&i| (i, self.g.points().coords(i).to_vec())).collect()
    }

    /// The `r`-separated cover of the 2-hop ball built from the
    /// `r`-separated subsets of the closed neighborhoods of `w`'s closed
    /// neighborhood.
    fn cover(&self, r: f64) -> Vec<NodeId> {
        let mut union = BTreeSet::new();
        for v in self.closed_ball(self.w) {
            union.extend(separated(&self.points(&self.closed_ball(v)), r));
        }
        separated(&self.points(&union.into_iter().collect::<Vec<_>>()), r)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShortEdges {
    pub cover: Vec<NodeId>,
    /// One spanner of the closed neighborhood per cover member.
    pub shares: Vec<LocalSpannerShare>,
    pub registries: Vec<OwnedRegistry>,
}

/// Short-edge phase for one center, without message passing.
pub fn span_short_edges(ctx: &CenterContext<'_>, eps: f64) -> Result<ShortEdges> {
    let cover = ctx.cover(0.25);
    let mut shares = Vec::new();
    let mut registries = Vec::new();
    for &m in &cover {
        let (edges, registry) = centralized_spanner_on(ctx.g.points(), &ctx.closed_ball(m), eps)?;
        shares.push(LocalSpannerShare { owner: m, edges });
        registries.push(OwnedRegistry { owner: m, eps, registry });
    }
    Ok(ShortEdges { cover, shares, registries })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LongEdges {
    pub fine_cover: Vec<NodeId>,
    /// Spanner of the unit ball graph on the fine cover, at eps/5.
    pub long_share: EdgeList,
    /// One spanner per fine cover member of the points within eps/20.
    pub ball_shares: Vec<LocalSpannerShare>,
    pub registries: Vec<OwnedRegistry>,
}

/// Long-edge phase for one center, without message passing.
pub fn span_long_edges(ctx: &CenterContext<'_>, eps: f64) -> Result<LongEdges> {
    let fine_cover = ctx.cover(eps / 40.0);
    let (long_share, long_reg) = centralized_spanner_on(ctx.g.points(), &fine_cover, eps / 5.0)?;
    let mut registries = vec![OwnedRegistry { owner: ctx.w, eps: eps / 5.0, registry: long_reg }];
    let ps = ctx.g.points();
    let mut ball_shares = Vec::new();
    for &v in &fine_cover {
        let small: Vec<NodeId> = ctx.closed_ball(v).into_iter().filter(|&p| ps.dist(v, p) <= eps / 20.0).collect();
        let (edges, registry) = centralized_spanner_on(ps, &small, eps)?;
        ball_shares.push(LocalSpannerShare { owner: v, edges });
        registries.push(OwnedRegistry { owner: v, eps, registry });
    }
    Ok(LongEdges { fine_cover, long_share, ball_shares, registries })
}

/// Reference result without message passing: the union of both phases over
/// `centers`.
pub fn offline_congest_spanner(g: &UnitBallGraph, centers: &[NodeId], eps: f64) -> Result<EdgeList> {
    let mut out = EdgeList::new();
    for &w in centers {
        let ctx = CenterContext { g, w };
        for s in span_short_edges(&ctx, eps)?.shares {
            out = out.union(&s.edges);
        }
        let long = span_long_edges(&ctx, eps)?;
        out = out.union(&long.long_share);
        for s in long.ball_shares {
            out = out.union(&s.edges);
        }
    }
    Ok(out)
}
