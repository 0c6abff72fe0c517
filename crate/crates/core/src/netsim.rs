//! Synchronous round-based message passing over the unit ball graph.
//!
//! Messages sent in round `r` are delivered at the end of round `r` and read
//! by their receivers in the same step, which also produces the sends of
//! round `r + 1`. Under [`Model::Congest`] a directed edge carries one chunk
//! of at most `w_max` words per round; longer logical messages are split on
//! record boundaries and reassembled before delivery.

use std::collections::{BTreeMap, VecDeque};
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{NetError, Result};
use crate::graph::{Edge, EdgeList, UnitBallGraph};
use crate::metric::NodeId;

/// Words per CONGEST message.
pub const DEFAULT_W_MAX: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Model {
    Local,
    Congest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Kind {
    Signal(u8),
    Data(u8),
}

/// One word: a node id, a coordinate tuple, or a small scalar.
#[derive(Debug, Clone, PartialEq)]
pub enum Word {
    Id(NodeId),
    Coord(Vec<f64>),
    Value(u64),
}

impl Word {
    pub fn id(&self) -> Option<NodeId> {
        match self {
            Word::Id(i) => Some(*i),
            _ => None,
        }
    }

    pub fn coord(&self) -> Option<&[f64]> {
        match self {
            Word::Coord(c) => Some(c),
            _ => None,
        }
    }

    pub fn value(&self) -> Option<u64> {
        match self {
            Word::Value(v) => Some(*v),
            _ => None,
        }
    }
}

/// A logical message: a bundle of fixed-size records.
#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub kind: Kind,
    pub src: NodeId,
    pub dst: NodeId,
    pub payload: Vec<Word>,
    /// Words per record; chunking never splits a record.
    pub record_len: usize,
}

impl Message {
    pub fn records(&self) -> impl Iterator<Item = &[Word]> {
        self.payload.chunks(self.record_len.max(1))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EngineConfig {
    pub model: Model,
    pub round_limit: u64,
    pub seed: u64,
    pub w_max: usize,
}

impl EngineConfig {
    pub fn new(model: Model, seed: u64) -> Self {
        Self { model, round_limit: 1_000_000, seed, w_max: DEFAULT_W_MAX }
    }

    pub fn with_round_limit(mut self, limit: u64) -> Self {
        self.round_limit = limit;
        self
    }
}

/// What a node sees while running a handler.
pub struct NodeCtx<'a> {
    pub id: NodeId,
    pub round: u64,
    pub coords: &'a [f64],
    pub neighbors: &'a [NodeId],
    pub rng: &'a mut ChaCha8Rng,
    outbox: &'a mut Vec<Message>,
}

impl NodeCtx<'_> {
    pub fn send(&mut self, dst: NodeId, kind: Kind, payload: Vec<Word>, record_len: usize) {
        self.outbox.push(Message { kind, src: self.id, dst, payload, record_len: record_len.max(1) });
    }

    pub fn is_neighbor(&self, v: NodeId) -> bool {
        self.neighbors.binary_search(&v).is_ok()
    }
}

/// Per-node behavior. Handlers must be deterministic given the node state,
/// the inbox (sorted by `(src, kind)`) and the node's random stream.
pub trait NodeProgram: Send {
    fn init(&mut self, ctx: &mut NodeCtx<'_>);

    fn on_round(&mut self, ctx: &mut NodeCtx<'_>, inbox: &[Message]);

    fn is_halted(&self) -> bool;

    /// Earliest future round at which the node must run even with an empty
    /// inbox. `None` means it only reacts to messages.
    fn next_wakeup(&self, _now: u64) -> Option<u64> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundStat {
    pub round: u64,
    pub messages: usize,
    pub max_words: usize,
}

/// Append-only record of a run. Rounds skipped because nothing was in
/// flight and no node was due are counted in `rounds_elapsed` but have no
/// row.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RoundTrace {
    pub rounds_elapsed: u64,
    pub rows: Vec<RoundStat>,
}

impl RoundTrace {
    pub fn max_words(&self) -> usize {
        self.rows.iter().map(|r| r.max_words).max().unwrap_or(0)
    }

    pub fn total_messages(&self) -> usize {
        self.rows.iter().map(|r| r.messages).sum()
    }

    /// Last round in which anything was transmitted.
    pub fn active_rounds(&self) -> u64 {
        self.rows.iter().rev().find(|r| r.messages > 0).map_or(0, |r| r.round)
    }

    /// Appends a later phase, shifting its round numbers.
    pub fn append(&mut self, later: &RoundTrace) {
        let offset = self.rounds_elapsed;
        self.rows.extend(later.rows.iter().map(|r| RoundStat { round: r.round + offset, ..*r }));
        self.rounds_elapsed += later.rounds_elapsed;
    }

    /// `round,messages,max_words` CSV.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["round", "messages", "max_words"])?;
        for r in &self.rows {
            w.write_record([r.round.to_string(), r.messages.to_string(), r.max_words.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub struct RunOutcome<P> {
    pub nodes: Vec<P>,
    pub trace: RoundTrace,
}

struct InFlight {
    msg: Message,
    sent: usize,
}

fn node_rng(seed: u64, id: NodeId) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id as u64);
    rng
}

type Queues = BTreeMap<(NodeId, NodeId), VecDeque<InFlight>>;

fn enqueue(
    queues: &mut Queues,
    outboxes: Vec<Vec<Message>>,
    neighbors: &[Vec<NodeId>],
    cfg: &EngineConfig,
) -> Result<(), NetError> {
    for msg in outboxes.into_iter().flatten() {
        if neighbors[msg.src].binary_search(&msg.dst).is_err() {
            return Err(NetError::NonNeighbor { src: msg.src, dst: msg.dst });
        }
        if cfg.model == Model::Congest && msg.record_len > cfg.w_max && !msg.payload.is_empty() {
            return Err(NetError::WidthViolation { words: msg.record_len, limit: cfg.w_max });
        }
        queues.entry((msg.src, msg.dst)).or_default().push_back(InFlight { msg, sent: 0 });
    }
    Ok(())
}

/// Runs one program instance per node until quiescence: nothing in flight
/// and every live node either halted or waiting only for messages.
pub fn run<P, F>(g: &UnitBallGraph, mut factory: F, cfg: EngineConfig) -> Result<RunOutcome<P>, NetError>
where
    P: NodeProgram,
    F: FnMut(NodeId) -> P,
{
    let n = g.len();
    let neighbors: Vec<Vec<NodeId>> = (0..n).map(|u| g.neighbor_ids(u).collect()).collect();
    let coords: Vec<&[f64]> = (0..n).map(|u| g.points().coords(u)).collect();
    let mut nodes: Vec<P> = (0..n).map(&mut factory).collect();
    let mut rngs: Vec<ChaCha8Rng> = (0..n).map(|i| node_rng(cfg.seed, i)).collect();
    let mut trace = RoundTrace::default();
    let mut queues = Queues::new();

    let outboxes: Vec<Vec<Message>> = nodes
        .par_iter_mut()
        .zip(rngs.par_iter_mut())
        .enumerate()
        .map(|(id, (node, rng))| {
            let mut outbox = Vec::new();
            let mut ctx =
                NodeCtx { id, round: 0, coords: coords[id], neighbors: &neighbors[id], rng, outbox: &mut outbox };
            node.init(&mut ctx);
            outbox
        })
        .collect();
    enqueue(&mut queues, outboxes, &neighbors, &cfg)?;

    let mut round: u64 = 0;
    loop {
        if queues.is_empty() {
            let due = nodes.iter().filter(|p| !p.is_halted()).filter_map(|p| p.next_wakeup(round)).min();
            match due {
                None => break,
                Some(r) => round = r.max(round + 1) - 1,
            }
        }
        round += 1;
        if round > cfg.round_limit {
            trace.rounds_elapsed = round - 1;
            return Err(NetError::RoundLimit { limit: cfg.round_limit, trace: Box::new(trace) });
        }

        let mut inboxes: Vec<Vec<Message>> = (0..n).map(|_| Vec::new()).collect();
        let mut stat = RoundStat { round, messages: 0, max_words: 0 };
        for q in queues.values_mut() {
            match cfg.model {
                Model::Local => {
                    for f in q.drain(..) {
                        stat.messages += 1;
                        stat.max_words = stat.max_words.max(f.msg.payload.len());
                        inboxes[f.msg.dst].push(f.msg);
                    }
                }
                Model::Congest => {
                    let head = q.front_mut().expect("queues hold no empty entries");
                    let cap = (cfg.w_max / head.msg.record_len) * head.msg.record_len;
                    let chunk = (head.msg.payload.len() - head.sent).min(cap);
                    head.sent += chunk;
                    stat.messages += 1;
                    stat.max_words = stat.max_words.max(chunk);
                    if head.sent == head.msg.payload.len() {
                        let f = q.pop_front().expect("head exists");
                        inboxes[f.msg.dst].push(f.msg);
                    }
                }
            }
        }
        queues.retain(|_, q| !q.is_empty());
        trace.rows.push(stat);

        let outboxes: Vec<Vec<Message>> = nodes
            .par_iter_mut()
            .zip(rngs.par_iter_mut())
            .zip(inboxes.par_iter_mut())
            .enumerate()
            .map(|(id, ((node, rng), inbox))| {
                let mut outbox = Vec::new();
                if !node.is_halted() {
                    inbox.sort_by_key(|m| (m.src, m.kind));
                    let mut ctx =
                        NodeCtx { id, round, coords: coords[id], neighbors: &neighbors[id], rng, outbox: &mut outbox };
                    node.on_round(&mut ctx, inbox);
                }
                outbox
            })
            .collect();
        enqueue(&mut queues, outboxes, &neighbors, &cfg)?;
    }
    trace.rounds_elapsed = round;
    Ok(RunOutcome { nodes, trace })
}

/// Encodes `(id, coords)` records.
pub fn point_words<'a, I: IntoIterator<Item = (NodeId, &'a [f64])>>(points: I) -> Vec<Word> {
    points.into_iter().flat_map(|(id, c)| [Word::Id(id), Word::Coord(c.to_vec())]).collect()
}

/// Decodes records written by [`point_words`].
pub fn read_points(msg: &Message) -> Vec<(NodeId, Vec<f64>)> {
    msg.records().filter_map(|r| Some((r.first()?.id()?, r.get(1)?.coord()?.to_vec()))).collect()
}

const GATHER: Kind = Kind::Data(0);

struct GatherNode {
    k: u64,
    known: BTreeMap<NodeId, Vec<f64>>,
    halted: bool,
}

impl GatherNode {
    fn broadcast(&self, ctx: &mut NodeCtx<'_>) {
        let words = point_words(self.known.iter().map(|(&id, c)| (id, c.as_slice())));
        for &v in ctx.neighbors {
            ctx.send(v, GATHER, words.clone(), 2);
        }
    }
}

impl NodeProgram for GatherNode {
    fn init(&mut self, ctx: &mut NodeCtx<'_>) {
        self.known.insert(ctx.id, ctx.coords.to_vec());
        if self.k == 0 {
            self.halted = true;
        } else {
            self.broadcast(ctx);
        }
    }

    fn on_round(&mut self, ctx: &mut NodeCtx<'_>, inbox: &[Message]) {
        for m in inbox {
            for (id, c) in read_points(m) {
                self.known.entry(id).or_insert(c);
            }
        }
        if ctx.round >= self.k {
            self.halted = true;
        } else {
            self.broadcast(ctx);
        }
    }

    fn is_halted(&self) -> bool {
        self.halted
    }

    fn next_wakeup(&self, now: u64) -> Option<u64> {
        (!self.halted).then_some(now + 1)
    }
}

/// Floods coordinates for `k` rounds; returns the ids within `k` hops of
/// `node`, the unit ball graph edges among them, and the trace (exactly `k`
/// rounds). Only legal in the LOCAL model.
pub fn gather_khop(
    g: &UnitBallGraph,
    node: NodeId,
    k: u64,
    model: Model,
) -> Result<(Vec<NodeId>, EdgeList, RoundTrace), NetError> {
    if model == Model::Congest {
        return Err(NetError::GatherUnderCongest);
    }
    let cfg = EngineConfig::new(Model::Local, 0).with_round_limit(k.max(1));
    let out = run(g, |_| GatherNode { k, known: BTreeMap::new(), halted: false }, cfg)?;
    let ids: Vec<NodeId> = out.nodes[node].known.keys().copied().collect();
    let edges = EdgeList::from_edges(ids.iter().flat_map(|&a| {
        ids.iter().filter(move |&&b| a < b && g.is_edge(a, b)).map(move |&b| Edge::new(a, b, g.points().dist(a, b)))
    }));
    Ok((ids, edges, out.trace))
}
