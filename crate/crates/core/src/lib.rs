//! Light-weight bounded-degree (1+eps)-spanners for unit ball graphs.
//!
//! The crate provides the centralized construction, LOCAL and CONGEST
//! distributed protocols running on a synchronous round simulator, the
//! truncated Euclidean greedy variant, verification routines and an
//! experiment harness.

// `!(x > 0.0)` is used on purpose so that NaN parameters are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod graph;
pub mod harness;
pub mod metric;
pub mod netsim;
pub mod protocols;
pub mod spanner;
pub mod verify;

pub use error::{Error, NetError, Result};
pub use graph::{build_ubg, Edge, EdgeList, UnitBallGraph};
pub use metric::{generate_uniform_square, packing_bound, Euclidean, Metric, NodeId, Point, PointSet};
pub use netsim::{Model, RoundTrace};
pub use protocols::{
    congest_spanner, distributed_euclidean_spanner, distributed_mis, distributed_spanner, MisResult, ProtocolKind,
    ProtocolRun,
};
pub use spanner::{centralized_euclidean_spanner, centralized_spanner, naive_greedy, ReplacementRegistry, Spanner};
pub use verify::{check_stretch, Report};
