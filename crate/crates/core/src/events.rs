//! The append-only event stream: run lifecycle, good pairs, merges,
//! gathering. Events carry enough positional context for the offline
//! pipelining audit.

use serde::{Deserialize, Serialize};

use crate::geom::Vector;
use crate::merge::MergeKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// Overlapped another run at initialization.
    InitOverlap,
    /// Collision rule: the older of two colliding runs stops.
    OlderInCollision,
    /// Collision rule: the rear of two same-age runs chasing in the same
    /// direction stops.
    RearSameDirection,
    /// Collision rule: same-age facing runs that are not a good pair stop.
    FacingNotGoodPair,
    /// The run participated in a merge.
    Merged,
    /// The runner tag vanished or its bump geometry broke (fused away).
    GeometryLost,
}

/// Association of a merge with the good pair it settles, with the pair's
/// subchain recorded at merge time (pre-merge indices).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairAssociation {
    pub pair: u32,
    pub pair_span_start: Option<usize>,
    pub pair_span_len: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    RunStarted {
        run: u32,
        robot_index: usize,
        dir: i8,
        hop: Vector,
        birth: u64,
    },
    RunStopped {
        run: u32,
        reason: StopReason,
        /// Runner position at stop time (pre-merge indices), when it still
        /// had one.
        robot_index: Option<usize>,
    },
    GoodPair {
        pair: u32,
        runs: (u32, u32),
        /// Subchain between the two runners (inclusive), walked in the first
        /// run's direction from its runner.
        span_start: usize,
        span_len: usize,
        good: bool,
    },
    Merge {
        k: u32,
        kind: MergeKind,
        span_start: usize,
        span_len: usize,
        /// Chain length at merge time; span indices refer to this chain.
        n: usize,
        removed: u32,
        runner_involved: bool,
        during_cleanup: bool,
        pairs: Vec<PairAssociation>,
    },
    Gathered {
        n: usize,
    },
}

/// One entry of the structured log: the phase an event happened in plus the
/// subphase that produced it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoggedEvent {
    pub phase: u64,
    pub subphase: Subphase,
    #[serde(flatten)]
    pub event: Event,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subphase {
    ExecuteRuns,
    Cleanup,
    Merge,
    InitializeRuns,
    Driver,
}
