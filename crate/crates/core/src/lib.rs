//! Deterministic fully-synchronous simulator for gathering a closed chain of
//! anonymous robots on the integer grid, with a brute-force verification
//! oracle for the structural properties the strategy relies on.
//!
//! The world is a cyclic chain of robots with neighbor L1-distance at most 1.
//! Each phase moves the active runners; every `L` phases local merge patterns
//! fire and new runs start at module endpoints. Gathering finishes when the
//! chain fits a constant-size square. Identical inputs produce bit-identical
//! event logs and traces.

pub mod batch;
pub mod chain;
pub mod constants;
pub mod events;
pub mod generate;
pub mod geom;
pub mod merge;
pub mod oracle;
pub mod runs;
pub mod scheduler;
pub mod shape;
pub mod view;

pub use chain::{ChainError, ClosedChain, MergeFusion, Robot, RobotId, RunId};
pub use constants::{Constants, ProfileError};
pub use events::{Event, LoggedEvent, StopReason, Subphase};
pub use geom::{Position, Step, Turn, Vector};
pub use scheduler::{
    default_max_phases, run_to_gathering, step_phase, GatheringReport, RunOptions, SimState,
    TraceRecord,
};
