//! The global lock-step driver: phase structure, termination detection, and
//! the full gathering loop.
//!
//! Every phase executes the run movement subphase; every `L` phases the merge
//! subphase and the run initialization subphase follow, each ending with a
//! cleanup. Robots that perform no action wait, so synchrony is preserved by
//! construction. Gathering terminates when the chain fits a (K-1) x (K-1)
//! square.

use serde::{Deserialize, Serialize};

use crate::chain::{ChainError, ClosedChain};
use crate::constants::Constants;
use crate::events::{Event, LoggedEvent, Subphase};
use crate::merge::plan_merges;
use crate::runs::{apply_merge_plan, cleanup_runs, execute_runs, initialize_runs, Runs};
use crate::shape::match_merge_modules;
use std::collections::BTreeMap;

/// Whole-simulation state. One phase per logical step; the subphases inside
/// are sequenced atomically.
#[derive(Debug, Clone)]
pub struct SimState {
    pub chain: ClosedChain,
    pub runs: Runs,
    pub phase: u64,
    pub log: Vec<LoggedEvent>,
}

impl SimState {
    pub fn new(chain: ClosedChain) -> SimState {
        let (chain, _) = chain.fuse_coincident_neighbors();
        SimState {
            chain,
            runs: Runs::new(),
            phase: 0,
            log: Vec::new(),
        }
    }

    pub fn is_gathered(&self, consts: &Constants) -> bool {
        self.chain.fits_in_square(consts.gathered_side())
    }

    fn push_events(&mut self, subphase: Subphase, events: Vec<Event>) {
        for event in events {
            self.log.push(LoggedEvent {
                phase: self.phase,
                subphase,
                event,
            });
        }
    }
}

/// Execute one full phase of the main loop.
pub fn step_phase(state: &mut SimState, consts: &Constants) -> Result<(), ChainError> {
    state.phase += 1;
    let phase = state.phase;

    let (chain, events) = execute_runs(&state.chain, &mut state.runs, phase)?;
    state.chain = chain;
    state.push_events(Subphase::ExecuteRuns, events);

    let (chain, events) = cleanup_runs(&state.chain, &mut state.runs, consts, phase)?;
    state.chain = chain;
    state.push_events(Subphase::Cleanup, events);

    if phase % consts.period == 0 {
        let matches = match_merge_modules(&state.chain, consts.k_max);
        let mergeless = matches.is_empty();
        if !matches.is_empty() {
            let plan = plan_merges(&state.chain, &matches);
            if !plan.is_empty() {
                let (chain, events) =
                    apply_merge_plan(&state.chain, &mut state.runs, &plan, phase, false)?;
                state.chain = chain;
                state.push_events(Subphase::Merge, events);
            }
        }
        let (chain, events) = cleanup_runs(&state.chain, &mut state.runs, consts, phase)?;
        state.chain = chain;
        state.push_events(Subphase::Cleanup, events);

        let (chain, events) =
            initialize_runs(&state.chain, &mut state.runs, consts, phase, mergeless)?;
        state.chain = chain;
        state.push_events(Subphase::InitializeRuns, events);

        let (chain, events) = cleanup_runs(&state.chain, &mut state.runs, consts, phase)?;
        state.chain = chain;
        state.push_events(Subphase::Cleanup, events);
    }
    Ok(())
}

/// One per-phase snapshot of the trace stream.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceRecord {
    pub round: u64,
    pub phase: u64,
    pub n: usize,
    pub positions: Vec<(i64, i64)>,
    pub events: Vec<LoggedEvent>,
}

impl TraceRecord {
    pub fn capture(state: &SimState, events: Vec<LoggedEvent>) -> TraceRecord {
        TraceRecord {
            round: state.phase,
            phase: state.phase,
            n: state.chain.len(),
            positions: state.chain.robots().iter().map(|r| (r.pos.x, r.pos.y)).collect(),
            events,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub max_phases: Option<u64>,
    /// Continue with direct merges after gathering until n <= 2.
    pub finalize: bool,
    /// Run the live lemma audit every phase.
    pub audit: bool,
    /// Recompute robot decisions from local views on sampled phases.
    pub locality_audit: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GatheringReport {
    pub initial_n: usize,
    pub final_n: usize,
    pub gathered_phase: Option<u64>,
    pub phases_run: u64,
    pub timeout: bool,
    pub merges: u32,
    pub robots_removed: u32,
    pub good_pairs: u32,
    pub runs_started: u32,
    pub invariant_violations: Vec<String>,
}

pub fn default_max_phases(n: usize) -> u64 {
    64 * n as u64 + 1024
}

/// Iterate the main loop until the chain is gathered or the phase budget is
/// exhausted. The sink receives one trace record per phase (plus the initial
/// state at round 0).
pub fn run_to_gathering(
    chain0: ClosedChain,
    consts: &Constants,
    options: &RunOptions,
    mut sink: Option<&mut dyn FnMut(&TraceRecord)>,
) -> Result<(SimState, GatheringReport), ChainError> {
    let mut state = SimState::new(chain0);
    let initial_n = state.chain.len();
    let max_phases = options.max_phases.unwrap_or_else(|| default_max_phases(initial_n));
    let mut auditor = crate::oracle::LiveAuditor::new(consts);

    if let Some(sink) = sink.as_deref_mut() {
        sink(&TraceRecord::capture(&state, Vec::new()));
    }

    let mut gathered_phase = None;
    if state.is_gathered(consts) {
        gathered_phase = Some(0);
    }
    let mut timeout = false;
    while gathered_phase.is_none() {
        if state.phase >= max_phases {
            timeout = true;
            break;
        }
        let log_mark = state.log.len();
        step_phase(&mut state, consts)?;
        let phase_events: Vec<LoggedEvent> = state.log[log_mark..].to_vec();
        if options.audit {
            auditor.observe_phase(&state, &phase_events);
        }
        if options.locality_audit && state.phase % 16 == 0 {
            auditor.check_locality(&state, consts);
        }
        if state.is_gathered(consts) {
            gathered_phase = Some(state.phase);
            state.log.push(LoggedEvent {
                phase: state.phase,
                subphase: Subphase::Driver,
                event: Event::Gathered {
                    n: state.chain.len(),
                },
            });
        }
        if let Some(sink) = sink.as_deref_mut() {
            let mut events = phase_events;
            if gathered_phase.is_some() {
                events.push(state.log.last().unwrap().clone());
            }
            sink(&TraceRecord::capture(&state, events));
        }
    }

    if options.finalize && gathered_phase.is_some() {
        finalize_to_point(&mut state, &mut sink)?;
    }

    let mut merges = 0u32;
    let mut removed = 0u32;
    let mut good_pairs = 0u32;
    let mut runs_started = 0u32;
    for e in &state.log {
        match &e.event {
            Event::Merge {
                removed: r, ..
            } => {
                merges += 1;
                removed += r;
            }
            Event::GoodPair { good: true, .. } => good_pairs += 1,
            Event::RunStarted { .. } => runs_started += 1,
            _ => {}
        }
    }
    let report = GatheringReport {
        initial_n,
        final_n: state.chain.len(),
        gathered_phase,
        phases_run: state.phase,
        timeout,
        merges,
        robots_removed: removed,
        good_pairs,
        runs_started,
        invariant_violations: auditor.into_violations(),
    };
    Ok((state, report))
}

/// Post-gathering contraction: every robot simultaneously steps one unit
/// toward the first robot's position, x-axis first. Neighbor distances never
/// grow under this rule, and the whole group reaches the target within its
/// diameter, fusing down along the way. Not part of the measured gathering;
/// plain plumbing behind the `finalize` flag.
fn finalize_to_point(
    state: &mut SimState,
    sink: &mut Option<&mut dyn FnMut(&TraceRecord)>,
) -> Result<(), ChainError> {
    // Runners play no further role.
    for id in state.runs.active_ids() {
        if let Some(idx) = state.chain.index_of_tag(id) {
            state.chain.set_tag(idx as isize, None);
        }
    }
    let target = state.chain.pos(0);
    let (min, max) = state.chain.bounding_box();
    let mut budget = ((max.x - min.x) + (max.y - min.y)) as u64 + 4;
    while state.chain.len() > 2 && budget > 0 {
        budget -= 1;
        state.phase += 1;
        let mut moves = BTreeMap::new();
        for i in 0..state.chain.len() {
            let p = state.chain.pos(i as isize);
            let step = if p.x != target.x {
                crate::geom::Vector::new((target.x - p.x).signum(), 0)
            } else if p.y != target.y {
                crate::geom::Vector::new(0, (target.y - p.y).signum())
            } else {
                continue;
            };
            moves.insert(i, p.offset(step));
        }
        if moves.is_empty() {
            break;
        }
        let (chain, _) = state.chain.apply_moves(&moves)?;
        state.chain = chain;
        if let Some(sink) = sink.as_deref_mut() {
            sink(&TraceRecord::capture(state, Vec::new()));
        }
    }
    Ok(())
}
