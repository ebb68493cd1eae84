//! Local views and the access abstraction shared by the engine and the
//! locality audit.
//!
//! Robots only have local knowledge: every decision function in this crate
//! reads the chain through [`ChainView`], anchored at the deciding robot.
//! The engine uses [`GlobalView`] (whole-chain access); the audit re-runs the
//! same functions through [`WindowView`], which yields `None` beyond the
//! viewing radius. Any decision that would differ under the window is a
//! locality violation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::chain::{ClosedChain, RunId};
use crate::geom::{Position, Turn, Vector};

/// What a robot can see of a runner tag in its viewing range: the stored
/// timestamp and the movement direction along the chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagView {
    pub birth: u64,
    /// +1 = increasing chain index, -1 = decreasing.
    pub dir: i8,
}

/// Chain access relative to an anchor robot. Offset 0 is the anchor itself.
pub trait ChainView {
    /// Number of robots in the whole chain.
    fn chain_len(&self) -> usize;
    /// Absolute position of the robot at `offset` from the anchor, or `None`
    /// if it is outside the view.
    fn pos(&self, offset: isize) -> Option<Position>;
    /// Tag of the robot at `offset`: `None` if outside the view,
    /// `Some(None)` if visible and untagged.
    fn tag(&self, offset: isize) -> Option<Option<TagView>>;

    fn step(&self, offset: isize) -> Option<Vector> {
        Some(self.pos(offset)?.vector_to(self.pos(offset + 1)?))
    }

    fn turn(&self, offset: isize) -> Option<Turn> {
        let incoming = self.step(offset - 1)?;
        let outgoing = self.step(offset)?;
        if !incoming.is_unit() || !outgoing.is_unit() {
            return None;
        }
        Some(Turn::between(incoming, outgoing))
    }
}

/// Engine-side view: full access to the chain plus the tag registry snapshot.
pub struct GlobalView<'a> {
    chain: &'a ClosedChain,
    tags: &'a BTreeMap<RunId, TagView>,
    anchor: isize,
}

impl<'a> GlobalView<'a> {
    pub fn new(chain: &'a ClosedChain, tags: &'a BTreeMap<RunId, TagView>, anchor: isize) -> Self {
        GlobalView { chain, tags, anchor }
    }
}

impl ChainView for GlobalView<'_> {
    fn chain_len(&self) -> usize {
        self.chain.len()
    }

    fn pos(&self, offset: isize) -> Option<Position> {
        Some(self.chain.pos(self.anchor + offset))
    }

    fn tag(&self, offset: isize) -> Option<Option<TagView>> {
        let id = self.chain.tag(self.anchor + offset);
        Some(id.and_then(|id| self.tags.get(&id).copied()))
    }
}

/// The snapshot a single robot perceives: relative positions and visible tags
/// of all robots at chain-distance at most `radius` in both directions, plus
/// the global round number.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalView {
    /// Positions relative to the center robot, in chain order.
    pub rel: Vec<Vector>,
    pub tags: Vec<Option<TagView>>,
    /// Index of the center robot inside `rel`.
    pub center: usize,
    /// Total chain length (the window covers the whole chain when
    /// `rel.len() == chain_len`).
    pub chain_len: usize,
    pub round: u64,
}

/// Extract the local view of robot `i` with viewing radius `radius`.
/// The window contains `min(2*radius + 1, n)` robots and is translation
/// invariant by construction.
pub fn local_view(
    chain: &ClosedChain,
    tags: &BTreeMap<RunId, TagView>,
    i: isize,
    radius: usize,
    round: u64,
) -> LocalView {
    let n = chain.len();
    let span = (2 * radius + 1).min(n);
    let back = if span == n { (n - 1) / 2 } else { radius } as isize;
    let origin = chain.pos(i);
    let mut rel = Vec::with_capacity(span);
    let mut tag_views = Vec::with_capacity(span);
    for k in 0..span as isize {
        let j = i - back + k;
        rel.push(origin.vector_to(chain.pos(j)));
        tag_views.push(chain.tag(j).and_then(|id| tags.get(&id).copied()));
    }
    LocalView {
        rel,
        tags: tag_views,
        center: back as usize,
        chain_len: n,
        round,
    }
}

/// Audit-side view over a [`LocalView`] window. Offsets beyond the window
/// return `None`; positions are re-anchored at an arbitrary absolute center
/// so decisions can be compared against the engine.
pub struct WindowView<'a> {
    view: &'a LocalView,
    center_abs: Position,
}

impl<'a> WindowView<'a> {
    pub fn new(view: &'a LocalView, center_abs: Position) -> Self {
        WindowView { view, center_abs }
    }

    fn slot(&self, offset: isize) -> Option<usize> {
        let span = self.view.rel.len() as isize;
        if span == self.view.chain_len as isize {
            // Whole chain visible: wrap cyclically.
            let idx = (self.view.center as isize + offset).rem_euclid(span);
            return Some(idx as usize);
        }
        let idx = self.view.center as isize + offset;
        if idx < 0 || idx >= span {
            None
        } else {
            Some(idx as usize)
        }
    }
}

impl ChainView for WindowView<'_> {
    fn chain_len(&self) -> usize {
        self.view.chain_len
    }

    fn pos(&self, offset: isize) -> Option<Position> {
        let slot = self.slot(offset)?;
        Some(self.center_abs.offset(self.view.rel[slot]))
    }

    fn tag(&self, offset: isize) -> Option<Option<TagView>> {
        let slot = self.slot(offset)?;
        Some(self.view.tags[slot])
    }
}
