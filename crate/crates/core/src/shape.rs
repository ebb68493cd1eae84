//! Static geometry of the chain: decomposition into edge modules EM(h) and
//! vertex modules VM(h), convex/concave classification, quasi edges, and
//! merge-pattern matching with overlap typing.
//!
//! A module is a stairway of strictly alternating turns delimited by boundary
//! triples (three collinear robots). With `t` stairway turns, the module is an
//! edge module if `t` is even and a vertex module if `t` is odd; its height is
//! `t / 2`. Maximal straight stretches are normalized into single EM(0) spans.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{ChainError, ClosedChain};
use crate::geom::{Turn, Vector};
use crate::view::ChainView;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ShapeError {
    #[error("chain is not mergeless: offending robot {index}")]
    NotMergeless { index: usize },
    #[error("chain has no decomposable structure")]
    Malformed,
    #[error(transparent)]
    Chain(#[from] ChainError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModuleKind {
    Edge,
    Vertex,
}

/// A typed span of the chain. Spans are stored as `(start, len)` along the
/// cycle; adjacent modules overlap in exactly their shared boundary triple.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Module {
    pub kind: ModuleKind,
    pub height: u32,
    pub turn_count: u32,
    pub span_start: usize,
    pub span_len: usize,
    /// Net turn direction; `Some` only for vertex modules.
    pub turn_dir: Option<Turn>,
    /// Direction of the first stairway turn; `None` for EM(0).
    pub first_stair: Option<Turn>,
    /// First and last turning robot of the stairway; `None` for EM(0).
    pub stairs: Option<(usize, usize)>,
}

impl Module {
    pub fn span_end(&self, n: usize) -> usize {
        (self.span_start + self.span_len - 1) % n
    }

    pub fn contains(&self, index: usize, n: usize) -> bool {
        let rel = (index + n - self.span_start) % n;
        rel < self.span_len
    }

    pub fn is_quasi_material(&self) -> bool {
        self.kind == ModuleKind::Edge && self.height <= 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decomposition {
    pub modules: Vec<Module>,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Convexity {
    Convex,
    Concave,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WalkOrientation {
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    Horizontal,
    Vertical,
}

/// A maximal span whose decomposition contains only EM(0) and EM(1) modules,
/// delimited by vertex modules or EM(h >= 2). Includes the shared boundary
/// triples at both ends.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuasiEdge {
    /// Indices into `Decomposition::modules`, in chain order.
    pub modules: Vec<usize>,
    pub span_start: usize,
    pub span_len: usize,
    pub axis: Axis,
    /// Stair corner pairs of the EM(1) bumps on this quasi edge.
    pub bumps: Vec<(usize, usize)>,
}

impl QuasiEdge {
    pub fn contains(&self, index: usize, n: usize) -> bool {
        let rel = (index + n - self.span_start) % n;
        rel < self.span_len
    }

    /// Offset of `index` from the span start, if inside.
    pub fn offset_of(&self, index: usize, n: usize) -> Option<usize> {
        let rel = (index + n - self.span_start) % n;
        (rel < self.span_len).then_some(rel)
    }
}

/// Decompose a chain into edge and vertex modules.
///
/// Fails with `NotMergeless` on a U-turn or two adjacent same-direction turns
/// (which imply merge patterns of type 1 and 2 respectively).
pub fn decompose(chain: &ClosedChain) -> Result<Decomposition, ShapeError> {
    let turns = chain.turn_sequence()?;
    let n = turns.len();
    for (i, &t) in turns.iter().enumerate() {
        if t == Turn::UTurn {
            return Err(ShapeError::NotMergeless { index: i });
        }
        let next = turns[(i + 1) % n];
        if t.is_corner() && next == t {
            return Err(ShapeError::NotMergeless { index: i });
        }
    }

    // Maximal cyclic blocks of corner turns. Mergelessness makes each block
    // strictly alternating.
    let first_block_start = (0..n).find(|&i| {
        turns[i].is_corner() && !turns[(i + n - 1) % n].is_corner()
    });
    let Some(first) = first_block_start else {
        return Err(ShapeError::Malformed);
    };
    let mut blocks: Vec<(usize, usize)> = Vec::new(); // (start, turn_count)
    let mut i = first;
    loop {
        let mut len = 1;
        while turns[(i + len) % n].is_corner() {
            len += 1;
        }
        blocks.push((i, len));
        // Advance to the next block start.
        let mut j = (i + len) % n;
        while !turns[j].is_corner() {
            j = (j + 1) % n;
            if j == first {
                break;
            }
        }
        if j == first {
            break;
        }
        i = j;
    }
    if blocks.len() < 2 {
        return Err(ShapeError::Malformed);
    }

    let mut modules = Vec::new();
    for (b, &(start, t)) in blocks.iter().enumerate() {
        let kind = if t % 2 == 0 {
            ModuleKind::Edge
        } else {
            ModuleKind::Vertex
        };
        let first_stair = turns[start];
        let end = (start + t - 1) % n;
        modules.push(Module {
            kind,
            height: (t / 2) as u32,
            turn_count: t as u32,
            span_start: (start + n - 2) % n,
            span_len: t + 4,
            turn_dir: (kind == ModuleKind::Vertex).then_some(first_stair),
            first_stair: Some(first_stair),
            stairs: Some((start, end)),
        });
        // Straight stretch to the next block: a single EM(0) when two or more
        // straight turns separate the blocks; glued directly when only one.
        let (next_start, _) = blocks[(b + 1) % blocks.len()];
        let gap = (next_start + n - end - 1) % n;
        debug_assert!(gap >= 1);
        if gap >= 2 {
            modules.push(Module {
                kind: ModuleKind::Edge,
                height: 0,
                turn_count: 0,
                span_start: end,
                span_len: gap + 2,
                turn_dir: None,
                first_stair: None,
                stairs: None,
            });
        }
    }
    Ok(Decomposition { modules, n })
}

impl Decomposition {
    /// Index-by-index coverage check: consecutive modules share exactly their
    /// boundary triple and the spans tile the whole chain.
    pub fn covers_chain(&self) -> bool {
        let m = self.modules.len();
        if m == 0 {
            return false;
        }
        let mut total = 0usize;
        for i in 0..m {
            let a = &self.modules[i];
            let b = &self.modules[(i + 1) % m];
            let expected_next = (a.span_start + a.span_len - 3) % self.n;
            if b.span_start != expected_next {
                return false;
            }
            total += a.span_len - 3;
        }
        total == self.n
    }

    /// The parity law: `t = 2h` for edge modules, `t = 2h + 1` for vertex
    /// modules, where `t` is the stairway turn count.
    pub fn parity_law_holds(&self) -> bool {
        self.modules.iter().all(|md| match md.kind {
            ModuleKind::Edge => md.turn_count == 2 * md.height,
            ModuleKind::Vertex => md.turn_count == 2 * md.height + 1,
        })
    }

    pub fn vertex_modules(&self) -> impl Iterator<Item = (usize, &Module)> {
        self.modules
            .iter()
            .enumerate()
            .filter(|(_, m)| m.kind == ModuleKind::Vertex)
    }
}

/// Label every vertex module convex or concave under the chosen walk
/// orientation. Reversing the orientation swaps every label.
pub fn classify_vertices(
    decomposition: &Decomposition,
    orientation: WalkOrientation,
) -> Vec<(usize, Convexity)> {
    decomposition
        .vertex_modules()
        .map(|(i, m)| {
            let dir = m.turn_dir.expect("vertex module has a net turn");
            let label = match (dir, orientation) {
                (Turn::Left, WalkOrientation::Forward) => Convexity::Convex,
                (Turn::Right, WalkOrientation::Forward) => Convexity::Concave,
                (Turn::Left, WalkOrientation::Backward) => Convexity::Concave,
                (Turn::Right, WalkOrientation::Backward) => Convexity::Convex,
                _ => unreachable!("net turn is always a corner"),
            };
            (i, label)
        })
        .collect()
}

/// Maximal spans of EM(0)/EM(1) modules.
pub fn find_quasi_edges(chain: &ClosedChain, decomposition: &Decomposition) -> Vec<QuasiEdge> {
    let m = decomposition.modules.len();
    let n = decomposition.n;
    let eligible: Vec<bool> = decomposition
        .modules
        .iter()
        .map(|md| md.is_quasi_material())
        .collect();
    if eligible.iter().all(|&e| e) {
        // Degenerate: the whole chain is quasi material (cannot close a
        // mergeless chain, but stay total).
        let run: Vec<usize> = (0..m).collect();
        return vec![build_quasi_edge(chain, decomposition, run, 0, n)];
    }
    let mut edges = Vec::new();
    let mut idx = 0;
    while idx < m {
        if !eligible[idx] {
            idx += 1;
            continue;
        }
        // Only start a run at a boundary (previous module ineligible).
        if eligible[(idx + m - 1) % m] && idx == 0 {
            // Run wraps; it will be picked up from its true start.
            idx += 1;
            continue;
        }
        if eligible[(idx + m - 1) % m] {
            idx += 1;
            continue;
        }
        let mut run = Vec::new();
        let mut j = idx;
        while eligible[j % m] {
            run.push(j % m);
            j += 1;
        }
        let first = &decomposition.modules[run[0]];
        let last = &decomposition.modules[*run.last().unwrap()];
        let span_start = first.span_start;
        let span_len = {
            let end = (last.span_start + last.span_len) % n;
            ((end + n - span_start - 1) % n) + 1
        };
        edges.push(build_quasi_edge(chain, decomposition, run, span_start, span_len));
        idx = j;
    }
    edges
}

fn build_quasi_edge(
    chain: &ClosedChain,
    decomposition: &Decomposition,
    modules: Vec<usize>,
    span_start: usize,
    span_len: usize,
) -> QuasiEdge {
    let step = chain.step_vector(span_start as isize);
    let axis = if step.dy == 0 {
        Axis::Horizontal
    } else {
        Axis::Vertical
    };
    let bumps = modules
        .iter()
        .filter_map(|&i| decomposition.modules[i].stairs)
        .collect();
    QuasiEdge {
        modules,
        span_start,
        span_len,
        axis,
        bumps,
    }
}

/// A matched merge pattern of type `k`: `k` collinear black robots flanked by
/// two white anchors one perpendicular step to the same side. The chain
/// traverses `w0, b1..bk, w1` consecutively; type 1 degenerates to `w0 = w1`
/// (the U-turn).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeMatch {
    pub k: u32,
    /// Chain index of the first white anchor.
    pub start: usize,
    /// Hop direction of the black robots (toward the white side).
    pub hop: Vector,
}

impl MergeMatch {
    pub fn span_len(&self) -> usize {
        self.k as usize + 2
    }

    pub fn contains(&self, index: usize, n: usize) -> bool {
        let rel = (index + n - self.start) % n;
        rel < self.span_len()
    }

    pub fn indices(&self, n: usize) -> impl Iterator<Item = usize> + '_ {
        let start = self.start;
        (0..self.span_len()).map(move |d| (start + d) % n)
    }

    pub fn black_indices(&self, n: usize) -> impl Iterator<Item = usize> + '_ {
        let start = self.start;
        (1..=self.k as usize).map(move |d| (start + d) % n)
    }

    pub fn shared_count(&self, other: &MergeMatch, n: usize) -> usize {
        self.indices(n)
            .filter(|&i| other.contains(i, n))
            .count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OverlapKind {
    None,
    Type1,
    Type2,
}

/// Overlap typing of two matches: type 1 shares exactly two robots, type 2
/// exactly three. Sharing at most one robot needs no special treatment.
pub fn overlap_type(m1: &MergeMatch, m2: &MergeMatch, n: usize) -> OverlapKind {
    match m1.shared_count(m2, n) {
        2 => OverlapKind::Type1,
        3 => OverlapKind::Type2,
        _ => OverlapKind::None,
    }
}

/// Match the merge pattern of type `k` whose first white anchor sits at
/// `offset` from the view anchor. Returns the black hop direction.
pub fn match_pattern_at<V: ChainView>(view: &V, offset: isize, k: u32) -> Option<Vector> {
    let n = view.chain_len();
    if k as usize + 2 > n {
        return None;
    }
    let q = view.step(offset)?;
    if !q.is_unit() {
        return None;
    }
    if k == 1 {
        if view.pos(offset + 2)? == view.pos(offset)? {
            return Some(q.neg());
        }
        return None;
    }
    let d = view.step(offset + 1)?;
    if !d.is_unit() || !d.perpendicular_to(q) {
        return None;
    }
    for j in 2..k as isize {
        if view.step(offset + j)? != d {
            return None;
        }
    }
    if view.step(offset + k as isize)? != q.neg() {
        return None;
    }
    Some(q.neg())
}

/// All merge-pattern matches with `k <= kmax`, in canonical cyclic order.
/// An empty result means the chain is mergeless.
pub fn match_merge_modules(chain: &ClosedChain, kmax: u32) -> Vec<MergeMatch> {
    let n = chain.len();
    if n < 3 {
        return Vec::new();
    }
    let tags = std::collections::BTreeMap::new();
    let view = crate::view::GlobalView::new(chain, &tags, 0);
    let mut out = Vec::new();
    for start in 0..n {
        for k in 1..=kmax {
            if let Some(hop) = match_pattern_at(&view, start as isize, k) {
                out.push(MergeMatch { k, start, hop });
            }
        }
    }
    out
}

pub fn is_mergeless(chain: &ClosedChain, kmax: u32) -> bool {
    match_merge_modules(chain, kmax).is_empty()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::ClosedChain;
    use crate::geom::Position;

    fn chain(text: &str) -> ClosedChain {
        ClosedChain::build(&ClosedChain::parse_steps(text).unwrap()).unwrap()
    }

    fn rectangle(w: usize, h: usize) -> ClosedChain {
        let mut s = String::new();
        for _ in 0..w {
            s.push_str("E,");
        }
        for _ in 0..h {
            s.push_str("N,");
        }
        for _ in 0..w {
            s.push_str("W,");
        }
        for _ in 0..h {
            s.push_str("S,");
        }
        chain(s.trim_end_matches(','))
    }

    #[test]
    fn rectangle_decomposes_into_four_corners_and_edges() {
        let c = rectangle(4, 3);
        let d = decompose(&c).unwrap();
        let vms: Vec<_> = d
            .modules
            .iter()
            .filter(|m| m.kind == ModuleKind::Vertex)
            .collect();
        let ems: Vec<_> = d
            .modules
            .iter()
            .filter(|m| m.kind == ModuleKind::Edge)
            .collect();
        assert_eq!(vms.len(), 4);
        assert!(vms.iter().all(|m| m.height == 0));
        assert_eq!(ems.len(), 4);
        assert!(ems.iter().all(|m| m.height == 0 && m.turn_count == 0));
        assert!(d.covers_chain());
        assert!(d.parity_law_holds());
    }

    #[test]
    fn staircase_segment_is_em2() {
        // Long straights joined by a 4-turn alternating stairway.
        let c = chain("E,E,E,N,E,N,E,E,E,N,N,N,W,W,W,W,W,W,W,S,S,S,S,S");
        let d = decompose(&c).unwrap();
        let em2 = d
            .modules
            .iter()
            .find(|m| m.kind == ModuleKind::Edge && m.height == 2);
        let em2 = em2.expect("expected an EM(2) module");
        assert_eq!(em2.turn_count, 4);
        assert!(d.covers_chain());
        assert!(d.parity_law_holds());
    }

    #[test]
    fn u_turn_is_not_mergeless() {
        let c = chain("E,E,W,N,W,S");
        assert!(matches!(
            decompose(&c),
            Err(ShapeError::NotMergeless { .. })
        ));
    }

    #[test]
    fn adjacent_same_turns_are_not_mergeless() {
        let c = chain("E,N,W,S");
        assert!(matches!(
            decompose(&c),
            Err(ShapeError::NotMergeless { .. })
        ));
    }

    #[test]
    fn rectangle_ccw_is_all_convex() {
        let c = rectangle(4, 3);
        let d = decompose(&c).unwrap();
        let labels = classify_vertices(&d, WalkOrientation::Forward);
        assert_eq!(labels.len(), 4);
        assert!(labels.iter().all(|&(_, l)| l == Convexity::Convex));
        let swapped = classify_vertices(&d, WalkOrientation::Backward);
        assert!(swapped.iter().all(|&(_, l)| l == Convexity::Concave));
    }

    #[test]
    fn plus_sign_has_eight_convex_four_concave() {
        // Cross polygon outline, counter-clockwise, arm width 2 and length 2.
        let text = "E,E,N,N,E,E,N,N,W,W,N,N,W,W,S,S,W,W,S,S,E,E,S,S";
        let c = chain(text);
        let d = decompose(&c).unwrap();
        let labels = classify_vertices(&d, WalkOrientation::Forward);
        let convex = labels
            .iter()
            .filter(|&&(_, l)| l == Convexity::Convex)
            .count();
        let concave = labels.len() - convex;
        assert_eq!((convex, concave), (8, 4));
    }

    #[test]
    fn quasi_edges_of_rectangle() {
        let c = rectangle(6, 4);
        let d = decompose(&c).unwrap();
        let qes = find_quasi_edges(&c, &d);
        assert_eq!(qes.len(), 4);
        assert!(qes.iter().all(|qe| qe.bumps.is_empty()));
        let axes: Vec<Axis> = qes.iter().map(|qe| qe.axis).collect();
        assert_eq!(
            axes.iter().filter(|&&a| a == Axis::Horizontal).count(),
            2
        );
    }

    #[test]
    fn jogged_side_has_one_bump() {
        // Bottom side contains one EM(1) jog.
        let c = chain("E,E,E,N,E,E,E,N,N,W,W,W,W,W,W,S,S,S");
        let d = decompose(&c).unwrap();
        let qes = find_quasi_edges(&c, &d);
        let with_bump: Vec<_> = qes.iter().filter(|qe| !qe.bumps.is_empty()).collect();
        assert_eq!(with_bump.len(), 1);
        assert_eq!(with_bump[0].bumps.len(), 1);
    }

    #[test]
    fn em2_is_excluded_from_quasi_edges() {
        let c = chain("E,E,E,N,E,N,E,E,E,N,N,N,W,W,W,W,W,W,W,S,S,S,S,S");
        let d = decompose(&c).unwrap();
        let qes = find_quasi_edges(&c, &d);
        let em2_idx = d
            .modules
            .iter()
            .position(|m| m.kind == ModuleKind::Edge && m.height == 2)
            .unwrap();
        assert!(qes.iter().all(|qe| !qe.modules.contains(&em2_idx)));
    }

    #[test]
    fn large_rectangle_is_mergeless() {
        // Sides of length w are merge patterns of type w + 1, so mergelessness
        // needs sides of at least K.
        assert!(match_merge_modules(&rectangle(12, 12), 12).is_empty());
        assert!(!match_merge_modules(&rectangle(8, 8), 12).is_empty());
    }

    #[test]
    fn tooth_matches_k2() {
        // Rectangle with one upward tooth in the bottom edge: whites (2,0) and
        // (3,0), blacks (2,1),(3,1).
        let c = chain("E,E,N,E,S,E,E,E,E,E,N,N,N,W,W,W,W,W,W,W,W,S,S,S");
        let ms = match_merge_modules(&c, 12);
        let k2: Vec<_> = ms.iter().filter(|m| m.k == 2).collect();
        assert_eq!(k2.len(), 1);
        assert_eq!(k2[0].start, 2);
        assert_eq!(k2[0].hop, Vector::new(0, -1));
    }

    #[test]
    fn reversal_matches_k1() {
        let c = ClosedChain::from_positions(&[
            Position::new(0, 0),
            Position::new(0, 1),
            Position::new(0, 0),
            Position::new(1, 0),
            Position::new(1, -1),
            Position::new(0, -1),
        ])
        .unwrap();
        let ms = match_merge_modules(&c, 12);
        assert!(ms.iter().any(|m| m.k == 1 && m.start == 0));
    }

    #[test]
    fn unit_square_matches_are_degenerate_overlaps() {
        let c = chain("E,N,W,S");
        let ms = match_merge_modules(&c, 12);
        assert_eq!(ms.len(), 4);
        assert!(ms.iter().all(|m| m.k == 2));
        assert_eq!(ms[0].shared_count(&ms[1], 4), 4);
    }

    #[test]
    fn comb_overlaps_are_type1() {
        // Square wave: consecutive k=2 bumps sharing one side edge.
        let c = ClosedChain::from_positions(&[
            Position::new(0, 0),
            Position::new(0, 1),
            Position::new(1, 1),
            Position::new(1, 0),
            Position::new(2, 0),
            Position::new(2, 1),
            Position::new(3, 1),
            Position::new(3, 0),
            Position::new(4, 0),
            Position::new(4, -1),
            Position::new(3, -1),
            Position::new(2, -1),
            Position::new(1, -1),
            Position::new(0, -1),
            Position::new(-1, -1),
            Position::new(-1, 0),
        ])
        .unwrap();
        let ms: Vec<_> = match_merge_modules(&c, 12)
            .into_iter()
            .filter(|m| m.k == 2 && (m.start == 0 || m.start == 2))
            .collect();
        assert_eq!(ms.len(), 2);
        assert_eq!(overlap_type(&ms[0], &ms[1], c.len()), OverlapKind::Type1);
    }

    #[test]
    fn spiral_overlaps_are_type2() {
        // Battlement: two k=3 modules sharing three robots.
        let c = ClosedChain::from_positions(&[
            Position::new(0, 0),
            Position::new(0, 1),
            Position::new(1, 1),
            Position::new(2, 1),
            Position::new(2, 0),
            Position::new(2, -1),
            Position::new(1, -1),
            Position::new(0, -1),
            Position::new(-1, -1),
            Position::new(-1, 0),
        ])
        .unwrap();
        let ms = match_merge_modules(&c, 12);
        let k3: Vec<_> = ms.iter().filter(|m| m.k == 3).collect();
        assert_eq!(k3.len(), 2);
        assert_eq!(overlap_type(k3[0], k3[1], c.len()), OverlapKind::Type2);
        assert_eq!(
            overlap_type(&ms[0], &ms[ms.len() - 1], c.len()),
            OverlapKind::None
        );
    }
}
