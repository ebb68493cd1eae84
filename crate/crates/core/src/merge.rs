//! The merge subphase: select which matched merge modules act under the
//! overlap constraints, and assemble their synchronous hops.
//!
//! Per merge type, a module is suppressed when it overlaps two or more
//! same-type modules in the same overlap type (only the outermost modules of
//! an overlap subchain act), and also when it shares four or more robots with
//! another module (tightly wound chains; those already fit a constant box).
//! Subchains of exactly two modules apply the combined pair actions: for a
//! type-1 pair both standard hops apply and the shared robots swap; for a
//! type-2 pair the doubly-black robot hops the combined diagonal, removing
//! both whites and two blacks.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::chain::ClosedChain;
use crate::geom::Position;
use crate::shape::MergeMatch;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MergeKind {
    Standard,
    PairType1,
    PairType2,
}

/// One selected merge action (a module, or a two-module pair).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlannedMerge {
    pub k: u32,
    pub kind: MergeKind,
    /// Pre-merge robot indices covered by the acting pattern(s), in chain order.
    pub span: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MergePlan {
    pub moves: BTreeMap<usize, Position>,
    pub actions: Vec<PlannedMerge>,
}

impl MergePlan {
    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

struct Annotated {
    m: MergeMatch,
    type1: Vec<usize>,
    type2: Vec<usize>,
    degenerate: usize,
}

/// Decide which of the matched modules act, honoring the overlap rules.
/// Checks run sequentially for every merge type (ascending) and overlap type
/// (1 before 2); a module whose movers are already committed is skipped.
pub fn plan_merges(chain: &ClosedChain, matches: &[MergeMatch]) -> MergePlan {
    let n = chain.len();
    let mut committed = vec![false; n];
    let mut plan = MergePlan::default();

    let mut ks: Vec<u32> = matches.iter().map(|m| m.k).collect();
    ks.sort_unstable();
    ks.dedup();

    for k in ks {
        let mut group: Vec<Annotated> = matches
            .iter()
            .filter(|m| m.k == k)
            .map(|&m| Annotated {
                m,
                type1: Vec::new(),
                type2: Vec::new(),
                degenerate: 0,
            })
            .collect();
        group.sort_by_key(|a| a.m.start);
        for i in 0..group.len() {
            for j in 0..group.len() {
                if i == j {
                    continue;
                }
                match group[i].m.shared_count(&group[j].m, n) {
                    2 => group[i].type1.push(j),
                    3 => group[i].type2.push(j),
                    s if s >= 4 => group[i].degenerate += 1,
                    _ => {}
                }
            }
        }
        let eligible: Vec<bool> = group
            .iter()
            .map(|a| a.degenerate == 0 && a.type1.len() <= 1 && a.type2.len() <= 1)
            .collect();

        // Overlap type 1 first: handles isolated modules and type-1 pairs.
        // Modules whose only overlap is a type-2 partner wait for the second
        // pass so the pair action applies.
        let mut handled = vec![false; group.len()];
        for pass in 0..2 {
            for i in 0..group.len() {
                if handled[i] || !eligible[i] {
                    continue;
                }
                let in_pass = match pass {
                    0 => group[i].type1.len() == 1 || group[i].type2.is_empty(),
                    _ => true,
                };
                if !in_pass {
                    continue;
                }
                let partner = match pass {
                    0 => group[i].type1.first().copied(),
                    _ => group[i].type2.first().copied(),
                };
                let partner = partner.filter(|&p| {
                    eligible[p] && !handled[p] && !any_committed(&group[p].m, &committed, n)
                });
                handled[i] = true;
                if any_committed(&group[i].m, &committed, n) {
                    continue;
                }
                match partner {
                    Some(p) => {
                        handled[p] = true;
                        let kind = if pass == 0 {
                            MergeKind::PairType1
                        } else {
                            MergeKind::PairType2
                        };
                        commit_pair(chain, &group[i].m, &group[p].m, kind, &mut committed, &mut plan);
                    }
                    None => {
                        commit_single(chain, &group[i].m, &mut committed, &mut plan);
                    }
                }
            }
        }
    }
    plan
}

fn any_committed(m: &MergeMatch, committed: &[bool], n: usize) -> bool {
    m.black_indices(n).any(|i| committed[i])
}

fn commit_single(
    chain: &ClosedChain,
    m: &MergeMatch,
    committed: &mut [bool],
    plan: &mut MergePlan,
) {
    let n = chain.len();
    for b in m.black_indices(n) {
        committed[b] = true;
        plan.moves.insert(b, chain.pos(b as isize).offset(m.hop));
    }
    plan.actions.push(PlannedMerge {
        k: m.k,
        kind: MergeKind::Standard,
        span: m.indices(n).collect(),
    });
}

fn commit_pair(
    chain: &ClosedChain,
    a: &MergeMatch,
    b: &MergeMatch,
    kind: MergeKind,
    committed: &mut [bool],
    plan: &mut MergePlan,
) {
    let n = chain.len();
    let mut hops: BTreeMap<usize, crate::geom::Vector> = BTreeMap::new();
    for black in a.black_indices(n) {
        hops.insert(black, a.hop);
    }
    for black in b.black_indices(n) {
        hops.entry(black)
            .and_modify(|h| *h = h.add(b.hop))
            .or_insert(b.hop);
    }
    for (&i, &hop) in &hops {
        committed[i] = true;
        plan.moves.insert(i, chain.pos(i as isize).offset(hop));
    }
    // Span in chain order starting from the earlier module.
    let (first, second) = if a.start <= b.start { (a, b) } else { (b, a) };
    let mut span: Vec<usize> = first.indices(n).collect();
    for i in second.indices(n) {
        if !span.contains(&i) {
            span.push(i);
        }
    }
    plan.actions.push(PlannedMerge {
        k: a.k,
        kind,
        span,
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::ClosedChain;
    use crate::shape::match_merge_modules;

    fn chain(text: &str) -> ClosedChain {
        ClosedChain::build(&ClosedChain::parse_steps(text).unwrap()).unwrap()
    }

    fn run_plan(c: &ClosedChain) -> (ClosedChain, MergePlan, usize) {
        let matches = match_merge_modules(c, 12);
        let plan = plan_merges(c, &matches);
        let (next, fusions) = c.apply_moves(&plan.moves).unwrap();
        (next, plan, fusions.len())
    }

    #[test]
    fn mergeless_chain_is_untouched() {
        let mut text = String::new();
        for _ in 0..12 {
            text.push_str("E,");
        }
        for _ in 0..12 {
            text.push_str("N,");
        }
        for _ in 0..12 {
            text.push_str("W,");
        }
        for _ in 0..12 {
            text.push_str("S,");
        }
        let c = chain(text.trim_end_matches(','));
        let (next, plan, fused) = run_plan(&c);
        assert!(plan.is_empty());
        assert_eq!(fused, 0);
        assert_eq!(next, c);
    }

    #[test]
    fn single_reversal_merges_two() {
        // 12x12 rectangle with a downward spike in the bottom edge.
        let mut text = String::from("E,E,E,S,N,");
        for _ in 0..9 {
            text.push_str("E,");
        }
        for _ in 0..12 {
            text.push_str("N,");
        }
        for _ in 0..12 {
            text.push_str("W,");
        }
        for _ in 0..12 {
            text.push_str("S,");
        }
        let c = chain(text.trim_end_matches(','));
        assert_eq!(c.len(), 50);
        let (next, plan, _) = run_plan(&c);
        assert_eq!(plan.actions.len(), 1);
        assert_eq!(plan.actions[0].k, 1);
        assert_eq!(next.len(), 48);
        assert!(next.turn_sequence().is_ok());
    }

    #[test]
    fn unit_square_ring_takes_no_action() {
        let c = chain("E,N,W,S");
        let (next, plan, _) = run_plan(&c);
        assert!(plan.is_empty());
        assert_eq!(next, c);
        assert!(c.fits_in_square(11));
    }

    #[test]
    fn type1_pair_applies_combined_action() {
        // 14x14 rectangle whose south-east corner is replaced by a two-tooth
        // wave: two k=2 modules sharing two robots.
        let mut text = String::new();
        for _ in 0..12 {
            text.push_str("E,");
        }
        text.push_str("N,E,S,E,N,");
        for _ in 0..13 {
            text.push_str("N,");
        }
        for _ in 0..14 {
            text.push_str("W,");
        }
        for _ in 0..14 {
            text.push_str("S,");
        }
        let c = chain(text.trim_end_matches(','));
        assert_eq!(c.len(), 58);
        let (next, plan, _) = run_plan(&c);
        assert_eq!(plan.actions.len(), 1);
        assert_eq!(plan.actions[0].kind, MergeKind::PairType1);
        assert_eq!(next.len(), 56);
        assert!(next.turn_sequence().is_ok());
    }

    #[test]
    fn three_tooth_comb_only_outermost_act() {
        // Three k=2 teeth in a row, pairwise type-1 overlapping; the middle
        // module is suppressed and the two outer ones act.
        let mut text = String::new();
        for _ in 0..12 {
            text.push_str("E,");
        }
        text.push_str("N,E,S,E,N,E,S,");
        for _ in 0..17 {
            text.push_str("E,");
        }
        for _ in 0..13 {
            text.push_str("N,");
        }
        for _ in 0..32 {
            text.push_str("W,");
        }
        for _ in 0..13 {
            text.push_str("S,");
        }
        let c = chain(text.trim_end_matches(','));
        assert_eq!(c.len(), 94);
        let (next, plan, _) = run_plan(&c);
        assert_eq!(plan.actions.len(), 2);
        assert!(plan
            .actions
            .iter()
            .all(|a| a.kind == MergeKind::Standard && a.k == 2));
        assert_eq!(next.len(), 90);
        assert!(next.turn_sequence().is_ok());
    }

    #[test]
    fn type2_pair_collapses_pinched_loop() {
        // A unit loop pinched at one point: two k=2 modules sharing three
        // robots. The combined action removes both whites and two blacks.
        let mut text = String::new();
        for _ in 0..13 {
            text.push_str("E,");
        }
        text.push_str("N,E,S,W,");
        for _ in 0..13 {
            text.push_str("S,");
        }
        for _ in 0..13 {
            text.push_str("W,");
        }
        for _ in 0..13 {
            text.push_str("N,");
        }
        let c = chain(text.trim_end_matches(','));
        assert_eq!(c.len(), 56);
        let (next, plan, _) = run_plan(&c);
        assert_eq!(plan.actions.len(), 1);
        assert_eq!(plan.actions[0].kind, MergeKind::PairType2);
        assert_eq!(next.len(), 52);
        assert!(next.turn_sequence().is_ok());
    }
}
