use chaingather_core::constants::Constants;
use chaingather_core::events::Event;
use chaingather_core::generate::random_loop;
use chaingather_core::scheduler::{step_phase, SimState};
use chaingather_core::shape::match_merge_modules;

fn main() {
    let consts = Constants::DEFAULT;
    let chain = random_loop(440, 62).unwrap();
    let mut state = SimState::new(chain);
    for p in 0..354 {
        step_phase(&mut state, &consts).unwrap();
        if [320, 352].contains(&(p + 1)) {
            println!("--- phase {} n={} matches={} runs={} ---", p + 1, state.chain.len(),
                match_merge_modules(&state.chain, consts.k_max).len(), state.runs.active_count());
            let turns = state.chain.turn_sequence().unwrap();
            let s: String = turns.iter().map(|t| match t {
                chaingather_core::geom::Turn::Left => 'L',
                chaingather_core::geom::Turn::Right => 'R',
                chaingather_core::geom::Turn::Straight => '.',
                chaingather_core::geom::Turn::UTurn => 'U',
            }).collect();
            println!("turns: {s}");
            for r in state.runs.runs().filter(|r| r.alive) {
                println!("  run {:?} dir {} birth {} last_move {} at {:?} pair {:?}", r.id, r.dir, r.birth, r.last_move,
                    state.chain.index_of_tag(r.id), r.pair);
            }
        }
    }
    for e in &state.log {
        if e.phase >= 320 && e.phase <= 353 {
            match &e.event {
                Event::RunStarted { run, robot_index, dir, .. } => println!("p{} start {run} at {robot_index} dir {dir}", e.phase),
                Event::RunStopped { run, reason, .. } => println!("p{} stop {run} {reason:?}", e.phase),
                Event::GoodPair { pair, good, .. } => println!("p{} pair {pair} good={good}", e.phase),
                Event::Merge { k, removed, during_cleanup, .. } => println!("p{} merge k={k} removed={removed} cleanup={during_cleanup}", e.phase),
                _ => {}
            }
        }
    }
}
