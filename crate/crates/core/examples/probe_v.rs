use chaingather_core::constants::Constants;
use chaingather_core::generate::{random_loop, rectangle, staircase};
use chaingather_core::scheduler::{run_to_gathering, RunOptions};

fn main() {
    let consts = Constants { k_max: 4, ..Constants::DEFAULT };
    let opts = RunOptions { audit: true, locality_audit: true, ..RunOptions::default() };
    for n in [32usize, 64, 128, 256] {
        let side = (n / 4) as u32;
        let (_, r) = run_to_gathering(rectangle(side, side).unwrap(), &consts, &opts, None).unwrap();
        if !r.invariant_violations.is_empty() {
            println!("rect n={n}: {:?}", &r.invariant_violations[..r.invariant_violations.len().min(3)]);
        }
    }
    for s in [4u32, 8, 16, 32] {
        let (_, r) = run_to_gathering(staircase(s).unwrap(), &consts, &opts, None).unwrap();
        if !r.invariant_violations.is_empty() {
            println!("stair s={s}: {:?}", &r.invariant_violations[..r.invariant_violations.len().min(3)]);
        }
    }
    for seed in 0..30u64 {
        let n = 16 + 2 * ((seed * 7919) % 240) as usize;
        let (_, r) = run_to_gathering(random_loop(n, seed).unwrap(), &consts, &opts, None).unwrap();
        if !r.invariant_violations.is_empty() {
            println!("rand seed={seed} n={n}: {:?}", &r.invariant_violations[..r.invariant_violations.len().min(3)]);
        }
    }
    println!("done");
}
