use chaingather_core::constants::Constants;
use chaingather_core::generate::{random_loop, rectangle, staircase};
use chaingather_core::scheduler::{run_to_gathering, RunOptions};

fn main() {
    for k in [4u32, 5, 6, 8] {
        let consts = Constants { k_max: k, ..Constants::DEFAULT };
        consts.validate().unwrap();
        let opts = RunOptions { audit: true, locality_audit: true, ..RunOptions::default() };
        print!("K={k}: phases:");
        let mut prev: Option<u64> = None;
        let mut viol = 0usize;
        let mut max_ratio: f64 = 0.0;
        let mut max_doubling: f64 = 0.0;
        for n in [32usize, 64, 128, 256, 512, 1024] {
            let side = (n / 4) as u32;
            let chain = rectangle(side, side).unwrap();
            let (_, r) = run_to_gathering(chain, &consts, &opts, None).unwrap();
            let g = r.gathered_phase.unwrap_or(999999);
            print!(" {g}");
            viol += r.invariant_violations.len();
            max_ratio = max_ratio.max(g as f64 / n as f64);
            if let Some(p) = prev {
                if p > 0 { max_doubling = max_doubling.max(g as f64 / p as f64); }
            }
            prev = Some(g);
        }
        // staircases + random loops for violations
        for s in [4u32, 8, 16, 32] {
            let (_, r) = run_to_gathering(staircase(s).unwrap(), &consts, &opts, None).unwrap();
            viol += r.invariant_violations.len();
            if r.timeout { print!(" STAIR-TIMEOUT({s})"); }
        }
        for seed in 0..30u64 {
            let n = 16 + 2 * ((seed * 7919) % 240) as usize;
            let (_, r) = run_to_gathering(random_loop(n, seed).unwrap(), &consts, &opts, None).unwrap();
            viol += r.invariant_violations.len();
            if r.timeout { print!(" RAND-TIMEOUT({seed})"); }
        }
        println!("  max_ratio={max_ratio:.2} max_doubling={max_doubling:.2} violations={viol}");
    }
}
