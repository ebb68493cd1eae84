use chaingather_core::batch::map_batch;
use chaingather_core::constants::Constants;
use chaingather_core::generate::{random_loop, rectangle, staircase};
use chaingather_core::scheduler::{run_to_gathering, RunOptions};

fn main() {
    let consts = Constants::DEFAULT;
    let opts = RunOptions { audit: true, locality_audit: true, ..RunOptions::default() };
    let t0 = std::time::Instant::now();

    // Criterion 1 family.
    for n in [32usize, 64, 128, 256, 512, 1024, 2048] {
        let side = (n / 4) as u32;
        let t = std::time::Instant::now();
        let (_, r) = run_to_gathering(rectangle(side, side).unwrap(), &consts, &opts, None).unwrap();
        println!("rect n={:5} gathered={:?} ratio={:.3} viol={} wall={:.2?}",
            n, r.gathered_phase, r.gathered_phase.unwrap_or(0) as f64 / n as f64,
            r.invariant_violations.len(), t.elapsed());
    }

    // Criterion 3/4/5 suite: >= 100 random loops with n <= 512.
    let jobs: Vec<(usize, u64)> = (0..120u64).map(|seed| {
        let n = 16 + 2 * ((seed * 7919 + 13) % 249) as usize; // 16..512
        (n, seed)
    }).collect();
    let results = map_batch(jobs, |(n, seed)| {
        let chain = random_loop(n, seed).unwrap();
        let opts = RunOptions { audit: true, locality_audit: true, ..RunOptions::default() };
        let (_, r) = run_to_gathering(chain, &consts, &opts, None).unwrap();
        (n, seed, r)
    });
    let mut viol = 0usize;
    let mut timeouts = 0usize;
    let mut worst: f64 = 0.0;
    for (n, seed, r) in &results {
        viol += r.invariant_violations.len();
        if r.timeout { timeouts += 1; println!("TIMEOUT n={n} seed={seed}"); }
        if let Some(g) = r.gathered_phase { worst = worst.max(g as f64 / *n as f64); }
        if !r.invariant_violations.is_empty() {
            println!("n={n} seed={seed}: {:?}", &r.invariant_violations[..r.invariant_violations.len().min(2)]);
        }
    }
    println!("random x{}: viol={viol} timeouts={timeouts} worst_ratio={worst:.2}", results.len());

    for s in [2u32, 4, 8, 16, 32, 64] {
        let (_, r) = run_to_gathering(staircase(s).unwrap(), &consts, &opts, None).unwrap();
        assert!(!r.timeout, "staircase {s} timed out");
        viol += r.invariant_violations.len();
        if !r.invariant_violations.is_empty() {
            println!("stair s={s}: {:?}", &r.invariant_violations[..2.min(r.invariant_violations.len())]);
        }
    }
    println!("total violations={viol} wall={:.1?}", t0.elapsed());
}
