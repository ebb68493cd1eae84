//! Command-line front end for the closed-chain gathering simulator.
//!
//! Verbs: `run` (single simulation with trace/frame emission), `scale`
//! (linear-runtime report over a generator family), `enumerate-check`
//! (exhaustive small-chain lemma sweep), and `audit` (replay a trace file and
//! re-verify the chain invariants).
//!
//! Exit codes: 0 = gathered / all checks passed, 1 = invariant violation or
//! failed check, 2 = phase budget exhausted, 3 = usage or I/O error.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use chaingather_core::constants::Constants;
use chaingather_core::generate::{self, SplitMix64};
use chaingather_core::oracle::enumerate_small_chains;
use chaingather_core::oracle::{audit_log, check_lemma, enumeration_counts, LemmaId};
use chaingather_core::scheduler::{run_to_gathering, RunOptions, TraceRecord};
use chaingather_core::{ClosedChain, LoggedEvent};

#[derive(Parser)]
#[command(
    name = "chaingather",
    version,
    about = "Gathering simulator for closed robot chains on the grid"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation to gathering.
    Run(RunArgs),
    /// Run a generator family over increasing sizes and report scaling.
    Scale(ScaleArgs),
    /// Exhaustively check the structural lemmas on all small chains.
    EnumerateCheck(EnumArgs),
    /// Replay a trace file and re-verify every per-phase invariant.
    Audit(AuditArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Chain file: one line of comma-separated step letters N,E,S,W.
    #[arg(long, conflicts_with = "gen")]
    chain: Option<PathBuf>,
    /// Generator spec: rectangle:WxH | staircase:S | random:N.
    #[arg(long = "gen")]
    gen: Option<String>,
    /// Seed for the deterministic random generator.
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Constants profile (overridden by CHAINGATHER_PROFILE).
    #[arg(long, default_value = "default")]
    profile: String,
    /// Phase budget; defaults to 64*n + 1024.
    #[arg(long)]
    max_phases: Option<u64>,
    /// Write the trace as JSON Lines to this path.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write one SVG per sampled phase into this directory and print an
    /// ASCII render of sampled phases to stdout.
    #[arg(long)]
    frames: Option<PathBuf>,
    /// Continue with direct merges after gathering until n <= 2.
    #[arg(long)]
    finalize: bool,
    /// Verify the structural lemmas live; exit 1 on any violation.
    #[arg(long)]
    audit: bool,
}

#[derive(Args)]
struct ScaleArgs {
    /// Generator family: rectangle | staircase | random.
    #[arg(long, default_value = "rectangle")]
    family: String,
    /// Comma-separated robot counts, ascending.
    #[arg(long, default_value = "32,64,128,256,512,1024,2048")]
    sizes: String,
    #[arg(long, default_value = "default")]
    profile: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Write the CSV table to this path (also printed to stdout).
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Upper bound on gathered_phase / n accepted as linear.
    #[arg(long, default_value_t = 6.0)]
    ratio_bound: f64,
}

#[derive(Args)]
struct EnumArgs {
    /// Enumeration bound (combinatorial budget: at most 14).
    #[arg(long, default_value_t = 12)]
    nmax: usize,
    #[arg(long, default_value = "default")]
    profile: String,
}

#[derive(Args)]
struct AuditArgs {
    /// Trace file produced by `run --trace`.
    #[arg(long)]
    trace: PathBuf,
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run(args) => cmd_run(args),
        Command::Scale(args) => cmd_scale(args),
        Command::EnumerateCheck(args) => cmd_enumerate(args),
        Command::Audit(args) => cmd_audit(args),
    }
    .unwrap_or_else(|msg| {
        eprintln!("error: {msg}");
        ExitCode::from(3)
    })
}

fn profile_from(name: &str) -> Result<Constants, String> {
    let name = std::env::var("CHAINGATHER_PROFILE").unwrap_or_else(|_| name.to_string());
    Constants::profile(&name).map_err(|e| e.to_string())
}

fn load_chain(input: &InputArgs) -> Result<ClosedChain, String> {
    if let Some(path) = &input.chain {
        let text =
            std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let steps = ClosedChain::parse_steps(text.trim()).map_err(|e| e.to_string())?;
        return ClosedChain::build(&steps).map_err(|e| e.to_string());
    }
    let spec = input
        .gen
        .as_deref()
        .ok_or("provide --chain <file> or --gen <spec>")?;
    generate_chain(spec, input.seed)
}

fn generate_chain(spec: &str, seed: u64) -> Result<ClosedChain, String> {
    let (kind, param) = spec
        .split_once(':')
        .ok_or_else(|| format!("bad generator spec `{spec}`"))?;
    match kind {
        "rectangle" => {
            let (w, h) = param
                .split_once('x')
                .ok_or_else(|| format!("rectangle wants WxH, got `{param}`"))?;
            let w: u32 = w.parse().map_err(|_| "bad rectangle width")?;
            let h: u32 = h.parse().map_err(|_| "bad rectangle height")?;
            generate::rectangle(w, h).map_err(|e| e.to_string())
        }
        "staircase" => {
            let s: u32 = param.parse().map_err(|_| "bad staircase size")?;
            generate::staircase(s).map_err(|e| e.to_string())
        }
        "random" => {
            let n: usize = param.parse().map_err(|_| "bad random size")?;
            generate::random_loop(n, seed).map_err(|e| e.to_string())
        }
        other => Err(format!("unknown generator `{other}`")),
    }
}

/// Rectangle with perimeter `n` (as square as possible).
fn family_chain(family: &str, n: usize, seed: u64) -> Result<ClosedChain, String> {
    match family {
        "rectangle" => {
            if n % 2 != 0 || n < 8 {
                return Err(format!("rectangle family needs even n >= 8, got {n}"));
            }
            let w = (n / 4).max(1) as u32;
            let h = (n as u32 / 2).saturating_sub(w).max(1);
            generate::rectangle(w, h).map_err(|e| e.to_string())
        }
        "staircase" => {
            if n % 8 != 0 {
                return Err(format!("staircase family needs n divisible by 8, got {n}"));
            }
            generate::staircase((n / 8) as u32).map_err(|e| e.to_string())
        }
        "random" => generate::random_loop(n, seed).map_err(|e| e.to_string()),
        other => Err(format!("unknown family `{other}`")),
    }
}

fn cmd_run(args: RunArgs) -> Result<ExitCode, String> {
    let consts = profile_from(&args.profile)?;
    let chain = load_chain(&args.input)?;
    let n0 = chain.len();
    let options = RunOptions {
        max_phases: args.max_phases,
        finalize: args.finalize,
        audit: args.audit,
        locality_audit: args.audit,
    };

    let mut trace_file = match &args.trace {
        Some(path) => Some(BufWriter::new(
            File::create(path).map_err(|e| format!("{}: {e}", path.display()))?,
        )),
        None => None,
    };
    if let Some(dir) = &args.frames {
        std::fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    }
    let sample_every = (chaingather_core::default_max_phases(n0) / 256).max(1);
    let mut io_error: Option<String> = None;
    let mut sink = |record: &TraceRecord| {
        if let Some(f) = trace_file.as_mut() {
            let line = serde_json::to_string(record).expect("trace serializes");
            if let Err(e) = writeln!(f, "{line}") {
                io_error.get_or_insert(e.to_string());
            }
        }
        if let Some(dir) = &args.frames {
            if record.phase % sample_every == 0 {
                if let Err(e) = write_svg_frame(dir, record) {
                    io_error.get_or_insert(e);
                }
                println!("phase {} (n={})", record.phase, record.n);
                print!("{}", ascii_render(record));
            }
        }
    };
    let (_state, report) = run_to_gathering(chain, &consts, &options, Some(&mut sink))
        .map_err(|e| e.to_string())?;
    drop(trace_file);
    if let Some(e) = io_error {
        return Err(e);
    }

    println!(
        "{}",
        serde_json::to_string_pretty(&report).expect("report serializes")
    );
    println!(
        "# seed {} generator {} profile C={} K={} L={} V={} D={}",
        args.input.seed,
        SplitMix64::NAME,
        consts.collision,
        consts.k_max,
        consts.period,
        consts.view_radius,
        consts.init_depth
    );
    if args.audit && !report.invariant_violations.is_empty() {
        for v in &report.invariant_violations {
            eprintln!("violation: {v}");
        }
        return Ok(ExitCode::from(1));
    }
    if report.timeout {
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn write_svg_frame(dir: &Path, record: &TraceRecord) -> Result<(), String> {
    let path = dir.join(format!("phase-{:08}.svg", record.phase));
    let mut min = (i64::MAX, i64::MAX);
    let mut max = (i64::MIN, i64::MIN);
    for &(x, y) in &record.positions {
        min = (min.0.min(x), min.1.min(y));
        max = (max.0.max(x), max.1.max(y));
    }
    let scale = 10;
    let pad = 12;
    let width = (max.0 - min.0 + 1) * scale + 2 * pad;
    let height = (max.1 - min.1 + 1) * scale + 2 * pad;
    let map = |x: i64, y: i64| {
        // SVG y grows downward; the grid's north is up.
        ((x - min.0) * scale + pad, (max.1 - y) * scale + pad)
    };
    let merged = record
        .events
        .iter()
        .any(|e| matches!(e.event, chaingather_core::Event::Merge { .. }));
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">\n"
    ));
    svg.push_str("<polyline fill=\"none\" stroke=\"#888\" stroke-width=\"2\" points=\"");
    for &(x, y) in record.positions.iter().chain(record.positions.first()) {
        let (px, py) = map(x, y);
        svg.push_str(&format!("{px},{py} "));
    }
    svg.push_str("\"/>\n");
    for &(x, y) in &record.positions {
        let (px, py) = map(x, y);
        svg.push_str(&format!(
            "<circle cx=\"{px}\" cy=\"{py}\" r=\"3\" fill=\"{}\"/>\n",
            if merged { "#c0392b" } else { "#2c3e50" }
        ));
    }
    svg.push_str("</svg>\n");
    std::fs::write(&path, svg).map_err(|e| format!("{}: {e}", path.display()))
}

fn ascii_render(record: &TraceRecord) -> String {
    let mut min = (i64::MAX, i64::MAX);
    let mut max = (i64::MIN, i64::MIN);
    for &(x, y) in &record.positions {
        min = (min.0.min(x), min.1.min(y));
        max = (max.0.max(x), max.1.max(y));
    }
    let w = (max.0 - min.0 + 1) as usize;
    let h = (max.1 - min.1 + 1) as usize;
    if w > 160 || h > 60 {
        return format!("  (bounding box {w}x{h} too large to render)\n");
    }
    let mut grid = vec![vec![b' '; w]; h];
    for &(x, y) in &record.positions {
        let col = (x - min.0) as usize;
        let row = (max.1 - y) as usize;
        grid[row][col] = match grid[row][col] {
            b' ' => b'o',
            _ => b'*',
        };
    }
    let mut out = String::new();
    for row in grid {
        out.push_str(std::str::from_utf8(&row).unwrap());
        out.push('\n');
    }
    out
}

fn cmd_scale(args: ScaleArgs) -> Result<ExitCode, String> {
    let consts = profile_from(&args.profile)?;
    let sizes: Vec<usize> = args
        .sizes
        .split(',')
        .map(|s| s.trim().parse().map_err(|_| format!("bad size `{s}`")))
        .collect::<Result<_, _>>()?;
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err("sizes must be ascending".into());
    }
    let family = args.family.clone();
    let seed = args.seed;
    let results = chaingather_core::batch::map_batch(sizes, |n| {
        let chain = family_chain(&family, n, seed)?;
        run_to_gathering(chain, &consts, &RunOptions::default(), None)
            .map(|(_, report)| (n, report))
            .map_err(|e| format!("n={n}: {e}"))
    });

    let mut csv = String::from("n,gathered_phase,ratio\n");
    let mut rows = Vec::new();
    for r in results {
        let (n, report) = r?;
        let Some(g) = report.gathered_phase else {
            return Err(format!("n={n}: timeout after {} phases", report.phases_run));
        };
        let ratio = g as f64 / n as f64;
        csv.push_str(&format!("{n},{g},{ratio:.4}\n"));
        rows.push((n, g, ratio));
    }
    print!("{csv}");
    if let Some(path) = &args.csv {
        std::fs::write(path, &csv).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    let mut ok = true;
    for (n, _, ratio) in &rows {
        if *ratio > args.ratio_bound {
            println!(
                "FAIL n={n}: ratio {ratio:.3} exceeds bound {}",
                args.ratio_bound
            );
            ok = false;
        }
    }
    for pair in rows.windows(2) {
        let (n1, g1, _) = pair[0];
        let (n2, g2, _) = pair[1];
        if n2 == 2 * n1 && g1 > 0 {
            let doubling = g2 as f64 / g1 as f64;
            if doubling > 2.6 {
                println!("FAIL doubling {n1}->{n2}: {doubling:.3} exceeds 2.6");
                ok = false;
            }
        }
    }
    if ok {
        println!(
            "linearity holds: max ratio {:.3} <= {}, doubling ratios <= 2.6",
            rows.iter().map(|r| r.2).fold(0.0, f64::max),
            args.ratio_bound
        );
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(1))
    }
}

fn cmd_enumerate(args: EnumArgs) -> Result<ExitCode, String> {
    let consts = profile_from(&args.profile)?;
    let counts = enumeration_counts(args.nmax).map_err(|e| e.to_string())?;
    for (n, count) in &counts {
        println!("n={n}: {count} chains up to symmetry");
    }
    let chains = enumerate_small_chains(args.nmax).map_err(|e| e.to_string())?;
    let verdicts = chaingather_core::batch::map_batch(chains, |chain| {
        let mut failures = Vec::new();
        for lemma in [
            LemmaId::DecompositionTotal,
            LemmaId::SamesignVmPair,
            LemmaId::MergeProgress,
        ] {
            if let chaingather_core::oracle::Verdict::Counterexample(msg) =
                check_lemma(&chain, lemma, &consts)
            {
                failures.push(format!("{lemma:?}: {msg} [{}]", chain.to_step_text()));
            }
        }
        failures
    });
    let mut total = 0usize;
    for failure in verdicts.into_iter().flatten() {
        println!("counterexample: {failure}");
        total += 1;
    }
    if total == 0 {
        println!("all lemma checks passed");
        Ok(ExitCode::SUCCESS)
    } else {
        println!("{total} counterexamples");
        Ok(ExitCode::from(1))
    }
}

fn cmd_audit(args: AuditArgs) -> Result<ExitCode, String> {
    let file = File::open(&args.trace).map_err(|e| format!("{}: {e}", args.trace.display()))?;
    let reader = BufReader::new(file);
    let mut violations = Vec::new();
    let mut prev_n: Option<usize> = None;
    let mut events: Vec<LoggedEvent> = Vec::new();
    let mut records = 0usize;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| e.to_string())?;
        if line.trim().is_empty() {
            continue;
        }
        let record: TraceRecord =
            serde_json::from_str(&line).map_err(|e| format!("line {}: {e}", lineno + 1))?;
        records += 1;
        if record.n != record.positions.len() {
            violations.push(format!("phase {}: n != positions", record.phase));
        }
        let m = record.positions.len();
        for i in 0..m {
            let (x1, y1) = record.positions[i];
            let (x2, y2) = record.positions[(i + 1) % m];
            if (x1 - x2).abs() + (y1 - y2).abs() > 1 {
                violations.push(format!("phase {}: neighbor {i} too far", record.phase));
            }
        }
        if let Some(prev) = prev_n {
            if record.n > prev {
                violations.push(format!("phase {}: robot count increased", record.phase));
            }
        }
        prev_n = Some(record.n);
        events.extend(record.events.iter().cloned());
    }
    violations.extend(audit_log(&events));
    println!("replayed {records} records, {} violations", violations.len());
    for v in &violations {
        println!("violation: {v}");
    }
    if violations.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(1))
    }
}
