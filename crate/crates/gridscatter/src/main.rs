use std::collections::BTreeMap;
use std::error::Error;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gridscatter::cli::{generate_initial, parse_initial, render_ascii, sweep};
use gridscatter::sim::{run_with_spec, RunStatus};
use gridscatter::trace::{parse_trace, trace_bytes, verify_trace, TraceMeta};
use gridscatter::{Configuration, Position, RobotId};

#[derive(Parser)]
#[command(
    name = "gridscatter",
    about = "Simulate and verify oblivious robots scattering onto alternate grid nodes",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and emit its trace
    Run(RunArgs),
    /// Replay a trace and re-check every invariant
    Verify { trace: PathBuf },
    /// Run a seeded grid of simulations and print a summary table
    Sweep(SweepArgs),
    /// Draw the configuration reached by a trace
    Render {
        trace: PathBuf,
        /// Draw the state after this round instead of the final one (0 = initial)
        #[arg(long)]
        round: Option<u32>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Number of robots to place at random (conflicts with --initial)
    #[arg(long, conflicts_with = "initial")]
    n: Option<usize>,
    /// Seed for placement and scheduling
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Half-width of the sampling square for generated placements
    #[arg(long = "box", default_value_t = 15)]
    half_width: i64,
    /// Activation strategy: fsync | ssync:p=<prob>,w=<window> | roundrobin | scripted:<path>
    #[arg(long, default_value = "fsync")]
    strategy: String,
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u32).range(1..))]
    max_rounds: u32,
    /// Read the initial configuration from a file instead of generating one
    #[arg(long)]
    initial: Option<PathBuf>,
    /// Write the trace here instead of stdout
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Halt on the first verifier violation (default for single runs)
    #[arg(long, conflicts_with = "no_strict")]
    strict: bool,
    /// Keep running and record violations instead of halting
    #[arg(long)]
    no_strict: bool,
    /// Draw the final configuration after the run
    #[arg(long)]
    render: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Robot counts: a single value `8` or an inclusive range `1..30`
    #[arg(long, default_value = "1..30")]
    n: String,
    /// Seeds 1..=k per robot count
    #[arg(long, default_value_t = 10)]
    seeds: u64,
    #[arg(long = "box", default_value_t = 15)]
    half_width: i64,
    #[arg(long, default_value = "fsync")]
    strategy: String,
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u32).range(1..))]
    max_rounds: u32,
    /// Halt individual runs on the first violation (off by default: sweeps collect)
    #[arg(long)]
    strict: bool,
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, Box<dyn Error>> {
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Verify { trace } => cmd_verify(trace),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Render { trace, round } => cmd_render(trace, round),
    }
}

fn cmd_run(args: RunArgs) -> Result<ExitCode, Box<dyn Error>> {
    let initial = match (&args.n, &args.initial) {
        (Some(n), None) => generate_initial(*n, args.half_width, args.seed)?,
        (None, Some(path)) => parse_initial(path)?,
        (None, None) => return Err("pass exactly one of --n or --initial".into()),
        (Some(_), Some(_)) => unreachable!("clap rejects the combination"),
    };
    // single runs halt on violations unless told otherwise; --strict is
    // accepted for symmetry with sweep
    let strict = args.strict || !args.no_strict;
    let (outcome, records) =
        run_with_spec(&initial, &args.strategy, args.max_rounds, args.seed, strict)?;
    let meta = TraceMeta::for_run(&initial, &args.strategy, args.seed);
    let bytes = trace_bytes(&meta, &initial, &records, &outcome);
    match &args.trace {
        Some(path) => {
            File::create(path)?.write_all(&bytes)?;
            eprintln!(
                "trace written to {} ({} rounds, {} moves)",
                path.display(),
                records.len(),
                outcome.total_moves
            );
        }
        None => std::io::stdout().write_all(&bytes)?,
    }
    if args.render {
        println!("{}", render_ascii(&outcome.final_config, None));
    }
    Ok(match outcome.status {
        RunStatus::Converged { .. } => ExitCode::SUCCESS,
        RunStatus::MaxRoundsExceeded => ExitCode::from(2),
        RunStatus::ViolationHalt => ExitCode::from(3),
    })
}

fn cmd_verify(path: PathBuf) -> Result<ExitCode, Box<dyn Error>> {
    let parsed = parse_trace(BufReader::new(File::open(&path)?))?;
    let report = verify_trace(&parsed)?;
    println!(
        "replayed {} rounds, {} moves, final formation reached: {}",
        report.rounds, report.moves, report.final_is_final
    );
    for v in &report.recomputed {
        println!("recomputed violation: {v}");
    }
    for (kind, round) in &report.recorded {
        println!("recorded violation: {kind} round={round}");
    }
    if !report.verdicts_match {
        println!("verdict mismatch between recorded and replayed violations");
    }
    if !report.end_consistent {
        println!("end line does not match the replayed run");
    }
    if report.ok() {
        println!("verify status=ok");
        Ok(ExitCode::SUCCESS)
    } else {
        println!("verify status=mismatch");
        Ok(ExitCode::from(2))
    }
}

fn cmd_sweep(args: SweepArgs) -> Result<ExitCode, Box<dyn Error>> {
    let n_values = parse_n_range(&args.n)?;
    let seeds: Vec<u64> = (1..=args.seeds).collect();
    let summary = sweep(
        &n_values,
        &seeds,
        args.half_width,
        &args.strategy,
        args.max_rounds,
        args.strict,
    );
    print!("{}", summary.render());
    let clean = summary.converged() == summary.cells.len()
        && summary.total_violations() == 0
        && summary.all_oracle_match();
    Ok(if clean {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn cmd_render(path: PathBuf, round: Option<u32>) -> Result<ExitCode, Box<dyn Error>> {
    let parsed = parse_trace(BufReader::new(File::open(&path)?))?;
    let mut positions: BTreeMap<RobotId, Position> = parsed.initial.iter().copied().collect();
    for r in &parsed.rounds {
        if let Some(stop) = round {
            if r.round > stop {
                break;
            }
        }
        for m in &r.moves {
            positions.insert(m.id, m.to);
        }
    }
    let config = Configuration::new(positions)?;
    print!("{}", render_ascii(&config, None));
    Ok(ExitCode::SUCCESS)
}

fn parse_n_range(spec: &str) -> Result<Vec<usize>, Box<dyn Error>> {
    if let Some((a, b)) = spec.split_once("..") {
        let lo: usize = a.trim().parse()?;
        let hi: usize = b.trim().parse()?;
        if lo == 0 || hi < lo {
            return Err(format!("bad robot-count range `{spec}`").into());
        }
        Ok((lo..=hi).collect())
    } else {
        let n: usize = spec.trim().parse()?;
        if n == 0 {
            return Err("robot count must be positive".into());
        }
        Ok(vec![n])
    }
}
