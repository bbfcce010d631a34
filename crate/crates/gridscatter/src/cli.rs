//! Front-end operations behind the command line: initial-configuration
//! generation and ingestion, ASCII rendering, and experiment sweeps.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::grid::{Configuration, GridError, Position};
use crate::sim::{run_with_spec, RunError, RunStatus};
use crate::verifier;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot place {n} robots in a {side}x{side} box ({capacity} nodes)")]
    BoxTooSmall { n: usize, side: i64, capacity: i64 },
    #[error("box half-width must be at least 0")]
    BadBox,
    #[error("need at least one robot")]
    NoRobots,
    #[error("initial configuration line {line}: {msg}")]
    BadInitialLine { line: usize, msg: String },
    #[error("initial configuration is empty")]
    EmptyInitial,
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
}

/// Samples `n` distinct nodes uniformly without replacement from the
/// square `[-box, box]^2`, deterministically from the seed. Ids follow
/// sample order.
pub fn generate_initial(n: usize, half_width: i64, seed: u64) -> Result<Configuration, CliError> {
    if n == 0 {
        return Err(CliError::NoRobots);
    }
    if half_width < 0 {
        return Err(CliError::BadBox);
    }
    let side = 2 * half_width + 1;
    let capacity = side.saturating_mul(side);
    if (n as i64) > capacity {
        return Err(CliError::BoxTooSmall { n, side, capacity });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let positions: Vec<Position> = if capacity <= 1 << 16 {
        // small boxes: shuffle the full enumeration for exact uniformity
        let mut nodes: Vec<Position> = (-half_width..=half_width)
            .flat_map(|y| (-half_width..=half_width).map(move |x| Position::new(x, y)))
            .collect();
        let (picked, _) = nodes.partial_shuffle(&mut rng, n);
        picked.to_vec()
    } else {
        // huge boxes: rejection sampling terminates fast at low density
        let mut seen = BTreeSet::new();
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            let p = Position::new(
                rng.gen_range(-half_width..=half_width),
                rng.gen_range(-half_width..=half_width),
            );
            if seen.insert(p) {
                out.push(p);
            }
        }
        out
    };
    Ok(Configuration::from_positions(positions)?)
}

/// Parses the initial-configuration format: one `x y` pair per line,
/// `#`-prefixed comment lines skipped, ids assigned by line order.
pub fn parse_initial_text(text: &str) -> Result<Configuration, CliError> {
    let mut positions = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(CliError::BadInitialLine {
                line: no + 1,
                msg: format!("expected `x y`, got `{line}`"),
            });
        }
        let x: i64 = toks[0].parse().map_err(|_| CliError::BadInitialLine {
            line: no + 1,
            msg: format!("bad x `{}`", toks[0]),
        })?;
        let y: i64 = toks[1].parse().map_err(|_| CliError::BadInitialLine {
            line: no + 1,
            msg: format!("bad y `{}`", toks[1]),
        })?;
        positions.push(Position::new(x, y));
    }
    if positions.is_empty() {
        return Err(CliError::EmptyInitial);
    }
    Ok(Configuration::from_positions(positions)?)
}

pub fn parse_initial(path: &Path) -> Result<Configuration, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.display().to_string(),
        source,
    })?;
    parse_initial_text(&text)
}

/// Renders a configuration as a character grid: `R` on robot nodes, `.`
/// elsewhere, north at the top, each line prefixed with its y value.
pub fn render_ascii(c: &Configuration, viewport: Option<(Position, Position)>) -> String {
    let positions = c.position_set();
    let (lo, hi) = viewport.unwrap_or_else(|| {
        let xs: Vec<i64> = positions.iter().map(|p| p.x).collect();
        let ys: Vec<i64> = positions.iter().map(|p| p.y).collect();
        (
            Position::new(*xs.iter().min().unwrap(), *ys.iter().min().unwrap()),
            Position::new(*xs.iter().max().unwrap(), *ys.iter().max().unwrap()),
        )
    });
    let label_width = (lo.y..=hi.y)
        .map(|y| y.to_string().len())
        .max()
        .unwrap_or(1);
    let mut out = String::new();
    for y in (lo.y..=hi.y).rev() {
        let cells: Vec<&str> = (lo.x..=hi.x)
            .map(|x| {
                if positions.contains(&Position::new(x, y)) {
                    "R"
                } else {
                    "."
                }
            })
            .collect();
        let _ = writeln!(out, "{:>label_width$} {}", y, cells.join(" "));
    }
    out
}

/// One cell of a sweep: a single seeded run plus its verification summary.
#[derive(Debug, Clone)]
pub struct SweepCell {
    pub n: usize,
    pub seed: u64,
    pub status: Option<RunStatus>,
    pub rounds: u32,
    pub moves: u64,
    pub violations: usize,
    pub conflicts: usize,
    pub oracle_match: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SweepSummary {
    pub cells: Vec<SweepCell>,
}

impl SweepSummary {
    pub fn converged(&self) -> usize {
        self.cells
            .iter()
            .filter(|c| matches!(c.status, Some(RunStatus::Converged { .. })))
            .count()
    }

    pub fn total_violations(&self) -> usize {
        self.cells.iter().map(|c| c.violations).sum()
    }

    pub fn all_oracle_match(&self) -> bool {
        self.cells.iter().all(|c| c.oracle_match)
    }

    /// Machine-readable rendering: one line per run, aggregate footer.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.cells {
            let status = match (&c.status, &c.error) {
                (_, Some(e)) => format!("error({e})"),
                (Some(RunStatus::Converged { .. }), _) => "converged".into(),
                (Some(RunStatus::MaxRoundsExceeded), _) => "maxrounds".into(),
                (Some(RunStatus::ViolationHalt), _) => "violation".into(),
                (None, None) => "unknown".into(),
            };
            let _ = writeln!(
                out,
                "run n={} seed={} status={} rounds={} moves={} violations={} conflicts={} oracle={}",
                c.n,
                c.seed,
                status,
                c.rounds,
                c.moves,
                c.violations,
                c.conflicts,
                if c.oracle_match { "match" } else { "mismatch" },
            );
        }
        let mut rounds: Vec<u32> = self
            .cells
            .iter()
            .filter(|c| matches!(c.status, Some(RunStatus::Converged { .. })))
            .map(|c| c.rounds)
            .collect();
        rounds.sort_unstable();
        let (min, med, max) = if rounds.is_empty() {
            (0, 0, 0)
        } else {
            (
                rounds[0],
                rounds[rounds.len() / 2],
                rounds[rounds.len() - 1],
            )
        };
        let _ = writeln!(
            out,
            "summary runs={} converged={} violations={} conflicts={} oracle_matches={} rounds_min={} rounds_median={} rounds_max={} moves_total={}",
            self.cells.len(),
            self.converged(),
            self.total_violations(),
            self.cells.iter().map(|c| c.conflicts).sum::<usize>(),
            self.cells.iter().filter(|c| c.oracle_match).count(),
            min,
            med,
            max,
            self.cells.iter().map(|c| c.moves).sum::<u64>(),
        );
        out
    }
}

/// Runs and verifies one cell per `(n, seed)` pair: generate, run,
/// compare against the expected-outcome oracle, count violations.
/// Failures are recorded in their cell and never abort the sweep.
pub fn sweep(
    n_values: &[usize],
    seeds: &[u64],
    half_width: i64,
    strategy_spec: &str,
    max_rounds: u32,
    strict: bool,
) -> SweepSummary {
    let mut cells = Vec::new();
    for &n in n_values {
        for &seed in seeds {
            cells.push(sweep_cell(
                n,
                seed,
                half_width,
                strategy_spec,
                max_rounds,
                strict,
            ));
        }
    }
    SweepSummary { cells }
}

fn sweep_cell(
    n: usize,
    seed: u64,
    half_width: i64,
    strategy_spec: &str,
    max_rounds: u32,
    strict: bool,
) -> SweepCell {
    let mut cell = SweepCell {
        n,
        seed,
        status: None,
        rounds: 0,
        moves: 0,
        violations: 0,
        conflicts: 0,
        oracle_match: false,
        error: None,
    };
    let initial = match generate_initial(n, half_width, seed) {
        Ok(c) => c,
        Err(e) => {
            cell.error = Some(e.to_string());
            return cell;
        }
    };
    match run_with_spec(&initial, strategy_spec, max_rounds, seed, strict) {
        Ok((outcome, records)) => {
            cell.status = Some(outcome.status);
            cell.rounds = match outcome.status {
                RunStatus::Converged { rounds } => rounds,
                _ => records.len() as u32,
            };
            cell.moves = outcome.total_moves;
            cell.violations = records.iter().map(|r| r.violations.len()).sum();
            cell.conflicts = records.iter().map(|r| r.conflicts.len()).sum();
            cell.oracle_match = matches!(outcome.status, RunStatus::Converged { .. })
                && outcome.final_config.position_set() == verifier::expected_final(&initial);
        }
        Err(e) => {
            let msg = match e {
                RunError::Strategy(e) => e.to_string(),
                RunError::Sim(e) => e.to_string(),
            };
            cell.error = Some(msg);
        }
    }
    cell
}
