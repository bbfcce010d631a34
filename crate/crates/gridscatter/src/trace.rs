//! The line-oriented trace format: byte-exact emission, parsing, and
//! replay verification.
//!
//! A trace carries enough to reconstruct every configuration of a run,
//! so the `verify` subcommand can re-derive all verifier verdicts from
//! the `init` and `move` lines alone.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::compute::{find_dimension, Action, CaseLabel, MoveDecision};
use crate::grid::{Configuration, Position, RobotId};
use crate::sim::{RoundRecord, RunOutcome, RunStatus};
use crate::verifier::{self, ViolationEvent, ViolationKind};

pub const TRACE_HEADER: &str = "# gridscatter-trace v1";

#[derive(Debug, Error)]
pub enum TraceError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("missing or wrong header line, expected `{TRACE_HEADER}`")]
    BadHeader,
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("trace has no meta line")]
    MissingMeta,
    #[error("trace has no end line")]
    MissingEnd,
    #[error("replay: {0}")]
    Replay(String),
}

fn bad(line: usize, msg: impl Into<String>) -> TraceError {
    TraceError::Malformed {
        line,
        msg: msg.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceMeta {
    pub n: usize,
    pub rc: i64,
    pub d: i64,
    pub y_max: i64,
    pub x_min: i64,
    pub strategy: String,
    pub seed: u64,
}

impl TraceMeta {
    pub fn for_run(initial: &Configuration, strategy: &str, seed: u64) -> Self {
        let dims = find_dimension(initial.len());
        Self {
            n: initial.len(),
            rc: dims.rc,
            d: dims.d,
            y_max: initial.y_max(),
            x_min: initial.x_min(),
            strategy: strategy.to_string(),
            seed,
        }
    }
}

fn status_str(status: RunStatus) -> &'static str {
    match status {
        RunStatus::Converged { .. } => "converged",
        RunStatus::MaxRoundsExceeded => "maxrounds",
        RunStatus::ViolationHalt => "violation",
    }
}

fn end_rounds(status: RunStatus, record_count: usize) -> u32 {
    match status {
        RunStatus::Converged { rounds } => rounds,
        _ => record_count as u32,
    }
}

/// Writes a run as a trace. Identical inputs produce identical bytes.
pub fn write_trace<W: Write>(
    mut w: W,
    meta: &TraceMeta,
    initial: &Configuration,
    records: &[RoundRecord],
    outcome: &RunOutcome,
) -> io::Result<()> {
    writeln!(w, "{TRACE_HEADER}")?;
    writeln!(
        w,
        "meta n={} rc={} d={} ymax={} xmin={} strategy={} seed={}",
        meta.n, meta.rc, meta.d, meta.y_max, meta.x_min, meta.strategy, meta.seed
    )?;
    for (id, p) in initial.iter() {
        writeln!(w, "init {} {} {}", id, p.x, p.y)?;
    }
    // the source of each move is recovered by replaying prior rounds
    let mut positions: BTreeMap<RobotId, Position> = initial.as_map().clone();
    for rec in records {
        let ids: Vec<String> = rec.activated.iter().map(|id| id.to_string()).collect();
        writeln!(w, "round {} activated={}", rec.round, ids.join(","))?;
        for (&id, decision) in &rec.decisions {
            match rec.applied.get(&id) {
                Some(&to) => {
                    let from = positions[&id];
                    writeln!(
                        w,
                        "move {} {} {} -> {} {} case={}",
                        id, from.x, from.y, to.x, to.y, decision.case
                    )?;
                }
                None => {
                    writeln!(w, "wait {} case={}", id, decision.case)?;
                }
            }
        }
        for (&id, &to) in &rec.applied {
            positions.insert(id, to);
        }
        for v in &rec.violations {
            writeln!(w, "violation {v}")?;
        }
    }
    writeln!(
        w,
        "end status={} rounds={} moves={}",
        status_str(outcome.status),
        end_rounds(outcome.status, records.len()),
        outcome.total_moves
    )?;
    Ok(())
}

/// Renders a run to a byte buffer; handy for digest comparisons.
pub fn trace_bytes(
    meta: &TraceMeta,
    initial: &Configuration,
    records: &[RoundRecord],
    outcome: &RunOutcome,
) -> Vec<u8> {
    let mut out = Vec::new();
    write_trace(&mut out, meta, initial, records, outcome).expect("writing to memory");
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedMove {
    pub id: RobotId,
    pub from: Position,
    pub to: Position,
    pub case: CaseLabel,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedRound {
    pub round: u32,
    pub activated: BTreeSet<RobotId>,
    pub moves: Vec<ParsedMove>,
    pub waits: Vec<(RobotId, CaseLabel)>,
    pub violations: Vec<(ViolationKind, u32, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedEnd {
    pub status: String,
    pub rounds: u32,
    pub moves: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedTrace {
    pub meta: TraceMeta,
    pub initial: Vec<(RobotId, Position)>,
    pub rounds: Vec<ParsedRound>,
    pub end: ParsedEnd,
}

fn field<'a>(tok: &'a str, key: &str, line: usize) -> Result<&'a str, TraceError> {
    tok.strip_prefix(key)
        .and_then(|rest| rest.strip_prefix('='))
        .ok_or_else(|| bad(line, format!("expected `{key}=...`, got `{tok}`")))
}

/// Parses a trace from a reader.
pub fn parse_trace<R: BufRead>(reader: R) -> Result<ParsedTrace, TraceError> {
    let mut meta = None;
    let mut initial = Vec::new();
    let mut rounds: Vec<ParsedRound> = Vec::new();
    let mut end = None;
    let mut saw_header = false;

    for (no, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = no + 1;
        if lineno == 1 {
            if line != TRACE_HEADER {
                return Err(TraceError::BadHeader);
            }
            saw_header = true;
            continue;
        }
        let trimmed = line.trim_end();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut toks = trimmed.split(' ');
        let tag = toks.next().unwrap_or_default();
        match tag {
            "meta" => {
                let rest: Vec<&str> = toks.collect();
                if rest.len() != 7 {
                    return Err(bad(lineno, "meta line needs 7 fields"));
                }
                let parse_i = |t: &str, k: &str| -> Result<i64, TraceError> {
                    field(t, k, lineno)?
                        .parse()
                        .map_err(|_| bad(lineno, format!("bad integer in `{t}`")))
                };
                meta = Some(TraceMeta {
                    n: parse_i(rest[0], "n")? as usize,
                    rc: parse_i(rest[1], "rc")?,
                    d: parse_i(rest[2], "d")?,
                    y_max: parse_i(rest[3], "ymax")?,
                    x_min: parse_i(rest[4], "xmin")?,
                    strategy: field(rest[5], "strategy", lineno)?.to_string(),
                    seed: field(rest[6], "seed", lineno)?
                        .parse()
                        .map_err(|_| bad(lineno, "bad seed"))?,
                });
            }
            "init" => {
                let rest: Vec<&str> = toks.collect();
                if rest.len() != 3 {
                    return Err(bad(lineno, "init line needs id, x, y"));
                }
                let id: u32 = rest[0].parse().map_err(|_| bad(lineno, "bad robot id"))?;
                let x: i64 = rest[1].parse().map_err(|_| bad(lineno, "bad x"))?;
                let y: i64 = rest[2].parse().map_err(|_| bad(lineno, "bad y"))?;
                initial.push((RobotId(id), Position::new(x, y)));
            }
            "round" => {
                let rest: Vec<&str> = toks.collect();
                if rest.len() != 2 {
                    return Err(bad(lineno, "round line needs number and activation set"));
                }
                let round: u32 = rest[0].parse().map_err(|_| bad(lineno, "bad round"))?;
                let mut activated = BTreeSet::new();
                for tok in field(rest[1], "activated", lineno)?.split(',') {
                    let id: u32 = tok.parse().map_err(|_| bad(lineno, "bad robot id"))?;
                    activated.insert(RobotId(id));
                }
                rounds.push(ParsedRound {
                    round,
                    activated,
                    moves: Vec::new(),
                    waits: Vec::new(),
                    violations: Vec::new(),
                });
            }
            "move" => {
                let rest: Vec<&str> = toks.collect();
                if rest.len() != 7 || rest[3] != "->" {
                    return Err(bad(lineno, "move line needs `id x1 y1 -> x2 y2 case=...`"));
                }
                let current = rounds
                    .last_mut()
                    .ok_or_else(|| bad(lineno, "move line before any round"))?;
                let id: u32 = rest[0].parse().map_err(|_| bad(lineno, "bad robot id"))?;
                let nums: Result<Vec<i64>, _> = [rest[1], rest[2], rest[4], rest[5]]
                    .iter()
                    .map(|t| t.parse())
                    .collect();
                let nums = nums.map_err(|_| bad(lineno, "bad coordinate"))?;
                let case: CaseLabel = field(rest[6], "case", lineno)?
                    .parse()
                    .map_err(|e: String| bad(lineno, e))?;
                current.moves.push(ParsedMove {
                    id: RobotId(id),
                    from: Position::new(nums[0], nums[1]),
                    to: Position::new(nums[2], nums[3]),
                    case,
                });
            }
            "wait" => {
                let rest: Vec<&str> = toks.collect();
                if rest.len() != 2 {
                    return Err(bad(lineno, "wait line needs `id case=...`"));
                }
                let current = rounds
                    .last_mut()
                    .ok_or_else(|| bad(lineno, "wait line before any round"))?;
                let id: u32 = rest[0].parse().map_err(|_| bad(lineno, "bad robot id"))?;
                let case: CaseLabel = field(rest[1], "case", lineno)?
                    .parse()
                    .map_err(|e: String| bad(lineno, e))?;
                current.waits.push((RobotId(id), case));
            }
            "violation" => {
                let rest: Vec<&str> = toks.collect();
                if rest.len() < 2 {
                    return Err(bad(lineno, "violation line needs kind and round"));
                }
                let current = rounds
                    .last_mut()
                    .ok_or_else(|| bad(lineno, "violation line before any round"))?;
                let kind: ViolationKind = rest[0].parse().map_err(|e: String| bad(lineno, e))?;
                let round: u32 = field(rest[1], "round", lineno)?
                    .parse()
                    .map_err(|_| bad(lineno, "bad round"))?;
                current.violations.push((kind, round, rest[2..].join(" ")));
            }
            "end" => {
                let rest: Vec<&str> = toks.collect();
                if rest.len() != 3 {
                    return Err(bad(lineno, "end line needs status, rounds, moves"));
                }
                end = Some(ParsedEnd {
                    status: field(rest[0], "status", lineno)?.to_string(),
                    rounds: field(rest[1], "rounds", lineno)?
                        .parse()
                        .map_err(|_| bad(lineno, "bad rounds"))?,
                    moves: field(rest[2], "moves", lineno)?
                        .parse()
                        .map_err(|_| bad(lineno, "bad moves"))?,
                });
            }
            other => return Err(bad(lineno, format!("unknown line tag `{other}`"))),
        }
    }

    if !saw_header {
        return Err(TraceError::BadHeader);
    }
    Ok(ParsedTrace {
        meta: meta.ok_or(TraceError::MissingMeta)?,
        initial,
        rounds,
        end: end.ok_or(TraceError::MissingEnd)?,
    })
}

/// Outcome of replaying a parsed trace against the verifier.
#[derive(Debug, Clone)]
pub struct ReplayReport {
    pub rounds: usize,
    pub moves: u64,
    /// Violations re-derived from the reconstructed configurations.
    pub recomputed: Vec<ViolationEvent>,
    /// Violations the trace itself recorded.
    pub recorded: Vec<(ViolationKind, u32)>,
    /// Recorded and recomputed verdicts agree. Target conflicts cannot be
    /// re-derived from a trace (a losing decision is written as a wait),
    /// so they are compared on the recorded side only.
    pub verdicts_match: bool,
    pub end_consistent: bool,
    pub final_positions: BTreeSet<Position>,
    pub final_is_final: bool,
}

impl ReplayReport {
    /// A clean, self-consistent trace of a converged or bounded run.
    pub fn ok(&self) -> bool {
        self.recomputed.is_empty()
            && self.recorded.is_empty()
            && self.verdicts_match
            && self.end_consistent
    }
}

/// Replays a parsed trace from its `init` lines, re-running every
/// verifier check and comparing the verdicts with the recorded ones.
pub fn verify_trace(t: &ParsedTrace) -> Result<ReplayReport, TraceError> {
    let mut positions: BTreeMap<RobotId, Position> = BTreeMap::new();
    for &(id, p) in &t.initial {
        if positions.insert(id, p).is_some() {
            return Err(TraceError::Replay(format!("robot {id} initialised twice")));
        }
    }
    if positions.is_empty() {
        return Err(TraceError::Replay("trace has no robots".into()));
    }

    let mut recomputed = Vec::new();
    let mut recorded = Vec::new();
    let mut total_moves = 0u64;
    let mut last_round_moved = false;

    for round in &t.rounds {
        let prev = positions.clone();
        let mut rec = RoundRecord {
            round: round.round,
            activated: round.activated.clone(),
            decisions: BTreeMap::new(),
            applied: BTreeMap::new(),
            conflicts: Vec::new(),
            violations: Vec::new(),
        };
        for m in &round.moves {
            let Some(&at) = positions.get(&m.id) else {
                return Err(TraceError::Replay(format!(
                    "round {}: move of unknown robot {}",
                    round.round, m.id
                )));
            };
            if at != m.from {
                return Err(TraceError::Replay(format!(
                    "round {}: robot {} moves from {} but sits at {}",
                    round.round, m.id, m.from, at
                )));
            }
            let path = if (m.to.y - m.from.y).abs() == 2 && m.to.x == m.from.x {
                vec![Position::new(m.from.x, (m.from.y + m.to.y) / 2), m.to]
            } else {
                vec![m.to]
            };
            rec.decisions.insert(
                m.id,
                MoveDecision {
                    case: m.case,
                    action: Action::Go { target: m.to, path },
                },
            );
            rec.applied.insert(m.id, m.to);
            positions.insert(m.id, m.to);
        }
        for &(id, case) in &round.waits {
            if !positions.contains_key(&id) {
                return Err(TraceError::Replay(format!(
                    "round {}: wait of unknown robot {}",
                    round.round, id
                )));
            }
            rec.decisions.insert(
                id,
                MoveDecision {
                    case,
                    action: Action::Stay,
                },
            );
        }
        total_moves += rec.applied.len() as u64;
        last_round_moved = !rec.applied.is_empty();
        recomputed.extend(verifier::check_round_raw(&prev, &rec, &positions));
        recorded.extend(round.violations.iter().map(|&(kind, at, _)| (kind, at)));
    }

    let cmp = |events: &[(ViolationKind, u32)]| -> BTreeMap<(ViolationKind, u32), usize> {
        let mut m = BTreeMap::new();
        for &e in events {
            if e.0 != ViolationKind::TargetConflict {
                *m.entry(e).or_default() += 1;
            }
        }
        m
    };
    let recomputed_keys: Vec<(ViolationKind, u32)> =
        recomputed.iter().map(|v| (v.kind, v.round)).collect();
    let verdicts_match = cmp(&recomputed_keys) == cmp(&recorded);

    let final_positions: BTreeSet<Position> = positions.values().copied().collect();
    let final_is_final = crate::formation::is_final_set(&final_positions);
    let end_consistent = t.end.moves == total_moves
        && match t.end.status.as_str() {
            "converged" => {
                t.end.rounds as usize + 1 == t.rounds.len() && !last_round_moved && final_is_final
            }
            "maxrounds" | "violation" => t.end.rounds as usize == t.rounds.len(),
            _ => false,
        };

    Ok(ReplayReport {
        rounds: t.rounds.len(),
        moves: total_moves,
        recomputed,
        recorded,
        verdicts_match,
        end_consistent,
        final_positions,
        final_is_final,
    })
}
