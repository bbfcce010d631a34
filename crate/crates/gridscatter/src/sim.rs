//! The round engine: SSYNC activation strategies, atomic application of
//! simultaneous moves, priority arbitration, and run orchestration.
//!
//! One run is a single sequential process driven by one seeded random
//! source, so equal inputs and seeds produce identical round records.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::compute::{compute_move, direction_rank, MoveDecision};
use crate::grid::{Configuration, GridError, Position, RobotId, Snapshot};
use crate::verifier::{self, ViolationEvent};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StrategyError {
    #[error("unknown strategy `{0}`")]
    UnknownSpec(String),
    #[error("activation probability must lie in (0, 1], got {0}")]
    BadProbability(String),
    #[error("fairness window must be at least 1")]
    BadWindow,
    #[error("strategy needs at least one robot")]
    NoRobots,
    #[error("cannot read activation script: {0}")]
    ScriptRead(String),
    #[error("activation script line {0}: {1}")]
    ScriptLine(usize, String),
    #[error("activation script is empty")]
    ScriptEmpty,
    #[error("activation script never activates robot {0}")]
    ScriptStarves(RobotId),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("round activated no robots")]
    EmptyActivation,
    #[error("activated robot {0} is not part of the configuration")]
    UnknownRobot(RobotId),
    #[error("max rounds must be at least 1")]
    ZeroMaxRounds,
    #[error("scheduler built for {scheduler} robots, configuration has {robots}")]
    SchedulerMismatch { scheduler: u32, robots: u32 },
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// How the adversary picks the robots that run a cycle each round.
#[derive(Debug, Clone, PartialEq)]
pub enum ScheduleStrategy {
    /// Every robot, every round.
    Fsync,
    /// Each robot independently with the given probability; robots idle
    /// for `window - 1` rounds are force-included so the window-fairness
    /// guarantee holds, and an empty draw activates one seeded pick.
    RandomSubset { probability: f64, window: u32 },
    /// One robot per round, in id order.
    RoundRobin,
    /// Explicit activation sets, repeated from the top when exhausted.
    Scripted { rounds: Vec<BTreeSet<RobotId>> },
}

/// Parses the strategy mini-grammar:
/// `fsync` | `ssync:p=<prob>,w=<window>` | `roundrobin` | `scripted:<path>`.
pub fn parse_strategy(spec: &str) -> Result<ScheduleStrategy, StrategyError> {
    if spec == "fsync" {
        return Ok(ScheduleStrategy::Fsync);
    }
    if spec == "roundrobin" {
        return Ok(ScheduleStrategy::RoundRobin);
    }
    if let Some(rest) = spec.strip_prefix("ssync:") {
        let mut probability = None;
        let mut window = None;
        for part in rest.split(',') {
            if let Some(v) = part.strip_prefix("p=") {
                probability = Some(
                    v.parse::<f64>()
                        .map_err(|_| StrategyError::BadProbability(v.to_string()))?,
                );
            } else if let Some(v) = part.strip_prefix("w=") {
                window = Some(v.parse::<u32>().map_err(|_| StrategyError::BadWindow)?);
            } else {
                return Err(StrategyError::UnknownSpec(spec.to_string()));
            }
        }
        let probability =
            probability.ok_or_else(|| StrategyError::UnknownSpec(spec.to_string()))?;
        let window = window.ok_or_else(|| StrategyError::UnknownSpec(spec.to_string()))?;
        if !(probability > 0.0 && probability <= 1.0) {
            return Err(StrategyError::BadProbability(probability.to_string()));
        }
        if window < 1 {
            return Err(StrategyError::BadWindow);
        }
        return Ok(ScheduleStrategy::RandomSubset {
            probability,
            window,
        });
    }
    if let Some(path) = spec.strip_prefix("scripted:") {
        let text = std::fs::read_to_string(path)
            .map_err(|e| StrategyError::ScriptRead(format!("{path}: {e}")))?;
        let mut rounds = Vec::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut set = BTreeSet::new();
            for tok in line.split(',') {
                let id: u32 = tok
                    .trim()
                    .parse()
                    .map_err(|_| StrategyError::ScriptLine(no + 1, format!("bad id `{tok}`")))?;
                set.insert(RobotId(id));
            }
            if set.is_empty() {
                return Err(StrategyError::ScriptLine(
                    no + 1,
                    "empty activation set".into(),
                ));
            }
            rounds.push(set);
        }
        if rounds.is_empty() {
            return Err(StrategyError::ScriptEmpty);
        }
        return Ok(ScheduleStrategy::Scripted { rounds });
    }
    Err(StrategyError::UnknownSpec(spec.to_string()))
}

/// A strategy bound to a robot count and a seeded random source.
#[derive(Debug, Clone)]
pub struct Scheduler {
    strategy: ScheduleStrategy,
    n: u32,
    rng: ChaCha8Rng,
    idle_rounds: Vec<u32>,
    cursor: usize,
}

impl Scheduler {
    pub fn new(strategy: ScheduleStrategy, n: usize, seed: u64) -> Result<Self, StrategyError> {
        if n == 0 {
            return Err(StrategyError::NoRobots);
        }
        if let ScheduleStrategy::Scripted { rounds } = &strategy {
            for (i, set) in rounds.iter().enumerate() {
                for id in set {
                    if id.0 < 1 || id.0 > n as u32 {
                        return Err(StrategyError::ScriptLine(
                            i + 1,
                            format!("robot {id} does not exist (n={n})"),
                        ));
                    }
                }
            }
            // the script cycles, so a robot absent from it would starve
            for id in 1..=n as u32 {
                if !rounds.iter().any(|set| set.contains(&RobotId(id))) {
                    return Err(StrategyError::ScriptStarves(RobotId(id)));
                }
            }
        }
        Ok(Self {
            strategy,
            n: n as u32,
            rng: ChaCha8Rng::seed_from_u64(seed),
            idle_rounds: vec![0; n],
            cursor: 0,
        })
    }

    /// Builds a scheduler straight from a strategy spec string.
    pub fn from_spec(spec: &str, n: usize, seed: u64) -> Result<Self, StrategyError> {
        Self::new(parse_strategy(spec)?, n, seed)
    }

    pub fn robots(&self) -> u32 {
        self.n
    }

    /// The longest stretch any robot can stay inactive.
    pub fn fairness_window(&self) -> u32 {
        match &self.strategy {
            ScheduleStrategy::Fsync => 1,
            ScheduleStrategy::RandomSubset { window, .. } => *window,
            ScheduleStrategy::RoundRobin => self.n,
            ScheduleStrategy::Scripted { rounds } => {
                // widest wrap-around gap between activations of any robot
                let len = rounds.len();
                let mut worst = 1;
                for id in 1..=self.n {
                    let occurrences: Vec<usize> = rounds
                        .iter()
                        .enumerate()
                        .filter(|(_, set)| set.contains(&RobotId(id)))
                        .map(|(i, _)| i)
                        .collect();
                    for (k, &at) in occurrences.iter().enumerate() {
                        let next = if k + 1 < occurrences.len() {
                            occurrences[k + 1]
                        } else {
                            occurrences[0] + len
                        };
                        worst = worst.max((next - at) as u32);
                    }
                }
                worst
            }
        }
    }

    /// The activation set for the next round. Never empty.
    pub fn next_activation(&mut self) -> BTreeSet<RobotId> {
        let mut set = match &self.strategy {
            ScheduleStrategy::Fsync => (1..=self.n).map(RobotId).collect(),
            ScheduleStrategy::RoundRobin => {
                let id = RobotId((self.cursor % self.n as usize) as u32 + 1);
                self.cursor += 1;
                BTreeSet::from([id])
            }
            ScheduleStrategy::Scripted { rounds } => {
                let set = rounds[self.cursor % rounds.len()].clone();
                self.cursor += 1;
                set
            }
            ScheduleStrategy::RandomSubset {
                probability,
                window,
            } => {
                let p = *probability;
                let w = *window;
                let mut set = BTreeSet::new();
                for id in 1..=self.n {
                    if self.rng.gen_bool(p) {
                        set.insert(RobotId(id));
                    }
                }
                for id in 1..=self.n {
                    if self.idle_rounds[id as usize - 1] + 1 >= w {
                        set.insert(RobotId(id));
                    }
                }
                if set.is_empty() {
                    set.insert(RobotId(self.rng.gen_range(0..self.n) + 1));
                }
                set
            }
        };
        if set.is_empty() {
            // unreachable by construction; keep the invariant anyway
            set.insert(RobotId(1));
        }
        for id in 1..=self.n {
            let idle = &mut self.idle_rounds[id as usize - 1];
            if set.contains(&RobotId(id)) {
                *idle = 0;
            } else {
                *idle += 1;
            }
        }
        set
    }
}

/// Two movers computed the same destination. The protocol is supposed to
/// make this impossible, so every occurrence is recorded as evidence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConflictEvent {
    pub round: u32,
    pub target: Position,
    pub winner: RobotId,
    pub losers: Vec<RobotId>,
}

/// Everything that happened in one SSYNC round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub round: u32,
    pub activated: BTreeSet<RobotId>,
    pub decisions: BTreeMap<RobotId, MoveDecision>,
    /// Post-round positions of the robots whose moves were applied.
    pub applied: BTreeMap<RobotId, Position>,
    pub conflicts: Vec<ConflictEvent>,
    pub violations: Vec<ViolationEvent>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    /// The formation is reached and a forced all-robots round confirmed
    /// quiescence; `rounds` counts the rounds before that confirmation.
    Converged {
        rounds: u32,
    },
    MaxRoundsExceeded,
    ViolationHalt,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub status: RunStatus,
    pub total_moves: u64,
    pub final_config: Configuration,
}

/// Executes one SSYNC round: one frozen snapshot, one decision per
/// activated robot, simultaneous application.
///
/// Movers that computed the same target are arbitrated by the movement
/// priority (west, east, south, north; ties by the mover's pre-round
/// `(y, x)`) and the clash is recorded. A mover whose target is held by a
/// robot that stays put this round keeps its place and re-evaluates on
/// its next activation.
pub fn step(
    c: &Configuration,
    activated: &BTreeSet<RobotId>,
    round: u32,
) -> Result<(Configuration, RoundRecord), SimError> {
    if activated.is_empty() {
        return Err(SimError::EmptyActivation);
    }
    for &id in activated {
        if c.get(id).is_none() {
            return Err(SimError::UnknownRobot(id));
        }
    }

    let shared = Arc::new(c.position_set());
    let mut decisions = BTreeMap::new();
    for &id in activated {
        let me = c.get(id).expect("validated above");
        let snap = Snapshot::shared(Arc::clone(&shared), me)?;
        decisions.insert(id, compute_move(&snap));
    }

    // arbitrate contested targets
    let mut claims: BTreeMap<Position, Vec<RobotId>> = BTreeMap::new();
    for (&id, d) in &decisions {
        if let Some(t) = d.target() {
            claims.entry(t).or_default().push(id);
        }
    }
    let mut movers: BTreeMap<RobotId, Position> = BTreeMap::new();
    let mut conflicts = Vec::new();
    for (target, mut ids) in claims {
        if ids.len() > 1 {
            ids.sort_by_key(|&id| {
                let from = c.get(id).expect("validated above");
                (direction_rank(from, target), from, id)
            });
            conflicts.push(ConflictEvent {
                round,
                target,
                winner: ids[0],
                losers: ids[1..].to_vec(),
            });
        }
        movers.insert(ids[0], target);
    }

    // movers may enter nodes vacated this round, but a target held by a
    // robot that stays blocks the move; blocking cascades to a fixed point
    loop {
        let position_of_stayer: BTreeMap<Position, RobotId> = c
            .iter()
            .filter(|(id, _)| !movers.contains_key(id))
            .map(|(id, p)| (p, id))
            .collect();
        let blocked: Vec<RobotId> = movers
            .iter()
            .filter(|(_, t)| position_of_stayer.contains_key(t))
            .map(|(&id, _)| id)
            .collect();
        if blocked.is_empty() {
            break;
        }
        for id in blocked {
            movers.remove(&id);
        }
    }

    let mut next_map = c.as_map().clone();
    for (&id, &t) in &movers {
        next_map.insert(id, t);
    }
    let next = Configuration::new(next_map)?;

    let rec = RoundRecord {
        round,
        activated: activated.clone(),
        decisions,
        applied: movers,
        conflicts,
        violations: Vec::new(),
    };
    Ok((next, rec))
}

/// Runs the protocol to convergence, round cap, or (in strict mode) the
/// first verifier violation.
///
/// Convergence is declared only after a forced all-robots round in which
/// nothing moves, so the settled state is confirmed by the live decision
/// procedure rather than the shape predicate alone.
pub fn run(
    initial: &Configuration,
    scheduler: &mut Scheduler,
    max_rounds: u32,
    strict: bool,
) -> Result<(RunOutcome, Vec<RoundRecord>), SimError> {
    if max_rounds == 0 {
        return Err(SimError::ZeroMaxRounds);
    }
    if scheduler.robots() as usize != initial.len() {
        return Err(SimError::SchedulerMismatch {
            scheduler: scheduler.robots(),
            robots: initial.len() as u32,
        });
    }

    let all_ids: BTreeSet<RobotId> = initial.ids().collect();
    let mut current = initial.clone();
    let mut records = Vec::new();
    let mut total_moves = 0u64;
    let mut status = RunStatus::MaxRoundsExceeded;

    for round in 1..=max_rounds {
        let quiescence_probe = verifier::is_final(&current);
        let activated = if quiescence_probe {
            all_ids.clone()
        } else {
            scheduler.next_activation()
        };
        let (next, mut rec) = step(&current, &activated, round)?;
        rec.violations = verifier::check_round(&current, &rec, &next);
        let moved = !rec.applied.is_empty();
        total_moves += rec.applied.len() as u64;
        let halt = strict && !rec.violations.is_empty();
        records.push(rec);
        current = next;
        if halt {
            status = RunStatus::ViolationHalt;
            break;
        }
        if quiescence_probe && !moved && verifier::is_final(&current) {
            status = RunStatus::Converged { rounds: round - 1 };
            break;
        }
    }

    Ok((
        RunOutcome {
            status,
            total_moves,
            final_config: current,
        },
        records,
    ))
}

/// Convenience wrapper: parse the strategy, seed it, run.
pub fn run_with_spec(
    initial: &Configuration,
    strategy_spec: &str,
    max_rounds: u32,
    seed: u64,
    strict: bool,
) -> Result<(RunOutcome, Vec<RoundRecord>), RunError> {
    let mut scheduler =
        Scheduler::from_spec(strategy_spec, initial.len(), seed).map_err(RunError::Strategy)?;
    run(initial, &mut scheduler, max_rounds, strict).map_err(RunError::Sim)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RunError {
    #[error(transparent)]
    Strategy(StrategyError),
    #[error(transparent)]
    Sim(SimError),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compute::Action;

    fn config(positions: &[(i64, i64)]) -> Configuration {
        Configuration::from_positions(positions.iter().map(|&(x, y)| Position::new(x, y))).unwrap()
    }

    fn ids(list: &[u32]) -> BTreeSet<RobotId> {
        list.iter().copied().map(RobotId).collect()
    }

    #[test]
    fn step_moves_the_even_row_robot_east() {
        let c = config(&[(0, 0), (0, -1)]);
        let (next, rec) = step(&c, &ids(&[1, 2]), 1).unwrap();
        assert_eq!(rec.decisions[&RobotId(1)].action, Action::Stay);
        assert_eq!(rec.applied.get(&RobotId(2)), Some(&Position::new(1, -1)));
        assert_eq!(next.get(RobotId(1)), Some(Position::new(0, 0)));
        assert_eq!(next.get(RobotId(2)), Some(Position::new(1, -1)));
    }

    #[test]
    fn step_with_partial_activation() {
        let c = config(&[(0, 0), (5, 0)]);
        let (next, rec) = step(&c, &ids(&[2]), 1).unwrap();
        assert_eq!(next.get(RobotId(2)), Some(Position::new(4, 0)));
        assert!(!rec.decisions.contains_key(&RobotId(1)));
    }

    #[test]
    fn step_on_single_robot_is_settled() {
        let c = config(&[(0, 0)]);
        let (next, rec) = step(&c, &ids(&[1]), 1).unwrap();
        assert!(rec.applied.is_empty());
        assert_eq!(
            rec.decisions[&RobotId(1)].case,
            crate::compute::CaseLabel::Settled
        );
        assert_eq!(next, c);
    }

    #[test]
    fn step_rejects_unknown_and_empty_activation() {
        let c = config(&[(0, 0)]);
        assert_eq!(
            step(&c, &ids(&[7]), 1),
            Err(SimError::UnknownRobot(RobotId(7)))
        );
        assert_eq!(step(&c, &ids(&[]), 1), Err(SimError::EmptyActivation));
    }

    #[test]
    fn fsync_pair_converges_to_the_desk_trace() {
        let c = config(&[(0, 0), (0, -1)]);
        let (outcome, records) = run_with_spec(&c, "fsync", 100, 7, true).unwrap();
        assert_eq!(outcome.status, RunStatus::Converged { rounds: 3 });
        assert_eq!(outcome.total_moves, 3);
        assert_eq!(
            outcome.final_config.position_set(),
            [Position::new(0, 0), Position::new(2, 0)]
                .into_iter()
                .collect()
        );
        // east sidestep, north entry, east parity fix
        let applied: Vec<Position> = records
            .iter()
            .filter_map(|r| r.applied.get(&RobotId(2)).copied())
            .collect();
        assert_eq!(
            applied,
            vec![
                Position::new(1, -1),
                Position::new(1, 0),
                Position::new(2, 0)
            ]
        );
        assert!(records.iter().all(|r| r.violations.is_empty()));
        assert!(records.iter().all(|r| r.conflicts.is_empty()));
    }

    #[test]
    fn fsync_pair_converges_by_west_hops() {
        let c = config(&[(0, 0), (5, 0)]);
        let (outcome, records) = run_with_spec(&c, "fsync", 100, 7, true).unwrap();
        assert_eq!(outcome.status, RunStatus::Converged { rounds: 3 });
        let applied: Vec<Position> = records
            .iter()
            .filter_map(|r| r.applied.get(&RobotId(2)).copied())
            .collect();
        assert_eq!(
            applied,
            vec![
                Position::new(4, 0),
                Position::new(3, 0),
                Position::new(2, 0)
            ]
        );
    }

    #[test]
    fn single_robot_converges_in_zero_movement_rounds() {
        let c = config(&[(7, -3)]);
        let (outcome, records) = run_with_spec(&c, "roundrobin", 100, 1, true).unwrap();
        assert_eq!(outcome.status, RunStatus::Converged { rounds: 0 });
        assert_eq!(outcome.total_moves, 0);
        assert_eq!(records.len(), 1);
        assert_eq!(outcome.final_config, c);
    }

    #[test]
    fn duplicate_initial_positions_are_rejected_upstream() {
        let err = Configuration::from_positions([Position::new(1, 1), Position::new(1, 1)]);
        assert!(err.is_err());
    }

    #[test]
    fn strategy_grammar_round_trips() {
        assert_eq!(parse_strategy("fsync"), Ok(ScheduleStrategy::Fsync));
        assert_eq!(
            parse_strategy("roundrobin"),
            Ok(ScheduleStrategy::RoundRobin)
        );
        assert_eq!(
            parse_strategy("ssync:p=0.5,w=32"),
            Ok(ScheduleStrategy::RandomSubset {
                probability: 0.5,
                window: 32
            })
        );
        assert!(matches!(
            parse_strategy("ssync:p=0.0,w=32"),
            Err(StrategyError::BadProbability(_))
        ));
        assert!(matches!(
            parse_strategy("ssync:p=1.5,w=32"),
            Err(StrategyError::BadProbability(_))
        ));
        assert!(matches!(
            parse_strategy("ssync:p=0.5,w=0"),
            Err(StrategyError::BadWindow)
        ));
        assert!(matches!(
            parse_strategy("nonsense"),
            Err(StrategyError::UnknownSpec(_))
        ));
    }

    #[test]
    fn round_robin_cycles_in_id_order() {
        let mut s = Scheduler::from_spec("roundrobin", 3, 0).unwrap();
        assert_eq!(s.next_activation(), ids(&[1]));
        assert_eq!(s.next_activation(), ids(&[2]));
        assert_eq!(s.next_activation(), ids(&[3]));
        assert_eq!(s.next_activation(), ids(&[1]));
    }

    #[test]
    fn random_subset_is_window_fair_and_nonempty() {
        let mut s = Scheduler::from_spec("ssync:p=0.2,w=8", 6, 99).unwrap();
        let mut history: Vec<BTreeSet<RobotId>> = Vec::new();
        for _ in 0..200 {
            let set = s.next_activation();
            assert!(!set.is_empty());
            history.push(set);
        }
        for window in history.windows(8) {
            for id in 1..=6 {
                assert!(
                    window.iter().any(|set| set.contains(&RobotId(id))),
                    "robot {id} starved"
                );
            }
        }
    }

    #[test]
    fn identical_seeds_give_identical_records() {
        let c = config(&[(3, 2), (-1, 0), (4, -5), (0, 7), (2, 2)]);
        let (o1, r1) = run_with_spec(&c, "ssync:p=0.5,w=32", 10_000, 41, true).unwrap();
        let (o2, r2) = run_with_spec(&c, "ssync:p=0.5,w=32", 10_000, 41, true).unwrap();
        assert_eq!(o1, o2);
        assert_eq!(r1, r2);
    }

    #[test]
    fn scripted_strategy_validates_fairness() {
        let rounds = vec![ids(&[1]), ids(&[1, 2])];
        let err = Scheduler::new(ScheduleStrategy::Scripted { rounds }, 3, 0);
        assert_eq!(err.unwrap_err(), StrategyError::ScriptStarves(RobotId(3)));
        let rounds = vec![ids(&[1, 4])];
        let err = Scheduler::new(ScheduleStrategy::Scripted { rounds }, 3, 0);
        assert!(matches!(err, Err(StrategyError::ScriptLine(_, _))));
    }
}
