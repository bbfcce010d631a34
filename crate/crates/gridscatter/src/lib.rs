//! Deterministic, seeded simulator and verifier for a swarm of anonymous,
//! oblivious, semi-synchronous point robots that scatter onto alternate
//! nodes of an integer grid.
//!
//! Robots run look-compute-move cycles: observe every robot position,
//! derive a destination from the snapshot alone, move there atomically.
//! The simulator drives them under pluggable activation schedules, checks
//! collision freedom, bound invariance and band closure every round, and
//! compares converged runs against a closed-form expected formation.

pub mod cli;
pub mod compute;
pub mod formation;
pub mod grid;
pub mod sim;
pub mod trace;
pub mod verifier;

pub use compute::{
    classify, compute_move, find_dimension, find_x_min, find_y_max, Action, Bounds, CaseLabel,
    Dimensions, MoveDecision,
};
pub use grid::{
    occupied, robots_in_row, row_index, Configuration, GridError, Position, RobotId, Snapshot,
};
pub use sim::{
    parse_strategy, run, run_with_spec, step, RoundRecord, RunOutcome, RunStatus, ScheduleStrategy,
    Scheduler,
};
pub use verifier::{check_progress, check_round, expected_final, is_final, ViolationKind};

/// Spec-named constructor for a seeded scheduler.
pub fn make_strategy(spec: &str, n: usize, seed: u64) -> Result<Scheduler, sim::StrategyError> {
    Scheduler::from_spec(spec, n, seed)
}
