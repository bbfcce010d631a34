//! Machine checks for the protocol's correctness claims: per-round
//! invariants, progress, the final-formation predicate, and the
//! independent expected-outcome oracle.
//!
//! Violations are emitted only when the named predicate literally fails;
//! clean runs produce none. The claims about collision freedom, bound
//! invariance and band closure are measured here rather than assumed.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use crate::compute::find_dimension;
use crate::formation;
use crate::grid::{Configuration, Position, RobotId};
use crate::sim::RoundRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ViolationKind {
    /// Two robots share a node after the round.
    DuplicateOccupancy,
    /// An applied move is not one unit step or one vertical double step.
    OffLatticeMove,
    /// Two decisions in the same round name the same destination.
    TargetConflict,
    /// Two applied moves traverse one edge in opposite directions.
    PathCrossViolation,
    /// The middle node of a double step was occupied before the round or
    /// claimed as a destination within it.
    IntermediateOccupied,
    /// The west or north bound of the distribution changed.
    BoundDrift,
    /// The odd-band closure broke: a configuration inside the band was
    /// followed by one with a robot in an even row or below row d.
    EvenRowReentry,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ViolationKind::DuplicateOccupancy => "DuplicateOccupancy",
            ViolationKind::OffLatticeMove => "OffLatticeMove",
            ViolationKind::TargetConflict => "TargetConflict",
            ViolationKind::PathCrossViolation => "PathCrossViolation",
            ViolationKind::IntermediateOccupied => "IntermediateOccupied",
            ViolationKind::BoundDrift => "BoundDrift",
            ViolationKind::EvenRowReentry => "EvenRowReentry",
        };
        f.write_str(s)
    }
}

impl FromStr for ViolationKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "DuplicateOccupancy" => ViolationKind::DuplicateOccupancy,
            "OffLatticeMove" => ViolationKind::OffLatticeMove,
            "TargetConflict" => ViolationKind::TargetConflict,
            "PathCrossViolation" => ViolationKind::PathCrossViolation,
            "IntermediateOccupied" => ViolationKind::IntermediateOccupied,
            "BoundDrift" => ViolationKind::BoundDrift,
            "EvenRowReentry" => ViolationKind::EvenRowReentry,
            other => return Err(format!("unknown violation kind `{other}`")),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ViolationEvent {
    pub kind: ViolationKind,
    pub round: u32,
    pub robots: Vec<RobotId>,
    pub detail: String,
}

impl ViolationEvent {
    fn new(kind: ViolationKind, round: u32, robots: Vec<RobotId>, detail: String) -> Self {
        Self {
            kind,
            round,
            robots,
            detail,
        }
    }
}

impl fmt::Display for ViolationEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} round={} {}", self.kind, self.round, self.detail)
    }
}

/// Whether the configuration is the finished formation: west-packed rows
/// of `rc` robots on alternate nodes anchored at its own bounds, last row
/// possibly partial.
pub fn is_final(c: &Configuration) -> bool {
    formation::is_final_set(&c.position_set())
}

/// The exact position set a run starting from `initial` must reach,
/// anchored at the initial bounds. Valid because both bounds are
/// invariant over a run, which `check_round` measures as `BoundDrift`.
pub fn expected_final(initial: &Configuration) -> BTreeSet<Position> {
    formation::target_set(initial.len(), initial.x_min(), initial.y_max())
}

/// Runs every per-round check against a record and the configurations on
/// both sides of it.
pub fn check_round(
    prev: &Configuration,
    rec: &RoundRecord,
    next: &Configuration,
) -> Vec<ViolationEvent> {
    check_round_raw(prev.as_map(), rec, next.as_map())
}

/// Same checks over raw id-to-position maps, which lets trace replay
/// detect duplicate occupancy that the `Configuration` type itself rules
/// out. Expects `rec` to have been produced from `prev`.
pub fn check_round_raw(
    prev: &BTreeMap<RobotId, Position>,
    rec: &RoundRecord,
    next: &BTreeMap<RobotId, Position>,
) -> Vec<ViolationEvent> {
    let round = rec.round;
    let mut out = Vec::new();

    // duplicate occupancy after the round
    let mut holders: BTreeMap<Position, Vec<RobotId>> = BTreeMap::new();
    for (&id, &p) in next {
        holders.entry(p).or_default().push(id);
    }
    for (p, ids) in holders {
        if ids.len() > 1 {
            out.push(ViolationEvent::new(
                ViolationKind::DuplicateOccupancy,
                round,
                ids.clone(),
                format!("node {p} held by {} robots", ids.len()),
            ));
        }
    }

    // geometry of applied moves
    for (&id, &to) in &rec.applied {
        let Some(&from) = prev.get(&id) else { continue };
        let dx = to.x - from.x;
        let dy = to.y - from.y;
        let legal = dx.abs() + dy.abs() == 1 || (dx == 0 && dy.abs() == 2);
        if !legal {
            out.push(ViolationEvent::new(
                ViolationKind::OffLatticeMove,
                round,
                vec![id],
                format!("robot {id} {from} -> {to}"),
            ));
        }
    }

    // contested destinations among the round's decisions
    let mut claims: BTreeMap<Position, Vec<RobotId>> = BTreeMap::new();
    for (&id, d) in &rec.decisions {
        if let Some(t) = d.target() {
            claims.entry(t).or_default().push(id);
        }
    }
    for (t, ids) in claims {
        if ids.len() > 1 {
            out.push(ViolationEvent::new(
                ViolationKind::TargetConflict,
                round,
                ids.clone(),
                format!("node {t} computed by robots {:?}", ids),
            ));
        }
    }

    // edges walked by applied moves: opposite traversals collide
    let mut edge_walkers: BTreeMap<(Position, Position), Vec<(RobotId, bool)>> = BTreeMap::new();
    for (&id, &to) in &rec.applied {
        let Some(&from) = prev.get(&id) else { continue };
        for (a, b) in unit_edges(from, to) {
            let key = if a < b { (a, b) } else { (b, a) };
            edge_walkers.entry(key).or_default().push((id, a < b));
        }
    }
    for ((a, b), walkers) in edge_walkers {
        let forward = walkers.iter().any(|&(_, f)| f);
        let backward = walkers.iter().any(|&(_, f)| !f);
        if forward && backward {
            out.push(ViolationEvent::new(
                ViolationKind::PathCrossViolation,
                round,
                walkers.iter().map(|&(id, _)| id).collect(),
                format!("edge {a} - {b} walked in both directions"),
            ));
        }
    }

    // middle nodes of double steps
    for (&id, &to) in &rec.applied {
        let Some(&from) = prev.get(&id) else { continue };
        if (to.y - from.y).abs() == 2 && to.x == from.x {
            let mid = Position::new(from.x, from.y + (to.y - from.y).signum());
            let pre_occupied = prev.iter().any(|(&other, &p)| other != id && p == mid);
            let claimed = rec
                .applied
                .iter()
                .any(|(&other, &t)| other != id && t == mid);
            if pre_occupied || claimed {
                out.push(ViolationEvent::new(
                    ViolationKind::IntermediateOccupied,
                    round,
                    vec![id],
                    format!("robot {id} passes through occupied node {mid}"),
                ));
            }
        }
    }

    // bound invariance
    if let (Some(pb), Some(nb)) = (bounds_of(prev), bounds_of(next)) {
        if pb.0 != nb.0 {
            out.push(ViolationEvent::new(
                ViolationKind::BoundDrift,
                round,
                vec![],
                format!("xmin {} -> {}", pb.0, nb.0),
            ));
        }
        if pb.1 != nb.1 {
            out.push(ViolationEvent::new(
                ViolationKind::BoundDrift,
                round,
                vec![],
                format!("ymax {} -> {}", pb.1, nb.1),
            ));
        }
    }

    // band closure
    if in_odd_band(prev) && !in_odd_band(next) {
        let strays = band_strays(next);
        out.push(ViolationEvent::new(
            ViolationKind::EvenRowReentry,
            round,
            strays.clone(),
            format!("robots {strays:?} left the odd band"),
        ));
    }

    out
}

fn unit_edges(from: Position, to: Position) -> Vec<(Position, Position)> {
    let dx = to.x - from.x;
    let dy = to.y - from.y;
    if dx == 0 && dy.abs() == 2 {
        let mid = Position::new(from.x, from.y + dy.signum());
        vec![(from, mid), (mid, to)]
    } else {
        vec![(from, to)]
    }
}

fn bounds_of(map: &BTreeMap<RobotId, Position>) -> Option<(i64, i64)> {
    let x_min = map.values().map(|p| p.x).min()?;
    let y_max = map.values().map(|p| p.y).max()?;
    Some((x_min, y_max))
}

fn in_odd_band(map: &BTreeMap<RobotId, Position>) -> bool {
    let Some((_, y_max)) = bounds_of(map) else {
        return false;
    };
    let d = find_dimension(map.len()).d;
    map.values().all(|p| {
        let j = y_max - p.y + 1;
        j <= d && j % 2 == 1
    })
}

fn band_strays(map: &BTreeMap<RobotId, Position>) -> Vec<RobotId> {
    let Some((_, y_max)) = bounds_of(map) else {
        return Vec::new();
    };
    let d = find_dimension(map.len()).d;
    map.iter()
        .filter(|(_, p)| {
            let j = y_max - p.y + 1;
            j > d || j % 2 == 0
        })
        .map(|(&id, _)| id)
        .collect()
}

/// Deadlock witness check: within every stretch of `window` consecutive
/// rounds whose configurations are all non-final, at least one move must
/// land. Records are replayed from `initial` to recover per-round
/// configurations.
pub fn check_progress(initial: &Configuration, records: &[RoundRecord], window: usize) -> bool {
    if window == 0 || records.len() < window {
        return true;
    }
    let mut positions = initial.as_map().clone();
    let mut moved = Vec::with_capacity(records.len());
    let mut final_after = Vec::with_capacity(records.len());
    for rec in records {
        for (&id, &t) in &rec.applied {
            positions.insert(id, t);
        }
        moved.push(!rec.applied.is_empty());
        final_after.push(formation::is_final_set(
            &positions.values().copied().collect(),
        ));
    }
    for start in 0..=records.len() - window {
        let range = start..start + window;
        let all_non_final = range.clone().all(|i| !final_after[i]);
        let any_move = range.clone().any(|i| moved[i]);
        if all_non_final && !any_move {
            return false;
        }
    }
    true
}
