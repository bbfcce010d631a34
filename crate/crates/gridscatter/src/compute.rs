//! The compute phase: a pure function from a robot's snapshot to its move.
//!
//! Robots are oblivious, so every operation here re-derives the formation
//! dimensions, the bounds and the movement case from the current snapshot
//! alone. Decisions depend only on positions, never on identities, and
//! only on coordinate differences and extrema, so they are invariant
//! under translation of the whole snapshot.

use std::fmt;
use std::str::FromStr;

use crate::formation;
use crate::grid::{occupied, robots_in_row, row_index, Position, Snapshot};

/// Shape of the target formation for `n` robots: up to `rc` robots per
/// occupied row or column, spanning `d = 2*rc - 1` rows and columns since
/// every other row and column stays empty.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dimensions {
    pub rc: i64,
    pub d: i64,
}

/// North and west bounds of the observed distribution. Both stay fixed
/// over a whole run; the verifier flags any change as `BoundDrift`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bounds {
    pub y_max: i64,
    pub x_min: i64,
}

impl Bounds {
    pub fn of(s: &Snapshot) -> Self {
        Self {
            y_max: find_y_max(s),
            x_min: find_x_min(s),
        }
    }
}

/// `rc = ⌈√n⌉` and `d = 2*rc - 1`. Panics for `n = 0`.
pub fn find_dimension(n: usize) -> Dimensions {
    assert!(n >= 1, "formation dimensions are defined for n >= 1");
    let rc = ceil_sqrt(n as u64);
    Dimensions { rc, d: 2 * rc - 1 }
}

fn ceil_sqrt(n: u64) -> i64 {
    let mut r = (n as f64).sqrt().ceil() as u64;
    while u128::from(r) * u128::from(r) < u128::from(n) {
        r += 1;
    }
    while r > 1 && u128::from(r - 1) * u128::from(r - 1) >= u128::from(n) {
        r -= 1;
    }
    r as i64
}

/// Largest y over all observed robots; the north bound of the formation.
pub fn find_y_max(s: &Snapshot) -> i64 {
    s.positions().iter().map(|p| p.y).max().expect("nonempty")
}

/// Smallest x over all observed robots; the west bound of the formation.
pub fn find_x_min(s: &Snapshot) -> i64 {
    s.positions().iter().map(|p| p.x).min().expect("nonempty")
}

/// Movement cases of the protocol. `Wait` and `Settled` name the two ways
/// a robot stays put: blocked or deferring versus already in place.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CaseLabel {
    Psi1,
    Psi2,
    Psi3West,
    Psi3East,
    Psi4,
    Psi5North,
    Psi5South,
    Wait,
    Settled,
}

impl fmt::Display for CaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CaseLabel::Psi1 => "PSI1",
            CaseLabel::Psi2 => "PSI2",
            CaseLabel::Psi3West => "PSI3_WEST",
            CaseLabel::Psi3East => "PSI3_EAST",
            CaseLabel::Psi4 => "PSI4",
            CaseLabel::Psi5North => "PSI5_NORTH",
            CaseLabel::Psi5South => "PSI5_SOUTH",
            CaseLabel::Wait => "WAIT",
            CaseLabel::Settled => "SETTLED",
        };
        f.write_str(s)
    }
}

impl FromStr for CaseLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "PSI1" => CaseLabel::Psi1,
            "PSI2" => CaseLabel::Psi2,
            "PSI3_WEST" => CaseLabel::Psi3West,
            "PSI3_EAST" => CaseLabel::Psi3East,
            "PSI4" => CaseLabel::Psi4,
            "PSI5_NORTH" => CaseLabel::Psi5North,
            "PSI5_SOUTH" => CaseLabel::Psi5South,
            "WAIT" => CaseLabel::Wait,
            "SETTLED" => CaseLabel::Settled,
            other => return Err(format!("unknown case label `{other}`")),
        })
    }
}

/// What the robot does this cycle. `path` lists the nodes stepped through
/// after the current one, so it has length 1 for lateral and single-row
/// moves and length 2 for the vertical two-row hops of Ψ4/Ψ5.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Action {
    Stay,
    Go {
        target: Position,
        path: Vec<Position>,
    },
}

/// The output of one compute phase: a case label plus the move it produced.
/// A `Stay` with a movement label is a blocked or deferred move.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MoveDecision {
    pub case: CaseLabel,
    pub action: Action,
}

impl MoveDecision {
    fn stay(case: CaseLabel) -> Self {
        Self {
            case,
            action: Action::Stay,
        }
    }

    fn step_to(case: CaseLabel, target: Position) -> Self {
        Self {
            case,
            action: Action::Go {
                target,
                path: vec![target],
            },
        }
    }

    fn hop_to(case: CaseLabel, mid: Position, target: Position) -> Self {
        Self {
            case,
            action: Action::Go {
                target,
                path: vec![mid, target],
            },
        }
    }

    pub fn target(&self) -> Option<Position> {
        match &self.action {
            Action::Stay => None,
            Action::Go { target, .. } => Some(*target),
        }
    }

    pub fn is_move(&self) -> bool {
        matches!(self.action, Action::Go { .. })
    }
}

/// Whether `p` may take a west hop: not already on the west bound, with
/// both of the next two nodes to its west vacant.
pub fn westward_movable(s: &Snapshot, p: Position, x_min: i64) -> bool {
    p.x > x_min && !occupied(s, p.west(1)) && !occupied(s, p.west(2))
}

/// Number of robots strictly west of `p` in its own row.
pub fn west_count(s: &Snapshot, p: Position) -> usize {
    robots_in_row(s, p.y).iter().filter(|q| q.x < p.x).count()
}

/// Dense west packing on alternate nodes: `p` sits an even offset from the
/// west bound and exactly `offset/2` robots sit west of it in its row.
pub fn settled_in_row(s: &Snapshot, p: Position, x_min: i64) -> bool {
    let offset = p.x - x_min;
    offset % 2 == 0 && west_count(s, p) as i64 == offset / 2
}

/// Whether every robot sits in an odd row within the first `d` rows.
pub fn all_in_odd_band(s: &Snapshot, y_max: i64, d: i64) -> bool {
    s.positions().iter().all(|&p| {
        let j = row_index(p, y_max);
        j <= d && j % 2 == 1
    })
}

/// Whether some odd row strictly above `p`'s row holds fewer than `rc`
/// robots. Meaningful for robots in odd rows.
pub fn deficient_odd_row_above(s: &Snapshot, p: Position, y_max: i64, rc: i64) -> bool {
    let j = row_index(p, y_max);
    let mut above = 1;
    while above < j {
        let y = y_max - (above - 1);
        if (robots_in_row(s, y).len() as i64) < rc {
            return true;
        }
        above += 2;
    }
    false
}

fn all_settled(s: &Snapshot, x_min: i64) -> bool {
    s.positions().iter().all(|&p| settled_in_row(s, p, x_min))
}

/// Would the ordinary Ψ4/Ψ5 rules move the robot at `p` right now?
fn has_vertical_move(s: &Snapshot, p: Position, dims: Dimensions, bounds: Bounds) -> bool {
    let j = row_index(p, bounds.y_max);
    let wc = west_count(s, p) as i64;
    if wc < dims.rc {
        return j != 1 && !occupied(s, p.north(2));
    }
    if j == 1 {
        return !occupied(s, p.south(2));
    }
    if deficient_odd_row_above(s, p, bounds.y_max, dims.rc) {
        !occupied(s, p.north(2))
    } else {
        !occupied(s, p.south(2))
    }
}

/// Detects the stalled-rebalance configuration and names the robot that
/// resolves it, together with the column it climbs from.
///
/// A fully compacted placement can leave the row above the bottom row
/// short of robots while the node two rows above every robot is occupied:
/// west packing stacks the short rows column-on-column, so no Ψ-case
/// produces a move even though the formation is not final. The east-most
/// robot of the bottom row then walks east to the first free column of
/// the row above it and climbs in, arriving exactly on its packed slot.
/// Everyone else holds still until the relocation lands.
///
/// Requires that all robots are in the odd band (checked by the caller)
/// and that the snapshot is not final.
fn rebalance_mover(s: &Snapshot, dims: Dimensions, bounds: Bounds) -> Option<(Position, i64)> {
    let y_bottom = s.positions().iter().map(|p| p.y).min().expect("nonempty");
    if row_index(Position::new(bounds.x_min, y_bottom), bounds.y_max) < 3 {
        return None;
    }
    let mover = *robots_in_row(s, y_bottom)
        .last()
        .expect("bottom row nonempty");
    if s.positions()
        .iter()
        .any(|&p| p != mover && !settled_in_row(s, p, bounds.x_min))
    {
        return None;
    }
    let count_above = robots_in_row(s, y_bottom + 2).len() as i64;
    if count_above >= dims.rc {
        return None;
    }
    // Only step in when the ordinary vertical rules are all blocked. A
    // mid-walk mover is skipped here: its own column check is meaningless
    // until it reaches the climb column.
    let stalled = s.positions().iter().all(|&p| {
        if p == mover && !settled_in_row(s, p, bounds.x_min) {
            return true;
        }
        !has_vertical_move(s, p, dims, bounds)
    });
    if !stalled {
        return None;
    }
    let climb_x = bounds.x_min + 2 * count_above;
    if mover.x > climb_x {
        return None; // still west of its packed slot; Ψ3 compaction applies
    }
    Some((mover, climb_x))
}

/// Total classification of one robot's situation. Exactly one label per
/// snapshot; the order of the checks resolves the protocol's phases:
/// band entry, row compaction, then row balancing.
pub fn classify(s: &Snapshot) -> CaseLabel {
    let n = s.len();
    if n == 1 || formation::is_final_set(s.positions()) {
        return CaseLabel::Settled;
    }
    let dims = find_dimension(n);
    let bounds = Bounds::of(s);
    let me = s.me();
    let j = row_index(me, bounds.y_max);
    if j > dims.d {
        return CaseLabel::Psi2;
    }
    if j % 2 == 0 {
        return CaseLabel::Psi1;
    }
    if !all_in_odd_band(s, bounds.y_max, dims.d) {
        // odd-band robots hold still while Ψ1/Ψ2 robots migrate
        return CaseLabel::Wait;
    }
    if let Some((mover, climb_x)) = rebalance_mover(s, dims, bounds) {
        if me == mover {
            return if me.x == climb_x {
                CaseLabel::Psi4
            } else {
                CaseLabel::Psi3East
            };
        }
        return CaseLabel::Wait;
    }
    if !settled_in_row(s, me, bounds.x_min) {
        // Dense west packing sorts each robot onto its own node: the k-th
        // robot from the west rests at offset 2k, and no move ever takes
        // a robot past a row-mate, so the resting node is stable while
        // the row compacts. West of it the robot hops east, east of it
        // west; mixing the two directions by local vacancy alone lets a
        // hop undo a parity fix indefinitely under adversarial schedules.
        let resting_x = bounds.x_min + 2 * west_count(s, me) as i64;
        if me.x > resting_x {
            return if westward_movable(s, me, bounds.x_min) {
                CaseLabel::Psi3West
            } else {
                CaseLabel::Wait
            };
        }
        return if !occupied(s, me.east(1)) && !occupied(s, me.east(2)) {
            CaseLabel::Psi3East
        } else {
            CaseLabel::Wait
        };
    }
    if !all_settled(s, bounds.x_min) {
        // row compaction still in progress elsewhere
        return CaseLabel::Wait;
    }
    let wc = west_count(s, me) as i64;
    if wc < dims.rc && j != 1 && !occupied(s, me.north(2)) {
        return CaseLabel::Psi4;
    }
    if wc >= dims.rc {
        if j == 1 {
            return if occupied(s, me.south(2)) {
                CaseLabel::Wait
            } else {
                CaseLabel::Psi5South
            };
        }
        if deficient_odd_row_above(s, me, bounds.y_max, dims.rc) {
            return if occupied(s, me.north(2)) {
                CaseLabel::Wait
            } else {
                CaseLabel::Psi5North
            };
        }
        return if occupied(s, me.south(2)) {
            CaseLabel::Wait
        } else {
            CaseLabel::Psi5South
        };
    }
    CaseLabel::Settled
}

fn raw_move(s: &Snapshot) -> MoveDecision {
    let me = s.me();
    let case = classify(s);
    match case {
        CaseLabel::Wait | CaseLabel::Settled => MoveDecision::stay(case),
        CaseLabel::Psi1 | CaseLabel::Psi2 => {
            if !occupied(s, me.north(1)) {
                MoveDecision::step_to(case, me.north(1))
            } else if !occupied(s, me.east(1)) {
                MoveDecision::step_to(case, me.east(1))
            } else {
                // both blocked: wait for one of them to clear
                MoveDecision::stay(case)
            }
        }
        CaseLabel::Psi3West => MoveDecision::step_to(case, me.west(1)),
        CaseLabel::Psi3East => MoveDecision::step_to(case, me.east(1)),
        CaseLabel::Psi4 | CaseLabel::Psi5North => {
            MoveDecision::hop_to(case, me.north(1), me.north(2))
        }
        CaseLabel::Psi5South => MoveDecision::hop_to(case, me.south(1), me.south(2)),
    }
}

// west > east > south > north, the protocol's tie priority
pub(crate) fn direction_rank(from: Position, to: Position) -> u8 {
    if to.x < from.x {
        0
    } else if to.x > from.x {
        1
    } else if to.y < from.y {
        2
    } else {
        3
    }
}

/// A robot about to move checks, from the same shared snapshot, whether a
/// robot with higher movement priority computes the same destination. If
/// so it stays this cycle and lets that robot take the node. All robots
/// run the same check on the same data, so a contested node is claimed by
/// exactly one of them.
fn defers_to_rival(s: &Snapshot, me: Position, target: Position) -> bool {
    let my_rank = direction_rank(me, target);
    if my_rank == 0 {
        return false;
    }
    // sources that could out-rank a claim on `target`: a west step from
    // its east neighbour, an east step from its west neighbour, a south
    // hop from two rows above
    let rivals = [target.east(1), target.west(1), target.north(2)];
    for q in rivals {
        if q == me || !occupied(s, q) {
            continue;
        }
        let view = s.with_me(q).expect("rival is an observed robot");
        if let Action::Go { target: t, .. } = raw_move(&view).action {
            if t == target && direction_rank(q, t) < my_rank {
                return true;
            }
        }
    }
    false
}

/// The full compute phase: classification, target selection and priority
/// deference, as a pure function of the snapshot.
pub fn compute_move(s: &Snapshot) -> MoveDecision {
    let decision = raw_move(s);
    if let Action::Go { target, .. } = decision.action {
        if defers_to_rival(s, s.me(), target) {
            return MoveDecision::stay(decision.case);
        }
    }
    decision
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Snapshot;
    use proptest::prelude::*;

    fn snap(positions: &[(i64, i64)], me: (i64, i64)) -> Snapshot {
        Snapshot::new(
            positions.iter().map(|&(x, y)| Position::new(x, y)),
            Position::new(me.0, me.1),
        )
        .unwrap()
    }

    #[test]
    fn dimension_examples() {
        assert_eq!(find_dimension(8), Dimensions { rc: 3, d: 5 });
        assert_eq!(find_dimension(1), Dimensions { rc: 1, d: 1 });
        assert_eq!(find_dimension(9), Dimensions { rc: 3, d: 5 });
        assert_eq!(find_dimension(10), Dimensions { rc: 4, d: 7 });
    }

    #[test]
    #[should_panic(expected = "n >= 1")]
    fn dimension_rejects_zero() {
        find_dimension(0);
    }

    #[test]
    fn bound_examples() {
        let s = snap(&[(2, -3), (5, 1), (-4, 0)], (5, 1));
        assert_eq!(find_y_max(&s), 1);
        assert_eq!(find_x_min(&s), -4);
        let s = snap(&[(0, 7), (3, 7)], (0, 7));
        assert_eq!(find_y_max(&s), 7);
        let s = snap(&[(-1, 2), (-1, 5)], (-1, 2));
        assert_eq!(find_x_min(&s), -1);
        let s = snap(&[(0, 0)], (0, 0));
        assert_eq!(find_y_max(&s), 0);
        assert_eq!(find_x_min(&s), 0);
    }

    #[test]
    fn westward_movable_examples() {
        let s = snap(&[(0, 0), (5, 0)], (5, 0));
        assert!(westward_movable(&s, Position::new(5, 0), 0));
        let s = snap(&[(0, 0), (2, 0)], (2, 0));
        assert!(!westward_movable(&s, Position::new(2, 0), 0));
        let s = snap(&[(0, 0)], (0, 0));
        assert!(!westward_movable(&s, Position::new(0, 0), 0));
    }

    #[test]
    fn compaction_is_directed_at_the_resting_node() {
        // a crowded prefix: each robot heads for its own slot and nobody
        // doubles back. The robot at offset 2 has two row-mates west, so
        // its resting node is offset 4 and it moves east despite the free
        // space to its west-side being checked first in the naive order.
        let s = snap(&[(0, 0), (1, 0), (2, 0)], (2, 0));
        assert_eq!(classify(&s), CaseLabel::Psi3East);
        // a robot east of its resting node with a jammed west side waits
        // instead of sidestepping east
        let s = snap(&[(0, 0), (4, 0), (5, 0)], (5, 0));
        assert_eq!(classify(&s), CaseLabel::Wait);
    }

    #[test]
    fn settled_in_row_examples() {
        let s = snap(&[(0, 0), (2, 0)], (2, 0));
        assert!(settled_in_row(&s, Position::new(2, 0), 0));
        let s = snap(&[(0, 0), (1, 0)], (1, 0));
        assert!(!settled_in_row(&s, Position::new(1, 0), 0));
        let s = snap(&[(4, 0)], (4, 0));
        assert!(!settled_in_row(&s, Position::new(4, 0), 0));
    }

    #[test]
    fn odd_band_examples() {
        let s = snap(&[(0, 0), (2, 0), (1, -2)], (0, 0));
        assert!(all_in_odd_band(&s, 0, 5));
        let s = snap(&[(0, 0), (0, -1)], (0, 0));
        assert!(!all_in_odd_band(&s, 0, 3));
        let s = snap(&[(0, 0), (0, -6)], (0, 0));
        assert!(!all_in_odd_band(&s, 0, 5));
    }

    #[test]
    fn west_count_examples() {
        let s = snap(&[(0, 0), (2, 0), (4, 0)], (4, 0));
        assert_eq!(west_count(&s, Position::new(4, 0)), 2);
        let s = snap(&[(0, 0)], (0, 0));
        assert_eq!(west_count(&s, Position::new(0, 0)), 0);
        let s = snap(&[(0, 0), (2, 1)], (2, 1));
        assert_eq!(west_count(&s, Position::new(2, 1)), 0);
    }

    #[test]
    fn deficient_row_examples() {
        // three robots fill row 1 (rc = 3 needs n in 5..=9); row 3 holds me
        let s = snap(
            &[(0, 0), (2, 0), (4, 0), (0, -2), (2, -2), (4, -2)],
            (0, -2),
        );
        assert!(!deficient_odd_row_above(&s, Position::new(0, -2), 0, 3));
        // only two robots in row 1: deficient
        let s = snap(&[(0, 0), (2, 0), (0, -2), (2, -2), (4, -2)], (0, -2));
        assert!(deficient_odd_row_above(&s, Position::new(0, -2), 0, 3));
        // row 1 has no rows above it
        let s = snap(&[(0, 0), (2, 0)], (0, 0));
        assert!(!deficient_odd_row_above(&s, Position::new(0, 0), 0, 2));
    }

    #[test]
    fn classify_band_entry_cases() {
        // eight robots, d = 5: a robot in even row 2 is in Ψ1
        let s = snap(
            &[
                (0, 0),
                (3, -1),
                (5, -2),
                (1, -3),
                (6, -4),
                (2, -5),
                (4, -6),
                (0, -8),
            ],
            (3, -1),
        );
        assert_eq!(classify(&s), CaseLabel::Psi1);
        // row 7 lies beyond d = 5: Ψ2
        let below = s.with_me(Position::new(4, -6)).unwrap();
        assert_eq!(classify(&below), CaseLabel::Psi2);
    }

    #[test]
    fn classify_compaction_cases() {
        let s = snap(&[(0, 0), (5, 0)], (5, 0));
        assert_eq!(classify(&s), CaseLabel::Psi3West);
        let s = snap(&[(0, 0), (1, 0)], (1, 0));
        assert_eq!(classify(&s), CaseLabel::Psi3East);
        let s = snap(&[(7, -3)], (7, -3));
        assert_eq!(classify(&s), CaseLabel::Settled);
    }

    #[test]
    fn compute_move_examples() {
        // n = 2, me in row 2 with the node above occupied: sidestep east
        let s = snap(&[(0, 0), (0, -1)], (0, -1));
        let d = compute_move(&s);
        assert_eq!(d.case, CaseLabel::Psi1);
        assert_eq!(d.target(), Some(Position::new(1, -1)));
        // west hop
        let s = snap(&[(0, 0), (5, 0)], (5, 0));
        assert_eq!(compute_move(&s).target(), Some(Position::new(4, 0)));
        // a single robot is already the formation
        let s = snap(&[(7, -3)], (7, -3));
        assert_eq!(compute_move(&s).action, Action::Stay);
        assert_eq!(compute_move(&s).case, CaseLabel::Settled);
    }

    #[test]
    fn psi5_south_moves_two_rows_down() {
        // rc = 3 (n = 6); row 1 holds four settled robots, so the fourth
        // is excess and row 1 robots go south when the node two below is free
        let s = snap(&[(0, 0), (2, 0), (4, 0), (6, 0), (0, -2), (2, -2)], (6, 0));
        assert_eq!(classify(&s), CaseLabel::Psi5South);
        let d = compute_move(&s);
        assert_eq!(d.target(), Some(Position::new(6, -2)));
        match d.action {
            Action::Go { ref path, .. } => {
                assert_eq!(path, &vec![Position::new(6, -1), Position::new(6, -2)]);
            }
            Action::Stay => panic!("expected a move"),
        }
    }

    #[test]
    fn psi4_climbs_into_free_column() {
        // rows of 1 and 2 (n = 3, rc = 2): the east robot of row 3 sees a
        // free node two above and climbs
        let s = snap(&[(0, 0), (0, -2), (2, -2)], (2, -2));
        assert_eq!(classify(&s), CaseLabel::Psi4);
        assert_eq!(compute_move(&s).target(), Some(Position::new(2, 0)));
    }

    #[test]
    fn stalled_pair_rebalances_eastward_then_climbs() {
        // n = 2 stacked on one column: no Ψ-case applies, the bottom robot
        // relocates east and climbs into the free slot of row 1
        let s = snap(&[(0, 0), (0, -2)], (0, -2));
        assert_eq!(classify(&s), CaseLabel::Psi3East);
        assert_eq!(compute_move(&s).target(), Some(Position::new(1, -2)));
        // the top robot holds still
        let top = s.with_me(Position::new(0, 0)).unwrap();
        assert_eq!(classify(&top), CaseLabel::Wait);
        // once on the climb column the mover goes two rows up
        let s = snap(&[(0, 0), (2, -2)], (2, -2));
        assert_eq!(classify(&s), CaseLabel::Psi4);
        assert_eq!(compute_move(&s).target(), Some(Position::new(2, 0)));
    }

    #[test]
    fn north_mover_defers_to_east_rival() {
        // n = 4, d = 3, north bound at y = 10. Both (0, 5) and (-1, 6) sit
        // below the band; (0, 5) can step north to (0, 6) while (-1, 6),
        // blocked above by (-1, 7), sidesteps east onto the same node.
        // East beats north, so (0, 5) waits.
        let positions = &[(0, 10), (-1, 7), (-1, 6), (0, 5)];
        let rival = snap(positions, (-1, 6));
        let r = compute_move(&rival);
        assert_eq!(r.case, CaseLabel::Psi2);
        assert_eq!(r.target(), Some(Position::new(0, 6)));
        let s = snap(positions, (0, 5));
        let d = compute_move(&s);
        assert_eq!(d.case, CaseLabel::Psi2);
        assert_eq!(d.action, Action::Stay);
    }

    fn arb_snapshot() -> impl Strategy<Value = Snapshot> {
        proptest::collection::btree_set((-12i64..=12, -12i64..=12), 1..=20).prop_flat_map(|raw| {
            let positions: Vec<Position> = raw.iter().map(|&(x, y)| Position::new(x, y)).collect();
            let len = positions.len();
            (Just(positions), 0..len).prop_map(|(positions, idx)| {
                let me = positions[idx];
                Snapshot::new(positions, me).unwrap()
            })
        })
    }

    proptest! {
        // Oblivious: the decision is a function of the snapshot alone.
        #[test]
        fn compute_move_is_pure(s in arb_snapshot()) {
            prop_assert_eq!(compute_move(&s), compute_move(&s));
        }

        // Decisions never target nodes north of Y_MAX or west of X_MIN.
        #[test]
        fn moves_respect_bounds(s in arb_snapshot()) {
            if let Some(t) = compute_move(&s).target() {
                prop_assert!(t.y <= find_y_max(&s));
                prop_assert!(t.x >= find_x_min(&s));
            }
        }

        // Translating the snapshot translates the decision with it.
        #[test]
        fn moves_are_translation_equivariant(s in arb_snapshot(), dx in -1000i64..=1000, dy in -1000i64..=1000) {
            let shifted = Snapshot::new(
                s.positions().iter().map(|p| Position::new(p.x + dx, p.y + dy)),
                Position::new(s.me().x + dx, s.me().y + dy),
            ).unwrap();
            let base = compute_move(&s);
            let moved = compute_move(&shifted);
            prop_assert_eq!(base.case, moved.case);
            prop_assert_eq!(
                base.target().map(|t| Position::new(t.x + dx, t.y + dy)),
                moved.target()
            );
        }

        // Vertical hops connect odd rows through an empty even row.
        #[test]
        fn vertical_hops_connect_odd_rows(s in arb_snapshot()) {
            let d = compute_move(&s);
            if matches!(d.case, CaseLabel::Psi4 | CaseLabel::Psi5North | CaseLabel::Psi5South) {
                if let Action::Go { target, path } = d.action {
                    let y_max = find_y_max(&s);
                    let me = s.me();
                    prop_assert_eq!(target.x, me.x);
                    prop_assert_eq!((target.y - me.y).abs(), 2);
                    prop_assert_eq!(row_index(me, y_max) % 2, 1);
                    prop_assert_eq!(row_index(target, y_max) % 2, 1);
                    prop_assert_eq!(path.len(), 2);
                    prop_assert!(!occupied(&s, path[0]));
                }
            }
        }

        // classify is total: every distinct-position snapshot gets a label.
        #[test]
        fn classify_is_total(s in arb_snapshot()) {
            let _ = classify(&s);
        }
    }

    #[test]
    fn brute_force_dimension_check() {
        // independent oracle: smallest rc with rc^2 >= n by linear search
        for n in 1..=2000usize {
            let mut rc = 1i64;
            while rc * rc < n as i64 {
                rc += 1;
            }
            let dims = find_dimension(n);
            assert_eq!(dims.rc, rc, "n={n}");
            assert_eq!(dims.d, 2 * rc - 1, "n={n}");
            assert!((rc - 1) * (rc - 1) < n as i64 && n as i64 <= rc * rc);
        }
    }
}
