//! Grid coordinates, robot configurations, and per-cycle snapshots.
//!
//! Rows are indexed southward from the north bound of the current
//! distribution: the row holding the north-most robot is row 1, the row
//! below it row 2, and so on. Robots are oblivious, so the index is
//! recomputed from the snapshot on every activation.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// A node of the integer grid. Robots occupy nodes only, never edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Position {
    pub x: i64,
    pub y: i64,
}

impl Position {
    pub const fn new(x: i64, y: i64) -> Self {
        Self { x, y }
    }

    pub fn north(self, steps: i64) -> Self {
        Self::new(self.x, self.y + steps)
    }

    pub fn south(self, steps: i64) -> Self {
        Self::new(self.x, self.y - steps)
    }

    pub fn east(self, steps: i64) -> Self {
        Self::new(self.x + steps, self.y)
    }

    pub fn west(self, steps: i64) -> Self {
        Self::new(self.x - steps, self.y)
    }
}

// Ordered by (y, x) so that a row is a contiguous range in a sorted set
// and so that position order matches the simulator's tie-break rule.
impl Ord for Position {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.y, self.x).cmp(&(other.y, other.x))
    }
}

impl PartialOrd for Position {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Simulator-side robot identifier, `1..=n`.
///
/// The protocol never reads it: `compute_move` sees positions only, so
/// anonymity is preserved. Identifiers exist for bookkeeping in round
/// records and traces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RobotId(pub u32);

impl fmt::Display for RobotId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GridError {
    #[error("duplicate position {0}")]
    DuplicatePosition(Position),
    #[error("configuration must contain at least one robot")]
    EmptyConfiguration,
    #[error("snapshot owner {0} is not among the observed positions")]
    OwnerMissing(Position),
}

/// The global placement of all robots on pairwise-distinct nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Configuration {
    robots: BTreeMap<RobotId, Position>,
}

impl Configuration {
    /// Builds a configuration, rejecting empty maps and shared nodes.
    pub fn new(robots: BTreeMap<RobotId, Position>) -> Result<Self, GridError> {
        if robots.is_empty() {
            return Err(GridError::EmptyConfiguration);
        }
        let mut seen = BTreeSet::new();
        for &p in robots.values() {
            if !seen.insert(p) {
                return Err(GridError::DuplicatePosition(p));
            }
        }
        Ok(Self { robots })
    }

    /// Builds a configuration with ids `1..=n` assigned in iteration order.
    pub fn from_positions<I>(positions: I) -> Result<Self, GridError>
    where
        I: IntoIterator<Item = Position>,
    {
        let robots = positions
            .into_iter()
            .enumerate()
            .map(|(i, p)| (RobotId(i as u32 + 1), p))
            .collect();
        Self::new(robots)
    }

    pub fn len(&self) -> usize {
        self.robots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.robots.is_empty() // always false: `new` rejects empty maps
    }

    pub fn get(&self, id: RobotId) -> Option<Position> {
        self.robots.get(&id).copied()
    }

    pub fn ids(&self) -> impl Iterator<Item = RobotId> + '_ {
        self.robots.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (RobotId, Position)> + '_ {
        self.robots.iter().map(|(&id, &p)| (id, p))
    }

    pub fn as_map(&self) -> &BTreeMap<RobotId, Position> {
        &self.robots
    }

    pub fn position_set(&self) -> BTreeSet<Position> {
        self.robots.values().copied().collect()
    }

    /// West bound of the placement.
    pub fn x_min(&self) -> i64 {
        self.robots.values().map(|p| p.x).min().expect("nonempty")
    }

    /// North bound of the placement.
    pub fn y_max(&self) -> i64 {
        self.robots.values().map(|p| p.y).max().expect("nonempty")
    }
}

/// What one robot sees in its Look phase: the full set of robot positions
/// (itself included) plus which of those nodes is its own.
///
/// All robots activated in the same round share one frozen set, so the
/// set is reference-counted rather than copied per robot.
#[derive(Debug, Clone)]
pub struct Snapshot {
    others: Arc<BTreeSet<Position>>,
    me: Position,
}

impl Snapshot {
    /// Builds a snapshot from an explicit list of positions.
    pub fn new<I>(positions: I, me: Position) -> Result<Self, GridError>
    where
        I: IntoIterator<Item = Position>,
    {
        let mut others = BTreeSet::new();
        for p in positions {
            if !others.insert(p) {
                return Err(GridError::DuplicatePosition(p));
            }
        }
        Self::shared(Arc::new(others), me)
    }

    /// Builds a per-robot view over a set shared by the whole round.
    pub fn shared(others: Arc<BTreeSet<Position>>, me: Position) -> Result<Self, GridError> {
        if !others.contains(&me) {
            return Err(GridError::OwnerMissing(me));
        }
        Ok(Self { others, me })
    }

    /// The same world seen from another robot's node.
    pub fn with_me(&self, me: Position) -> Result<Self, GridError> {
        Self::shared(Arc::clone(&self.others), me)
    }

    pub fn me(&self) -> Position {
        self.me
    }

    pub fn positions(&self) -> &BTreeSet<Position> {
        &self.others
    }

    pub fn len(&self) -> usize {
        self.others.len()
    }

    pub fn is_empty(&self) -> bool {
        self.others.is_empty() // always false: the owner is a member
    }
}

/// 1-based row number of `p`, counted southward from the bound `y_max`.
///
/// Panics if `p` lies north of the bound; no robot can, because the bound
/// is the maximum y over all robots.
pub fn row_index(p: Position, y_max: i64) -> i64 {
    assert!(
        p.y <= y_max,
        "position {p} lies north of the bound y_max={y_max}"
    );
    y_max - p.y + 1
}

/// Whether node `p` holds a robot in snapshot `s`.
pub fn occupied(s: &Snapshot, p: Position) -> bool {
    s.positions().contains(&p)
}

/// All robots in the row at height `y`, west to east.
pub fn robots_in_row(s: &Snapshot, y: i64) -> Vec<Position> {
    s.positions()
        .range(Position::new(i64::MIN, y)..=Position::new(i64::MAX, y))
        .copied()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn snap(positions: &[(i64, i64)], me: (i64, i64)) -> Snapshot {
        Snapshot::new(
            positions.iter().map(|&(x, y)| Position::new(x, y)),
            Position::new(me.0, me.1),
        )
        .unwrap()
    }

    #[test]
    fn row_index_examples() {
        assert_eq!(row_index(Position::new(3, 5), 5), 1);
        assert_eq!(row_index(Position::new(0, 2), 5), 4);
        assert_eq!(row_index(Position::new(-7, -7), 0), 8);
    }

    #[test]
    #[should_panic(expected = "north of the bound")]
    fn row_index_rejects_positions_above_bound() {
        row_index(Position::new(0, 6), 5);
    }

    #[test]
    fn occupied_examples() {
        let s = snap(&[(0, 0)], (0, 0));
        assert!(occupied(&s, Position::new(0, 0)));
        assert!(!occupied(&s, Position::new(0, 1)));
        let s = snap(&[(1, 1), (2, 1)], (1, 1));
        assert!(occupied(&s, Position::new(2, 1)));
    }

    #[test]
    fn robots_in_row_sorts_west_to_east() {
        let s = snap(&[(4, 0), (1, 0), (2, 5)], (4, 0));
        assert_eq!(
            robots_in_row(&s, 0),
            vec![Position::new(1, 0), Position::new(4, 0)]
        );
        assert!(robots_in_row(&s, 3).is_empty());
        let s = snap(&[(-2, 1), (-5, 1)], (-2, 1));
        assert_eq!(
            robots_in_row(&s, 1),
            vec![Position::new(-5, 1), Position::new(-2, 1)]
        );
    }

    #[test]
    fn configuration_rejects_duplicates_and_empty() {
        let err = Configuration::from_positions([Position::new(0, 0), Position::new(0, 0)]);
        assert_eq!(err, Err(GridError::DuplicatePosition(Position::new(0, 0))));
        assert_eq!(
            Configuration::from_positions([]),
            Err(GridError::EmptyConfiguration)
        );
    }

    #[test]
    fn snapshot_requires_owner_membership() {
        let err = Snapshot::new([Position::new(0, 0)], Position::new(1, 1));
        assert_eq!(
            err.err(),
            Some(GridError::OwnerMissing(Position::new(1, 1)))
        );
    }

    proptest! {
        // Row index is a bijection on rows: parity flips with each unit
        // change in y and the map is invertible.
        #[test]
        fn row_index_bijection(y in -500i64..=500, y_max in 500i64..=600) {
            let j = row_index(Position::new(0, y), y_max);
            prop_assert!(j >= 1);
            prop_assert_eq!(y_max - j + 1, y);
            let j_south = row_index(Position::new(0, y - 1), y_max);
            prop_assert_eq!(j_south, j + 1);
            prop_assert!((j % 2 == 0) != (j_south % 2 == 0));
        }

        // Concatenating every row scan reproduces the snapshot exactly.
        #[test]
        fn rows_partition_snapshot(raw in proptest::collection::btree_set((-50i64..=50, -50i64..=50), 1..30)) {
            let positions: BTreeSet<Position> =
                raw.iter().map(|&(x, y)| Position::new(x, y)).collect();
            let me = *positions.iter().next().unwrap();
            let s = Snapshot::new(positions.iter().copied(), me).unwrap();
            let lo = positions.iter().map(|p| p.y).min().unwrap();
            let hi = positions.iter().map(|p| p.y).max().unwrap();
            let mut collected = Vec::new();
            for y in lo..=hi {
                collected.extend(robots_in_row(&s, y));
            }
            let collected: BTreeSet<Position> = collected.into_iter().collect();
            prop_assert_eq!(collected, positions);
        }
    }
}
