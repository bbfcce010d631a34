//! The target formation: alternate nodes anchored at the north-west bounds.

use std::collections::BTreeSet;

use crate::compute::find_dimension;
use crate::grid::Position;

/// The unique final placement of `n` robots anchored at `(x_min, y_max)`:
/// west-packed rows of `rc` robots on alternate nodes, one robot every
/// second column and every second row, with the last row possibly partial.
pub fn target_set(n: usize, x_min: i64, y_max: i64) -> BTreeSet<Position> {
    let rc = find_dimension(n).rc;
    (0..n as i64)
        .map(|k| Position::new(x_min + 2 * (k % rc), y_max - 2 * (k / rc)))
        .collect()
}

/// Whether `positions` already form the target anchored at their own bounds.
pub fn is_final_set(positions: &BTreeSet<Position>) -> bool {
    let Some(x_min) = positions.iter().map(|p| p.x).min() else {
        return false;
    };
    let y_max = positions.iter().map(|p| p.y).max().expect("nonempty");
    *positions == target_set(positions.len(), x_min, y_max)
}
