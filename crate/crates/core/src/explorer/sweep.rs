//! Lawn-mowing search for the ROI inside a known bounding box.

use thiserror::Error;

use super::kinematics::{displacement_time, EdgeCosts, KinematicsError};
use crate::grid_world::{Cell, Direction, GridRoi};

#[derive(Debug, Error, PartialEq)]
pub enum SweepError {
    #[error("bounding box {lo}..{hi} is inverted")]
    BadBox { lo: Cell, hi: Cell },
    #[error("swept {swept} cells without seeing the ROI")]
    NotFound { swept: usize },
    #[error(transparent)]
    Speed(#[from] KinematicsError),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepHit {
    pub cell: Cell,
    pub time: f64,
    /// Cells inspected, including the hit.
    pub swept: usize,
}

/// Boustrophedon sweep of the inclusive box `lo..=hi` at one-cell spacing.
///
/// The robot first checks `start`, then flies to the nearest box corner and
/// sweeps rows along x, stepping one row toward the far side after each.
pub fn find_roi_sweep(
    world: &GridRoi,
    lo: Cell,
    hi: Cell,
    start: Cell,
    robot_speed: f64,
) -> Result<SweepHit, SweepError> {
    if lo.x > hi.x || lo.y > hi.y {
        return Err(SweepError::BadBox { lo, hi });
    }
    let dir = world.translation_dir();
    let sp = world.roi_speed();
    let costs = EdgeCosts::new(robot_speed, sp, dir)?;
    if world.contains(start) {
        return Ok(SweepHit {
            cell: start,
            time: 0.0,
            swept: 1,
        });
    }
    let corners = [
        Cell::new(lo.x, lo.y),
        Cell::new(hi.x, lo.y),
        Cell::new(lo.x, hi.y),
        Cell::new(hi.x, hi.y),
    ];
    let corner = corners
        .into_iter()
        .min_by_key(|c| (c.x - start.x).abs() + (c.y - start.y).abs())
        .expect("four corners");
    let mut time = displacement_time(
        (corner.x - start.x) as f64,
        (corner.y - start.y) as f64,
        robot_speed,
        sp,
        dir,
    )?;
    let row_step = if corner.y == lo.y {
        Direction::North
    } else {
        Direction::South
    };
    let rows = hi.y - lo.y + 1;
    let mut along = if corner.x == lo.x {
        Direction::East
    } else {
        Direction::West
    };
    let width = hi.x - lo.x + 1;
    let mut at = corner;
    let mut swept = 0;
    for row in 0..rows {
        for col in 0..width {
            if col > 0 {
                at = at.step(along);
                time += costs.get(along);
            }
            swept += 1;
            if world.contains(at) {
                return Ok(SweepHit { cell: at, time, swept });
            }
        }
        if row + 1 < rows {
            at = at.step(row_step);
            time += costs.get(row_step);
            along = along.opposite();
        }
    }
    Err(SweepError::NotFound { swept })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn world_at(cells: &[(i32, i32)]) -> GridRoi {
        let c: Vec<Cell> = cells.iter().map(|&(x, y)| Cell::new(x, y)).collect();
        GridRoi::stationary(c.clone(), c[0]).unwrap()
    }

    #[test]
    fn start_on_roi_is_immediate() {
        let w = world_at(&[(2, 2)]);
        let hit = find_roi_sweep(&w, Cell::new(0, 0), Cell::new(4, 4), Cell::new(2, 2), 1.0).unwrap();
        assert_eq!(hit.cell, Cell::new(2, 2));
        assert_eq!(hit.time, 0.0);
    }

    #[test]
    fn far_corner_within_area_over_speed() {
        let (w, h) = (6, 5);
        let world = world_at(&[(w - 1, h - 1)]);
        let hit = find_roi_sweep(&world, Cell::new(0, 0), Cell::new(w - 1, h - 1), Cell::new(0, 0), 2.0).unwrap();
        assert_eq!(hit.cell, Cell::new(w - 1, h - 1));
        assert!(hit.time <= (w * h) as f64 / 2.0);
        assert_eq!(hit.swept, (w * h) as usize);
    }

    #[test]
    fn rows_alternate() {
        // Second row is swept right to left, so (1, 1) comes before (0, 1).
        let world = world_at(&[(1, 1), (0, 1)]);
        let hit = find_roi_sweep(&world, Cell::new(0, 0), Cell::new(3, 1), Cell::new(0, 0), 1.0).unwrap();
        assert_eq!(hit.cell, Cell::new(1, 1));
        assert_eq!(hit.time, 6.0);
    }

    #[test]
    fn deterministic_and_not_found() {
        let world = world_at(&[(3, 0), (3, 1)]);
        let a = find_roi_sweep(&world, Cell::new(0, 0), Cell::new(3, 3), Cell::new(-2, -2), 1.0).unwrap();
        let b = find_roi_sweep(&world, Cell::new(0, 0), Cell::new(3, 3), Cell::new(-2, -2), 1.0).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            find_roi_sweep(&world, Cell::new(5, 5), Cell::new(6, 6), Cell::new(5, 5), 1.0),
            Err(SweepError::NotFound { swept: 4 })
        );
        assert!(find_roi_sweep(&world, Cell::new(1, 0), Cell::new(0, 0), Cell::new(0, 0), 1.0).is_err());
    }
}
