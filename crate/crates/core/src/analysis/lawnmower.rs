//! Lawn-mower baseline that knows the ROI's bounding rectangle.

use crate::explorer::kinematics::{EdgeCosts, KinematicsError};
use crate::grid_world::{Direction, GridRoi};

/// Time to sweep a `width × height` rectangle row by row, starting in a
/// corner cell. Rows run along `along` and alternate heading; each step to
/// the next row takes the cheaper perpendicular heading.
fn sweep_rows(width: u32, height: u32, along: Direction, costs: &EdgeCosts) -> f64 {
    let (a, b) = (costs.get(along), costs.get(along.opposite()));
    let side = along.perpendicular();
    let step = costs.get(side).min(costs.get(side.opposite()));
    let first = height.div_ceil(2) as f64;
    let second = (height / 2) as f64;
    (width - 1) as f64 * (first * a + second * b) + (height - 1) as f64 * step
}

/// Fastest lawn-mower cover of one strip over both row orientations.
fn strip_time(width: u32, height: u32, costs: &EdgeCosts) -> f64 {
    [
        sweep_rows(width, height, Direction::East, costs),
        sweep_rows(width, height, Direction::West, costs),
        sweep_rows(height, width, Direction::North, costs),
        sweep_rows(height, width, Direction::South, costs),
    ]
    .into_iter()
    .fold(f64::INFINITY, f64::min)
}

/// Makespan when the side of length `cut` is divided into at most `robots`
/// strips; the widest strip dominates.
fn split_time(cut: u32, keep: u32, robots: usize, cut_is_x: bool, costs: &EdgeCosts) -> f64 {
    let parts = (robots as u32).min(cut).max(1);
    let widest = cut.div_ceil(parts);
    if cut_is_x {
        strip_time(widest, keep, costs)
    } else {
        strip_time(keep, widest, costs)
    }
}

/// Baseline makespan: the bounding box is split into strips along x or along
/// y, whichever finishes sooner. Travel to the strips is ignored.
pub fn lawnmower_lower_bound(world: &GridRoi, robots: usize, robot_speed: f64) -> Result<f64, KinematicsError> {
    let costs = EdgeCosts::new(robot_speed, world.roi_speed(), world.translation_dir())?;
    let (lo, hi) = world.bounding_box();
    let w = (hi.x - lo.x + 1) as u32;
    let h = (hi.y - lo.y + 1) as u32;
    let robots = robots.max(1);
    Ok(split_time(w, h, robots, true, &costs).min(split_time(h, w, robots, false, &costs)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_world::Cell;

    #[test]
    fn single_row_static() {
        let world = GridRoi::stationary((0..10).map(|x| Cell::new(x, 0)), Cell::new(0, 0)).unwrap();
        assert_eq!(lawnmower_lower_bound(&world, 1, 1.0).unwrap(), 9.0);
        assert_eq!(lawnmower_lower_bound(&world, 2, 1.0).unwrap(), 4.0);
        // Ten robots already give one cell each.
        assert_eq!(lawnmower_lower_bound(&world, 10, 1.0).unwrap(), 0.0);
        assert_eq!(lawnmower_lower_bound(&world, 50, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn translating_rows_prefer_cheap_heading() {
        // A 3×1 row translating east: sweeping west costs 1/(S_r + S_p).
        let world = GridRoi::stationary((0..3).map(|x| Cell::new(x, 0)), Cell::new(0, 0))
            .unwrap()
            .with_motion(Direction::East, 1.0)
            .unwrap();
        let t = lawnmower_lower_bound(&world, 1, 2.0).unwrap();
        assert!((t - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn square_block() {
        let cells: Vec<Cell> = (0..4).flat_map(|x| (0..4).map(move |y| Cell::new(x, y))).collect();
        let world = GridRoi::stationary(cells, Cell::new(0, 0)).unwrap();
        assert_eq!(lawnmower_lower_bound(&world, 1, 2.0).unwrap(), 7.5);
        assert_eq!(lawnmower_lower_bound(&world, 3, 2.0).unwrap(), 3.5);
    }
}
