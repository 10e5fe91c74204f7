//! Exact offline optimum for tiny ROIs by exhaustive search.

use itertools::Itertools;
use thiserror::Error;

use crate::explorer::kinematics::{displacement_time, traversal_time, KinematicsError};
use crate::grid_world::{Cell, GridRoi};

pub const MAX_CELLS: usize = 8;
pub const MAX_ROBOTS: usize = 2;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("{cells} cells and {robots} robots exceed the exhaustive-search caps")]
    TooLarge { cells: usize, robots: usize },
    #[error("need at least one robot")]
    NoRobots,
    #[error(transparent)]
    Speed(#[from] KinematicsError),
}

fn hop_time(a: Cell, b: Cell, world: &GridRoi, robot_speed: f64) -> Result<f64, KinematicsError> {
    let (dir, sp) = (world.translation_dir(), world.roi_speed());
    match a.direction_to(b) {
        Some(d) => traversal_time(d, robot_speed, sp, dir),
        None => displacement_time((b.x - a.x) as f64, (b.y - a.y) as f64, robot_speed, sp, dir),
    }
}

/// Minimum makespan for `robots` robots to visit every cell and return to
/// the start. Robots may fly straight between any two cells.
pub fn brute_force_opt(world: &GridRoi, robots: usize, robot_speed: f64) -> Result<f64, OracleError> {
    if robots == 0 {
        return Err(OracleError::NoRobots);
    }
    if world.cell_count() > MAX_CELLS || robots > MAX_ROBOTS {
        return Err(OracleError::TooLarge {
            cells: world.cell_count(),
            robots,
        });
    }
    let start = world.start_cell();
    let mut cells = vec![start];
    cells.extend(world.cells().iter().copied().filter(|c| *c != start));
    let n = cells.len();
    let mut cost = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                cost[i][j] = hop_time(cells[i], cells[j], world, robot_speed)?;
            }
        }
    }
    // tour[mask]: best closed tour from the start through the cells in mask.
    let others = n - 1;
    let tour: Vec<f64> = (0..1usize << others)
        .map(|mask| {
            let members: Vec<usize> = (0..others).filter(|b| mask >> b & 1 == 1).map(|b| b + 1).collect();
            members
                .iter()
                .copied()
                .permutations(members.len())
                .map(|order| {
                    let mut at = 0;
                    let mut t = 0.0;
                    for v in order {
                        t += cost[at][v];
                        at = v;
                    }
                    t + cost[at][0]
                })
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let full = (1usize << others) - 1;
    Ok(match robots {
        1 => tour[full],
        _ => (0..=full)
            .map(|m| tour[m].max(tour[full ^ m]))
            .fold(f64::INFINITY, f64::min),
    })
}
