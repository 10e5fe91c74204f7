//! Travel times in the ROI's co-moving frame.
//!
//! A robot flying at ground speed `S_r` while the ROI drifts at `S_p` along
//! `d` has relative velocity `u` with `|u + S_p d| = S_r`. Moving a relative
//! displacement `x` in a straight line takes the positive root of
//! `(S_r² − S_p²) t² − 2 S_p (x·d) t − |x|² = 0`.

use thiserror::Error;

use crate::grid_world::Direction;

#[derive(Debug, Error, PartialEq)]
pub enum KinematicsError {
    #[error("robot speed {robot} must exceed ROI speed {roi}")]
    TooSlow { robot: f64, roi: f64 },
    #[error("speeds must be finite and non-negative (robot {robot}, ROI {roi})")]
    BadSpeed { robot: f64, roi: f64 },
}

pub fn check_speeds(robot_speed: f64, roi_speed: f64) -> Result<(), KinematicsError> {
    if !robot_speed.is_finite() || !roi_speed.is_finite() || roi_speed < 0.0 {
        return Err(KinematicsError::BadSpeed {
            robot: robot_speed,
            roi: roi_speed,
        });
    }
    if robot_speed <= roi_speed {
        return Err(KinematicsError::TooSlow {
            robot: robot_speed,
            roi: roi_speed,
        });
    }
    Ok(())
}

/// Time to cross one unit edge heading `direction`.
pub fn traversal_time(
    direction: Direction,
    robot_speed: f64,
    roi_speed: f64,
    translation_dir: Direction,
) -> Result<f64, KinematicsError> {
    check_speeds(robot_speed, roi_speed)?;
    Ok(if direction == translation_dir {
        1.0 / (robot_speed - roi_speed)
    } else if direction == translation_dir.opposite() {
        1.0 / (robot_speed + roi_speed)
    } else {
        1.0 / (robot_speed * robot_speed - roi_speed * roi_speed).sqrt()
    })
}

/// Straight-line travel time for relative displacement `(dx, dy)`.
///
/// This is a norm-like gauge, so it obeys the triangle inequality and agrees
/// with [`traversal_time`] on unit axis moves.
pub fn displacement_time(
    dx: f64,
    dy: f64,
    robot_speed: f64,
    roi_speed: f64,
    translation_dir: Direction,
) -> Result<f64, KinematicsError> {
    check_speeds(robot_speed, roi_speed)?;
    let (ux, uy) = translation_dir.unit();
    let along = dx * ux + dy * uy;
    let norm2 = dx * dx + dy * dy;
    let a = robot_speed * robot_speed - roi_speed * roi_speed;
    let b = roi_speed * along;
    Ok((b + (b * b + a * norm2).sqrt()) / a)
}

/// Per-direction unit-edge times, cached for a fixed parameter set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeCosts {
    north: f64,
    south: f64,
    east: f64,
    west: f64,
}

impl EdgeCosts {
    pub fn new(robot_speed: f64, roi_speed: f64, translation_dir: Direction) -> Result<Self, KinematicsError> {
        let t = |d| traversal_time(d, robot_speed, roi_speed, translation_dir);
        Ok(EdgeCosts {
            north: t(Direction::North)?,
            south: t(Direction::South)?,
            east: t(Direction::East)?,
            west: t(Direction::West)?,
        })
    }

    pub fn get(&self, direction: Direction) -> f64 {
        match direction {
            Direction::North => self.north,
            Direction::South => self.south,
            Direction::East => self.east,
            Direction::West => self.west,
        }
    }
}
