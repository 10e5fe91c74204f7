//! Closed-form time bounds for the multi-robot DFS.

use serde::Serialize;
use thiserror::Error;

use crate::explorer::kinematics::{check_speeds, KinematicsError};

#[derive(Debug, Error, PartialEq)]
pub enum BoundError {
    #[error(transparent)]
    Speed(#[from] KinematicsError),
    #[error("need at least one cell")]
    NoCells,
    #[error("need at least one robot")]
    NoRobots,
    #[error("depth {d_max} is impossible with {cells} cells")]
    BadDepth { d_max: u32, cells: usize },
    #[error("{case:?} needs {need}")]
    CaseMismatch { case: SpecialCase, need: &'static str },
    #[error("optimum must be finite and non-negative, got {0}")]
    BadOpt(f64),
}

/// ⌊log₂ R⌋ for R ≥ 1.
pub fn floor_log2(robots: usize) -> u32 {
    assert!(robots >= 1);
    usize::BITS - 1 - robots.leading_zeros()
}

/// M = (S_r − S_p)(1 + ⌊log₂ R⌋).
pub fn m_factor(robots: usize, robot_speed: f64, roi_speed: f64) -> Result<f64, BoundError> {
    check_speeds(robot_speed, roi_speed)?;
    if robots == 0 {
        return Err(BoundError::NoRobots);
    }
    Ok((robot_speed - roi_speed) * (1 + floor_log2(robots)) as f64)
}

fn check_cells(cells: usize, d_max: u32) -> Result<(), BoundError> {
    if cells == 0 {
        return Err(BoundError::NoCells);
    }
    if d_max as usize >= cells {
        return Err(BoundError::BadDepth { d_max, cells });
    }
    Ok(())
}

/// 2(C + d_max·⌊log₂R⌋) / M.
pub fn upper_bound(
    cells: usize,
    d_max: u32,
    robots: usize,
    robot_speed: f64,
    roi_speed: f64,
) -> Result<f64, BoundError> {
    check_cells(cells, d_max)?;
    let m = m_factor(robots, robot_speed, roi_speed)?;
    let k = floor_log2(robots) as f64;
    Ok(2.0 * (cells as f64 + d_max as f64 * k) / m)
}

/// (C − 1) / ((S_r + S_p) R).
pub fn lower_bound_grid(cells: usize, robots: usize, robot_speed: f64, roi_speed: f64) -> Result<f64, BoundError> {
    check_cells(cells, 0)?;
    check_speeds(robot_speed, roi_speed)?;
    if robots == 0 {
        return Err(BoundError::NoRobots);
    }
    Ok((cells - 1) as f64 / ((robot_speed + roi_speed) * robots as f64))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Variant {
    Grid,
    Arbitrary,
}

/// Right side of the competitive-ratio inequality for a known optimum.
pub fn competitive_rhs(
    opt: f64,
    robots: usize,
    robot_speed: f64,
    roi_speed: f64,
    variant: Variant,
) -> Result<f64, BoundError> {
    if !opt.is_finite() || opt < 0.0 {
        return Err(BoundError::BadOpt(opt));
    }
    let m = m_factor(robots, robot_speed, roi_speed)?;
    let k = floor_log2(robots) as f64;
    let r = robots as f64;
    let (scale, additive) = match variant {
        Variant::Grid => (r + k, 2.0),
        Variant::Arbitrary => (18.0 * r + k, 48.0),
    };
    Ok(2.0 * (robot_speed + roi_speed) * scale / m * opt + additive / m)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SpecialCase {
    /// Multiple robots, static ROI.
    Mrsr,
    /// Single robot, translating ROI.
    Srtr,
    /// Single robot, translating ROI, tightened.
    SrtrTight,
    /// Single robot, static ROI.
    Srsr,
}

pub fn special_case_bound(
    case: SpecialCase,
    cells: usize,
    d_max: u32,
    robots: usize,
    robot_speed: f64,
    roi_speed: f64,
) -> Result<f64, BoundError> {
    check_cells(cells, d_max)?;
    check_speeds(robot_speed, roi_speed)?;
    let single = |need| {
        if robots == 1 {
            Ok(())
        } else {
            Err(BoundError::CaseMismatch { case, need })
        }
    };
    let still = |need| {
        if roi_speed == 0.0 {
            Ok(())
        } else {
            Err(BoundError::CaseMismatch { case, need })
        }
    };
    let c = cells as f64;
    match case {
        SpecialCase::Mrsr => {
            still("a static ROI")?;
            upper_bound(cells, d_max, robots, robot_speed, 0.0)
        }
        SpecialCase::Srtr => {
            single("exactly one robot")?;
            Ok(2.0 * c / (robot_speed - roi_speed))
        }
        SpecialCase::SrtrTight => {
            single("exactly one robot")?;
            Ok(2.0 * robot_speed * c / ((robot_speed + roi_speed) * (robot_speed - roi_speed)))
        }
        SpecialCase::Srsr => {
            single("exactly one robot")?;
            still("a static ROI")?;
            Ok(2.0 * c / robot_speed)
        }
    }
}

/// Every applicable special case.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpecialCaseBounds {
    pub mrsr: Option<f64>,
    pub srtr: Option<f64>,
    pub srtr_tight: Option<f64>,
    pub srsr: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundsReport {
    #[serde(rename = "M")]
    pub m: f64,
    pub upper_bound: f64,
    pub lower_bound_grid: f64,
    pub competitive_rhs_grid: Option<f64>,
    pub competitive_rhs_arbitrary: Option<f64>,
    pub special_case_bounds: SpecialCaseBounds,
}

impl BoundsReport {
    pub fn new(
        cells: usize,
        d_max: u32,
        robots: usize,
        robot_speed: f64,
        roi_speed: f64,
        opt: Option<f64>,
    ) -> Result<Self, BoundError> {
        let sc = |case| special_case_bound(case, cells, d_max, robots, robot_speed, roi_speed).ok();
        let rhs = |variant| {
            opt.map(|o| competitive_rhs(o, robots, robot_speed, roi_speed, variant))
                .transpose()
        };
        Ok(BoundsReport {
            m: m_factor(robots, robot_speed, roi_speed)?,
            upper_bound: upper_bound(cells, d_max, robots, robot_speed, roi_speed)?,
            lower_bound_grid: lower_bound_grid(cells, robots, robot_speed, roi_speed)?,
            competitive_rhs_grid: rhs(Variant::Grid)?,
            competitive_rhs_arbitrary: rhs(Variant::Arbitrary)?,
            special_case_bounds: SpecialCaseBounds {
                mrsr: sc(SpecialCase::Mrsr),
                srtr: sc(SpecialCase::Srtr),
                srtr_tight: sc(SpecialCase::SrtrTight),
                srsr: sc(SpecialCase::Srsr),
            },
        })
    }
}
