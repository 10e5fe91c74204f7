//! Seeded experiment sweeps and the verification suite.

mod verify;

pub use verify::{
    competitive_worlds, run_verification, run_verification_with, CheckResult, CompetitiveOutcome, Tier,
    VerificationReport,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{audit_rewards, lawnmower_lower_bound, lower_bound_grid, upper_bound, BoundError, RewardAudit};
use crate::explorer::{ExplorationRun, ExploreError, Explorer, Faults, KinematicsError, PerfectSensor};
use crate::grid_world::{generate_random_roi, GridRoi, WorldError};

/// Relative slack for floating comparisons against closed-form bounds.
pub const BOUND_SLACK: f64 = 1e-9;

pub fn within(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + BOUND_SLACK * rhs.abs().max(1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SweepKind {
    Cells,
    Robots,
    SpeedRatio,
    Single,
}

impl SweepKind {
    pub fn default_grid(self) -> Vec<f64> {
        match self {
            SweepKind::Cells => vec![40.0, 80.0, 120.0, 160.0, 200.0],
            SweepKind::Robots => vec![1.0, 2.0, 4.0, 8.0, 16.0, 32.0],
            SweepKind::SpeedRatio => vec![1.5, 2.0, 2.5, 3.0, 4.0],
            SweepKind::Single => vec![0.0],
        }
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{check} violated at sweep point {sweep_param}, trial {trial}, seed {seed}: {detail}")]
    Violation {
        check: &'static str,
        sweep_param: f64,
        trial: u32,
        seed: u64,
        detail: String,
    },
    #[error("trial with seed {seed}: {source}")]
    Explore { seed: u64, source: ExploreError },
    #[error(transparent)]
    Bound(#[from] BoundError),
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub sweep: SweepKind,
    pub cells: usize,
    pub robots: usize,
    /// S_r / S_p, with S_p fixed at 1.
    pub speed_ratio: f64,
    pub trials: u32,
    pub master_seed: u64,
    /// Sweep values; empty means the default grid.
    #[serde(default)]
    pub grid: Vec<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            sweep: SweepKind::Single,
            cells: 120,
            robots: 20,
            speed_ratio: 2.5,
            trials: 100,
            master_seed: 0,
            grid: Vec::new(),
        }
    }
}

/// One sweep point after substituting the swept value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointParams {
    pub sweep_param: f64,
    pub cells: usize,
    pub robots: usize,
    pub speed_ratio: f64,
}

impl ExperimentConfig {
    pub fn sweep(sweep: SweepKind, trials: u32, master_seed: u64) -> Self {
        ExperimentConfig {
            sweep,
            trials,
            master_seed,
            ..Default::default()
        }
    }

    pub fn grid(&self) -> Vec<f64> {
        if self.grid.is_empty() {
            self.sweep.default_grid()
        } else {
            self.grid.clone()
        }
    }

    pub fn points(&self) -> Result<Vec<PointParams>, HarnessError> {
        if self.trials == 0 {
            return Err(HarnessError::Config("need at least one trial".into()));
        }
        let points: Vec<PointParams> = self
            .grid()
            .into_iter()
            .map(|v| {
                let mut p = PointParams {
                    sweep_param: v,
                    cells: self.cells,
                    robots: self.robots,
                    speed_ratio: self.speed_ratio,
                };
                match self.sweep {
                    SweepKind::Cells => p.cells = v as usize,
                    SweepKind::Robots => p.robots = v as usize,
                    SweepKind::SpeedRatio => p.speed_ratio = v,
                    SweepKind::Single => {}
                }
                p
            })
            .collect();
        for p in &points {
            let integral = |x: f64| x >= 1.0 && x.fract() == 0.0;
            if self.sweep == SweepKind::Cells && !integral(p.sweep_param) {
                return Err(HarnessError::Config(format!(
                    "cell count {} is not a positive integer",
                    p.sweep_param
                )));
            }
            if self.sweep == SweepKind::Robots && !integral(p.sweep_param) {
                return Err(HarnessError::Config(format!(
                    "robot count {} is not a positive integer",
                    p.sweep_param
                )));
            }
            if p.cells == 0 || p.robots == 0 {
                return Err(HarnessError::Config("cells and robots must be positive".into()));
            }
            if !(p.speed_ratio.is_finite() && p.speed_ratio > 1.0) {
                return Err(HarnessError::Config(format!(
                    "speed ratio {} must exceed 1",
                    p.speed_ratio
                )));
            }
        }
        Ok(points)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for one trial, a pure function of its coordinates.
pub fn trial_seed(master: u64, point: usize, trial: u32) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ point as u64) ^ trial as u64)
}

/// One CSV row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub sweep_param: f64,
    pub trial: u32,
    pub seed: u64,
    #[serde(rename = "C")]
    pub cells: usize,
    #[serde(rename = "R")]
    pub robots: usize,
    #[serde(rename = "S_r")]
    pub robot_speed: f64,
    #[serde(rename = "S_p")]
    pub roi_speed: f64,
    pub alg_time: f64,
    pub t_last: f64,
    pub d_max: u32,
    #[serde(rename = "L")]
    pub total_length: u32,
    pub upper_bound: f64,
    pub lower_bound_grid: f64,
    pub lawnmower_bound: f64,
    pub reward_lhs: f64,
    pub reward_rhs: f64,
}

/// A trial that broke a check the sweep reports without stopping.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Flag {
    pub sweep_param: f64,
    pub trial: u32,
    pub seed: u64,
    pub check: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointSummary {
    pub sweep_param: f64,
    pub trials: u32,
    pub alg_time_mean: f64,
    pub alg_time_min: f64,
    pub alg_time_max: f64,
    pub upper_bound_mean: f64,
    pub lower_bound_grid_mean: f64,
    pub lawnmower_bound_mean: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub config: ExperimentConfig,
    pub points: Vec<PointSummary>,
    pub rows: Vec<TrialRow>,
    pub flagged: Vec<Flag>,
}

impl SweepResult {
    pub fn to_csv(&self) -> Result<String, HarnessError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sweep result serializes")
    }

    pub fn all_checks_pass(&self) -> bool {
        self.flagged.is_empty()
    }
}

/// Everything measured on one trial.
#[derive(Clone, Debug)]
pub struct TrialOutcome {
    pub world: GridRoi,
    pub run: ExplorationRun,
    pub row: TrialRow,
    pub audit: RewardAudit,
    pub complete: bool,
}

impl TrialOutcome {
    pub fn upper_ok(&self) -> bool {
        within(self.row.alg_time, self.row.upper_bound)
    }

    pub fn lower_grid_ok(&self) -> bool {
        within(self.row.lower_bound_grid, self.row.alg_time)
    }

    pub fn lawnmower_ok(&self) -> bool {
        within(self.row.lawnmower_bound, self.row.alg_time)
    }
}

/// Random world for one trial: a frontier-grown ROI translating at S_p = 1.
pub fn trial_world(cells: usize, seed: u64) -> Result<GridRoi, WorldError> {
    let w = generate_random_roi(cells, seed);
    let dir = w.translation_dir();
    w.with_motion(dir, 1.0)
}

pub fn run_trial(
    world: &GridRoi,
    robots: usize,
    robot_speed: f64,
    sweep_param: f64,
    trial: u32,
    seed: u64,
    faults: Faults,
) -> Result<TrialOutcome, HarnessError> {
    let run = Explorer::new(world.clone(), robots, robot_speed, PerfectSensor)
        .and_then(|e| e.with_faults(faults).run_to_end())
        .map_err(|source| HarnessError::Explore { seed, source })?;
    let sp = world.roi_speed();
    let c = world.cell_count();
    let audit = audit_rewards(&run);
    let row = TrialRow {
        sweep_param,
        trial,
        seed,
        cells: c,
        robots,
        robot_speed,
        roi_speed: sp,
        alg_time: run.alg_time,
        t_last: run.t_last,
        d_max: run.d_max(),
        total_length: run.total_length(),
        upper_bound: upper_bound(c, run.d_max(), robots, robot_speed, sp)?,
        lower_bound_grid: lower_bound_grid(c, robots, robot_speed, sp)?,
        lawnmower_bound: lawnmower_lower_bound(world, robots, robot_speed)?,
        reward_lhs: audit.lhs,
        reward_rhs: audit.rhs,
    };
    let complete = run.is_complete(world);
    Ok(TrialOutcome {
        world: world.clone(),
        run,
        row,
        audit,
        complete,
    })
}

/// Flags raised by one trial; proven-bound and completeness failures are
/// errors instead.
fn judge(o: &TrialOutcome) -> Result<Vec<&'static str>, HarnessError> {
    let r = &o.row;
    let fail = |check, detail: String| HarnessError::Violation {
        check,
        sweep_param: r.sweep_param,
        trial: r.trial,
        seed: r.seed,
        detail,
    };
    if !o.complete {
        return Err(fail("completeness", "ROI not fully explored or robots not home".into()));
    }
    if !o.upper_ok() {
        return Err(fail(
            "upper_bound",
            format!("alg_time {} > {}", r.alg_time, r.upper_bound),
        ));
    }
    if !o.lower_grid_ok() {
        return Err(fail(
            "lower_bound_grid",
            format!("{} > alg_time {}", r.lower_bound_grid, r.alg_time),
        ));
    }
    let mut flags = Vec::new();
    if !o.lawnmower_ok() {
        flags.push("lawnmower_bound");
    }
    if !o.audit.lower_ok {
        flags.push("reward_lower");
    }
    if !o.audit.upper_ok {
        flags.push("reward_upper");
    }
    Ok(flags)
}

fn summarize(sweep_param: f64, rows: &[TrialRow]) -> PointSummary {
    let n = rows.len() as f64;
    let mean = |f: fn(&TrialRow) -> f64| rows.iter().map(f).sum::<f64>() / n;
    PointSummary {
        sweep_param,
        trials: rows.len() as u32,
        alg_time_mean: mean(|r| r.alg_time),
        alg_time_min: rows.iter().map(|r| r.alg_time).fold(f64::INFINITY, f64::min),
        alg_time_max: rows.iter().map(|r| r.alg_time).fold(f64::NEG_INFINITY, f64::max),
        upper_bound_mean: mean(|r| r.upper_bound),
        lower_bound_grid_mean: mean(|r| r.lower_bound_grid),
        lawnmower_bound_mean: mean(|r| r.lawnmower_bound),
    }
}

/// Run every trial of the sweep. Trials run in parallel but rows come back
/// ordered by (point, trial).
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepResult, HarnessError> {
    let points = config.points()?;
    let jobs: Vec<(usize, u32)> = (0..points.len())
        .flat_map(|p| (0..config.trials).map(move |t| (p, t)))
        .collect();
    let outcomes: Vec<Result<(TrialRow, Vec<&'static str>), HarnessError>> = jobs
        .par_iter()
        .map(|&(p, t)| {
            let pt = points[p];
            let seed = trial_seed(config.master_seed, p, t);
            let world = trial_world(pt.cells, seed)?;
            let o = run_trial(
                &world,
                pt.robots,
                pt.speed_ratio,
                pt.sweep_param,
                t,
                seed,
                Faults::default(),
            )?;
            let flags = judge(&o)?;
            Ok((o.row, flags))
        })
        .collect();
    let mut rows = Vec::with_capacity(outcomes.len());
    let mut flagged = Vec::new();
    for o in outcomes {
        let (row, flags) = o?;
        flagged.extend(flags.into_iter().map(|check| Flag {
            sweep_param: row.sweep_param,
            trial: row.trial,
            seed: row.seed,
            check: check.to_string(),
        }));
        rows.push(row);
    }
    let summaries = points
        .iter()
        .map(|pt| {
            let at: Vec<TrialRow> = rows
                .iter()
                .filter(|r| r.sweep_param == pt.sweep_param)
                .cloned()
                .collect();
            summarize(pt.sweep_param, &at)
        })
        .collect();
    Ok(SweepResult {
        config: config.clone(),
        points: summaries,
        rows,
        flagged,
    })
}
