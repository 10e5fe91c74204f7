//! Imperfect per-cell classification, sticky belief maps, and resumable
//! noisy exploration.
//!
//! Each sensing event takes `samples_per_cell` images of a neighbour at once
//! and calls it ROI on a majority vote.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::explorer::{ExplorationRun, ExploreError, Explorer, ExplorerState, NeighborSensor};
use crate::grid_world::{Cell, Direction, GridRoi, Scenario, WorldError};

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("{name} = {value} is not a probability")]
    BadProbability { name: &'static str, value: f64 },
    #[error("majority threshold {threshold} must lie in 1..={samples}")]
    BadThreshold { threshold: u32, samples: u32 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensorModel {
    pub p_fp: f64,
    pub p_fn: f64,
    pub samples_per_cell: u32,
    pub majority_threshold: u32,
    pub rng_seed: u64,
}

impl SensorModel {
    pub fn new(p_fp: f64, p_fn: f64, rng_seed: u64) -> Result<Self, ModelError> {
        SensorModel {
            p_fp,
            p_fn,
            samples_per_cell: 5,
            majority_threshold: 3,
            rng_seed,
        }
        .validated()
    }

    /// Error rates estimated from the field run: 27 false positives and 53
    /// false negatives out of 483 detections.
    pub fn field(rng_seed: u64) -> Self {
        SensorModel::new(27.0 / 483.0, 53.0 / 483.0, rng_seed).expect("valid rates")
    }

    pub fn perfect(rng_seed: u64) -> Self {
        SensorModel::new(0.0, 0.0, rng_seed).expect("valid rates")
    }

    pub fn validated(self) -> Result<Self, ModelError> {
        for (name, value) in [("p_fp", self.p_fp), ("p_fn", self.p_fn)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(ModelError::BadProbability { name, value });
            }
        }
        if self.majority_threshold == 0 || self.majority_threshold > self.samples_per_cell {
            return Err(ModelError::BadThreshold {
                threshold: self.majority_threshold,
                samples: self.samples_per_cell,
            });
        }
        Ok(self)
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.rng_seed)
    }

    /// Probability that a cell is reported as ROI.
    pub fn cell_positive_probability(&self, true_is_roi: bool) -> f64 {
        let p = if true_is_roi { 1.0 - self.p_fn } else { self.p_fp };
        let n = self.samples_per_cell;
        (self.majority_threshold..=n)
            .map(|k| binomial(n, k) * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32))
            .sum()
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// One image: returns whether it shows ROI.
pub fn detect_once<R: Rng>(true_is_roi: bool, model: &SensorModel, rng: &mut R) -> bool {
    if true_is_roi {
        !rng.gen_bool(model.p_fn)
    } else {
        rng.gen_bool(model.p_fp)
    }
}

/// Majority vote over one burst of images. Also returns the positive count.
pub fn classify_cell_counted<R: Rng>(true_is_roi: bool, model: &SensorModel, rng: &mut R) -> (bool, u32) {
    let positives = (0..model.samples_per_cell)
        .filter(|_| detect_once(true_is_roi, model, rng))
        .count() as u32;
    (positives >= model.majority_threshold, positives)
}

pub fn classify_cell<R: Rng>(true_is_roi: bool, model: &SensorModel, rng: &mut R) -> bool {
    classify_cell_counted(true_is_roi, model, rng).0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BeliefLabel {
    Unknown,
    NonRoi,
    RoiUnexplored,
    RoiExplored,
}

impl BeliefLabel {
    pub fn is_roi(self) -> bool {
        matches!(self, BeliefLabel::RoiUnexplored | BeliefLabel::RoiExplored)
    }
}

/// Per-cell labels; cells never sensed are `UNKNOWN`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<(Cell, BeliefLabel)>", into = "Vec<(Cell, BeliefLabel)>")]
pub struct BeliefMap {
    labels: BTreeMap<Cell, BeliefLabel>,
}

impl From<Vec<(Cell, BeliefLabel)>> for BeliefMap {
    fn from(v: Vec<(Cell, BeliefLabel)>) -> Self {
        BeliefMap {
            labels: v.into_iter().filter(|(_, l)| *l != BeliefLabel::Unknown).collect(),
        }
    }
}

impl From<BeliefMap> for Vec<(Cell, BeliefLabel)> {
    fn from(m: BeliefMap) -> Self {
        m.labels.into_iter().collect()
    }
}

impl BeliefMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn label(&self, cell: Cell) -> BeliefLabel {
        self.labels.get(&cell).copied().unwrap_or(BeliefLabel::Unknown)
    }

    /// Apply one detection. ROI labels are never downgraded, and negative
    /// evidence only lands on cells not yet believed to be ROI.
    pub fn update_belief(&mut self, cell: Cell, detection: bool) {
        let next = match (self.label(cell), detection) {
            (BeliefLabel::RoiExplored, _) => BeliefLabel::RoiExplored,
            (_, true) => BeliefLabel::RoiUnexplored,
            (BeliefLabel::RoiUnexplored, false) => BeliefLabel::RoiUnexplored,
            (_, false) => BeliefLabel::NonRoi,
        };
        self.labels.insert(cell, next);
    }

    pub fn mark_explored(&mut self, cell: Cell) {
        self.labels.insert(cell, BeliefLabel::RoiExplored);
    }

    pub fn believed_roi(&self) -> BTreeSet<Cell> {
        self.labels
            .iter()
            .filter(|(_, l)| l.is_roi())
            .map(|(c, _)| *c)
            .collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Cell, BeliefLabel)> + '_ {
        self.labels.iter().map(|(c, l)| (*c, *l))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Intersection over union of the believed ROI and `truth`.
    pub fn iou(&self, truth: &BTreeSet<Cell>) -> f64 {
        let believed = self.believed_roi();
        let inter = believed.intersection(truth).count();
        let union = believed.union(truth).count();
        if union == 0 {
            1.0
        } else {
            inter as f64 / union as f64
        }
    }
}

/// Cell-level detection outcomes against ground truth.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl Confusion {
    pub fn record(&mut self, truth: bool, detection: bool) {
        match (truth, detection) {
            (true, true) => self.tp += 1,
            (false, true) => self.fp += 1,
            (false, false) => self.tn += 1,
            (true, false) => self.fn_ += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Sensor that classifies each neighbour by noisy majority vote and keeps
/// the sticky belief map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoisySensor {
    model: SensorModel,
    rng: ChaCha8Rng,
    belief: BeliefMap,
    confusion: Confusion,
}

impl NoisySensor {
    pub fn new(model: SensorModel, start: Cell) -> Self {
        let mut belief = BeliefMap::new();
        belief.mark_explored(start);
        NoisySensor {
            model,
            rng: model.rng(),
            belief,
            confusion: Confusion::default(),
        }
    }

    pub fn belief(&self) -> &BeliefMap {
        &self.belief
    }

    pub fn confusion(&self) -> Confusion {
        self.confusion
    }

    pub fn model(&self) -> &SensorModel {
        &self.model
    }
}

impl NeighborSensor for NoisySensor {
    fn sense(&mut self, cell: Cell, world: &GridRoi) -> Vec<Cell> {
        Direction::SENSE_ORDER
            .into_iter()
            .map(|d| cell.step(d))
            .filter(|&n| {
                let truth = world.contains(n);
                let detection = classify_cell(truth, &self.model, &mut self.rng);
                self.confusion.record(truth, detection);
                self.belief.update_belief(n, detection);
                self.belief.label(n).is_roi()
            })
            .collect()
    }

    fn visited(&mut self, cell: Cell) {
        self.belief.mark_explored(cell);
    }
}

pub type NoisyExplorer = Explorer<NoisySensor>;

pub fn noisy_explorer(
    world: &GridRoi,
    robots: usize,
    robot_speed: f64,
    model: SensorModel,
) -> Result<NoisyExplorer, ExploreError> {
    let model = model
        .validated()
        .map_err(|e| ExploreError::Stalled(format!("bad sensor model: {e}")))?;
    Explorer::new(
        world.clone(),
        robots,
        robot_speed,
        NoisySensor::new(model, world.start_cell()),
    )
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NoisyOutcome {
    pub run: ExplorationRun,
    pub belief_map: BeliefMap,
    pub confusion: Confusion,
    pub iou: f64,
    /// True ROI cells the tree never reached because the believed ROI
    /// split them off.
    pub unreached_roi_cells: Vec<Cell>,
}

impl NoisyOutcome {
    pub fn disconnected(&self) -> bool {
        !self.unreached_roi_cells.is_empty()
    }
}

pub fn finish_noisy(explorer: NoisyExplorer) -> Result<NoisyOutcome, ExploreError> {
    let world = explorer.world().clone();
    let (run, sensor) = explorer.run_to_end_with_sensor()?;
    let unreached_roi_cells = world
        .cells()
        .iter()
        .copied()
        .filter(|c| !run.tree.contains_cell(*c))
        .collect();
    Ok(NoisyOutcome {
        iou: sensor.belief.iou(world.cells()),
        belief_map: sensor.belief,
        confusion: sensor.confusion,
        unreached_roi_cells,
        run,
    })
}

/// Explore with the noisy classifier in place of ground-truth sensing.
pub fn noisy_explore(
    world: &GridRoi,
    robots: usize,
    robot_speed: f64,
    model: SensorModel,
) -> Result<NoisyOutcome, ExploreError> {
    finish_noisy(noisy_explorer(world, robots, robot_speed, model)?)
}

pub const RESUME_FORMAT: &str = "roi-explore-resume/1";

#[derive(Debug, Error)]
pub enum ResumeError {
    #[error("malformed resume document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported resume format {found:?}, expected {RESUME_FORMAT:?}")]
    Version { found: String },
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Explore(#[from] ExploreError),
}

#[derive(Serialize)]
struct ResumeDocRef<'a> {
    format: &'a str,
    world: Scenario,
    state: &'a ExplorerState<NoisySensor>,
}

#[derive(Deserialize)]
struct ResumeDoc {
    format: String,
    world: Scenario,
    state: ExplorerState<NoisySensor>,
}

/// Snapshot of a noisy run between events: world, tree, groups in flight,
/// clock, RNG and belief map.
pub fn save_resume_state(explorer: &NoisyExplorer) -> String {
    let doc = ResumeDocRef {
        format: RESUME_FORMAT,
        world: explorer.world().to_scenario(),
        state: explorer.state(),
    };
    serde_json::to_string(&doc).expect("resume state serializes")
}

pub fn load_resume_state(doc: &str) -> Result<NoisyExplorer, ResumeError> {
    #[derive(Deserialize)]
    struct Tag {
        format: String,
    }
    let tag: Tag = serde_json::from_str(doc)?;
    if tag.format != RESUME_FORMAT {
        return Err(ResumeError::Version { found: tag.format });
    }
    let parsed: ResumeDoc = serde_json::from_str(doc)?;
    debug_assert_eq!(parsed.format, RESUME_FORMAT);
    let world = parsed.world.into_roi()?;
    Ok(Explorer::from_state(world, parsed.state)?)
}
