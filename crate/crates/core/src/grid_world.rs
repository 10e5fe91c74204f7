//! Ground-truth grid environment.
//!
//! Cells are unit squares addressed by integer coordinates in the ROI's
//! co-moving frame: `x` grows to the east, `y` grows to the north. Because
//! every coordinate lives in that frame the cell set is static even when the
//! ROI translates; the motion only shows up in traversal costs.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum WorldError {
    #[error("ROI must contain at least one cell")]
    Empty,
    #[error("start cell {0} is not part of the ROI")]
    StartOutside(Cell),
    #[error("ROI is not 4-connected: {reached} of {total} cells reachable from the start cell")]
    Disconnected { reached: usize, total: usize },
    #[error("ROI speed must be finite and non-negative, got {0}")]
    BadSpeed(f64),
    #[error("malformed scenario: {0}")]
    Parse(String),
}

/// Integer cell coordinate. Serialized as `[x, y]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "[i32; 2]", into = "[i32; 2]")]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub const fn new(x: i32, y: i32) -> Self {
        Cell { x, y }
    }

    pub fn step(self, dir: Direction) -> Cell {
        let (dx, dy) = dir.offset();
        Cell::new(self.x + dx, self.y + dy)
    }

    /// Direction of a unit move from `self` to `other`, if they are 4-adjacent.
    pub fn direction_to(self, other: Cell) -> Option<Direction> {
        Direction::SENSE_ORDER.into_iter().find(|d| self.step(*d) == other)
    }

    pub fn neighbors(self) -> impl Iterator<Item = Cell> {
        Direction::SENSE_ORDER.into_iter().map(move |d| self.step(d))
    }
}

impl From<[i32; 2]> for Cell {
    fn from([x, y]: [i32; 2]) -> Self {
        Cell::new(x, y)
    }
}

impl From<Cell> for [i32; 2] {
    fn from(c: Cell) -> Self {
        [c.x, c.y]
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Compass direction. North is `+y`, east is `+x`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "N")]
    North,
    #[serde(rename = "S")]
    South,
    #[serde(rename = "E")]
    East,
    #[serde(rename = "W")]
    West,
}

impl Direction {
    /// Order in which neighbours are sensed and candidate children are ranked.
    pub const SENSE_ORDER: [Direction; 4] = [Direction::North, Direction::East, Direction::South, Direction::West];

    pub const fn offset(self) -> (i32, i32) {
        match self {
            Direction::North => (0, 1),
            Direction::South => (0, -1),
            Direction::East => (1, 0),
            Direction::West => (-1, 0),
        }
    }

    pub const fn opposite(self) -> Direction {
        match self {
            Direction::North => Direction::South,
            Direction::South => Direction::North,
            Direction::East => Direction::West,
            Direction::West => Direction::East,
        }
    }

    /// The direction a quarter turn clockwise.
    pub const fn perpendicular(self) -> Direction {
        match self {
            Direction::North => Direction::East,
            Direction::East => Direction::South,
            Direction::South => Direction::West,
            Direction::West => Direction::North,
        }
    }

    /// Unit vector as floats.
    pub fn unit(self) -> (f64, f64) {
        let (dx, dy) = self.offset();
        (dx as f64, dy as f64)
    }

    pub const fn is_horizontal(self) -> bool {
        matches!(self, Direction::East | Direction::West)
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Direction::North => "N",
            Direction::South => "S",
            Direction::East => "E",
            Direction::West => "W",
        };
        f.write_str(s)
    }
}

impl FromStr for Direction {
    type Err = WorldError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "N" | "n" | "north" => Ok(Direction::North),
            "S" | "s" | "south" => Ok(Direction::South),
            "E" | "e" | "east" => Ok(Direction::East),
            "W" | "w" | "west" => Ok(Direction::West),
            other => Err(WorldError::Parse(format!("unknown direction {other:?}"))),
        }
    }
}

/// Membership flags of the four neighbours of a cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct NeighborFlags {
    pub north: bool,
    pub south: bool,
    pub east: bool,
    pub west: bool,
}

impl NeighborFlags {
    pub fn get(&self, dir: Direction) -> bool {
        match dir {
            Direction::North => self.north,
            Direction::South => self.south,
            Direction::East => self.east,
            Direction::West => self.west,
        }
    }

    pub fn count(&self) -> usize {
        [self.north, self.south, self.east, self.west]
            .iter()
            .filter(|b| **b)
            .count()
    }
}

/// The unknown environment: a 4-connected set of unit cells, translating
/// rigidly at `roi_speed` along `translation_dir`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridRoi {
    cells: BTreeSet<Cell>,
    translation_dir: Direction,
    roi_speed: f64,
    start_cell: Cell,
}

impl GridRoi {
    pub fn new(
        cells: BTreeSet<Cell>,
        translation_dir: Direction,
        roi_speed: f64,
        start_cell: Cell,
    ) -> Result<Self, WorldError> {
        if cells.is_empty() {
            return Err(WorldError::Empty);
        }
        if !cells.contains(&start_cell) {
            return Err(WorldError::StartOutside(start_cell));
        }
        if !roi_speed.is_finite() || roi_speed < 0.0 {
            return Err(WorldError::BadSpeed(roi_speed));
        }
        let reached = reachable_count(&cells, start_cell);
        if reached != cells.len() {
            return Err(WorldError::Disconnected {
                reached,
                total: cells.len(),
            });
        }
        Ok(GridRoi {
            cells,
            translation_dir,
            roi_speed,
            start_cell,
        })
    }

    /// Static ROI from a cell list, translation direction north.
    pub fn stationary(cells: impl IntoIterator<Item = Cell>, start_cell: Cell) -> Result<Self, WorldError> {
        GridRoi::new(cells.into_iter().collect(), Direction::North, 0.0, start_cell)
    }

    pub fn cells(&self) -> &BTreeSet<Cell> {
        &self.cells
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn contains(&self, cell: Cell) -> bool {
        self.cells.contains(&cell)
    }

    pub fn translation_dir(&self) -> Direction {
        self.translation_dir
    }

    pub fn roi_speed(&self) -> f64 {
        self.roi_speed
    }

    pub fn start_cell(&self) -> Cell {
        self.start_cell
    }

    pub fn with_motion(mut self, translation_dir: Direction, roi_speed: f64) -> Result<Self, WorldError> {
        if !roi_speed.is_finite() || roi_speed < 0.0 {
            return Err(WorldError::BadSpeed(roi_speed));
        }
        self.translation_dir = translation_dir;
        self.roi_speed = roi_speed;
        Ok(self)
    }

    pub fn with_start(mut self, start_cell: Cell) -> Result<Self, WorldError> {
        if !self.cells.contains(&start_cell) {
            return Err(WorldError::StartOutside(start_cell));
        }
        self.start_cell = start_cell;
        Ok(self)
    }

    /// Inclusive bounding box `(min, max)` of the cell set.
    pub fn bounding_box(&self) -> (Cell, Cell) {
        let mut min = Cell::new(i32::MAX, i32::MAX);
        let mut max = Cell::new(i32::MIN, i32::MIN);
        for c in &self.cells {
            min.x = min.x.min(c.x);
            min.y = min.y.min(c.y);
            max.x = max.x.max(c.x);
            max.y = max.y.max(c.y);
        }
        (min, max)
    }

    pub fn to_scenario(&self) -> Scenario {
        Scenario {
            cells: self.cells.iter().copied().collect(),
            translation_dir: self.translation_dir,
            roi_speed: self.roi_speed,
            start_cell: self.start_cell,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, WorldError> {
        let scenario: Scenario = serde_json::from_str(text).map_err(|e| WorldError::Parse(e.to_string()))?;
        scenario.into_roi()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_scenario()).expect("scenario serializes")
    }
}

/// On-disk form of a [`GridRoi`], used for replaying fixed maps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub cells: Vec<Cell>,
    pub translation_dir: Direction,
    #[serde(rename = "S_p")]
    pub roi_speed: f64,
    pub start_cell: Cell,
}

impl Scenario {
    pub fn into_roi(self) -> Result<GridRoi, WorldError> {
        let total = self.cells.len();
        let cells: BTreeSet<Cell> = self.cells.into_iter().collect();
        if cells.len() != total {
            return Err(WorldError::Parse("duplicate cells in scenario".into()));
        }
        GridRoi::new(cells, self.translation_dir, self.roi_speed, self.start_cell)
    }
}

fn reachable_count(cells: &BTreeSet<Cell>, start: Cell) -> usize {
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::from([start]);
    seen.insert(start);
    while let Some(c) = queue.pop_front() {
        for n in c.neighbors() {
            if cells.contains(&n) && seen.insert(n) {
                queue.push_back(n);
            }
        }
    }
    seen.len()
}

/// Perfect sensor: which of the four neighbours of `cell` belong to the ROI.
///
/// The explorer only queries cells it stands on, which are always ROI cells.
pub fn sense_neighbors(cell: Cell, roi: &GridRoi) -> NeighborFlags {
    debug_assert!(roi.contains(cell), "sensing from outside the ROI at {cell}");
    NeighborFlags {
        north: roi.contains(cell.step(Direction::North)),
        south: roi.contains(cell.step(Direction::South)),
        east: roi.contains(cell.step(Direction::East)),
        west: roi.contains(cell.step(Direction::West)),
    }
}

/// Random connected ROI with `cell_count` cells grown from `(0, 0)`.
///
/// Growth repeatedly adds a uniformly chosen frontier cell, so the result is
/// connected by construction. The ROI is stationary; callers set the speed.
pub fn generate_random_roi(cell_count: usize, seed: u64) -> GridRoi {
    assert!(cell_count >= 1, "an ROI needs at least one cell");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let translation_dir = Direction::SENSE_ORDER[rng.gen_range(0..4)];

    let origin = Cell::new(0, 0);
    let mut cells = BTreeSet::from([origin]);
    // Vec for uniform indexing, set for membership.
    let mut frontier: Vec<Cell> = Vec::new();
    let mut in_frontier = BTreeSet::new();
    let mut push_frontier = |c: Cell, cells: &BTreeSet<Cell>, frontier: &mut Vec<Cell>| {
        for n in c.neighbors() {
            if !cells.contains(&n) && in_frontier.insert(n) {
                frontier.push(n);
            }
        }
    };
    push_frontier(origin, &cells, &mut frontier);
    while cells.len() < cell_count {
        let pick = rng.gen_range(0..frontier.len());
        let c = frontier.swap_remove(pick);
        cells.insert(c);
        push_frontier(c, &cells, &mut frontier);
    }
    GridRoi {
        cells,
        translation_dir,
        roi_speed: 0.0,
        start_cell: origin,
    }
}

/// All fixed polyominoes with `size` cells, normalized so the minimum x and
/// minimum y are zero. Counts follow 1, 2, 6, 19, 63, 216, ...
pub fn fixed_polyominoes(size: usize) -> Vec<BTreeSet<Cell>> {
    assert!(size >= 1);
    let mut layer: BTreeSet<Vec<Cell>> = BTreeSet::from([vec![Cell::new(0, 0)]]);
    for _ in 1..size {
        let mut next = BTreeSet::new();
        for shape in &layer {
            let set: BTreeSet<Cell> = shape.iter().copied().collect();
            for c in shape {
                for n in c.neighbors() {
                    if !set.contains(&n) {
                        let mut grown = set.clone();
                        grown.insert(n);
                        next.insert(normalize(&grown));
                    }
                }
            }
        }
        layer = next;
    }
    layer.into_iter().map(|v| v.into_iter().collect()).collect()
}

fn normalize(cells: &BTreeSet<Cell>) -> Vec<Cell> {
    let min_x = cells.iter().map(|c| c.x).min().unwrap_or(0);
    let min_y = cells.iter().map(|c| c.y).min().unwrap_or(0);
    cells.iter().map(|c| Cell::new(c.x - min_x, c.y - min_y)).collect()
}
