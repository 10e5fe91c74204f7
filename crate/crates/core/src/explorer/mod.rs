//! Multi-robot recursive DFS over the online exploration tree.
//!
//! The simulation is event driven. Every robot group is always in flight
//! along one tree edge; when it lands, the group senses (first visit only),
//! grows the tree, and picks its next edge. Groups landing on the same vertex
//! in the same instant merge before deciding.

pub mod kinematics;
mod sweep;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::rewards::{self, AuditError, RewardLedger};
use crate::exploration_tree::{ExplorationTree, TreeError, VertexId, VertexState};
use crate::grid_world::{sense_neighbors, Cell, Direction, GridRoi};
pub use kinematics::{displacement_time, traversal_time, EdgeCosts, KinematicsError};
pub use sweep::{find_roi_sweep, SweepError, SweepHit};

/// Relative tolerance for treating two event times as simultaneous.
pub const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ExploreError {
    #[error("need at least one robot")]
    NoRobots,
    #[error(transparent)]
    Speed(#[from] KinematicsError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error("event budget of {limit} exhausted at t = {clock}")]
    EventBudget { limit: u64, clock: f64 },
    #[error("believed ROI grew to {cells} cells, past the cap of {cap}")]
    Runaway { cells: usize, cap: usize },
    #[error("group {group} at {vertex}: {reason}")]
    Inconsistent {
        group: u32,
        vertex: VertexId,
        reason: String,
    },
    #[error("exploration stalled: {0}")]
    Stalled(String),
    #[error(transparent)]
    Audit(#[from] AuditError),
}

/// Source of neighbour observations.
pub trait NeighborSensor {
    /// Neighbours of `cell` believed to be ROI, in N, E, S, W order.
    fn sense(&mut self, cell: Cell, world: &GridRoi) -> Vec<Cell>;

    /// Called once when a robot first stands on `cell`.
    fn visited(&mut self, _cell: Cell) {}
}

/// Noise-free sensor answering from the ground truth.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerfectSensor;

impl NeighborSensor for PerfectSensor {
    fn sense(&mut self, cell: Cell, world: &GridRoi) -> Vec<Cell> {
        let flags = sense_neighbors(cell, world);
        Direction::SENSE_ORDER
            .into_iter()
            .filter(|d| flags.get(*d))
            .map(|d| cell.step(d))
            .collect()
    }
}

/// One group traversing one tree edge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoveRecord {
    pub group: u32,
    pub robots: Vec<u32>,
    pub from: VertexId,
    pub to: VertexId,
    pub depart: f64,
    pub arrive: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct InFlight {
    group: u32,
    robots: Vec<u32>,
    from: Option<VertexId>,
    to: VertexId,
    depart: f64,
    arrive: f64,
}

/// Deliberate defects, for checking that verification notices them.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Faults {
    pub skip_interior_marking: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunParams {
    pub robots: usize,
    pub robot_speed: f64,
    pub roi_speed: f64,
    pub translation_dir: Direction,
    /// Cells in the ground-truth ROI.
    pub cells: usize,
}

/// Everything an explorer needs to continue, apart from the world itself.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExplorerState<S> {
    params: RunParams,
    tree: ExplorationTree,
    in_flight: Vec<InFlight>,
    clock: f64,
    trajectories: Vec<Vec<(VertexId, f64)>>,
    moves: Vec<MoveRecord>,
    finish_times: Vec<Option<f64>>,
    t_last: f64,
    next_group: u32,
    events: u64,
    sensor: S,
    #[serde(default)]
    faults: Faults,
}

pub struct Explorer<S> {
    world: GridRoi,
    costs: EdgeCosts,
    state: ExplorerState<S>,
}

/// Outcome of one completed exploration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExplorationRun {
    pub params: RunParams,
    /// Time the last robot is back at the root.
    pub alg_time: f64,
    /// Time the last robot reaches a leaf.
    pub t_last: f64,
    pub trajectories: Vec<Vec<(VertexId, f64)>>,
    pub moves: Vec<MoveRecord>,
    pub tree: ExplorationTree,
    pub ledger: RewardLedger,
    pub events: u64,
}

impl ExplorationRun {
    /// L: total tree length.
    pub fn total_length(&self) -> u32 {
        self.tree.total_length()
    }

    pub fn d_max(&self) -> u32 {
        self.tree.depths().into_iter().max().unwrap_or(0)
    }

    /// Every ground-truth cell is an explored tree vertex and every robot
    /// ended at the root.
    pub fn is_complete(&self, world: &GridRoi) -> bool {
        let cells_ok = world.cells().iter().all(|c| {
            self.tree
                .vertex_of(*c)
                .is_some_and(|v| self.tree.get(v).state == VertexState::Explored)
        });
        let root = self.tree.root();
        let ends_ok = self
            .trajectories
            .iter()
            .all(|t| t.first().map(|e| e.0) == Some(root) && t.last().map(|e| e.0) == Some(root));
        cells_ok && self.tree.all_explored() && ends_ok
    }
}

/// Run the DFS with a perfect sensor.
pub fn explore(world: &GridRoi, robots: usize, robot_speed: f64) -> Result<ExplorationRun, ExploreError> {
    Explorer::new(world.clone(), robots, robot_speed, PerfectSensor)?.run_to_end()
}

impl<S: NeighborSensor> Explorer<S> {
    pub fn new(world: GridRoi, robots: usize, robot_speed: f64, sensor: S) -> Result<Self, ExploreError> {
        if robots == 0 {
            return Err(ExploreError::NoRobots);
        }
        let costs = EdgeCosts::new(robot_speed, world.roi_speed(), world.translation_dir())?;
        let tree = ExplorationTree::new(world.start_cell());
        let root = tree.root();
        let state = ExplorerState {
            params: RunParams {
                robots,
                robot_speed,
                roi_speed: world.roi_speed(),
                translation_dir: world.translation_dir(),
                cells: world.cell_count(),
            },
            tree,
            in_flight: vec![InFlight {
                group: 0,
                robots: (0..robots as u32).collect(),
                from: None,
                to: root,
                depart: 0.0,
                arrive: 0.0,
            }],
            clock: 0.0,
            trajectories: vec![Vec::new(); robots],
            moves: Vec::new(),
            finish_times: vec![None; robots],
            t_last: 0.0,
            next_group: 1,
            events: 0,
            sensor,
            faults: Faults::default(),
        };
        Ok(Explorer { world, costs, state })
    }

    /// Rebuild an explorer from saved state.
    pub fn from_state(world: GridRoi, state: ExplorerState<S>) -> Result<Self, ExploreError> {
        let p = &state.params;
        if p.roi_speed != world.roi_speed() || p.translation_dir != world.translation_dir() {
            return Err(ExploreError::Stalled("saved motion does not match the world".into()));
        }
        if p.robots == 0 || state.trajectories.len() != p.robots || state.finish_times.len() != p.robots {
            return Err(ExploreError::Stalled("saved robot count is inconsistent".into()));
        }
        state.tree.validate()?;
        for f in &state.in_flight {
            state.tree.vertex(f.to)?;
            if f.robots.iter().any(|r| *r as usize >= p.robots) {
                return Err(ExploreError::Stalled("saved group names an unknown robot".into()));
            }
        }
        let costs = EdgeCosts::new(p.robot_speed, p.roi_speed, p.translation_dir)?;
        Ok(Explorer { world, costs, state })
    }

    pub fn with_faults(mut self, faults: Faults) -> Self {
        self.state.faults = faults;
        self
    }

    pub fn world(&self) -> &GridRoi {
        &self.world
    }

    pub fn state(&self) -> &ExplorerState<S> {
        &self.state
    }

    pub fn into_state(self) -> ExplorerState<S> {
        self.state
    }

    pub fn tree(&self) -> &ExplorationTree {
        &self.state.tree
    }

    pub fn sensor(&self) -> &S {
        &self.state.sensor
    }

    pub fn clock(&self) -> f64 {
        self.state.clock
    }

    pub fn events(&self) -> u64 {
        self.state.events
    }

    pub fn is_finished(&self) -> bool {
        self.state.in_flight.is_empty()
    }

    fn event_limit(&self) -> u64 {
        let c = self.world.cell_count().max(self.state.tree.cell_count()) as u64;
        100 * c * self.state.params.robots as u64
    }

    /// Process every arrival at the earliest pending instant. Returns false
    /// once nothing is left to do.
    pub fn advance(&mut self) -> Result<bool, ExploreError> {
        let st = &mut self.state;
        let Some(t_min) = st.in_flight.iter().map(|f| f.arrive).min_by(f64::total_cmp) else {
            return Ok(false);
        };
        let cutoff = t_min + TIME_EPS * t_min.max(1.0);
        let (mut batch, rest): (Vec<_>, Vec<_>) = st.in_flight.drain(..).partition(|f| f.arrive <= cutoff);
        st.in_flight = rest;
        batch.sort_by_key(|f| f.group);

        let mut merged: BTreeMap<VertexId, (u32, Vec<u32>, f64)> = BTreeMap::new();
        for f in batch {
            for &r in &f.robots {
                st.trajectories[r as usize].push((f.to, f.arrive));
            }
            if let Some(from) = f.from {
                st.moves.push(MoveRecord {
                    group: f.group,
                    robots: f.robots.clone(),
                    from,
                    to: f.to,
                    depart: f.depart,
                    arrive: f.arrive,
                });
            }
            let e = merged.entry(f.to).or_insert((f.group, Vec::new(), f.arrive));
            e.0 = e.0.min(f.group);
            e.1.extend(&f.robots);
            e.2 = e.2.max(f.arrive);
        }
        let mut groups: Vec<_> = merged.into_iter().collect();
        groups.sort_by_key(|(_, (g, _, _))| *g);
        for (vertex, (group, mut robots, now)) in groups {
            robots.sort_unstable();
            self.state.clock = self.state.clock.max(now);
            self.state.events += 1;
            let limit = self.event_limit();
            if self.state.events > limit {
                return Err(ExploreError::EventBudget {
                    limit,
                    clock: self.state.clock,
                });
            }
            self.step(group, robots, vertex, now)?;
        }
        Ok(!self.state.in_flight.is_empty())
    }

    fn step(&mut self, group: u32, robots: Vec<u32>, v: VertexId, now: f64) -> Result<(), ExploreError> {
        let vert = self.state.tree.get(v);
        let explored_on_arrival = vert.state == VertexState::Explored;
        if let (VertexState::Unexplored, Some(cell)) = (vert.state, vert.cell.cell()) {
            self.state.sensor.visited(cell);
            let found: Vec<Cell> = self
                .state
                .sensor
                .sense(cell, &self.world)
                .into_iter()
                .filter(|c| !self.state.tree.contains_cell(*c))
                .collect();
            self.state.tree.attach_children(v, &found)?;
            let cap = 10 * self.world.cell_count() + 100;
            if self.state.tree.cell_count() > cap {
                return Err(ExploreError::Runaway {
                    cells: self.state.tree.cell_count(),
                    cap,
                });
            }
        }
        let tree = &mut self.state.tree;
        let children = tree.get(v).children.clone();
        if explored_on_arrival {
            return self.retreat(group, robots, v, now);
        }
        let mut candidates: Vec<VertexId> = children
            .iter()
            .copied()
            .filter(|c| tree.get(*c).state != VertexState::Explored)
            .collect();
        // Fresh branches before branches other groups are already working on,
        // including ones a group has just set off down.
        let claimed: Vec<VertexId> = self
            .state
            .in_flight
            .iter()
            .filter(|f| f.from == Some(v))
            .map(|f| f.to)
            .collect();
        candidates.sort_by_key(|c| tree.get(*c).state != VertexState::Unexplored || claimed.contains(c));
        match candidates.as_slice() {
            [] => {
                if children.is_empty() {
                    self.state.t_last = self.state.t_last.max(now);
                    self.mark_explored(v)?;
                } else if !self.state.faults.skip_interior_marking {
                    self.mark_explored(v)?;
                }
                self.retreat(group, robots, v, now)
            }
            [only] => {
                tree.set_state(v, VertexState::UnderExploration)?;
                self.depart(group, robots, v, *only, now);
                Ok(())
            }
            [first, second, ..] => {
                tree.set_state(v, VertexState::UnderExploration)?;
                if robots.len() == 1 {
                    self.depart(group, robots, v, *first, now);
                } else {
                    let k = robots.len().div_ceil(2);
                    let (a, b) = robots.split_at(k);
                    let sibling = self.state.next_group;
                    self.state.next_group += 1;
                    self.depart(group, a.to_vec(), v, *first, now);
                    self.depart(sibling, b.to_vec(), v, *second, now);
                }
                Ok(())
            }
        }
    }

    /// Mark `v` explored, then every ancestor whose children are now all
    /// explored. State is shared, so this takes effect for every group at once.
    fn mark_explored(&mut self, v: VertexId) -> Result<(), ExploreError> {
        let tree = &mut self.state.tree;
        tree.set_state(v, VertexState::Explored)?;
        if self.state.faults.skip_interior_marking {
            return Ok(());
        }
        let mut cur = v;
        while let Some(p) = tree.get(cur).parent {
            let pv = tree.get(p);
            if pv.state != VertexState::UnderExploration
                || pv.children.iter().any(|c| tree.get(*c).state != VertexState::Explored)
            {
                break;
            }
            tree.set_state(p, VertexState::Explored)?;
            cur = p;
        }
        Ok(())
    }

    fn retreat(&mut self, group: u32, robots: Vec<u32>, v: VertexId, now: f64) -> Result<(), ExploreError> {
        match self.state.tree.get(v).parent {
            Some(p) => {
                self.depart(group, robots, v, p, now);
                Ok(())
            }
            None => {
                if self.state.tree.get(v).state != VertexState::Explored {
                    return Err(ExploreError::Inconsistent {
                        group,
                        vertex: v,
                        reason: "left the root before it was explored".into(),
                    });
                }
                for r in robots {
                    self.state.finish_times[r as usize] = Some(now);
                }
                Ok(())
            }
        }
    }

    fn edge_cost(&self, from: VertexId, to: VertexId) -> f64 {
        let a = self.state.tree.physical_cell(from);
        let b = self.state.tree.physical_cell(to);
        match a.direction_to(b) {
            Some(d) => self.costs.get(d),
            None => {
                debug_assert_eq!(a, b, "tree edge between non-adjacent cells");
                0.0
            }
        }
    }

    fn depart(&mut self, group: u32, robots: Vec<u32>, from: VertexId, to: VertexId, now: f64) {
        let arrive = now + self.edge_cost(from, to);
        self.state.in_flight.push(InFlight {
            group,
            robots,
            from: Some(from),
            to,
            depart: now,
            arrive,
        });
    }

    /// Run until every group is home, then audit the rewards.
    pub fn run_to_end(mut self) -> Result<ExplorationRun, ExploreError> {
        while self.advance()? {}
        self.finish()
    }

    fn finish(self) -> Result<ExplorationRun, ExploreError> {
        let st = self.state;
        if !st.in_flight.is_empty() {
            return Err(ExploreError::Stalled("groups still in flight".into()));
        }
        let mut alg_time = 0.0f64;
        for (r, f) in st.finish_times.iter().enumerate() {
            match f {
                Some(t) => alg_time = alg_time.max(*t),
                None => return Err(ExploreError::Stalled(format!("robot {r} never returned"))),
            }
        }
        if !st.tree.all_explored() {
            return Err(ExploreError::Stalled("unexplored vertices remain".into()));
        }
        let mut run = ExplorationRun {
            params: st.params,
            alg_time,
            t_last: st.t_last,
            trajectories: st.trajectories,
            moves: st.moves,
            tree: st.tree,
            ledger: RewardLedger::default(),
            events: st.events,
        };
        run.ledger = rewards::replay(&run)?;
        Ok(run)
    }
}

impl<S: NeighborSensor> Explorer<S> {
    /// Finish the run but hand back the sensor too.
    pub fn run_to_end_with_sensor(mut self) -> Result<(ExplorationRun, S), ExploreError>
    where
        S: Clone,
    {
        while self.advance()? {}
        let sensor = self.state.sensor.clone();
        Ok((self.finish()?, sensor))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_world::generate_random_roi;

    fn cells(list: &[(i32, i32)]) -> Vec<Cell> {
        list.iter().map(|&(x, y)| Cell::new(x, y)).collect()
    }

    #[test]
    fn block_hand_trace() {
        let world = GridRoi::stationary(cells(&[(0, 0), (1, 0), (0, 1), (1, 1)]), Cell::new(0, 0)).unwrap();
        let run = explore(&world, 1, 1.0).unwrap();
        assert_eq!(run.alg_time, 6.0);
        let path: Vec<Cell> = run.trajectories[0]
            .iter()
            .map(|(v, _)| run.tree.physical_cell(*v))
            .collect();
        assert_eq!(path, cells(&[(0, 0), (0, 1), (1, 1), (0, 1), (0, 0), (1, 0), (0, 0)]));
        assert!(run.is_complete(&world));
        assert_eq!(run.total_length(), 3);
        assert_eq!(run.d_max(), 2);
    }

    #[test]
    fn single_cell_is_instant() {
        let world = GridRoi::stationary(cells(&[(3, 3)]), Cell::new(3, 3)).unwrap();
        let run = explore(&world, 4, 1.0).unwrap();
        assert_eq!(run.alg_time, 0.0);
        assert_eq!(run.tree.len(), 1);
        assert_eq!(run.tree.get(run.tree.root()).state, VertexState::Explored);
    }

    #[test]
    fn strip_out_and_back() {
        for k in 1..8 {
            let world = GridRoi::stationary((0..k).map(|x| Cell::new(x, 0)), Cell::new(0, 0)).unwrap();
            let run = explore(&world, 1, 1.0).unwrap();
            assert_eq!(run.alg_time, 2.0 * (k - 1) as f64);
            assert_eq!(run.t_last, (k - 1) as f64);
        }
    }

    #[test]
    fn group_splits_evenly() {
        // Plus shape: the root has four ROI neighbours.
        let world = GridRoi::stationary(cells(&[(0, 0), (0, 1), (1, 0), (0, -1), (-1, 0)]), Cell::new(0, 0)).unwrap();
        let run = explore(&world, 5, 1.0).unwrap();
        let root = run.tree.root();
        let mut first: Vec<&MoveRecord> = run.moves.iter().filter(|m| m.depart == 0.0 && m.from == root).collect();
        first.sort_by_key(|m| m.group);
        assert_eq!(first.len(), 2);
        assert_eq!(first[0].robots.len(), 3);
        assert_eq!(first[1].robots.len(), 2);
        assert!(run.is_complete(&world));
    }

    #[test]
    fn lone_robot_takes_north_first() {
        let world = GridRoi::stationary(cells(&[(0, 0), (1, 0), (0, 1)]), Cell::new(0, 0)).unwrap();
        let run = explore(&world, 1, 1.0).unwrap();
        assert_eq!(run.tree.physical_cell(run.trajectories[0][1].0), Cell::new(0, 1));
    }

    #[test]
    fn helper_prefers_fresh_branch() {
        // Robot 1 heads down the long east arm from (1, 0); robot 0 comes back
        // from the short north arm and must take (1, -1) rather than follow it.
        let world = GridRoi::stationary(
            cells(&[(0, 0), (0, 1), (1, 0), (2, 0), (3, 0), (4, 0), (1, -1)]),
            Cell::new(0, 0),
        )
        .unwrap();
        let run = explore(&world, 2, 1.0).unwrap();
        let path: Vec<Cell> = run.trajectories[0]
            .iter()
            .map(|(v, _)| run.tree.physical_cell(*v))
            .collect();
        assert_eq!(&path[..5], &cells(&[(0, 0), (0, 1), (0, 0), (1, 0), (1, -1)])[..]);
    }

    #[test]
    fn simultaneous_helpers_spread_out() {
        // All four arms of the plus are covered by t = 3: the two robots
        // reach the last dummy fork at the same instant from different
        // sides and must not both pick the same leaf.
        let world = GridRoi::stationary(cells(&[(1, 1), (0, 1), (1, 0), (1, 2), (2, 1)]), Cell::new(1, 1)).unwrap();
        let run = explore(&world, 2, 1.0).unwrap();
        assert_eq!(run.t_last, 3.0);
        assert_eq!(run.alg_time, 4.0);
    }

    #[test]
    fn translating_costs_follow_direction() {
        let world = GridRoi::stationary(cells(&[(0, 0), (1, 0)]), Cell::new(0, 0))
            .unwrap()
            .with_motion(Direction::East, 1.0)
            .unwrap();
        let run = explore(&world, 1, 2.5).unwrap();
        let expected = 1.0 / 1.5 + 1.0 / 3.5;
        assert!((run.alg_time - expected).abs() < 1e-12);
    }

    #[test]
    fn random_worlds_complete() {
        for seed in 0..30 {
            let world = generate_random_roi(60, seed);
            for robots in [1, 3, 8] {
                let run = explore(&world, robots, 1.0).unwrap();
                assert!(run.is_complete(&world), "seed {seed} robots {robots}");
                assert_eq!(run.total_length() as usize, world.cell_count() - 1);
                assert!(run.alg_time >= run.t_last);
            }
        }
    }

    #[test]
    fn fault_injection_is_caught() {
        let world = generate_random_roi(30, 5);
        let res = Explorer::new(world, 2, 1.0, PerfectSensor)
            .unwrap()
            .with_faults(Faults {
                skip_interior_marking: true,
            })
            .run_to_end();
        assert!(matches!(res, Err(ExploreError::EventBudget { .. })));
    }

    #[test]
    fn rejects_bad_parameters() {
        let world = generate_random_roi(5, 1).with_motion(Direction::North, 1.0).unwrap();
        assert!(matches!(explore(&world, 1, 1.0), Err(ExploreError::Speed(_))));
        assert!(matches!(explore(&world, 0, 2.0), Err(ExploreError::NoRobots)));
    }

    #[test]
    fn state_round_trips_through_json() {
        let world = generate_random_roi(40, 9);
        let mut ex = Explorer::new(world.clone(), 3, 1.0, PerfectSensor).unwrap();
        for _ in 0..15 {
            ex.advance().unwrap();
        }
        let text = serde_json::to_string(ex.state()).unwrap();
        let state: ExplorerState<PerfectSensor> = serde_json::from_str(&text).unwrap();
        assert_eq!(&state, ex.state());
        let resumed = Explorer::from_state(world.clone(), state)
            .unwrap()
            .run_to_end()
            .unwrap();
        let direct = explore(&world, 3, 1.0).unwrap();
        assert_eq!(resumed, direct);
    }
}
