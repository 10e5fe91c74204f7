//! Reward bookkeeping replayed over a finished run.
//!
//! Every rib edge carries two unit reward layers, one for the first forward
//! crossing and one for the first backward crossing. Every backbone edge
//! carries `1 + ⌊log₂R⌋` layers: the first group to cross it forward takes as
//! many as it has robots, and each later group crossing in either direction
//! takes one more while any remain. A layer is collected continuously while
//! its robot crosses the edge.
//!
//! The backbone ends at the leaf reached at `t_last`, so no robot ever walks
//! back along it before that instant.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::bounds::floor_log2;
use crate::exploration_tree::{EdgeKind, TreeError, VertexId};
use crate::explorer::ExplorationRun;

#[derive(Debug, Error, PartialEq)]
pub enum AuditError {
    #[error("move {from} -> {to} is not a tree edge")]
    NonTreeEdge { from: VertexId, to: VertexId },
    #[error(transparent)]
    Tree(#[from] TreeError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord {
    /// The edge, named by its child vertex.
    pub edge: VertexId,
    pub kind: EdgeKind,
    pub length: u32,
    pub forward_collections: u32,
    pub backward_collections: u32,
    /// Reward gathered up to `t_last`.
    pub reward_collected: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RewardLedger {
    pub backbone: Vec<VertexId>,
    /// Layers per backbone edge.
    pub levels: u32,
    pub edges: Vec<EdgeRecord>,
    /// Reward gathered up to `t_last`.
    pub total: f64,
}

impl RewardLedger {
    /// Layers available in the whole tree under this backbone.
    pub fn capacity(&self) -> u32 {
        self.edges
            .iter()
            .map(|e| match e.kind {
                EdgeKind::Rib => 2 * e.length,
                EdgeKind::Backbone => self.levels * e.length,
            })
            .sum()
    }
}

/// Both sides of the reward inequality for one run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RewardAudit {
    /// (S_r − S_p)(1 + ⌊log₂R⌋)·t_last.
    pub lhs: f64,
    pub collected: f64,
    /// 2(L − d_max) + (1 + ⌊log₂R⌋)·d_max.
    pub rhs: f64,
    pub lower_ok: bool,
    pub upper_ok: bool,
}

impl RewardAudit {
    pub fn ok(&self) -> bool {
        self.lower_ok && self.upper_ok
    }
}

const SLACK: f64 = 1e-9;

/// Leaf that was reached at `t_last`; the deepest one if several tie.
fn last_leaf(run: &ExplorationRun) -> VertexId {
    let depth = run.tree.depths();
    let tol = SLACK * run.t_last.max(1.0);
    run.moves
        .iter()
        .filter(|m| run.tree.get(m.to).children.is_empty() && (m.arrive - run.t_last).abs() <= tol)
        .map(|m| m.to)
        .max_by_key(|v| (depth[v.index()], std::cmp::Reverse(*v)))
        .unwrap_or(run.tree.root())
}

pub fn replay(run: &ExplorationRun) -> Result<RewardLedger, AuditError> {
    let tree = &run.tree;
    let decomposition = tree.decompose_towards(last_leaf(run))?;
    let kinds = decomposition.edge_kinds(tree);
    let levels = 1 + floor_log2(run.params.robots);

    let mut records: Vec<Option<EdgeRecord>> = tree
        .vertices()
        .iter()
        .map(|v| {
            kinds[v.id.index()].map(|kind| EdgeRecord {
                edge: v.id,
                kind,
                length: v.edge_to_parent_length(),
                forward_collections: 0,
                backward_collections: 0,
                reward_collected: 0.0,
            })
        })
        .collect();
    // Whether any group has crossed a backbone edge yet.
    let mut crossed = vec![false; tree.len()];

    let mut order: Vec<usize> = (0..run.moves.len()).collect();
    order.sort_by(|&a, &b| {
        let (ma, mb) = (&run.moves[a], &run.moves[b]);
        ma.depart.total_cmp(&mb.depart).then(ma.group.cmp(&mb.group))
    });
    for i in order {
        let m = &run.moves[i];
        let (edge, forward) = if tree.is_child(m.from, m.to) {
            (m.to, true)
        } else if tree.is_child(m.to, m.from) {
            (m.from, false)
        } else {
            return Err(AuditError::NonTreeEdge { from: m.from, to: m.to });
        };
        let rec = records[edge.index()]
            .as_mut()
            .expect("every non-root vertex names an edge");
        if rec.length == 0 {
            continue;
        }
        let taken = match rec.kind {
            EdgeKind::Rib => {
                let slot = if forward {
                    &mut rec.forward_collections
                } else {
                    &mut rec.backward_collections
                };
                let t = u32::from(*slot == 0);
                *slot += t;
                t
            }
            EdgeKind::Backbone => {
                let used = rec.forward_collections + rec.backward_collections;
                let want = if crossed[edge.index()] {
                    1
                } else {
                    m.robots.len() as u32
                };
                crossed[edge.index()] = true;
                let t = want.min(levels - used);
                if forward {
                    rec.forward_collections += t;
                } else {
                    rec.backward_collections += t;
                }
                t
            }
        };
        if taken == 0 {
            continue;
        }
        let span = m.arrive - m.depart;
        let share = if span <= 0.0 {
            1.0
        } else {
            ((run.t_last - m.depart) / span).clamp(0.0, 1.0)
        };
        rec.reward_collected += taken as f64 * rec.length as f64 * share;
    }
    let edges: Vec<EdgeRecord> = records.into_iter().flatten().collect();
    let total = edges.iter().map(|e| e.reward_collected).sum();
    Ok(RewardLedger {
        backbone: decomposition.backbone,
        levels,
        edges,
        total,
    })
}

pub fn audit_rewards(run: &ExplorationRun) -> RewardAudit {
    let p = &run.params;
    let levels = (1 + floor_log2(p.robots)) as f64;
    let l = run.total_length() as f64;
    let d = run.d_max() as f64;
    let lhs = (p.robot_speed - p.roi_speed) * levels * run.t_last;
    let rhs = 2.0 * (l - d) + levels * d;
    let collected = run.ledger.total;
    let tol = |x: f64| SLACK * x.abs().max(1.0);
    RewardAudit {
        lhs,
        collected,
        rhs,
        lower_ok: lhs <= collected + tol(collected),
        upper_ok: collected <= rhs + tol(rhs),
    }
}
