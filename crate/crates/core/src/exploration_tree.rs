//! The binary tree built online over ROI cells.
//!
//! Vertex `0` is always the root (the start cell). Real vertices carry a
//! cell; dummy vertices are zero-length splice points that keep every vertex
//! at two children or fewer. A dummy sits physically at its nearest real
//! ancestor's cell.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid_world::Cell;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexId(pub u32);

impl VertexId {
    pub const ROOT: VertexId = VertexId(0);

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum VertexState {
    Unexplored,
    UnderExploration,
    Explored,
}

impl VertexState {
    fn rank(self) -> u8 {
        match self {
            VertexState::Unexplored => 0,
            VertexState::UnderExploration => 1,
            VertexState::Explored => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
enum DummyMarker {
    #[serde(rename = "dummy")]
    Dummy,
}

/// What a vertex stands for. Serialized as `[x, y]` or the string `"dummy"`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VertexKind {
    Cell(Cell),
    #[serde(with = "dummy_kind")]
    Dummy,
}

mod dummy_kind {
    use super::DummyMarker;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(s: S) -> Result<S::Ok, S::Error> {
        DummyMarker::Dummy.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(), D::Error> {
        DummyMarker::deserialize(d).map(|_| ())
    }
}

impl VertexKind {
    pub fn cell(self) -> Option<Cell> {
        match self {
            VertexKind::Cell(c) => Some(c),
            VertexKind::Dummy => None,
        }
    }

    pub fn is_dummy(self) -> bool {
        matches!(self, VertexKind::Dummy)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub id: VertexId,
    pub cell: VertexKind,
    pub state: VertexState,
    pub parent: Option<VertexId>,
    pub children: Vec<VertexId>,
}

impl Vertex {
    pub fn is_dummy(&self) -> bool {
        self.cell.is_dummy()
    }

    /// Length of the edge to the parent: zero for dummies and for the root.
    pub fn edge_to_parent_length(&self) -> u32 {
        match (self.parent, self.cell) {
            (None, _) | (_, VertexKind::Dummy) => 0,
            (Some(_), VertexKind::Cell(_)) => 1,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum TreeError {
    #[error("vertex {0} does not exist")]
    NoSuchVertex(VertexId),
    #[error("cell {0} is already in the tree")]
    DuplicateCell(Cell),
    #[error("vertex {0} already has two children")]
    Full(VertexId),
    #[error("illegal state change at {vertex}: {from:?} -> {to:?}")]
    IllegalTransition {
        vertex: VertexId,
        from: VertexState,
        to: VertexState,
    },
    #[error("malformed tree: {0}")]
    Malformed(String),
}

/// Binary exploration tree with centralized, shared vertex states.
#[derive(Clone, Debug, PartialEq)]
pub struct ExplorationTree {
    vertices: Vec<Vertex>,
    by_cell: BTreeMap<Cell, VertexId>,
}

impl ExplorationTree {
    pub fn new(root: Cell) -> Self {
        ExplorationTree {
            vertices: vec![Vertex {
                id: VertexId::ROOT,
                cell: VertexKind::Cell(root),
                state: VertexState::Unexplored,
                parent: None,
                children: Vec::new(),
            }],
            by_cell: BTreeMap::from([(root, VertexId::ROOT)]),
        }
    }

    pub fn root(&self) -> VertexId {
        VertexId::ROOT
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn vertex(&self, id: VertexId) -> Result<&Vertex, TreeError> {
        self.vertices.get(id.index()).ok_or(TreeError::NoSuchVertex(id))
    }

    fn vertex_mut(&mut self, id: VertexId) -> Result<&mut Vertex, TreeError> {
        self.vertices.get_mut(id.index()).ok_or(TreeError::NoSuchVertex(id))
    }

    /// Panicking accessor for ids known to come from this tree.
    pub fn get(&self, id: VertexId) -> &Vertex {
        &self.vertices[id.index()]
    }

    pub fn vertex_of(&self, cell: Cell) -> Option<VertexId> {
        self.by_cell.get(&cell).copied()
    }

    pub fn contains_cell(&self, cell: Cell) -> bool {
        self.by_cell.contains_key(&cell)
    }

    /// Cells of all real vertices, in cell order.
    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        self.by_cell.keys().copied()
    }

    pub fn cell_count(&self) -> usize {
        self.by_cell.len()
    }

    pub fn dummy_count(&self) -> usize {
        self.vertices.len() - self.by_cell.len()
    }

    /// Cell a robot at `id` physically occupies.
    pub fn physical_cell(&self, id: VertexId) -> Cell {
        let mut v = self.get(id);
        loop {
            match v.cell {
                VertexKind::Cell(c) => return c,
                VertexKind::Dummy => {
                    v = self.get(v.parent.expect("dummy vertices always have a parent"));
                }
            }
        }
    }

    /// Attach `cell` as a new unexplored child of `parent` with edge length 1.
    pub fn add_child(&mut self, parent: VertexId, cell: Cell) -> Result<VertexId, TreeError> {
        if self.by_cell.contains_key(&cell) {
            return Err(TreeError::DuplicateCell(cell));
        }
        if self.vertex(parent)?.children.len() >= 2 {
            return Err(TreeError::Full(parent));
        }
        let id = self.push(VertexKind::Cell(cell), parent);
        self.by_cell.insert(cell, id);
        Ok(id)
    }

    fn push(&mut self, kind: VertexKind, parent: VertexId) -> VertexId {
        let id = VertexId(self.vertices.len() as u32);
        self.vertices.push(Vertex {
            id,
            cell: kind,
            state: VertexState::Unexplored,
            parent: Some(parent),
            children: Vec::new(),
        });
        self.vertices[parent.index()].children.push(id);
        id
    }

    /// Make room for a third child under `vertex`.
    ///
    /// When `vertex` has two children, its second child is moved under a new
    /// dummy vertex that takes its slot, and the dummy's id is returned. With
    /// fewer than two children nothing changes and `None` is returned.
    pub fn binarize_at(&mut self, vertex: VertexId) -> Result<Option<VertexId>, TreeError> {
        let v = self.vertex(vertex)?;
        if v.children.len() < 2 {
            return Ok(None);
        }
        let moved = v.children[1];
        let dummy = VertexId(self.vertices.len() as u32);
        self.vertices.push(Vertex {
            id: dummy,
            cell: VertexKind::Dummy,
            state: VertexState::Unexplored,
            parent: Some(vertex),
            children: vec![moved],
        });
        self.vertices[vertex.index()].children[1] = dummy;
        self.vertices[moved.index()].parent = Some(dummy);
        Ok(Some(dummy))
    }

    /// Attach every cell in `cells` below `parent`, binarizing as needed.
    ///
    /// Either all cells are attached or, on error, the tree is unchanged.
    pub fn attach_children(&mut self, parent: VertexId, cells: &[Cell]) -> Result<Vec<VertexId>, TreeError> {
        self.vertex(parent)?;
        for (i, c) in cells.iter().enumerate() {
            if self.by_cell.contains_key(c) || cells[..i].contains(c) {
                return Err(TreeError::DuplicateCell(*c));
            }
        }
        let mut ids = Vec::with_capacity(cells.len());
        for &cell in cells {
            let mut at = parent;
            loop {
                let v = self.get(at);
                if v.children.len() < 2 {
                    break;
                }
                let last = v.children[1];
                at = if self.get(last).is_dummy() {
                    last
                } else {
                    self.binarize_at(at)?.expect("vertex was full")
                };
            }
            ids.push(self.add_child(at, cell)?);
        }
        Ok(ids)
    }

    /// Forward-only state change; `EXPLORED` is absorbing.
    pub fn set_state(&mut self, id: VertexId, state: VertexState) -> Result<(), TreeError> {
        let v = self.vertex_mut(id)?;
        if state.rank() < v.state.rank() {
            return Err(TreeError::IllegalTransition {
                vertex: id,
                from: v.state,
                to: state,
            });
        }
        v.state = state;
        Ok(())
    }

    pub fn is_child(&self, parent: VertexId, child: VertexId) -> bool {
        self.vertices
            .get(child.index())
            .is_some_and(|c| c.parent == Some(parent))
    }

    /// L: total edge length, counting only edges into real vertices.
    pub fn total_length(&self) -> u32 {
        self.vertices.iter().map(Vertex::edge_to_parent_length).sum()
    }

    /// Root distance of every vertex in length units.
    pub fn depths(&self) -> Vec<u32> {
        let mut depth = vec![0u32; self.vertices.len()];
        // Binarization re-parents vertices under newer dummies, so ids are
        // not a topological order.
        let mut stack = vec![VertexId::ROOT];
        while let Some(id) = stack.pop() {
            let v = self.get(id);
            for &c in &v.children {
                depth[c.index()] = depth[id.index()] + self.get(c).edge_to_parent_length();
                stack.push(c);
            }
        }
        depth
    }

    pub fn leaves(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertices.iter().filter(|v| v.children.is_empty()).map(|v| v.id)
    }

    pub fn all_explored(&self) -> bool {
        self.vertices.iter().all(|v| v.state == VertexState::Explored)
    }

    /// Path from the root down to `id`, inclusive.
    pub fn path_from_root(&self, id: VertexId) -> Vec<VertexId> {
        let mut path = vec![id];
        let mut cur = id;
        while let Some(p) = self.get(cur).parent {
            path.push(p);
            cur = p;
        }
        path.reverse();
        path
    }

    /// Canonical decomposition: the backbone follows a deepest leaf, ties
    /// broken toward the smaller child index.
    pub fn decompose(&self) -> BackboneDecomposition {
        let depth = self.depths();
        // Height below each vertex, computed over a post-order.
        let mut height = vec![0u32; self.vertices.len()];
        for id in self.post_order() {
            let v = self.get(id);
            height[id.index()] = v
                .children
                .iter()
                .map(|c| self.get(*c).edge_to_parent_length() + height[c.index()])
                .max()
                .unwrap_or(0);
        }
        let mut cur = VertexId::ROOT;
        let mut backbone = vec![cur];
        loop {
            let v = self.get(cur);
            let Some(best) = v
                .children
                .iter()
                .copied()
                .enumerate()
                .max_by(|(ia, a), (ib, b)| {
                    let ha = self.get(*a).edge_to_parent_length() + height[a.index()];
                    let hb = self.get(*b).edge_to_parent_length() + height[b.index()];
                    ha.cmp(&hb).then(ib.cmp(ia))
                })
                .map(|(_, c)| c)
            else {
                break;
            };
            backbone.push(best);
            cur = best;
        }
        let d_max = depth.iter().copied().max().unwrap_or(0);
        self.build_decomposition(backbone, d_max)
    }

    /// Decomposition whose backbone ends at `leaf`.
    pub fn decompose_towards(&self, leaf: VertexId) -> Result<BackboneDecomposition, TreeError> {
        let v = self.vertex(leaf)?;
        if !v.children.is_empty() {
            return Err(TreeError::Malformed(format!("{leaf} is not a leaf")));
        }
        let d_max = self.depths().into_iter().max().unwrap_or(0);
        Ok(self.build_decomposition(self.path_from_root(leaf), d_max))
    }

    fn build_decomposition(&self, backbone: Vec<VertexId>, d_max: u32) -> BackboneDecomposition {
        let mut on_backbone = vec![false; self.vertices.len()];
        for v in &backbone {
            on_backbone[v.index()] = true;
        }
        let mut ribs = Vec::new();
        for &b in &backbone {
            // Off-backbone dummies sit at the backbone cell, so their
            // children hang directly off the backbone.
            let mut pending: Vec<(VertexId, Vec<VertexId>)> = self
                .get(b)
                .children
                .iter()
                .filter(|c| !on_backbone[c.index()])
                .map(|&c| (c, Vec::new()))
                .collect();
            pending.reverse();
            while let Some((top, mut connectors)) = pending.pop() {
                let tv = self.get(top);
                if tv.is_dummy() {
                    connectors.push(top);
                    let mut kids: Vec<_> = tv.children.to_vec();
                    kids.reverse();
                    let last = kids.len();
                    for (i, k) in kids.into_iter().enumerate() {
                        // Connector edges go with the first expanded rib.
                        let carry = if i + 1 == last {
                            std::mem::take(&mut connectors)
                        } else {
                            Vec::new()
                        };
                        pending.push((k, carry));
                    }
                    continue;
                }
                let mut edges = connectors;
                edges.extend(self.subtree(top));
                ribs.push(Rib {
                    attach: b,
                    root: top,
                    edges,
                });
            }
        }
        let backbone_length = backbone
            .iter()
            .skip(1)
            .map(|v| self.get(*v).edge_to_parent_length())
            .sum();
        BackboneDecomposition {
            backbone,
            ribs,
            d_max,
            backbone_length,
        }
    }

    /// Vertices of the subtree below and including `id`, pre-order.
    pub fn subtree(&self, id: VertexId) -> Vec<VertexId> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(v) = stack.pop() {
            out.push(v);
            for c in self.get(v).children.iter().rev() {
                stack.push(*c);
            }
        }
        out
    }

    fn post_order(&self) -> Vec<VertexId> {
        let mut pre = self.subtree(VertexId::ROOT);
        pre.reverse();
        pre
    }

    /// Structural invariant check.
    pub fn validate(&self) -> Result<(), TreeError> {
        let bad = |m: String| Err(TreeError::Malformed(m));
        if self.vertices.is_empty() {
            return bad("no vertices".into());
        }
        let root = &self.vertices[0];
        if root.parent.is_some() || root.is_dummy() {
            return bad("vertex 0 must be a real root".into());
        }
        let mut cells = BTreeMap::new();
        for (i, v) in self.vertices.iter().enumerate() {
            if v.id.index() != i {
                return bad(format!("vertex at index {i} has id {}", v.id));
            }
            if v.children.len() > 2 {
                return bad(format!("{} has {} children", v.id, v.children.len()));
            }
            if let VertexKind::Cell(c) = v.cell {
                if cells.insert(c, v.id).is_some() {
                    return bad(format!("cell {c} appears twice"));
                }
            } else if v.children.len() != 2 && v.state != VertexState::Unexplored {
                // A visited dummy always had its two children attached.
                return bad(format!("dummy {} has {} children", v.id, v.children.len()));
            }
            if i > 0 {
                let Some(p) = v.parent else {
                    return bad(format!("{} has no parent", v.id));
                };
                let Some(pv) = self.vertices.get(p.index()) else {
                    return bad(format!("{} has missing parent {p}", v.id));
                };
                if !pv.children.contains(&v.id) {
                    return bad(format!("{p} does not list child {}", v.id));
                }
            }
            for c in &v.children {
                match self.vertices.get(c.index()) {
                    Some(cv) if cv.parent == Some(v.id) => {}
                    _ => return bad(format!("{} lists child {c} that disagrees", v.id)),
                }
            }
        }
        if cells != self.by_cell {
            return bad("cell index out of sync".into());
        }
        if self.subtree(VertexId::ROOT).len() != self.vertices.len() {
            return bad("tree is not connected to the root".into());
        }
        Ok(())
    }

    pub fn to_document(&self) -> TreeDocument {
        TreeDocument {
            root: VertexId::ROOT,
            vertices: self.vertices.clone(),
        }
    }

    pub fn from_document(doc: TreeDocument) -> Result<Self, TreeError> {
        if doc.root != VertexId::ROOT {
            return Err(TreeError::Malformed("root must be vertex 0".into()));
        }
        let by_cell = doc
            .vertices
            .iter()
            .filter_map(|v| v.cell.cell().map(|c| (c, v.id)))
            .collect();
        let tree = ExplorationTree {
            vertices: doc.vertices,
            by_cell,
        };
        tree.validate()?;
        Ok(tree)
    }
}

impl Serialize for ExplorationTree {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_document().serialize(s)
    }
}

impl<'de> Deserialize<'de> for ExplorationTree {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let doc = TreeDocument::deserialize(d)?;
        ExplorationTree::from_document(doc).map_err(serde::de::Error::custom)
    }
}

/// Serialized tree: `{root, vertices: [{id, cell, state, parent, children}]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeDocument {
    pub root: VertexId,
    pub vertices: Vec<Vertex>,
}

/// A subtree hanging off the backbone.
#[derive(Clone, Debug, PartialEq)]
pub struct Rib {
    /// Backbone vertex the rib hangs from.
    pub attach: VertexId,
    /// First real vertex of the rib.
    pub root: VertexId,
    /// Edges of the rib, each named by its child vertex.
    pub edges: Vec<VertexId>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BackboneDecomposition {
    pub backbone: Vec<VertexId>,
    pub ribs: Vec<Rib>,
    /// Depth of the deepest vertex, in length units.
    pub d_max: u32,
    pub backbone_length: u32,
}

impl BackboneDecomposition {
    /// Edge kind table indexed by child vertex (`None` for the root).
    pub fn edge_kinds(&self, tree: &ExplorationTree) -> Vec<Option<EdgeKind>> {
        let mut kinds = vec![Some(EdgeKind::Rib); tree.len()];
        kinds[VertexId::ROOT.index()] = None;
        for v in self.backbone.iter().skip(1) {
            kinds[v.index()] = Some(EdgeKind::Backbone);
        }
        kinds
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EdgeKind {
    Rib,
    Backbone,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: i32, y: i32) -> Cell {
        Cell::new(x, y)
    }

    #[test]
    fn add_child_counts_length() {
        let mut t = ExplorationTree::new(c(0, 0));
        t.add_child(t.root(), c(0, 1)).unwrap();
        assert_eq!(t.total_length(), 1);
        assert_eq!(t.add_child(t.root(), c(0, 1)), Err(TreeError::DuplicateCell(c(0, 1))));
        assert_eq!(t.add_child(t.root(), c(0, 0)), Err(TreeError::DuplicateCell(c(0, 0))));
    }

    #[test]
    fn third_child_needs_binarization() {
        let mut t = ExplorationTree::new(c(0, 0));
        t.add_child(t.root(), c(0, 1)).unwrap();
        t.add_child(t.root(), c(1, 0)).unwrap();
        assert_eq!(t.add_child(t.root(), c(0, -1)), Err(TreeError::Full(t.root())));
        let d = t.binarize_at(t.root()).unwrap().unwrap();
        t.add_child(d, c(0, -1)).unwrap();
        assert_eq!(t.dummy_count(), 1);
        assert_eq!(t.total_length(), 3);
        assert_eq!(t.get(d).edge_to_parent_length(), 0);
        assert_eq!(t.get(d).children.len(), 2);
        assert_eq!(t.physical_cell(d), c(0, 0));
        t.validate().unwrap();
    }

    #[test]
    fn binarize_is_noop_below_two_children() {
        let mut t = ExplorationTree::new(c(0, 0));
        assert_eq!(t.binarize_at(t.root()).unwrap(), None);
        t.add_child(t.root(), c(1, 0)).unwrap();
        assert_eq!(t.binarize_at(t.root()).unwrap(), None);
        assert_eq!(t.dummy_count(), 0);
    }

    #[test]
    fn attach_three_and_four_children() {
        let mut t = ExplorationTree::new(c(0, 0));
        let ids = t
            .attach_children(t.root(), &[c(0, 1), c(1, 0), c(0, -1), c(-1, 0)])
            .unwrap();
        assert_eq!(ids.len(), 4);
        assert_eq!(t.dummy_count(), 2);
        assert_eq!(t.total_length(), 4);
        let depths = t.depths();
        assert!(ids.iter().all(|v| depths[v.index()] == 1));
        assert!(t.vertices().iter().all(|v| v.children.len() <= 2));
        t.validate().unwrap();
        // Binarization below a vertex is at most two levels deep for three children.
        let mut t3 = ExplorationTree::new(c(0, 0));
        t3.attach_children(t3.root(), &[c(0, 1), c(1, 0), c(0, -1)]).unwrap();
        assert_eq!(t3.dummy_count(), 1);
        assert_eq!(t3.get(t3.root()).children.len(), 2);
    }

    #[test]
    fn attach_is_atomic() {
        let mut t = ExplorationTree::new(c(0, 0));
        t.add_child(t.root(), c(1, 0)).unwrap();
        let before = t.clone();
        assert!(t.attach_children(t.root(), &[c(0, 1), c(1, 0)]).is_err());
        assert_eq!(t, before);
        assert!(t.attach_children(t.root(), &[c(0, 1), c(0, 1)]).is_err());
        assert_eq!(t, before);
    }

    #[test]
    fn state_transitions() {
        let mut t = ExplorationTree::new(c(0, 0));
        let r = t.root();
        t.set_state(r, VertexState::UnderExploration).unwrap();
        t.set_state(r, VertexState::UnderExploration).unwrap();
        t.set_state(r, VertexState::Explored).unwrap();
        assert!(matches!(
            t.set_state(r, VertexState::UnderExploration),
            Err(TreeError::IllegalTransition { .. })
        ));
        // A leaf goes straight to explored.
        let leaf = t.add_child(r, c(1, 0)).unwrap();
        t.set_state(leaf, VertexState::Explored).unwrap();
    }

    #[test]
    fn path_decomposition() {
        let mut t = ExplorationTree::new(c(0, 0));
        let mut at = t.root();
        for x in 1..6 {
            at = t.add_child(at, c(x, 0)).unwrap();
        }
        let d = t.decompose();
        assert_eq!(d.backbone.len(), 6);
        assert!(d.ribs.is_empty());
        assert_eq!(d.d_max, 5);
        assert_eq!(d.backbone_length, 5);
    }

    #[test]
    fn binarized_star_decomposition() {
        let mut t = ExplorationTree::new(c(0, 0));
        let ids = t.attach_children(t.root(), &[c(0, 1), c(1, 0), c(0, -1)]).unwrap();
        let d = t.decompose();
        assert_eq!(d.d_max, 1);
        assert_eq!(d.backbone, vec![t.root(), ids[0]]);
        assert_eq!(d.ribs.len(), 2);
        assert_eq!(d.ribs[0].root, ids[1]);
        assert_eq!(d.ribs[1].root, ids[2]);
        // Every non-backbone edge lands in exactly one rib.
        let mut covered: Vec<VertexId> = d.ribs.iter().flat_map(|r| r.edges.clone()).collect();
        covered.sort();
        let mut expected: Vec<VertexId> = t
            .vertices()
            .iter()
            .map(|v| v.id)
            .filter(|v| !d.backbone.contains(v))
            .collect();
        expected.sort();
        assert_eq!(covered, expected);
    }

    #[test]
    fn deepest_branch_is_backbone() {
        // root -> a -> b -> c, and root -> e (shallow, first child).
        let mut t = ExplorationTree::new(c(0, 0));
        let e = t.add_child(t.root(), c(0, 1)).unwrap();
        let a = t.add_child(t.root(), c(1, 0)).unwrap();
        let b = t.add_child(a, c(2, 0)).unwrap();
        let cc = t.add_child(b, c(3, 0)).unwrap();
        let d = t.decompose();
        assert_eq!(d.backbone, vec![t.root(), a, b, cc]);
        assert_eq!(d.ribs.len(), 1);
        assert_eq!(d.ribs[0].root, e);
        let towards = t.decompose_towards(e).unwrap();
        assert_eq!(towards.backbone, vec![t.root(), e]);
        assert_eq!(towards.backbone_length, 1);
        assert_eq!(towards.d_max, 3);
        assert!(t.decompose_towards(a).is_err());
    }

    #[test]
    fn dummy_does_not_change_d_max() {
        let mut t = ExplorationTree::new(c(0, 0));
        t.attach_children(t.root(), &[c(0, 1), c(1, 0), c(0, -1), c(-1, 0)])
            .unwrap();
        assert_eq!(t.decompose().d_max, 1);
    }

    #[test]
    fn document_round_trip_and_format() {
        let mut t = ExplorationTree::new(c(0, 0));
        t.attach_children(t.root(), &[c(0, 1), c(1, 0), c(0, -1)]).unwrap();
        t.set_state(t.root(), VertexState::UnderExploration).unwrap();
        let text = serde_json::to_string(&t).unwrap();
        assert!(text.contains("\"dummy\""));
        assert!(text.contains("UNDER_EXPLORATION"));
        let back: ExplorationTree = serde_json::from_str(&text).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn document_rejects_inconsistency() {
        let mut t = ExplorationTree::new(c(0, 0));
        t.add_child(t.root(), c(1, 0)).unwrap();
        let mut doc = t.to_document();
        doc.vertices[1].parent = None;
        assert!(ExplorationTree::from_document(doc).is_err());
        let mut doc = t.to_document();
        doc.vertices[1].cell = VertexKind::Cell(c(0, 0));
        assert!(ExplorationTree::from_document(doc).is_err());
    }
}
