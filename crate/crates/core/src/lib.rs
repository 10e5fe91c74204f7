//! Online exploration of an unknown, possibly translating, grid region by a
//! team of robots running a recursive depth-first search.

pub mod analysis;
pub mod exploration_tree;
pub mod explorer;
pub mod geometry;
pub mod grid_world;
pub mod harness;
pub mod sensing;
