//! Arbitrary-shape ROIs: polygons with holes, the fatness test, and grid
//! approximations of them.
//!
//! Lengths are in sensor-footprint side lengths, so one grid cell is a unit
//! square.

mod raster;
pub mod shapes;

use std::f64::consts::{FRAC_1_SQRT_2, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use raster::{
    best_inner_grid, rasterize, verify_approximation_bounds, verify_at_resolution, ApproximationReport,
    GridApproximation, DEFAULT_RESOLUTION,
};

/// Distance below which a point counts as lying on the boundary.
pub const BOUNDARY_EPS: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("ring {ring} has {count} vertices, need at least 3")]
    TooFewVertices { ring: usize, count: usize },
    #[error("ring {ring} has zero area")]
    ZeroArea { ring: usize },
    #[error("ring {ring} repeats vertex {index}")]
    RepeatedVertex { ring: usize, index: usize },
    #[error("ring {ring} has a non-finite coordinate")]
    NotFinite { ring: usize },
    #[error("ring {ring} crosses ring {other}")]
    Crossing { ring: usize, other: usize },
    #[error("hole {0} is not inside the outer boundary")]
    HoleOutside(usize),
    #[error("holes {0} and {1} overlap")]
    HolesOverlap(usize, usize),
    #[error("grid resolution must lie in (0, 0.1], got {0}")]
    BadResolution(f64),
    #[error("no grid offset leaves a cell fully inside the polygon")]
    NoInnerCells,
    #[error("malformed polygon file: {0}")]
    Parse(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }

    fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }
}

impl From<[f64; 2]> for Point {
    fn from([x, y]: [f64; 2]) -> Self {
        Point::new(x, y)
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

fn signed_area(ring: &[Point]) -> f64 {
    let n = ring.len();
    (0..n).map(|i| ring[i].cross(ring[(i + 1) % n])).sum::<f64>() / 2.0
}

fn edges(ring: &[Point]) -> impl Iterator<Item = (Point, Point)> + '_ {
    let n = ring.len();
    (0..n).map(move |i| (ring[i], ring[(i + 1) % n]))
}

fn dist_to_segment(p: Point, a: Point, b: Point) -> f64 {
    let ab = b.sub(a);
    let len2 = ab.dot(ab);
    let t = if len2 == 0.0 {
        0.0
    } else {
        (p.sub(a).dot(ab) / len2).clamp(0.0, 1.0)
    };
    p.sub(Point::new(a.x + t * ab.x, a.y + t * ab.y)).norm()
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    b.sub(a).cross(c.sub(a))
}

fn on_segment(a: Point, b: Point, p: Point) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Closed segments `ab` and `cd` share a point.
fn segments_touch(a: Point, b: Point, c: Point, d: Point) -> bool {
    let (d1, d2) = (orient(c, d, a), orient(c, d, b));
    let (d3, d4) = (orient(a, b, c), orient(a, b, d));
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

/// Even-odd crossing test against one ring.
fn ring_contains(ring: &[Point], p: Point) -> bool {
    let mut inside = false;
    for (a, b) in edges(ring) {
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    inside
}

/// A simple polygon with simple, disjoint holes. The outer ring is stored
/// counterclockwise and holes clockwise, so the interior is always on the
/// left of every edge.
#[derive(Clone, Debug, PartialEq)]
pub struct FatPolygon {
    outer: Vec<Point>,
    holes: Vec<Vec<Point>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolygonFile {
    pub outer: Vec<Point>,
    #[serde(default)]
    pub holes: Vec<Vec<Point>>,
}

impl FatPolygon {
    /// Validate and orient the rings. Fatness is a separate check.
    pub fn new(outer: Vec<Point>, holes: Vec<Vec<Point>>) -> Result<Self, GeometryError> {
        let mut rings = Vec::with_capacity(1 + holes.len());
        rings.push(outer);
        rings.extend(holes);
        for (r, ring) in rings.iter_mut().enumerate() {
            if ring.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
                return Err(GeometryError::NotFinite { ring: r });
            }
            if ring.len() >= 2 && ring.first() == ring.last() {
                ring.pop();
            }
            if ring.len() < 3 {
                return Err(GeometryError::TooFewVertices {
                    ring: r,
                    count: ring.len(),
                });
            }
            let n = ring.len();
            if let Some(index) = (0..n).find(|&i| ring[i] == ring[(i + 1) % n]) {
                return Err(GeometryError::RepeatedVertex { ring: r, index });
            }
            let area = signed_area(ring);
            if area.abs() < 1e-12 {
                return Err(GeometryError::ZeroArea { ring: r });
            }
            let want_ccw = r == 0;
            if (area > 0.0) != want_ccw {
                ring.reverse();
            }
        }
        for r in 0..rings.len() {
            check_simple(&rings[r]).map_err(|_| GeometryError::Crossing { ring: r, other: r })?;
            for o in r + 1..rings.len() {
                let crosses = edges(&rings[r]).any(|(a, b)| edges(&rings[o]).any(|(c, d)| segments_touch(a, b, c, d)));
                if crosses {
                    return Err(GeometryError::Crossing { ring: r, other: o });
                }
            }
        }
        let outer = rings.remove(0);
        for (h, hole) in rings.iter().enumerate() {
            if !ring_contains(&outer, hole[0]) {
                return Err(GeometryError::HoleOutside(h));
            }
            for (g, other) in rings.iter().enumerate().skip(h + 1) {
                if ring_contains(other, hole[0]) || ring_contains(hole, other[0]) {
                    return Err(GeometryError::HolesOverlap(h, g));
                }
            }
        }
        Ok(FatPolygon { outer, holes: rings })
    }

    pub fn simple(outer: Vec<Point>) -> Result<Self, GeometryError> {
        FatPolygon::new(outer, Vec::new())
    }

    pub fn outer(&self) -> &[Point] {
        &self.outer
    }

    pub fn holes(&self) -> &[Vec<Point>] {
        &self.holes
    }

    pub fn rings(&self) -> impl Iterator<Item = &[Point]> {
        std::iter::once(self.outer.as_slice()).chain(self.holes.iter().map(Vec::as_slice))
    }

    pub fn boundary_edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        self.rings().flat_map(edges)
    }

    pub fn area(&self) -> f64 {
        self.rings().map(signed_area).sum()
    }

    pub fn bounds(&self) -> (Point, Point) {
        let (mut lo, mut hi) = (self.outer[0], self.outer[0]);
        for p in &self.outer {
            lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        (lo, hi)
    }

    pub fn translated(&self, dx: f64, dy: f64) -> FatPolygon {
        let shift = |ring: &Vec<Point>| ring.iter().map(|p| Point::new(p.x + dx, p.y + dy)).collect();
        FatPolygon {
            outer: shift(&self.outer),
            holes: self.holes.iter().map(shift).collect(),
        }
    }

    pub fn distance_to_boundary(&self, p: Point) -> f64 {
        self.boundary_edges()
            .map(|(a, b)| dist_to_segment(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }

    /// Inside the polygon or on its boundary.
    pub fn contains_closed(&self, p: Point) -> bool {
        self.distance_to_boundary(p) <= BOUNDARY_EPS || self.parity_inside(p)
    }

    /// Strictly inside the polygon.
    pub fn contains_open(&self, p: Point) -> bool {
        self.distance_to_boundary(p) > BOUNDARY_EPS && self.parity_inside(p)
    }

    fn parity_inside(&self, p: Point) -> bool {
        ring_contains(&self.outer, p) && !self.holes.iter().any(|h| ring_contains(h, p))
    }

    pub fn to_file(&self) -> PolygonFile {
        PolygonFile {
            outer: self.outer.clone(),
            holes: self.holes.clone(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, GeometryError> {
        let file: PolygonFile = serde_json::from_str(text).map_err(|e| GeometryError::Parse(e.to_string()))?;
        FatPolygon::new(file.outer, file.holes)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("polygon serializes")
    }
}

fn check_simple(ring: &[Point]) -> Result<(), ()> {
    let n = ring.len();
    for i in 0..n {
        let (a, b) = (ring[i], ring[(i + 1) % n]);
        for j in i + 1..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            let (c, d) = (ring[j], ring[(j + 1) % n]);
            if adjacent {
                // Neighbouring edges may only share their common vertex.
                let shared = if j == i + 1 { b } else { a };
                let (far_self, far_other) = if j == i + 1 { (a, d) } else { (b, c) };
                if orient(a, b, far_other) == 0.0 && on_segment(a, b, far_other) && far_other != shared {
                    return Err(());
                }
                if orient(c, d, far_self) == 0.0 && on_segment(c, d, far_self) && far_self != shared {
                    return Err(());
                }
            } else if segments_touch(a, b, c, d) {
                return Err(());
            }
        }
    }
    Ok(())
}

/// Radius of the inscribed ball required at every boundary point.
pub const FAT_RADIUS: f64 = FRAC_1_SQRT_2;

/// Ball-boundary points tested per boundary sample.
const BALL_POINTS: usize = 32;
/// The ball boundary is tested slightly inside its true radius so that
/// tangency with the polygon does not fail on rounding.
const BALL_SHRINK: f64 = 0.01;

/// Sampled fatness test.
///
/// Every edge is sampled at `boundary_samples` points per unit length (at
/// least one per edge). At each sample `p′` the ball of radius √2/2 centred
/// √2/2 along the inward normal must lie in the open interior; the test
/// checks the centre and 32 points on a slightly shrunk ball boundary.
pub fn is_fat(poly: &FatPolygon, boundary_samples: usize) -> bool {
    assert!(boundary_samples >= 3, "need at least 3 samples per unit length");
    let ring_pts: Vec<Point> = (0..BALL_POINTS)
        .map(|k| {
            let a = TAU * k as f64 / BALL_POINTS as f64;
            Point::new(a.cos(), a.sin())
        })
        .collect();
    let probe = FAT_RADIUS - BALL_SHRINK;
    poly.boundary_edges().all(|(a, b)| {
        let d = b.sub(a);
        let len = d.norm();
        let normal = Point::new(-d.y / len, d.x / len);
        let n = ((len * boundary_samples as f64).ceil() as usize).max(1);
        (0..n).all(|i| {
            let t = (i as f64 + 0.5) / n as f64;
            let centre = Point::new(
                a.x + t * d.x + FAT_RADIUS * normal.x,
                a.y + t * d.y + FAT_RADIUS * normal.y,
            );
            poly.contains_open(centre)
                && ring_pts
                    .iter()
                    .all(|u| poly.contains_open(Point::new(centre.x + probe * u.x, centre.y + probe * u.y)))
        })
    })
}
