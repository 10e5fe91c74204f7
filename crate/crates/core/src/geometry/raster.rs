use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{FatPolygon, GeometryError, Point, BOUNDARY_EPS};
use crate::grid_world::Cell;

/// Cells of one offset grid. Cell `(i, j)` covers
/// `[ox + i, ox + i + 1] × [oy + j, oy + j + 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridApproximation {
    pub origin_offset: (f64, f64),
    pub inner_cells: BTreeSet<Cell>,
    pub outer_cells: BTreeSet<Cell>,
}

impl GridApproximation {
    pub fn c_in(&self) -> usize {
        self.inner_cells.len()
    }

    pub fn c_out(&self) -> usize {
        self.outer_cells.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApproximationReport {
    pub lemma3_ok: bool,
    pub lemma4_ok: bool,
    #[serde(rename = "C_out")]
    pub c_out: usize,
    #[serde(rename = "C_in")]
    pub c_in: usize,
    #[serde(rename = "C_best")]
    pub c_best: usize,
}

/// Membership of lattice points `(x0 + i, y)` for `i in 0..count` in the
/// closed polygon.
fn row_closed(poly: &FatPolygon, y: f64, x0: f64, count: usize) -> Vec<bool> {
    let degenerate = poly.rings().flatten().any(|v| (v.y - y).abs() <= BOUNDARY_EPS);
    if degenerate {
        return (0..count)
            .map(|i| poly.contains_closed(Point::new(x0 + i as f64, y)))
            .collect();
    }
    let mut xs: Vec<f64> = poly
        .boundary_edges()
        .filter(|(a, b)| (a.y > y) != (b.y > y))
        .map(|(a, b)| a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y))
        .collect();
    xs.sort_by(f64::total_cmp);
    let mut below = 0;
    (0..count)
        .map(|i| {
            let x = x0 + i as f64;
            while below < xs.len() && xs[below] < x {
                below += 1;
            }
            let near = |k: usize| xs.get(k).is_some_and(|c| (c - x).abs() <= BOUNDARY_EPS);
            if near(below) || (below > 0 && near(below - 1)) {
                poly.contains_closed(Point::new(x, y))
            } else {
                // Crossings to the right of x decide parity.
                (xs.len() - below) % 2 == 1
            }
        })
        .collect()
}

/// Segment `a`–`b` passes through the open rectangle.
fn crosses_open_rect(a: Point, b: Point, x0: f64, y0: f64, x1: f64, y1: f64) -> bool {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let (mut t0, mut t1) = (0.0_f64, 1.0_f64);
    for (p, q) in [(-dx, a.x - x0), (dx, x1 - a.x), (-dy, a.y - y0), (dy, y1 - a.y)] {
        if p == 0.0 {
            if q < 0.0 {
                return false;
            }
        } else {
            let r = q / p;
            if p < 0.0 {
                t0 = t0.max(r);
            } else {
                t1 = t1.min(r);
            }
        }
    }
    if t0 > t1 {
        return false;
    }
    let t = (t0 + t1) / 2.0;
    let (mx, my) = (a.x + t * dx, a.y + t * dy);
    mx > x0 + BOUNDARY_EPS && mx < x1 - BOUNDARY_EPS && my > y0 + BOUNDARY_EPS && my < y1 - BOUNDARY_EPS
}

/// Inner cells have all four corners and the centre in the closed polygon
/// and no boundary edge through their interior. Outer cells meet the open
/// polygon: the boundary passes through them or their centre is inside.
pub fn rasterize(poly: &FatPolygon, origin_offset: (f64, f64)) -> GridApproximation {
    let (ox, oy) = origin_offset;
    let (lo, hi) = poly.bounds();
    let (i_lo, i_hi) = ((lo.x - ox).floor() as i32, (hi.x - ox).floor() as i32);
    let (j_lo, j_hi) = ((lo.y - oy).floor() as i32, (hi.y - oy).floor() as i32);
    let w = (i_hi - i_lo + 1) as usize;
    let h = (j_hi - j_lo + 1) as usize;

    let mut crossed = vec![false; w * h];
    for (a, b) in poly.boundary_edges() {
        let ci = |x: f64| ((x - ox).floor() as i32).clamp(i_lo, i_hi);
        let cj = |y: f64| ((y - oy).floor() as i32).clamp(j_lo, j_hi);
        for j in cj(a.y.min(b.y))..=cj(a.y.max(b.y)) {
            for i in ci(a.x.min(b.x))..=ci(a.x.max(b.x)) {
                let k = (j - j_lo) as usize * w + (i - i_lo) as usize;
                if crossed[k] {
                    continue;
                }
                let (x0, y0) = (ox + i as f64, oy + j as f64);
                crossed[k] = crosses_open_rect(a, b, x0, y0, x0 + 1.0, y0 + 1.0);
            }
        }
    }
    let corners: Vec<Vec<bool>> = (0..=h)
        .map(|r| row_closed(poly, oy + (j_lo + r as i32) as f64, ox + i_lo as f64, w + 1))
        .collect();
    let centres: Vec<Vec<bool>> = (0..h)
        .map(|r| row_closed(poly, oy + (j_lo + r as i32) as f64 + 0.5, ox + i_lo as f64 + 0.5, w))
        .collect();

    let mut inner_cells = BTreeSet::new();
    let mut outer_cells = BTreeSet::new();
    for r in 0..h {
        for c in 0..w {
            let cell = Cell::new(i_lo + c as i32, j_lo + r as i32);
            let cut = crossed[r * w + c];
            if cut || centres[r][c] {
                outer_cells.insert(cell);
            }
            let corners_in = corners[r][c] && corners[r][c + 1] && corners[r + 1][c] && corners[r + 1][c + 1];
            if !cut && centres[r][c] && corners_in {
                inner_cells.insert(cell);
            }
        }
    }
    GridApproximation {
        origin_offset,
        inner_cells,
        outer_cells,
    }
}

/// Offset grid with the fewest inner cells, among grids with at least one.
pub fn best_inner_grid(poly: &FatPolygon, resolution: f64) -> Result<(GridApproximation, usize), GeometryError> {
    if !(resolution > 0.0 && resolution <= 0.1) {
        return Err(GeometryError::BadResolution(resolution));
    }
    let steps = (1.0 / resolution - 1e-9).ceil() as usize;
    let mut best: Option<GridApproximation> = None;
    for a in 0..steps {
        for b in 0..steps {
            let g = rasterize(poly, (a as f64 * resolution, b as f64 * resolution));
            if g.c_in() > 0 && best.as_ref().is_none_or(|x| g.c_in() < x.c_in()) {
                best = Some(g);
            }
        }
    }
    let best = best.ok_or(GeometryError::NoInnerCells)?;
    let count = best.c_in();
    Ok((best, count))
}

pub const DEFAULT_RESOLUTION: f64 = 0.05;

/// Rasterize on the unshifted grid and compare against the best offset grid.
pub fn verify_approximation_bounds(poly: &FatPolygon) -> Result<ApproximationReport, GeometryError> {
    verify_at_resolution(poly, DEFAULT_RESOLUTION)
}

pub fn verify_at_resolution(poly: &FatPolygon, resolution: f64) -> Result<ApproximationReport, GeometryError> {
    let g = rasterize(poly, (0.0, 0.0));
    let (_, c_best) = best_inner_grid(poly, resolution)?;
    let (c_in, c_out) = (g.c_in(), g.c_out());
    Ok(ApproximationReport {
        lemma3_ok: c_out <= 3 * c_in + 6,
        lemma4_ok: c_in <= 6 * c_best,
        c_out,
        c_in,
        c_best,
    })
}
