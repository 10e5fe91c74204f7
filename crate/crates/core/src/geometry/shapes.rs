//! Reference and random polygons.

use std::f64::consts::{PI, SQRT_2, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{is_fat, FatPolygon, GeometryError, Point};

/// Longest chord used when tracing circular arcs.
pub const MAX_CHORD: f64 = 0.15;

pub fn rectangle(x0: f64, y0: f64, x1: f64, y1: f64) -> FatPolygon {
    FatPolygon::simple(vec![
        Point::new(x0, y0),
        Point::new(x1, y0),
        Point::new(x1, y1),
        Point::new(x0, y1),
    ])
    .expect("non-degenerate rectangle")
}

/// Regular `n`-gon inscribed in the circle, with a vertex at angle 0.
pub fn regular_polygon(centre: Point, radius: f64, n: usize) -> FatPolygon {
    let pts = (0..n)
        .map(|k| {
            let a = TAU * k as f64 / n as f64;
            Point::new(centre.x + radius * a.cos(), centre.y + radius * a.sin())
        })
        .collect();
    FatPolygon::simple(pts).expect("regular polygon is simple")
}

/// Fat stadium around the row of cells `[0, k] × [0, 1]`: it covers those
/// `k` cells exactly and reaches into every cell of the surrounding
/// `(k + 2) × 3` block, so `C_out = 3·C_in + 6`.
pub fn stadium(k: u32) -> FatPolygon {
    assert!(k >= 1);
    let r = 0.75;
    let (left, right) = (Point::new(0.5, 0.5), Point::new(k as f64 - 0.5, 0.5));
    let mut pts = Vec::new();
    let mut arc = |c: Point, from: f64| {
        let n = (r * PI / MAX_CHORD).ceil() as usize;
        for i in 0..=n {
            let a = from + PI * i as f64 / n as f64;
            pts.push(Point::new(c.x + r * a.cos(), c.y + r * a.sin()));
        }
    };
    arc(right, -PI / 2.0);
    arc(left, PI / 2.0);
    if k == 1 {
        // Both caps share a centre; drop the duplicated joints.
        pts.dedup_by(|a, b| (a.x - b.x).abs() < 1e-12 && (a.y - b.y).abs() < 1e-12);
        if let (Some(f), Some(l)) = (pts.first().copied(), pts.last().copied()) {
            if (f.x - l.x).abs() < 1e-12 && (f.y - l.y).abs() < 1e-12 {
                pts.pop();
            }
        }
    }
    FatPolygon::simple(pts).expect("stadium is simple")
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Disk {
    pub centre: Point,
    pub radius: f64,
}

impl Disk {
    fn at(&self, angle: f64) -> Point {
        Point::new(
            self.centre.x + self.radius * angle.cos(),
            self.centre.y + self.radius * angle.sin(),
        )
    }

    fn strictly_contains(&self, p: Point) -> bool {
        (p.x - self.centre.x).hypot(p.y - self.centre.y) < self.radius - 1e-12
    }
}

struct Arc {
    start: Point,
    end: Point,
    points: Vec<Point>,
}

/// Boundary of a union of disks, traced arc by arc.
pub fn disk_union(disks: &[Disk]) -> Result<FatPolygon, GeometryError> {
    let mut arcs = Vec::new();
    for (i, d) in disks.iter().enumerate() {
        let mut cuts = Vec::new();
        let mut swallowed = false;
        for (j, e) in disks.iter().enumerate() {
            if i == j {
                continue;
            }
            let (dx, dy) = (e.centre.x - d.centre.x, e.centre.y - d.centre.y);
            let dist = dx.hypot(dy);
            if dist + d.radius <= e.radius && (dist > 0.0 || j < i || d.radius < e.radius) {
                swallowed = true;
                break;
            }
            if dist >= d.radius + e.radius || dist <= (d.radius - e.radius).abs() {
                continue;
            }
            let base = dy.atan2(dx);
            let a = (dist * dist + d.radius * d.radius - e.radius * e.radius) / (2.0 * dist * d.radius);
            let spread = a.clamp(-1.0, 1.0).acos();
            cuts.push((base - spread).rem_euclid(TAU));
            cuts.push((base + spread).rem_euclid(TAU));
        }
        if swallowed {
            continue;
        }
        let covered = |p: Point| disks.iter().enumerate().any(|(j, e)| j != i && e.strictly_contains(p));
        if cuts.is_empty() {
            let n = (d.radius * TAU / MAX_CHORD).ceil() as usize;
            let pts: Vec<Point> = (0..n).map(|k| d.at(TAU * k as f64 / n as f64)).collect();
            if !covered(pts[0]) {
                arcs.push(Arc {
                    start: pts[0],
                    end: pts[0],
                    points: pts,
                });
            }
            continue;
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        for k in 0..cuts.len() {
            let from = cuts[k];
            let mut to = cuts[(k + 1) % cuts.len()];
            if to <= from {
                to += TAU;
            }
            if covered(d.at((from + to) / 2.0)) {
                continue;
            }
            let n = (d.radius * (to - from) / MAX_CHORD).ceil().max(1.0) as usize;
            let points = (0..n).map(|s| d.at(from + (to - from) * s as f64 / n as f64)).collect();
            arcs.push(Arc {
                start: d.at(from),
                end: d.at(to),
                points,
            });
        }
    }

    let mut used = vec![false; arcs.len()];
    let mut rings: Vec<Vec<Point>> = Vec::new();
    while let Some(first) = used.iter().position(|u| !u) {
        let mut ring = Vec::new();
        let mut at = first;
        loop {
            used[at] = true;
            ring.extend_from_slice(&arcs[at].points);
            let end = arcs[at].end;
            let gap = |p: Point| (p.x - end.x).hypot(p.y - end.y);
            if gap(arcs[first].start) < 1e-7 {
                break;
            }
            let next = (0..arcs.len())
                .filter(|&k| !used[k])
                .min_by(|&a, &b| gap(arcs[a].start).total_cmp(&gap(arcs[b].start)));
            match next {
                Some(k) if gap(arcs[k].start) < 1e-7 => at = k,
                _ => return Err(GeometryError::Parse("disk arcs do not close".into())),
            }
        }
        rings.push(ring);
    }
    let area = |r: &[Point]| {
        let n = r.len();
        (0..n)
            .map(|i| r[i].x * r[(i + 1) % n].y - r[(i + 1) % n].x * r[i].y)
            .sum::<f64>()
    };
    let (outer, holes): (Vec<_>, Vec<_>) = rings.into_iter().partition(|r| area(r) > 0.0);
    match <[Vec<Point>; 1]>::try_from(outer) {
        Ok([outer]) => FatPolygon::new(outer, holes),
        Err(_) => Err(GeometryError::Parse("disk union is not connected".into())),
    }
}

/// Connected union of one to four disks with radii in `[√2, 2.5]`, shifted
/// by a random sub-cell offset and re-checked for fatness.
pub fn random_fat_shape<R: Rng>(rng: &mut R) -> FatPolygon {
    loop {
        let k = rng.gen_range(1..=4);
        let shift = Point::new(rng.gen::<f64>(), rng.gen::<f64>());
        let mut disks = vec![Disk {
            centre: shift,
            radius: rng.gen_range(SQRT_2..=2.5),
        }];
        for _ in 1..k {
            let anchor = disks[rng.gen_range(0..disks.len())];
            let radius = rng.gen_range(SQRT_2..=2.5);
            let dist = rng.gen_range(0.2..0.95) * (anchor.radius + radius);
            let angle = rng.gen_range(0.0..TAU);
            disks.push(Disk {
                centre: Point::new(
                    anchor.centre.x + dist * angle.cos(),
                    anchor.centre.y + dist * angle.sin(),
                ),
                radius,
            });
        }
        if let Ok(poly) = disk_union(&disks) {
            if is_fat(&poly, 3) {
                return poly;
            }
        }
    }
}

pub fn random_fat_corpus(count: usize, seed: u64) -> Vec<FatPolygon> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_fat_shape(&mut rng)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_disk_union_matches_circle() {
        let d = Disk {
            centre: Point::new(0.0, 0.0),
            radius: 2.0,
        };
        let p = disk_union(&[d]).unwrap();
        assert!((p.area() - PI * 4.0).abs() < 0.02);
        assert!(p.holes().is_empty());
    }

    #[test]
    fn two_disks_overlap() {
        let a = Disk {
            centre: Point::new(0.0, 0.0),
            radius: 2.0,
        };
        let b = Disk {
            centre: Point::new(3.0, 0.0),
            radius: 2.0,
        };
        let p = disk_union(&[a, b]).unwrap();
        // Lens area of two radius-2 circles three apart.
        let (r, d) = (2.0_f64, 3.0_f64);
        let lens = 2.0 * r * r * (d / (2.0 * r)).acos() - d / 2.0 * (4.0 * r * r - d * d).sqrt();
        assert!((p.area() - (2.0 * PI * r * r - lens)).abs() < 0.02);
        assert!(is_fat(&p, 3));
        assert!(disk_union(&[
            a,
            Disk {
                centre: Point::new(9.0, 0.0),
                radius: 2.0
            }
        ])
        .is_err());
    }

    #[test]
    fn nested_disk_ignored() {
        let a = Disk {
            centre: Point::new(0.0, 0.0),
            radius: 2.5,
        };
        let b = Disk {
            centre: Point::new(0.5, 0.0),
            radius: 1.5,
        };
        let p = disk_union(&[a, b]).unwrap();
        assert!((p.area() - PI * 6.25).abs() < 0.02);
    }

    #[test]
    fn ring_of_disks_has_a_hole() {
        let disks: Vec<Disk> = (0..4)
            .map(|k| {
                let a = TAU * k as f64 / 4.0;
                Disk {
                    centre: Point::new(2.6 * a.cos(), 2.6 * a.sin()),
                    radius: 2.0,
                }
            })
            .collect();
        let p = disk_union(&disks).unwrap();
        assert_eq!(p.holes().len(), 1);
        assert!(!p.contains_closed(Point::new(0.0, 0.0)));
    }

    #[test]
    fn corpus_is_fat_and_reproducible() {
        let a = random_fat_corpus(12, 5);
        assert_eq!(a, random_fat_corpus(12, 5));
        assert!(a.iter().all(|p| is_fat(p, 3)));
    }

    #[test]
    fn stadium_is_fat() {
        for k in 1..6 {
            assert!(is_fat(&stadium(k), 3), "k = {k}");
        }
    }
}
