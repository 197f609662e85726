//! Bounded Voronoi cells by half-plane clipping, plus Lloyd relaxation.

use super::{signed_area, Point2};
use crate::error::{Error, Result};

/// Region the Voronoi cells are clipped to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Region {
    Rect { min: Point2, max: Point2 },
    /// Rectangle with the quadrant `x < corner.x && y < corner.y` removed.
    Notched { min: Point2, max: Point2, corner: Point2 },
    /// Strip `y in [y0, y1]`, periodic in x with the given period.
    PeriodicStrip { period: f64, y0: f64, y1: f64 },
}

impl Region {
    fn bbox(&self) -> (Point2, Point2) {
        match *self {
            Region::Rect { min, max } | Region::Notched { min, max, .. } => (min, max),
            Region::PeriodicStrip { period, y0, y1 } => {
                (Point2::new(0.0, y0), Point2::new(period, y1))
            }
        }
    }

    fn period(&self) -> Option<f64> {
        match *self {
            Region::PeriodicStrip { period, .. } => Some(period),
            _ => None,
        }
    }

    pub(crate) fn contains(&self, p: Point2) -> bool {
        let (min, max) = self.bbox();
        let in_y = p.y > min.y && p.y < max.y;
        match *self {
            Region::Rect { .. } => in_y && p.x > min.x && p.x < max.x,
            Region::Notched { corner, .. } => {
                in_y && p.x > min.x && p.x < max.x && !(p.x <= corner.x && p.y <= corner.y)
            }
            Region::PeriodicStrip { .. } => in_y,
        }
    }

    #[cfg(test)]
    fn area(&self) -> f64 {
        let (min, max) = self.bbox();
        let full = (max.x - min.x) * (max.y - min.y);
        match *self {
            Region::Notched { corner, .. } => full - (corner.x - min.x) * (corner.y - min.y),
            _ => full,
        }
    }

    fn start_polygon(&self, seed: Point2) -> Vec<Point2> {
        let (min, max) = match *self {
            Region::PeriodicStrip { period, y0, y1 } => (
                Point2::new(seed.x - 0.5 * period, y0),
                Point2::new(seed.x + 0.5 * period, y1),
            ),
            _ => self.bbox(),
        };
        vec![
            min,
            Point2::new(max.x, min.y),
            max,
            Point2::new(min.x, max.y),
        ]
    }
}

/// Keeps the part of a convex polygon where `(p - origin) . normal <= 0`.
pub(crate) fn clip_half_plane(poly: &[Point2], origin: Point2, normal: Point2) -> Vec<Point2> {
    let n = poly.len();
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let da = (a - origin).dot(normal);
        let db = (b - origin).dot(normal);
        if da <= 0.0 {
            out.push(a);
        }
        if (da < 0.0 && db > 0.0) || (da > 0.0 && db < 0.0) {
            let t = da / (da - db);
            out.push(a + (b - a) * t);
        }
    }
    out
}

fn dedup_ring(poly: &mut Vec<Point2>, eps: f64) {
    let mut out: Vec<Point2> = Vec::with_capacity(poly.len());
    for &p in poly.iter() {
        if out.last().map_or(true, |q: &Point2| q.dist(p) > eps) {
            out.push(p);
        }
    }
    while out.len() > 1 && out[0].dist(*out.last().unwrap()) <= eps {
        out.pop();
    }
    *poly = out;
}

fn inside_convex(poly: &[Point2], p: Point2) -> bool {
    let n = poly.len();
    (0..n).all(|i| (poly[(i + 1) % n] - poly[i]).cross(p - poly[i]) > 0.0)
}

/// Removes the quadrant `x < corner.x && y < corner.y` from a convex polygon.
///
/// Returns the remaining pieces: none, one, or two when the polygon reaches
/// across the notch without covering the corner.
pub(crate) fn subtract_quadrant(poly: &[Point2], corner: Point2) -> Vec<Vec<Point2>> {
    let inside = |p: Point2| p.x < corner.x && p.y < corner.y;
    if poly.iter().all(|&p| inside(p)) {
        return Vec::new();
    }
    let corner_inside = inside_convex(poly, corner);
    let n = poly.len();
    let mut out = Vec::with_capacity(n + 3);
    let mut entries = 0;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        if !inside(a) {
            out.push(a);
        }
        // Liang-Barsky against x < cx, y < cy.
        let d = b - a;
        let (mut t0, mut t1) = (0.0f64, 1.0f64);
        let mut empty = false;
        for (p, q) in [(d.x, corner.x - a.x), (d.y, corner.y - a.y)] {
            if p == 0.0 {
                if q <= 0.0 {
                    empty = true;
                }
            } else {
                let r = q / p;
                if p > 0.0 {
                    t1 = t1.min(r);
                } else {
                    t0 = t0.max(r);
                }
            }
        }
        if empty || t0 >= t1 {
            continue;
        }
        // Endpoints lying on the quadrant boundary are pushed as vertices already.
        if !inside(a) {
            entries += 1;
            if t0 > 0.0 {
                out.push(a + d * t0);
            }
        }
        if !inside(b) {
            if corner_inside {
                out.push(corner);
            }
            if t1 < 1.0 {
                out.push(a + d * t1);
            }
        }
    }
    if entries > 1 {
        // The pieces above and right of the notch meet at most in the corner.
        return [Point2::new(0.0, -1.0), Point2::new(-1.0, 0.0)]
            .into_iter()
            .map(|normal| clip_half_plane(poly, corner, normal))
            .filter(|p| p.len() >= 3 && signed_area(p) > 0.0)
            .collect();
    }
    if out.len() < 3 || signed_area(&out) <= 0.0 {
        return Vec::new();
    }
    vec![out]
}

struct BucketGrid {
    origin: Point2,
    size: (f64, f64),
    dims: (usize, usize),
    period: Option<f64>,
    buckets: Vec<Vec<usize>>,
}

impl BucketGrid {
    fn new(seeds: &[Point2], region: &Region) -> Self {
        let (min, max) = region.bbox();
        let (w, h) = (max.x - min.x, max.y - min.y);
        let target = (w * h / seeds.len().max(1) as f64).sqrt();
        let nx = ((w / target).floor() as usize).max(1);
        let ny = ((h / target).floor() as usize).max(1);
        let size = (w / nx as f64, h / ny as f64);
        let mut grid = Self {
            origin: min,
            size,
            dims: (nx, ny),
            period: region.period(),
            buckets: vec![Vec::new(); nx * ny],
        };
        for (i, &s) in seeds.iter().enumerate() {
            let (bx, by) = grid.locate(s);
            grid.buckets[by * nx + bx].push(i);
        }
        grid
    }

    fn locate(&self, p: Point2) -> (usize, usize) {
        let fx = ((p.x - self.origin.x) / self.size.0).floor() as i64;
        let fy = ((p.y - self.origin.y) / self.size.1).floor() as i64;
        (
            fx.clamp(0, self.dims.0 as i64 - 1) as usize,
            fy.clamp(0, self.dims.1 as i64 - 1) as usize,
        )
    }

    /// Seeds (with their periodic image shift) in the buckets at Chebyshev
    /// distance exactly `k` from bucket `(bx, by)`.
    fn ring(&self, bx: usize, by: usize, k: i64, out: &mut Vec<(usize, f64)>) {
        out.clear();
        let (nx, ny) = (self.dims.0 as i64, self.dims.1 as i64);
        for dy in -k..=k {
            let y = by as i64 + dy;
            if y < 0 || y >= ny {
                continue;
            }
            let step = if dy.abs() == k { 1 } else { (2 * k).max(1) };
            let mut dx = -k;
            while dx <= k {
                let x = bx as i64 + dx;
                let (xi, shift) = match self.period {
                    Some(p) => (x.rem_euclid(nx), x.div_euclid(nx) as f64 * p),
                    None if x < 0 || x >= nx => {
                        dx += step;
                        continue;
                    }
                    None => (x, 0.0),
                };
                for &j in &self.buckets[(y * nx + xi) as usize] {
                    out.push((j, shift));
                }
                dx += step;
            }
        }
    }
}

/// Voronoi cells clipped to the region, one polygon per connected piece. In a
/// periodic strip the cells may extend past `[0, period)`; the caller maps
/// them periodically.
pub(crate) fn voronoi_cells(seeds: &[Point2], region: &Region) -> Result<Vec<Vec<Point2>>> {
    Ok(voronoi_pieces(seeds, region)?.into_iter().flatten().collect())
}

/// The clipped Voronoi cell of every seed as its connected pieces.
fn voronoi_pieces(seeds: &[Point2], region: &Region) -> Result<Vec<Vec<Vec<Point2>>>> {
    let grid = BucketGrid::new(seeds, region);
    let (min, max) = region.bbox();
    let scale = (max.x - min.x).max(max.y - min.y);
    let eps = 1e-13 * scale;
    let smin = grid.size.0.min(grid.size.1);
    let kmax = (grid.dims.0 + grid.dims.1) as i64 + 1;
    let mut ring = Vec::new();
    let mut cells = Vec::with_capacity(seeds.len());
    for (i, &s) in seeds.iter().enumerate() {
        let mut poly = region.start_polygon(s);
        let (bx, by) = grid.locate(s);
        for k in 0..=kmax {
            grid.ring(bx, by, k, &mut ring);
            for &(j, shift) in &ring {
                if j == i && shift == 0.0 {
                    continue;
                }
                let q = Point2::new(seeds[j].x + shift, seeds[j].y);
                let normal = q - s;
                if normal.norm() <= eps {
                    return Err(Error::Generation {
                        cell: i,
                        reason: format!("seed coincides with seed {j}"),
                    });
                }
                poly = clip_half_plane(&poly, (s + q) * 0.5, normal);
            }
            let reach = poly.iter().map(|p| p.dist(s)).fold(0.0, f64::max);
            if k as f64 * smin >= 2.0 * reach {
                break;
            }
        }
        dedup_ring(&mut poly, eps);
        let mut pieces = match region {
            Region::Notched { corner, .. } => subtract_quadrant(&poly, *corner),
            _ => vec![poly],
        };
        for p in &mut pieces {
            dedup_ring(p, eps);
        }
        if pieces.is_empty() || pieces.iter().any(|p| p.len() < 3 || signed_area(p) <= 0.0) {
            return Err(Error::Generation {
                cell: i,
                reason: "empty or degenerate Voronoi cell".into(),
            });
        }
        cells.push(pieces);
    }
    Ok(cells)
}

/// Centroid of a polygon under a positive density, by fan quadrature.
pub(crate) fn weighted_centroid(poly: &[Point2], density: &dyn Fn(Point2) -> f64) -> Point2 {
    let o = poly[0];
    let mut mass = 0.0;
    let mut moment = Point2::default();
    for i in 1..poly.len() - 1 {
        let (a, b, c) = (o, poly[i], poly[i + 1]);
        let area = 0.5 * (b - a).cross(c - a);
        for (l1, l2, l3) in [
            (2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0),
            (1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0),
            (1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0),
        ] {
            let p = a * l1 + b * l2 + c * l3;
            let w = density(p) * area / 3.0;
            mass += w;
            moment = moment + p * w;
        }
    }
    moment * (1.0 / mass)
}

/// Lloyd relaxation: each seed moves to its cell's (density-weighted)
/// centroid. Seeds whose centroid would leave the region stay put.
pub(crate) fn lloyd(
    seeds: &mut [Point2],
    region: &Region,
    iterations: usize,
    density: &dyn Fn(Point2) -> f64,
) -> Result<()> {
    for _ in 0..iterations {
        let cells = voronoi_pieces(seeds, region)?;
        for (s, pieces) in seeds.iter_mut().zip(&cells) {
            // A cell split by the notch follows its larger piece.
            let cell = pieces
                .iter()
                .max_by(|a, b| signed_area(a).total_cmp(&signed_area(b)))
                .expect("cells have at least one piece");
            let mut c = weighted_centroid(cell, density);
            if let Some(p) = region.period() {
                c.x = c.x.rem_euclid(p);
            }
            if region.contains(c) {
                *s = c;
            }
        }
    }
    Ok(())
}
