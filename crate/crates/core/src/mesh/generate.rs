//! Mesh families for the rectangle, L-shape and annulus test domains.
//!
//! - `Quads`: uniform tensor-product quadrilaterals.
//! - `Voronoi`: Lloyd-relaxed Voronoi tessellations clipped to the domain.
//! - `Distorted`: quadrilaterals with randomly perturbed vertices.
//! - `Triangles`: triangles whose edge midpoints are extra, displaced
//!   vertices, giving non-convex hexagons.
//!
//! Random families draw from a ChaCha stream seeded by the caller, so a seed
//! fully determines the mesh.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::voronoi::{lloyd, voronoi_cells, Region};
use super::{Point2, PolyMesh};
use crate::error::{Error, Result};

pub const DEFAULT_LLOYD_ITERS: usize = 10;
/// Midpoint displacement as a fraction of the edge length.
pub const DEFAULT_MIDPOINT_DEFORM: f64 = 0.15;
/// Vertex perturbation as a fraction of the cell size.
pub const DEFAULT_DISTORTION: f64 = 0.2;
const MERGE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeshFamily {
    Quads,
    Voronoi,
    Distorted,
    Triangles,
}

impl MeshFamily {
    pub const ALL: [MeshFamily; 4] = [
        MeshFamily::Quads,
        MeshFamily::Voronoi,
        MeshFamily::Distorted,
        MeshFamily::Triangles,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MeshFamily::Quads => "quads",
            MeshFamily::Voronoi => "voronoi",
            MeshFamily::Distorted => "distorted",
            MeshFamily::Triangles => "triangles",
        }
    }
}

impl fmt::Display for MeshFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MeshFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        MeshFamily::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown mesh family '{s}'")))
    }
}

/// Axis-aligned rectangle `(0, lx) x (0, ly)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub lx: f64,
    pub ly: f64,
}

impl Rect {
    pub fn new(lx: f64, ly: f64) -> Self {
        Self { lx, ly }
    }
}

/// Annulus `r_inner <= |x| <= r_outer` centred at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Annulus {
    pub r_inner: f64,
    pub r_outer: f64,
}

impl Default for Annulus {
    fn default() -> Self {
        Self {
            r_inner: 0.5,
            r_outer: 2.0,
        }
    }
}

impl Annulus {
    pub fn area(&self) -> f64 {
        PI * (self.r_outer * self.r_outer - self.r_inner * self.r_inner)
    }

    /// Width of the log-radius parameter strip.
    fn log_width(&self) -> f64 {
        (self.r_outer / self.r_inner).ln()
    }

    /// Conformal log-polar map `(s, t) -> r_inner e^t (cos s, -sin s)`; the
    /// strip edges land exactly on the two circles and orientation is kept.
    fn map(&self, p: Point2) -> Point2 {
        let w = self.log_width();
        let r = if p.y <= 0.0 {
            self.r_inner
        } else if p.y >= w {
            self.r_outer
        } else {
            self.r_inner * p.y.exp()
        };
        Point2::new(r * p.x.cos(), -r * p.x.sin())
    }

    fn validate(&self) -> Result<()> {
        if !(self.r_inner > 0.0 && self.r_outer > self.r_inner) {
            return Err(Error::Parameter(format!(
                "annulus radii must satisfy 0 < r_inner < r_outer, got {self:?}"
            )));
        }
        Ok(())
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("{name} must be positive, got {v}")))
    }
}

fn check_count(name: &str, n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::Parameter(format!("{name} must be at least 1")))
    } else {
        Ok(())
    }
}

/// Which coordinates of a vertex may move without leaving the domain.
type Freedom = dyn Fn(Point2) -> (bool, bool);

/// Structured `nx x ny` vertex lattice, optionally periodic in x.
struct Lattice {
    nx: usize,
    ny: usize,
    origin: Point2,
    dx: f64,
    dy: f64,
    periodic: bool,
}

impl Lattice {
    fn columns(&self) -> usize {
        if self.periodic {
            self.nx
        } else {
            self.nx + 1
        }
    }

    fn vid(&self, i: usize, j: usize) -> usize {
        let i = if self.periodic { i % self.nx } else { i };
        j * self.columns() + i
    }

    fn points(&self) -> Vec<Point2> {
        let mut pts = Vec::with_capacity(self.columns() * (self.ny + 1));
        for j in 0..=self.ny {
            for i in 0..self.columns() {
                pts.push(Point2::new(
                    self.origin.x + i as f64 * self.dx,
                    self.origin.y + j as f64 * self.dy,
                ));
            }
        }
        pts
    }

    /// CCW quads `(i, j)` for which `keep` holds.
    fn quads(&self, keep: &dyn Fn(usize, usize) -> bool) -> Vec<Vec<usize>> {
        let mut cells = Vec::new();
        for j in 0..self.ny {
            for i in 0..self.nx {
                if keep(i, j) {
                    cells.push(vec![
                        self.vid(i, j),
                        self.vid(i + 1, j),
                        self.vid(i + 1, j + 1),
                        self.vid(i, j + 1),
                    ]);
                }
            }
        }
        cells
    }

    fn perturb(&self, pts: &mut [Point2], amplitude: f64, freedom: &Freedom, rng: &mut ChaCha8Rng) {
        for p in pts.iter_mut() {
            let u: f64 = rng.gen_range(-1.0..=1.0);
            let v: f64 = rng.gen_range(-1.0..=1.0);
            let (fx, fy) = freedom(*p);
            if fx {
                p.x += amplitude * self.dx * u;
            }
            if fy {
                p.y += amplitude * self.dy * v;
            }
        }
    }
}

/// Drops unreferenced vertices and renumbers cells.
fn compact(points: Vec<Point2>, cells: Vec<Vec<usize>>) -> (Vec<Point2>, Vec<Vec<usize>>) {
    let mut map = vec![usize::MAX; points.len()];
    let mut kept = Vec::new();
    let cells = cells
        .into_iter()
        .map(|cell| {
            cell.into_iter()
                .map(|v| {
                    if map[v] == usize::MAX {
                        map[v] = kept.len();
                        kept.push(points[v]);
                    }
                    map[v]
                })
                .collect()
        })
        .collect();
    (kept, cells)
}

/// Splits each quad along its (0, 2) diagonal, inserts a vertex at every edge
/// midpoint and displaces interior midpoints along the edge normal by up to
/// `deform * |e|`. Each triangle becomes a hexagon. With a `period`, edge
/// vectors are wrapped in x so seam edges get the short midpoint.
fn triangles_with_midpoints(
    mut points: Vec<Point2>,
    quads: &[Vec<usize>],
    deform: f64,
    period: Option<f64>,
    rng: &mut ChaCha8Rng,
) -> (Vec<Point2>, Vec<Vec<usize>>) {
    let tris: Vec<[usize; 3]> = quads
        .iter()
        .flat_map(|q| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]])
        .collect();
    let mut uses: HashMap<(usize, usize), usize> = HashMap::new();
    for t in &tris {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            *uses.entry((a.min(b), a.max(b))).or_default() += 1;
        }
    }
    let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
    let mut cells = Vec::with_capacity(tris.len());
    for t in &tris {
        let mut cell = Vec::with_capacity(6);
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            let key = (a.min(b), a.max(b));
            let m = *mid.entry(key).or_insert_with(|| {
                let (pa, pb) = (points[key.0], points[key.1]);
                let mut d = pb - pa;
                if let Some(p) = period {
                    d.x -= p * (d.x / p).round();
                }
                let mut m = pa + d * 0.5;
                let u: f64 = rng.gen_range(-1.0..=1.0);
                if uses[&key] > 1 {
                    m = m + Point2::new(d.y, -d.x) * (deform * u);
                }
                points.push(m);
                points.len() - 1
            });
            cell.push(a);
            cell.push(m);
        }
        cells.push(cell);
    }
    (points, cells)
}

/// Merges coincident polygon vertices into a shared vertex list.
fn mesh_from_polygons(polys: Vec<Vec<Point2>>, scale: f64) -> Result<PolyMesh> {
    let tol = MERGE_TOL * scale;
    let key = |p: Point2| ((p.x / tol).floor() as i64, (p.y / tol).floor() as i64);
    let mut lookup: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    let mut points: Vec<Point2> = Vec::new();
    let mut cells = Vec::with_capacity(polys.len());
    for (c, poly) in polys.into_iter().enumerate() {
        let mut cell: Vec<usize> = Vec::with_capacity(poly.len());
        for p in poly {
            let (kx, ky) = key(p);
            let mut found = None;
            'search: for dx in -1..=1 {
                for dy in -1..=1 {
                    if let Some(ids) = lookup.get(&(kx + dx, ky + dy)) {
                        if let Some(&id) = ids.iter().find(|&&id| points[id].dist(p) <= tol) {
                            found = Some(id);
                            break 'search;
                        }
                    }
                }
            }
            let id = found.unwrap_or_else(|| {
                points.push(p);
                lookup.entry((kx, ky)).or_default().push(points.len() - 1);
                points.len() - 1
            });
            if cell.last() != Some(&id) {
                cell.push(id);
            }
        }
        while cell.len() > 1 && cell.first() == cell.last() {
            cell.pop();
        }
        if cell.len() < 3 {
            return Err(Error::Generation {
                cell: c,
                reason: "cell collapsed after vertex merging".into(),
            });
        }
        cells.push(cell);
    }
    PolyMesh::new(points, cells)
}

/// Fails when a boundary edge has an endpoint off the domain boundary, which
/// would indicate a hanging vertex.
fn check_conforming(mesh: &PolyMesh, on_boundary: &dyn Fn(Point2) -> bool) -> Result<()> {
    for e in mesh.edges() {
        if e.is_boundary() {
            for &v in &e.vertices {
                if !on_boundary(mesh.vertices()[v]) {
                    return Err(Error::Generation {
                        cell: e.cells.0,
                        reason: format!("hanging vertex {v} inside the domain"),
                    });
                }
            }
        }
    }
    Ok(())
}

fn finish(points: Vec<Point2>, cells: Vec<Vec<usize>>) -> Result<PolyMesh> {
    let (points, cells) = compact(points, cells);
    PolyMesh::new(points, cells).map_err(|e| match e {
        Error::Orientation { cell, area } => Error::Generation {
            cell,
            reason: format!("degenerate cell with signed area {area:e}"),
        },
        other => other,
    })
}

fn rect_lattice(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Lattice> {
    check_count("nx", nx)?;
    check_count("ny", ny)?;
    check_positive("lx", lx)?;
    check_positive("ly", ly)?;
    Ok(Lattice {
        nx,
        ny,
        origin: Point2::default(),
        dx: lx / nx as f64,
        dy: ly / ny as f64,
        periodic: false,
    })
}

fn rect_freedom(lx: f64, ly: f64) -> impl Fn(Point2) -> (bool, bool) {
    let eps = 1e-12 * lx.max(ly);
    move |p: Point2| {
        let on_v = p.x.abs() <= eps || (p.x - lx).abs() <= eps;
        let on_h = p.y.abs() <= eps || (p.y - ly).abs() <= eps;
        (!on_v, !on_h)
    }
}

pub fn generate_rect_quads(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<PolyMesh> {
    let lat = rect_lattice(nx, ny, lx, ly)?;
    finish(lat.points(), lat.quads(&|_, _| true))
}

/// Quadrilaterals with each vertex moved by up to `amplitude` times the cell
/// size per direction; boundary vertices slide along their side.
pub fn generate_rect_distorted(
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
    amplitude: f64,
    seed: u64,
) -> Result<PolyMesh> {
    check_amplitude(amplitude)?;
    let lat = rect_lattice(nx, ny, lx, ly)?;
    let mut pts = lat.points();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    lat.perturb(&mut pts, amplitude, &rect_freedom(lx, ly), &mut rng);
    finish(pts, lat.quads(&|_, _| true))
}

fn check_amplitude(amplitude: f64) -> Result<()> {
    if !(0.0..0.5).contains(&amplitude) {
        return Err(Error::Parameter(format!(
            "distortion amplitude must lie in [0, 0.5), got {amplitude}"
        )));
    }
    Ok(())
}

fn check_deform(deform: f64) -> Result<()> {
    if !(0.0..=0.25).contains(&deform) {
        return Err(Error::Parameter(format!(
            "midpoint deformation must lie in [0, 0.25], got {deform}"
        )));
    }
    Ok(())
}

/// Triangulated grid whose edge midpoints are displaced (hexagonal cells).
pub fn generate_rect_triangles(
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
    midpoint_deform: f64,
    seed: u64,
) -> Result<PolyMesh> {
    check_deform(midpoint_deform)?;
    let lat = rect_lattice(nx, ny, lx, ly)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (pts, cells) =
        triangles_with_midpoints(lat.points(), &lat.quads(&|_, _| true), midpoint_deform, None, &mut rng);
    finish(pts, cells)
}

/// Voronoi tessellation of `n_seeds` random seeds clipped to the rectangle,
/// relaxed by `n_lloyd_iters` Lloyd steps.
pub fn generate_voronoi_lloyd(
    domain: Rect,
    n_seeds: usize,
    n_lloyd_iters: usize,
    seed: u64,
) -> Result<PolyMesh> {
    check_positive("lx", domain.lx)?;
    check_positive("ly", domain.ly)?;
    check_count("n_seeds", n_seeds)?;
    let region = Region::Rect {
        min: Point2::default(),
        max: Point2::new(domain.lx, domain.ly),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seeds: Vec<Point2> = (0..n_seeds)
        .map(|_| {
            Point2::new(
                rng.gen_range(0.0..domain.lx),
                rng.gen_range(0.0..domain.ly),
            )
        })
        .collect();
    lloyd(&mut seeds, &region, n_lloyd_iters, &|_| 1.0)?;
    let scale = domain.lx.max(domain.ly);
    let mesh = mesh_from_polygons(voronoi_cells(&seeds, &region)?, scale)?;
    let eps = 1e-9 * scale;
    check_conforming(&mesh, &|p| {
        p.x.abs() <= eps
            || p.y.abs() <= eps
            || (p.x - domain.lx).abs() <= eps
            || (p.y - domain.ly).abs() <= eps
    })?;
    Ok(mesh)
}

/// Mesh of the L-shaped domain `(-1, 1)^2 \ [-1, 0]^2`.
///
/// Structured families use an `n x n` lattice on the enclosing square and keep
/// the cells outside the removed quadrant (so `n` must be even). The Voronoi
/// family uses `3 n^2 / 4` seeds so that cell sizes match.
pub fn generate_lshape(family: MeshFamily, n: usize, seed: u64) -> Result<PolyMesh> {
    if n < 2 {
        return Err(Error::Parameter(format!("L-shape refinement n must be >= 2, got {n}")));
    }
    let eps = 1e-12;
    let on_boundary = move |p: Point2| {
        (p.x.abs() - 1.0).abs() <= 1e-9
            || (p.y.abs() - 1.0).abs() <= 1e-9
            || (p.x.abs() <= 1e-9 && p.y <= 1e-9)
            || (p.y.abs() <= 1e-9 && p.x <= 1e-9)
    };
    if family == MeshFamily::Voronoi {
        let region = Region::Notched {
            min: Point2::new(-1.0, -1.0),
            max: Point2::new(1.0, 1.0),
            corner: Point2::new(0.0, 0.0),
        };
        let count = (3 * n * n).div_ceil(4);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut seeds = Vec::with_capacity(count);
        while seeds.len() < count {
            let p = Point2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            if region.contains(p) {
                seeds.push(p);
            }
        }
        lloyd(&mut seeds, &region, DEFAULT_LLOYD_ITERS, &|_| 1.0)?;
        let mesh = mesh_from_polygons(voronoi_cells(&seeds, &region)?, 2.0)?;
        check_conforming(&mesh, &on_boundary)?;
        return Ok(mesh);
    }
    if n % 2 != 0 {
        return Err(Error::Parameter(format!(
            "structured L-shape meshes need an even n, got {n}"
        )));
    }
    let lat = Lattice {
        nx: n,
        ny: n,
        origin: Point2::new(-1.0, -1.0),
        dx: 2.0 / n as f64,
        dy: 2.0 / n as f64,
        periodic: false,
    };
    let half = n / 2;
    let quads = lat.quads(&|i, j| i >= half || j >= half);
    let mut pts = lat.points();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (pts, cells) = match family {
        MeshFamily::Quads => (pts, quads),
        MeshFamily::Distorted => {
            let freedom = move |p: Point2| {
                let on_v = (p.x.abs() - 1.0).abs() <= eps || (p.x.abs() <= eps && p.y <= eps);
                let on_h = (p.y.abs() - 1.0).abs() <= eps || (p.y.abs() <= eps && p.x <= eps);
                (!on_v, !on_h)
            };
            lat.perturb(&mut pts, DEFAULT_DISTORTION, &freedom, &mut rng);
            (pts, quads)
        }
        MeshFamily::Triangles => {
            triangles_with_midpoints(pts, &quads, DEFAULT_MIDPOINT_DEFORM, None, &mut rng)
        }
        MeshFamily::Voronoi => unreachable!(),
    };
    finish(pts, cells)
}

/// Mesh of an annulus whose boundary is approximated by straight edges with
/// every boundary vertex on one of the two circles.
///
/// `n_boundary` is the target number of cells touching the boundary (inner
/// plus outer). Structured families are built on a log-polar lattice with
/// `n_boundary / 2` sectors (cells grow linearly with the radius); the Voronoi
/// family relaxes seeds in log-polar coordinates under a density that makes
/// the physical cell size uniform.
pub fn generate_ring(
    family: MeshFamily,
    annulus: Annulus,
    n_boundary: usize,
    seed: u64,
) -> Result<PolyMesh> {
    annulus.validate()?;
    if n_boundary < 6 {
        return Err(Error::Parameter(format!(
            "ring needs at least 6 boundary cells, got {n_boundary}"
        )));
    }
    let width = annulus.log_width();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tol = 1e-9 * annulus.r_outer;
    let on_boundary = move |p: Point2| {
        let r = p.norm();
        (r - annulus.r_inner).abs() <= tol || (r - annulus.r_outer).abs() <= tol
    };
    if family == MeshFamily::Voronoi {
        // Hexagon-like cells of area A touch a curve of length L about
        // L / sqrt(A) times.
        let perimeter = 2.0 * PI * (annulus.r_inner + annulus.r_outer);
        let h = perimeter / n_boundary as f64;
        let count = ((annulus.area() / (h * h)).round() as usize).max(n_boundary);
        let region = Region::PeriodicStrip {
            period: 2.0 * PI,
            y0: 0.0,
            y1: width,
        };
        let grow = (2.0 * width).exp() - 1.0;
        let mut seeds: Vec<Point2> = (0..count)
            .map(|_| {
                let s = rng.gen_range(0.0..2.0 * PI);
                let u: f64 = rng.gen_range(0.0..1.0);
                Point2::new(s, 0.5 * (1.0 + u * grow).ln())
            })
            .collect();
        let density = |p: Point2| (4.0 * p.y).exp();
        lloyd(&mut seeds, &region, DEFAULT_LLOYD_ITERS, &density)?;
        let polys = voronoi_cells(&seeds, &region)?
            .into_iter()
            .map(|cell| cell.into_iter().map(|p| annulus.map(p)).collect())
            .collect();
        let mesh = mesh_from_polygons(polys, annulus.r_outer)?;
        check_conforming(&mesh, &on_boundary)?;
        return Ok(mesh);
    }
    let sectors = (n_boundary / 2).max(3);
    let step = 2.0 * PI / sectors as f64;
    let layers = ((width / step).round() as usize).max(1);
    let lat = Lattice {
        nx: sectors,
        ny: layers,
        origin: Point2::default(),
        dx: step,
        dy: width / layers as f64,
        periodic: true,
    };
    let mut pts = lat.points();
    let quads = lat.quads(&|_, _| true);
    let (pts, cells) = match family {
        MeshFamily::Quads => (pts, quads),
        MeshFamily::Distorted => {
            let e = 1e-12;
            let freedom = move |p: Point2| (true, p.y > e && p.y < width - e);
            lat.perturb(&mut pts, DEFAULT_DISTORTION, &freedom, &mut rng);
            (pts, quads)
        }
        MeshFamily::Triangles => {
            triangles_with_midpoints(pts, &quads, DEFAULT_MIDPOINT_DEFORM, Some(2.0 * PI), &mut rng)
        }
        MeshFamily::Voronoi => unreachable!(),
    };
    let mapped = pts.into_iter().map(|p| annulus.map(p)).collect();
    finish(mapped, cells)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::validate;

    #[test]
    fn quad_grid_counts() {
        let m = generate_rect_quads(8, 8, 1.0, 1.1).unwrap();
        assert_eq!(m.n_cells(), 64);
        assert_eq!(m.n_edges(), 144);
        for n in 1..6 {
            let m = generate_rect_quads(n, n, 1.0, 1.0).unwrap();
            assert_eq!(m.n_edges(), 2 * n * (n + 1));
        }
    }

    #[test]
    fn rectangle_families_tile_the_domain() {
        let meshes = [
            generate_rect_quads(8, 8, 1.0, 1.1).unwrap(),
            generate_rect_distorted(8, 8, 1.0, 1.1, 0.2, 7).unwrap(),
            generate_rect_triangles(8, 8, 1.0, 1.1, 0.2, 3).unwrap(),
            generate_voronoi_lloyd(Rect::new(1.0, 1.1), 64, 10, 1).unwrap(),
        ];
        for m in &meshes {
            assert!((m.total_area() - 1.1).abs() <= 1e-12 * 1.1, "{}", m.total_area());
            assert!(m.is_connected());
        }
    }

    #[test]
    fn distorted_quads_validate() {
        let m = generate_rect_distorted(8, 8, 1.0, 1.1, 0.2, 7).unwrap();
        let r = validate(&m, 0.05, 0.05);
        assert!(r.passed(), "{:?} {:?}", r.star_failures, r.vertex_failures);
    }

    #[test]
    fn voronoi_is_reproducible() {
        let a = generate_voronoi_lloyd(Rect::new(1.0, 1.1), 64, 10, 1).unwrap();
        let b = generate_voronoi_lloyd(Rect::new(1.0, 1.1), 64, 10, 1).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n_cells(), 64);
        let c = generate_voronoi_lloyd(Rect::new(1.0, 1.1), 64, 10, 2).unwrap();
        assert_ne!(a.vertices(), c.vertices());
    }

    #[test]
    fn triangles_become_hexagons() {
        let m = generate_rect_triangles(4, 4, 1.0, 1.0, 0.2, 5).unwrap();
        assert_eq!(m.n_cells(), 32);
        assert!(m.cells().iter().all(|c| c.len() == 6));
        // Each triangulation edge splits in two.
        let tri_edges = 2 * 4 * 5 + 16;
        assert_eq!(m.n_edges(), 2 * tri_edges);
    }

    #[test]
    fn lshape_quads_keep_three_quarters() {
        let m = generate_lshape(MeshFamily::Quads, 8, 0).unwrap();
        assert_eq!(m.n_cells(), 48);
        assert!((m.total_area() - 3.0).abs() < 1e-12);
        assert!(generate_lshape(MeshFamily::Quads, 9, 0).is_err());
    }

    #[test]
    fn lshape_families_tile_the_domain() {
        for family in MeshFamily::ALL {
            let m = generate_lshape(family, 8, 11).unwrap();
            assert!((m.total_area() - 3.0).abs() < 1e-12, "{family}: {}", m.total_area());
        }
        let v = generate_lshape(MeshFamily::Voronoi, 9, 4).unwrap();
        assert_eq!(v.n_cells(), 61);
    }

    #[test]
    fn ring_boundary_vertices_lie_on_the_circles() {
        for annulus in [
            Annulus::default(),
            Annulus {
                r_inner: 0.5f64.sqrt(),
                r_outer: 2f64.sqrt(),
            },
        ] {
            for family in MeshFamily::ALL {
                let m = generate_ring(family, annulus, 60, 3).unwrap_or_else(|e| panic!("{family} {annulus:?}: {e}"));
                let (a2, b2) = (annulus.r_inner.powi(2), annulus.r_outer.powi(2));
                for e in m.edges().iter().filter(|e| e.is_boundary()) {
                    for &v in &e.vertices {
                        let p = m.vertices()[v];
                        let r2 = p.dot(p);
                        assert!(
                            (r2 - a2).abs() < 1e-12 || (r2 - b2).abs() < 1e-12,
                            "{family}: r^2 = {r2}"
                        );
                    }
                }
                for p in m.vertices() {
                    let r2 = p.dot(*p);
                    assert!(r2 >= a2 - 1e-12 && r2 <= b2 + 1e-12);
                }
            }
        }
    }

    #[test]
    fn ring_area_grows_under_refinement() {
        let annulus = Annulus::default();
        let mut last = 0.0;
        for n in [24, 48, 96, 192] {
            let a = generate_ring(MeshFamily::Quads, annulus, n, 0).unwrap().total_area();
            assert!(a > last && a < annulus.area());
            last = a;
        }
        assert!((last - annulus.area()).abs() / annulus.area() < 2e-3);
    }

    #[test]
    fn ring_voronoi_boundary_count_is_close_to_target() {
        let m = generate_ring(MeshFamily::Voronoi, Annulus::default(), 97, 1).unwrap();
        let got = m.boundary_cell_count() as f64;
        assert!((got - 97.0).abs() / 97.0 < 0.25, "{got}");
    }

    #[test]
    fn family_names_round_trip() {
        for f in MeshFamily::ALL {
            assert_eq!(f.name().parse::<MeshFamily>().unwrap(), f);
        }
        assert!("hexes".parse::<MeshFamily>().is_err());
    }
}
