//! Polygonal meshes: topology, per-cell geometry, generators and validation.

mod generate;
mod io;
mod quality;
mod voronoi;

use std::collections::HashMap;
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use generate::{
    generate_lshape, generate_rect_distorted, generate_rect_quads, generate_rect_triangles,
    generate_ring, generate_voronoi_lloyd, Annulus, MeshFamily, Rect, DEFAULT_DISTORTION, DEFAULT_LLOYD_ITERS,
    DEFAULT_MIDPOINT_DEFORM,
};
pub use quality::{validate, CellQuality, MeshQualityReport, TOL_DUP};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 2D cross product.
    pub fn cross(self, other: Point2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }
}

/// Signed area of a closed polygon (positive when counter-clockwise).
pub fn signed_area(poly: &[Point2]) -> f64 {
    let n = poly.len();
    let mut twice = 0.0;
    for i in 0..n {
        twice += poly[i].cross(poly[(i + 1) % n]);
    }
    0.5 * twice
}

/// An edge of the mesh skeleton, keyed by its unordered vertex pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    /// Sorted vertex pair.
    pub vertices: [usize; 2],
    /// First cell seen traversing the edge, and the neighbour across it if any.
    pub cells: (usize, Option<usize>),
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.cells.1.is_none()
    }
}

/// Polygonal decomposition with derived edge topology.
///
/// Cells are counter-clockwise vertex cycles. Local edge `i` of a cell runs
/// from its vertex `i` to vertex `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyMesh {
    vertices: Vec<Point2>,
    cells: Vec<Vec<usize>>,
    edges: Vec<Edge>,
    cell_edges: Vec<Vec<usize>>,
}

impl PolyMesh {
    /// Builds the edge list and adjacency, then checks every cell is CCW.
    pub fn new(vertices: Vec<Point2>, cells: Vec<Vec<usize>>) -> Result<Self> {
        let mesh = build_edges(vertices, cells)?;
        for c in 0..mesh.n_cells() {
            let area = signed_area(&mesh.cell_points(c));
            if !(area > 0.0) {
                return Err(Error::Orientation { cell: c, area });
            }
        }
        Ok(mesh)
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    pub fn cell(&self, c: usize) -> &[usize] {
        &self.cells[c]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Global edge ids of the local edges of cell `c`.
    pub fn cell_edges(&self, c: usize) -> &[usize] {
        &self.cell_edges[c]
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn cell_points(&self, c: usize) -> Vec<Point2> {
        self.cells[c].iter().map(|&v| self.vertices[v]).collect()
    }

    pub fn boundary_edge_count(&self) -> usize {
        self.edges.iter().filter(|e| e.is_boundary()).count()
    }

    /// Number of cells owning at least one boundary edge.
    pub fn boundary_cell_count(&self) -> usize {
        (0..self.n_cells())
            .filter(|&c| self.cell_edges[c].iter().any(|&e| self.edges[e].is_boundary()))
            .count()
    }

    pub fn geometry(&self, c: usize) -> Result<ElementGeometry> {
        ElementGeometry::from_polygon(c, &self.cell_points(c))
    }

    pub fn geometries(&self) -> Result<Vec<ElementGeometry>> {
        (0..self.n_cells()).map(|c| self.geometry(c)).collect()
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_cells())
            .map(|c| signed_area(&self.cell_points(c)))
            .sum()
    }

    /// Maximum cell diameter.
    pub fn h_max(&self) -> f64 {
        (0..self.n_cells())
            .map(|c| diameter(&self.cell_points(c)))
            .fold(0.0, f64::max)
    }

    /// Mean cell diameter; a less noisy refinement measure on random meshes.
    pub fn h_mean(&self) -> f64 {
        let sum: f64 = (0..self.n_cells())
            .map(|c| diameter(&self.cell_points(c)))
            .sum();
        sum / self.n_cells() as f64
    }

    /// Whether the cell graph (cells adjacent through edges) is connected.
    pub fn is_connected(&self) -> bool {
        if self.cells.is_empty() {
            return true;
        }
        let mut seen = vec![false; self.n_cells()];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(c) = stack.pop() {
            for &e in &self.cell_edges[c] {
                let (a, b) = self.edges[e].cells;
                let other = if a == c { b } else { Some(a) };
                if let Some(o) = other {
                    if !seen[o] {
                        seen[o] = true;
                        count += 1;
                        stack.push(o);
                    }
                }
            }
        }
        count == self.n_cells()
    }
}

/// Derives the edge skeleton of a polygonal decomposition.
///
/// Both cells adjacent to an interior edge resolve to the same edge id because
/// edges are keyed by their unordered vertex pair.
pub fn build_edges(vertices: Vec<Point2>, cells: Vec<Vec<usize>>) -> Result<PolyMesh> {
    let nv = vertices.len();
    if let Some(v) = vertices.iter().position(|p| !p.is_finite()) {
        return Err(Error::Parameter(format!("vertex {v} has non-finite coordinates")));
    }
    let mut index: HashMap<(usize, usize), usize> = HashMap::new();
    // Direction in which the first owner traversed each edge.
    let mut forward: Vec<bool> = Vec::new();
    let mut edges: Vec<Edge> = Vec::new();
    let mut cell_edges = Vec::with_capacity(cells.len());
    for (c, cell) in cells.iter().enumerate() {
        let n = cell.len();
        if n < 3 {
            return Err(Error::Format {
                cell: c,
                reason: format!("cell has {n} vertices, at least 3 required"),
            });
        }
        if let Some(&v) = cell.iter().find(|&&v| v >= nv) {
            return Err(Error::Format {
                cell: c,
                reason: format!("vertex index {v} out of range ({nv} vertices)"),
            });
        }
        let mut local = Vec::with_capacity(n);
        for i in 0..n {
            let (a, b) = (cell[i], cell[(i + 1) % n]);
            if a == b {
                return Err(Error::Format {
                    cell: c,
                    reason: format!("repeated consecutive vertex {a}"),
                });
            }
            let key = (a.min(b), a.max(b));
            let id = match index.get(&key) {
                Some(&id) => {
                    let edge = &mut edges[id];
                    if edge.cells.1.is_some() || edge.cells.0 == c {
                        let count = if edge.cells.1.is_some() { 3 } else { 2 };
                        return Err(Error::NonManifoldEdge { a: key.0, b: key.1, count });
                    }
                    if forward[id] == (a < b) {
                        return Err(Error::InconsistentOrientation {
                            a: key.0,
                            b: key.1,
                            first: edge.cells.0,
                            second: c,
                        });
                    }
                    edge.cells.1 = Some(c);
                    id
                }
                None => {
                    let id = edges.len();
                    index.insert(key, id);
                    forward.push(a < b);
                    edges.push(Edge {
                        vertices: [key.0, key.1],
                        cells: (c, None),
                    });
                    id
                }
            };
            local.push(id);
        }
        cell_edges.push(local);
    }
    Ok(PolyMesh {
        vertices,
        cells,
        edges,
        cell_edges,
    })
}

fn diameter(poly: &[Point2]) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..poly.len() {
        for j in i + 1..poly.len() {
            d = d.max(poly[i].dist(poly[j]));
        }
    }
    d
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeGeometry {
    pub start: Point2,
    pub end: Point2,
    pub length: f64,
    /// Outward unit normal.
    pub normal: Point2,
    pub midpoint: Point2,
}

/// Per-cell measures used by the local element machinery.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementGeometry {
    pub area: f64,
    pub centroid: Point2,
    pub diameter: f64,
    pub perimeter: f64,
    pub vertices: Vec<Point2>,
    /// Local edges in cell order.
    pub edges: Vec<EdgeGeometry>,
}

impl ElementGeometry {
    pub fn from_polygon(cell: usize, poly: &[Point2]) -> Result<Self> {
        let n = poly.len();
        if n < 3 {
            return Err(Error::Format {
                cell,
                reason: format!("cell has {n} vertices"),
            });
        }
        // Shoelace relative to the first vertex to limit cancellation.
        let o = poly[0];
        let mut twice_area = 0.0;
        let mut cx = 0.0;
        let mut cy = 0.0;
        for i in 0..n {
            let p = poly[i] - o;
            let q = poly[(i + 1) % n] - o;
            let w = p.cross(q);
            twice_area += w;
            cx += (p.x + q.x) * w;
            cy += (p.y + q.y) * w;
        }
        let area = 0.5 * twice_area;
        if !(area > 0.0) {
            return Err(Error::Orientation { cell, area });
        }
        let centroid = Point2::new(o.x + cx / (6.0 * area), o.y + cy / (6.0 * area));
        let edges: Vec<EdgeGeometry> = (0..n)
            .map(|i| {
                let (start, end) = (poly[i], poly[(i + 1) % n]);
                let d = end - start;
                let length = d.norm();
                EdgeGeometry {
                    start,
                    end,
                    length,
                    normal: Point2::new(d.y / length, -d.x / length),
                    midpoint: (start + end) * 0.5,
                }
            })
            .collect();
        if let Some(i) = edges.iter().position(|e| !(e.length > 0.0)) {
            return Err(Error::Geometry {
                cell,
                reason: format!("edge {i} has zero length"),
            });
        }
        Ok(Self {
            area,
            centroid,
            diameter: diameter(poly),
            perimeter: edges.iter().map(|e| e.length).sum(),
            vertices: poly.to_vec(),
            edges,
        })
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }
}
