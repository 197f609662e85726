use serde::Serialize;

use super::{signed_area, ElementGeometry, Point2, PolyMesh};

/// Relative distance (in units of h_E) below which two vertices count as duplicates.
pub const TOL_DUP: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellQuality {
    pub cell: usize,
    /// Every fan triangle (centroid, v_i, v_{i+1}) has positive area.
    pub star_shaped: bool,
    /// Distance from the centroid to the nearest edge line, over h_E.
    pub ball_ratio: f64,
    /// Minimum pairwise vertex distance over h_E.
    pub vertex_ratio: f64,
}

/// Outcome of the mesh regularity checks. Failures are listed, never dropped.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeshQualityReport {
    pub cells: Vec<CellQuality>,
    pub min_vertex_ratio: f64,
    pub min_ball_ratio: f64,
    pub h: f64,
    /// Cells that are not star-shaped w.r.t. their centroid, or whose
    /// inscribed-ball proxy is below `gamma * h_E`.
    pub star_failures: Vec<usize>,
    /// Cells with two vertices closer than `c_a2 * h_E` (or duplicates).
    pub vertex_failures: Vec<usize>,
}

impl MeshQualityReport {
    pub fn passed(&self) -> bool {
        self.star_failures.is_empty() && self.vertex_failures.is_empty()
    }
}

fn cell_quality(cell: usize, poly: &[Point2]) -> CellQuality {
    let n = poly.len();
    let area = signed_area(poly);
    let h = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .map(|(i, j)| poly[i].dist(poly[j]))
        .fold(0.0, f64::max);
    let centroid = ElementGeometry::from_polygon(cell, poly)
        .map(|g| g.centroid)
        .unwrap_or_else(|_| {
            poly.iter().fold(Point2::default(), |a, &p| a + p) * (1.0 / n as f64)
        });
    let mut star = area > 0.0;
    let mut ball = f64::INFINITY;
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        let len = a.dist(b);
        let twice = (a - centroid).cross(b - centroid);
        if !(twice > 0.0) || len == 0.0 {
            star = false;
        }
        ball = ball.min(twice / len.max(f64::MIN_POSITIVE));
    }
    let mut min_d = f64::INFINITY;
    for i in 0..n {
        for j in i + 1..n {
            min_d = min_d.min(poly[i].dist(poly[j]));
        }
    }
    let h = if h > 0.0 { h } else { f64::MIN_POSITIVE };
    CellQuality {
        cell,
        star_shaped: star,
        ball_ratio: if star { ball / h } else { 0.0 },
        vertex_ratio: min_d / h,
    }
}

/// Checks the two mesh-regularity assumptions cell by cell.
///
/// Star-shapedness is tested against the centroid (every fan triangle must be
/// positively oriented) and the distance from the centroid to the nearest edge
/// line must be at least `gamma * h_E`. Vertex separation must be at least
/// `c_a2 * h_E`, and never below [`TOL_DUP`].
pub fn validate(mesh: &PolyMesh, gamma: f64, c_a2: f64) -> MeshQualityReport {
    let cells: Vec<CellQuality> = (0..mesh.n_cells())
        .map(|c| cell_quality(c, &mesh.cell_points(c)))
        .collect();
    let star_failures = cells
        .iter()
        .filter(|q| !q.star_shaped || q.ball_ratio < gamma)
        .map(|q| q.cell)
        .collect();
    let vertex_failures = cells
        .iter()
        .filter(|q| q.vertex_ratio < c_a2.max(TOL_DUP))
        .map(|q| q.cell)
        .collect();
    MeshQualityReport {
        min_vertex_ratio: cells.iter().map(|q| q.vertex_ratio).fold(f64::INFINITY, f64::min),
        min_ball_ratio: cells.iter().map(|q| q.ball_ratio).fold(f64::INFINITY, f64::min),
        h: mesh.h_max(),
        cells,
        star_failures,
        vertex_failures,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate_rect_quads;

    #[test]
    fn uniform_quads_pass() {
        let m = generate_rect_quads(8, 8, 1.0, 1.1).unwrap();
        let r = validate(&m, 0.1, 0.1);
        assert!(r.passed(), "{r:?}");
        assert!((r.min_vertex_ratio - 0.125 / (0.125f64.hypot(0.1375))).abs() < 1e-12);
    }

    #[test]
    fn near_duplicate_vertex_is_reported() {
        let m = PolyMesh::new(
            vec![
                Point2::new(0.0, 0.0),
                Point2::new(1.0, 0.0),
                Point2::new(1.0 + 1e-14, 1e-14),
                Point2::new(1.0, 1.0),
                Point2::new(0.0, 1.0),
            ],
            vec![vec![0, 1, 2, 3, 4]],
        )
        .unwrap();
        let r = validate(&m, 0.0, 0.0);
        assert_eq!(r.vertex_failures, vec![0]);
        assert!(!r.passed());
    }

    #[test]
    fn l_shaped_cell_is_star_shaped_about_its_centroid() {
        // Centroid of this L is (5/6, 5/6), which sees every edge.
        let m = PolyMesh::new(
            vec![
                Point2::new(0.0, 0.0),
                Point2::new(2.0, 0.0),
                Point2::new(2.0, 1.0),
                Point2::new(1.0, 1.0),
                Point2::new(1.0, 2.0),
                Point2::new(0.0, 2.0),
            ],
            vec![vec![0, 1, 2, 3, 4, 5]],
        )
        .unwrap();
        let g = m.geometry(0).unwrap();
        assert!((g.centroid.x - 5.0 / 6.0).abs() < 1e-14);
        let r = validate(&m, 0.0, 0.1);
        assert!(r.cells[0].star_shaped);
        assert!(r.passed());
    }

    #[test]
    fn thin_notch_fails_star_check() {
        // A "C" shape whose centroid lies outside the kernel.
        let m = PolyMesh::new(
            vec![
                Point2::new(0.0, 0.0),
                Point2::new(3.0, 0.0),
                Point2::new(3.0, 0.2),
                Point2::new(0.2, 0.2),
                Point2::new(0.2, 2.8),
                Point2::new(3.0, 2.8),
                Point2::new(3.0, 3.0),
                Point2::new(0.0, 3.0),
            ],
            vec![vec![0, 1, 2, 3, 4, 5, 6, 7]],
        )
        .unwrap();
        let r = validate(&m, 0.0, 0.0);
        assert_eq!(r.star_failures, vec![0]);
    }
}
