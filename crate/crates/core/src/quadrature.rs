//! Exact low-degree integration over polygons (via sub-triangulation) and edges.

use nalgebra::Matrix3;

use crate::error::{Error, Result};
use crate::mesh::{ElementGeometry, Point2};

/// Symmetric quadrature rule on a triangle in barycentric coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleRule {
    pub points: Vec<[f64; 3]>,
    /// Weights relative to the triangle area; they sum to one.
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl TriangleRule {
    /// Three interior points, exact for degree 2.
    pub fn degree2() -> Self {
        let (a, b) = (2.0 / 3.0, 1.0 / 6.0);
        Self {
            points: vec![[a, b, b], [b, a, b], [b, b, a]],
            weights: vec![1.0 / 3.0; 3],
            degree: 2,
        }
    }

    /// Seven-point rule exact for degree 5.
    pub fn degree5() -> Self {
        let r15 = 15f64.sqrt();
        let b1 = (6.0 + r15) / 21.0;
        let b2 = (6.0 - r15) / 21.0;
        let (a1, a2) = (1.0 - 2.0 * b1, 1.0 - 2.0 * b2);
        let w1 = (155.0 + r15) / 1200.0;
        let w2 = (155.0 - r15) / 1200.0;
        let third = 1.0 / 3.0;
        Self {
            points: vec![
                [third, third, third],
                [a1, b1, b1],
                [b1, a1, b1],
                [b1, b1, a1],
                [a2, b2, b2],
                [b2, a2, b2],
                [b2, b2, a2],
            ],
            weights: vec![0.225, w1, w1, w1, w2, w2, w2],
            degree: 5,
        }
    }

    /// Integrates `f` over the triangle `tri`.
    pub fn integrate(&self, tri: &[Point2; 3], mut f: impl FnMut(Point2) -> f64) -> f64 {
        let area = 0.5 * (tri[1] - tri[0]).cross(tri[2] - tri[0]);
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(l, w)| w * f(tri[0] * l[0] + tri[1] * l[1] + tri[2] * l[2]))
            .sum::<f64>()
            * area
    }
}

/// Splits a polygon into positively oriented triangles: a fan from the
/// centroid when the centroid sees every edge, ear clipping otherwise.
pub fn triangulate(cell: usize, geom: &ElementGeometry) -> Result<Vec<[Point2; 3]>> {
    let c = geom.centroid;
    let fan: Vec<[Point2; 3]> = geom.edges.iter().map(|e| [c, e.start, e.end]).collect();
    if fan.iter().all(|t| (t[1] - t[0]).cross(t[2] - t[0]) > 0.0) {
        return Ok(fan);
    }
    ear_clip(&geom.vertices).ok_or_else(|| Error::Quadrature {
        cell,
        reason: "neither fan nor ear-clipping triangulation succeeded".into(),
    })
}

/// Ear clipping of a simple CCW polygon.
pub fn ear_clip(poly: &[Point2]) -> Option<Vec<[Point2; 3]>> {
    let mut idx: Vec<usize> = (0..poly.len()).collect();
    let mut out = Vec::with_capacity(poly.len().saturating_sub(2));
    let orient = |a: Point2, b: Point2, c: Point2| (b - a).cross(c - a);
    while idx.len() > 3 {
        let n = idx.len();
        let ear = (0..n).find(|&i| {
            let (a, b, c) = (poly[idx[(i + n - 1) % n]], poly[idx[i]], poly[idx[(i + 1) % n]]);
            if orient(a, b, c) <= 0.0 {
                return false;
            }
            idx.iter().all(|&k| {
                let p = poly[k];
                if p == a || p == b || p == c {
                    return true;
                }
                !(orient(a, b, p) >= 0.0 && orient(b, c, p) >= 0.0 && orient(c, a, p) >= 0.0)
            })
        })?;
        out.push([poly[idx[(ear + n - 1) % n]], poly[idx[ear]], poly[idx[(ear + 1) % n]]]);
        idx.remove(ear);
    }
    let (a, b, c) = (poly[idx[0]], poly[idx[1]], poly[idx[2]]);
    if orient(a, b, c) <= 0.0 {
        return None;
    }
    out.push([a, b, c]);
    Some(out)
}

/// Integrates `f` over the element with the given rule on each sub-triangle.
pub fn integrate_polygon(
    tris: &[[Point2; 3]],
    rule: &TriangleRule,
    mut f: impl FnMut(Point2) -> f64,
) -> f64 {
    tris.iter().map(|t| rule.integrate(t, &mut f)).sum()
}

/// Scaled monomials `1, (x - x_E)/h_E, (y - y_E)/h_E` at `p`.
pub fn scaled_monomials(geom: &ElementGeometry, p: Point2) -> [f64; 3] {
    let h = geom.diameter;
    [1.0, (p.x - geom.centroid.x) / h, (p.y - geom.centroid.y) / h]
}

/// Mass matrix `H[a][b] = integral over E of m_a m_b` for the linear scaled
/// monomials. Only `max_degree = 1` is provisioned.
pub fn polygon_monomial_moments(
    cell: usize,
    geom: &ElementGeometry,
    max_degree: usize,
) -> Result<Matrix3<f64>> {
    if max_degree != 1 {
        return Err(Error::Parameter(format!(
            "only linear monomials are supported, got degree {max_degree}"
        )));
    }
    let tris = triangulate(cell, geom)?;
    Ok(moments_from_triangles(geom, &tris))
}

pub(crate) fn moments_from_triangles(geom: &ElementGeometry, tris: &[[Point2; 3]]) -> Matrix3<f64> {
    let rule = TriangleRule::degree2();
    let mut h = Matrix3::zeros();
    for t in tris {
        for (l, w) in rule.points.iter().zip(&rule.weights) {
            let area = 0.5 * (t[1] - t[0]).cross(t[2] - t[0]);
            let p = t[0] * l[0] + t[1] * l[1] + t[2] * l[2];
            let m = scaled_monomials(geom, p);
            for a in 0..3 {
                for b in 0..3 {
                    h[(a, b)] += w * area * m[a] * m[b];
                }
            }
        }
    }
    h
}

/// Average of `f` over the segment `a -> b` with the two-point Gauss rule
/// (exact up to cubics).
pub fn edge_average(a: Point2, b: Point2, mut f: impl FnMut(Point2) -> f64) -> f64 {
    let g = 0.5 / 3f64.sqrt();
    let mid = (a + b) * 0.5;
    let d = b - a;
    0.5 * (f(mid - d * g) + f(mid + d * g))
}
