//! Lowest-order non-conforming virtual element on a single polygon.
//!
//! The local degrees of freedom are the edge averages `(1/|e|) int_e v`, one
//! per edge. Polynomials are represented in the scaled monomial basis
//! `m1 = 1, m2 = (x - x_E)/h_E, m3 = (y - y_E)/h_E`.

use nalgebra::{DMatrix, Matrix3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{ElementGeometry, Point2};
use crate::quadrature::polygon_monomial_moments;

/// Scaled linear monomials centred at the element centroid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledMonomials {
    pub center: Point2,
    pub scale: f64,
}

impl ScaledMonomials {
    pub fn of(geom: &ElementGeometry) -> Self {
        Self {
            center: geom.centroid,
            scale: geom.diameter,
        }
    }

    pub fn eval(&self, p: Point2) -> [f64; 3] {
        [
            1.0,
            (p.x - self.center.x) / self.scale,
            (p.y - self.center.y) / self.scale,
        ]
    }

    /// Gradients of m2 and m3 (m1 is constant).
    pub fn grad(&self) -> [Point2; 2] {
        let s = 1.0 / self.scale;
        [Point2::new(s, 0.0), Point2::new(0.0, s)]
    }

    /// Value of `sum_a coeffs[a] m_a` at `p`.
    pub fn combine(&self, coeffs: &[f64; 3], p: Point2) -> f64 {
        let m = self.eval(p);
        coeffs[0] * m[0] + coeffs[1] * m[1] + coeffs[2] * m[2]
    }

    /// Gradient of `sum_a coeffs[a] m_a`.
    pub fn combine_grad(&self, coeffs: &[f64; 3]) -> Point2 {
        Point2::new(coeffs[1] / self.scale, coeffs[2] / self.scale)
    }
}

/// Stabilization weights for the stiffness (`sigma`) and mass (`tau`) forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilizationParams {
    pub sigma: f64,
    pub tau: f64,
}

impl Default for StabilizationParams {
    fn default() -> Self {
        Self {
            sigma: 1.0,
            tau: 1.0,
        }
    }
}

impl StabilizationParams {
    pub fn new(sigma: f64, tau: f64) -> Result<Self> {
        let s = Self { sigma, tau };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::Parameter(format!("sigma must be >= 0, got {}", self.sigma)));
        }
        if !(self.tau.is_finite() && self.tau >= 0.0) {
            return Err(Error::Parameter(format!("tau must be >= 0, got {}", self.tau)));
        }
        Ok(())
    }
}

/// Density and sound speed, constant on each element.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Material {
    pub rho: f64,
    pub c: f64,
}

impl Default for Material {
    fn default() -> Self {
        Self { rho: 1.0, c: 1.0 }
    }
}

impl Material {
    pub fn new(rho: f64, c: f64) -> Result<Self> {
        if !(rho.is_finite() && rho > 0.0 && c.is_finite() && c > 0.0) {
            return Err(Error::Parameter(format!(
                "density and sound speed must be positive, got rho={rho}, c={c}"
            )));
        }
        Ok(Self { rho, c })
    }

    /// Coefficient `c^2 / rho` of the stiffness form.
    pub fn stiffness_coeff(&self) -> f64 {
        self.c * self.c / self.rho
    }

    /// Coefficient `1 / rho` of the mass form.
    pub fn mass_coeff(&self) -> f64 {
        1.0 / self.rho
    }
}

/// `D[e][a]`: edge average of `m_a` over local edge `e`. For affine `m_a`
/// this is the value at the edge midpoint.
pub fn dof_matrix(geom: &ElementGeometry) -> DMatrix<f64> {
    let mono = ScaledMonomials::of(geom);
    DMatrix::from_fn(geom.n_edges(), 3, |e, a| mono.eval(geom.edges[e].midpoint)[a])
}

/// Right-hand side of the projector system, `B` (3 x N_E).
///
/// Rows 2-3 are `int_e grad m_a . n_e` per edge (the normal derivative is
/// constant per edge, so the DOF alone determines `int_e v dm_a/dn`); row 1
/// realises the boundary-mean condition `|e| / |dE|`.
fn projector_rhs(geom: &ElementGeometry) -> DMatrix<f64> {
    let grads = ScaledMonomials::of(geom).grad();
    DMatrix::from_fn(3, geom.n_edges(), |a, e| {
        let edge = &geom.edges[e];
        match a {
            0 => edge.length / geom.perimeter,
            _ => grads[a - 1].dot(edge.normal) * edge.length,
        }
    })
}

/// Coefficient matrix of the energy projector: `PiStar * dofs` gives the
/// monomial coefficients of the projection.
pub fn pi_nabla(cell: usize, geom: &ElementGeometry, dofs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let b = projector_rhs(geom);
    let g = &b * dofs;
    let scale = g.abs().max();
    let lu = g.clone().lu();
    let det = lu.determinant();
    if !(det.abs() > 1e-12 * scale.powi(3)) {
        return Err(Error::Geometry {
            cell,
            reason: format!("projector Gram matrix is singular (det = {det:e})"),
        });
    }
    Ok(lu.solve(&b).expect("non-singular by the determinant check"))
}

/// Local element data: projector, DOF matrix and monomial moments.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalVem {
    pub geometry: ElementGeometry,
    pub monomials: ScaledMonomials,
    /// 3 x N_E.
    pub pi_star: DMatrix<f64>,
    /// N_E x 3.
    pub dofs: DMatrix<f64>,
    /// `int_E m_a m_b`.
    pub moments: Matrix3<f64>,
}

impl LocalVem {
    pub fn new(cell: usize, geometry: ElementGeometry) -> Result<Self> {
        let dofs = dof_matrix(&geometry);
        let pi_star = pi_nabla(cell, &geometry, &dofs)?;
        let moments = polygon_monomial_moments(cell, &geometry, 1)?;
        Ok(Self {
            monomials: ScaledMonomials::of(&geometry),
            geometry,
            pi_star,
            dofs,
            moments,
        })
    }

    pub fn n_dofs(&self) -> usize {
        self.dofs.nrows()
    }

    /// The L2 projector onto linears. With one average per edge the
    /// enhancement constraint covers all of P1, so it equals the energy
    /// projector.
    pub fn pi_zero(&self) -> &DMatrix<f64> {
        &self.pi_star
    }

    /// `I - D * PiStar`: DOFs of `v - Pi v`.
    pub fn remainder(&self) -> DMatrix<f64> {
        let n = self.n_dofs();
        DMatrix::identity(n, n) - &self.dofs * &self.pi_star
    }

    /// Gradient Gram matrix `int_E grad m_a . grad m_b`; zero on the constant.
    pub fn gradient_gram(&self) -> Matrix3<f64> {
        let s = self.geometry.area / (self.geometry.diameter * self.geometry.diameter);
        Matrix3::new(0.0, 0.0, 0.0, 0.0, s, 0.0, 0.0, 0.0, s)
    }

    /// Monomial coefficients of the projection of a local DOF vector.
    pub fn project(&self, local_dofs: &[f64]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (a, o) in out.iter_mut().enumerate() {
            *o = (0..self.n_dofs())
                .map(|e| self.pi_star[(a, e)] * local_dofs[e])
                .sum();
        }
        out
    }

    /// `(c^2/rho) [PiStar^T G PiStar + sigma (I - Pi)^T (I - Pi)]`.
    ///
    /// The DOF-vector stabilization is scaled by the same material coefficient
    /// as the consistency term.
    pub fn stiffness(&self, material: &Material, sigma: f64) -> Result<DMatrix<f64>> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::Parameter(format!("sigma must be >= 0, got {sigma}")));
        }
        let g = DMatrix::from_column_slice(3, 3, self.gradient_gram().as_slice());
        let r = self.remainder();
        let k = self.pi_star.transpose() * g * &self.pi_star + r.transpose() * &r * sigma;
        Ok(symmetrize(k * material.stiffness_coeff()))
    }

    /// `(1/rho) [PiStar^T H PiStar + tau h_E^2 (I - Pi)^T (I - Pi)]`.
    pub fn mass(&self, material: &Material, tau: f64) -> Result<DMatrix<f64>> {
        if !(tau.is_finite() && tau >= 0.0) {
            return Err(Error::Parameter(format!("tau must be >= 0, got {tau}")));
        }
        let h = DMatrix::from_column_slice(3, 3, self.moments.as_slice());
        let r = self.remainder();
        let h2 = self.geometry.diameter * self.geometry.diameter;
        let m = self.pi_star.transpose() * h * &self.pi_star + r.transpose() * &r * (tau * h2);
        Ok(symmetrize(m * material.mass_coeff()))
    }
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_rect_triangles, generate_voronoi_lloyd, Rect};
    use nalgebra::DVector;
    use proptest::prelude::*;

    fn square_geom() -> ElementGeometry {
        ElementGeometry::from_polygon(
            0,
            &[
                Point2::new(0.0, 0.0),
                Point2::new(1.0, 0.0),
                Point2::new(1.0, 1.0),
                Point2::new(0.0, 1.0),
            ],
        )
        .unwrap()
    }

    fn square() -> LocalVem {
        LocalVem::new(0, square_geom()).unwrap()
    }

    #[test]
    fn square_dof_matrix() {
        let d = dof_matrix(&square_geom());
        let s = 0.5 / 2f64.sqrt();
        let col1 = [0.0, s, 0.0, -s];
        for e in 0..4 {
            assert_eq!(d[(e, 0)], 1.0);
            assert!((d[(e, 1)] - col1[e]).abs() < 1e-15);
        }
        assert_eq!(d.rank(1e-12), 3);
    }

    #[test]
    fn square_projector_matches_hand_solution() {
        // dofs (b, r, t, l) -> (b+r+t+l)/4 + (r-l)(x-1/2) + (t-b)(y-1/2)
        let vem = square();
        let (b, r, t, l) = (0.3, -1.2, 2.0, 0.7);
        let coeffs = vem.project(&[b, r, t, l]);
        let h = 2f64.sqrt();
        assert!((coeffs[0] - (b + r + t + l) / 4.0).abs() < 1e-14);
        assert!((coeffs[1] - (r - l) * h).abs() < 1e-14);
        assert!((coeffs[2] - (t - b) * h).abs() < 1e-14);
    }

    #[test]
    fn constants_and_monomials_are_reproduced() {
        let vem = square();
        let c = vem.project(&[2.5; 4]);
        assert!((c[0] - 2.5).abs() < 1e-15 && c[1].abs() < 1e-15 && c[2].abs() < 1e-15);
        let m2: Vec<f64> = (0..4).map(|e| vem.dofs[(e, 1)]).collect();
        let c = vem.project(&m2);
        assert!(c[0].abs() < 1e-15 && (c[1] - 1.0).abs() < 1e-14 && c[2].abs() < 1e-15);
    }

    #[test]
    fn l2_projection_preserves_the_mean() {
        // int_E (v - Pi0 v) * 1 = 0 for the enhanced space, i.e. the first
        // moment row of H applied to PiStar matches |E| times the DOF mean.
        let vem = square();
        let v = [0.1, 0.9, -0.4, 1.3];
        let p = vem.project(&v);
        let int_pi: f64 = (0..3).map(|a| vem.moments[(0, a)] * p[a]).sum();
        let mean: f64 = v.iter().sum::<f64>() / 4.0;
        assert!((int_pi - mean * vem.geometry.area).abs() < 1e-15);
        assert_eq!(vem.pi_zero(), &vem.pi_star);
    }

    #[test]
    fn square_stiffness_energy_of_a_linear_field() {
        let vem = square();
        let q = DVector::from_vec(vec![0.0, 1.0, 0.0, -1.0]);
        for sigma in [0.0, 0.25, 1.0, 7.0] {
            let k = vem.stiffness(&Material::default(), sigma).unwrap();
            let e = (q.transpose() * &k * &q)[(0, 0)];
            assert!((e - 4.0).abs() < 1e-13, "sigma={sigma}: {e}");
            let ones = DVector::from_element(4, 1.0);
            assert!((&k * ones).amax() < 1e-14);
        }
    }

    #[test]
    fn mass_of_constants_is_the_area() {
        let vem = square();
        let ones = DVector::from_element(4, 1.0);
        for tau in [0.0, 1.0, 3.0] {
            let m = vem.mass(&Material::default(), tau).unwrap();
            assert!(((ones.transpose() * &m * &ones)[(0, 0)] - 1.0).abs() < 1e-14);
        }
        let m0 = vem.mass(&Material::default(), 0.0).unwrap();
        assert_eq!(m0.rank(1e-12), 3);
    }

    #[test]
    fn negative_parameters_are_rejected() {
        let vem = square();
        assert!(vem.stiffness(&Material::default(), -1.0).is_err());
        assert!(vem.mass(&Material::default(), -0.1).is_err());
        assert!(StabilizationParams::new(1.0, -1.0).is_err());
        assert!(Material::new(0.0, 1.0).is_err());
    }

    #[test]
    fn voronoi_mass_is_spd() {
        let mesh = generate_voronoi_lloyd(Rect::new(1.0, 1.1), 30, 5, 13).unwrap();
        for c in 0..mesh.n_cells() {
            let vem = LocalVem::new(c, mesh.geometry(c).unwrap()).unwrap();
            let m = vem.mass(&Material::default(), 1.0).unwrap();
            assert!(m.cholesky().is_some(), "cell {c}");
        }
    }

    fn check_cell(vem: &LocalVem, sigma: f64) {
        let n = vem.n_dofs();
        let repro = &vem.pi_star * &vem.dofs;
        assert!((repro - DMatrix::<f64>::identity(3, 3)).amax() < 1e-12);
        let mat = Material::default();
        let k = vem.stiffness(&mat, sigma).unwrap();
        assert!((&k - k.transpose()).amax() < 1e-14);
        // Kernel is exactly the constants.
        let eig = k.clone().symmetric_eigen();
        let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        assert!(ev[0].abs() < 1e-12 * ev[n - 1]);
        assert!(ev[1] > 1e-8 * ev[n - 1], "{ev:?}");
        // Consistency on linears.
        let g = DMatrix::from_column_slice(3, 3, vem.gradient_gram().as_slice());
        for p in [[0.3, -1.0, 2.0], [1.0, 0.0, 0.0], [0.0, 0.5, 0.5]] {
            let p = DVector::from_row_slice(&p);
            let q = &vem.dofs * &p;
            let lhs = (q.transpose() * &k * &q)[(0, 0)];
            let rhs = (p.transpose() * &g * &p)[(0, 0)];
            assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0));
        }
    }

    #[test]
    fn hexagonal_cells_pass_the_local_checks() {
        let mesh = generate_rect_triangles(3, 3, 1.0, 1.1, 0.2, 2).unwrap();
        for c in 0..mesh.n_cells() {
            check_cell(&LocalVem::new(c, mesh.geometry(c).unwrap()).unwrap(), 1.0);
        }
    }

    proptest! {
        #[test]
        fn random_star_polygons_pass_the_local_checks(
            radii in proptest::collection::vec(0.4f64..1.0, 3..9),
            sigma in 0.0625f64..16.0,
            scale in 0.01f64..100.0,
        ) {
            let n = radii.len();
            let poly: Vec<Point2> = radii.iter().enumerate().map(|(k, r)| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                Point2::new(scale * r * t.cos(), scale * r * t.sin())
            }).collect();
            let vem = LocalVem::new(0, ElementGeometry::from_polygon(0, &poly).unwrap()).unwrap();
            check_cell(&vem, sigma);
        }

        #[test]
        fn scaling_leaves_stiffness_and_scales_mass(s in 0.01f64..100.0) {
            let base = square_geom();
            let scaled: Vec<Point2> = base.vertices.iter().map(|&p| p * s).collect();
            let a = LocalVem::new(0, base).unwrap();
            let b = LocalVem::new(0, ElementGeometry::from_polygon(0, &scaled).unwrap()).unwrap();
            let mat = Material::default();
            let (ka, kb) = (a.stiffness(&mat, 1.0).unwrap(), b.stiffness(&mat, 1.0).unwrap());
            prop_assert!((ka - kb).amax() < 1e-12);
            let (ma, mb) = (a.mass(&mat, 1.0).unwrap(), b.mass(&mat, 1.0).unwrap());
            prop_assert!((ma * (s * s) - &mb).amax() < 1e-12 * mb.amax());
        }

        #[test]
        fn cyclic_relabeling_permutes_the_matrices(shift in 1usize..5) {
            let poly = [
                Point2::new(0.0, 0.0), Point2::new(1.2, 0.1), Point2::new(1.4, 0.9),
                Point2::new(0.6, 1.5), Point2::new(-0.2, 0.8),
            ];
            let n = poly.len();
            let rotated: Vec<Point2> = (0..n).map(|i| poly[(i + shift) % n]).collect();
            let a = LocalVem::new(0, ElementGeometry::from_polygon(0, &poly).unwrap()).unwrap();
            let b = LocalVem::new(0, ElementGeometry::from_polygon(0, &rotated).unwrap()).unwrap();
            let mat = Material::default();
            let (ka, kb) = (a.stiffness(&mat, 1.0).unwrap(), b.stiffness(&mat, 1.0).unwrap());
            let (ma, mb) = (a.mass(&mat, 1.0).unwrap(), b.mass(&mat, 1.0).unwrap());
            for i in 0..n {
                for j in 0..n {
                    let (pi, pj) = ((i + shift) % n, (j + shift) % n);
                    prop_assert!((kb[(i, j)] - ka[(pi, pj)]).abs() < 1e-12);
                    prop_assert!((mb[(i, j)] - ma[(pi, pj)]).abs() < 1e-12);
                }
            }
        }
    }
}
