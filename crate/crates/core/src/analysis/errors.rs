//! Broken L2 and H1 errors of a discrete eigenfunction.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::reference::ExactField;
use crate::assembly::DofMap;
use crate::error::{Error, Result};
use crate::quadrature::{integrate_polygon, triangulate, TriangleRule};
use crate::vem::LocalVem;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrokenErrors {
    /// `sqrt(sum_E ||Pi p_h - p||^2_{0,E})`.
    pub l2: f64,
    /// `sqrt(sum_E |Pi p_h - p|^2_{1,E})`.
    pub h1: f64,
    /// Coefficients of the closest combination of the exact fields.
    pub coefficients: Vec<f64>,
}

/// Compares the element-wise projection of `eigvec` with the best L2
/// combination of `exact` (one field for a simple eigenvalue, a basis of the
/// eigenspace otherwise). The alignment absorbs sign and scale, so the result
/// does not depend on the eigenvector's normalization.
pub fn broken_errors(
    elements: &[LocalVem],
    dofmap: &DofMap,
    eigvec: &[f64],
    exact: &[&dyn ExactField],
) -> Result<BrokenErrors> {
    if exact.is_empty() {
        return Err(Error::Parameter("no exact field to compare against".into()));
    }
    if eigvec.len() != dofmap.n_dofs() || elements.len() != dofmap.n_cells() {
        return Err(Error::Parameter(format!(
            "eigenvector of length {} for {} DOFs and {} elements on {} cells",
            eigvec.len(),
            dofmap.n_dofs(),
            elements.len(),
            dofmap.n_cells()
        )));
    }
    let rule = TriangleRule::degree5();
    let k = exact.len();
    let projections: Vec<[f64; 3]> = (0..elements.len())
        .map(|c| elements[c].project(&dofmap.gather(c, eigvec)))
        .collect();
    let tris = elements
        .iter()
        .enumerate()
        .map(|(c, e)| triangulate(c, &e.geometry))
        .collect::<Result<Vec<_>>>()?;

    let mut gram = DMatrix::zeros(k, k);
    let mut rhs = DVector::zeros(k);
    for (c, e) in elements.iter().enumerate() {
        let coeffs = &projections[c];
        for a in 0..k {
            rhs[a] += integrate_polygon(&tris[c], &rule, |p| {
                e.monomials.combine(coeffs, p) * exact[a].value(p)
            });
            for b in 0..=a {
                let g = integrate_polygon(&tris[c], &rule, |p| exact[a].value(p) * exact[b].value(p));
                gram[(a, b)] += g;
                if a != b {
                    gram[(b, a)] += g;
                }
            }
        }
    }
    let alpha = gram
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Parameter("exact fields are linearly dependent".into()))?
        .solve(&rhs);
    let alpha: Vec<f64> = alpha.iter().copied().collect();

    let target = |p| -> f64 { exact.iter().zip(&alpha).map(|(f, a)| a * f.value(p)).sum() };
    let target_grad = |p| {
        exact
            .iter()
            .zip(&alpha)
            .fold(crate::mesh::Point2::default(), |acc, (f, &a)| acc + f.gradient(p) * a)
    };
    let (mut l2, mut h1) = (0.0, 0.0);
    for (c, e) in elements.iter().enumerate() {
        let coeffs = &projections[c];
        let grad = e.monomials.combine_grad(coeffs);
        l2 += integrate_polygon(&tris[c], &rule, |p| (e.monomials.combine(coeffs, p) - target(p)).powi(2));
        h1 += integrate_polygon(&tris[c], &rule, |p| {
            let d = grad - target_grad(p);
            d.dot(d)
        });
    }
    Ok(BrokenErrors {
        l2: l2.sqrt(),
        h1: h1.sqrt(),
        coefficients: alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::reference::{exact_rect_eigfun, Constant};
    use crate::assembly::{assemble_from, local_elements};
    use crate::eigen::{drop_zero_mode, solve_generalized};
    use crate::mesh::{generate_rect_quads, generate_rect_triangles, Point2, PolyMesh};
    use crate::vem::{Material, StabilizationParams};

    struct Affine;

    impl ExactField for Affine {
        fn value(&self, p: Point2) -> f64 {
            0.3 + 2.0 * p.x - 1.5 * p.y
        }
        fn gradient(&self, _: Point2) -> Point2 {
            Point2::new(2.0, -1.5)
        }
    }

    /// Edge averages of `f` on every mesh edge (exact for affine `f`).
    fn interpolate(mesh: &PolyMesh, f: &dyn ExactField) -> Vec<f64> {
        mesh.edges()
            .iter()
            .map(|e| {
                let (a, b) = (mesh.vertices()[e.vertices[0]], mesh.vertices()[e.vertices[1]]);
                f.value((a + b) * 0.5)
            })
            .collect()
    }

    #[test]
    fn affine_injection_has_no_error() {
        let mesh = generate_rect_triangles(5, 4, 1.0, 1.1, 0.15, 2).unwrap();
        let els = local_elements(&mesh).unwrap();
        let dm = DofMap::new(&mesh);
        let v = interpolate(&mesh, &Affine);
        let e = broken_errors(&els, &dm, &v, &[&Affine]).unwrap();
        assert!(e.h1 <= 1e-12 && e.l2 <= 1e-12, "{e:?}");
        assert!((e.coefficients[0] - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn constant_vector_against_the_constant() {
        let mesh = generate_rect_quads(4, 4, 1.0, 1.1).unwrap();
        let els = local_elements(&mesh).unwrap();
        let dm = DofMap::new(&mesh);
        let e = broken_errors(&els, &dm, &vec![0.7; dm.n_dofs()], &[&Constant]).unwrap();
        assert!(e.l2 <= 1e-13 && e.h1 <= 1e-13, "{e:?}");
    }

    fn first_mode(n: usize) -> (Vec<LocalVem>, DofMap, Vec<f64>) {
        let mesh = generate_rect_quads(n, n, 1.0, 1.1).unwrap();
        let els = local_elements(&mesh).unwrap();
        let dm = DofMap::new(&mesh);
        let sys = assemble_from(&els, &dm, &Material::default().into(), &StabilizationParams::default()).unwrap();
        let s = drop_zero_mode(&solve_generalized(&sys.a, &sys.m, 3, 1e-10).unwrap(), 1e-8).unwrap();
        // The first nonzero mode is (0, 1).
        (els, dm, s.eigenvectors[0].clone())
    }

    #[test]
    fn sign_flip_does_not_change_the_error() {
        let (els, dm, v) = first_mode(8);
        let exact = exact_rect_eigfun(0, 1);
        let a = broken_errors(&els, &dm, &v, &[&exact]).unwrap();
        let flipped: Vec<f64> = v.iter().map(|x| -x).collect();
        let b = broken_errors(&els, &dm, &flipped, &[&exact]).unwrap();
        assert!((a.l2 - b.l2).abs() <= 1e-14 && (a.h1 - b.h1).abs() <= 1e-13);
        assert!((a.coefficients[0] + b.coefficients[0]).abs() <= 1e-14);
    }

    #[test]
    fn l2_error_drops_by_four_when_the_mesh_is_halved() {
        let exact = exact_rect_eigfun(0, 1);
        let (e8, d8, v8) = first_mode(16);
        let (e16, d16, v16) = first_mode(32);
        let a = broken_errors(&e8, &d8, &v8, &[&exact]).unwrap();
        let b = broken_errors(&e16, &d16, &v16, &[&exact]).unwrap();
        let ratio = a.l2 / b.l2;
        assert!((ratio - 4.0).abs() < 0.6, "{ratio}");
        let ratio = a.h1 / b.h1;
        assert!((ratio - 2.0).abs() < 0.3, "{ratio}");
    }
}
