use std::f64::consts::PI;

use ncvem::assembly::{assemble_from, local_elements, DofMap, Materials};
use ncvem::eigen::{drop_zero_mode, solve_generalized, DEFAULT_RTOL, DEFAULT_TOL_ZERO};
use ncvem::mesh::{generate_rect_distorted, DEFAULT_DISTORTION};
use ncvem::postprocess::{reconstruct_pressure, recover_displacement, Displacement, FieldOnMesh};
use ncvem::vem::{Material, StabilizationParams};

/// Mode (1, 0) on the `1 x 1.1` rectangle: pressure, displacement and the
/// centroids, on the distorted `n x n` quad mesh. (On uniform quads the
/// centroid values of this mode are exact up to rounding.)
fn mode_one_zero(n: usize) -> (FieldOnMesh, Displacement, Vec<(f64, f64)>) {
    let mesh = generate_rect_distorted(n, n, 1.0, 1.1, DEFAULT_DISTORTION, 5).unwrap();
    let elements = local_elements(&mesh).unwrap();
    let dofmap = DofMap::new(&mesh);
    let materials = Materials::Uniform(Material::new(1.0, 1.0).unwrap());
    let sys = assemble_from(&elements, &dofmap, &materials, &StabilizationParams::new(1.0, 1.0).unwrap()).unwrap();
    let spec = drop_zero_mode(&solve_generalized(&sys.a, &sys.m, 6, DEFAULT_RTOL).unwrap(), DEFAULT_TOL_ZERO).unwrap();
    // lambda_10 = pi^2 is the second nonzero eigenvalue; lambda_01 = pi^2/1.21 comes first.
    let i = (0..spec.len())
        .min_by(|&a, &b| (spec.eigenvalues[a] - PI * PI).abs().total_cmp(&(spec.eigenvalues[b] - PI * PI).abs()))
        .unwrap();
    assert!((spec.eigenvalues[i] / (PI * PI) - 1.0).abs() < 0.05);
    let p = reconstruct_pressure(&elements, &dofmap, &spec.eigenvectors[i], spec.eigenvalues[i]).unwrap();
    let u = recover_displacement(&p, &materials, DEFAULT_TOL_ZERO).unwrap();
    let centroids = p.monomials.iter().map(|m| (m.center.x, m.center.y)).collect();
    (p, u, centroids)
}

#[test]
fn displacement_is_parallel_to_the_exact_field() {
    let (_, u, centroids) = mode_one_zero(32);
    // u_10 is proportional to (sin(pi x), 0).
    let (mut dot, mut nu, mut ne) = (0.0, 0.0, 0.0);
    for (v, &(x, _)) in u.vectors.iter().zip(&centroids) {
        let e = (PI * x).sin();
        dot += v.x * e;
        nu += v.x * v.x + v.y * v.y;
        ne += e * e;
    }
    let cosine = dot.abs() / (nu * ne).sqrt();
    assert!(cosine >= 0.99, "{cosine}");
}

#[test]
fn centroid_error_decreases_under_refinement() {
    let mut previous = f64::INFINITY;
    for n in [8, 16, 32, 64] {
        let (p, _, centroids) = mode_one_zero(n);
        let values = p.centroid_values();
        let exact: Vec<f64> = centroids.iter().map(|&(x, _)| (PI * x).cos()).collect();
        // Least-squares scale absorbs sign and normalization.
        let s = values.iter().zip(&exact).map(|(a, b)| a * b).sum::<f64>() / values.iter().map(|a| a * a).sum::<f64>();
        let err = values
            .iter()
            .zip(&exact)
            .map(|(a, b)| (s * a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < previous, "N = {n}: {err} after {previous}");
        previous = err;
    }
    assert!(previous < 1e-2, "{previous}");
}
