//! Browser bindings: every entry point returns a JSON string for the page
//! to draw. The plain functions are also usable (and tested) natively; the
//! exported wrappers take 32-bit seeds so JavaScript can pass plain numbers.

use std::f64::consts::PI;

use serde::Serialize;
use wasm_bindgen::prelude::*;

use ncvem::analysis::{classify_spurious, rect_eigs, DEFAULT_MATCH_RTOL};
use ncvem::assembly::{assemble_from, local_elements, DofMap, Materials};
use ncvem::eigen::{drop_zero_mode, solve_generalized, DEFAULT_RTOL, DEFAULT_TOL_ZERO};
use ncvem::experiment::{
    level_mesh, run_experiment, ExperimentConfig, FitMode, Geometry, ReferenceConfig, StabilizationConfig,
    SCHEMA_VERSION,
};
use ncvem::mesh::{MeshFamily, PolyMesh};
use ncvem::postprocess::reconstruct_pressure;
use ncvem::vem::{Material, StabilizationParams};

/// Keeps a single solve interactive in the browser.
const MAX_CELLS: usize = 6000;
/// Window of exact rectangle eigenvalues used for flagging.
const REFERENCE_COUNT: usize = 7;

#[derive(Serialize)]
struct MeshView {
    vertices: Vec<[f64; 2]>,
    cells: Vec<Vec<usize>>,
    n_edges: usize,
    h: f64,
}

#[derive(Serialize)]
struct ModesView {
    mesh: MeshView,
    n_dofs: usize,
    /// `lambda / pi^2` (rho = c = 1).
    eigenvalues: Vec<f64>,
    flags: Vec<String>,
    reference: Vec<f64>,
    /// Pressure at the cell centroids, one list per mode.
    pressure: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct SweepColumn {
    sigma: f64,
    eigenvalues: Vec<f64>,
    flags: Vec<String>,
    spurious: usize,
}

#[derive(Serialize)]
struct SweepView {
    family: String,
    n: usize,
    reference: Vec<f64>,
    columns: Vec<SweepColumn>,
}

fn geometry(name: &str) -> Result<Geometry, String> {
    match name {
        "rect" => Ok(Geometry::Rect { lx: 1.0, ly: 1.1 }),
        "lshape" => Ok(Geometry::Lshape),
        "ring" => Ok(Geometry::Ring {
            r_inner: 0.5,
            r_outer: 2.0,
        }),
        other => Err(format!("unknown geometry '{other}'")),
    }
}

fn build_mesh(geometry_name: &str, family: &str, n: usize, seed: u64) -> Result<PolyMesh, String> {
    let family: MeshFamily = family.parse().map_err(|e: ncvem::Error| e.to_string())?;
    let mesh = level_mesh(&geometry(geometry_name)?, family, n, seed).map_err(|e| e.to_string())?;
    if mesh.n_cells() > MAX_CELLS {
        return Err(format!("{} cells; the demo allows at most {MAX_CELLS}", mesh.n_cells()));
    }
    Ok(mesh)
}

fn view(mesh: &PolyMesh) -> MeshView {
    MeshView {
        vertices: mesh.vertices().iter().map(|p| [p.x, p.y]).collect(),
        cells: mesh.cells().to_vec(),
        n_edges: mesh.n_edges(),
        h: mesh.h_mean(),
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("views serialize")
}

pub fn mesh_json(geometry: &str, family: &str, n: usize, seed: u64) -> Result<String, String> {
    Ok(to_json(&view(&build_mesh(geometry, family, n, seed)?)))
}

pub fn modes_json(geometry: &str, family: &str, n: usize, seed: u64, sigma: f64, n_ev: usize) -> Result<String, String> {
    let err = |e: ncvem::Error| e.to_string();
    let mesh = build_mesh(geometry, family, n, seed)?;
    let materials = Materials::Uniform(Material::default());
    let stab = StabilizationParams::new(sigma, 1.0).map_err(err)?;
    let elements = local_elements(&mesh).map_err(err)?;
    let dofmap = DofMap::new(&mesh);
    let sys = assemble_from(&elements, &dofmap, &materials, &stab).map_err(err)?;
    let k = (n_ev + 1).min(dofmap.n_dofs());
    let spectrum = drop_zero_mode(&solve_generalized(&sys.a, &sys.m, k, DEFAULT_RTOL).map_err(err)?, DEFAULT_TOL_ZERO)
        .map_err(err)?;
    let eigenvalues: Vec<f64> = spectrum.eigenvalues.iter().map(|l| l / (PI * PI)).collect();
    let reference: Vec<f64> = match geometry {
        "rect" => {
            let mut v = rect_eigs(1.0, 1.1, 1.0, REFERENCE_COUNT).expanded();
            v.truncate(REFERENCE_COUNT);
            v.iter().map(|l| l / (PI * PI)).collect()
        }
        _ => Vec::new(),
    };
    let cap = reference.last().copied().unwrap_or(0.0);
    let flags = classify_spurious(&eigenvalues, &reference, cap, DEFAULT_MATCH_RTOL)
        .entries
        .iter()
        .map(|e| e.flag.to_string())
        .collect();
    let pressure = spectrum
        .eigenvectors
        .iter()
        .zip(&spectrum.eigenvalues)
        .map(|(v, &l)| {
            reconstruct_pressure(&elements, &dofmap, v, l)
                .map(|p| p.centroid_values())
                .map_err(err)
        })
        .collect::<Result<_, _>>()?;
    Ok(to_json(&ModesView {
        mesh: view(&mesh),
        n_dofs: dofmap.n_dofs(),
        eigenvalues,
        flags,
        reference,
        pressure,
    }))
}

pub fn sweep_json(family: &str, n: usize, sigmas: &[f64], seed: u64, n_ev: usize) -> Result<String, String> {
    let family_value: MeshFamily = family.parse().map_err(|e: ncvem::Error| e.to_string())?;
    build_mesh("rect", family, n, seed)?;
    let cfg = ExperimentConfig {
        schema_version: SCHEMA_VERSION,
        name: "sweep".into(),
        geometry: Geometry::Rect { lx: 1.0, ly: 1.1 },
        family: family_value,
        levels: vec![n],
        material: Material::default(),
        stabilization: StabilizationConfig {
            sigma: sigmas.to_vec(),
            tau: 1.0,
        },
        n_ev,
        normalize: true,
        reference: Some(ReferenceConfig::Exact {
            count: REFERENCE_COUNT,
        }),
        fit: FitMode::Reference,
        n_track: 0,
        match_rtol: DEFAULT_MATCH_RTOL,
        error_modes: Vec::new(),
        vtk: false,
        output_dir: "".into(),
        seed,
    };
    let outcome = run_experiment(&cfg, None).map_err(|e| e.to_string())?;
    let columns = outcome
        .runs
        .iter()
        .map(|r| {
            let c = &r.report.levels[0].classification;
            SweepColumn {
                sigma: r.sigma,
                eigenvalues: c.entries.iter().map(|e| e.value).collect(),
                flags: c.entries.iter().map(|e| e.flag.to_string()).collect(),
                spurious: c.spurious_count(),
            }
        })
        .collect();
    Ok(to_json(&SweepView {
        family: family.into(),
        n,
        reference: cfg.reference_values(),
        columns,
    }))
}

/// Mesh vertices and cells as JSON.
#[wasm_bindgen]
pub fn generate_mesh(geometry: &str, family: &str, n: usize, seed: u32) -> Result<String, String> {
    mesh_json(geometry, family, n, seed.into())
}

/// Lowest eigenpairs with flags and centroid pressure values as JSON.
#[wasm_bindgen]
pub fn compute_modes(geometry: &str, family: &str, n: usize, seed: u32, sigma: f64, n_ev: usize) -> Result<String, String> {
    modes_json(geometry, family, n, seed.into(), sigma, n_ev)
}

/// Flagged rectangle spectra, one column per stabilization value, as JSON.
#[wasm_bindgen]
pub fn sweep_sigma(family: &str, n: usize, sigmas: Vec<f64>, seed: u32, n_ev: usize) -> Result<String, String> {
    sweep_json(family, n, &sigmas, seed.into(), n_ev)
}
