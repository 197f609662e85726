//! Configured refinement studies: mesh, assemble, solve and analyse every
//! level, then write spectra, fits and checks.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::report::LevelSpectrum;
use crate::analysis::{
    broken_errors, fit_order, rect_eigs, ConvergenceReport, ExactField, OrderFit, RectMode, DEFAULT_MATCH_RTOL,
};
use crate::assembly::{assemble_from, local_elements, DofMap, Materials, SystemMatrices};
use crate::eigen::{drop_zero_mode, inertia_check, solve_generalized, Spectrum, DEFAULT_RTOL, DEFAULT_TOL_ZERO};
use crate::error::{Error, Result};
use crate::files::write_atomic;
use crate::mesh::{
    generate_lshape, generate_rect_distorted, generate_rect_quads, generate_rect_triangles, generate_ring,
    generate_voronoi_lloyd, Annulus, MeshFamily, PolyMesh, Rect, DEFAULT_DISTORTION, DEFAULT_LLOYD_ITERS,
    DEFAULT_MIDPOINT_DEFORM,
};
use crate::postprocess::{export_vtk, reconstruct_pressure, recover_displacement, ModeFields};
use crate::vem::{LocalVem, Material, StabilizationParams};

pub const SCHEMA_VERSION: u32 = 1;
/// Voronoi seeds per `N x N` lattice cell on the rectangle; gives cell sizes
/// comparable with the structured families at the same `N`.
pub const VORONOI_SEEDS_PER_CELL: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Geometry {
    Rect { lx: f64, ly: f64 },
    /// `(-1, 1)^2` without the lower-left quadrant.
    Lshape,
    /// Levels count boundary cells.
    Ring { r_inner: f64, r_outer: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilizationConfig {
    /// One run per value.
    pub sigma: Vec<f64>,
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ReferenceConfig {
    /// Closed-form rectangle spectrum, first `count` values with multiplicity.
    Exact { count: usize },
    /// Given values in the reported units.
    Values { values: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitMode {
    /// Error decay against the reference value.
    Reference,
    /// Three-parameter fit with extrapolation.
    Extrapolate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeLabel {
    pub n: u32,
    pub m: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub name: String,
    pub geometry: Geometry,
    pub family: MeshFamily,
    pub levels: Vec<usize>,
    pub material: Material,
    pub stabilization: StabilizationConfig,
    /// Nonzero eigenvalues per level.
    pub n_ev: usize,
    /// Report `lambda / (c^2 pi^2)` instead of `lambda`.
    pub normalize: bool,
    #[serde(default)]
    pub reference: Option<ReferenceConfig>,
    pub fit: FitMode,
    /// Eigenvalues followed across levels.
    pub n_track: usize,
    #[serde(default = "default_match_rtol")]
    pub match_rtol: f64,
    /// Rectangle modes whose eigenfunction errors are measured.
    #[serde(default)]
    pub error_modes: Vec<ModeLabel>,
    #[serde(default)]
    pub vtk: bool,
    pub output_dir: PathBuf,
    pub seed: u64,
}

fn default_match_rtol() -> f64 {
    DEFAULT_MATCH_RTOL
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Self::parse(text, Path::new("<config>"))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    fn parse(text: &str, path: &Path) -> Result<Self> {
        // Check the version first so an old file gets a clear message.
        let raw: serde_json::Value = serde_json::from_str(text).map_err(|source| Error::Json {
            path: path.into(),
            source,
        })?;
        match raw.get("schema_version").and_then(|v| v.as_u64()) {
            Some(v) if v == SCHEMA_VERSION as u64 => {}
            other => {
                return Err(Error::Parameter(format!(
                    "{}: schema_version must be {SCHEMA_VERSION}, got {other:?}",
                    path.display()
                )))
            }
        }
        let cfg: Self = serde_json::from_value(raw).map_err(|source| Error::Json {
            path: path.into(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialization is infallible")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Parameter(msg));
        if self.levels.is_empty() {
            return bad("levels must be nonempty".into());
        }
        let mut sorted = self.levels.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.levels.len() {
            return bad(format!("levels must be distinct, got {:?}", self.levels));
        }
        Material::new(self.material.rho, self.material.c)?;
        if self.stabilization.sigma.is_empty() {
            return bad("stabilization.sigma must list at least one value".into());
        }
        for &s in &self.stabilization.sigma {
            StabilizationParams::new(s, self.stabilization.tau)?;
        }
        if self.n_ev == 0 || self.n_track > self.n_ev {
            return bad(format!("need 1 <= n_track <= n_ev, got {} and {}", self.n_track, self.n_ev));
        }
        if !(self.match_rtol > 0.0 && self.match_rtol < 1.0) {
            return bad(format!("match_rtol must lie in (0, 1), got {}", self.match_rtol));
        }
        match (&self.geometry, &self.reference) {
            (Geometry::Rect { lx, ly }, _) if !(lx.is_finite() && *lx > 0.0 && ly.is_finite() && *ly > 0.0) => {
                return bad(format!("rectangle sides must be positive, got {lx} x {ly}"));
            }
            (Geometry::Ring { r_inner, r_outer }, _) if !(*r_inner > 0.0 && r_outer > r_inner) => {
                return bad(format!("ring radii must satisfy 0 < r_inner < r_outer, got {r_inner}, {r_outer}"));
            }
            (Geometry::Rect { .. }, _) => {}
            (_, Some(ReferenceConfig::Exact { .. })) => {
                return bad("exact references exist only for the rectangle".into());
            }
            _ => {}
        }
        if !self.error_modes.is_empty() && !matches!(self.geometry, Geometry::Rect { .. }) {
            return bad("error_modes need the rectangle geometry".into());
        }
        if let Some(ReferenceConfig::Values { values }) = &self.reference {
            if values.is_empty() || values.windows(2).any(|w| !(w[0] <= w[1])) || values.iter().any(|v| !v.is_finite()) {
                return bad("reference values must be finite and ascending".into());
            }
        }
        if self.fit == FitMode::Reference && self.reference.is_none() {
            return bad("fit = reference needs a reference".into());
        }
        if self.levels.len() < 3 {
            // A fit needs three levels; single-level sweeps still classify.
            if self.n_track > 0 && self.levels.len() > 1 {
                return bad(format!("fits need at least 3 levels, got {}", self.levels.len()));
            }
        }
        Ok(())
    }

    /// Scale applied to raw eigenvalues before reporting.
    pub fn unit(&self) -> f64 {
        if self.normalize {
            1.0 / (self.material.c * self.material.c * PI * PI)
        } else {
            1.0
        }
    }

    /// Reference values in reported units.
    pub fn reference_values(&self) -> Vec<f64> {
        match (&self.reference, &self.geometry) {
            (Some(ReferenceConfig::Exact { count }), Geometry::Rect { lx, ly }) => {
                let mut v = rect_eigs(*lx, *ly, self.material.c, *count).expanded();
                v.truncate(*count);
                v.iter().map(|l| l * self.unit()).collect()
            }
            (Some(ReferenceConfig::Values { values }), _) => values.clone(),
            _ => Vec::new(),
        }
    }
}

/// The mesh of refinement level `n`.
pub fn level_mesh(geometry: &Geometry, family: MeshFamily, n: usize, seed: u64) -> Result<PolyMesh> {
    match *geometry {
        Geometry::Rect { lx, ly } => match family {
            MeshFamily::Quads => generate_rect_quads(n, n, lx, ly),
            MeshFamily::Distorted => generate_rect_distorted(n, n, lx, ly, DEFAULT_DISTORTION, seed),
            MeshFamily::Triangles => generate_rect_triangles(n, n, lx, ly, DEFAULT_MIDPOINT_DEFORM, seed),
            MeshFamily::Voronoi => {
                generate_voronoi_lloyd(Rect::new(lx, ly), VORONOI_SEEDS_PER_CELL * n * n, DEFAULT_LLOYD_ITERS, seed)
            }
        },
        Geometry::Lshape => generate_lshape(family, n, seed),
        Geometry::Ring { r_inner, r_outer } => generate_ring(family, Annulus { r_inner, r_outer }, n, seed),
    }
}

/// One invariant evaluated on one solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub level: usize,
    pub sigma: f64,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelErrors {
    pub level: usize,
    pub h: f64,
    pub l2: f64,
    pub h1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeErrors {
    pub n: u32,
    pub m: u32,
    pub levels: Vec<LevelErrors>,
    pub l2_order: Option<f64>,
    pub h1_order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaRun {
    pub sigma: f64,
    pub report: ConvergenceReport,
    pub errors: Vec<ModeErrors>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutcome {
    pub name: String,
    pub runs: Vec<SigmaRun>,
    pub checks: Vec<Check>,
}

impl ExperimentOutcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

struct Level {
    n: usize,
    mesh: PolyMesh,
    elements: Vec<LocalVem>,
    dofmap: DofMap,
}

struct Solved {
    level: usize,
    sigma: f64,
    h: f64,
    n_dofs: usize,
    spectrum: Spectrum,
    checks: Vec<Check>,
    errors: Vec<(ModeLabel, f64, f64)>,
}

fn par_map<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> Result<U> + Sync + Send) -> Result<Vec<U>> {
    #[cfg(feature = "parallel")]
    let out = items.par_iter().map(f).collect();
    #[cfg(not(feature = "parallel"))]
    let out = items.iter().map(f).collect();
    out
}

fn file_stem(cfg: &ExperimentConfig, sigma: f64) -> String {
    if cfg.stabilization.sigma.len() == 1 {
        String::new()
    } else {
        format!("_sigma_{sigma}")
    }
}

/// Runs every level for every sigma. With `out_dir`, per-level spectra are
/// written as they finish and the summaries at the end.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: Option<&Path>) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let levels = par_map(&cfg.levels, |&n| {
        let ctx = |e: Error| e.context(format!("level {n}"));
        let mesh = level_mesh(&cfg.geometry, cfg.family, n, cfg.seed).map_err(ctx)?;
        let elements = local_elements(&mesh).map_err(ctx)?;
        let dofmap = DofMap::new(&mesh);
        Ok(Level {
            n,
            mesh,
            elements,
            dofmap,
        })
    })?;
    let jobs: Vec<(usize, f64)> = (0..levels.len())
        .flat_map(|l| cfg.stabilization.sigma.iter().map(move |&s| (l, s)))
        .collect();
    let reference = cfg.reference_values();
    let solved = par_map(&jobs, |&(l, sigma)| {
        let level = &levels[l];
        solve_level(cfg, level, sigma, &reference, out_dir)
            .map_err(|e| e.context(format!("level {}, sigma {sigma}", level.n)))
    })?;

    let mut runs = Vec::new();
    let mut checks = Vec::new();
    for &sigma in &cfg.stabilization.sigma {
        let mine: Vec<&Solved> = solved.iter().filter(|s| s.sigma == sigma).collect();
        let spectra = mine
            .iter()
            .map(|s| LevelSpectrum {
                level: s.level,
                h: s.h,
                n_dofs: s.n_dofs,
                eigenvalues: s.spectrum.eigenvalues.iter().map(|l| l * cfg.unit()).collect(),
            })
            .collect();
        let n_track = if cfg.levels.len() >= 3 { cfg.n_track } else { 0 };
        let report = ConvergenceReport::build(spectra, &reference, n_track, cfg.fit == FitMode::Reference, cfg.match_rtol);
        let errors = cfg
            .error_modes
            .iter()
            .enumerate()
            .map(|(k, label)| {
                let mut levels: Vec<LevelErrors> = mine
                    .iter()
                    .map(|s| LevelErrors {
                        level: s.level,
                        h: s.h,
                        l2: s.errors[k].1,
                        h1: s.errors[k].2,
                    })
                    .collect();
                levels.sort_by(|a, b| b.h.total_cmp(&a.h));
                let order = |f: fn(&LevelErrors) -> f64| -> Option<f64> {
                    let pts: Vec<(f64, f64)> = levels.iter().map(|e| (e.h, f(e))).collect();
                    fit_order(&pts, Some(0.0)).ok().map(|f: OrderFit| f.order)
                };
                ModeErrors {
                    n: label.n,
                    m: label.m,
                    l2_order: order(|e| e.l2),
                    h1_order: order(|e| e.h1),
                    levels,
                }
            })
            .collect();
        for s in &mine {
            checks.extend(s.checks.iter().cloned());
        }
        if let Some(dir) = out_dir {
            let stem = file_stem(cfg, sigma);
            write_atomic(dir.join(format!("eigenvalues{stem}.csv")), report.csv().as_bytes())?;
            let mut text = format!("{} (sigma = {sigma})\n", cfg.name);
            text.push_str(&report.table());
            write_atomic(dir.join(format!("report{stem}.txt")), text.as_bytes())?;
        }
        runs.push(SigmaRun { sigma, report, errors });
    }
    let outcome = ExperimentOutcome {
        name: cfg.name.clone(),
        runs,
        checks,
    };
    if let Some(dir) = out_dir {
        let json = serde_json::to_string_pretty(&outcome).expect("outcome serialization is infallible");
        write_atomic(dir.join("summary.json"), json.as_bytes())?;
    }
    Ok(outcome)
}

fn solve_level(
    cfg: &ExperimentConfig,
    level: &Level,
    sigma: f64,
    reference: &[f64],
    out_dir: Option<&Path>,
) -> Result<Solved> {
    let stab = StabilizationParams::new(sigma, cfg.stabilization.tau)?;
    let materials = Materials::Uniform(cfg.material);
    let sys = assemble_from(&level.elements, &level.dofmap, &materials, &stab)?;
    let n_dofs = level.dofmap.n_dofs();
    let k = (cfg.n_ev + 1).min(n_dofs);
    let full = solve_generalized(&sys.a, &sys.m, k, DEFAULT_RTOL)?;
    let mut checks = invariant_checks(level, &sys, &full, cfg.material);
    for c in &mut checks {
        c.sigma = sigma;
    }
    let spectrum = drop_zero_mode(&full, DEFAULT_TOL_ZERO)?;
    let h = level.mesh.h_mean();

    // Per-level rows, flagged against the reference on this level alone.
    let unit = cfg.unit();
    let single = ConvergenceReport::build(
        vec![LevelSpectrum {
            level: level.n,
            h,
            n_dofs,
            eigenvalues: spectrum.eigenvalues.iter().map(|l| l * unit).collect(),
        }],
        reference,
        0,
        false,
        cfg.match_rtol,
    );
    let csv = single.csv();

    let mut errors = Vec::new();
    if let Geometry::Rect { lx, ly } = cfg.geometry {
        for label in &cfg.error_modes {
            let count = 4 * (label.n as usize + label.m as usize + 2).pow(2);
            let target = rect_eigs(lx, ly, 1.0, count)
                .entries
                .into_iter()
                .find(|e| e.labels.contains(&(label.n, label.m)))
                .ok_or_else(|| Error::Parameter(format!("no rectangle mode ({}, {})", label.n, label.m)))?;
            let modes: Vec<RectMode> = target
                .labels
                .iter()
                .map(|&(n, m)| RectMode { n, m, lx, ly })
                .collect();
            let fields: Vec<&dyn ExactField> = modes.iter().map(|m| m as &dyn ExactField).collect();
            // Closest computed eigenvalue to the exact one.
            let exact = target.value * cfg.material.c * cfg.material.c;
            let i = (0..spectrum.len())
                .min_by(|&a, &b| {
                    (spectrum.eigenvalues[a] - exact)
                        .abs()
                        .total_cmp(&(spectrum.eigenvalues[b] - exact).abs())
                })
                .ok_or_else(|| Error::Parameter("empty spectrum".into()))?;
            let e = broken_errors(&level.elements, &level.dofmap, &spectrum.eigenvectors[i], &fields)?;
            errors.push((label.clone(), e.l2, e.h1));
        }
    }

    if let Some(dir) = out_dir {
        let stem = file_stem(cfg, sigma);
        write_atomic(dir.join(format!("level_{}{stem}.csv", level.n)), csv.as_bytes())?;
        if cfg.vtk {
            let modes = (0..cfg.n_track.min(spectrum.len()))
                .map(|i| {
                    let p = reconstruct_pressure(
                        &level.elements,
                        &level.dofmap,
                        &spectrum.eigenvectors[i],
                        spectrum.eigenvalues[i],
                    )?;
                    let u = recover_displacement(&p, &materials, DEFAULT_TOL_ZERO)?;
                    Ok(ModeFields {
                        pressure: p,
                        displacement: Some(u),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            export_vtk(&level.mesh, &modes, dir.join(format!("modes_{}{stem}.vtk", level.n)))?;
        }
    }
    Ok(Solved {
        level: level.n,
        sigma,
        h,
        n_dofs,
        spectrum,
        checks,
        errors,
    })
}

fn invariant_checks(level: &Level, sys: &SystemMatrices, full: &Spectrum, material: Material) -> Vec<Check> {
    let mut out = Vec::new();
    let mut push = |name: &str, passed: bool, detail: String| {
        out.push(Check {
            name: name.into(),
            level: level.n,
            sigma: 0.0,
            passed,
            detail,
        })
    };
    let n = sys.dim();
    let ones = vec![1.0; n];
    let a1 = sys.a.mul_vec(&ones).iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let a_scale = sys.a.max_abs();
    push("constants_in_kernel", a1 <= 1e-10 * a_scale, format!("|A 1|_inf = {a1:e}"));
    let mass = sys.m.inner(&ones, &ones);
    let want = level.mesh.total_area() / material.rho;
    let rel = (mass - want).abs() / want;
    push("total_mass", rel <= 1e-10, format!("1^T M 1 = {mass}, |Omega|/rho = {want}"));
    let connected = level.mesh.is_connected();
    let zero = drop_zero_mode(full, DEFAULT_TOL_ZERO);
    push(
        "one_zero_mode",
        connected == zero.is_ok(),
        match zero {
            Ok(_) => "exactly one".into(),
            Err(e) => e.to_string(),
        },
    );
    let defect = full.orthonormality_defect(&sys.m);
    push("m_orthonormal", defect <= 1e-8, format!("max |V^T M V - I| = {defect:e}"));
    match inertia_check(&sys.a, &sys.m, full) {
        Ok(probes) => {
            let ok = probes.iter().all(|&(_, e, i)| e == i);
            let detail: Vec<String> = probes
                .iter()
                .map(|(s, e, i)| format!("shift {s}: {e} returned, {i} by inertia"))
                .collect();
            push("inertia", ok, detail.join("; "));
        }
        Err(e) => push("inertia", false, e.to_string()),
    }
    out
}
