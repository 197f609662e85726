//! `ncvem`: mesh generation, single solves, stabilization sweeps, order fits
//! and configured refinement studies.

use std::env;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ncvem::analysis::report::LevelSpectrum;
use ncvem::analysis::{fit_order, flagged_table, rect_eigs, ConvergenceReport, LevelResult, DEFAULT_MATCH_RTOL};
use ncvem::assembly::{assemble_from, local_elements, DofMap, Materials};
use ncvem::eigen::{drop_zero_mode, solve_generalized, DEFAULT_RTOL, DEFAULT_TOL_ZERO};
use ncvem::experiment::{
    level_mesh, run_experiment, ExperimentConfig, ExperimentOutcome, FitMode, Geometry, ReferenceConfig,
    StabilizationConfig, SCHEMA_VERSION,
};
use ncvem::files::write_atomic;
use ncvem::mesh::{validate, MeshFamily, PolyMesh};
use ncvem::postprocess::{coefficients_csv, export_vtk, reconstruct_pressure, recover_displacement, ModeFields};
use ncvem::vem::{Material, StabilizationParams};
use ncvem::{Error, Result};

/// Overrides every output directory (config files and `--out-dir`).
const OUTPUT_DIR_ENV: &str = "NCVEM_OUTPUT_DIR";

/// Exit status when the run finished but an invariant check failed.
const CHECKS_FAILED: u8 = 3;

#[derive(Parser)]
#[command(name = "ncvem", version, about = "Non-conforming virtual elements for acoustic eigenproblems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a mesh and write it as JSON.
    MeshGen {
        #[command(flatten)]
        mesh: MeshArgs,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Assemble and solve one mesh; writes the spectrum CSV.
    Solve(SolveArgs),
    /// Solve one rectangle mesh for several stabilization values and flag
    /// spurious eigenvalues.
    SweepSigma(SweepArgs),
    /// Fit a convergence order to a CSV of `h,lambda` rows.
    Fit {
        #[arg(long)]
        input: PathBuf,
        /// Known limit; without it the limit is extrapolated.
        #[arg(long)]
        exact: Option<f64>,
    },
    /// Run a refinement study from a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum GeometryKind {
    Rect,
    Lshape,
    Ring,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Quads,
    Voronoi,
    Distorted,
    Triangles,
}

impl From<Family> for MeshFamily {
    fn from(f: Family) -> Self {
        match f {
            Family::Quads => MeshFamily::Quads,
            Family::Voronoi => MeshFamily::Voronoi,
            Family::Distorted => MeshFamily::Distorted,
            Family::Triangles => MeshFamily::Triangles,
        }
    }
}

#[derive(Args)]
struct MeshArgs {
    #[arg(long, value_enum, default_value = "rect")]
    geometry: GeometryKind,
    #[arg(long, value_enum, default_value = "quads")]
    family: Family,
    /// Refinement level (cells per side; boundary cells for the ring).
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    lx: f64,
    #[arg(long, default_value_t = 1.1)]
    ly: f64,
    #[arg(long, default_value_t = 0.5)]
    r_inner: f64,
    #[arg(long, default_value_t = 2.0)]
    r_outer: f64,
}

impl MeshArgs {
    fn geometry(&self) -> Geometry {
        match self.geometry {
            GeometryKind::Rect => Geometry::Rect { lx: self.lx, ly: self.ly },
            GeometryKind::Lshape => Geometry::Lshape,
            GeometryKind::Ring => Geometry::Ring {
                r_inner: self.r_inner,
                r_outer: self.r_outer,
            },
        }
    }

    fn build(&self) -> Result<PolyMesh> {
        level_mesh(&self.geometry(), self.family.into(), self.n, self.seed)
    }
}

#[derive(Args)]
struct SolveArgs {
    /// Mesh file; otherwise the mesh is generated from the flags below.
    #[arg(long, conflicts_with = "n")]
    mesh: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "rect")]
    geometry: GeometryKind,
    #[arg(long, value_enum, default_value = "quads")]
    family: Family,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    lx: f64,
    #[arg(long, default_value_t = 1.1)]
    ly: f64,
    #[arg(long, default_value_t = 0.5)]
    r_inner: f64,
    #[arg(long, default_value_t = 2.0)]
    r_outer: f64,
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 1.0)]
    tau: f64,
    /// Nonzero eigenvalues to compute.
    #[arg(long, default_value_t = 8)]
    n_ev: usize,
    /// Report `lambda / (c^2 pi^2)`.
    #[arg(long)]
    normalize: bool,
    /// Also write the stiffness and mass matrices as MatrixMarket files.
    #[arg(long)]
    matrix_dump: bool,
    /// Export the first K modes as VTK and per-cell coefficient CSVs.
    #[arg(long, default_value_t = 0)]
    fields: usize,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_enum, default_value = "voronoi")]
    family: Family,
    #[arg(long, default_value_t = 8)]
    n: usize,
    #[arg(long, value_delimiter = ',', default_value = "0.0625,0.25,1,4,16")]
    sigma: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    tau: f64,
    #[arg(long, default_value_t = 12)]
    n_ev: usize,
    /// Exact eigenvalues (with multiplicity) that define the flagging window.
    #[arg(long, default_value_t = 7)]
    reference_count: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "out/sweep")]
    out_dir: PathBuf,
}

fn output_dir(default: &Path) -> PathBuf {
    env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| default.to_path_buf())
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn mesh_gen(args: &MeshArgs, out: Option<&Path>) -> Result<()> {
    let mesh = args.build()?;
    let q = validate(&mesh, 0.0, 0.0);
    eprintln!(
        "{} cells, {} edges, h_max {:.4}, min ball ratio {:.3}, min vertex ratio {:.3}",
        mesh.n_cells(),
        mesh.n_edges(),
        mesh.h_max(),
        q.min_ball_ratio,
        q.min_vertex_ratio
    );
    match out {
        Some(path) => mesh.save(path),
        None => {
            let mut stdout = io::stdout().lock();
            writeln!(stdout, "{}", mesh.to_json()).map_err(|e| Error::io("<stdout>", e))
        }
    }
}

fn solve(args: &SolveArgs) -> Result<()> {
    let (mesh, level) = match (&args.mesh, args.n) {
        (Some(path), _) => (PolyMesh::load(path)?, 0),
        (None, Some(n)) => {
            let m = MeshArgs {
                geometry: args.geometry,
                family: args.family,
                n,
                seed: args.seed,
                lx: args.lx,
                ly: args.ly,
                r_inner: args.r_inner,
                r_outer: args.r_outer,
            };
            (m.build()?, n)
        }
        (None, None) => return Err(Error::Parameter("give --mesh or --n".into())),
    };
    let material = Material::new(args.rho, args.c)?;
    let materials = Materials::Uniform(material);
    let stab = StabilizationParams::new(args.sigma, args.tau)?;
    let elements = local_elements(&mesh)?;
    let dofmap = DofMap::new(&mesh);
    let sys = assemble_from(&elements, &dofmap, &materials, &stab)?;
    let k = (args.n_ev + 1).min(dofmap.n_dofs());
    let spectrum = drop_zero_mode(&solve_generalized(&sys.a, &sys.m, k, DEFAULT_RTOL)?, DEFAULT_TOL_ZERO)?;

    let unit = if args.normalize {
        1.0 / (args.c * args.c * std::f64::consts::PI * std::f64::consts::PI)
    } else {
        1.0
    };
    // Closed-form reference only for a generated rectangle.
    let reference: Vec<f64> = match (&args.mesh, args.geometry) {
        (None, GeometryKind::Rect) => {
            let mut v = rect_eigs(args.lx, args.ly, args.c, args.n_ev + 1).expanded();
            v.truncate(args.n_ev);
            v.iter().map(|l| l * unit).collect()
        }
        _ => Vec::new(),
    };
    let report = ConvergenceReport::build(
        vec![LevelSpectrum {
            level,
            h: mesh.h_mean(),
            n_dofs: dofmap.n_dofs(),
            eigenvalues: spectrum.eigenvalues.iter().map(|l| l * unit).collect(),
        }],
        &reference,
        0,
        false,
        DEFAULT_MATCH_RTOL,
    );

    let dir = output_dir(&args.out_dir);
    create_dir(&dir)?;
    write_atomic(dir.join("spectrum.csv"), report.csv().as_bytes())?;
    if args.matrix_dump {
        sys.a.write_matrix_market(dir.join("stiffness.mtx"))?;
        sys.m.write_matrix_market(dir.join("mass.mtx"))?;
    }
    if args.fields > 0 {
        let mut modes = Vec::new();
        for i in 0..args.fields.min(spectrum.len()) {
            let p = reconstruct_pressure(&elements, &dofmap, &spectrum.eigenvectors[i], spectrum.eigenvalues[i])?;
            let u = recover_displacement(&p, &materials, DEFAULT_TOL_ZERO)?;
            write_atomic(
                dir.join(format!("coefficients_{}.csv", i + 1)),
                coefficients_csv(&p, Some(&u)).as_bytes(),
            )?;
            modes.push(ModeFields {
                pressure: p,
                displacement: Some(u),
            });
        }
        export_vtk(&mesh, &modes, dir.join("modes.vtk"))?;
    }
    print!("{}", report.table());
    eprintln!("{} DOFs, wrote {}", dofmap.n_dofs(), dir.display());
    Ok(())
}

fn sweep_config(args: &SweepArgs, output_dir: PathBuf) -> ExperimentConfig {
    ExperimentConfig {
        schema_version: SCHEMA_VERSION,
        name: format!("sigma sweep, {} N={}", MeshFamily::from(args.family), args.n),
        geometry: Geometry::Rect { lx: 1.0, ly: 1.1 },
        family: args.family.into(),
        levels: vec![args.n],
        material: Material { rho: 1.0, c: 1.0 },
        stabilization: StabilizationConfig {
            sigma: args.sigma.clone(),
            tau: args.tau,
        },
        n_ev: args.n_ev,
        normalize: true,
        reference: Some(ReferenceConfig::Exact {
            count: args.reference_count,
        }),
        fit: FitMode::Reference,
        n_track: 0,
        match_rtol: DEFAULT_MATCH_RTOL,
        error_modes: Vec::new(),
        vtk: false,
        output_dir,
        seed: args.seed,
    }
}

fn print_outcome(outcome: &ExperimentOutcome) {
    for run in &outcome.runs {
        println!("{} (sigma = {})", outcome.name, run.sigma);
        print!("{}", run.report.table());
        for e in &run.errors {
            println!(
                "mode ({}, {}): L2 order {:?}, H1 order {:?}",
                e.n, e.m, e.l2_order, e.h1_order
            );
        }
        println!();
    }
}

/// Runs a study and maps failed invariant checks to the exit status.
fn run_study(cfg: &ExperimentConfig) -> Result<ExitCode> {
    let dir = output_dir(&cfg.output_dir);
    let outcome = run_experiment(cfg, Some(&dir))?;
    print_outcome(&outcome);
    eprintln!("wrote {}", dir.display());
    Ok(exit_status(&outcome))
}

fn sweep(args: &SweepArgs) -> Result<ExitCode> {
    let cfg = sweep_config(args, output_dir(&args.out_dir));
    let outcome = run_experiment(&cfg, Some(&cfg.output_dir))?;
    let columns: Vec<(String, &LevelResult)> = outcome
        .runs
        .iter()
        .map(|r| (format!("sigma={}", r.sigma), &r.report.levels[0]))
        .collect();
    println!("{}", outcome.name);
    print!("{}", flagged_table(&columns, &cfg.reference_values()));
    eprintln!("wrote {}", cfg.output_dir.display());
    Ok(exit_status(&outcome))
}

fn exit_status(outcome: &ExperimentOutcome) -> ExitCode {
    let failed: Vec<_> = outcome.failed_checks().collect();
    if failed.is_empty() {
        return ExitCode::SUCCESS;
    }
    for c in failed {
        eprintln!("check failed: {} at level {} (sigma {}): {}", c.name, c.level, c.sigma, c.detail);
    }
    ExitCode::from(CHECKS_FAILED)
}

fn read_levels(path: &Path) -> Result<Vec<(f64, f64)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut levels = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed = match fields.as_slice() {
            [h, l] => h.parse::<f64>().ok().zip(l.parse::<f64>().ok()),
            _ => None,
        };
        match parsed {
            Some(p) => levels.push(p),
            // A header line is allowed before the data.
            None if i == 0 => {}
            None => {
                return Err(Error::Parameter(format!(
                    "{}:{}: expected 'h,lambda', got '{line}'",
                    path.display(),
                    i + 1
                )))
            }
        }
    }
    Ok(levels)
}

fn fit(input: &Path, exact: Option<f64>) -> Result<()> {
    let f = fit_order(&read_levels(input)?, exact)?;
    println!("order {:.4}", f.order);
    println!("extrapolated {}", f.extrapolated);
    println!("residual {:e}", f.residual);
    Ok(())
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::MeshGen { mesh, out } => mesh_gen(&mesh, out.as_deref()).map(|_| ExitCode::SUCCESS),
        Command::Solve(args) => solve(&args).map(|_| ExitCode::SUCCESS),
        Command::SweepSigma(args) => sweep(&args),
        Command::Fit { input, exact } => fit(&input, exact).map(|_| ExitCode::SUCCESS),
        Command::Run { config } => run_study(&ExperimentConfig::load(&config)?),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            let mut msg = format!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                msg.push_str(&format!("\n  caused by: {s}"));
                source = s.source();
            }
            eprintln!("{msg}");
            ExitCode::FAILURE
        }
    }
}
