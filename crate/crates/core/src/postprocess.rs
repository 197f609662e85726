//! Element-wise reconstruction of eigenfunctions and field export.

use std::fmt::Write;
use std::path::Path;

use crate::assembly::{DofMap, Materials};
use crate::error::{Error, Result};
use crate::files::write_atomic;
use crate::mesh::{Point2, PolyMesh};
use crate::vem::{LocalVem, ScaledMonomials};

/// Piecewise-linear pressure: scaled-monomial coefficients per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldOnMesh {
    pub eigenvalue: f64,
    pub monomials: Vec<ScaledMonomials>,
    pub coefficients: Vec<[f64; 3]>,
}

impl FieldOnMesh {
    pub fn n_cells(&self) -> usize {
        self.coefficients.len()
    }

    pub fn value(&self, cell: usize, p: Point2) -> f64 {
        self.monomials[cell].combine(&self.coefficients[cell], p)
    }

    pub fn gradient(&self, cell: usize) -> Point2 {
        self.monomials[cell].combine_grad(&self.coefficients[cell])
    }

    /// Value at each cell centroid.
    pub fn centroid_values(&self) -> Vec<f64> {
        self.monomials
            .iter()
            .zip(&self.coefficients)
            .map(|(m, c)| m.combine(c, m.center))
            .collect()
    }
}

/// Piecewise-constant displacement.
#[derive(Debug, Clone, PartialEq)]
pub struct Displacement {
    pub eigenvalue: f64,
    pub vectors: Vec<Point2>,
}

/// Projects the eigenvector onto linears cell by cell.
pub fn reconstruct_pressure(
    elements: &[LocalVem],
    dofmap: &DofMap,
    eigvec: &[f64],
    eigenvalue: f64,
) -> Result<FieldOnMesh> {
    if eigvec.len() != dofmap.n_dofs() || elements.len() != dofmap.n_cells() {
        return Err(Error::Parameter(format!(
            "eigenvector of length {} for {} DOFs and {} elements on {} cells",
            eigvec.len(),
            dofmap.n_dofs(),
            elements.len(),
            dofmap.n_cells()
        )));
    }
    Ok(FieldOnMesh {
        eigenvalue,
        monomials: elements.iter().map(|e| e.monomials).collect(),
        coefficients: elements
            .iter()
            .enumerate()
            .map(|(c, e)| e.project(&dofmap.gather(c, eigvec)))
            .collect(),
    })
}

/// `u = grad p / (rho lambda)` per cell. The constant mode has no
/// displacement.
pub fn recover_displacement(field: &FieldOnMesh, materials: &Materials, tol_zero: f64) -> Result<Displacement> {
    let lambda = field.eigenvalue;
    if !(lambda.is_finite() && lambda.abs() > tol_zero) {
        return Err(Error::ZeroMode(lambda));
    }
    Ok(Displacement {
        eigenvalue: lambda,
        vectors: (0..field.n_cells())
            .map(|c| field.gradient(c) * (1.0 / (materials.get(c).rho * lambda)))
            .collect(),
    })
}

/// One exported mode; the displacement is absent for the constant mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeFields {
    pub pressure: FieldOnMesh,
    pub displacement: Option<Displacement>,
}

/// Legacy ASCII VTK unstructured grid with polygon cells. Each mode adds a
/// `pressure_<k>` scalar (centroid value) and a `displacement_<k>` vector as
/// cell data.
pub fn vtk_string(mesh: &PolyMesh, modes: &[ModeFields]) -> Result<String> {
    if let Some(m) = modes.iter().find(|m| m.pressure.n_cells() != mesh.n_cells()) {
        return Err(Error::Parameter(format!(
            "field has {} cells, mesh has {}",
            m.pressure.n_cells(),
            mesh.n_cells()
        )));
    }
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\nncvem eigenmodes\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    writeln!(s, "POINTS {} double", mesh.n_vertices()).unwrap();
    for p in mesh.vertices() {
        writeln!(s, "{} {} 0", p.x, p.y).unwrap();
    }
    let size: usize = mesh.cells().iter().map(|c| c.len() + 1).sum();
    writeln!(s, "CELLS {} {size}", mesh.n_cells()).unwrap();
    for c in mesh.cells() {
        let ids: Vec<String> = c.iter().map(|i| i.to_string()).collect();
        writeln!(s, "{} {}", c.len(), ids.join(" ")).unwrap();
    }
    writeln!(s, "CELL_TYPES {}", mesh.n_cells()).unwrap();
    for _ in 0..mesh.n_cells() {
        s.push_str("7\n");
    }
    if modes.is_empty() {
        return Ok(s);
    }
    writeln!(s, "CELL_DATA {}", mesh.n_cells()).unwrap();
    for (k, m) in modes.iter().enumerate() {
        writeln!(s, "SCALARS pressure_{} double 1\nLOOKUP_TABLE default", k + 1).unwrap();
        for v in m.pressure.centroid_values() {
            writeln!(s, "{v}").unwrap();
        }
        if let Some(d) = &m.displacement {
            writeln!(s, "VECTORS displacement_{} double", k + 1).unwrap();
            for u in &d.vectors {
                writeln!(s, "{} {} 0", u.x, u.y).unwrap();
            }
        }
    }
    Ok(s)
}

pub fn export_vtk(mesh: &PolyMesh, modes: &[ModeFields], path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path, vtk_string(mesh, modes)?.as_bytes())
}

/// Per-cell coefficients: `p = a0 + a1 (x - xc)/h + a2 (y - yc)/h`, with the
/// displacement when available.
pub fn coefficients_csv(field: &FieldOnMesh, displacement: Option<&Displacement>) -> String {
    let mut s = String::from("cell,xc,yc,h,a0,a1,a2,ux,uy\n");
    for (c, (m, a)) in field.monomials.iter().zip(&field.coefficients).enumerate() {
        let (ux, uy) = match displacement {
            Some(d) => (d.vectors[c].x.to_string(), d.vectors[c].y.to_string()),
            None => (String::new(), String::new()),
        };
        writeln!(
            s,
            "{c},{},{},{},{},{},{},{ux},{uy}",
            m.center.x, m.center.y, m.scale, a[0], a[1], a[2]
        )
        .unwrap();
    }
    s
}
