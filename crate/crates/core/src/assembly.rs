//! Global numbering and assembly of the stiffness and mass forms.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::PolyMesh;
use crate::sparse::CsrMatrix;
use crate::vem::{LocalVem, Material, StabilizationParams};

/// One global DOF per mesh edge: the edge average shared by both neighbours.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DofMap {
    n_dofs: usize,
    cell_dofs: Vec<Vec<usize>>,
}

impl DofMap {
    pub fn new(mesh: &PolyMesh) -> Self {
        Self {
            n_dofs: mesh.n_edges(),
            cell_dofs: (0..mesh.n_cells()).map(|c| mesh.cell_edges(c).to_vec()).collect(),
        }
    }

    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    pub fn n_cells(&self) -> usize {
        self.cell_dofs.len()
    }

    pub fn cell_dofs(&self, c: usize) -> &[usize] {
        &self.cell_dofs[c]
    }

    /// Local DOF vector of cell `c`.
    pub fn gather(&self, c: usize, global: &[f64]) -> Vec<f64> {
        self.cell_dofs[c].iter().map(|&g| global[g]).collect()
    }
}

/// Material table: one value for the whole mesh or one per cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Materials {
    Uniform(Material),
    PerCell(Vec<Material>),
}

impl Materials {
    pub fn get(&self, c: usize) -> Material {
        match self {
            Materials::Uniform(m) => *m,
            Materials::PerCell(v) => v[c],
        }
    }

    fn check(&self, n_cells: usize) -> Result<()> {
        if let Materials::PerCell(v) = self {
            if v.len() != n_cells {
                return Err(Error::Parameter(format!(
                    "material table has {} entries for {n_cells} cells",
                    v.len()
                )));
            }
        }
        Ok(())
    }
}

impl From<Material> for Materials {
    fn from(m: Material) -> Self {
        Materials::Uniform(m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemMatrices {
    /// Stiffness form.
    pub a: CsrMatrix,
    /// Mass form.
    pub m: CsrMatrix,
    /// `A + M`, the coercive shifted form.
    pub ahat: CsrMatrix,
}

impl SystemMatrices {
    pub fn dim(&self) -> usize {
        self.a.dim()
    }
}

/// Local element data for every cell, in cell order.
pub fn local_elements(mesh: &PolyMesh) -> Result<Vec<LocalVem>> {
    let build = |c: usize| LocalVem::new(c, mesh.geometry(c)?);
    #[cfg(feature = "parallel")]
    let out = (0..mesh.n_cells()).into_par_iter().map(build).collect();
    #[cfg(not(feature = "parallel"))]
    let out = (0..mesh.n_cells()).map(build).collect();
    out
}

/// Assembles from precomputed local elements.
pub fn assemble_from(
    elements: &[LocalVem],
    dofmap: &DofMap,
    materials: &Materials,
    stab: &StabilizationParams,
) -> Result<SystemMatrices> {
    stab.validate()?;
    materials.check(dofmap.n_cells())?;
    if elements.len() != dofmap.n_cells() {
        return Err(Error::Parameter(format!(
            "{} local elements for {} cells",
            elements.len(),
            dofmap.n_cells()
        )));
    }
    let local = |c: usize| -> Result<_> {
        let mat = materials.get(c);
        let e = &elements[c];
        Ok((e.stiffness(&mat, stab.sigma)?, e.mass(&mat, stab.tau)?))
    };
    #[cfg(feature = "parallel")]
    let blocks: Result<Vec<_>> = (0..elements.len()).into_par_iter().map(local).collect();
    #[cfg(not(feature = "parallel"))]
    let blocks: Result<Vec<_>> = (0..elements.len()).map(local).collect();
    let blocks = blocks?;

    // Scatter in cell order; CSR construction sums duplicates in that order.
    let cap: usize = blocks.iter().map(|(k, _)| k.len()).sum();
    let mut ta = Vec::with_capacity(cap);
    let mut tm = Vec::with_capacity(cap);
    for (c, (k, m)) in blocks.iter().enumerate() {
        let dofs = dofmap.cell_dofs(c);
        for (i, &gi) in dofs.iter().enumerate() {
            for (j, &gj) in dofs.iter().enumerate() {
                ta.push((gi, gj, k[(i, j)]));
                tm.push((gi, gj, m[(i, j)]));
            }
        }
    }
    let n = dofmap.n_dofs();
    let a = CsrMatrix::from_triplets(n, ta);
    let m = CsrMatrix::from_triplets(n, tm);
    let ahat = a.add_scaled(&m, 1.0);
    Ok(SystemMatrices { a, m, ahat })
}

pub fn assemble(
    mesh: &PolyMesh,
    dofmap: &DofMap,
    materials: &Materials,
    stab: &StabilizationParams,
) -> Result<SystemMatrices> {
    assemble_from(&local_elements(mesh)?, dofmap, materials, stab)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_rect_quads, Point2};

    fn unit_square() -> PolyMesh {
        PolyMesh::new(
            vec![
                Point2::new(0.0, 0.0),
                Point2::new(1.0, 0.0),
                Point2::new(1.0, 1.0),
                Point2::new(0.0, 1.0),
            ],
            vec![vec![0, 1, 2, 3]],
        )
        .unwrap()
    }

    #[test]
    fn dof_counts() {
        assert_eq!(DofMap::new(&generate_rect_quads(8, 8, 1.0, 1.1).unwrap()).n_dofs(), 144);
        assert_eq!(DofMap::new(&unit_square()).n_dofs(), 4);
        assert_eq!(DofMap::new(&generate_rect_quads(2, 1, 2.0, 1.0).unwrap()).n_dofs(), 7);
    }

    #[test]
    fn one_cell_globals_equal_locals() {
        let mesh = unit_square();
        let dm = DofMap::new(&mesh);
        let stab = StabilizationParams::default();
        let mat = Material::default();
        let sys = assemble(&mesh, &dm, &mat.into(), &stab).unwrap();
        let e = LocalVem::new(0, mesh.geometry(0).unwrap()).unwrap();
        let k = e.stiffness(&mat, 1.0).unwrap();
        let m = e.mass(&mat, 1.0).unwrap();
        // Local edge i is global edge cell_edges[i].
        let g = dm.cell_dofs(0);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(sys.a.get(g[i], g[j]), k[(i, j)]);
                assert_eq!(sys.m.get(g[i], g[j]), m[(i, j)]);
            }
        }
    }

    #[test]
    fn material_length_mismatch_is_rejected() {
        let mesh = generate_rect_quads(2, 2, 1.0, 1.0).unwrap();
        let mats = Materials::PerCell(vec![Material::default(); 3]);
        let err = assemble(&mesh, &DofMap::new(&mesh), &mats, &StabilizationParams::default());
        assert!(matches!(err, Err(Error::Parameter(_))));
    }

    #[test]
    fn repeated_assembly_is_bit_identical() {
        let mesh = generate_rect_quads(6, 5, 1.0, 1.1).unwrap();
        let dm = DofMap::new(&mesh);
        let mats = Material::new(2.0, 3.0).unwrap().into();
        let s = StabilizationParams::default();
        assert_eq!(assemble(&mesh, &dm, &mats, &s).unwrap(), assemble(&mesh, &dm, &mats, &s).unwrap());
    }
}
