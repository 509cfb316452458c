//! Polyhedral mesh data model: vertices, oriented polygonal faces shared
//! between cells, JSON ingestion, structured cube generation, cached
//! geometry, and the tetrahedral sub-tessellation used by quadrature.

mod gen;
mod geometry;
mod io;
mod subtess;

pub use gen::{gen_cube_mesh, Aabb};
pub use geometry::{compute_geometry, mesh_size, CellGeometry, FaceGeometry, GeometryCache};
pub use io::{load_mesh, parse_mesh};
pub use subtess::{sub_tessellate, SubTessellation};

use nalgebra::Point3;
use thiserror::Error;

/// How strictly ingested geometry is checked. `Strict` holds faces to
/// construction-exact planarity (1e-10·h_f); `Lenient` tolerates the
/// round-off found in externally generated Voronoi files (1e-6·h_f) and
/// integrates such faces over their triangulation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum IngestMode {
    Strict,
    #[default]
    Lenient,
}

impl IngestMode {
    pub fn planarity_rtol(self) -> f64 {
        match self {
            IngestMode::Strict => 1e-10,
            IngestMode::Lenient => 1e-6,
        }
    }
}

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("failed to read mesh file: {0}")]
    Io(#[from] std::io::Error),
    #[error("failed to parse mesh file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("face {face} references vertex {index} but the mesh has {len} vertices")]
    VertexIndexOutOfRange { face: usize, index: usize, len: usize },
    #[error("cell {cell} references face {index} but the mesh has {len} faces (face indices are signed and 1-based)")]
    FaceIndexOutOfRange { cell: usize, index: i64, len: usize },
    #[error("face {face} loop has repeated or too few vertices ({distinct} distinct); loops need at least 3 distinct vertices and no repeats")]
    FaceTooFewVertices { face: usize, distinct: usize },
    #[error("face {face} is referenced by {count} cells; every face must have 1 or 2 incident cells")]
    FaceIncidence { face: usize, count: usize },
    #[error("interior face {face} has the same orientation sign in both incident cells")]
    InconsistentOrientation { face: usize },
    #[error("face {face} deviates from planarity by {deviation:.3e} (tolerance {tolerance:.3e})")]
    NonPlanarFace {
        face: usize,
        deviation: f64,
        tolerance: f64,
    },
    #[error("face {face} is degenerate: area {area:.3e}")]
    DegenerateFace { face: usize, area: f64 },
    #[error("cell {cell} has non-positive volume {volume:.3e}")]
    NonPositiveVolume { cell: usize, volume: f64 },
    #[error("cell {cell} is not closed: signed face-area vectors sum to {defect:.3e} (tolerance {tolerance:.3e})")]
    CellNotClosed {
        cell: usize,
        defect: f64,
        tolerance: f64,
    },
    #[error("cube mesh resolution must be at least 1")]
    ZeroResolution,
    #[error("mesh has no cells")]
    Empty,
}

/// One face of a cell: index into the shared face list plus the orientation
/// sign relating the stored loop normal to this cell's outward normal.
#[derive(Clone, Copy, Debug)]
pub struct CellFace {
    pub face: usize,
    pub sign: f64,
}

/// Polyhedral mesh. Face loops are counter-clockwise with respect to their
/// stored normal; each interior face is shared by exactly two cells with
/// opposite signs.
#[derive(Clone, Debug)]
pub struct PolyMesh {
    vertices: Vec<Point3<f64>>,
    faces: Vec<Vec<usize>>,
    cells: Vec<Vec<CellFace>>,
    boundary: Vec<bool>,
    mode: IngestMode,
}

impl PolyMesh {
    /// Builds a mesh and runs the combinatorial invariants. Geometric
    /// invariants (planarity, closedness) are enforced by
    /// [`compute_geometry`]; [`load_mesh`] runs both.
    pub fn new(
        vertices: Vec<Point3<f64>>,
        faces: Vec<Vec<usize>>,
        cells: Vec<Vec<CellFace>>,
        mode: IngestMode,
    ) -> Result<Self, MeshError> {
        if cells.is_empty() {
            return Err(MeshError::Empty);
        }
        for (fi, loop_) in faces.iter().enumerate() {
            for &v in loop_ {
                if v >= vertices.len() {
                    return Err(MeshError::VertexIndexOutOfRange {
                        face: fi,
                        index: v,
                        len: vertices.len(),
                    });
                }
            }
            let mut distinct = loop_.clone();
            distinct.sort_unstable();
            distinct.dedup();
            if distinct.len() < 3 || distinct.len() != loop_.len() {
                return Err(MeshError::FaceTooFewVertices {
                    face: fi,
                    distinct: distinct.len(),
                });
            }
        }
        let mut incidence: Vec<Vec<f64>> = vec![Vec::new(); faces.len()];
        for cell in &cells {
            for cf in cell {
                incidence[cf.face].push(cf.sign);
            }
        }
        let mut boundary = vec![false; faces.len()];
        for (fi, signs) in incidence.iter().enumerate() {
            match signs.len() {
                1 => boundary[fi] = true,
                2 => {
                    if signs[0] * signs[1] > 0.0 {
                        return Err(MeshError::InconsistentOrientation { face: fi });
                    }
                }
                n => return Err(MeshError::FaceIncidence { face: fi, count: n }),
            }
        }
        Ok(Self {
            vertices,
            faces,
            cells,
            boundary,
            mode,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn vertex(&self, i: usize) -> Point3<f64> {
        self.vertices[i]
    }

    pub fn vertices(&self) -> &[Point3<f64>] {
        &self.vertices
    }

    pub fn face_loop(&self, f: usize) -> &[usize] {
        &self.faces[f]
    }

    pub fn cell_faces(&self, c: usize) -> &[CellFace] {
        &self.cells[c]
    }

    pub fn is_boundary_face(&self, f: usize) -> bool {
        self.boundary[f]
    }

    pub fn boundary_faces(&self) -> impl Iterator<Item = usize> + '_ {
        self.boundary
            .iter()
            .enumerate()
            .filter_map(|(f, &b)| b.then_some(f))
    }

    pub fn ingest_mode(&self) -> IngestMode {
        self.mode
    }

    /// Distinct vertices of one cell, ascending.
    pub fn cell_vertices(&self, c: usize) -> Vec<usize> {
        let mut vs: Vec<usize> = self.cells[c]
            .iter()
            .flat_map(|cf| self.faces[cf.face].iter().copied())
            .collect();
        vs.sort_unstable();
        vs.dedup();
        vs
    }

    /// Applies `f` to every vertex; geometry caches must be recomputed.
    pub fn map_vertices(&mut self, f: impl Fn(Point3<f64>) -> Point3<f64>) {
        for v in &mut self.vertices {
            *v = f(*v);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::io::parse_mesh;
    use super::*;

    pub(crate) use crate::testutil::{CUBE_JSON, TETRA_JSON};

    #[test]
    fn tetrahedron_loads() {
        let mesh = parse_mesh(TETRA_JSON, IngestMode::Strict).unwrap();
        assert_eq!(mesh.n_vertices(), 4);
        assert_eq!(mesh.n_faces(), 4);
        assert_eq!(mesh.n_cells(), 1);
        assert_eq!(mesh.boundary_faces().count(), 4);
    }

    #[test]
    fn face_shared_by_three_cells_is_rejected() {
        let bad = r#"{
            "vertices": [[0,0,0],[1,0,0],[0,1,0],[0,0,1]],
            "faces": [[0,2,1],[0,1,3],[0,3,2],[1,2,3]],
            "cells": [[1,2,3,4],[-1,2,3,4],[1,-2,-3,-4]]
        }"#;
        match parse_mesh(bad, IngestMode::Lenient) {
            Err(MeshError::FaceIncidence { face: 0, count: 3 }) => {}
            other => panic!("expected a three-cell incidence error, got {other:?}"),
        }
    }

    #[test]
    fn same_sign_shared_face_is_rejected() {
        let bad = r#"{
            "vertices": [[0,0,0],[1,0,0],[0,1,0],[0,0,1],[0,0,-1]],
            "faces": [[0,2,1],[0,1,3],[0,3,2],[1,2,3],[0,1,4],[0,4,2],[1,4,2]],
            "cells": [[1,2,3,4],[1,5,6,7]]
        }"#;
        match parse_mesh(bad, IngestMode::Lenient) {
            Err(MeshError::InconsistentOrientation { face: 0 }) => {}
            other => panic!("expected an orientation error, got {other:?}"),
        }
    }

    #[test]
    fn degenerate_loop_is_rejected() {
        let bad = r#"{
            "vertices": [[0,0,0],[1,0,0],[0,1,0],[0,0,1]],
            "faces": [[0,1,1],[0,1,3],[0,3,2],[1,2,3]],
            "cells": [[1,2,3,4]]
        }"#;
        assert!(matches!(
            parse_mesh(bad, IngestMode::Lenient),
            Err(MeshError::FaceTooFewVertices { face: 0, .. })
        ));
    }
}
