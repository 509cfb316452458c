//! Mesh file format: a JSON object with `vertices` (coordinate triples),
//! `faces` (0-based vertex loops, counter-clockwise w.r.t. the stored
//! normal), and `cells` (signed 1-based face indices; a negative entry
//! means the stored normal points into the cell).

use super::{compute_geometry, CellFace, IngestMode, MeshError, PolyMesh};
use nalgebra::Point3;
use serde::Deserialize;
use std::path::Path;

#[derive(Deserialize)]
struct MeshFile {
    vertices: Vec<[f64; 3]>,
    faces: Vec<Vec<usize>>,
    cells: Vec<Vec<i64>>,
}

/// Parses a mesh from JSON text and enforces every mesh invariant,
/// combinatorial and geometric.
pub fn parse_mesh(text: &str, mode: IngestMode) -> Result<PolyMesh, MeshError> {
    let file: MeshFile = serde_json::from_str(text)?;
    let n_faces = file.faces.len();
    let vertices: Vec<Point3<f64>> = file
        .vertices
        .into_iter()
        .map(|[x, y, z]| Point3::new(x, y, z))
        .collect();
    let mut cells = Vec::with_capacity(file.cells.len());
    for (ci, raw) in file.cells.into_iter().enumerate() {
        let mut cell = Vec::with_capacity(raw.len());
        for signed in raw {
            let index = signed.unsigned_abs() as usize;
            if signed == 0 || index > n_faces {
                return Err(MeshError::FaceIndexOutOfRange {
                    cell: ci,
                    index: signed,
                    len: n_faces,
                });
            }
            cell.push(CellFace {
                face: index - 1,
                sign: if signed > 0 { 1.0 } else { -1.0 },
            });
        }
        cells.push(cell);
    }
    let mesh = PolyMesh::new(vertices, file.faces, cells, mode)?;
    compute_geometry(&mesh)?;
    Ok(mesh)
}

/// Reads and validates a mesh file from disk.
pub fn load_mesh(path: impl AsRef<Path>, mode: IngestMode) -> Result<PolyMesh, MeshError> {
    let text = std::fs::read_to_string(path)?;
    parse_mesh(&text, mode)
}
