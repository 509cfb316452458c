//! Structured hexahedral mesh on an axis-aligned box: n^3 cells,
//! 3n^2(n+1) quad faces stored with +axis normals, (n+1)^3 vertices.

use super::{CellFace, IngestMode, MeshError, PolyMesh};
use nalgebra::Point3;

/// Axis-aligned box domain.
#[derive(Clone, Copy, Debug)]
pub struct Aabb {
    pub min: Point3<f64>,
    pub max: Point3<f64>,
}

impl Aabb {
    pub fn unit() -> Self {
        Self {
            min: Point3::origin(),
            max: Point3::new(1.0, 1.0, 1.0),
        }
    }

    pub fn extent(&self) -> [f64; 3] {
        [
            self.max.x - self.min.x,
            self.max.y - self.min.y,
            self.max.z - self.min.z,
        ]
    }
}

/// Uniform n x n x n hexahedral mesh of `domain`. Faces are grouped by
/// normal axis (x planes, then y, then z); cells are indexed x-fastest.
pub fn gen_cube_mesh(n: usize, domain: Aabb) -> Result<PolyMesh, MeshError> {
    if n == 0 {
        return Err(MeshError::ZeroResolution);
    }
    let np = n + 1;
    let vid = |i: usize, j: usize, k: usize| i + np * (j + np * k);
    let ext = domain.extent();
    let coord = |axis: usize, idx: usize| {
        domain.min[axis] + ext[axis] * (idx as f64 / n as f64)
    };
    let mut vertices = Vec::with_capacity(np * np * np);
    for k in 0..np {
        for j in 0..np {
            for i in 0..np {
                vertices.push(Point3::new(coord(0, i), coord(1, j), coord(2, k)));
            }
        }
    }
    let per_axis = np * n * n;
    let fx = |i: usize, j: usize, k: usize| i * n * n + j * n + k;
    let fy = |j: usize, i: usize, k: usize| per_axis + j * n * n + i * n + k;
    let fz = |k: usize, i: usize, j: usize| 2 * per_axis + k * n * n + i * n + j;

    let mut faces = vec![Vec::new(); 3 * per_axis];
    for i in 0..np {
        for j in 0..n {
            for k in 0..n {
                faces[fx(i, j, k)] =
                    vec![vid(i, j, k), vid(i, j + 1, k), vid(i, j + 1, k + 1), vid(i, j, k + 1)];
            }
        }
    }
    for j in 0..np {
        for i in 0..n {
            for k in 0..n {
                faces[fy(j, i, k)] =
                    vec![vid(i, j, k), vid(i, j, k + 1), vid(i + 1, j, k + 1), vid(i + 1, j, k)];
            }
        }
    }
    for k in 0..np {
        for i in 0..n {
            for j in 0..n {
                faces[fz(k, i, j)] =
                    vec![vid(i, j, k), vid(i + 1, j, k), vid(i + 1, j + 1, k), vid(i, j + 1, k)];
            }
        }
    }

    let mut cells = Vec::with_capacity(n * n * n);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                cells.push(vec![
                    CellFace { face: fx(i, j, k), sign: -1.0 },
                    CellFace { face: fx(i + 1, j, k), sign: 1.0 },
                    CellFace { face: fy(j, i, k), sign: -1.0 },
                    CellFace { face: fy(j + 1, i, k), sign: 1.0 },
                    CellFace { face: fz(k, i, j), sign: -1.0 },
                    CellFace { face: fz(k + 1, i, j), sign: 1.0 },
                ]);
            }
        }
    }

    PolyMesh::new(vertices, faces, cells, IngestMode::Strict)
}
