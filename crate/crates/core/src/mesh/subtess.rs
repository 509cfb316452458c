//! Tetrahedral sub-tessellation backing all quadrature: every face is
//! fanned into triangles from its centroid, every cell into tetrahedra by
//! coning those triangles to the cell centroid.

use super::{GeometryCache, MeshError, PolyMesh};
use nalgebra::Point3;

#[derive(Clone, Debug)]
pub struct SubTessellation {
    points: Vec<Point3<f64>>,
    face_tris: Vec<Vec<[usize; 3]>>,
    cell_tets: Vec<Vec<[usize; 4]>>,
}

impl SubTessellation {
    pub fn point(&self, i: usize) -> Point3<f64> {
        self.points[i]
    }

    pub fn face_triangles(&self, f: usize) -> Vec<[Point3<f64>; 3]> {
        self.face_tris[f]
            .iter()
            .map(|t| t.map(|i| self.points[i]))
            .collect()
    }

    pub fn cell_tetrahedra(&self, c: usize) -> Vec<[Point3<f64>; 4]> {
        self.cell_tets[c]
            .iter()
            .map(|t| t.map(|i| self.points[i]))
            .collect()
    }
}

fn tet_volume(t: &[Point3<f64>; 4]) -> f64 {
    (t[1] - t[0]).dot(&(t[2] - t[0]).cross(&(t[3] - t[0]))) / 6.0
}

/// Builds the sub-tessellation and cross-checks its measures against the
/// geometry cache (triangle areas against |f|, tet volumes against |P|).
pub fn sub_tessellate(mesh: &PolyMesh, geom: &GeometryCache) -> Result<SubTessellation, MeshError> {
    let nv = mesh.n_vertices();
    let nf = mesh.n_faces();
    let mut points: Vec<Point3<f64>> = mesh.vertices().to_vec();
    points.extend(geom.faces.iter().map(|f| f.centroid));
    points.extend(geom.cells.iter().map(|c| c.centroid));

    let mut face_tris = Vec::with_capacity(nf);
    for f in 0..nf {
        let loop_ = mesh.face_loop(f);
        let m = loop_.len();
        let c = nv + f;
        let tris: Vec<[usize; 3]> = (0..m).map(|i| [c, loop_[i], loop_[(i + 1) % m]]).collect();
        let area: f64 = tris
            .iter()
            .map(|t| {
                let [a, b, d] = t.map(|i| points[i]);
                0.5 * (b - a).cross(&(d - a)).norm()
            })
            .sum();
        if (area - geom.faces[f].area).abs() > 1e-10 * geom.faces[f].area {
            return Err(MeshError::DegenerateFace { face: f, area });
        }
        face_tris.push(tris);
    }

    let mut cell_tets = Vec::with_capacity(mesh.n_cells());
    for c in 0..mesh.n_cells() {
        let apex = nv + nf + c;
        let mut tets = Vec::new();
        for cf in mesh.cell_faces(c) {
            for tri in &face_tris[cf.face] {
                let mut tet = [apex, tri[0], tri[1], tri[2]];
                if cf.sign < 0.0 {
                    tet.swap(2, 3);
                }
                let vol = tet_volume(&tet.map(|i| points[i]));
                // Coning an outward-oriented triangle to an interior point
                // gives positive volume for star-shaped cells; anything else
                // would silently corrupt every integral downstream.
                if vol <= 0.0 {
                    return Err(MeshError::NonPositiveVolume { cell: c, volume: vol });
                }
                tets.push(tet);
            }
        }
        let volume: f64 = tets.iter().map(|t| tet_volume(&t.map(|i| points[i]))).sum();
        if (volume - geom.cells[c].volume).abs() > 1e-10 * geom.cells[c].volume {
            return Err(MeshError::NonPositiveVolume { cell: c, volume });
        }
        cell_tets.push(tets);
    }

    Ok(SubTessellation {
        points,
        face_tris,
        cell_tets,
    })
}

#[cfg(test)]
mod tests {
    use super::super::io::parse_mesh;
    use super::super::tests::CUBE_JSON;
    use super::super::{compute_geometry, gen_cube_mesh, Aabb, IngestMode};
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cube_fans_into_24_positive_tets() {
        let mesh = parse_mesh(CUBE_JSON, IngestMode::Strict).unwrap();
        let geom = compute_geometry(&mesh).unwrap();
        let tess = sub_tessellate(&mesh, &geom).unwrap();
        let tets = tess.cell_tetrahedra(0);
        assert_eq!(tets.len(), 24);
        let total: f64 = tets.iter().map(tet_volume).sum();
        assert_relative_eq!(total, 1.0, epsilon = 1e-13);
        assert!(tets.iter().all(|t| tet_volume(t) > 0.0));
    }

    #[test]
    fn tetrahedral_cell_volume_is_reproduced() {
        let mesh = parse_mesh(super::super::tests::TETRA_JSON, IngestMode::Strict).unwrap();
        let geom = compute_geometry(&mesh).unwrap();
        let tess = sub_tessellate(&mesh, &geom).unwrap();
        let total: f64 = tess.cell_tetrahedra(0).iter().map(tet_volume).sum();
        assert_relative_eq!(total, 1.0 / 6.0, epsilon = 1e-14);
    }

    #[test]
    fn generated_meshes_tessellate_to_the_domain_volume() {
        let mesh = gen_cube_mesh(3, Aabb::unit()).unwrap();
        let geom = compute_geometry(&mesh).unwrap();
        let tess = sub_tessellate(&mesh, &geom).unwrap();
        let mut total = 0.0;
        for c in 0..mesh.n_cells() {
            total += tess.cell_tetrahedra(c).iter().map(tet_volume).sum::<f64>();
        }
        assert_relative_eq!(total, 1.0, epsilon = 1e-12);
        for f in 0..mesh.n_faces() {
            let area: f64 = tess
                .face_triangles(f)
                .iter()
                .map(|t| 0.5 * (t[1] - t[0]).cross(&(t[2] - t[0])).norm())
                .sum();
            assert_relative_eq!(area, geom.faces[f].area, epsilon = 1e-13);
        }
    }
}
