//! Derived mesh geometry: face areas, normals, centroids and in-plane
//! frames; cell volumes, centroids and diameters. Computing the cache also
//! enforces the geometric mesh invariants (planarity within the ingest
//! tolerance, positive measures, closed cell boundaries).

use super::{MeshError, PolyMesh};
use crate::poly::MonomialBasis2;
use nalgebra::{Matrix2, Point3, Vector3};

/// Faces whose principal-extent ratio exceeds this use inertia-aligned frame
/// axes with per-axis scales; below it the plain first-edge frame with the
/// isotropic diameter scale is kept (identical to the historical convention).
const FRAME_ANISOTROPY_SWITCH: f64 = 10.0;

#[derive(Clone, Debug)]
pub struct FaceGeometry {
    pub centroid: Point3<f64>,
    /// Unit normal of the stored loop orientation (not outward per se; the
    /// outward normal of a cell is `sign * normal`).
    pub normal: Vector3<f64>,
    pub area: f64,
    pub diameter: f64,
    /// Orthonormal in-plane frame: first axis along the first loop edge and
    /// second axis `normal x first`, except on high-aspect faces where the
    /// axes are the principal inertia directions (still right-handed).
    pub frame: [Vector3<f64>; 2],
    /// Per-axis length scales of the face monomial basis. Equal to the
    /// diameter on ordinary faces; on high-aspect faces they are the
    /// principal extents, which keeps face Gram matrices well conditioned
    /// regardless of aspect ratio.
    pub scales: [f64; 2],
}

impl FaceGeometry {
    /// The scaled monomial basis every face computation must share.
    pub fn basis(&self, degree: u32) -> MonomialBasis2 {
        MonomialBasis2::anisotropic(degree, self.centroid, self.scales, self.frame)
    }
}

#[derive(Clone, Debug)]
pub struct CellGeometry {
    pub centroid: Point3<f64>,
    pub volume: f64,
    pub diameter: f64,
}

#[derive(Clone, Debug)]
pub struct GeometryCache {
    pub faces: Vec<FaceGeometry>,
    pub cells: Vec<CellGeometry>,
}

fn max_pairwise_distance(points: &[Point3<f64>]) -> f64 {
    let mut d = 0.0f64;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            d = d.max((a - b).norm());
        }
    }
    d
}

fn face_geometry(mesh: &PolyMesh, f: usize) -> Result<(FaceGeometry, Vector3<f64>), MeshError> {
    let loop_: Vec<Point3<f64>> = mesh.face_loop(f).iter().map(|&v| mesh.vertex(v)).collect();
    let m = loop_.len();
    let c0 = Point3::from(loop_.iter().map(|p| p.coords).sum::<Vector3<f64>>() / m as f64);
    let diameter = max_pairwise_distance(&loop_);

    let mut vector_area = Vector3::zeros();
    let mut area = 0.0;
    let mut centroid = Vector3::zeros();
    for i in 0..m {
        let (p, q) = (loop_[i], loop_[(i + 1) % m]);
        let a = 0.5 * (p - c0).cross(&(q - c0));
        vector_area += a;
        let s = a.norm();
        area += s;
        centroid += s * (c0.coords + p.coords + q.coords) / 3.0;
    }
    if !(area > 1e-12 * diameter * diameter) || vector_area.norm() == 0.0 {
        return Err(MeshError::DegenerateFace { face: f, area });
    }
    let centroid = Point3::from(centroid / area);
    let normal = vector_area.normalize();

    let tolerance = mesh.ingest_mode().planarity_rtol() * diameter;
    let deviation = loop_
        .iter()
        .map(|p| (p - centroid).dot(&normal).abs())
        .fold(0.0, f64::max);
    if deviation > tolerance {
        return Err(MeshError::NonPlanarFace {
            face: f,
            deviation,
            tolerance,
        });
    }

    let e = loop_[1] - loop_[0];
    let t1 = (e - e.dot(&normal) * normal).normalize();
    let t2 = normal.cross(&t1);

    // Second moments about the centroid in frame coordinates, exact via the
    // three-midpoint rule on the same fan triangles used for the area.
    let (mut m11, mut m12, mut m22) = (0.0, 0.0, 0.0);
    for i in 0..m {
        let (p, q) = (loop_[i], loop_[(i + 1) % m]);
        let w = (p - c0).cross(&(q - c0)).norm() / 6.0;
        let mids = [
            Point3::from(0.5 * (c0.coords + p.coords)),
            Point3::from(0.5 * (p.coords + q.coords)),
            Point3::from(0.5 * (q.coords + c0.coords)),
        ];
        for mid in mids {
            let d = mid - centroid;
            let (xi, eta) = (t1.dot(&d), t2.dot(&d));
            m11 += w * xi * xi;
            m12 += w * xi * eta;
            m22 += w * eta * eta;
        }
    }
    let eig = Matrix2::new(m11, m12, m12, m22).symmetric_eigen();
    let (lo, hi) = if eig.eigenvalues[0] <= eig.eigenvalues[1] {
        (0, 1)
    } else {
        (1, 0)
    };
    let (lmin, lmax) = (eig.eigenvalues[lo].max(0.0), eig.eigenvalues[hi]);

    let (frame, scales) = if lmin > lmax / (FRAME_ANISOTROPY_SWITCH * FRAME_ANISOTROPY_SWITCH) {
        ([t1, t2], [diameter, diameter])
    } else {
        let v = eig.eigenvectors.column(hi);
        let u1 = (v[0] * t1 + v[1] * t2).normalize();
        let u2 = normal.cross(&u1);
        // sqrt(3 lambda / area) is the half-extent of the calibrating
        // rectangle; floor the thin axis to keep the scale positive.
        let s1 = (3.0 * lmax / area).sqrt();
        let s2 = (3.0 * lmin / area).sqrt().max(1e-9 * diameter);
        ([u1, u2], [s1, s2])
    };
    Ok((
        FaceGeometry {
            centroid,
            normal,
            area,
            diameter,
            frame,
            scales,
        },
        vector_area,
    ))
}

/// Computes all face and cell geometry, enforcing the geometric invariants.
pub fn compute_geometry(mesh: &PolyMesh) -> Result<GeometryCache, MeshError> {
    let mut faces = Vec::with_capacity(mesh.n_faces());
    let mut vector_areas = Vec::with_capacity(mesh.n_faces());
    for f in 0..mesh.n_faces() {
        let (geom, va) = face_geometry(mesh, f)?;
        faces.push(geom);
        vector_areas.push(va);
    }

    let mut cells = Vec::with_capacity(mesh.n_cells());
    for c in 0..mesh.n_cells() {
        let verts: Vec<Point3<f64>> = mesh
            .cell_vertices(c)
            .into_iter()
            .map(|v| mesh.vertex(v))
            .collect();
        let diameter = max_pairwise_distance(&verts);
        let origin =
            Point3::from(verts.iter().map(|p| p.coords).sum::<Vector3<f64>>() / verts.len() as f64);

        let mut closure_defect = Vector3::zeros();
        let mut volume = 0.0;
        let mut centroid = Vector3::zeros();
        for cf in mesh.cell_faces(c) {
            closure_defect += cf.sign * vector_areas[cf.face];
            let loop_ = mesh.face_loop(cf.face);
            let xf = faces[cf.face].centroid;
            let m = loop_.len();
            for i in 0..m {
                let (p, q) = (mesh.vertex(loop_[i]), mesh.vertex(loop_[(i + 1) % m]));
                let v = cf.sign * (xf - origin).dot(&(p - origin).cross(&(q - origin))) / 6.0;
                volume += v;
                centroid += v * (origin.coords + xf.coords + p.coords + q.coords) / 4.0;
            }
        }
        let tolerance = 1e-10 * diameter * diameter;
        if closure_defect.norm() > tolerance {
            return Err(MeshError::CellNotClosed {
                cell: c,
                defect: closure_defect.norm(),
                tolerance,
            });
        }
        if !(volume > 0.0) {
            return Err(MeshError::NonPositiveVolume { cell: c, volume });
        }
        cells.push(CellGeometry {
            centroid: Point3::from(centroid / volume),
            volume,
            diameter,
        });
    }
    Ok(GeometryCache { faces, cells })
}

/// Mean cell diameter, the resolution parameter reported by the harness.
pub fn mesh_size(mesh: &PolyMesh, geom: &GeometryCache) -> f64 {
    debug_assert_eq!(mesh.n_cells(), geom.cells.len());
    geom.cells.iter().map(|c| c.diameter).sum::<f64>() / geom.cells.len() as f64
}
