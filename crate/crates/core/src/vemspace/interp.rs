//! Interpolation of exact fields into the discrete spaces: every dof is a
//! moment, evaluated here by quadrature of degree 2k+4 on the
//! sub-tessellation.

use super::{DofLayout, VemError};
use crate::mesh::{FaceGeometry, GeometryCache, PolyMesh, SubTessellation};
use crate::poly::{
    gperp_generators, indices_up_to_3d, tetrahedron_rule, triangle_rule, MonomialBasis3,
};
use nalgebra::{Point3, Vector3};

fn quad_degree(order: u32) -> u32 {
    2 * order + 4
}

/// Normalized face moments `(1/|f|) ∫_f g m^f_γ` for all γ of degree ≤ k.
pub fn face_scalar_moments(
    tris: &[[Point3<f64>; 3]],
    fg: &FaceGeometry,
    order: u32,
    g: impl Fn(&Point3<f64>) -> f64,
) -> Result<Vec<f64>, VemError> {
    let basis = fg.basis(order);
    let rule = triangle_rule(quad_degree(order))?;
    let mut vals = vec![0.0; basis.len()];
    let mut scratch = vec![0.0; basis.len()];
    for tri in tris {
        for (p, w) in rule.mapped(tri) {
            let gv = g(&p);
            basis.eval_all(&p, &mut scratch);
            for (v, m) in vals.iter_mut().zip(&scratch) {
                *v += w * gv * m;
            }
        }
    }
    vals.iter_mut().for_each(|v| *v /= fg.area);
    Ok(vals)
}

/// Velocity interpolant: all global velocity dofs of the exact field.
/// Face dofs are taken against the stored face normal.
pub fn interpolate_velocity(
    mesh: &PolyMesh,
    geom: &GeometryCache,
    tess: &SubTessellation,
    layout: &DofLayout,
    v: impl Fn(&Point3<f64>) -> Vector3<f64>,
) -> Result<Vec<f64>, VemError> {
    let k = layout.order();
    let mut dofs = vec![0.0; layout.n_velocity()];
    for f in 0..mesh.n_faces() {
        let fg = &geom.faces[f];
        let tris = tess.face_triangles(f);
        let moments = face_scalar_moments(&tris, fg, k, |p| v(p).dot(&fg.normal))?;
        for (j, m) in moments.iter().enumerate() {
            dofs[layout.face_dof(f, j)] = *m;
        }
    }

    let rule = tetrahedron_rule(quad_degree(k))?;
    let idx_km1 = indices_up_to_3d(k - 1);
    let gens = gperp_generators(k);
    for c in 0..mesh.n_cells() {
        let cg = &geom.cells[c];
        let basis = MonomialBasis3::new(k, cg.centroid, cg.diameter);
        let mut grad = vec![0.0; layout.grad_block];
        let mut cross = vec![0.0; layout.cross_block];
        for tet in &tess.cell_tetrahedra(c) {
            for (p, w) in rule.mapped(tet) {
                let val = v(&p);
                for (i, alpha) in idx_km1.iter().enumerate().skip(1) {
                    grad[i - 1] += w * val.dot(&basis.eval_grad(*alpha, &p));
                }
                for (j, m) in gens.generators().iter().enumerate() {
                    cross[j] += w * val.dot(&m.eval_cross(&basis, &p));
                }
            }
        }
        for (i, gv) in grad.iter().enumerate() {
            dofs[layout.grad_dof(c, i)] = gv * cg.diameter / cg.volume;
        }
        for (j, cv) in cross.iter().enumerate() {
            dofs[layout.cross_dof(c, j)] = cv / cg.volume;
        }
    }
    Ok(dofs)
}

/// Pressure interpolant: per-cell moment dofs `(1/|P|) ∫_P q m_γ`,
/// γ of degree ≤ k−1, indexed `cell·pressure_block + rank(γ)`.
pub fn interpolate_pressure(
    geom: &GeometryCache,
    tess: &SubTessellation,
    layout: &DofLayout,
    q: impl Fn(&Point3<f64>) -> f64,
) -> Result<Vec<f64>, VemError> {
    let k = layout.order();
    let rule = tetrahedron_rule(quad_degree(k))?;
    let idx = indices_up_to_3d(k - 1);
    let mut dofs = vec![0.0; geom.cells.len() * layout.pressure_block];
    for (c, cg) in geom.cells.iter().enumerate() {
        let basis = MonomialBasis3::new(k - 1, cg.centroid, cg.diameter);
        let mut vals = vec![0.0; idx.len()];
        for tet in &tess.cell_tetrahedra(c) {
            for (p, w) in rule.mapped(tet) {
                let qv = q(&p);
                for (i, alpha) in idx.iter().enumerate() {
                    vals[i] += w * qv * basis.eval_index(*alpha, &p);
                }
            }
        }
        for (i, v) in vals.iter().enumerate() {
            dofs[c * layout.pressure_block + i] = v / cg.volume;
        }
    }
    Ok(dofs)
}
