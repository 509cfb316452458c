//! Integration over cells (as collections of tetrahedra) and faces (as
//! collections of triangles), plus per-cell and per-face monomial moment
//! tables. A moment table turns every later polynomial integral into a
//! coefficient lookup, so quadrature only ever touches plain monomials and
//! user-supplied point evaluations.

use nalgebra::Point3;

use super::basis::{MonomialBasis2, MonomialBasis3, Poly2, Poly3};
use super::multiindex::{indices_up_to_2d, indices_up_to_3d, MultiIndex2, MultiIndex3};
use super::quadrature::{tetrahedron_rule, triangle_rule, QuadratureError};

/// `∫ f` over the union of tetrahedra, exact for polynomial `f` of total
/// degree ≤ `degree`.
pub fn integrate_cell_fn<F: FnMut(&Point3<f64>) -> f64>(
    tets: &[[Point3<f64>; 4]],
    degree: u32,
    mut f: F,
) -> Result<f64, QuadratureError> {
    let rule = tetrahedron_rule(degree)?;
    let mut sum = 0.0;
    for tet in tets {
        for (p, w) in rule.mapped(tet) {
            sum += w * f(&p);
        }
    }
    Ok(sum)
}

/// `∫ f` over the union of triangles, exact for polynomial `f` of total
/// degree ≤ `degree` in the face plane.
pub fn integrate_face_fn<F: FnMut(&Point3<f64>) -> f64>(
    tris: &[[Point3<f64>; 3]],
    degree: u32,
    mut f: F,
) -> Result<f64, QuadratureError> {
    let rule = triangle_rule(degree)?;
    let mut sum = 0.0;
    for tri in tris {
        for (p, w) in rule.mapped(tri) {
            sum += w * f(&p);
        }
    }
    Ok(sum)
}

/// Integrate a coefficient-table polynomial over a cell.
pub fn integrate_cell(
    tets: &[[Point3<f64>; 4]],
    poly: &Poly3,
    basis: &MonomialBasis3,
) -> Result<f64, QuadratureError> {
    let idx = indices_up_to_3d(poly.degree);
    integrate_cell_fn(tets, poly.degree, |p| {
        idx.iter()
            .zip(&poly.coeffs)
            .map(|(a, c)| c * basis.eval_index(*a, p))
            .sum()
    })
}

/// Integrate a face-frame coefficient-table polynomial over a face.
pub fn integrate_face(
    tris: &[[Point3<f64>; 3]],
    poly: &Poly2,
    basis: &MonomialBasis2,
) -> Result<f64, QuadratureError> {
    let idx = indices_up_to_2d(poly.degree);
    integrate_face_fn(tris, poly.degree, |p| {
        idx.iter()
            .zip(&poly.coeffs)
            .map(|(b, c)| c * basis.eval_index(*b, p))
            .sum()
    })
}

/// Moments `∫_P m_α` for all `|α| ≤ degree`, in graded-lex order.
#[derive(Clone, Debug)]
pub struct CellMoments {
    pub degree: u32,
    pub values: Vec<f64>,
}

impl CellMoments {
    pub fn compute(
        tets: &[[Point3<f64>; 4]],
        center: Point3<f64>,
        h: f64,
        degree: u32,
    ) -> Result<Self, QuadratureError> {
        let basis = MonomialBasis3::new(degree, center, h);
        let rule = tetrahedron_rule(degree)?;
        let mut values = vec![0.0; basis.len()];
        let mut scratch = vec![0.0; basis.len()];
        for tet in tets {
            for (p, w) in rule.mapped(tet) {
                basis.eval_all(&p, &mut scratch);
                for (v, s) in values.iter_mut().zip(&scratch) {
                    *v += w * s;
                }
            }
        }
        Ok(Self { degree, values })
    }

    pub fn value(&self, alpha: MultiIndex3) -> f64 {
        self.values[alpha.rank()]
    }

    /// `∫_P m_α m_β` by exponent addition.
    pub fn product(&self, alpha: MultiIndex3, beta: MultiIndex3) -> f64 {
        self.value(alpha.sum(&beta))
    }
}

/// Moments `∫_f m^f_β` for all `|β| ≤ degree`, in graded-lex order.
#[derive(Clone, Debug)]
pub struct FaceMoments {
    pub degree: u32,
    pub values: Vec<f64>,
}

impl FaceMoments {
    pub fn compute(
        tris: &[[Point3<f64>; 3]],
        basis_at_degree: &MonomialBasis2,
    ) -> Result<Self, QuadratureError> {
        let degree = basis_at_degree.degree;
        let rule = triangle_rule(degree)?;
        let mut values = vec![0.0; basis_at_degree.len()];
        let mut scratch = vec![0.0; basis_at_degree.len()];
        for tri in tris {
            for (p, w) in rule.mapped(tri) {
                basis_at_degree.eval_all(&p, &mut scratch);
                for (v, s) in values.iter_mut().zip(&scratch) {
                    *v += w * s;
                }
            }
        }
        Ok(Self { degree, values })
    }

    pub fn value(&self, beta: MultiIndex2) -> f64 {
        self.values[beta.rank()]
    }

    pub fn product(&self, alpha: MultiIndex2, beta: MultiIndex2) -> f64 {
        self.value(alpha.sum(&beta))
    }
}
