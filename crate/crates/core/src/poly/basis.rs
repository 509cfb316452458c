//! Scaled monomial bases on cells and faces, plus coefficient-table
//! polynomials over those bases.

use nalgebra::{Point3, Vector3};

use super::multiindex::{dim_pk, indices_up_to_2d, indices_up_to_3d, MultiIndex2, MultiIndex3};

/// Basis `m_α = ((x − x_P)/h_P)^α`, `|α| ≤ degree`, graded-lex ordered.
#[derive(Clone, Debug)]
pub struct MonomialBasis3 {
    pub degree: u32,
    pub center: Point3<f64>,
    pub h: f64,
    indices: Vec<MultiIndex3>,
}

impl MonomialBasis3 {
    pub fn new(degree: u32, center: Point3<f64>, h: f64) -> Self {
        Self {
            degree,
            center,
            h,
            indices: indices_up_to_3d(degree),
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex3] {
        &self.indices
    }

    pub fn index(&self, i: usize) -> MultiIndex3 {
        self.indices[i]
    }

    /// Scaled local coordinates `(x − x_P)/h_P`.
    pub fn local(&self, p: &Point3<f64>) -> Vector3<f64> {
        (p - self.center) / self.h
    }

    pub fn eval_index(&self, alpha: MultiIndex3, p: &Point3<f64>) -> f64 {
        let s = self.local(p);
        s.x.powi(alpha.0[0] as i32) * s.y.powi(alpha.0[1] as i32) * s.z.powi(alpha.0[2] as i32)
    }

    pub fn eval(&self, i: usize, p: &Point3<f64>) -> f64 {
        self.eval_index(self.indices[i], p)
    }

    /// Values of all basis monomials at `p`, in basis order.
    pub fn eval_all(&self, p: &Point3<f64>, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.len());
        let s = self.local(p);
        let d = self.degree as usize;
        let pow = |v: f64| -> Vec<f64> {
            let mut t = vec![1.0; d + 1];
            for i in 1..=d {
                t[i] = t[i - 1] * v;
            }
            t
        };
        let (px, py, pz) = (pow(s.x), pow(s.y), pow(s.z));
        for (o, a) in out.iter_mut().zip(&self.indices) {
            *o = px[a.0[0] as usize] * py[a.0[1] as usize] * pz[a.0[2] as usize];
        }
    }

    /// Gradient of `m_α` as per-component `(coefficient, lowered index)` terms:
    /// `∂_i m_α = (α_i/h_P) · m_{α − e_i}`.
    pub fn grad_terms(&self, alpha: MultiIndex3) -> [Option<(f64, MultiIndex3)>; 3] {
        let mut out = [None, None, None];
        for axis in 0..3 {
            if let Some(low) = alpha.lowered(axis) {
                out[axis] = Some((alpha.0[axis] as f64 / self.h, low));
            }
        }
        out
    }

    pub fn eval_grad(&self, alpha: MultiIndex3, p: &Point3<f64>) -> Vector3<f64> {
        let mut g = Vector3::zeros();
        for (axis, term) in self.grad_terms(alpha).iter().enumerate() {
            if let Some((c, low)) = term {
                g[axis] = c * self.eval_index(*low, p);
            }
        }
        g
    }

    /// The distinguished vector monomial `m_I = (x − x_P)/h_P`.
    pub fn m_i(&self, p: &Point3<f64>) -> Vector3<f64> {
        self.local(p)
    }
}

/// Basis `m^f_β = ((x̃ − x̃_f)/h_f)^β` in the orthonormal in-plane frame of a
/// face, evaluated directly at 3D points via the frame projection. Each frame
/// axis carries its own length scale so that high-aspect (sliver) faces still
/// produce well-conditioned local Gram matrices; for ordinary faces both
/// scales equal the face diameter.
#[derive(Clone, Debug)]
pub struct MonomialBasis2 {
    pub degree: u32,
    pub origin: Point3<f64>,
    pub scale: [f64; 2],
    pub frame: [Vector3<f64>; 2],
    indices: Vec<MultiIndex2>,
}

impl MonomialBasis2 {
    pub fn new(degree: u32, origin: Point3<f64>, h: f64, frame: [Vector3<f64>; 2]) -> Self {
        Self::anisotropic(degree, origin, [h, h], frame)
    }

    pub fn anisotropic(
        degree: u32,
        origin: Point3<f64>,
        scale: [f64; 2],
        frame: [Vector3<f64>; 2],
    ) -> Self {
        Self {
            degree,
            origin,
            scale,
            frame,
            indices: indices_up_to_2d(degree),
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex2] {
        &self.indices
    }

    /// In-plane coordinates `(X, Y)` of a 3D point, each axis scaled by its
    /// own length.
    pub fn local(&self, p: &Point3<f64>) -> (f64, f64) {
        let d = p - self.origin;
        (
            self.frame[0].dot(&d) / self.scale[0],
            self.frame[1].dot(&d) / self.scale[1],
        )
    }

    pub fn eval_index(&self, beta: MultiIndex2, p: &Point3<f64>) -> f64 {
        let (x, y) = self.local(p);
        x.powi(beta.0[0] as i32) * y.powi(beta.0[1] as i32)
    }

    pub fn eval(&self, i: usize, p: &Point3<f64>) -> f64 {
        self.eval_index(self.indices[i], p)
    }

    pub fn eval_all(&self, p: &Point3<f64>, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.len());
        let (x, y) = self.local(p);
        let d = self.degree as usize;
        let mut px = vec![1.0; d + 1];
        let mut py = vec![1.0; d + 1];
        for i in 1..=d {
            px[i] = px[i - 1] * x;
            py[i] = py[i - 1] * y;
        }
        for (o, b) in out.iter_mut().zip(&self.indices) {
            *o = px[b.0[0] as usize] * py[b.0[1] as usize];
        }
    }
}

/// Polynomial as a coefficient table over the graded-lex 3D monomial basis.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly3 {
    pub degree: u32,
    pub coeffs: Vec<f64>,
}

impl Poly3 {
    pub fn zero(degree: u32) -> Self {
        Self {
            degree,
            coeffs: vec![0.0; dim_pk(degree as i64, 3)],
        }
    }

    pub fn from_coeffs(degree: u32, coeffs: Vec<f64>) -> Self {
        assert_eq!(coeffs.len(), dim_pk(degree as i64, 3));
        Self { degree, coeffs }
    }

    pub fn coeff(&self, alpha: MultiIndex3) -> f64 {
        self.coeffs[alpha.rank()]
    }

    pub fn add_term(&mut self, coeff: f64, alpha: MultiIndex3) {
        self.coeffs[alpha.rank()] += coeff;
    }

    /// Product by multi-index addition; result degree is the sum.
    pub fn mul(&self, other: &Poly3) -> Poly3 {
        let mut out = Poly3::zero(self.degree + other.degree);
        let a_idx = indices_up_to_3d(self.degree);
        let b_idx = indices_up_to_3d(other.degree);
        for (i, ai) in a_idx.iter().enumerate() {
            let ca = self.coeffs[i];
            if ca == 0.0 {
                continue;
            }
            for (j, bj) in b_idx.iter().enumerate() {
                let cb = other.coeffs[j];
                if cb != 0.0 {
                    out.add_term(ca * cb, ai.sum(bj));
                }
            }
        }
        out
    }

    pub fn eval(&self, basis: &MonomialBasis3, p: &Point3<f64>) -> f64 {
        let idx = indices_up_to_3d(self.degree);
        self.coeffs
            .iter()
            .zip(&idx)
            .map(|(c, a)| c * basis.eval_index(*a, p))
            .sum()
    }
}

/// Coefficient table over the graded-lex 2D face basis.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly2 {
    pub degree: u32,
    pub coeffs: Vec<f64>,
}

impl Poly2 {
    pub fn zero(degree: u32) -> Self {
        Self {
            degree,
            coeffs: vec![0.0; dim_pk(degree as i64, 2)],
        }
    }

    pub fn constant(c: f64) -> Self {
        Self {
            degree: 0,
            coeffs: vec![c],
        }
    }

    pub fn add_term(&mut self, coeff: f64, beta: MultiIndex2) {
        self.coeffs[beta.rank()] += coeff;
    }

    pub fn mul(&self, other: &Poly2) -> Poly2 {
        let mut out = Poly2::zero(self.degree + other.degree);
        let a_idx = indices_up_to_2d(self.degree);
        let b_idx = indices_up_to_2d(other.degree);
        for (i, ai) in a_idx.iter().enumerate() {
            let ca = self.coeffs[i];
            if ca == 0.0 {
                continue;
            }
            for (j, bj) in b_idx.iter().enumerate() {
                let cb = other.coeffs[j];
                if cb != 0.0 {
                    out.add_term(ca * cb, ai.sum(bj));
                }
            }
        }
        out
    }

    pub fn eval_local(&self, x: f64, y: f64) -> f64 {
        indices_up_to_2d(self.degree)
            .iter()
            .zip(&self.coeffs)
            .map(|(b, c)| c * x.powi(b.0[0] as i32) * y.powi(b.0[1] as i32))
            .sum()
    }
}

/// Expansion of a cell monomial restricted to a face, as a polynomial in the
/// face coordinates: on the face plane `x = x̃_f + s₁ X t₁ + s₂ Y t₂`, so
/// `m_α|_f = Π_i (c_i + a_i X + b_i Y)^{α_i}` with the constants below.
pub fn restrict_to_face(cell: &MonomialBasis3, face: &MonomialBasis2, alpha: MultiIndex3) -> Poly2 {
    let offset = (face.origin - cell.center) / cell.h;
    let mut out = Poly2::constant(1.0);
    for axis in 0..3 {
        let mut linear = Poly2::zero(1);
        linear.coeffs[0] = offset[axis];
        linear.coeffs[1] = face.scale[0] * face.frame[0][axis] / cell.h;
        linear.coeffs[2] = face.scale[1] * face.frame[1][axis] / cell.h;
        for _ in 0..alpha.0[axis] {
            out = out.mul(&linear);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(0x9a7d_1b03)
    }

    #[test]
    fn scaled_monomial_values() {
        let b = MonomialBasis3::new(3, Point3::new(0.3, -0.7, 1.1), 2.0);
        // m at the anchor is the Kronecker pattern
        let mut vals = vec![0.0; b.len()];
        b.eval_all(&b.center, &mut vals);
        assert_eq!(vals[0], 1.0);
        assert!(vals[1..].iter().all(|v| *v == 0.0));
        // unit scaled offset along x
        let p = b.center + Vector3::new(b.h, 0.0, 0.0);
        assert!((b.eval_index(MultiIndex3([1, 0, 0]), &p) - 1.0).abs() < 1e-14);
        // α=(2,1,0) at offset h·(2,3,5): 2²·3 = 12
        let p = b.center + b.h * Vector3::new(2.0, 3.0, 5.0);
        assert!((b.eval_index(MultiIndex3([2, 1, 0]), &p) - 12.0).abs() < 1e-13);
    }

    #[test]
    fn gradient_terms() {
        let b = MonomialBasis3::new(2, Point3::origin(), 1.0);
        assert!(b
            .grad_terms(MultiIndex3([0, 0, 0]))
            .iter()
            .all(|t| t.is_none()));
        let g = b.grad_terms(MultiIndex3([2, 0, 0]));
        assert_eq!(g[0], Some((2.0, MultiIndex3([1, 0, 0]))));
        assert_eq!(g[1], None);
        assert_eq!(g[2], None);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut r = rng();
        let b = MonomialBasis3::new(4, Point3::new(0.2, 0.5, -0.1), 0.8);
        let step = 1e-5 * b.h;
        for _ in 0..10 {
            let p = Point3::new(
                r.gen_range(-1.0..1.0),
                r.gen_range(-1.0..1.0),
                r.gen_range(-1.0..1.0),
            );
            for &alpha in b.indices() {
                let g = b.eval_grad(alpha, &p);
                for axis in 0..3 {
                    let mut hi = p;
                    let mut lo = p;
                    hi[axis] += step;
                    lo[axis] -= step;
                    let fd = (b.eval_index(alpha, &hi) - b.eval_index(alpha, &lo)) / (2.0 * step);
                    assert!(
                        (g[axis] - fd).abs() < 1e-6,
                        "grad mismatch at {alpha:?} axis {axis}: {} vs {}",
                        g[axis],
                        fd
                    );
                }
            }
        }
    }

    #[test]
    fn face_basis_frame_coordinates() {
        let frame = [Vector3::new(1.0, 0.0, 0.0), Vector3::new(0.0, 1.0, 0.0)];
        let b = MonomialBasis2::new(2, Point3::new(0.5, 0.5, 1.0), 2.0_f64.sqrt(), frame);
        let p = Point3::new(1.0, 0.75, 1.0);
        let (x, y) = b.local(&p);
        assert!((x - 0.5 / 2.0_f64.sqrt()).abs() < 1e-15);
        assert!((y - 0.25 / 2.0_f64.sqrt()).abs() < 1e-15);
        assert!((b.eval_index(MultiIndex2([1, 1]), &p) - x * y).abs() < 1e-15);
    }

    #[test]
    fn poly_product_is_pointwise_product() {
        let mut r = rng();
        let basis = MonomialBasis3::new(6, Point3::new(0.1, 0.2, 0.3), 1.5);
        let mut a = Poly3::zero(2);
        let mut b = Poly3::zero(3);
        for c in a.coeffs.iter_mut().chain(b.coeffs.iter_mut()) {
            *c = r.gen_range(-1.0..1.0);
        }
        let ab = a.mul(&b);
        for _ in 0..20 {
            let p = Point3::new(
                r.gen_range(-1.0..1.0),
                r.gen_range(-1.0..1.0),
                r.gen_range(-1.0..1.0),
            );
            let lhs = ab.eval(&basis, &p);
            let rhs = a.eval(&basis, &p) * b.eval(&basis, &p);
            assert!((lhs - rhs).abs() < 1e-12 * (1.0 + rhs.abs()));
        }
    }

    #[test]
    fn face_restriction_agrees_pointwise() {
        let mut r = rng();
        let cell = MonomialBasis3::new(4, Point3::new(0.4, 0.6, 0.5), 1.2);
        let t1 = Vector3::new(1.0, 2.0, -1.0).normalize();
        let n = Vector3::new(2.0, -1.0, 0.0).cross(&t1).normalize();
        let t2 = n.cross(&t1);
        let face =
            MonomialBasis2::anisotropic(4, Point3::new(0.2, 0.9, 0.4), [0.7, 0.02], [t1, t2]);
        for &alpha in cell.indices() {
            let restr = restrict_to_face(&cell, &face, alpha);
            for _ in 0..5 {
                let (x, y) = (r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0));
                let p = face.origin + face.scale[0] * x * t1 + face.scale[1] * y * t2;
                let lhs = restr.eval_local(x, y);
                let rhs = cell.eval_index(alpha, &p);
                assert!(
                    (lhs - rhs).abs() < 1e-12 * (1.0 + rhs.abs()),
                    "restriction mismatch at {alpha:?}"
                );
            }
        }
    }
}
