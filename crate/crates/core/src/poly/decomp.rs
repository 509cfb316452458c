//! Decomposition of vector monomials into gradients plus `m_I ∧ ·` terms.
//!
//! Any `m_α e_c` splits as `(h_P/(|α|+1)) ∇m_β` plus at most two cross terms
//! `∓(α_i/(|α|+1)) m_I ∧ (m e_j)`, with the raised/lowered exponents depending
//! on the slot `c`. Cross terms whose first slot carries a positive first
//! exponent can be rewritten into second- and third-slot terms, which closes
//! the cross monomials over a fixed generator set: first-slot exponents with
//! `α₁ = 0` plus every exponent in the second and third slots. These
//! generators index the internal cross moments of the velocity space.

use nalgebra::{Point3, Vector3};

use super::basis::{MonomialBasis3, Poly3};
use super::multiindex::{dim_gperp, indices_up_to_3d, MultiIndex3};
use super::PolyError;

/// The vector field `m_α e_comp` (zero in the other two slots).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct VectorMonomial {
    /// Slot index, 0-based (0 = x, 1 = y, 2 = z).
    pub comp: usize,
    pub alpha: MultiIndex3,
}

impl VectorMonomial {
    pub fn new(comp: usize, alpha: MultiIndex3) -> Self {
        assert!(comp < 3);
        Self { comp, alpha }
    }

    pub fn eval(&self, basis: &MonomialBasis3, p: &Point3<f64>) -> Vector3<f64> {
        let mut v = Vector3::zeros();
        v[self.comp] = basis.eval_index(self.alpha, p);
        v
    }

    /// `m_I(x) ∧ (m_α e_comp)(x)`.
    pub fn eval_cross(&self, basis: &MonomialBasis3, p: &Point3<f64>) -> Vector3<f64> {
        basis.m_i(p).cross(&self.eval(basis, p))
    }
}

/// Component `i` of `m_I ∧ (m_γ e_c)` expanded over plain monomials:
/// `(m_I ∧ e_c m_γ)_i = Σ_j ε_{ijc} m_{γ + e_j}`.
pub fn mi_cross_component(m: &VectorMonomial, i: usize) -> Vec<(f64, MultiIndex3)> {
    let mut out = Vec::with_capacity(1);
    for j in 0..3 {
        let eps = levi_civita(i, j, m.comp);
        if eps != 0 {
            out.push((eps as f64, m.alpha.raised(j)));
        }
    }
    out
}

fn levi_civita(i: usize, j: usize, k: usize) -> i32 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1,
        _ => 0,
    }
}

/// `m_α e_c = Σ coeff·∇m_β + Σ coeff·(m_I ∧ m)`.
#[derive(Clone, Debug)]
pub struct Decomposition {
    pub gradient: Vec<(f64, MultiIndex3)>,
    pub cross: Vec<(f64, VectorMonomial)>,
}

impl Decomposition {
    pub fn eval(&self, basis: &MonomialBasis3, p: &Point3<f64>) -> Vector3<f64> {
        let mut v = Vector3::zeros();
        for (c, beta) in &self.gradient {
            v += *c * basis.eval_grad(*beta, p);
        }
        for (c, m) in &self.cross {
            v += *c * m.eval_cross(basis, p);
        }
        v
    }
}

/// Split `m_α e_comp` into its gradient and cross parts. Terms with zero
/// coefficient (lowered exponent not available) are omitted.
pub fn decompose_vector_monomial(comp: usize, alpha: MultiIndex3, h: f64) -> Decomposition {
    assert!(comp < 3);
    let n = (alpha.degree() + 1) as f64;
    let a = [alpha.0[0] as f64, alpha.0[1] as f64, alpha.0[2] as f64];
    // (slot of first cross term, lowered axis, sign), same for the second
    let (cross1, cross2) = match comp {
        0 => (((1usize, 2usize), -a[2]), ((2usize, 1usize), a[1])),
        1 => (((0, 2), a[2]), ((2, 0), -a[0])),
        _ => (((1, 0), a[0]), ((0, 1), -a[1])),
    };
    let mut cross = Vec::with_capacity(2);
    for ((slot, axis), sign) in [cross1, cross2] {
        if sign != 0.0 {
            let low = alpha.lowered(axis).expect("nonzero exponent was lowered");
            cross.push((sign / n, VectorMonomial::new(slot, low)));
        }
    }
    Decomposition {
        gradient: vec![(h / n, alpha.raised(comp))],
        cross,
    }
}

/// `m_I ∧ (m_α e₁) = −m_I ∧ (m_β e₂) − m_I ∧ (m_γ e₃)` with
/// `β = α − e₁ + e₂`, `γ = α − e₁ + e₃`; requires `α₁ ≥ 1`.
pub fn rewrite_first_component(
    alpha: MultiIndex3,
) -> Result<[(f64, VectorMonomial); 2], PolyError> {
    let low = alpha
        .lowered(0)
        .ok_or(PolyError::RewriteNeedsFirstComponent(alpha))?;
    Ok([
        (-1.0, VectorMonomial::new(1, low.raised(1))),
        (-1.0, VectorMonomial::new(2, low.raised(2))),
    ])
}

/// Generator set whose images under `m_I ∧ ·` span the complement of
/// gradients in `[P_k]³`: first-slot monomials with zero first exponent and
/// all second-/third-slot monomials, degrees ≤ k−1.
#[derive(Clone, Debug)]
pub struct GPerpGenerators {
    pub degree: u32,
    gens: Vec<VectorMonomial>,
}

impl GPerpGenerators {
    pub fn len(&self) -> usize {
        self.gens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gens.is_empty()
    }

    pub fn generators(&self) -> &[VectorMonomial] {
        &self.gens
    }
}

pub fn gperp_generators(k: u32) -> GPerpGenerators {
    assert!(k >= 1);
    let inner = indices_up_to_3d(k - 1);
    let mut gens = Vec::with_capacity(dim_gperp(k));
    for alpha in inner.iter().filter(|a| a.0[0] == 0) {
        gens.push(VectorMonomial::new(0, *alpha));
    }
    for comp in [1, 2] {
        for alpha in &inner {
            gens.push(VectorMonomial::new(comp, *alpha));
        }
    }
    debug_assert_eq!(gens.len(), dim_gperp(k));
    GPerpGenerators { degree: k, gens }
}

/// The vector polynomial `m_I · p` for scalar `p`; these fields span the
/// kernel of `m_I ∧ ·`.
pub fn kernel_field(p: &Poly3) -> Vec<(f64, VectorMonomial)> {
    let idx = indices_up_to_3d(p.degree);
    let mut out = Vec::new();
    for (i, gamma) in idx.iter().enumerate() {
        let c = p.coeffs[i];
        if c == 0.0 {
            continue;
        }
        for comp in 0..3 {
            out.push((c, VectorMonomial::new(comp, gamma.raised(comp))));
        }
    }
    out
}

/// True when `Σ coeff·(m_I ∧ term)` vanishes at every sample point
/// (relative to the term magnitudes).
pub fn mi_cross_vanishes(
    terms: &[(f64, VectorMonomial)],
    basis: &MonomialBasis3,
    points: &[Point3<f64>],
    tol: f64,
) -> bool {
    points.iter().all(|p| {
        let mut sum = Vector3::zeros();
        let mut scale = 0.0_f64;
        for (c, m) in terms {
            let v = *c * m.eval_cross(basis, p);
            scale = scale.max(v.norm());
            sum += v;
        }
        sum.norm() <= tol * scale.max(1.0)
    })
}

/// Checks `m_I ∧ (m_I · p) ≡ 0` by evaluation at the given points.
pub fn kernel_member_check(
    p: &Poly3,
    basis: &MonomialBasis3,
    points: &[Point3<f64>],
    tol: f64,
) -> bool {
    mi_cross_vanishes(&kernel_field(p), basis, points, tol)
}

/// Spanning dimension of `{m_I ∧ g}` over a box, via the eigenvalues of the
/// Gram matrix of exact tensor-product integrals. Test oracle for the
/// generator count; exported for the acceptance suite.
pub fn cross_span_rank_on_unit_cube(gens: &[VectorMonomial], k: u32) -> usize {
    use super::quadrature;
    let basis = MonomialBasis3::new(k, Point3::new(0.5, 0.5, 0.5), 3.0_f64.sqrt());
    // tensor Gauss rule exact to degree 2k on the unit cube
    let n = (k as usize) + 1;
    let (nodes, weights) = quadrature::gauss_legendre_01(n);
    let m = gens.len();
    let mut gram = nalgebra::DMatrix::<f64>::zeros(m, m);
    for (ix, &x) in nodes.iter().enumerate() {
        for (iy, &y) in nodes.iter().enumerate() {
            for (iz, &z) in nodes.iter().enumerate() {
                let w = weights[ix] * weights[iy] * weights[iz];
                let p = Point3::new(x, y, z);
                let vals: Vec<Vector3<f64>> =
                    gens.iter().map(|g| g.eval_cross(&basis, &p)).collect();
                for i in 0..m {
                    for j in i..m {
                        gram[(i, j)] += w * vals[i].dot(&vals[j]);
                    }
                }
            }
        }
    }
    for i in 0..m {
        for j in 0..i {
            gram[(i, j)] = gram[(j, i)];
        }
    }
    let eig = gram.symmetric_eigen();
    let max = eig.eigenvalues.iter().fold(0.0_f64, |a, &b| a.max(b));
    eig.eigenvalues.iter().filter(|&&l| l > 1e-10 * max).count()
}
