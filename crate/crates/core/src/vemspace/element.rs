//! Per-cell operators of the mixed virtual space.
//!
//! Everything reduces to two moment tables: cell monomial moments (degree
//! 2k+2) and per-face monomial moments (degree 2k+2). From those the
//! routines below produce, exactly up to round-off:
//!
//! * the face-normal reconstruction `C_f` (face dofs to the coefficients of
//!   `v·n_f`, which is a genuine polynomial of degree k on each face),
//! * the divergence matrix (velocity dofs to the coefficients of `div v`,
//!   again exact for members of the space),
//! * the L² projection `Π` onto vector polynomials of degree k, computable
//!   from the dofs through the gradient/cross decomposition of vector
//!   monomials,
//! * the dof matrix `D_Π` of polynomial fields, and from these the
//!   consistency and stabilization blocks of the local bilinear form.

use super::VemError;
use crate::linalg::SymmetricFactor;
use crate::mesh::{GeometryCache, PolyMesh, SubTessellation};
use crate::poly::{
    decompose_vector_monomial, gperp_generators, indices_up_to_2d, indices_up_to_3d,
    mi_cross_component, restrict_to_face, rewrite_first_component, CellMoments, FaceMoments,
    MonomialBasis3, VectorMonomial,
};
use nalgebra::{DMatrix, DVector};
use std::collections::HashMap;

pub struct ElementOperators {
    pub order: u32,
    pub cell: usize,
    pub volume: f64,
    pub diameter: f64,
    /// Scaled monomials centered at the cell centroid, degree k+1.
    pub basis: MonomialBasis3,
    pub n_local_velocity: usize,
    /// div: `dim P_{k-1}` x nloc, dofs to divergence coefficients.
    pub div: DMatrix<f64>,
    /// `b_P(v, q̂) = q̂ᵀ b v` with moment pressure dofs: `|P|·div`.
    pub b: DMatrix<f64>,
    /// `3·dim P_k` x nloc, dofs to projected-velocity coefficients
    /// (component-major rows).
    pub proj: DMatrix<f64>,
    /// nloc x `3·dim P_k`, dofs of vector polynomials.
    pub d_pi: DMatrix<f64>,
    /// `∫_P Πv·Πw` on dofs.
    pub consistency: DMatrix<f64>,
    /// `Σ_i dof_i(v−Πv) dof_i(w−Πw)` on dofs (unscaled).
    pub stability: DMatrix<f64>,
    /// Per local face: face dofs to `v·n_f` coefficients in the face basis.
    pub face_normal: Vec<DMatrix<f64>>,
    h_km1: SymmetricFactor,
}

impl ElementOperators {
    pub fn build(
        mesh: &PolyMesh,
        geom: &GeometryCache,
        tess: &SubTessellation,
        cell: usize,
        order: u32,
    ) -> Result<Self, VemError> {
        let k = order;
        let cg = &geom.cells[cell];
        let (volume, h) = (cg.volume, cg.diameter);
        let basis = MonomialBasis3::new(k + 1, cg.centroid, h);
        let moments = CellMoments::compute(&tess.cell_tetrahedra(cell), cg.centroid, h, 2 * k + 2)?;

        let idx_k = indices_up_to_3d(k);
        let idx_kp1 = indices_up_to_3d(k + 1);
        let idx_km1 = indices_up_to_3d(k - 1);
        let idx2_k = indices_up_to_2d(k);
        let idx2_kp1 = indices_up_to_2d(k + 1);
        let (n_k, n_kp1, n_km1) = (idx_k.len(), idx_kp1.len(), idx_km1.len());
        let fb = idx2_k.len();

        let h_k = DMatrix::from_fn(n_k, n_k, |i, j| moments.product(idx_k[i], idx_k[j]));
        let h_k_factor = SymmetricFactor::new(&h_k)?;
        let h_km1 = SymmetricFactor::new(&h_k.view((0, 0), (n_km1, n_km1)).into_owned())?;

        let cell_faces = mesh.cell_faces(cell);
        let n_cf = cell_faces.len();
        let grad_block = n_km1 - 1;
        let generators = gperp_generators(k);
        let cross_block = generators.len();
        let nloc = n_cf * fb + grad_block + cross_block;
        let grad_off = n_cf * fb;
        let cross_off = grad_off + grad_block;
        let cross_rank: HashMap<VectorMonomial, usize> = generators
            .generators()
            .iter()
            .enumerate()
            .map(|(i, m)| (*m, i))
            .collect();

        // Per-face tables: FR[α,γ] = ∫_f m_α|_f m^f_γ (cell α up to k+1, face
        // γ up to k), C_f, and the flux map FR·C_f giving ∫_f (v·n_f) m_α|_f
        // from the face dofs for any α up to degree k+1.
        let mut face_normal = Vec::with_capacity(n_cf);
        let mut face_flux = Vec::with_capacity(n_cf);
        let mut face_fr = Vec::with_capacity(n_cf);
        for cf in cell_faces {
            let fg = &geom.faces[cf.face];
            let face_basis = fg.basis(k + 1);
            let tris = tess.face_triangles(cf.face);
            let fm = FaceMoments::compute(&tris, &fg.basis(2 * k + 2))?;
            let mut r3 = DMatrix::zeros(n_kp1, idx2_kp1.len());
            for (row, alpha) in idx_kp1.iter().enumerate() {
                let restr = restrict_to_face(&basis, &face_basis, *alpha);
                let deg_idx = indices_up_to_2d(restr.degree);
                for (c, gamma) in restr.coeffs.iter().zip(&deg_idx) {
                    r3[(row, gamma.rank())] = *c;
                }
            }
            let ip = DMatrix::from_fn(idx2_kp1.len(), fb, |g, d| {
                fm.product(idx2_kp1[g], idx2_k[d])
            });
            let fr = &r3 * &ip;
            let g_f = DMatrix::from_fn(fb, fb, |i, j| fm.product(idx2_k[i], idx2_k[j]));
            let cf_mat =
                SymmetricFactor::new(&g_f)?.solve_mat(&(DMatrix::identity(fb, fb) * fg.area));
            face_flux.push(&fr * &cf_mat);
            face_fr.push(fr);
            face_normal.push(cf_mat);
        }

        // Divergence: H_{k-1}·c = -(|P|/h)·grad dofs + Σ_f s_f·flux rows.
        let mut rhs = DMatrix::zeros(n_km1, nloc);
        for row in 0..n_km1 {
            if row > 0 {
                rhs[(row, grad_off + row - 1)] = -volume / h;
            }
            for (l, cf) in cell_faces.iter().enumerate() {
                for d in 0..fb {
                    rhs[(row, l * fb + d)] += cf.sign * face_flux[l][(row, d)];
                }
            }
        }
        let div = h_km1.solve_mat(&rhs);

        // Π: for each target e_c m_β, express ∫_P v·(e_c m_β) through the
        // dofs via the decomposition into a gradient plus cross fields.
        let mut l_mat = DMatrix::zeros(3 * n_k, nloc);
        for c in 0..3 {
            for (bi, beta) in idx_k.iter().enumerate() {
                let row = c * n_k + bi;
                let dec = decompose_vector_monomial(c, *beta, h);
                for (t, g) in &dec.gradient {
                    if g.degree() < k {
                        l_mat[(row, grad_off + g.rank() - 1)] += t * volume / h;
                    } else {
                        // ∫ v·∇m_g = −∫ (div v) m_g + Σ_f s_f ∮_f (v·n) m_g
                        let gr = g.rank();
                        for (di, delta) in idx_km1.iter().enumerate() {
                            let w = t * moments.product(*g, *delta);
                            for col in 0..nloc {
                                l_mat[(row, col)] -= w * div[(di, col)];
                            }
                        }
                        for (l, cf) in cell_faces.iter().enumerate() {
                            for d in 0..fb {
                                l_mat[(row, l * fb + d)] += t * cf.sign * face_flux[l][(gr, d)];
                            }
                        }
                    }
                }
                for (t, m) in &dec.cross {
                    let rewritten: Vec<(f64, VectorMonomial)> =
                        if m.comp == 0 && m.alpha.0[0] > 0 {
                            rewrite_first_component(m.alpha)
                                .expect("first exponent checked")
                                .to_vec()
                        } else {
                            vec![(1.0, *m)]
                        };
                    for (s, mm) in rewritten {
                        let j = cross_rank[&mm];
                        l_mat[(row, cross_off + j)] += t * s * volume;
                    }
                }
            }
        }
        let mut proj = DMatrix::zeros(3 * n_k, nloc);
        for c in 0..3 {
            let sol = h_k_factor.solve_mat(&l_mat.rows(c * n_k, n_k).into_owned());
            proj.rows_mut(c * n_k, n_k).copy_from(&sol);
        }

        // D_Π: every dof applied to every vector monomial, from the tables.
        let mut d_pi = DMatrix::zeros(nloc, 3 * n_k);
        for c in 0..3 {
            for (bi, beta) in idx_k.iter().enumerate() {
                let col = c * n_k + bi;
                for (l, cf) in cell_faces.iter().enumerate() {
                    let nc = geom.faces[cf.face].normal[c] / geom.faces[cf.face].area;
                    for d in 0..fb {
                        d_pi[(l * fb + d, col)] = nc * face_fr[l][(bi, d)];
                    }
                }
                for (ai, alpha) in idx_km1.iter().enumerate().skip(1) {
                    if let Some(low) = alpha.lowered(c) {
                        d_pi[(grad_off + ai - 1, col)] =
                            alpha.0[c] as f64 / volume * moments.product(*beta, low);
                    }
                }
                for (j, m) in generators.generators().iter().enumerate() {
                    let mut v = 0.0;
                    for (eps, idx) in mi_cross_component(m, c) {
                        v += eps * moments.product(*beta, idx);
                    }
                    d_pi[(cross_off + j, col)] = v / volume;
                }
            }
        }

        let mut consistency = DMatrix::zeros(nloc, nloc);
        for c in 0..3 {
            let pc = proj.rows(c * n_k, n_k);
            consistency += pc.transpose() * &h_k * pc;
        }
        // Exactly symmetric despite the rounding in the per-column solves for Π.
        consistency = 0.5 * (&consistency + consistency.transpose());
        let defect = DMatrix::identity(nloc, nloc) - &d_pi * &proj;
        let stability = defect.transpose() * &defect;

        Ok(Self {
            order,
            cell,
            volume,
            diameter: h,
            basis,
            n_local_velocity: nloc,
            b: &div * volume,
            div,
            proj,
            d_pi,
            consistency,
            stability,
            face_normal,
            h_km1,
        })
    }

    /// Local stiffness `ν(∫ Πv·Πw + |P|·stab)`.
    pub fn stiffness(&self, nu: f64) -> DMatrix<f64> {
        nu * (&self.consistency + self.volume * &self.stability)
    }

    /// Pressure coefficients (scaled monomial basis) from moment dofs.
    pub fn pressure_coefficients(&self, moment_dofs: &[f64]) -> Vec<f64> {
        let mut x = moment_dofs.to_vec();
        self.h_km1.solve_in_place(&mut x);
        x.iter_mut().for_each(|v| *v *= self.volume);
        x
    }

    /// Pressure load on moment dofs from the raw integrals `w_δ = ∫_P f m_δ`.
    pub fn pressure_load(&self, w: &[f64]) -> Vec<f64> {
        self.pressure_coefficients(w)
    }

    /// Divergence coefficients of the member with the given local dofs.
    pub fn divergence_coefficients(&self, local: &[f64]) -> Vec<f64> {
        (&self.div * DVector::from_column_slice(local)).as_slice().to_vec()
    }

    /// Coefficients of `Π v` (component-major over degree-k monomials).
    pub fn projected_coefficients(&self, local: &[f64]) -> Vec<f64> {
        (&self.proj * DVector::from_column_slice(local)).as_slice().to_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{GeometryCache, PolyMesh, SubTessellation};
    use crate::poly::{dim_pk, integrate_cell_fn};
    use crate::testutil::{reference_tetra, unit_cube};
    use crate::vemspace::{interpolate_velocity, DofLayout};
    use nalgebra::{Point3, Vector3};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    type Fixture = (PolyMesh, GeometryCache, SubTessellation);

    fn build(fix: &Fixture, k: u32) -> ElementOperators {
        ElementOperators::build(&fix.0, &fix.1, &fix.2, 0, k).unwrap()
    }

    fn random_coeffs(n: usize, seed: u64) -> DVector<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0))
    }

    fn eval_field(
        ops: &ElementOperators,
        coeffs: &DVector<f64>,
        p: &Point3<f64>,
    ) -> Vector3<f64> {
        let idx = indices_up_to_3d(ops.order);
        let n_k = idx.len();
        let mut v = Vector3::zeros();
        for c in 0..3 {
            for (bi, beta) in idx.iter().enumerate() {
                v[c] += coeffs[c * n_k + bi] * ops.basis.eval_index(*beta, p);
            }
        }
        v
    }

    #[test]
    fn projection_of_dof_table_is_identity() {
        for (fix, orders) in [(unit_cube(), 1..=4u32), (reference_tetra(), 1..=3u32)] {
            for k in orders {
                let ops = build(&fix, k);
                let n = ops.proj.nrows();
                let prod = &ops.proj * &ops.d_pi;
                for i in 0..n {
                    for j in 0..n {
                        let want = if i == j { 1.0 } else { 0.0 };
                        assert!(
                            (prod[(i, j)] - want).abs() < 1e-9,
                            "k={k} entry ({i},{j}): {}",
                            prod[(i, j)]
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn dof_table_matches_quadrature_dofs() {
        let fix = unit_cube();
        let (mesh, geom, tess) = &fix;
        let k = 2;
        let ops = build(&fix, k);
        let layout = DofLayout::new(mesh, k);
        let idx_k = indices_up_to_3d(k);
        let n_k = idx_k.len();
        for c in 0..3 {
            for (bi, beta) in idx_k.iter().enumerate() {
                let dofs = interpolate_velocity(mesh, geom, tess, &layout, |p| {
                    let mut v = Vector3::zeros();
                    v[c] = ops.basis.eval_index(*beta, p);
                    v
                })
                .unwrap();
                let local = layout.gather_cell(mesh, 0, &dofs);
                for (i, got) in local.iter().enumerate() {
                    let want = ops.d_pi[(i, c * n_k + bi)];
                    assert!(
                        (got - want).abs() < 1e-11,
                        "field ({c},{beta:?}) dof {i}: {got} vs {want}"
                    );
                }
            }
        }
    }

    #[test]
    fn divergence_of_polynomials_is_exact() {
        for fix in [unit_cube(), reference_tetra()] {
            for k in 1..=3u32 {
                let ops = build(&fix, k);
                let n_k = dim_pk(k as i64, 3);
                let n_km1 = dim_pk(k as i64 - 1, 3);
                let coeffs = random_coeffs(3 * n_k, 7 + k as u64);
                let dofs = &ops.d_pi * &coeffs;
                let got = ops.divergence_coefficients(dofs.as_slice());
                let idx_k = indices_up_to_3d(k);
                let mut want = vec![0.0; n_km1];
                for c in 0..3 {
                    for (bi, beta) in idx_k.iter().enumerate() {
                        if let Some(low) = beta.lowered(c) {
                            want[low.rank()] +=
                                coeffs[c * n_k + bi] * beta.0[c] as f64 / ops.diameter;
                        }
                    }
                }
                for i in 0..n_km1 {
                    assert!(
                        (got[i] - want[i]).abs() < 1e-10,
                        "k={k} row {i}: {} vs {}",
                        got[i],
                        want[i]
                    );
                }
            }
        }
    }

    #[test]
    fn face_normal_reconstruction_is_pointwise_exact() {
        let fix = unit_cube();
        let (mesh, geom, _) = &fix;
        let k = 2;
        let ops = build(&fix, k);
        let n_k = dim_pk(2, 3);
        let fb = dim_pk(2, 2);
        let coeffs = random_coeffs(3 * n_k, 99);
        let dofs = &ops.d_pi * &coeffs;
        for (l, cf) in mesh.cell_faces(0).iter().enumerate() {
            let fg = &geom.faces[cf.face];
            let face_basis = fg.basis(k);
            let face_dofs = DVector::from_column_slice(&dofs.as_slice()[l * fb..(l + 1) * fb]);
            let rec = &ops.face_normal[l] * face_dofs;
            for (a, b) in [(0.0, 0.0), (0.13, 0.21), (-0.17, 0.08)] {
                let p = fg.centroid + fg.diameter * (a * fg.frame[0] + b * fg.frame[1]);
                let got: f64 = (0..face_basis.len())
                    .map(|i| rec[i] * face_basis.eval(i, &p))
                    .sum();
                let want = eval_field(&ops, &coeffs, &p).dot(&fg.normal);
                assert!(
                    (got - want).abs() < 1e-11,
                    "face {l} at ({a},{b}): {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn local_form_is_spd_and_polynomial_consistent() {
        let fix = unit_cube();
        let (_, _, tess) = &fix;
        for k in 1..=3u32 {
            let ops = build(&fix, k);
            let nu = 2.5;
            let a = ops.stiffness(nu);
            assert!((&a - &a.transpose()).amax() < 1e-11, "k={k} not symmetric");
            let eig = a.clone().symmetric_eigen();
            let min = eig.eigenvalues.min();
            assert!(min > 1e-10, "k={k} min eigenvalue {min}");

            let n_k = dim_pk(k as i64, 3);
            let cu = random_coeffs(3 * n_k, 11 + k as u64);
            let cw = random_coeffs(3 * n_k, 23 + k as u64);
            let du = &ops.d_pi * &cu;
            let dw = &ops.d_pi * &cw;
            let got = (du.transpose() * &a * &dw)[(0, 0)];
            let want = nu
                * integrate_cell_fn(&tess.cell_tetrahedra(0), 2 * k, |p| {
                    eval_field(&ops, &cu, p).dot(&eval_field(&ops, &cw, p))
                })
                .unwrap();
            assert!(
                (got - want).abs() < 1e-10 * want.abs().max(1.0),
                "k={k}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn divergence_commutes_with_interpolation() {
        let fix = unit_cube();
        let (mesh, geom, tess) = &fix;
        let k = 2;
        let ops = build(&fix, k);
        let layout = DofLayout::new(mesh, k);
        let v = |p: &Point3<f64>| {
            Vector3::new(
                (p.y * p.z).sin() + p.x * p.x,
                p.x.cos() * p.z + p.y * p.y * p.y,
                p.x * p.y * p.z.exp(),
            )
        };
        let divv = |p: &Point3<f64>| 2.0 * p.x + 3.0 * p.y * p.y + p.x * p.y * p.z.exp();
        let dofs = interpolate_velocity(mesh, geom, tess, &layout, v).unwrap();
        let got = ops.divergence_coefficients(&layout.gather_cell(mesh, 0, &dofs));

        // independent projection of div v onto degree k−1 by quadrature
        let idx = indices_up_to_3d(k - 1);
        let tets = tess.cell_tetrahedra(0);
        let moments = CellMoments::compute(&tets, geom.cells[0].centroid, ops.diameter, 2 * k)
            .unwrap();
        let h_mat = DMatrix::from_fn(idx.len(), idx.len(), |i, j| moments.product(idx[i], idx[j]));
        let mut w = vec![0.0; idx.len()];
        for (i, alpha) in idx.iter().enumerate() {
            w[i] = integrate_cell_fn(&tets, 12, |p| divv(p) * ops.basis.eval_index(*alpha, p))
                .unwrap();
        }
        SymmetricFactor::new(&h_mat).unwrap().solve_in_place(&mut w);
        for i in 0..idx.len() {
            assert!(
                (got[i] - w[i]).abs() < 1e-9,
                "row {i}: {} vs {}",
                got[i],
                w[i]
            );
        }
    }

    #[test]
    fn pressure_moment_roundtrip() {
        let fix = unit_cube();
        let (_, geom, tess) = &fix;
        let k = 3;
        let ops = build(&fix, k);
        let idx = indices_up_to_3d(k - 1);
        let coeffs = random_coeffs(idx.len(), 31);
        let moments =
            CellMoments::compute(&tess.cell_tetrahedra(0), geom.cells[0].centroid, ops.diameter, 2 * k)
                .unwrap();
        let mut dofs = vec![0.0; idx.len()];
        for (g, gamma) in idx.iter().enumerate() {
            for (t, term) in idx.iter().enumerate() {
                dofs[g] += coeffs[t] * moments.product(*term, *gamma) / ops.volume;
            }
        }
        let got = ops.pressure_coefficients(&dofs);
        for i in 0..idx.len() {
            assert!(
                (got[i] - coeffs[i]).abs() < 1e-11,
                "coeff {i}: {} vs {}",
                got[i],
                coeffs[i]
            );
        }
    }
}
