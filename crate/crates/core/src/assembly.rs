//! Global saddle-point assembly.
//!
//! Builds the discrete system for the mixed problem: velocity block from the
//! projected consistency form plus dof stabilization, divergence coupling,
//! source loads on the pressure rows, strong elimination of the prescribed
//! boundary normal fluxes, and a single bordering row/column enforcing the
//! zero-mean pressure condition.
//!
//! The assembled blocks are stored for the pressure-negated symmetric form
//! `[[A, Bᵀ, 0], [B, -C, e], [0, eᵀ, 0]]` acting on `(u, -p, λ)`: the model's
//! first equation is `a(u,v) - b(v,p) = 0`, so flipping the pressure sign
//! folds the minus into the block layout. `solution` flips it back.

use crate::linalg::CsrMatrix;
use crate::mesh::{mesh_size, GeometryCache, PolyMesh, SubTessellation};
use crate::poly::{indices_up_to_3d, tetrahedron_rule, MonomialBasis3};
use crate::vemspace::{face_scalar_moments, DofLayout, ElementOperators, VemError};
use nalgebra::{DMatrix, Point3, Vector3};
use rayon::prelude::*;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AssemblyError {
    #[error("cell {cell}: {source}")]
    Element { cell: usize, source: VemError },
    #[error("face {face}: {source}")]
    Face { face: usize, source: VemError },
    #[error("nonpositive diffusion coefficient {nu:.3e} on cell {cell}")]
    NonPositiveNu { cell: usize, nu: f64 },
    #[error("incompatible data: volume integral of f ({volume_integral:.6e}) differs from total boundary flux ({boundary_flux:.6e}) beyond tolerance {tolerance:.3e}")]
    Incompatible {
        volume_integral: f64,
        boundary_flux: f64,
        tolerance: f64,
    },
}

/// Problem data: cellwise-constant diffusion, source term, and the
/// prescribed outward normal trace of the velocity on the boundary.
pub struct CoefficientField<'a> {
    /// ν(x_P) per cell, strictly positive.
    pub nu: &'a (dyn Fn(usize) -> f64 + Sync),
    /// Source f.
    pub source: &'a (dyn Fn(&Point3<f64>) -> f64 + Sync),
    /// u_N(p, n): normal trace against the outward unit normal `n` of the
    /// boundary face containing `p`.
    pub normal_flux: &'a (dyn Fn(&Point3<f64>, &Vector3<f64>) -> f64 + Sync),
}

/// Discrete solution split back into model variables.
#[derive(Clone, Debug, serde::Serialize)]
pub struct Solution {
    /// All global velocity dofs, prescribed boundary values included.
    pub velocity: Vec<f64>,
    /// Pressure moment dofs, `cell·pressure_block + rank`.
    pub pressure: Vec<f64>,
    /// Mean-constraint multiplier (zero for compatible data).
    pub multiplier: f64,
}

/// Assembled bordered saddle-point system on the free dofs.
pub struct SaddleSystem {
    layout: DofLayout,
    /// Velocity-velocity block (free dofs, symmetric positive definite).
    pub a: CsrMatrix,
    /// Divergence coupling, pressure rows by free velocity columns.
    pub b: CsrMatrix,
    /// Pressure-pressure block; `None` means identically zero. Kept so the
    /// block preconditioners read `S = -C - B diag(A)⁻¹ Bᵀ` unchanged.
    pub c: Option<CsrMatrix>,
    /// Mean-constraint weights: `|P|` on each cell's constant pressure dof.
    pub e: Vec<f64>,
    rhs: Vec<f64>,
    free_index: Vec<Option<usize>>,
    free_dofs: Vec<usize>,
    fixed_values: Vec<f64>,
    mesh_size: f64,
    assembly_seconds: f64,
    compatibility: (f64, f64),
}

struct CellContrib {
    dofs: Vec<usize>,
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    load: Vec<f64>,
    volume: f64,
    source_integral: f64,
    source_scale: f64,
}

impl SaddleSystem {
    pub fn layout(&self) -> &DofLayout {
        &self.layout
    }

    pub fn n_free_velocity(&self) -> usize {
        self.free_dofs.len()
    }

    pub fn n_pressure(&self) -> usize {
        self.layout.n_pressure()
    }

    /// Dimension of the bordered system `(u_free, -p, λ)`.
    pub fn dim(&self) -> usize {
        self.n_free_velocity() + self.n_pressure() + 1
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn mesh_size(&self) -> f64 {
        self.mesh_size
    }

    pub fn assembly_seconds(&self) -> f64 {
        self.assembly_seconds
    }

    /// `(∫_Ω f, ∮_∂Ω u_N)` as assembled.
    pub fn compatibility(&self) -> (f64, f64) {
        self.compatibility
    }

    /// Monolithic product `y = [[A,Bᵀ,0],[B,-C,e],[0,eᵀ,0]] x`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.dim());
        assert_eq!(y.len(), self.dim());
        let nf = self.n_free_velocity();
        let nq = self.n_pressure();
        let (xu, rest) = x.split_at(nf);
        let (xp, xl) = rest.split_at(nq);
        y.fill(0.0);
        let (yu, yrest) = y.split_at_mut(nf);
        let (yp, yl) = yrest.split_at_mut(nq);
        self.a.matvec_add(xu, yu);
        self.b.matvec_transpose_add(xp, yu);
        self.b.matvec_add(xu, yp);
        if let Some(c) = &self.c {
            let cp = c.matvec(xp);
            for (t, v) in yp.iter_mut().zip(&cp) {
                *t -= v;
            }
        }
        let mut dot = 0.0;
        for (i, &w) in self.e.iter().enumerate() {
            yp[i] += w * xl[0];
            dot += w * xp[i];
        }
        yl[0] = dot;
    }

    /// The bordered matrix as one sparse matrix (direct solves, export).
    pub fn monolithic(&self) -> CsrMatrix {
        let nf = self.n_free_velocity();
        let nq = self.n_pressure();
        let mut t: Vec<(usize, usize, f64)> =
            Vec::with_capacity(self.a.nnz() + 2 * self.b.nnz() + 2 * nq);
        t.extend(self.a.triplets());
        for (i, j, v) in self.b.triplets() {
            t.push((nf + i, j, v));
            t.push((j, nf + i, v));
        }
        if let Some(c) = &self.c {
            t.extend(c.triplets().map(|(i, j, v)| (nf + i, nf + j, -v)));
        }
        for (i, &w) in self.e.iter().enumerate() {
            if w != 0.0 {
                t.push((nf + i, nf + nq, w));
                t.push((nf + nq, nf + i, w));
            }
        }
        CsrMatrix::from_triplets(self.dim(), self.dim(), t)
    }

    /// Split a solver iterate into model variables (pressure un-negated).
    pub fn solution(&self, x: &[f64]) -> Solution {
        assert_eq!(x.len(), self.dim());
        let nf = self.n_free_velocity();
        let nq = self.n_pressure();
        let mut velocity = self.fixed_values.clone();
        for (slot, &dof) in self.free_dofs.iter().enumerate() {
            velocity[dof] = x[slot];
        }
        Solution {
            velocity,
            pressure: x[nf..nf + nq].iter().map(|v| -v).collect(),
            multiplier: x[nf + nq],
        }
    }

    /// Restrict a full velocity dof vector to the free unknowns, appending
    /// the pressure dofs negated into solver convention and the multiplier.
    pub fn pack(&self, velocity: &[f64], pressure: &[f64], multiplier: f64) -> Vec<f64> {
        assert_eq!(velocity.len(), self.layout.n_velocity());
        assert_eq!(pressure.len(), self.n_pressure());
        let mut x = Vec::with_capacity(self.dim());
        x.extend(self.free_dofs.iter().map(|&d| velocity[d]));
        x.extend(pressure.iter().map(|v| -v));
        x.push(multiplier);
        x
    }

    pub fn is_free(&self, velocity_dof: usize) -> bool {
        self.free_index[velocity_dof].is_some()
    }

    pub fn fixed_value(&self, velocity_dof: usize) -> Option<f64> {
        match self.free_index[velocity_dof] {
            Some(_) => None,
            None => Some(self.fixed_values[velocity_dof]),
        }
    }
}

/// Assemble the bordered system for the given data. Element loops run as a
/// parallel map over cells; the reduction into triplets is serial in cell
/// order, so the result is identical for any worker count.
pub fn assemble(
    mesh: &PolyMesh,
    geom: &GeometryCache,
    tess: &SubTessellation,
    order: u32,
    fields: &CoefficientField,
) -> Result<SaddleSystem, AssemblyError> {
    let start = Instant::now();
    let layout = DofLayout::new(mesh, order);
    let n_v = layout.n_velocity();
    let n_q = layout.n_pressure();
    let fb = layout.face_block;

    // Prescribed boundary dofs: the stored dof is taken against the stored
    // face normal, so the outward-flux moments pick up the cell's sign.
    let mut face_sign = vec![0.0f64; mesh.n_faces()];
    for c in 0..mesh.n_cells() {
        for cf in mesh.cell_faces(c) {
            if mesh.is_boundary_face(cf.face) {
                face_sign[cf.face] = cf.sign;
            }
        }
    }
    let boundary: Vec<usize> = mesh.boundary_faces().collect();
    let flux_moments: Vec<(usize, Vec<f64>)> = boundary
        .par_iter()
        .map(|&f| {
            let fg = &geom.faces[f];
            let outward = face_sign[f] * fg.normal;
            let m = face_scalar_moments(&tess.face_triangles(f), fg, order, |p| {
                (fields.normal_flux)(p, &outward)
            })
            .map_err(|source| AssemblyError::Face { face: f, source })?;
            Ok((f, m))
        })
        .collect::<Result<_, AssemblyError>>()?;

    let mut fixed_values = vec![0.0f64; n_v];
    let mut is_fixed = vec![false; n_v];
    let mut boundary_flux = 0.0;
    let mut flux_scale = 0.0;
    for (f, moments) in &flux_moments {
        let area = geom.faces[*f].area;
        boundary_flux += area * moments[0];
        flux_scale += (area * moments[0]).abs();
        for (j, m) in moments.iter().enumerate() {
            let dof = layout.face_dof(*f, j);
            fixed_values[dof] = face_sign[*f] * m;
            is_fixed[dof] = true;
        }
    }
    debug_assert_eq!(flux_moments.iter().map(|(_, m)| m.len()).sum::<usize>(), boundary.len() * fb);

    let mut free_index: Vec<Option<usize>> = vec![None; n_v];
    let mut free_dofs = Vec::with_capacity(n_v);
    for dof in 0..n_v {
        if !is_fixed[dof] {
            free_index[dof] = Some(free_dofs.len());
            free_dofs.push(dof);
        }
    }
    let n_f = free_dofs.len();

    let idx_km1 = indices_up_to_3d(order - 1);
    let contribs: Vec<CellContrib> = (0..mesh.n_cells())
        .into_par_iter()
        .map(|c| {
            let nu = (fields.nu)(c);
            if !(nu > 0.0) {
                return Err(AssemblyError::NonPositiveNu { cell: c, nu });
            }
            let ops = ElementOperators::build(mesh, geom, tess, c, order)
                .map_err(|source| AssemblyError::Element { cell: c, source })?;
            let cg = &geom.cells[c];
            let basis = MonomialBasis3::new(order - 1, cg.centroid, cg.diameter);
            let rule = tetrahedron_rule(2 * order + 4)
                .map_err(|e| AssemblyError::Element { cell: c, source: e.into() })?;
            let mut w = vec![0.0; idx_km1.len()];
            let mut scale = 0.0;
            for tet in &tess.cell_tetrahedra(c) {
                for (p, wt) in rule.mapped(tet) {
                    let fv = (fields.source)(&p);
                    scale += wt * fv.abs();
                    for (i, alpha) in idx_km1.iter().enumerate() {
                        w[i] += wt * fv * basis.eval_index(*alpha, &p);
                    }
                }
            }
            Ok(CellContrib {
                dofs: layout.cell_velocity_dofs(mesh, c),
                a: ops.stiffness(nu),
                b: ops.b.clone(),
                load: ops.pressure_load(&w),
                volume: cg.volume,
                source_integral: w[0],
                source_scale: scale,
            })
        })
        .collect::<Result<_, AssemblyError>>()?;

    let mut a_triplets: Vec<(usize, usize, f64)> = Vec::new();
    let mut b_triplets: Vec<(usize, usize, f64)> = Vec::new();
    let mut rhs = vec![0.0f64; n_f + n_q + 1];
    let mut e = vec![0.0f64; n_q];
    let mut source_integral = 0.0;
    let mut source_scale = 0.0;
    for (c, cc) in contribs.into_iter().enumerate() {
        source_integral += cc.source_integral;
        source_scale += cc.source_scale;
        e[c * layout.pressure_block] = cc.volume;
        for (li, &gi) in cc.dofs.iter().enumerate() {
            let Some(fi) = free_index[gi] else { continue };
            for (lj, &gj) in cc.dofs.iter().enumerate() {
                match free_index[gj] {
                    Some(fj) => a_triplets.push((fi, fj, cc.a[(li, lj)])),
                    None => rhs[fi] -= cc.a[(li, lj)] * fixed_values[gj],
                }
            }
        }
        for r in 0..layout.pressure_block {
            let row = c * layout.pressure_block + r;
            rhs[n_f + row] += cc.load[r];
            for (lj, &gj) in cc.dofs.iter().enumerate() {
                match free_index[gj] {
                    Some(fj) => b_triplets.push((row, fj, cc.b[(r, lj)])),
                    None => rhs[n_f + row] -= cc.b[(r, lj)] * fixed_values[gj],
                }
            }
        }
    }

    let tolerance = 1e-8 * source_scale.max(flux_scale).max(1.0);
    if (source_integral - boundary_flux).abs() > tolerance {
        return Err(AssemblyError::Incompatible {
            volume_integral: source_integral,
            boundary_flux,
            tolerance,
        });
    }

    Ok(SaddleSystem {
        layout,
        a: CsrMatrix::from_triplets(n_f, n_f, a_triplets),
        b: CsrMatrix::from_triplets(n_q, n_f, b_triplets),
        c: None,
        e,
        rhs,
        free_index,
        free_dofs,
        fixed_values,
        mesh_size: mesh_size(mesh, geom),
        assembly_seconds: start.elapsed().as_secs_f64(),
        compatibility: (source_integral, boundary_flux),
    })
}
