//! Global degree-of-freedom layout.
//!
//! Velocity dofs come first: one block of (k+1)(k+2)/2 normal moments per
//! face (shared between the incident cells, defined against the stored face
//! normal), then per-cell internal blocks (gradient moments over the
//! non-constant degree k−1 monomials, then cross moments against the
//! complement generators). Pressure moment dofs follow cell by cell, and the
//! mean-constraint multiplier takes the final index.

use super::MAX_ORDER;
use crate::mesh::PolyMesh;
use crate::poly::{dim_gperp, dim_pk};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DofCounts {
    pub velocity_face: usize,
    pub velocity_internal: usize,
    pub velocity: usize,
    pub pressure: usize,
    /// Velocity + pressure + the mean-constraint multiplier.
    pub total: usize,
}

#[derive(Clone, Debug)]
pub struct DofLayout {
    order: u32,
    n_faces: usize,
    n_cells: usize,
    pub face_block: usize,
    pub grad_block: usize,
    pub cross_block: usize,
    pub pressure_block: usize,
}

impl DofLayout {
    pub fn new(mesh: &PolyMesh, order: u32) -> Self {
        assert!(
            (1..=MAX_ORDER).contains(&order),
            "order {order} outside supported range 1..={MAX_ORDER}"
        );
        let k = order as i64;
        Self {
            order,
            n_faces: mesh.n_faces(),
            n_cells: mesh.n_cells(),
            face_block: dim_pk(k, 2),
            grad_block: dim_pk(k - 1, 3) - 1,
            cross_block: dim_gperp(order),
            pressure_block: dim_pk(k - 1, 3),
        }
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn internal_block(&self) -> usize {
        self.grad_block + self.cross_block
    }

    pub fn n_velocity(&self) -> usize {
        self.n_faces * self.face_block + self.n_cells * self.internal_block()
    }

    pub fn n_pressure(&self) -> usize {
        self.n_cells * self.pressure_block
    }

    pub fn counts(&self) -> DofCounts {
        let velocity = self.n_velocity();
        let pressure = self.n_pressure();
        DofCounts {
            velocity_face: self.n_faces * self.face_block,
            velocity_internal: self.n_cells * self.internal_block(),
            velocity,
            pressure,
            total: velocity + pressure + 1,
        }
    }

    pub fn face_dof(&self, face: usize, j: usize) -> usize {
        debug_assert!(j < self.face_block);
        face * self.face_block + j
    }

    pub fn grad_dof(&self, cell: usize, j: usize) -> usize {
        debug_assert!(j < self.grad_block);
        self.n_faces * self.face_block + cell * self.internal_block() + j
    }

    pub fn cross_dof(&self, cell: usize, j: usize) -> usize {
        debug_assert!(j < self.cross_block);
        self.n_faces * self.face_block + cell * self.internal_block() + self.grad_block + j
    }

    /// Global pressure index (offset past all velocity dofs already applied).
    pub fn pressure_dof(&self, cell: usize, j: usize) -> usize {
        debug_assert!(j < self.pressure_block);
        self.n_velocity() + cell * self.pressure_block + j
    }

    /// Index of the mean-constraint multiplier.
    pub fn multiplier_dof(&self) -> usize {
        self.n_velocity() + self.n_pressure()
    }

    /// Global velocity dofs of one cell in local order: the face blocks in
    /// `cell_faces` order, then gradient moments, then cross moments.
    pub fn cell_velocity_dofs(&self, mesh: &PolyMesh, cell: usize) -> Vec<usize> {
        let faces = mesh.cell_faces(cell);
        let mut dofs =
            Vec::with_capacity(faces.len() * self.face_block + self.internal_block());
        for cf in faces {
            for j in 0..self.face_block {
                dofs.push(self.face_dof(cf.face, j));
            }
        }
        for j in 0..self.grad_block {
            dofs.push(self.grad_dof(cell, j));
        }
        for j in 0..self.cross_block {
            dofs.push(self.cross_dof(cell, j));
        }
        dofs
    }

    /// Local velocity dof values of one cell gathered from a global vector.
    pub fn gather_cell(&self, mesh: &PolyMesh, cell: usize, global: &[f64]) -> Vec<f64> {
        self.cell_velocity_dofs(mesh, cell)
            .into_iter()
            .map(|g| global[g])
            .collect()
    }
}

pub fn dof_counts(mesh: &PolyMesh, order: u32) -> DofCounts {
    DofLayout::new(mesh, order).counts()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{gen_cube_mesh, Aabb};

    #[test]
    fn per_entity_blocks() {
        let mesh = gen_cube_mesh(1, Aabb::unit()).unwrap();
        let expect = [(1u32, 3, 0, 3, 1), (2, 6, 3, 11, 4), (3, 10, 9, 26, 10), (4, 15, 19, 50, 20)];
        for (k, face, grad, cross, pressure) in expect {
            let l = DofLayout::new(&mesh, k);
            assert_eq!(l.face_block, face, "k={k}");
            assert_eq!(l.grad_block, grad, "k={k}");
            assert_eq!(l.cross_block, cross, "k={k}");
            assert_eq!(l.pressure_block, pressure, "k={k}");
        }
    }

    #[test]
    fn uniform_cube_totals() {
        // frozen totals for the three production mesh/order pairings
        for (n, k, expect) in [(32usize, 1u32, 435_201usize), (24, 2, 508_033), (20, 3, 612_001)] {
            let mesh = gen_cube_mesh(n, Aabb::unit()).unwrap();
            let counts = dof_counts(&mesh, k);
            assert_eq!(counts.total, expect, "n={n} k={k}");
            assert_eq!(
                counts.total,
                counts.velocity + counts.pressure + 1
            );
        }
    }

    #[test]
    fn local_ordering_is_faces_then_grad_then_cross() {
        let mesh = gen_cube_mesh(2, Aabb::unit()).unwrap();
        let l = DofLayout::new(&mesh, 2);
        let dofs = l.cell_velocity_dofs(&mesh, 3);
        assert_eq!(dofs.len(), 6 * l.face_block + l.internal_block());
        let faces = mesh.cell_faces(3);
        for (i, cf) in faces.iter().enumerate() {
            assert_eq!(dofs[i * l.face_block], l.face_dof(cf.face, 0));
        }
        let base = 6 * l.face_block;
        assert_eq!(dofs[base], l.grad_dof(3, 0));
        assert_eq!(dofs[base + l.grad_block], l.cross_dof(3, 0));
        assert!(dofs[base + l.internal_block() - 1] < l.pressure_dof(0, 0));
        assert_eq!(l.multiplier_dof(), l.counts().total - 1);
    }

    #[test]
    #[should_panic(expected = "outside supported range")]
    fn order_zero_is_rejected() {
        let mesh = gen_cube_mesh(1, Aabb::unit()).unwrap();
        let _ = DofLayout::new(&mesh, 0);
    }
}
