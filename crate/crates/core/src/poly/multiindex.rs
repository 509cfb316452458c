//! Multi-indices and graded-lexicographic enumeration of monomial exponents.
//!
//! Within one total degree, indices are ordered by descending first exponent,
//! then descending second, so the 3D sequence starts
//! `1, x, y, z, x², xy, xz, y², yz, z², …`. The position of an index in this
//! order is its column/row in every dense element matrix, so both directions
//! (enumerate, rank) are provided.

/// Exponent triple `(α₁, α₂, α₃)` of a 3D monomial.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct MultiIndex3(pub [u32; 3]);

/// Exponent pair `(β₁, β₂)` of a face monomial.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct MultiIndex2(pub [u32; 2]);

impl MultiIndex3 {
    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    /// `α + e_axis`.
    pub fn raised(&self, axis: usize) -> MultiIndex3 {
        let mut a = self.0;
        a[axis] += 1;
        MultiIndex3(a)
    }

    /// `α − e_axis`, or `None` when the component is already zero.
    pub fn lowered(&self, axis: usize) -> Option<MultiIndex3> {
        let mut a = self.0;
        if a[axis] == 0 {
            return None;
        }
        a[axis] -= 1;
        Some(MultiIndex3(a))
    }

    pub fn sum(&self, other: &MultiIndex3) -> MultiIndex3 {
        MultiIndex3([
            self.0[0] + other.0[0],
            self.0[1] + other.0[1],
            self.0[2] + other.0[2],
        ])
    }

    /// Rank in the graded-lexicographic enumeration of all 3D multi-indices.
    pub fn rank(&self) -> usize {
        let d = self.degree();
        let rem = d - self.0[0];
        let within = (rem * (rem + 1) / 2 + (rem - self.0[1])) as usize;
        dim_pk(d as i64 - 1, 3) + within
    }
}

impl MultiIndex2 {
    pub fn degree(&self) -> u32 {
        self.0[0] + self.0[1]
    }

    pub fn sum(&self, other: &MultiIndex2) -> MultiIndex2 {
        MultiIndex2([self.0[0] + other.0[0], self.0[1] + other.0[1]])
    }

    pub fn rank(&self) -> usize {
        let d = self.degree();
        dim_pk(d as i64 - 1, 2) + (d - self.0[0]) as usize
    }
}

/// Dimension of the polynomial space of total degree ≤ `k` in `ambient`
/// variables (2 or 3). Negative `k` is the empty space.
pub fn dim_pk(k: i64, ambient: u32) -> usize {
    if k < 0 {
        return 0;
    }
    let k = k as usize;
    match ambient {
        2 => (k + 1) * (k + 2) / 2,
        3 => (k + 1) * (k + 2) * (k + 3) / 6,
        _ => panic!("ambient dimension must be 2 or 3"),
    }
}

/// Dimension of the orthogonal complement of gradients inside `[P_k]³`,
/// `(2k³ + 9k² + 7k)/6`.
pub fn dim_gperp(k: u32) -> usize {
    let k = k as usize;
    (2 * k * k * k + 9 * k * k + 7 * k) / 6
}

/// All 3D multi-indices with `|α| ≤ k` in graded-lexicographic order.
pub fn indices_up_to_3d(k: u32) -> Vec<MultiIndex3> {
    let mut out = Vec::with_capacity(dim_pk(k as i64, 3));
    for d in 0..=k {
        for a1 in (0..=d).rev() {
            for a2 in (0..=d - a1).rev() {
                out.push(MultiIndex3([a1, a2, d - a1 - a2]));
            }
        }
    }
    out
}

/// All 2D multi-indices with `|β| ≤ k` in graded-lexicographic order.
pub fn indices_up_to_2d(k: u32) -> Vec<MultiIndex2> {
    let mut out = Vec::with_capacity(dim_pk(k as i64, 2));
    for d in 0..=k {
        for b1 in (0..=d).rev() {
            out.push(MultiIndex2([b1, d - b1]));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn space_dimensions() {
        assert_eq!(dim_pk(0, 3), 1);
        assert_eq!(dim_pk(1, 3), 4);
        assert_eq!(dim_pk(2, 3), 10);
        assert_eq!(dim_pk(4, 3), 35);
        assert_eq!(dim_pk(-1, 3), 0);
        assert_eq!(dim_pk(0, 2), 1);
        assert_eq!(dim_pk(3, 2), 10);
        assert_eq!(dim_pk(-2, 2), 0);
    }

    #[test]
    fn gperp_dimensions() {
        assert_eq!(dim_gperp(1), 3);
        assert_eq!(dim_gperp(2), 11);
        assert_eq!(dim_gperp(3), 26);
        assert_eq!(dim_gperp(4), 50);
        assert_eq!(dim_gperp(5), 85);
    }

    #[test]
    fn kernel_dimension_identity() {
        // 3·dim P_{k−1} = dim G_k^⊥ + dim P_{k−2}·(cross-kernel factor):
        // the kernel of m_I ∧ · on [P_{k−1}]³ has dimension k(k−1)(k+1)/6.
        for k in 1..=5u32 {
            let kernel = (k as usize) * (k as usize - 1) * (k as usize + 1) / 6;
            assert_eq!(3 * dim_pk(k as i64 - 1, 3), dim_gperp(k) + kernel);
            // which is exactly dim of { m_I · p : p ∈ P_{k−2} }
            assert_eq!(kernel, dim_pk(k as i64 - 2, 3));
        }
    }

    #[test]
    fn graded_lex_order_3d() {
        let idx = indices_up_to_3d(2);
        let expect = [
            [0, 0, 0],
            [1, 0, 0],
            [0, 1, 0],
            [0, 0, 1],
            [2, 0, 0],
            [1, 1, 0],
            [1, 0, 1],
            [0, 2, 0],
            [0, 1, 1],
            [0, 0, 2],
        ];
        assert_eq!(idx.len(), 10);
        for (i, e) in expect.iter().enumerate() {
            assert_eq!(idx[i].0, *e);
        }
    }

    #[test]
    fn rank_inverts_enumeration() {
        for (i, a) in indices_up_to_3d(6).iter().enumerate() {
            assert_eq!(a.rank(), i);
        }
        for (i, b) in indices_up_to_2d(7).iter().enumerate() {
            assert_eq!(b.rank(), i);
        }
    }

    #[test]
    fn cardinalities_match_dimensions() {
        for k in 0..=5 {
            assert_eq!(indices_up_to_3d(k).len(), dim_pk(k as i64, 3));
            assert_eq!(indices_up_to_2d(k).len(), dim_pk(k as i64, 2));
        }
    }
}
