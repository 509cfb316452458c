//! Gauss rules on reference triangles and tetrahedra.
//!
//! Rules are conical products of 1D Gauss–Jacobi rules obtained by
//! Golub–Welsch (eigenvalues of the symmetric Jacobi matrix of the weight's
//! recurrence). Collapsing the simplex onto a hypercube puts a `(1−ξ)^a`
//! factor into each direction's weight, so an `n`-point rule per direction is
//! exact for total degree `2n − 1`. Rules are cached per degree.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, Point3};
use thiserror::Error;

/// Highest exactness degree kept in the rule table. Orders `k ≤ 4` need at
/// most `2k + 4 = 12`.
pub const MAX_RULE_DEGREE: u32 = 16;

#[derive(Debug, Error)]
pub enum QuadratureError {
    #[error("requested quadrature exactness degree {0} exceeds the rule table maximum {MAX_RULE_DEGREE}")]
    DegreeTooHigh(u32),
}

/// Quadrature rule on the reference tetrahedron with vertices
/// `0, e₁, e₂, e₃`; weights sum to its volume 1/6.
#[derive(Clone, Debug)]
pub struct TetRule {
    pub degree: u32,
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

/// Quadrature rule on the reference triangle `(0,0), (1,0), (0,1)`;
/// weights sum to 1/2.
#[derive(Clone, Debug)]
pub struct TriRule {
    pub degree: u32,
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl TetRule {
    /// Map the rule onto a physical tetrahedron; weights scale by `6·vol`.
    pub fn mapped(&self, v: &[Point3<f64>; 4]) -> impl Iterator<Item = (Point3<f64>, f64)> + '_ {
        let e1 = v[1] - v[0];
        let e2 = v[2] - v[0];
        let e3 = v[3] - v[0];
        let det = e1.dot(&e2.cross(&e3)).abs();
        let v0 = v[0];
        self.points
            .iter()
            .zip(&self.weights)
            .map(move |(p, w)| (v0 + p[0] * e1 + p[1] * e2 + p[2] * e3, w * det))
    }
}

impl TriRule {
    /// Map the rule onto a physical triangle; weights scale by `2·area`.
    pub fn mapped(&self, v: &[Point3<f64>; 3]) -> impl Iterator<Item = (Point3<f64>, f64)> + '_ {
        let e1 = v[1] - v[0];
        let e2 = v[2] - v[0];
        let scale = e1.cross(&e2).norm();
        let v0 = v[0];
        self.points
            .iter()
            .zip(&self.weights)
            .map(move |(p, w)| (v0 + p[0] * e1 + p[1] * e2, w * scale))
    }
}

/// Nodes and weights of the `n`-point Gauss rule on `[0,1]` for the weight
/// `(1 − t)^a`, by Golub–Welsch on the Jacobi(a, 0) recurrence.
fn gauss_jacobi_01(n: usize, a: u32) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let a = a as f64;
    let b = 0.0;
    // three-term recurrence coefficients for Jacobi polynomials on [−1, 1]
    let alpha = |j: usize| -> f64 {
        let j = j as f64;
        if j == 0.0 {
            (b - a) / (a + b + 2.0)
        } else {
            (b * b - a * a) / ((2.0 * j + a + b) * (2.0 * j + a + b + 2.0))
        }
    };
    let beta = |j: usize| -> f64 {
        let j = j as f64;
        4.0 * j * (j + a) * (j + b) * (j + a + b)
            / ((2.0 * j + a + b).powi(2) * (2.0 * j + a + b + 1.0) * (2.0 * j + a + b - 1.0))
    };
    let mu0 = 2.0_f64.powf(a + b + 1.0) / (a + b + 1.0); // ∫ (1−x)^a dx on [−1,1], b = 0

    let mut jac = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        jac[(i, i)] = alpha(i);
        if i + 1 < n {
            let s = beta(i + 1).sqrt();
            jac[(i, i + 1)] = s;
            jac[(i + 1, i)] = s;
        }
    }
    let eig = jac.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));

    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for &i in &order {
        let x = eig.eigenvalues[i];
        let w = mu0 * eig.eigenvectors[(0, i)].powi(2);
        // map x ∈ [−1,1] to t ∈ [0,1]; the (1−t)^a weight picks up 2^{−a−1}
        nodes.push((x + 1.0) / 2.0);
        weights.push(w * 2.0_f64.powf(-a - 1.0));
    }
    (nodes, weights)
}

/// `n`-point Gauss–Legendre rule on `[0,1]`.
pub fn gauss_legendre_01(n: usize) -> (Vec<f64>, Vec<f64>) {
    gauss_jacobi_01(n, 0)
}

fn points_per_direction(degree: u32) -> usize {
    (degree as usize + 2) / 2
}

fn build_tri_rule(degree: u32) -> TriRule {
    let n = points_per_direction(degree);
    let (xi, wx) = gauss_jacobi_01(n, 1);
    let (eta, we) = gauss_jacobi_01(n, 0);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for (x, wxi) in xi.iter().zip(&wx) {
        for (e, wet) in eta.iter().zip(&we) {
            points.push([*x, e * (1.0 - x)]);
            weights.push(wxi * wet);
        }
    }
    TriRule {
        degree,
        points,
        weights,
    }
}

fn build_tet_rule(degree: u32) -> TetRule {
    let n = points_per_direction(degree);
    let (xi, wx) = gauss_jacobi_01(n, 2);
    let (eta, we) = gauss_jacobi_01(n, 1);
    let (zeta, wz) = gauss_jacobi_01(n, 0);
    let mut points = Vec::with_capacity(n * n * n);
    let mut weights = Vec::with_capacity(n * n * n);
    for (x, wxi) in xi.iter().zip(&wx) {
        for (e, wet) in eta.iter().zip(&we) {
            for (z, wze) in zeta.iter().zip(&wz) {
                points.push([*x, e * (1.0 - x), z * (1.0 - x) * (1.0 - e)]);
                weights.push(wxi * wet * wze);
            }
        }
    }
    TetRule {
        degree,
        points,
        weights,
    }
}

/// Rule on the reference tetrahedron exact for total degree ≤ `degree`.
pub fn tetrahedron_rule(degree: u32) -> Result<Arc<TetRule>, QuadratureError> {
    if degree > MAX_RULE_DEGREE {
        return Err(QuadratureError::DegreeTooHigh(degree));
    }
    static CACHE: OnceLock<Mutex<HashMap<u32, Arc<TetRule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    Ok(guard
        .entry(degree)
        .or_insert_with(|| Arc::new(build_tet_rule(degree)))
        .clone())
}

/// Rule on the reference triangle exact for total degree ≤ `degree`.
pub fn triangle_rule(degree: u32) -> Result<Arc<TriRule>, QuadratureError> {
    if degree > MAX_RULE_DEGREE {
        return Err(QuadratureError::DegreeTooHigh(degree));
    }
    static CACHE: OnceLock<Mutex<HashMap<u32, Arc<TriRule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    Ok(guard
        .entry(degree)
        .or_insert_with(|| Arc::new(build_tri_rule(degree)))
        .clone())
}
