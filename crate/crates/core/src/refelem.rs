//! Order-`N` nodal reference element on the bi-unit triangle.
//!
//! Nodes are the Warp & Blend family (equidistant lattice warped towards Gauss-Lobatto points
//! along each edge and blended into the interior). The modal basis is the orthonormal
//! Koornwinder-Dubiner basis from [`crate::poly`], so that `M = (V V^T)^{-1}`.
//!
//! Reference vertices are `v0 = (-1,-1)`, `v1 = (1,-1)`, `v2 = (-1,1)`. Face `f` runs from vertex
//! `f` to vertex `f + 1 (mod 3)`; face node lists are stored in that counter-clockwise order so a
//! conforming neighbour sees the same face nodes in reverse order.

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::poly::{
    grad_simplex_2d_p, jacobi_gl, jacobi_p, modal_basis_at, mode_indices, num_modes, rs_to_ab, simplex_2d_p,
    vandermonde_1d,
};

/// Largest order accepted by [`warp_blend_nodes`]; beyond this the optimized blending table ends
/// and the Vandermonde conditioning degrades quickly.
pub const MAX_NODE_ORDER: usize = 15;

const NODE_TOL: f64 = 1e-10;

/// Optimized blending parameters for orders 1..=15.
const ALPHA_OPT: [f64; 15] = [
    0.0000, 0.0000, 1.4152, 0.1001, 0.2751, 0.9800, 1.0999, 1.2832, 1.3648, 1.4773, 1.4959, 1.5743, 1.5770,
    1.6223, 1.6258,
];

/// Reference vertices in counter-clockwise order.
pub const REF_VERTICES: [[f64; 2]; 3] = [[-1.0, -1.0], [1.0, -1.0], [-1.0, 1.0]];

fn warp_factor(n: usize, rout: &[f64]) -> Vec<f64> {
    let lgl = jacobi_gl(0.0, 0.0, n);
    let req: Vec<f64> = (0..=n).map(|i| -1.0 + 2.0 * i as f64 / n as f64).collect();
    let veq = vandermonde_1d(n, &req).to_nalgebra();
    let pmat = nalgebra::DMatrix::from_fn(n + 1, rout.len(), |i, j| jacobi_p(rout[j], 0.0, 0.0, i));
    // Lagrange polynomials on the equidistant points, evaluated at rout.
    let lmat = veq
        .transpose()
        .lu()
        .solve(&pmat)
        .expect("equidistant Vandermonde is nonsingular");
    rout.iter()
        .enumerate()
        .map(|(j, &r)| {
            let w: f64 = (0..=n).map(|i| lmat[(i, j)] * (lgl[i] - req[i])).sum();
            if r.abs() < 1.0 - 1e-10 {
                w / (1.0 - r * r)
            } else {
                0.0
            }
        })
        .collect()
}

/// Warp & Blend interpolation nodes of order `n` on the bi-unit triangle, as `(r, s)` pairs.
///
/// Ordering: rows of increasing `s`, and within a row increasing `r`.
pub fn warp_blend_nodes(n: usize) -> Result<Vec<[f64; 2]>> {
    if n == 0 || n > MAX_NODE_ORDER {
        return Err(Error::InvalidArgument(format!(
            "node order must be in 1..={MAX_NODE_ORDER}, got {n}"
        )));
    }
    let alpha = ALPHA_OPT[n - 1];
    let np = num_modes(n);
    let mut l1 = Vec::with_capacity(np);
    let mut l2 = Vec::with_capacity(np);
    let mut l3 = Vec::with_capacity(np);
    for row in 0..=n {
        for col in 0..=(n - row) {
            let a = row as f64 / n as f64;
            let c = col as f64 / n as f64;
            l1.push(a);
            l3.push(c);
            l2.push(1.0 - a - c);
        }
    }

    let sqrt3 = 3f64.sqrt();
    let mut x: Vec<f64> = (0..np).map(|k| -l2[k] + l3[k]).collect();
    let mut y: Vec<f64> = (0..np).map(|k| (-l2[k] - l3[k] + 2.0 * l1[k]) / sqrt3).collect();

    let d1: Vec<f64> = (0..np).map(|k| l3[k] - l2[k]).collect();
    let d2: Vec<f64> = (0..np).map(|k| l1[k] - l3[k]).collect();
    let d3: Vec<f64> = (0..np).map(|k| l2[k] - l1[k]).collect();
    let wf1 = warp_factor(n, &d1);
    let wf2 = warp_factor(n, &d2);
    let wf3 = warp_factor(n, &d3);

    let (c2, s2) = (
        (2.0 * std::f64::consts::PI / 3.0).cos(),
        (2.0 * std::f64::consts::PI / 3.0).sin(),
    );
    let (c4, s4) = (
        (4.0 * std::f64::consts::PI / 3.0).cos(),
        (4.0 * std::f64::consts::PI / 3.0).sin(),
    );
    for k in 0..np {
        let blend1 = 4.0 * l2[k] * l3[k];
        let blend2 = 4.0 * l1[k] * l3[k];
        let blend3 = 4.0 * l1[k] * l2[k];
        let warp1 = blend1 * wf1[k] * (1.0 + (alpha * l1[k]).powi(2));
        let warp2 = blend2 * wf2[k] * (1.0 + (alpha * l2[k]).powi(2));
        let warp3 = blend3 * wf3[k] * (1.0 + (alpha * l3[k]).powi(2));
        x[k] += warp1 + c2 * warp2 + c4 * warp3;
        y[k] += s2 * warp2 + s4 * warp3;
    }

    // Equilateral -> bi-unit right triangle.
    Ok((0..np)
        .map(|k| {
            let b1 = (sqrt3 * y[k] + 1.0) / 3.0;
            let b2 = (-3.0 * x[k] - sqrt3 * y[k] + 2.0) / 6.0;
            let b3 = (3.0 * x[k] - sqrt3 * y[k] + 2.0) / 6.0;
            [-b2 + b3 - b1, -b2 - b3 + b1]
        })
        .collect())
}

/// Indices of the nodes on each face, ordered counter-clockwise (from vertex `f` to `f + 1`),
/// together with the face parameter `t in [-1, 1]` of each node.
pub fn face_node_layout(nodes: &[[f64; 2]]) -> [(Vec<usize>, Vec<f64>); 3] {
    let pick = |on_face: &dyn Fn(f64, f64) -> bool, param: &dyn Fn(f64, f64) -> f64| {
        let mut ids: Vec<usize> = (0..nodes.len())
            .filter(|&k| on_face(nodes[k][0], nodes[k][1]))
            .collect();
        ids.sort_by(|&a, &b| param(nodes[a][0], nodes[a][1]).total_cmp(&param(nodes[b][0], nodes[b][1])));
        let t = ids.iter().map(|&k| param(nodes[k][0], nodes[k][1])).collect();
        (ids, t)
    };
    [
        pick(&|_, s| (s + 1.0).abs() < NODE_TOL, &|r, _| r),
        pick(&|r, s| (r + s).abs() < NODE_TOL, &|_, s| s),
        pick(&|r, _| (r + 1.0).abs() < NODE_TOL, &|_, s| -s),
    ]
}

/// Point on reference face `f` at face parameter `t in [-1, 1]`.
pub fn face_point(f: usize, t: f64) -> [f64; 2] {
    let a = REF_VERTICES[f];
    let b = REF_VERTICES[(f + 1) % 3];
    let w = 0.5 * (1.0 + t);
    [a[0] + w * (b[0] - a[0]), a[1] + w * (b[1] - a[1])]
}

/// Nodal reference element of order `n` with its dense operators.
#[derive(Clone, Debug)]
pub struct ReferenceElement {
    pub order: usize,
    /// Number of nodes, `(N+1)(N+2)/2`.
    pub np: usize,
    /// Nodes per face, `N+1`.
    pub nfp: usize,
    pub nodes: Vec<[f64; 2]>,
    /// Generalized Vandermonde matrix, `V[i][m]` = mode `m` at node `i`.
    pub vandermonde: DenseMatrix,
    /// Nodal -> modal.
    pub inv_vandermonde: DenseMatrix,
    pub mass: DenseMatrix,
    pub dr: DenseMatrix,
    pub ds: DenseMatrix,
    /// Per-face lift `M^{-1} E_f` (`Np x Nfp`), with the face mass taken on the parameter
    /// interval `[-1, 1]`; physical lifts scale by `Jf / J`.
    pub lift: [DenseMatrix; 3],
    /// 1D mass matrix on the face nodes (parameter interval `[-1, 1]`).
    pub face_mass: DenseMatrix,
    pub face_nodes: [Vec<usize>; 3],
    /// Face parameter of each face node, increasing along the counter-clockwise direction.
    pub face_params: Vec<f64>,
    /// Total degree of each mode, in modal ordering.
    pub mode_degree: Vec<usize>,
}

impl ReferenceElement {
    pub fn new(order: usize) -> Result<Self> {
        let nodes = warp_blend_nodes(order)?;
        let np = nodes.len();
        let nfp = order + 1;
        let modes = mode_indices(order);

        let vandermonde = DenseMatrix::from_fn(np, np, |i, m| {
            let (a, b) = rs_to_ab(nodes[i][0], nodes[i][1]);
            simplex_2d_p(a, b, modes[m].0, modes[m].1)
        });
        let inv_vandermonde = vandermonde.try_inverse("Vandermonde matrix")?;
        let mass = vandermonde
            .matmul(&vandermonde.transpose())
            .try_inverse("mass matrix")?;

        let mut vr = DenseMatrix::zeros(np, np);
        let mut vs = DenseMatrix::zeros(np, np);
        for i in 0..np {
            let (a, b) = rs_to_ab(nodes[i][0], nodes[i][1]);
            for (m, &(mi, mj)) in modes.iter().enumerate() {
                let (dr, ds) = grad_simplex_2d_p(a, b, mi, mj);
                vr[(i, m)] = dr;
                vs[(i, m)] = ds;
            }
        }
        let dr = vr.matmul(&inv_vandermonde);
        let ds = vs.matmul(&inv_vandermonde);

        let layout = face_node_layout(&nodes);
        for (f, (ids, _)) in layout.iter().enumerate() {
            if ids.len() != nfp {
                return Err(Error::InvalidArgument(format!(
                    "face {f} has {} nodes, expected {nfp}",
                    ids.len()
                )));
            }
        }
        let face_params = layout[0].1.clone();
        let v1d = vandermonde_1d(order, &face_params);
        let face_mass = v1d.matmul(&v1d.transpose()).try_inverse("face mass matrix")?;

        // M^{-1} = V V^T
        let minv = vandermonde.matmul(&vandermonde.transpose());
        let lift = [0, 1, 2].map(|f| {
            let ids = &layout[f].0;
            DenseMatrix::from_fn(np, nfp, |i, j| {
                ids.iter()
                    .enumerate()
                    .map(|(k, &node)| minv[(i, node)] * face_mass[(k, j)])
                    .sum()
            })
        });
        let face_nodes = layout.map(|(ids, _)| ids);

        Ok(Self {
            order,
            np,
            nfp,
            nodes,
            vandermonde,
            inv_vandermonde,
            mass,
            dr,
            ds,
            lift,
            face_mass,
            face_nodes,
            face_params,
            mode_degree: modes.iter().map(|(i, j)| i + j).collect(),
        })
    }

    /// Nodal values -> orthonormal modal coefficients.
    pub fn nodal_to_modal(&self, nodal: &[f64]) -> Result<Vec<f64>> {
        if nodal.len() != self.np {
            return Err(Error::LengthMismatch {
                expected: self.np,
                got: nodal.len(),
            });
        }
        Ok(self.inv_vandermonde.mul_vec(nodal))
    }

    pub fn modal_to_nodal(&self, modal: &[f64]) -> Result<Vec<f64>> {
        if modal.len() != self.np {
            return Err(Error::LengthMismatch {
                expected: self.np,
                got: modal.len(),
            });
        }
        Ok(self.vandermonde.mul_vec(modal))
    }

    /// Values of the nodal Lagrange basis at `(r, s)`.
    pub fn lagrange_at(&self, r: f64, s: f64) -> Vec<f64> {
        let psi = modal_basis_at(self.order, r, s);
        // l(x)^T = psi(x)^T V^{-1}
        (0..self.np)
            .map(|n| (0..self.np).map(|m| psi[m] * self.inv_vandermonde[(m, n)]).sum())
            .collect()
    }

    /// Interpolation matrix from nodal values to the given points.
    pub fn interpolation_matrix(&self, points: &[[f64; 2]]) -> DenseMatrix {
        let rows: Vec<Vec<f64>> = points.iter().map(|p| self.lagrange_at(p[0], p[1])).collect();
        DenseMatrix::from_fn(points.len(), self.np, |i, j| rows[i][j])
    }

    /// Evaluates the 1D Lagrange polynomials on the face nodes at face parameter `t`.
    pub fn face_lagrange_at(&self, t: f64) -> Vec<f64> {
        let x = &self.face_params;
        (0..self.nfp)
            .map(|j| {
                (0..self.nfp)
                    .filter(|&k| k != j)
                    .map(|k| (t - x[k]) / (x[j] - x[k]))
                    .product()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{gauss_legendre, triangle_quadrature};

    fn monomial(r: f64, s: f64, a: i32, b: i32) -> f64 {
        r.powi(a) * s.powi(b)
    }

    #[test]
    fn node_counts_and_edges() {
        for n in 1..=8 {
            let nodes = warp_blend_nodes(n).unwrap();
            assert_eq!(nodes.len(), (n + 1) * (n + 2) / 2);
            for (ids, _) in face_node_layout(&nodes) {
                assert_eq!(ids.len(), n + 1);
            }
        }
        assert_eq!(warp_blend_nodes(5).unwrap().len(), 21);
    }

    #[test]
    fn order_one_nodes_are_vertices() {
        let nodes = warp_blend_nodes(1).unwrap();
        for v in REF_VERTICES {
            assert!(nodes
                .iter()
                .any(|p| (p[0] - v[0]).abs() < 1e-14 && (p[1] - v[1]).abs() < 1e-14));
        }
    }

    #[test]
    fn rejects_bad_orders() {
        assert!(warp_blend_nodes(0).is_err());
        assert!(warp_blend_nodes(16).is_err());
    }

    #[test]
    fn node_set_symmetric_under_reflection() {
        for n in 1..=9 {
            let nodes = warp_blend_nodes(n).unwrap();
            for p in &nodes {
                let found = nodes
                    .iter()
                    .any(|q| (q[0] - p[1]).abs() < 1e-12 && (q[1] - p[0]).abs() < 1e-12);
                assert!(found, "N={n}: mirror of {p:?} missing");
            }
        }
    }

    #[test]
    fn edge_nodes_are_gauss_lobatto() {
        let re = ReferenceElement::new(6).unwrap();
        let gll = jacobi_gl(0.0, 0.0, 6);
        for (t, g) in re.face_params.iter().zip(&gll) {
            assert!((t - g).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_mass_matrix() {
        let re = ReferenceElement::new(1).unwrap();
        // Nodes for N=1 are the vertices, so M is the P1 mass matrix on a triangle of area 2.
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 2.0 / 6.0 } else { 1.0 / 6.0 };
                assert!((re.mass[(i, j)] - expect).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn mass_matrix_spd_and_integrates_one() {
        for n in 1..=7 {
            let re = ReferenceElement::new(n).unwrap();
            let total: f64 = re.mass.as_slice().iter().sum();
            assert!((total - 2.0).abs() < 1e-12, "N={n}: {total}");
            let m = re.mass.to_nalgebra();
            assert!((&m - m.transpose()).abs().max() < 1e-12);
            assert!(m.cholesky().is_some(), "N={n}: mass not SPD");
        }
    }

    #[test]
    fn derivative_matrices_exact_on_monomials() {
        for n in 1..=7 {
            let re = ReferenceElement::new(n).unwrap();
            for a in 0..=n as i32 {
                for b in 0..=(n as i32 - a) {
                    let f: Vec<f64> = re.nodes.iter().map(|p| monomial(p[0], p[1], a, b)).collect();
                    let fr = re.dr.mul_vec(&f);
                    let fs = re.ds.mul_vec(&f);
                    for (k, p) in re.nodes.iter().enumerate() {
                        let er = if a > 0 {
                            a as f64 * monomial(p[0], p[1], a - 1, b)
                        } else {
                            0.0
                        };
                        let es = if b > 0 {
                            b as f64 * monomial(p[0], p[1], a, b - 1)
                        } else {
                            0.0
                        };
                        assert!((fr[k] - er).abs() < 1e-10, "N={n} r^{a}s^{b} d/dr");
                        assert!((fs[k] - es).abs() < 1e-10, "N={n} r^{a}s^{b} d/ds");
                    }
                }
            }
        }
    }

    #[test]
    fn dr_of_r_is_one() {
        let re = ReferenceElement::new(4).unwrap();
        let r: Vec<f64> = re.nodes.iter().map(|p| p[0]).collect();
        for v in re.dr.mul_vec(&r) {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mass_matches_quadrature_oracle() {
        // M_ij = integral of l_i l_j, checked with a degree 2N+2 rule.
        for n in 1..=5 {
            let re = ReferenceElement::new(n).unwrap();
            let rule = triangle_quadrature(n + 3);
            let vals: Vec<Vec<f64>> = rule.iter().map(|(p, _)| re.lagrange_at(p[0], p[1])).collect();
            for i in 0..re.np {
                for j in 0..re.np {
                    let q: f64 = rule.iter().zip(&vals).map(|((_, w), l)| w * l[i] * l[j]).sum();
                    assert!((q - re.mass[(i, j)]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn face_integration_matches_1d_quadrature() {
        // For a polynomial f of degree <= N, 1^T Mf f restricted to a face equals the face
        // integral in the parameter t (the face mass is on [-1, 1]).
        let (x, w) = gauss_legendre(12);
        for n in 1..=5 {
            let re = ReferenceElement::new(n).unwrap();
            let poly =
                |r: f64, s: f64| 0.3 + r - 2.0 * s + r.powi(n as i32) - 0.5 * (r * s).powi(n as i32 / 2);
            for f in 0..3 {
                let trace: Vec<f64> = re.face_nodes[f]
                    .iter()
                    .map(|&k| poly(re.nodes[k][0], re.nodes[k][1]))
                    .collect();
                let mf = re.face_mass.mul_vec(&trace);
                let via_mass: f64 = mf.iter().sum();
                let oracle: f64 = x
                    .iter()
                    .zip(&w)
                    .map(|(&t, &wt)| {
                        let p = face_point(f, t);
                        wt * poly(p[0], p[1])
                    })
                    .sum();
                assert!((via_mass - oracle).abs() < 1e-10, "N={n} face {f}");
            }
        }
    }

    #[test]
    fn neighbour_face_nodes_are_reversed() {
        // Face nodes are symmetric along each edge, so a neighbour traversing the edge the other
        // way meets node k at its node nfp-1-k.
        let re = ReferenceElement::new(5).unwrap();
        for k in 0..re.nfp {
            assert!((re.face_params[k] + re.face_params[re.nfp - 1 - k]).abs() < 1e-13);
        }
    }

    #[test]
    fn vandermonde_inverse_and_conditioning() {
        for n in 1..=7 {
            let re = ReferenceElement::new(n).unwrap();
            let id = re.vandermonde.matmul(&re.inv_vandermonde);
            assert!(id.max_abs_diff(&DenseMatrix::identity(re.np)) < 1e-11);
            let sv = re.vandermonde.to_nalgebra().singular_values();
            let cond = sv.max() / sv.min();
            assert!(cond < 1e4, "N={n}: cond(V) = {cond}");
        }
    }

    #[test]
    fn nodal_modal_round_trip() {
        let re = ReferenceElement::new(4).unwrap();
        assert!(re.nodal_to_modal(&[1.0; 3]).is_err());
        let zero = re.nodal_to_modal(&vec![0.0; re.np]).unwrap();
        assert!(zero.iter().all(|&c| c == 0.0));

        let ones = re.nodal_to_modal(&vec![1.0; re.np]).unwrap();
        // Mode 0 is the constant 1/sqrt(2) (orthonormal on a domain of area 2).
        assert!((ones[0] - 2f64.sqrt()).abs() < 1e-12);
        assert!(ones[1..].iter().all(|c| c.abs() < 1e-12));

        let field: Vec<f64> = (0..re.np)
            .map(|k| ((k * 7919) % 13) as f64 / 13.0 - 0.4)
            .collect();
        let modal = re.nodal_to_modal(&field).unwrap();
        let back = re.modal_to_nodal(&modal).unwrap();
        for (a, b) in field.iter().zip(&back) {
            assert!((a - b).abs() < 1e-11);
        }
    }
}
