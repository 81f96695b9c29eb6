//! LDG one-sided gradients and the local Lax-Friedrichs Hamiltonian on DG elements.
//!
//! For component `i`, the left-biased trace `phi*_p` is the interior trace where `n_i >= 0` and
//! the exterior trace otherwise; `phi*_q` is the mirror choice. Gradients are assembled in
//! strong form, `p_i = D_i phi + sum_f (Jf/J) L_f [n_i (phi*_p - phi_int)]`.

use rayon::prelude::*;

use crate::mesh::{GeometricFactors, Mesh};
use crate::refelem::ReferenceElement;

/// Below this averaged-gradient magnitude the dissipation coefficients fall back to 1.
pub const ALPHA_DELTA: f64 = 1e-10;

/// Left (`p`) and right (`q`) biased gradient approximations, node-major per component.
#[derive(Clone, Debug, Default)]
pub struct GradientPair {
    pub px: Vec<f64>,
    pub py: Vec<f64>,
    pub qx: Vec<f64>,
    pub qy: Vec<f64>,
}

impl GradientPair {
    pub fn zeros(n: usize) -> Self {
        Self {
            px: vec![0.0; n],
            py: vec![0.0; n],
            qx: vec![0.0; n],
            qy: vec![0.0; n],
        }
    }
}

/// Dissipation coefficients `(alpha_x, alpha_y)`: the max over the given points of
/// `|g_i| / |g|`, `g = (p + q)/2`, or `(1, 1)` if any `|g|` is below [`ALPHA_DELTA`].
pub fn llf_alpha(px: &[f64], py: &[f64], qx: &[f64], qy: &[f64]) -> [f64; 2] {
    let mut alpha = [0.0f64; 2];
    for k in 0..px.len() {
        let gx = 0.5 * (px[k] + qx[k]);
        let gy = 0.5 * (py[k] + qy[k]);
        let g = gx.hypot(gy);
        if !(g >= ALPHA_DELTA) {
            return [1.0, 1.0];
        }
        alpha[0] = alpha[0].max(gx.abs() / g);
        alpha[1] = alpha[1].max(gy.abs() / g);
    }
    alpha
}

/// `H(p, q) = |(p + q)/2| - (alpha_x/2)(q_x - p_x) - (alpha_y/2)(q_y - p_y)`.
#[inline]
pub fn llf_hamiltonian(p: [f64; 2], q: [f64; 2], alpha: [f64; 2]) -> f64 {
    debug_assert!(alpha[0] >= 0.0 && alpha[1] >= 0.0);
    let g = (0.5 * (p[0] + q[0])).hypot(0.5 * (p[1] + q[1]));
    g - 0.5 * alpha[0] * (q[0] - p[0]) - 0.5 * alpha[1] * (q[1] - p[1])
}

/// Upwind pair `(phi*_p, phi*_q)` for one normal component.
#[inline]
pub fn upwind_pair(n_i: f64, int: f64, ext: f64) -> (f64, f64) {
    if n_i >= 0.0 {
        (int, ext)
    } else {
        (ext, int)
    }
}

/// What the element sees across one of its faces.
#[derive(Clone, Copy, Debug)]
pub enum FaceTrace<'a> {
    /// Domain boundary: exterior trace equals interior trace.
    Boundary,
    /// Exterior nodal trace, in this element's counter-clockwise face-node order.
    Exterior(&'a [f64]),
    /// Precomputed numerical fluxes `[p_x, p_y, q_x, q_y]` at the face nodes.
    Fluxes([&'a [f64]; 4]),
}

/// Per-thread scratch for [`ldg_element`].
#[derive(Clone, Debug)]
pub struct LdgScratch {
    dr: Vec<f64>,
    ds: Vec<f64>,
    jump: [Vec<f64>; 4],
}

impl LdgScratch {
    pub fn new(re: &ReferenceElement) -> Self {
        Self {
            dr: vec![0.0; re.np],
            ds: vec![0.0; re.np],
            jump: std::array::from_fn(|_| vec![0.0; re.nfp]),
        }
    }
}

/// LDG gradients on element `e`; the four outputs have length `Np`.
#[allow(clippy::too_many_arguments)]
pub fn ldg_element(
    re: &ReferenceElement,
    geom: &GeometricFactors,
    e: usize,
    phi: &[f64],
    faces: [FaceTrace<'_>; 3],
    scratch: &mut LdgScratch,
    out: [&mut [f64]; 4],
) {
    let [px, py, qx, qy] = out;
    re.dr.mul_vec_into(phi, &mut scratch.dr);
    re.ds.mul_vec_into(phi, &mut scratch.ds);
    let (rx, sx, ry, sy) = (geom.rx[e], geom.sx[e], geom.ry[e], geom.sy[e]);
    for k in 0..re.np {
        let dx = rx * scratch.dr[k] + sx * scratch.ds[k];
        let dy = ry * scratch.dr[k] + sy * scratch.ds[k];
        px[k] = dx;
        qx[k] = dx;
        py[k] = dy;
        qy[k] = dy;
    }
    for (f, face) in faces.iter().enumerate() {
        let [nx, ny] = geom.normals[e][f];
        let ids = &re.face_nodes[f];
        match face {
            FaceTrace::Boundary => continue,
            FaceTrace::Exterior(ext) => {
                for (k, &node) in ids.iter().enumerate() {
                    let int = phi[node];
                    let (px_s, qx_s) = upwind_pair(nx, int, ext[k]);
                    let (py_s, qy_s) = upwind_pair(ny, int, ext[k]);
                    scratch.jump[0][k] = nx * (px_s - int);
                    scratch.jump[1][k] = ny * (py_s - int);
                    scratch.jump[2][k] = nx * (qx_s - int);
                    scratch.jump[3][k] = ny * (qy_s - int);
                }
            }
            FaceTrace::Fluxes(fl) => {
                for (k, &node) in ids.iter().enumerate() {
                    let int = phi[node];
                    scratch.jump[0][k] = nx * (fl[0][k] - int);
                    scratch.jump[1][k] = ny * (fl[1][k] - int);
                    scratch.jump[2][k] = nx * (fl[2][k] - int);
                    scratch.jump[3][k] = ny * (fl[3][k] - int);
                }
            }
        }
        let scale = geom.fscale[e][f];
        re.lift[f].mul_vec_add(&scratch.jump[0], scale, px);
        re.lift[f].mul_vec_add(&scratch.jump[1], scale, py);
        re.lift[f].mul_vec_add(&scratch.jump[2], scale, qx);
        re.lift[f].mul_vec_add(&scratch.jump[3], scale, qy);
    }
}

/// Exterior trace of face `f` of element `e`, in `e`'s face-node order.
pub fn exterior_trace(
    re: &ReferenceElement,
    mesh: &Mesh,
    field: &[f64],
    e: usize,
    f: usize,
    out: &mut [f64],
) {
    let (en, fn_) = (mesh.etoe[e][f], mesh.etof[e][f]);
    let ids = &re.face_nodes[fn_];
    let base = en * re.np;
    for k in 0..re.nfp {
        out[k] = field[base + ids[re.nfp - 1 - k]];
    }
}

/// LDG gradients of a nodal field (`K x Np`) on an all-DG mesh with the zero-jump boundary rule.
pub fn ldg_gradients(
    field: &[f64],
    mesh: &Mesh,
    geom: &GeometricFactors,
    re: &ReferenceElement,
) -> GradientPair {
    let np = re.np;
    let mut gp = GradientPair::zeros(field.len());
    (
        gp.px.par_chunks_mut(np),
        gp.py.par_chunks_mut(np),
        gp.qx.par_chunks_mut(np),
        gp.qy.par_chunks_mut(np),
    )
        .into_par_iter()
        .enumerate()
        .for_each_init(
            || {
                (
                    LdgScratch::new(re),
                    [vec![0.0; re.nfp], vec![0.0; re.nfp], vec![0.0; re.nfp]],
                )
            },
            |(scratch, ext), (e, (px, py, qx, qy))| {
                for f in 0..3 {
                    if !mesh.boundary[e][f] {
                        exterior_trace(re, mesh, field, e, f, &mut ext[f]);
                    }
                }
                let faces: [FaceTrace; 3] = std::array::from_fn(|f| {
                    if mesh.boundary[e][f] {
                        FaceTrace::Boundary
                    } else {
                        FaceTrace::Exterior(&ext[f])
                    }
                });
                ldg_element(
                    re,
                    geom,
                    e,
                    &field[e * np..(e + 1) * np],
                    faces,
                    scratch,
                    [px, py, qx, qy],
                );
            },
        );
    gp
}

/// `-H(p, q)` per node with the element-local dissipation coefficients, written into `out`.
pub fn hamiltonian_rhs(px: &[f64], py: &[f64], qx: &[f64], qy: &[f64], out: &mut [f64]) {
    let alpha = llf_alpha(px, py, qx, qy);
    for k in 0..out.len() {
        out[k] = -llf_hamiltonian([px[k], py[k]], [qx[k], qy[k]], alpha);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{compute_geometry, generate_square_mesh};

    fn setup(n: usize) -> (Mesh, GeometricFactors, ReferenceElement, Vec<[f64; 2]>) {
        let mesh = generate_square_mesh(1.0, 0.5).unwrap();
        let geom = compute_geometry(&mesh).unwrap();
        let re = ReferenceElement::new(n).unwrap();
        let mut pts = Vec::new();
        for e in 0..mesh.num_elements() {
            for p in &re.nodes {
                pts.push(GeometricFactors::map_point(&mesh, e, p[0], p[1]));
            }
        }
        (mesh, geom, re, pts)
    }

    #[test]
    fn hamiltonian_values() {
        assert_eq!(llf_hamiltonian([1.0, 0.0], [1.0, 0.0], [1.0, 0.0]), 1.0);
        assert_eq!(llf_hamiltonian([0.0, 0.0], [0.0, 0.0], [1.0, 1.0]), 0.0);
        // p = (2,0), q = (0,0): |g| = 1, alpha_x = 1 -> 1 + 1 = 2.
        let a = llf_alpha(&[2.0], &[0.0], &[0.0], &[0.0]);
        assert_eq!(a, [1.0, 0.0]);
        assert_eq!(llf_hamiltonian([2.0, 0.0], [0.0, 0.0], a), 2.0);
        // Scalar 1D LLF for |phi_x|: H((p+q)/2) - alpha/2 (q - p).
        let (p, q) = (2.0, 0.0);
        let oracle = ((p + q) / 2.0f64).abs() - 0.5 * (q - p);
        assert_eq!(llf_hamiltonian([p, 0.0], [q, 0.0], a), oracle);
    }

    #[test]
    fn alpha_fallback_at_vanishing_gradient() {
        assert_eq!(
            llf_alpha(&[1.0, 0.0], &[0.0, 0.0], &[1.0, 0.0], &[0.0, 0.0]),
            [1.0, 1.0]
        );
    }

    #[test]
    fn consistency_when_p_equals_q() {
        for &(gx, gy) in &[(0.3, -0.4), (1.0, 0.0), (-2.0, 5.0)] {
            let a = llf_alpha(&[gx], &[gy], &[gx], &[gy]);
            let h = llf_hamiltonian([gx, gy], [gx, gy], a);
            assert!((h - f64::hypot(gx, gy)).abs() <= 1e-14);
        }
    }

    #[test]
    fn gradients_exact_on_linear() {
        for n in 1..=4 {
            let (mesh, geom, re, pts) = setup(n);
            let phi: Vec<f64> = pts.iter().map(|p| 3.0 * p[0] - 2.0 * p[1]).collect();
            let gp = ldg_gradients(&phi, &mesh, &geom, &re);
            for k in 0..phi.len() {
                assert!((gp.px[k] - 3.0).abs() < 1e-10 && (gp.qx[k] - 3.0).abs() < 1e-10);
                assert!((gp.py[k] + 2.0).abs() < 1e-10 && (gp.qy[k] + 2.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn constant_field_has_zero_gradient_and_rhs() {
        let (mesh, geom, re, pts) = setup(3);
        let phi = vec![0.7; pts.len()];
        let gp = ldg_gradients(&phi, &mesh, &geom, &re);
        let mut rhs = vec![1.0; re.np];
        for e in 0..mesh.num_elements() {
            let s = e * re.np..(e + 1) * re.np;
            hamiltonian_rhs(
                &gp.px[s.clone()],
                &gp.py[s.clone()],
                &gp.qx[s.clone()],
                &gp.qy[s],
                &mut rhs,
            );
            assert!(rhs.iter().all(|v| v.abs() < 1e-12));
        }
        assert!(gp.px.iter().chain(&gp.qy).all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn single_element_linear() {
        let mesh = Mesh::new(vec![[0.0, 0.0], [1.0, 0.2], [0.3, 0.9]], vec![[0, 1, 2]]).unwrap();
        let geom = compute_geometry(&mesh).unwrap();
        let re = ReferenceElement::new(3).unwrap();
        let phi: Vec<f64> = re
            .nodes
            .iter()
            .map(|p| GeometricFactors::map_point(&mesh, 0, p[0], p[1])[0])
            .collect();
        let gp = ldg_gradients(&phi, &mesh, &geom, &re);
        for k in 0..re.np {
            assert!((gp.px[k] - 1.0).abs() < 1e-12 && gp.py[k].abs() < 1e-12);
        }
    }

    #[test]
    fn jumps_give_one_sided_gradients() {
        // A field that jumps between elements: p and q differ but stay finite.
        let (mesh, geom, re, pts) = setup(2);
        let phi: Vec<f64> = (0..pts.len()).map(|i| ((i / re.np) % 2) as f64).collect();
        let gp = ldg_gradients(&phi, &mesh, &geom, &re);
        assert!(gp.px.iter().chain(&gp.qx).all(|v| v.is_finite()));
        let differs = gp.px.iter().zip(&gp.qx).any(|(p, q)| (p - q).abs() > 1e-3);
        assert!(differs);
    }
}
