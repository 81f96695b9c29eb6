//! Finite-volume subcell kernels used on troubled elements: physical subcell geometry, WENO
//! gradient reconstruction and the degenerate (piecewise-constant) LDG gradients.

use crate::mesh::{GeometricFactors, Mesh};
use crate::subgrid::SubcellGrid;

/// Regularization of the oscillation indicator in the WENO weights.
pub const WENO_EPS: f64 = 1e-6;
/// Power of the WENO weights.
pub const WENO_POWER: i32 = 4;

/// Physical geometry of every subcell, element-major (`K x Ns`).
#[derive(Clone, Debug)]
pub struct FvGeometry {
    pub ns: usize,
    pub centroid: Vec<[f64; 2]>,
    pub area: Vec<f64>,
    pub length: Vec<[f64; 3]>,
    pub normal: Vec<[[f64; 2]; 3]>,
    pub midpoint: Vec<[[f64; 2]; 3]>,
}

impl FvGeometry {
    pub fn new(mesh: &Mesh, sg: &SubcellGrid) -> Self {
        let k = mesh.num_elements();
        let ns = sg.ns;
        let mut g = Self {
            ns,
            centroid: Vec::with_capacity(k * ns),
            area: Vec::with_capacity(k * ns),
            length: Vec::with_capacity(k * ns),
            normal: Vec::with_capacity(k * ns),
            midpoint: Vec::with_capacity(k * ns),
        };
        let mut pts = vec![[0.0; 2]; sg.points.len()];
        for e in 0..k {
            for (p, r) in pts.iter_mut().zip(&sg.points) {
                *p = GeometricFactors::map_point(mesh, e, r[0], r[1]);
            }
            for cell in &sg.cells {
                let v = cell.map(|i| pts[i]);
                g.centroid.push([
                    (v[0][0] + v[1][0] + v[2][0]) / 3.0,
                    (v[0][1] + v[1][1] + v[2][1]) / 3.0,
                ]);
                g.area.push(
                    0.5 * ((v[1][0] - v[0][0]) * (v[2][1] - v[0][1])
                        - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1])),
                );
                let mut len = [0.0; 3];
                let mut nrm = [[0.0; 2]; 3];
                let mut mid = [[0.0; 2]; 3];
                for f in 0..3 {
                    let (a, b) = (v[f], v[(f + 1) % 3]);
                    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
                    len[f] = dx.hypot(dy);
                    nrm[f] = [dy / len[f], -dx / len[f]];
                    mid[f] = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
                }
                g.length.push(len);
                g.normal.push(nrm);
                g.midpoint.push(mid);
            }
        }
        g
    }

    /// Smallest subcell inradius.
    pub fn min_inradius(&self) -> f64 {
        self.area
            .iter()
            .zip(&self.length)
            .map(|(a, l)| 2.0 * a / (l[0] + l[1] + l[2]))
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WenoGradient {
    pub grad: [f64; 2],
    pub weights: [f64; 3],
}

/// Gradient at a subcell from its centroid value and three neighbour `(position, value)` pairs.
///
/// Stencil `j` is the planar fit through the cell and neighbours `j`, `j+1 (mod 3)`. Singular
/// stencils get zero weight.
pub fn weno_gradient(
    centroid: [f64; 2],
    value: f64,
    area: f64,
    neighbours: [([f64; 2], f64); 3],
) -> WenoGradient {
    let mut grads = [[0.0; 2]; 3];
    let mut gamma = [f64::INFINITY; 3];
    let mut valid = [false; 3];
    for j in 0..3 {
        let (pa, va) = neighbours[j];
        let (pb, vb) = neighbours[(j + 1) % 3];
        let (ax, ay, da) = (pa[0] - centroid[0], pa[1] - centroid[1], va - value);
        let (bx, by, db) = (pb[0] - centroid[0], pb[1] - centroid[1], vb - value);
        let det = ax * by - bx * ay;
        if !(det.abs() > 1e-12 * ax.hypot(ay) * bx.hypot(by)) {
            continue;
        }
        let gx = (da * by - db * ay) / det;
        let gy = (ax * db - bx * da) / det;
        if !(gx.is_finite() && gy.is_finite()) {
            continue;
        }
        grads[j] = [gx, gy];
        gamma[j] = gx.hypot(gy) / area;
        valid[j] = true;
    }
    if !valid.iter().any(|&v| v) {
        log::warn!("all WENO stencils singular at ({}, {})", centroid[0], centroid[1]);
        return WenoGradient {
            grad: [0.0; 2],
            weights: [0.0; 3],
        };
    }
    // Ratio form of (eps + gamma_j)^-r / sum_k (eps + gamma_k)^-r.
    let gmin = (0..3)
        .filter(|&j| valid[j])
        .map(|j| gamma[j])
        .fold(f64::INFINITY, f64::min);
    let mut w = [0.0; 3];
    for j in 0..3 {
        if valid[j] {
            w[j] = ((WENO_EPS + gmin) / (WENO_EPS + gamma[j])).powi(WENO_POWER);
        }
    }
    let total: f64 = w.iter().sum();
    let weights = w.map(|x| x / total);
    let mut grad = [0.0; 2];
    for j in 0..3 {
        grad[0] += weights[j] * grads[j][0];
        grad[1] += weights[j] * grads[j][1];
    }
    WenoGradient { grad, weights }
}

/// Value of the subcell reconstruction at `point`.
#[inline]
pub fn extrapolate(mean: f64, grad: [f64; 2], centroid: [f64; 2], point: [f64; 2]) -> f64 {
    mean + grad[0] * (point[0] - centroid[0]) + grad[1] * (point[1] - centroid[1])
}

/// Degenerate LDG gradients on one subcell from per-face numerical traces
/// `[p_x, p_y, q_x, q_y]`: `p = (1/|S|) sum_f phi*_p |S_f| n_f`.
#[inline]
pub fn subcell_gradients(
    area: f64,
    length: &[f64; 3],
    normal: &[[f64; 2]; 3],
    fluxes: &[[f64; 4]; 3],
) -> ([f64; 2], [f64; 2]) {
    let mut p = [0.0; 2];
    let mut q = [0.0; 2];
    for f in 0..3 {
        let l = length[f];
        p[0] += fluxes[f][0] * l * normal[f][0];
        p[1] += fluxes[f][1] * l * normal[f][1];
        q[0] += fluxes[f][2] * l * normal[f][0];
        q[1] += fluxes[f][3] * l * normal[f][1];
    }
    (p.map(|v| v / area), q.map(|v| v / area))
}

/// Alternating upwind fluxes `[p_x, p_y, q_x, q_y]` from interior/exterior traces.
#[inline]
pub fn upwind_fluxes(normal: [f64; 2], int: f64, ext: f64) -> [f64; 4] {
    let (px, qx) = crate::dg::upwind_pair(normal[0], int, ext);
    let (py, qy) = crate::dg::upwind_pair(normal[1], int, ext);
    [px, py, qx, qy]
}
