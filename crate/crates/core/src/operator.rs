//! Semi-discrete right-hand side on a mixed DG / FV-subcell mesh.
//!
//! One evaluation runs in two element-parallel phases:
//!
//! 1. every troubled element reconstructs WENO gradients on its subcells, extrapolates sub-face
//!    traces, and evaluates the numerical fluxes on each macro face shared with a DG element
//!    (the DG trace enters through `Pf`);
//! 2. DG elements assemble LDG gradients (fluxes across DG-FV faces come back through `Rf`),
//!    troubled elements assemble degenerate LDG gradients on their subcells, and both apply the
//!    LLF Hamiltonian.
//!
//! Frozen elements get a zero right-hand side but still supply traces to their neighbours.

use rayon::prelude::*;

use crate::dg::{hamiltonian_rhs, ldg_element, FaceTrace, LdgScratch};
use crate::error::Result;
use crate::fv::{extrapolate, subcell_gradients, upwind_fluxes, weno_gradient, FvGeometry};
use crate::mesh::{compute_geometry, GeometricFactors, Mesh};
use crate::refelem::ReferenceElement;
use crate::subgrid::{SubNeighbor, SubcellGrid};

/// Mesh, reference operators and derived geometry for one polynomial order.
#[derive(Clone, Debug)]
pub struct Discretization {
    pub mesh: Mesh,
    pub geom: GeometricFactors,
    pub re: ReferenceElement,
    pub sg: SubcellGrid,
    pub fvg: FvGeometry,
    /// Physical node coordinates, `K x Np`.
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Discretization {
    pub fn new(mesh: Mesh, order: usize) -> Result<Self> {
        let geom = compute_geometry(&mesh)?;
        let re = ReferenceElement::new(order)?;
        let sg = SubcellGrid::new(&re)?;
        let fvg = FvGeometry::new(&mesh, &sg);
        let mut x = Vec::with_capacity(mesh.num_elements() * re.np);
        let mut y = Vec::with_capacity(mesh.num_elements() * re.np);
        for e in 0..mesh.num_elements() {
            for p in &re.nodes {
                let q = GeometricFactors::map_point(&mesh, e, p[0], p[1]);
                x.push(q[0]);
                y.push(q[1]);
            }
        }
        Ok(Self {
            mesh,
            geom,
            re,
            sg,
            fvg,
            x,
            y,
        })
    }

    pub fn num_elements(&self) -> usize {
        self.mesh.num_elements()
    }

    pub fn np(&self) -> usize {
        self.re.np
    }

    pub fn ns(&self) -> usize {
        self.sg.ns
    }

    /// Samples `f` at every node.
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64 + Sync) -> Vec<f64> {
        self.x.par_iter().zip(&self.y).map(|(&x, &y)| f(x, y)).collect()
    }

    /// Subcell means of a nodal field on every element.
    pub fn project_all(&self, nodal: &[f64]) -> Vec<f64> {
        let (np, ns) = (self.np(), self.ns());
        let mut means = vec![0.0; self.num_elements() * ns];
        means
            .par_chunks_mut(ns)
            .zip(nodal.par_chunks(np))
            .for_each(|(m, u)| self.sg.demote(u, m));
        means
    }
}

/// Order of the subcell face traces.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FvOrder {
    /// Piecewise-constant traces.
    First,
    /// Mean plus WENO gradient times the offset to the sub-face midpoint.
    Second,
}

impl FvOrder {
    pub fn from_int(k: u32) -> Option<Self> {
        match k {
            1 => Some(Self::First),
            2 => Some(Self::Second),
            _ => None,
        }
    }

    pub fn as_int(self) -> u32 {
        match self {
            Self::First => 1,
            Self::Second => 2,
        }
    }
}

/// Buffers reused across right-hand side evaluations.
#[derive(Clone, Debug)]
pub struct RhsWorkspace {
    /// Sub-face traces, `K x Ns x 3` (troubled elements only).
    pub traces: Vec<f64>,
    /// WENO gradients, `K x Ns` (troubled elements only).
    pub grads: Vec<[f64; 2]>,
    /// Fluxes on DG-FV macro faces owned by the FV side: `K x 3 x 4 x (N+1)`,
    /// components `[p_x, p_y, q_x, q_y]`, segments in the FV element's order.
    pub coupling: Vec<f64>,
}

impl RhsWorkspace {
    pub fn new(disc: &Discretization) -> Self {
        let k = disc.num_elements();
        let (ns, nfp) = (disc.ns(), disc.re.nfp);
        Self {
            traces: vec![0.0; k * ns * 3],
            grads: vec![[0.0; 2]; k * ns],
            coupling: vec![0.0; k * 3 * 4 * nfp],
        }
    }
}

/// Per-element representation flags for one evaluation. Faces shared with frozen elements are
/// treated like domain boundaries.
#[derive(Clone, Copy, Debug)]
pub struct ElementFlags<'a> {
    pub troubled: &'a [bool],
    pub frozen: &'a [bool],
}

struct Scratch {
    ldg: LdgScratch,
    ext: [Vec<f64>; 3],
    flux: [[Vec<f64>; 4]; 3],
    seg: Vec<f64>,
    grad: [Vec<f64>; 4],
    own: Vec<f64>,
    ghost: [Vec<f64>; 3],
    trace: Vec<f64>,
    pq: Vec<[f64; 4]>,
}

impl Scratch {
    fn new(disc: &Discretization) -> Self {
        let (np, nfp, ns) = (disc.np(), disc.re.nfp, disc.ns());
        let v = |n: usize| vec![0.0; n];
        Self {
            ldg: LdgScratch::new(&disc.re),
            ext: std::array::from_fn(|_| v(nfp)),
            flux: std::array::from_fn(|_| std::array::from_fn(|_| v(nfp))),
            seg: v(nfp),
            grad: std::array::from_fn(|_| v(np.max(ns))),
            own: v(np),
            ghost: std::array::from_fn(|_| v(nfp)),
            trace: v(nfp),
            pq: vec![[0.0; 4]; ns],
        }
    }
}

/// Writes `du/dt` into `out_nodal` (DG elements) and `out_means` (troubled elements).
#[allow(clippy::too_many_arguments)]
pub fn evaluate_rhs(
    disc: &Discretization,
    fv_order: FvOrder,
    nodal: &[f64],
    means: &[f64],
    flags: ElementFlags<'_>,
    ws: &mut RhsWorkspace,
    out_nodal: &mut [f64],
    out_means: &mut [f64],
) {
    fv_phase(disc, fv_order, nodal, means, flags, ws);
    update_phase(disc, nodal, flags, ws, out_nodal, out_means);
}

/// Subcell traces, WENO gradients and DG-FV coupling fluxes of every troubled element.
pub fn fv_phase(
    disc: &Discretization,
    fv_order: FvOrder,
    nodal: &[f64],
    means: &[f64],
    flags: ElementFlags<'_>,
    ws: &mut RhsWorkspace,
) {
    let (np, ns, nfp) = (disc.np(), disc.ns(), disc.re.nfp);
    let (mesh, re, sg, fvg) = (&disc.mesh, &disc.re, &disc.sg, &disc.fvg);
    let last = nfp - 1;
    (
        ws.traces.par_chunks_mut(ns * 3),
        ws.grads.par_chunks_mut(ns),
        ws.coupling.par_chunks_mut(3 * 4 * nfp),
    )
        .into_par_iter()
        .enumerate()
        .for_each_init(
            || Scratch::new(disc),
            |s, (e, (traces, grads, coupling))| {
                if !flags.troubled[e] {
                    return;
                }
                let m_e = &means[e * ns..(e + 1) * ns];
                // Segment values seen across each macro face (DG neighbour or own boundary).
                let mut own_ready = false;
                for f in 0..3 {
                    let en = mesh.etoe[e][f];
                    if en == e || flags.frozen[en] {
                        if !own_ready {
                            sg.promote(m_e, &mut s.own);
                            own_ready = true;
                        }
                        for (k, &node) in re.face_nodes[f].iter().enumerate() {
                            s.trace[k] = s.own[node];
                        }
                        sg.pf.mul_vec_into(&s.trace, &mut s.ghost[f]);
                    } else if !flags.troubled[en] {
                        let fn_ = mesh.etof[e][f];
                        let ids = &re.face_nodes[fn_];
                        for k in 0..nfp {
                            s.trace[k] = nodal[en * np + ids[last - k]];
                        }
                        sg.pf.mul_vec_into(&s.trace, &mut s.ghost[f]);
                    }
                }

                for c in 0..ns {
                    let gi = e * ns + c;
                    let nb: [([f64; 2], f64); 3] = std::array::from_fn(|lf| match sg.faces[c][lf].neighbor {
                        SubNeighbor::Internal { cell, .. } => (fvg.centroid[e * ns + cell], m_e[cell]),
                        SubNeighbor::Macro { face, segment } => {
                            let en = mesh.etoe[e][face];
                            if en != e && flags.troubled[en] {
                                let (cn, _) = sg.face_segments[mesh.etof[e][face]][last - segment];
                                (fvg.centroid[en * ns + cn], means[en * ns + cn])
                            } else {
                                (fvg.midpoint[gi][lf], s.ghost[face][segment])
                            }
                        }
                    });
                    let g = match fv_order {
                        FvOrder::Second => weno_gradient(fvg.centroid[gi], m_e[c], fvg.area[gi], nb).grad,
                        FvOrder::First => [0.0, 0.0],
                    };
                    grads[c] = g;
                    for lf in 0..3 {
                        traces[3 * c + lf] = extrapolate(m_e[c], g, fvg.centroid[gi], fvg.midpoint[gi][lf]);
                    }
                }

                for f in 0..3 {
                    let en = mesh.etoe[e][f];
                    if en == e || flags.frozen[en] || flags.troubled[en] {
                        continue;
                    }
                    let n = disc.geom.normals[e][f];
                    for k in 0..nfp {
                        let (c, lf) = sg.face_segments[f][k];
                        let fl = upwind_fluxes(n, traces[3 * c + lf], s.ghost[f][k]);
                        for comp in 0..4 {
                            coupling[(f * 4 + comp) * nfp + k] = fl[comp];
                        }
                    }
                }
            },
        );
}

fn update_phase(
    disc: &Discretization,
    nodal: &[f64],
    flags: ElementFlags<'_>,
    ws: &RhsWorkspace,
    out_nodal: &mut [f64],
    out_means: &mut [f64],
) {
    let (np, ns, nfp) = (disc.np(), disc.ns(), disc.re.nfp);
    let (mesh, re, sg, fvg) = (&disc.mesh, &disc.re, &disc.sg, &disc.fvg);
    let last = nfp - 1;
    out_nodal
        .par_chunks_mut(np)
        .zip(out_means.par_chunks_mut(ns))
        .enumerate()
        .for_each_init(
            || Scratch::new(disc),
            |s, (e, (on, om))| {
                if flags.frozen[e] {
                    on.fill(0.0);
                    om.fill(0.0);
                    return;
                }
                if !flags.troubled[e] {
                    om.fill(0.0);
                    let mut kind = [0u8; 3];
                    for f in 0..3 {
                        let en = mesh.etoe[e][f];
                        let fn_ = mesh.etof[e][f];
                        if en == e || flags.frozen[en] {
                            kind[f] = 0;
                        } else if !flags.troubled[en] {
                            kind[f] = 1;
                            let ids = &re.face_nodes[fn_];
                            for k in 0..nfp {
                                s.ext[f][k] = nodal[en * np + ids[last - k]];
                            }
                        } else {
                            kind[f] = 2;
                            let base = (en * 3 + fn_) * 4 * nfp;
                            for comp in 0..4 {
                                for k in 0..nfp {
                                    s.seg[k] = ws.coupling[base + comp * nfp + last - k];
                                }
                                sg.rf.mul_vec_into(&s.seg, &mut s.flux[f][comp]);
                            }
                        }
                    }
                    let Scratch {
                        ldg, ext, flux, grad, ..
                    } = s;
                    let faces: [FaceTrace; 3] = std::array::from_fn(|f| match kind[f] {
                        0 => FaceTrace::Boundary,
                        1 => FaceTrace::Exterior(&ext[f]),
                        _ => FaceTrace::Fluxes([&flux[f][0], &flux[f][1], &flux[f][2], &flux[f][3]]),
                    });
                    let [g0, g1, g2, g3] = grad;
                    let (px, py, qx, qy) = (&mut g0[..np], &mut g1[..np], &mut g2[..np], &mut g3[..np]);
                    ldg_element(
                        re,
                        &disc.geom,
                        e,
                        &nodal[e * np..(e + 1) * np],
                        faces,
                        ldg,
                        [px, py, qx, qy],
                    );
                    hamiltonian_rhs(px, py, qx, qy, on);
                    return;
                }

                on.fill(0.0);
                let tr = &ws.traces;
                for c in 0..ns {
                    let gi = e * ns + c;
                    let mut fl = [[0.0; 4]; 3];
                    for lf in 0..3 {
                        let int = tr[gi * 3 + lf];
                        let normal = fvg.normal[gi][lf];
                        fl[lf] = match sg.faces[c][lf].neighbor {
                            SubNeighbor::Internal { cell, face } => {
                                upwind_fluxes(normal, int, tr[(e * ns + cell) * 3 + face])
                            }
                            SubNeighbor::Macro { face, segment } => {
                                let en = mesh.etoe[e][face];
                                if en == e || flags.frozen[en] {
                                    [int; 4]
                                } else if flags.troubled[en] {
                                    let (cn, lfn) = sg.face_segments[mesh.etof[e][face]][last - segment];
                                    upwind_fluxes(normal, int, tr[(en * ns + cn) * 3 + lfn])
                                } else {
                                    let base = (e * 3 + face) * 4 * nfp;
                                    std::array::from_fn(|comp| ws.coupling[base + comp * nfp + segment])
                                }
                            }
                        };
                    }
                    let (p, q) = subcell_gradients(fvg.area[gi], &fvg.length[gi], &fvg.normal[gi], &fl);
                    s.pq[c] = [p[0], p[1], q[0], q[1]];
                }
                let [g0, g1, g2, g3] = &mut s.grad;
                for c in 0..ns {
                    g0[c] = s.pq[c][0];
                    g1[c] = s.pq[c][1];
                    g2[c] = s.pq[c][2];
                    g3[c] = s.pq[c][3];
                }
                hamiltonian_rhs(&g0[..ns], &g1[..ns], &g2[..ns], &g3[..ns], om);
            },
        );
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate_square_mesh;

    fn disc(n: usize) -> Discretization {
        Discretization::new(generate_square_mesh(1.0, 0.5).unwrap(), n).unwrap()
    }

    fn run(
        d: &Discretization,
        order: FvOrder,
        nodal: &[f64],
        troubled: &[bool],
    ) -> (Vec<f64>, Vec<f64>, RhsWorkspace) {
        let means = d.project_all(nodal);
        let frozen = vec![false; d.num_elements()];
        let mut ws = RhsWorkspace::new(d);
        let mut on = vec![0.0; nodal.len()];
        let mut om = vec![0.0; means.len()];
        evaluate_rhs(
            d,
            order,
            nodal,
            &means,
            ElementFlags {
                troubled,
                frozen: &frozen,
            },
            &mut ws,
            &mut on,
            &mut om,
        );
        (on, om, ws)
    }

    #[test]
    fn linear_field_all_dg() {
        let d = disc(3);
        let phi = d.sample(|x, y| 0.6 * x + 0.8 * y);
        let troubled = vec![false; d.num_elements()];
        let (on, _, _) = run(&d, FvOrder::Second, &phi, &troubled);
        assert!(on.iter().all(|v| (v + 1.0).abs() < 1e-10));
    }

    #[test]
    fn linear_field_mixed_and_all_fv() {
        let d = disc(3);
        let phi = d.sample(|x, y| 3.0 * x - 2.0 * y);
        let target = -13f64.sqrt();
        for pattern in [1usize, 2, 3] {
            let troubled: Vec<bool> = (0..d.num_elements()).map(|e| e % pattern == 0).collect();
            let (on, om, ws) = run(&d, FvOrder::Second, &phi, &troubled);
            for e in 0..d.num_elements() {
                if troubled[e] {
                    for c in 0..d.ns() {
                        let g = ws.grads[e * d.ns() + c];
                        assert!((g[0] - 3.0).abs() < 1e-10 && (g[1] + 2.0).abs() < 1e-10);
                        assert!((om[e * d.ns() + c] - target).abs() < 1e-9);
                    }
                } else {
                    for k in 0..d.np() {
                        assert!((on[e * d.np() + k] - target).abs() < 1e-9, "pattern {pattern}");
                    }
                }
            }
        }
    }

    #[test]
    fn constant_state_is_steady() {
        let d = disc(4);
        let phi = vec![1.5; d.num_elements() * d.np()];
        let troubled: Vec<bool> = (0..d.num_elements()).map(|e| e % 2 == 0).collect();
        for order in [FvOrder::First, FvOrder::Second] {
            let (on, om, _) = run(&d, order, &phi, &troubled);
            assert!(on.iter().chain(&om).all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn coupling_fluxes_match_on_both_sides() {
        // The DG side's nodal fluxes are Rf of the reversed array written by the FV side.
        let d = disc(3);
        let phi = d.sample(|x, y| (x * x + y).sin());
        let troubled: Vec<bool> = (0..d.num_elements()).map(|e| e % 3 == 0).collect();
        let (_, _, ws) = run(&d, FvOrder::Second, &phi, &troubled);
        let nfp = d.re.nfp;
        let mut checked = 0;
        for e in 0..d.num_elements() {
            if !troubled[e] {
                continue;
            }
            for f in 0..3 {
                let en = d.mesh.etoe[e][f];
                if en == e || troubled[en] {
                    continue;
                }
                let base = (e * 3 + f) * 4 * nfp;
                let seg: Vec<f64> = (0..nfp).map(|k| ws.coupling[base + nfp - 1 - k]).collect();
                let nodal = d.sg.rf.mul_vec(&seg);
                let back = d.sg.pf.mul_vec(&nodal);
                for k in 0..nfp {
                    assert!((back[k] - seg[k]).abs() < 1e-10);
                }
                checked += 1;
            }
        }
        assert!(checked > 0);
    }
}
