//! Subcell tessellation of the reference triangle and the mean-value operators between the
//! nodal DG representation and subcell averages.
//!
//! The `(N+1)^2` subcells are the structured triangulation of the order-`N+1` Warp & Blend
//! lattice. Each macro face is covered by `N+1` sub-edges whose endpoints are the order-`N+1`
//! face nodes, ordered counter-clockwise like the DG face nodes.

use std::collections::HashMap;

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::poly::{gauss_legendre, map_quadrature, triangle_quadrature};
use crate::refelem::{warp_blend_nodes, ReferenceElement};

/// What lies across a subcell face.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SubNeighbor {
    /// Another subcell of the same element and its local face.
    Internal { cell: usize, face: usize },
    /// Segment `segment` (counter-clockwise order) of macro face `face`.
    Macro { face: usize, segment: usize },
}

/// Reference geometry of one subcell face (vertices `f -> f+1` of the sub-triangle).
#[derive(Clone, Copy, Debug)]
pub struct SubFace {
    pub length: f64,
    pub normal: [f64; 2],
    pub midpoint: [f64; 2],
    pub neighbor: SubNeighbor,
}

#[derive(Clone, Debug)]
pub struct SubcellGrid {
    pub order: usize,
    /// `(N+1)^2`.
    pub ns: usize,
    /// Order-`N+1` lattice points.
    pub points: Vec<[f64; 2]>,
    /// Counter-clockwise sub-triangles over `points`.
    pub cells: Vec<[usize; 3]>,
    pub areas: Vec<f64>,
    pub centroids: Vec<[f64; 2]>,
    pub faces: Vec<[SubFace; 3]>,
    /// For each macro face, `(cell, local face)` of every segment in counter-clockwise order.
    pub face_segments: [Vec<(usize, usize)>; 3],
    /// Face parameters `t in [-1, 1]` of the segment endpoints (`N+2` values, increasing).
    pub segment_bounds: Vec<f64>,
    /// Nodal -> subcell means (`Ns x Np`).
    pub p: DenseMatrix,
    /// Subcell means -> nodal, constrained least squares (`Np x Ns`).
    pub r: DenseMatrix,
    /// Face nodal trace -> sub-edge means (`(N+1) x (N+1)`, identical for all faces).
    pub pf: DenseMatrix,
    pub rf: DenseMatrix,
}

/// Lattice points and the sub-triangles connecting them.
pub type Tessellation = (Vec<[f64; 2]>, Vec<[usize; 3]>);

/// Sub-triangles of the order-`N+1` lattice (`i` along `r`, `j` along `s`).
pub fn build_subcell_tessellation(order: usize) -> Result<Tessellation> {
    if order == 0 {
        return Err(Error::InvalidArgument("subcell grid needs N >= 1".into()));
    }
    let m = order + 1;
    let points = warp_blend_nodes(m)?;
    let offsets: Vec<usize> = (0..=m)
        .scan(0, |acc, j| {
            let o = *acc;
            *acc += m + 1 - j;
            Some(o)
        })
        .collect();
    let id = |i: usize, j: usize| offsets[j] + i;
    let mut cells = Vec::with_capacity(m * m);
    for j in 0..m {
        for i in 0..(m - j) {
            cells.push([id(i, j), id(i + 1, j), id(i, j + 1)]);
            if i + j + 2 <= m {
                cells.push([id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
    }
    for c in &cells {
        if tri_area(&points, c) <= 0.0 {
            return Err(Error::InvalidArgument("inverted subcell in lattice".into()));
        }
    }
    Ok((points, cells))
}

fn tri_area(points: &[[f64; 2]], c: &[usize; 3]) -> f64 {
    let [a, b, d] = c.map(|k| points[k]);
    0.5 * ((b[0] - a[0]) * (d[1] - a[1]) - (d[0] - a[0]) * (b[1] - a[1]))
}

/// Which macro face (if any) contains the lattice edge `a -> b`, with the face parameters.
fn macro_face_of(pa: [f64; 2], pb: [f64; 2]) -> Option<(usize, f64, f64)> {
    const TOL: f64 = 1e-10;
    if (pa[1] + 1.0).abs() < TOL && (pb[1] + 1.0).abs() < TOL {
        Some((0, pa[0], pb[0]))
    } else if (pa[0] + pa[1]).abs() < TOL && (pb[0] + pb[1]).abs() < TOL {
        Some((1, pa[1], pb[1]))
    } else if (pa[0] + 1.0).abs() < TOL && (pb[0] + 1.0).abs() < TOL {
        Some((2, -pa[1], -pb[1]))
    } else {
        None
    }
}

impl SubcellGrid {
    pub fn new(re: &ReferenceElement) -> Result<Self> {
        let order = re.order;
        let (points, cells) = build_subcell_tessellation(order)?;
        let ns = cells.len();
        let areas: Vec<f64> = cells.iter().map(|c| tri_area(&points, c)).collect();
        let centroids: Vec<[f64; 2]> = cells
            .iter()
            .map(|c| {
                let [a, b, d] = c.map(|k| points[k]);
                [(a[0] + b[0] + d[0]) / 3.0, (a[1] + b[1] + d[1]) / 3.0]
            })
            .collect();

        // Segment endpoints along each macro face are the order-(N+1) face points.
        let m = order + 1;
        let mut segment_bounds: Vec<f64> = points
            .iter()
            .filter(|p| (p[1] + 1.0).abs() < 1e-10)
            .map(|p| p[0])
            .collect();
        segment_bounds.sort_by(f64::total_cmp);
        debug_assert_eq!(segment_bounds.len(), m + 1);
        let segment_of = |t0: f64, t1: f64| {
            let lo = t0.min(t1);
            segment_bounds
                .iter()
                .position(|&b| (b - lo).abs() < 1e-10)
                .expect("sub-edge endpoint is a face lattice point")
        };

        let mut edge_owner: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
        for (c, tri) in cells.iter().enumerate() {
            for f in 0..3 {
                let (a, b) = (tri[f], tri[(f + 1) % 3]);
                edge_owner.insert((a, b), (c, f));
            }
        }
        let mut face_segments: [Vec<(usize, usize)>; 3] = [vec![(0, 0); m], vec![(0, 0); m], vec![(0, 0); m]];
        let mut faces = Vec::with_capacity(ns);
        for (c, tri) in cells.iter().enumerate() {
            let mut sf = [SubFace {
                length: 0.0,
                normal: [0.0; 2],
                midpoint: [0.0; 2],
                neighbor: SubNeighbor::Internal { cell: 0, face: 0 },
            }; 3];
            for f in 0..3 {
                let (a, b) = (tri[f], tri[(f + 1) % 3]);
                let (pa, pb) = (points[a], points[b]);
                let (dx, dy) = (pb[0] - pa[0], pb[1] - pa[1]);
                let len = dx.hypot(dy);
                let neighbor = if let Some(&(cell, face)) = edge_owner.get(&(b, a)) {
                    SubNeighbor::Internal { cell, face }
                } else if let Some((face, t0, t1)) = macro_face_of(pa, pb) {
                    let segment = segment_of(t0, t1);
                    face_segments[face][segment] = (c, f);
                    SubNeighbor::Macro { face, segment }
                } else {
                    return Err(Error::InvalidArgument(format!(
                        "subcell {c} face {f} has no neighbour"
                    )));
                };
                sf[f] = SubFace {
                    length: len,
                    normal: [dy / len, -dx / len],
                    midpoint: [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])],
                    neighbor,
                };
            }
            faces.push(sf);
        }

        let p = build_projection(re, &points, &cells, &areas);
        let pf = build_face_projection(re, &segment_bounds);
        let r = build_reconstruction(&p, &areas)?;
        let rf = pf.try_inverse("face reconstruction")?;

        Ok(Self {
            order,
            ns,
            points,
            cells,
            areas,
            centroids,
            faces,
            face_segments,
            segment_bounds,
            p,
            r,
            pf,
            rf,
        })
    }

    /// Subcell means of a nodal field.
    pub fn demote(&self, nodal: &[f64], means: &mut [f64]) {
        self.p.mul_vec_into(nodal, means);
    }

    /// Nodal field reconstructed from subcell means.
    pub fn promote(&self, means: &[f64], nodal: &mut [f64]) {
        self.r.mul_vec_into(means, nodal);
    }

    /// Area-weighted mean of subcell values.
    pub fn macro_mean(&self, means: &[f64]) -> f64 {
        let total: f64 = self.areas.iter().sum();
        self.areas.iter().zip(means).map(|(a, m)| a * m).sum::<f64>() / total
    }

    pub fn segment_midpoint_param(&self, segment: usize) -> f64 {
        0.5 * (self.segment_bounds[segment] + self.segment_bounds[segment + 1])
    }
}

fn build_projection(
    re: &ReferenceElement,
    points: &[[f64; 2]],
    cells: &[[usize; 3]],
    areas: &[f64],
) -> DenseMatrix {
    let rule = triangle_quadrature(re.order + 1);
    let mut p = DenseMatrix::zeros(cells.len(), re.np);
    for (i, c) in cells.iter().enumerate() {
        let [a, b, d] = c.map(|k| points[k]);
        for (x, w) in map_quadrature(&rule, a, b, d) {
            for (n, l) in re.lagrange_at(x[0], x[1]).into_iter().enumerate() {
                p[(i, n)] += w * l / areas[i];
            }
        }
    }
    p
}

fn build_face_projection(re: &ReferenceElement, bounds: &[f64]) -> DenseMatrix {
    let (xq, wq) = gauss_legendre(re.order + 1);
    let nseg = bounds.len() - 1;
    let mut pf = DenseMatrix::zeros(nseg, re.nfp);
    for k in 0..nseg {
        let (a, b) = (bounds[k], bounds[k + 1]);
        for (&x, &w) in xq.iter().zip(&wq) {
            let t = 0.5 * (a + b) + 0.5 * (b - a) * x;
            for (j, l) in re.face_lagrange_at(t).into_iter().enumerate() {
                // Mean over the segment: (1/(b-a)) * (b-a)/2 * sum w f
                pf[(k, j)] += 0.5 * w * l;
            }
        }
    }
    pf
}

/// `R` from the KKT system of the area-weighted least-squares fit with exact mean preservation.
fn build_reconstruction(p: &DenseMatrix, areas: &[f64]) -> Result<DenseMatrix> {
    let (ns, np) = (p.rows(), p.cols());
    let pm = p.to_nalgebra();
    let w = nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(areas));
    let a = nalgebra::DVector::from_column_slice(areas);
    let ptw = pm.transpose() * &w;
    let pta = pm.transpose() * &a;

    let mut kkt = nalgebra::DMatrix::zeros(np + 1, np + 1);
    kkt.view_mut((0, 0), (np, np)).copy_from(&(&ptw * &pm));
    kkt.view_mut((0, np), (np, 1)).copy_from(&pta);
    kkt.view_mut((np, 0), (1, np)).copy_from(&pta.transpose());

    let mut rhs = nalgebra::DMatrix::zeros(np + 1, ns);
    rhs.view_mut((0, 0), (np, ns)).copy_from(&ptw);
    rhs.view_mut((np, 0), (1, ns)).copy_from(&a.transpose());

    let sol = kkt
        .lu()
        .solve(&rhs)
        .ok_or(Error::SingularMatrix("subcell reconstruction"))?;
    Ok(DenseMatrix::from_fn(np, ns, |i, j| sol[(i, j)]))
}
