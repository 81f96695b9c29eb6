//! Unstructured triangle meshes: generation, uniform refinement, connectivity, file I/O and
//! affine geometric factors.
//!
//! Local face `f` of an element joins its vertices `f` and `f + 1 (mod 3)`, matching the face
//! numbering of [`crate::refelem`].

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Triangle mesh with element-to-element and element-to-face adjacency.
#[derive(Clone, Debug)]
pub struct Mesh {
    pub vertices: Vec<[f64; 2]>,
    /// Vertex triplets, counter-clockwise.
    pub elements: Vec<[usize; 3]>,
    /// Neighbour across each face; the element itself on the domain boundary.
    pub etoe: Vec<[usize; 3]>,
    /// Local face index of the neighbour's matching face; the face itself on the boundary.
    pub etof: Vec<[usize; 3]>,
    pub boundary: Vec<[bool; 3]>,
}

impl Mesh {
    /// Validates indices, repairs clockwise elements and builds connectivity.
    pub fn new(vertices: Vec<[f64; 2]>, mut elements: Vec<[usize; 3]>) -> Result<Self> {
        let count = vertices.len();
        for (e, tri) in elements.iter_mut().enumerate() {
            for &v in tri.iter() {
                if v >= count {
                    return Err(Error::BadVertexIndex {
                        element: e,
                        vertex: v,
                        count,
                    });
                }
            }
            let a = signed_area(&vertices, tri);
            if !(a.abs() > 0.0) {
                return Err(Error::DegenerateElement(e));
            }
            if a < 0.0 {
                tri.swap(1, 2);
            }
        }
        let (etoe, etof, boundary) = build_connectivity(&elements)?;
        Ok(Self {
            vertices,
            elements,
            etoe,
            etof,
            boundary,
        })
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn element_vertices(&self, e: usize) -> [[f64; 2]; 3] {
        self.elements[e].map(|v| self.vertices[v])
    }

    pub fn area(&self, e: usize) -> f64 {
        signed_area(&self.vertices, &self.elements[e])
    }

    pub fn num_boundary_faces(&self) -> usize {
        self.boundary
            .iter()
            .map(|b| b.iter().filter(|&&x| x).count())
            .sum()
    }

    pub fn num_interior_faces(&self) -> usize {
        (3 * self.num_elements() - self.num_boundary_faces()) / 2
    }

    /// Reads the native ASCII format, or Gmsh 2.2 ASCII when the file starts with `$MeshFormat`.
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        if text.trim_start().starts_with("$MeshFormat") {
            parse_gmsh(&text, path)
        } else {
            parse_native(&text, path)
        }
    }

    /// Writes the native ASCII format: `NV NE`, then vertices, then 0-based triplets.
    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_native_string()).map_err(|e| Error::io(path, e))
    }

    pub fn to_native_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} {}", self.vertices.len(), self.elements.len());
        for v in &self.vertices {
            let _ = writeln!(s, "{:.17e} {:.17e}", v[0], v[1]);
        }
        for t in &self.elements {
            let _ = writeln!(s, "{} {} {}", t[0], t[1], t[2]);
        }
        s
    }
}

fn signed_area(vertices: &[[f64; 2]], tri: &[usize; 3]) -> f64 {
    let [a, b, c] = tri.map(|v| vertices[v]);
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

type Connectivity = (Vec<[usize; 3]>, Vec<[usize; 3]>, Vec<[bool; 3]>);

/// Face adjacency from shared edges. Fails on edges shared by more than two elements.
pub fn build_connectivity(elements: &[[usize; 3]]) -> Result<Connectivity> {
    let k = elements.len();
    let mut etoe: Vec<[usize; 3]> = (0..k).map(|e| [e; 3]).collect();
    let mut etof: Vec<[usize; 3]> = (0..k).map(|_| [0, 1, 2]).collect();
    let mut boundary = vec![[true; 3]; k];

    let mut edges: HashMap<(usize, usize), Vec<(usize, usize)>> = HashMap::with_capacity(3 * k);
    for (e, tri) in elements.iter().enumerate() {
        for f in 0..3 {
            let (a, b) = (tri[f], tri[(f + 1) % 3]);
            edges.entry((a.min(b), a.max(b))).or_default().push((e, f));
        }
    }
    for ((a, b), sides) in edges {
        match sides.as_slice() {
            [_] => {}
            [(e1, f1), (e2, f2)] => {
                etoe[*e1][*f1] = *e2;
                etof[*e1][*f1] = *f2;
                etoe[*e2][*f2] = *e1;
                etof[*e2][*f2] = *f1;
                boundary[*e1][*f1] = false;
                boundary[*e2][*f2] = false;
            }
            _ => return Err(Error::NonManifoldEdge(a, b)),
        }
    }
    Ok((etoe, etof, boundary))
}

/// Structured triangulation of `[-L, L]^2` with boundary edge length `h`.
///
/// The square is cut into `n = 2L/h` cells per side. Cells with `(i + j) % 5 == 4` get a centre
/// vertex and four triangles; the remaining cells are split along a diagonal that alternates in
/// a checkerboard. For `L = 2`, `h = 0.4` this gives 240 elements.
pub fn generate_square_mesh(half_width: f64, h: f64) -> Result<Mesh> {
    if !(half_width > 0.0) || !(h > 0.0) || h > 2.0 * half_width {
        return Err(Error::InvalidArgument(format!(
            "square mesh needs L > 0 and 0 < h <= 2L (L = {half_width}, h = {h})"
        )));
    }
    let ratio = 2.0 * half_width / h;
    let n = ratio.round() as usize;
    if (ratio - n as f64).abs() > 1e-9 * ratio.max(1.0) {
        return Err(Error::InvalidArgument(format!(
            "2L/h must be an integer (L = {half_width}, h = {h})"
        )));
    }
    let coord = |i: usize| -half_width + 2.0 * half_width * i as f64 / n as f64;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1) + n * n / 5 + 1);
    for j in 0..=n {
        for i in 0..=n {
            vertices.push([coord(i), coord(j)]);
        }
    }
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut elements = Vec::new();
    for j in 0..n {
        for i in 0..n {
            let (v00, v10, v11, v01) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            if (i + j) % 5 == 4 {
                let c = vertices.len();
                vertices.push([0.5 * (coord(i) + coord(i + 1)), 0.5 * (coord(j) + coord(j + 1))]);
                elements.extend([[v00, v10, c], [v10, v11, c], [v11, v01, c], [v01, v00, c]]);
            } else if (i + j) % 2 == 0 {
                elements.extend([[v00, v10, v11], [v00, v11, v01]]);
            } else {
                elements.extend([[v00, v10, v01], [v10, v11, v01]]);
            }
        }
    }
    Mesh::new(vertices, elements)
}

/// Splits every triangle into four congruent children through its edge midpoints.
pub fn refine_uniform(mesh: &Mesh) -> Result<Mesh> {
    let mut vertices = mesh.vertices.clone();
    let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
    let mut mid = |a: usize, b: usize, vertices: &mut Vec<[f64; 2]>| {
        *midpoints.entry((a.min(b), a.max(b))).or_insert_with(|| {
            let (p, q) = (vertices[a], vertices[b]);
            vertices.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
            vertices.len() - 1
        })
    };
    let mut elements = Vec::with_capacity(4 * mesh.elements.len());
    for &[a, b, c] in &mesh.elements {
        let ab = mid(a, b, &mut vertices);
        let bc = mid(b, c, &mut vertices);
        let ca = mid(c, a, &mut vertices);
        elements.extend([[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
    }
    Mesh::new(vertices, elements)
}

/// Applies [`refine_uniform`] `levels` times.
pub fn refine_times(mesh: &Mesh, levels: usize) -> Result<Mesh> {
    let mut m = mesh.clone();
    for _ in 0..levels {
        m = refine_uniform(&m)?;
    }
    Ok(m)
}

fn parse_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn parse_native(text: &str, path: &Path) -> Result<Mesh> {
    let mut tokens = text.split_whitespace();
    let mut next = |what: &str| {
        tokens
            .next()
            .ok_or_else(|| parse_err(path, format!("unexpected end of file reading {what}")))
    };
    let num = |tok: &str, what: &str| -> Result<usize> {
        tok.parse()
            .map_err(|_| parse_err(path, format!("bad {what} '{tok}'")))
    };
    let real = |tok: &str| -> Result<f64> {
        tok.parse()
            .map_err(|_| parse_err(path, format!("bad coordinate '{tok}'")))
    };
    let nv = num(next("vertex count")?, "vertex count")?;
    let ne = num(next("element count")?, "element count")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let x = real(next("vertex")?)?;
        let y = real(next("vertex")?)?;
        vertices.push([x, y]);
    }
    let mut elements = Vec::with_capacity(ne);
    for _ in 0..ne {
        let mut t = [0; 3];
        for v in t.iter_mut() {
            *v = num(next("element")?, "vertex index")?;
        }
        elements.push(t);
    }
    Mesh::new(vertices, elements)
}

fn parse_gmsh(text: &str, path: &Path) -> Result<Mesh> {
    let mut lines = text.lines().map(str::trim);
    let mut vertices = Vec::new();
    let mut index_of: HashMap<usize, usize> = HashMap::new();
    let mut elements = Vec::new();
    let mut skipped = 0usize;
    while let Some(line) = lines.next() {
        match line {
            "$MeshFormat" => {
                let header = lines.next().unwrap_or("");
                let version = header.split_whitespace().next().unwrap_or("");
                if !version.starts_with('2') {
                    return Err(parse_err(path, format!("unsupported Gmsh version '{version}'")));
                }
                if header.split_whitespace().nth(1) != Some("0") {
                    return Err(parse_err(path, "only ASCII Gmsh files are supported"));
                }
            }
            "$Nodes" => {
                let n: usize = lines
                    .next()
                    .and_then(|l| l.parse().ok())
                    .ok_or_else(|| parse_err(path, "bad node count"))?;
                for _ in 0..n {
                    let l = lines.next().ok_or_else(|| parse_err(path, "truncated $Nodes"))?;
                    let f: Vec<&str> = l.split_whitespace().collect();
                    if f.len() < 3 {
                        return Err(parse_err(path, format!("bad node line '{l}'")));
                    }
                    let id: usize = f[0]
                        .parse()
                        .map_err(|_| parse_err(path, format!("bad node id in '{l}'")))?;
                    let x: f64 = f[1]
                        .parse()
                        .map_err(|_| parse_err(path, format!("bad x in '{l}'")))?;
                    let y: f64 = f[2]
                        .parse()
                        .map_err(|_| parse_err(path, format!("bad y in '{l}'")))?;
                    index_of.insert(id, vertices.len());
                    vertices.push([x, y]);
                }
            }
            "$Elements" => {
                let n: usize = lines
                    .next()
                    .and_then(|l| l.parse().ok())
                    .ok_or_else(|| parse_err(path, "bad element count"))?;
                for _ in 0..n {
                    let l = lines
                        .next()
                        .ok_or_else(|| parse_err(path, "truncated $Elements"))?;
                    let f: Vec<usize> = l
                        .split_whitespace()
                        .map(|t| t.parse())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| parse_err(path, format!("bad element line '{l}'")))?;
                    if f.len() < 3 {
                        return Err(parse_err(path, format!("bad element line '{l}'")));
                    }
                    if f[1] != 2 {
                        skipped += 1;
                        continue;
                    }
                    let first = 3 + f[2];
                    if f.len() < first + 3 {
                        return Err(parse_err(path, format!("bad triangle line '{l}'")));
                    }
                    let mut tri = [0; 3];
                    for (k, v) in tri.iter_mut().enumerate() {
                        *v = *index_of
                            .get(&f[first + k])
                            .ok_or_else(|| parse_err(path, format!("unknown node {}", f[first + k])))?;
                    }
                    elements.push(tri);
                }
            }
            _ => {}
        }
    }
    if skipped > 0 {
        log::warn!("{}: skipped {skipped} non-triangle Gmsh elements", path.display());
    }
    if elements.is_empty() {
        return Err(parse_err(path, "no triangles found"));
    }
    Mesh::new(vertices, elements)
}

/// Per-element affine geometric factors and per-face normals / surface Jacobians.
#[derive(Clone, Debug)]
pub struct GeometricFactors {
    pub rx: Vec<f64>,
    pub ry: Vec<f64>,
    pub sx: Vec<f64>,
    pub sy: Vec<f64>,
    /// Volume Jacobian (physical area / reference area).
    pub j: Vec<f64>,
    /// Surface Jacobian per face (physical length / reference length 2).
    pub jf: Vec<[f64; 3]>,
    /// `Jf / J` per face.
    pub fscale: Vec<[f64; 3]>,
    pub normals: Vec<[[f64; 2]; 3]>,
    pub inradius: Vec<f64>,
    /// Longest edge.
    pub h_max: Vec<f64>,
}

impl GeometricFactors {
    /// Maps reference coordinates `(r, s)` of element `e` to physical coordinates.
    pub fn map_point(mesh: &Mesh, e: usize, r: f64, s: f64) -> [f64; 2] {
        let [a, b, c] = mesh.element_vertices(e);
        let (l0, l1, l2) = (-(r + s) / 2.0, (1.0 + r) / 2.0, (1.0 + s) / 2.0);
        [
            l0 * a[0] + l1 * b[0] + l2 * c[0],
            l0 * a[1] + l1 * b[1] + l2 * c[1],
        ]
    }
}

pub fn compute_geometry(mesh: &Mesh) -> Result<GeometricFactors> {
    let k = mesh.num_elements();
    let mut g = GeometricFactors {
        rx: Vec::with_capacity(k),
        ry: Vec::with_capacity(k),
        sx: Vec::with_capacity(k),
        sy: Vec::with_capacity(k),
        j: Vec::with_capacity(k),
        jf: Vec::with_capacity(k),
        fscale: Vec::with_capacity(k),
        normals: Vec::with_capacity(k),
        inradius: Vec::with_capacity(k),
        h_max: Vec::with_capacity(k),
    };
    for e in 0..k {
        let [a, b, c] = mesh.element_vertices(e);
        let (xr, yr) = (0.5 * (b[0] - a[0]), 0.5 * (b[1] - a[1]));
        let (xs, ys) = (0.5 * (c[0] - a[0]), 0.5 * (c[1] - a[1]));
        let jac = xr * ys - xs * yr;
        if !(jac > 0.0) {
            return Err(Error::DegenerateElement(e));
        }
        g.rx.push(ys / jac);
        g.ry.push(-xs / jac);
        g.sx.push(-yr / jac);
        g.sy.push(xr / jac);
        g.j.push(jac);

        let verts = [a, b, c];
        let mut jf = [0.0; 3];
        let mut nrm = [[0.0; 2]; 3];
        let mut perimeter = 0.0;
        let mut longest = 0.0f64;
        for f in 0..3 {
            let (p, q) = (verts[f], verts[(f + 1) % 3]);
            let (dx, dy) = (q[0] - p[0], q[1] - p[1]);
            let len = dx.hypot(dy);
            jf[f] = 0.5 * len;
            nrm[f] = [dy / len, -dx / len];
            perimeter += len;
            longest = longest.max(len);
        }
        g.fscale.push(jf.map(|x| x / jac));
        g.jf.push(jf);
        g.normals.push(nrm);
        g.inradius.push(2.0 * (2.0 * jac) / perimeter);
        g.h_max.push(longest);
    }
    Ok(g)
}
