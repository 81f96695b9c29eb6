//! CSV tables, legacy VTK snapshots and operator dumps.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::operator::Discretization;

/// Nodal fields written with a snapshot.
#[derive(Clone, Copy, Debug)]
pub struct FieldSet<'a> {
    pub phi: &'a [f64],
    pub phi0: &'a [f64],
    pub exact: &'a [f64],
    /// One flag per element.
    pub troubled: &'a [bool],
}

fn check(disc: &Discretization, f: &FieldSet<'_>) -> Result<()> {
    let n = disc.num_elements() * disc.np();
    for v in [f.phi, f.phi0, f.exact] {
        if v.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: v.len(),
            });
        }
    }
    if f.troubled.len() != disc.num_elements() {
        return Err(Error::LengthMismatch {
            expected: disc.num_elements(),
            got: f.troubled.len(),
        });
    }
    Ok(())
}

/// Local indices of the three corner nodes.
fn corner_nodes(disc: &Discretization) -> [usize; 3] {
    crate::refelem::REF_VERTICES.map(|v| {
        disc.re
            .nodes
            .iter()
            .enumerate()
            .min_by(|a, b| {
                let da = (a.1[0] - v[0]).hypot(a.1[1] - v[1]);
                let db = (b.1[0] - v[0]).hypot(b.1[1] - v[1]);
                da.total_cmp(&db)
            })
            .map(|(i, _)| i)
            .expect("reference element has nodes")
    })
}

/// Legacy VTK ASCII unstructured grid: every DG node is a point, every element a triangle
/// through its corner nodes.
pub fn vtk_string(disc: &Discretization, f: &FieldSet<'_>) -> Result<String> {
    check(disc, f)?;
    let (k, np) = (disc.num_elements(), disc.np());
    let n = k * np;
    let mut s = String::with_capacity(n * 96);
    s.push_str("# vtk DataFile Version 3.0\nlevel set reinitialization\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {n} double");
    for i in 0..n {
        let _ = writeln!(s, "{:.17e} {:.17e} 0", disc.x[i], disc.y[i]);
    }
    let corners = corner_nodes(disc);
    let _ = writeln!(s, "CELLS {k} {}", 4 * k);
    for e in 0..k {
        let _ = writeln!(
            s,
            "3 {} {} {}",
            e * np + corners[0],
            e * np + corners[1],
            e * np + corners[2]
        );
    }
    let _ = writeln!(s, "CELL_TYPES {k}");
    for _ in 0..k {
        s.push_str("5\n");
    }
    let _ = writeln!(s, "POINT_DATA {n}");
    let scalar = |s: &mut String, name: &str, v: &mut dyn Iterator<Item = f64>| {
        let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for x in v {
            let _ = writeln!(s, "{x:.17e}");
        }
    };
    scalar(&mut s, "phi", &mut f.phi.iter().copied());
    scalar(&mut s, "phi0", &mut f.phi0.iter().copied());
    scalar(&mut s, "exact", &mut f.exact.iter().copied());
    scalar(
        &mut s,
        "error",
        &mut f.phi.iter().zip(f.exact).map(|(a, b)| a - b),
    );
    let _ = writeln!(s, "SCALARS troubled int 1\nLOOKUP_TABLE default");
    for i in 0..n {
        let _ = writeln!(s, "{}", f.troubled[i / np] as u8);
    }
    let _ = writeln!(s, "CELL_DATA {k}\nSCALARS troubled int 1\nLOOKUP_TABLE default");
    for &t in f.troubled {
        let _ = writeln!(s, "{}", t as u8);
    }
    Ok(s)
}

pub fn write_vtk(path: &Path, disc: &Discretization, f: &FieldSet<'_>) -> Result<()> {
    fs::write(path, vtk_string(disc, f)?).map_err(|e| Error::io(path, e))
}

/// One row per node: `element,node,x,y,phi,phi0,exact,error,troubled`.
pub fn nodal_csv_string(disc: &Discretization, f: &FieldSet<'_>) -> Result<String> {
    check(disc, f)?;
    let np = disc.np();
    let mut s = String::from("element,node,x,y,phi,phi0,exact,error,troubled\n");
    for i in 0..f.phi.len() {
        let _ = writeln!(
            s,
            "{},{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{}",
            i / np,
            i % np,
            disc.x[i],
            disc.y[i],
            f.phi[i],
            f.phi0[i],
            f.exact[i],
            f.phi[i] - f.exact[i],
            f.troubled[i / np] as u8
        );
    }
    Ok(s)
}

pub fn write_nodal_csv(path: &Path, disc: &Discretization, f: &FieldSet<'_>) -> Result<()> {
    fs::write(path, nodal_csv_string(disc, f)?).map_err(|e| Error::io(path, e))
}

/// Comma-separated table with a header row.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) -> Result<()> {
        if row.len() != self.header.len() {
            return Err(Error::LengthMismatch {
                expected: self.header.len(),
                got: row.len(),
            });
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for line in std::iter::once(&self.header).chain(&self.rows) {
            w.write_record(line).expect("writing to memory cannot fail");
        }
        String::from_utf8(w.into_inner().expect("writing to memory cannot fail")).expect("records are UTF-8")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv_string()).map_err(|e| Error::io(path, e))
    }
}

/// Writes the reference operators of `disc` as plain-text matrices into `dir`.
pub fn dump_operators(dir: &Path, disc: &Discretization) -> Result<Vec<std::path::PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let re = &disc.re;
    let sg = &disc.sg;
    let mut ops: Vec<(&str, &DenseMatrix)> = vec![
        ("V", &re.vandermonde),
        ("M", &re.mass),
        ("Dr", &re.dr),
        ("Ds", &re.ds),
        ("P", &sg.p),
        ("R", &sg.r),
        ("Pf", &sg.pf),
        ("Rf", &sg.rf),
    ];
    let lifts = ["Lift0", "Lift1", "Lift2"];
    for (f, name) in lifts.iter().enumerate() {
        ops.push((name, &re.lift[f]));
    }
    let mut paths = Vec::new();
    for (name, m) in ops {
        let path = dir.join(format!("{name}_N{}.txt", re.order));
        let mut s = String::new();
        let _ = writeln!(s, "# {name} {} x {}", m.rows(), m.cols());
        for i in 0..m.rows() {
            let row: Vec<String> = m.row(i).iter().map(|v| format!("{v:.17e}")).collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        fs::write(&path, s).map_err(|e| Error::io(&path, e))?;
        paths.push(path);
    }
    Ok(paths)
}
