//! File formats. Every writer uses fixed iteration order and fixed float
//! formatting so identical inputs give byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use halfcmc::cgrid::GridField;
use halfcmc::lorentz::{to_poincare, H2Point, VecL3};
use halfcmc::surface::{abresch_rosenberg, SurfaceGrid};
use halfcmc::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

/// Mesh in the Poincaré disk model with height as third coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshExport {
    pub vertices: Vec<[f64; 3]>,
    /// 0-indexed triangles.
    pub faces: Vec<[usize; 3]>,
    pub u: Vec<f64>,
    pub lambda: Vec<f64>,
    pub abs_q: Vec<f64>,
}

impl MeshExport {
    pub fn from_surface(s: &SurfaceGrid) -> Result<Self, CliError> {
        let g = *s.grid();
        let q = abresch_rosenberg(s);
        let mut vertices = Vec::with_capacity(g.len());
        for (i, j) in g.nodes() {
            let p = H2Point::renormalize(s.n.at(i, j)).map_err(CliError::Numeric)?;
            let (x, y) = to_poincare(&p);
            if !(x * x + y * y < 1.0) {
                return Err(CliError::Numeric(halfcmc::Error::Data {
                    node: (i, j),
                    reason: "vertex leaves the Poincare disk".into(),
                }));
            }
            vertices.push([x, y, s.h.at(i, j)]);
        }
        let mut faces = Vec::with_capacity(2 * (g.n_s - 1) * (g.n_t - 1));
        for j in 0..g.n_t - 1 {
            for i in 0..g.n_s - 1 {
                let (a, b, c, d) = (g.idx(i, j), g.idx(i + 1, j), g.idx(i + 1, j + 1), g.idx(i, j + 1));
                faces.push([a, b, c]);
                faces.push([a, c, d]);
            }
        }
        Ok(Self {
            vertices,
            faces,
            u: s.u.values().to_vec(),
            lambda: s.lambda.values().to_vec(),
            abs_q: q.values().iter().map(|z| z.norm()).collect(),
        })
    }

    pub fn to_obj(&self) -> String {
        let mut out = String::with_capacity(48 * self.vertices.len());
        out.push_str("# halfcmc surface: x y in the Poincare disk, third coordinate is height\n");
        for v in &self.vertices {
            writeln!(out, "v {:.8e} {:.8e} {:.8e}", v[0], v[1], v[2]).unwrap();
        }
        for f in &self.faces {
            writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1).unwrap();
        }
        out
    }
}

pub fn export_obj(s: &SurfaceGrid, path: &Path) -> Result<(), CliError> {
    write_file(path, &MeshExport::from_surface(s)?.to_obj())
}

/// Per-node table `i,j,s,t,x,y,h,u,lambda,abs_q`.
pub fn surface_csv(s: &SurfaceGrid) -> Result<String, CliError> {
    let mesh = MeshExport::from_surface(s)?;
    let g = *s.grid();
    let mut out = String::from("i,j,s,t,x,y,h,u,lambda,abs_q\n");
    for (k, (i, j)) in g.nodes().enumerate() {
        let v = mesh.vertices[k];
        writeln!(
            out,
            "{i},{j},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            g.s(i),
            g.t(j),
            v[0],
            v[1],
            v[2],
            mesh.u[k],
            mesh.lambda[k],
            mesh.abs_q[k]
        )
        .unwrap();
    }
    Ok(out)
}

/// Per-node table of a real field, `i,j,s,t,<name>`.
pub fn scalar_csv(f: &GridField<f64>, name: &str) -> String {
    let g = *f.grid();
    let mut out = format!("i,j,s,t,{name}\n");
    for (i, j) in g.nodes() {
        writeln!(out, "{i},{j},{:.16e},{:.16e},{:.16e}", g.s(i), g.t(j), f.at(i, j)).unwrap();
    }
    out
}

/// Per-node table of an H²-valued field, `i,j,s,t,x0,x1,x2`.
pub fn map_csv(f: &GridField<VecL3>) -> String {
    let g = *f.grid();
    let mut out = String::from("i,j,s,t,x0,x1,x2\n");
    for (i, j) in g.nodes() {
        let v = f.at(i, j);
        writeln!(out, "{i},{j},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}", g.s(i), g.t(j), v.x0, v.x1, v.x2).unwrap();
    }
    out
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SurfaceFile {
    kind: String,
    n: Value,
    h: Value,
    u: Value,
    lambda: Value,
    mask: Vec<bool>,
}

const SURFACE_KIND: &str = "surface";

pub fn surface_to_json(s: &SurfaceGrid) -> String {
    let file = SurfaceFile {
        kind: SURFACE_KIND.into(),
        n: s.n.to_json_value(),
        h: s.h.to_json_value(),
        u: s.u.to_json_value(),
        lambda: s.lambda.to_json_value(),
        mask: s.mask.clone(),
    };
    serde_json::to_string(&file).expect("surfaces serialize")
}

pub fn surface_from_json(text: &str) -> Result<SurfaceGrid, CliError> {
    let file: SurfaceFile = serde_json::from_str(text).map_err(|e| CliError::Input(e.to_string()))?;
    if file.kind != SURFACE_KIND {
        return Err(CliError::Input(format!("expected kind {SURFACE_KIND:?}, found {:?}", file.kind)));
    }
    let input = |e: halfcmc::Error| CliError::Input(e.to_string());
    let n = GridField::from_json_value(file.n).map_err(input)?;
    let h = GridField::from_json_value(file.h).map_err(input)?;
    let u = GridField::from_json_value(file.u).map_err(input)?;
    let lambda = GridField::from_json_value(file.lambda).map_err(input)?;
    SurfaceGrid::from_parts(n, h, Some(u), Some(lambda), Some(file.mask)).map_err(input)
}

pub fn read_field<T: halfcmc::cgrid::SerialValue>(path: &Path) -> Result<GridField<T>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    GridField::from_json(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn read_surface(path: &Path) -> Result<SurfaceGrid, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    surface_from_json(&text)
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub(crate) fn complex_pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}
