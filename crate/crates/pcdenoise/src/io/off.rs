//! OFF triangle meshes. Polygons with more than three corners are fanned.

use std::io::{BufRead, Write};

use pcdenoise_core::mesh::TriangleMesh;
use pcdenoise_core::Point3;

use super::{next_data_line, triangulate_into, FormatError};

pub fn read(mut reader: impl BufRead) -> Result<TriangleMesh, FormatError> {
    let mut line = String::new();
    let mut n = 0;
    fn next(reader: &mut impl BufRead, line: &mut String, n: &mut usize, what: &str) -> Result<(), FormatError> {
        if next_data_line(reader, line, n)? {
            Ok(())
        } else {
            Err(FormatError::parse(*n + 1, format!("unexpected end of file, expected {what}")))
        }
    }
    next(&mut reader, &mut line, &mut n, "OFF header")?;
    let rest = line
        .strip_prefix("OFF")
        .ok_or_else(|| FormatError::parse(1, "missing 'OFF' magic"))?
        .trim()
        .to_string();
    let counts_line = if rest.is_empty() {
        next(&mut reader, &mut line, &mut n, "counts")?;
        line.clone()
    } else {
        rest
    };
    let counts: Vec<usize> = counts_line
        .split_whitespace()
        .map(|t| t.parse())
        .collect::<Result<_, _>>()
        .map_err(|_| FormatError::parse(n, "bad vertex/face counts"))?;
    let (nv, nf) = match counts[..] {
        [nv, nf, ..] => (nv, nf),
        _ => return Err(FormatError::parse(n, "bad vertex/face counts")),
    };
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        next(&mut reader, &mut line, &mut n, "vertex")?;
        let v: Vec<f64> = line.split_whitespace().take(3).filter_map(|t| t.parse().ok()).collect();
        if v.len() != 3 {
            return Err(FormatError::parse(n, "expected 'x y z'"));
        }
        vertices.push(Point3::new(v[0], v[1], v[2]));
    }
    let mut triangles = Vec::with_capacity(nf);
    for _ in 0..nf {
        next(&mut reader, &mut line, &mut n, "face")?;
        let v: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse())
            .collect::<Result<_, _>>()
            .map_err(|_| FormatError::parse(n, "bad face"))?;
        let k = v.first().copied().unwrap_or(-1.0);
        if k < 0.0 || v.len() < 1 + k as usize {
            return Err(FormatError::parse(n, "bad face"));
        }
        triangulate_into(&v[1..1 + k as usize], &mut triangles).map_err(|e| FormatError::parse(n, e.to_string()))?;
    }
    Ok(TriangleMesh::new(vertices, triangles)?)
}

pub fn write(mut w: impl Write, mesh: &TriangleMesh) -> std::io::Result<()> {
    writeln!(w, "OFF\n{} {} 0", mesh.vertices.len(), mesh.triangles.len())?;
    for p in &mesh.vertices {
        writeln!(w, "{} {} {}", p.x, p.y, p.z)?;
    }
    for t in &mesh.triangles {
        writeln!(w, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    Ok(())
}
