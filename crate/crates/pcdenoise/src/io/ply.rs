//! PLY reading (ASCII and binary little-endian) and writing.

use std::io::{BufRead, Write};

use pcdenoise_core::mesh::TriangleMesh;
use pcdenoise_core::{Label, Point3, PointCloud};

use super::FormatError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Encoding {
    Ascii,
    BinaryLittleEndian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(name: &str) -> Option<Scalar> {
        Some(match name {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }

    fn decode(self, b: &[u8]) -> f64 {
        match self {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::I32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }
}

#[derive(Debug, Clone)]
enum Property {
    Scalar { name: String, ty: Scalar },
    List { name: String, count: Scalar, item: Scalar },
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

#[derive(Debug)]
struct Header {
    encoding: Encoding,
    elements: Vec<Element>,
    /// Lines consumed, for error positions in ASCII bodies.
    lines: usize,
}

fn parse_header(reader: &mut impl BufRead) -> Result<Header, FormatError> {
    let mut line = String::new();
    let mut lineno = 0;
    let mut next = |line: &mut String| -> Result<bool, FormatError> {
        line.clear();
        lineno += 1;
        Ok(reader.read_line(line)? > 0)
    };
    if !next(&mut line)? || line.trim() != "ply" {
        return Err(FormatError::parse(1, "missing 'ply' magic"));
    }
    let mut encoding = None;
    let mut elements: Vec<Element> = Vec::new();
    let mut n = 1;
    loop {
        if !next(&mut line)? {
            return Err(FormatError::parse(n + 1, "header ends without end_header"));
        }
        n += 1;
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("format") => {
                encoding = Some(match tok.next() {
                    Some("ascii") => Encoding::Ascii,
                    Some("binary_little_endian") => Encoding::BinaryLittleEndian,
                    Some(other) => return Err(FormatError::UnsupportedEncoding(other.to_string())),
                    None => return Err(FormatError::parse(n, "format line without encoding")),
                });
            }
            Some("comment") | Some("obj_info") | None => {}
            Some("element") => {
                let name = tok
                    .next()
                    .ok_or_else(|| FormatError::parse(n, "element without name"))?;
                let count = tok
                    .next()
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| FormatError::parse(n, "element without valid count"))?;
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            Some("property") => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| FormatError::parse(n, "property before any element"))?;
                let ty = tok.next().ok_or_else(|| FormatError::parse(n, "property without type"))?;
                let prop = if ty == "list" {
                    let count = tok.next().and_then(Scalar::parse);
                    let item = tok.next().and_then(Scalar::parse);
                    let name = tok.next();
                    match (count, item, name) {
                        (Some(count), Some(item), Some(name)) => Property::List {
                            name: name.to_string(),
                            count,
                            item,
                        },
                        _ => return Err(FormatError::parse(n, "malformed list property")),
                    }
                } else {
                    let ty = Scalar::parse(ty)
                        .ok_or_else(|| FormatError::parse(n, format!("unknown property type '{ty}'")))?;
                    let name = tok.next().ok_or_else(|| FormatError::parse(n, "property without name"))?;
                    Property::Scalar {
                        name: name.to_string(),
                        ty,
                    }
                };
                el.properties.push(prop);
            }
            Some("end_header") => break,
            Some(other) => return Err(FormatError::parse(n, format!("unexpected header keyword '{other}'"))),
        }
    }
    let encoding = encoding.ok_or_else(|| FormatError::parse(n, "header has no format line"))?;
    Ok(Header {
        encoding,
        elements,
        lines: n,
    })
}

/// Decoded element rows: scalars by property, lists flattened per row.
struct Rows {
    scalars: Vec<Vec<f64>>,
    lists: Vec<Vec<Vec<f64>>>,
}

fn read_body(reader: &mut impl BufRead, header: &Header) -> Result<Vec<Rows>, FormatError> {
    match header.encoding {
        Encoding::Ascii => read_ascii(reader, header),
        Encoding::BinaryLittleEndian => {
            let mut bytes = Vec::new();
            reader.read_to_end(&mut bytes)?;
            read_binary(&bytes, header)
        }
    }
}

fn empty_rows(el: &Element) -> Rows {
    let mut scalars = Vec::new();
    let mut lists = Vec::new();
    for p in &el.properties {
        match p {
            Property::Scalar { .. } => scalars.push(Vec::with_capacity(el.count)),
            Property::List { .. } => lists.push(Vec::with_capacity(el.count)),
        }
    }
    Rows { scalars, lists }
}

fn read_ascii(reader: &mut impl BufRead, header: &Header) -> Result<Vec<Rows>, FormatError> {
    let mut out = Vec::new();
    let mut lineno = header.lines;
    let mut line = String::new();
    for el in &header.elements {
        let mut rows = empty_rows(el);
        for _ in 0..el.count {
            // Skip blank lines between rows.
            loop {
                line.clear();
                lineno += 1;
                if reader.read_line(&mut line)? == 0 {
                    return Err(FormatError::parse(lineno, format!("unexpected end of file in element '{}'", el.name)));
                }
                if !line.trim().is_empty() {
                    break;
                }
            }
            let mut tok = line.split_whitespace();
            let mut num = |what: &str| -> Result<f64, FormatError> {
                tok.next()
                    .and_then(|t| t.parse::<f64>().ok())
                    .ok_or_else(|| FormatError::parse(lineno, format!("expected number for '{what}'")))
            };
            let (mut si, mut li) = (0, 0);
            for p in &el.properties {
                match p {
                    Property::Scalar { name, .. } => {
                        rows.scalars[si].push(num(name)?);
                        si += 1;
                    }
                    Property::List { name, .. } => {
                        let n = num(name)?;
                        if n < 0.0 || n.fract() != 0.0 {
                            return Err(FormatError::parse(lineno, format!("bad list length for '{name}'")));
                        }
                        let items = (0..n as usize).map(|_| num(name)).collect::<Result<Vec<_>, _>>()?;
                        rows.lists[li].push(items);
                        li += 1;
                    }
                }
            }
        }
        out.push(rows);
    }
    Ok(out)
}

fn read_binary(bytes: &[u8], header: &Header) -> Result<Vec<Rows>, FormatError> {
    let mut pos = 0usize;
    let mut take = |n: usize, el: &str| -> Result<&[u8], FormatError> {
        let s = bytes
            .get(pos..pos + n)
            .ok_or_else(|| FormatError::Truncated(el.to_string()))?;
        pos += n;
        Ok(s)
    };
    let mut out = Vec::new();
    for el in &header.elements {
        let mut rows = empty_rows(el);
        for _ in 0..el.count {
            let (mut si, mut li) = (0, 0);
            for p in &el.properties {
                match p {
                    Property::Scalar { ty, .. } => {
                        rows.scalars[si].push(ty.decode(take(ty.size(), &el.name)?));
                        si += 1;
                    }
                    Property::List { count, item, .. } => {
                        let n = count.decode(take(count.size(), &el.name)?);
                        if n < 0.0 {
                            return Err(FormatError::Truncated(el.name.clone()));
                        }
                        let mut items = Vec::with_capacity(n as usize);
                        for _ in 0..n as usize {
                            items.push(item.decode(take(item.size(), &el.name)?));
                        }
                        rows.lists[li].push(items);
                        li += 1;
                    }
                }
            }
        }
        out.push(rows);
    }
    Ok(out)
}

fn scalar_column<'a>(el: &Element, rows: &'a Rows, name: &str) -> Option<&'a [f64]> {
    let mut si = 0;
    for p in &el.properties {
        if let Property::Scalar { name: n, .. } = p {
            if n == name {
                return Some(&rows.scalars[si]);
            }
            si += 1;
        }
    }
    None
}

fn list_column<'a>(el: &Element, rows: &'a Rows, names: &[&str]) -> Option<&'a [Vec<f64>]> {
    let mut li = 0;
    for p in &el.properties {
        if let Property::List { name, .. } = p {
            if names.contains(&name.as_str()) {
                return Some(&rows.lists[li]);
            }
            li += 1;
        }
    }
    None
}

fn vertices(el: &Element, rows: &Rows) -> Result<Vec<Point3>, FormatError> {
    let col = |n: &str| scalar_column(el, rows, n).ok_or_else(|| FormatError::MissingProperty(n.to_string()));
    let (x, y, z) = (col("x")?, col("y")?, col("z")?);
    Ok((0..el.count).map(|i| Point3::new(x[i], y[i], z[i])).collect())
}

fn labels(el: &Element, rows: &Rows) -> Result<Option<Vec<Label>>, FormatError> {
    let Some(col) = scalar_column(el, rows, "label") else {
        return Ok(None);
    };
    col.iter()
        .map(|&v| Label::from_code(v as i64).ok_or(FormatError::InvalidLabel(v as i64)))
        .collect::<Result<Vec<_>, _>>()
        .map(Some)
}

/// Reads the `vertex` element of a PLY stream, with an optional integer
/// `label` property. A `face` element is allowed and ignored; any other
/// element is rejected.
pub fn read_cloud(mut reader: impl BufRead) -> Result<PointCloud, FormatError> {
    let header = parse_header(&mut reader)?;
    if let Some(el) = header.elements.iter().find(|e| e.name != "vertex" && e.name != "face") {
        return Err(FormatError::UnsupportedElement(el.name.clone()));
    }
    let body = read_body(&mut reader, &header)?;
    let (el, rows) = header
        .elements
        .iter()
        .zip(&body)
        .find(|(e, _)| e.name == "vertex")
        .ok_or_else(|| FormatError::MissingProperty("vertex element".into()))?;
    let points = vertices(el, rows)?;
    match labels(el, rows)? {
        Some(l) => Ok(PointCloud::with_labels(points, l)?),
        None => Ok(PointCloud::new(points)),
    }
}

/// Reads a triangle mesh from `vertex` and `face` elements.
pub fn read_mesh(mut reader: impl BufRead) -> Result<TriangleMesh, FormatError> {
    let header = parse_header(&mut reader)?;
    if let Some(el) = header.elements.iter().find(|e| e.name != "vertex" && e.name != "face") {
        return Err(FormatError::UnsupportedElement(el.name.clone()));
    }
    let body = read_body(&mut reader, &header)?;
    let mut verts = None;
    let mut faces = Vec::new();
    for (el, rows) in header.elements.iter().zip(&body) {
        if el.name == "vertex" {
            verts = Some(vertices(el, rows)?);
        } else {
            let list = list_column(el, rows, &["vertex_indices", "vertex_index"])
                .ok_or_else(|| FormatError::MissingProperty("vertex_indices".into()))?;
            for poly in list {
                super::triangulate_into(poly, &mut faces)?;
            }
        }
    }
    let vertices = verts.ok_or_else(|| FormatError::MissingProperty("vertex element".into()))?;
    Ok(TriangleMesh::new(vertices, faces)?)
}

/// Extra per-vertex integer column written after the coordinates.
pub struct ExtraColumn<'a> {
    pub name: &'a str,
    pub values: &'a [u32],
}

/// Writes points as `double` coordinates, plus `int label` when the cloud is
/// labeled and an optional extra `int` column.
pub fn write_cloud(
    mut w: impl Write,
    cloud: &PointCloud,
    encoding: Encoding,
    extra: Option<ExtraColumn<'_>>,
) -> Result<(), FormatError> {
    let fmt = match encoding {
        Encoding::Ascii => "ascii",
        Encoding::BinaryLittleEndian => "binary_little_endian",
    };
    writeln!(w, "ply\nformat {fmt} 1.0\nelement vertex {}", cloud.len())?;
    writeln!(w, "property double x\nproperty double y\nproperty double z")?;
    if cloud.labels().is_some() {
        writeln!(w, "property int label")?;
    }
    if let Some(e) = &extra {
        writeln!(w, "property int {}", e.name)?;
    }
    writeln!(w, "end_header")?;
    for (i, p) in cloud.points().iter().enumerate() {
        let label = cloud.label(i).map(|l| l.code() as i32);
        let ext = extra.as_ref().map(|e| e.values[i] as i32);
        match encoding {
            Encoding::Ascii => {
                write!(w, "{} {} {}", p.x, p.y, p.z)?;
                if let Some(l) = label {
                    write!(w, " {l}")?;
                }
                if let Some(v) = ext {
                    write!(w, " {v}")?;
                }
                writeln!(w)?;
            }
            Encoding::BinaryLittleEndian => {
                for c in [p.x, p.y, p.z] {
                    w.write_all(&c.to_le_bytes())?;
                }
                if let Some(l) = label {
                    w.write_all(&l.to_le_bytes())?;
                }
                if let Some(v) = ext {
                    w.write_all(&v.to_le_bytes())?;
                }
            }
        }
    }
    Ok(())
}

pub fn write_mesh(mut w: impl Write, mesh: &TriangleMesh) -> Result<(), FormatError> {
    writeln!(w, "ply\nformat ascii 1.0\nelement vertex {}", mesh.vertices.len())?;
    writeln!(w, "property double x\nproperty double y\nproperty double z")?;
    writeln!(w, "element face {}\nproperty list uchar int vertex_indices\nend_header", mesh.triangles.len())?;
    for p in &mesh.vertices {
        writeln!(w, "{} {} {}", p.x, p.y, p.z)?;
    }
    for t in &mesh.triangles {
        writeln!(w, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ascii_with_labels_and_extra_properties() {
        let src = "ply\nformat ascii 1.0\ncomment test\nelement vertex 2\nproperty float x\nproperty float y\nproperty float z\nproperty uchar red\nproperty int label\nend_header\n0 0 0 255 0\n1 2 3 7 2\n";
        let c = read_cloud(src.as_bytes()).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.points()[1], Point3::new(1.0, 2.0, 3.0));
        assert_eq!(c.labels().unwrap(), &[Label::Surface, Label::Outlier]);
    }

    #[test]
    fn big_endian_rejected() {
        let src = "ply\nformat binary_big_endian 1.0\nelement vertex 0\nend_header\n";
        let err = read_cloud(src.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("unsupported encoding"), "{err}");
    }

    #[test]
    fn unknown_element_named() {
        let src = "ply\nformat ascii 1.0\nelement vertex 0\nproperty float x\nelement edge 0\nproperty int vertex1\nend_header\n";
        let err = read_cloud(src.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("edge"), "{err}");
    }

    #[test]
    fn malformed_row_reports_line() {
        let src = "ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty float y\nproperty float z\nend_header\n0 0 0\n1 oops 3\n";
        let err = read_cloud(src.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("line 9"), "{err}");
    }

    #[test]
    fn binary_float_vertices() {
        let mut bytes = b"ply\nformat binary_little_endian 1.0\nelement vertex 1\nproperty float x\nproperty float y\nproperty double z\nend_header\n".to_vec();
        bytes.extend_from_slice(&1.5f32.to_le_bytes());
        bytes.extend_from_slice(&(-2.0f32).to_le_bytes());
        bytes.extend_from_slice(&0.25f64.to_le_bytes());
        let c = read_cloud(&bytes[..]).unwrap();
        assert_eq!(c.points(), &[Point3::new(1.5, -2.0, 0.25)]);
        let err = read_cloud(&bytes[..bytes.len() - 1]).unwrap_err();
        assert!(matches!(err, FormatError::Truncated(_)));
    }

    #[test]
    fn mesh_round_trip() {
        let mesh = TriangleMesh::new(
            vec![Point3::ORIGIN, Point3::new(1.0, 0.0, 0.0), Point3::new(0.0, 1.0, 0.0), Point3::new(1.0, 1.0, 0.0)],
            vec![[0, 1, 2], [1, 3, 2]],
        )
        .unwrap();
        let mut buf = Vec::new();
        write_mesh(&mut buf, &mesh).unwrap();
        assert_eq!(read_mesh(&buf[..]).unwrap(), mesh);
    }
}
