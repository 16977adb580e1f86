//! Stanford PLY, `ascii 1.0` and `binary_little_endian 1.0`.
//!
//! Vertices need scalar `x`, `y`, `z` properties; faces a list property
//! named `vertex_indices` (or `vertex_index`). Other elements and
//! properties are read and discarded.

use std::fmt::Write;

use super::{to_f32, Geometry};
use crate::error::{Error, Result};
use crate::geometry::PointCloud;
use crate::mesh::{Face, TriMesh};

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
    fn parse(s: &str) -> Option<Scalar> {
        Some(match s {
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

    fn is_integer(self) -> bool {
        !matches!(self, Scalar::F32 | Scalar::F64)
    }
}

#[derive(Debug, Clone)]
enum Property {
    Scalar { name: String, ty: Scalar },
    List { name: String, count: Scalar, item: Scalar },
}

impl Property {
    fn name(&self) -> &str {
        match self {
            Property::Scalar { name, .. } | Property::List { name, .. } => name,
        }
    }
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    props: Vec<Property>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Encoding {
    Ascii,
    BinaryLe,
}

struct Header {
    encoding: Encoding,
    elements: Vec<Element>,
    /// Byte offset of the body.
    body: usize,
    /// Lines taken by the header.
    lines: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    let mut pos = 0;
    let mut line_no = 0;
    let mut encoding = None;
    let mut elements: Vec<Element> = Vec::new();
    loop {
        let end = bytes[pos..]
            .iter()
            .position(|b| *b == b'\n')
            .map(|e| pos + e)
            .ok_or_else(|| Error::parse_at_byte(pos, "header is not terminated by end_header"))?;
        line_no += 1;
        let line = std::str::from_utf8(&bytes[pos..end])
            .map_err(|_| Error::parse_at_line(line_no, "header is not valid text"))?
            .trim_end_matches('\r');
        let start = pos;
        pos = end + 1;
        let tok: Vec<&str> = line.split_whitespace().collect();
        let bad = |msg: &str| Error::parse_at_line(line_no, format!("{msg}: {line:?}"));
        if line_no == 1 {
            if line.trim() != "ply" {
                return Err(Error::parse_at_byte(start, "missing `ply` magic"));
            }
            continue;
        }
        match tok.first().copied() {
            Some("format") => {
                encoding = Some(match (tok.get(1).copied(), tok.get(2).copied()) {
                    (Some("ascii"), Some("1.0")) => Encoding::Ascii,
                    (Some("binary_little_endian"), Some("1.0")) => Encoding::BinaryLe,
                    (Some("binary_big_endian"), _) => {
                        return Err(Error::UnsupportedFormat("big-endian PLY is not supported".into()))
                    }
                    _ => return Err(Error::UnsupportedFormat(format!("PLY format line {line:?}"))),
                });
            }
            Some("comment") | Some("obj_info") => {}
            Some("element") => {
                if tok.len() != 3 {
                    return Err(bad("malformed element line"));
                }
                let count = tok[2].parse().map_err(|_| bad("bad element count"))?;
                elements.push(Element {
                    name: tok[1].to_string(),
                    count,
                    props: Vec::new(),
                });
            }
            Some("property") => {
                let el = elements.last_mut().ok_or_else(|| bad("property before any element"))?;
                let prop = if tok.get(1) == Some(&"list") {
                    if tok.len() != 5 {
                        return Err(bad("malformed list property"));
                    }
                    let count = Scalar::parse(tok[2]).ok_or_else(|| bad("unknown type"))?;
                    let item = Scalar::parse(tok[3]).ok_or_else(|| bad("unknown type"))?;
                    if !count.is_integer() {
                        return Err(bad("list count must be an integer type"));
                    }
                    Property::List {
                        name: tok[4].to_string(),
                        count,
                        item,
                    }
                } else {
                    if tok.len() != 3 {
                        return Err(bad("malformed property"));
                    }
                    Property::Scalar {
                        name: tok[2].to_string(),
                        ty: Scalar::parse(tok[1]).ok_or_else(|| bad("unknown type"))?,
                    }
                };
                el.props.push(prop);
            }
            Some("end_header") => break,
            None => {}
            Some(_) => return Err(bad("unknown header line")),
        }
    }
    let encoding = encoding.ok_or_else(|| Error::parse_at_line(line_no, "header has no format line"))?;
    Ok(Header {
        encoding,
        elements,
        body: pos,
        lines: line_no,
    })
}

/// Source of property values, ascii or binary.
trait Values {
    fn next_value(&mut self, ty: Scalar) -> Result<f64>;
    fn end_row(&mut self) -> Result<()>;
}

struct AsciiValues<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
    first_line: usize,
    current: Vec<&'a str>,
    cursor: usize,
    line: usize,
    started: bool,
}

impl AsciiValues<'_> {
    fn load_row(&mut self) -> Result<()> {
        for (n, l) in self.lines.by_ref() {
            self.line = self.first_line + n;
            let tok: Vec<&str> = l.split_whitespace().collect();
            if !tok.is_empty() {
                self.current = tok;
                self.cursor = 0;
                return Ok(());
            }
        }
        Err(Error::parse_at_line(self.line + 1, "unexpected end of file"))
    }
}

impl Values for AsciiValues<'_> {
    fn next_value(&mut self, ty: Scalar) -> Result<f64> {
        if !self.started {
            self.load_row()?;
            self.started = true;
        }
        let t = *self
            .current
            .get(self.cursor)
            .ok_or_else(|| Error::parse_at_line(self.line, "too few values on line"))?;
        self.cursor += 1;
        let v: f64 = if ty == Scalar::F32 {
            t.parse::<f32>().map(f64::from)
        } else {
            t.parse::<f64>()
        }
        .map_err(|_| Error::parse_at_line(self.line, format!("bad value {t:?}")))?;
        if ty.is_integer() && v.fract() != 0.0 {
            return Err(Error::parse_at_line(self.line, format!("expected an integer, found {t:?}")));
        }
        Ok(v)
    }

    fn end_row(&mut self) -> Result<()> {
        if self.cursor != self.current.len() {
            return Err(Error::parse_at_line(self.line, "too many values on line"));
        }
        self.started = false;
        Ok(())
    }
}

struct BinaryValues<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Values for BinaryValues<'_> {
    fn next_value(&mut self, ty: Scalar) -> Result<f64> {
        let n = ty.size();
        let b = self
            .bytes
            .get(self.pos..self.pos + n)
            .ok_or_else(|| Error::parse_at_byte(self.pos, "unexpected end of file"))?;
        self.pos += n;
        let arr = |k: usize| -> [u8; 8] {
            let mut a = [0u8; 8];
            a[..k].copy_from_slice(b);
            a
        };
        Ok(match ty {
            Scalar::I8 => f64::from(b[0] as i8),
            Scalar::U8 => f64::from(b[0]),
            Scalar::I16 => f64::from(i16::from_le_bytes([b[0], b[1]])),
            Scalar::U16 => f64::from(u16::from_le_bytes([b[0], b[1]])),
            Scalar::I32 => f64::from(i32::from_le_bytes([b[0], b[1], b[2], b[3]])),
            Scalar::U32 => f64::from(u32::from_le_bytes([b[0], b[1], b[2], b[3]])),
            Scalar::F32 => f64::from(f32::from_le_bytes([b[0], b[1], b[2], b[3]])),
            Scalar::F64 => f64::from_le_bytes(arr(8)),
        })
    }

    fn end_row(&mut self) -> Result<()> {
        Ok(())
    }
}

fn read_body(header: &Header, values: &mut dyn Values) -> Result<(Vec<[f64; 3]>, Vec<Face>, bool)> {
    let mut points = Vec::new();
    let mut faces = Vec::new();
    let mut has_faces = false;
    for el in &header.elements {
        let is_vertex = el.name == "vertex";
        let is_face = el.name == "face";
        if is_vertex {
            for axis in ["x", "y", "z"] {
                if !el.props.iter().any(|p| matches!(p, Property::Scalar { name, .. } if name == axis)) {
                    return Err(Error::Schema(format!("vertex element has no scalar `{axis}` property")));
                }
            }
        }
        if is_face {
            has_faces = true;
        }
        for _ in 0..el.count {
            let mut p = [0.0; 3];
            for prop in &el.props {
                match prop {
                    Property::Scalar { name, ty } => {
                        let v = values.next_value(*ty)?;
                        if is_vertex {
                            match name.as_str() {
                                "x" => p[0] = v,
                                "y" => p[1] = v,
                                "z" => p[2] = v,
                                _ => {}
                            }
                        }
                    }
                    Property::List { name, count, item } => {
                        let n = values.next_value(*count)?;
                        if n < 0.0 {
                            return Err(Error::Schema(format!("negative list length in `{name}`")));
                        }
                        let idx: Vec<f64> = (0..n as usize).map(|_| values.next_value(*item)).collect::<Result<_>>()?;
                        if is_face && (name == "vertex_indices" || name == "vertex_index") {
                            if idx.len() < 3 {
                                return Err(Error::Schema("face with fewer than three vertices".into()));
                            }
                            let idx: Vec<u32> = idx
                                .iter()
                                .map(|v| {
                                    if *v < 0.0 || *v > u32::MAX as f64 {
                                        Err(Error::Schema(format!("face index {v} out of range")))
                                    } else {
                                        Ok(*v as u32)
                                    }
                                })
                                .collect::<Result<_>>()?;
                            for i in 1..idx.len() - 1 {
                                faces.push([idx[0], idx[i], idx[i + 1]]);
                            }
                        }
                    }
                }
            }
            values.end_row()?;
            if is_vertex {
                points.push(p);
            }
        }
    }
    if has_faces {
        let el = header.elements.iter().find(|e| e.name == "face").expect("seen");
        if !el.props.iter().any(|p| matches!(p, Property::List { .. }) && matches!(p.name(), "vertex_indices" | "vertex_index")) {
            return Err(Error::Schema("face element has no vertex_indices list".into()));
        }
    }
    Ok((points, faces, has_faces))
}

pub fn parse(bytes: &[u8]) -> Result<Geometry> {
    let header = parse_header(bytes)?;
    let (points, faces, has_faces) = match header.encoding {
        Encoding::Ascii => {
            let body = std::str::from_utf8(&bytes[header.body..])
                .map_err(|e| Error::parse_at_byte(header.body + e.valid_up_to(), "invalid UTF-8"))?;
            let mut v = AsciiValues {
                lines: body.lines().enumerate(),
                first_line: header.lines + 1,
                current: Vec::new(),
                cursor: 0,
                line: header.lines,
                started: false,
            };
            read_body(&header, &mut v)?
        }
        Encoding::BinaryLe => {
            let mut v = BinaryValues {
                bytes,
                pos: header.body,
            };
            let out = read_body(&header, &mut v)?;
            if v.pos != bytes.len() {
                return Err(Error::parse_at_byte(v.pos, "trailing bytes after the last element"));
            }
            out
        }
    };
    if has_faces {
        Ok(Geometry::Mesh(TriMesh::new(points, faces)?))
    } else {
        Ok(Geometry::Cloud(PointCloud::new(points)?))
    }
}

fn header(encoding: &str, points: usize, faces: Option<usize>) -> String {
    let mut s = format!(
        "ply\nformat {encoding} 1.0\nelement vertex {points}\nproperty float x\nproperty float y\nproperty float z\n"
    );
    if let Some(f) = faces {
        write!(s, "element face {f}\nproperty list uchar int vertex_indices\n").expect("string write");
    }
    s.push_str("end_header\n");
    s
}

pub fn encode_ascii(points: &[[f64; 3]], faces: &[Face], with_faces: bool) -> String {
    let mut s = header("ascii", points.len(), with_faces.then_some(faces.len()));
    for p in points {
        let [x, y, z] = to_f32(*p);
        writeln!(s, "{x} {y} {z}").expect("string write");
    }
    for f in faces {
        writeln!(s, "3 {} {} {}", f[0], f[1], f[2]).expect("string write");
    }
    s
}

pub fn encode_binary(points: &[[f64; 3]], faces: &[Face], with_faces: bool) -> Vec<u8> {
    let mut out = header("binary_little_endian", points.len(), with_faces.then_some(faces.len())).into_bytes();
    out.reserve(points.len() * 12 + faces.len() * 13);
    for p in points {
        for c in to_f32(*p) {
            out.extend_from_slice(&c.to_le_bytes());
        }
    }
    for f in faces {
        out.push(3);
        for v in f {
            out.extend_from_slice(&(*v as i32).to_le_bytes());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tetra() -> TriMesh {
        TriMesh::new(
            vec![[0.1, 0.2, 0.3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0 / 3.0]],
            vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]],
        )
        .unwrap()
    }

    #[test]
    fn ascii_and_binary_agree_bit_for_bit() {
        let m = tetra();
        let a = parse(encode_ascii(&m.vertices, &m.faces, true).as_bytes()).unwrap();
        let b = parse(&encode_binary(&m.vertices, &m.faces, true)).unwrap();
        assert_eq!(a, b);
        let m2 = a.into_mesh().unwrap();
        assert_eq!(m2.faces, m.faces);
        for (p, q) in m.vertices.iter().zip(&m2.vertices) {
            assert_eq!(to_f32(*p), to_f32(*q));
        }
    }

    #[test]
    fn big_endian_is_unsupported() {
        let src = b"ply\nformat binary_big_endian 1.0\nelement vertex 0\nend_header\n";
        assert!(matches!(parse(src), Err(Error::UnsupportedFormat(_))));
    }

    #[test]
    fn extra_elements_and_properties_are_skipped() {
        let src = "ply\nformat ascii 1.0\ncomment made by hand\nelement vertex 3\nproperty double x\nproperty double y\n\
                   property double z\nproperty uchar red\nelement face 1\nproperty list uchar uint vertex_index\n\
                   property float quality\nelement edge 1\nproperty int a\nproperty int b\nend_header\n\
                   0 0 0 255\n1 0 0 0\n0 1 0 7\n4 0 1 2 1 0.5\n0 1\n";
        let m = parse(src.as_bytes()).unwrap().into_mesh().unwrap();
        assert_eq!(m.faces, vec![[0, 1, 2], [0, 2, 1]]);
    }

    #[test]
    fn truncation_reports_position() {
        let m = tetra();
        let bin = encode_binary(&m.vertices, &m.faces, true);
        let e = parse(&bin[..bin.len() - 3]).unwrap_err().to_string();
        assert!(e.contains("byte"), "{e}");
        let asc = encode_ascii(&m.vertices, &m.faces, true);
        let cut = asc.replace("1 0 0\n", "1 0\n");
        let e = parse(cut.as_bytes()).unwrap_err().to_string();
        assert!(e.contains("line"), "{e}");
    }

    #[test]
    fn cloud_without_face_element() {
        let g = parse(&encode_binary(&[[1.0, 2.0, 3.0]], &[], false)).unwrap();
        assert!(matches!(g, Geometry::Cloud(ref c) if c.points == vec![[1.0, 2.0, 3.0]]));
    }
}
