//! Wavefront OBJ: `v` and `f` records; other records are skipped.

use std::fmt::Write;

use super::{to_f32, Geometry};
use crate::error::{Error, Result};
use crate::geometry::PointCloud;
use crate::mesh::{Face, TriMesh};

fn parse_index(tok: &str, count: usize, line: usize) -> Result<u32> {
    // `7`, `7/1`, `7//3`, `7/1/3`: only the vertex index matters.
    let head = tok.split('/').next().unwrap_or("");
    let i: i64 = head
        .parse()
        .map_err(|_| Error::parse_at_line(line, format!("bad face index {tok:?}")))?;
    let resolved = match i {
        i if i > 0 => i - 1,
        i if i < 0 => count as i64 + i,
        _ => return Err(Error::parse_at_line(line, "face index 0")),
    };
    if resolved < 0 || resolved >= count as i64 {
        return Err(Error::parse_at_line(line, format!("face index {i} out of range ({count} vertices so far)")));
    }
    Ok(resolved as u32)
}

pub fn parse(text: &str) -> Result<Geometry> {
    let mut vertices = Vec::new();
    let mut faces: Vec<Face> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let content = raw.split('#').next().unwrap_or("");
        let mut tok = content.split_whitespace();
        match tok.next() {
            Some("v") => {
                let mut c = [0.0f32; 3];
                for v in &mut c {
                    let t = tok
                        .next()
                        .ok_or_else(|| Error::parse_at_line(line, "vertex needs three coordinates"))?;
                    *v = t
                        .parse()
                        .map_err(|_| Error::parse_at_line(line, format!("bad coordinate {t:?}")))?;
                }
                vertices.push(c.map(f64::from));
            }
            Some("f") => {
                let idx: Vec<u32> = tok
                    .map(|t| parse_index(t, vertices.len(), line))
                    .collect::<Result<_>>()?;
                if idx.len() < 3 {
                    return Err(Error::parse_at_line(line, "face needs at least three vertices"));
                }
                for i in 1..idx.len() - 1 {
                    faces.push([idx[0], idx[i], idx[i + 1]]);
                }
            }
            _ => {}
        }
    }
    if faces.is_empty() {
        Ok(Geometry::Cloud(PointCloud::new(vertices)?))
    } else {
        Ok(Geometry::Mesh(TriMesh::new(vertices, faces)?))
    }
}

pub fn encode(points: &[[f64; 3]], faces: &[Face]) -> String {
    let mut s = String::with_capacity(points.len() * 32 + faces.len() * 16);
    for p in points {
        let [x, y, z] = to_f32(*p);
        writeln!(s, "v {x} {y} {z}").expect("string write");
    }
    for f in faces {
        writeln!(s, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1).expect("string write");
    }
    s
}
