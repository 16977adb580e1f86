//! Plain `x y z` lines. Extra columns are ignored; `#` starts a comment.

use std::fmt::Write;

use super::to_f32;
use crate::error::{Error, Result};
use crate::geometry::PointCloud;

pub fn parse(text: &str) -> Result<PointCloud> {
    let mut points = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("");
        let tok: Vec<&str> = content.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()).collect();
        if tok.is_empty() {
            continue;
        }
        if tok.len() < 3 {
            return Err(Error::parse_at_line(n + 1, format!("expected 3 coordinates, found {}", tok.len())));
        }
        let mut p = [0.0; 3];
        for (v, t) in p.iter_mut().zip(&tok) {
            let c: f32 = t
                .parse()
                .map_err(|_| Error::parse_at_line(n + 1, format!("bad coordinate {t:?}")))?;
            *v = f64::from(c);
        }
        points.push(p);
    }
    PointCloud::new(points)
}

pub fn encode(points: &[[f64; 3]]) -> String {
    let mut s = String::with_capacity(points.len() * 30);
    for p in points {
        let [x, y, z] = to_f32(*p);
        writeln!(s, "{x} {y} {z}").expect("string write");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_lines_ten_points() {
        let src: String = (0..10).map(|i| format!("{i} {} 0.5\n", i * 2)).collect();
        let c = parse(&format!("# header\n\n{src}")).unwrap();
        assert_eq!(c.len(), 10);
        assert_eq!(c.points[3], [3.0, 6.0, 0.5]);
        assert_eq!(parse(&encode(&c.points)).unwrap(), c);
    }

    #[test]
    fn short_line_is_rejected() {
        assert!(parse("1 2 3\n1 2\n").unwrap_err().to_string().contains("line 2"));
    }
}
