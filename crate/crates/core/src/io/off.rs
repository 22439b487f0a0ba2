use std::io::Write;

use crate::error::{Error, Location, Result};
use crate::geometry::{Point3, TriangleMesh};
use crate::scalar::Real;

/// Parses an OFF mesh. Faces with more than three vertices are
/// fan-triangulated; color values trailing a face are ignored.
pub fn parse_off<T: Real>(text: &str) -> Result<TriangleMesh<T>> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let err = |line: usize, message: String| Error::Parse {
        location: Location::Line(line),
        message,
    };

    let (first_no, first) = lines.next().ok_or(Error::Empty("OFF file"))?;
    let rest = first
        .strip_prefix("OFF")
        .ok_or_else(|| err(first_no, "missing OFF header".into()))?
        .trim();
    let (counts_no, counts_line) = if rest.is_empty() {
        lines
            .next()
            .ok_or_else(|| err(first_no + 1, "missing element counts".into()))?
    } else {
        (first_no, rest)
    };
    let counts: Vec<usize> = counts_line
        .split_whitespace()
        .map(|t| t.parse())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| err(counts_no, format!("invalid counts {counts_line:?}")))?;
    if counts.len() < 2 {
        return Err(err(counts_no, "expected vertex and face counts".into()));
    }
    let (nv, nf) = (counts[0], counts[1]);

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (no, line) = lines
            .next()
            .ok_or_else(|| err(counts_no, "unexpected end of vertex list".into()))?;
        let c: Vec<T> = line
            .split_whitespace()
            .take(3)
            .map(|t| t.parse::<T>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| err(no, format!("invalid vertex {line:?}")))?;
        if c.len() < 3 {
            return Err(err(no, "vertex needs 3 coordinates".into()));
        }
        vertices.push(Point3::new(c[0], c[1], c[2]));
    }

    let mut triangles = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (no, line) = lines
            .next()
            .ok_or_else(|| err(counts_no, "unexpected end of face list".into()))?;
        let mut tok = line.split_whitespace();
        let k: usize = tok
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| err(no, "invalid face size".into()))?;
        let idx: Vec<usize> = tok
            .take(k)
            .map(|t| t.parse())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| err(no, format!("invalid face {line:?}")))?;
        if idx.len() != k || k < 3 {
            return Err(err(
                no,
                format!("face needs at least 3 indices, got {}", idx.len()),
            ));
        }
        super::fan(&idx, &mut triangles);
    }
    TriangleMesh::new(vertices, triangles)
}

pub fn write_off<T: Real, W: Write>(out: &mut W, mesh: &TriangleMesh<T>) -> Result<()> {
    writeln!(out, "OFF")?;
    writeln!(
        out,
        "{} {} 0",
        mesh.vertices().len(),
        mesh.triangles().len()
    )?;
    for p in mesh.vertices() {
        writeln!(out, "{} {} {}", p.x, p.y, p.z)?;
    }
    for t in mesh.triangles() {
        writeln!(out, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quad_is_fan_triangulated() {
        let m = parse_off::<f64>("OFF\n# square\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n")
            .unwrap();
        assert_eq!(m.triangles(), &[[0, 1, 2], [0, 2, 3]]);
        assert!((m.area() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn counts_on_header_line() {
        let m = parse_off::<f32>("OFF 3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2 255 0 0\n").unwrap();
        assert_eq!(m.triangles().len(), 1);
    }

    #[test]
    fn out_of_range_index() {
        assert!(parse_off::<f64>("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 5\n").is_err());
    }

    #[test]
    fn round_trip() {
        let m = parse_off::<f64>("OFF\n3 1 0\n0 0 0\n1 0.1 0\n0 1 0.3\n3 0 1 2\n").unwrap();
        let mut buf = Vec::new();
        write_off(&mut buf, &m).unwrap();
        assert_eq!(
            parse_off::<f64>(std::str::from_utf8(&buf).unwrap()).unwrap(),
            m
        );
    }
}
