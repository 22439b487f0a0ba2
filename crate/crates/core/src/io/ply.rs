//! PLY (ASCII and binary little-endian). Only the `vertex` positions and
//! the `face` index lists are kept; every other property is skipped.

use std::io::Write;

use crate::error::{Error, Location, Result};
use crate::geometry::Point3;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlyEncoding {
    Ascii,
    BinaryLittleEndian,
}

#[derive(Debug, Clone, Default)]
pub struct PlyData<T> {
    pub vertices: Vec<Point3<T>>,
    pub faces: Vec<Vec<usize>>,
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
    fn parse(name: &str) -> Option<Self> {
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
            Scalar::I32 => i32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Scalar::U32 => u32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Scalar::F32 => f32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Scalar::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }
}

#[derive(Debug, Clone)]
enum Property {
    Scalar {
        name: String,
        ty: Scalar,
    },
    List {
        name: String,
        count: Scalar,
        item: Scalar,
    },
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    props: Vec<Property>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Role {
    Skip,
    X,
    Y,
    Z,
    FaceList,
}

fn parse_err(location: Location, message: impl Into<String>) -> Error {
    Error::Parse {
        location,
        message: message.into(),
    }
}

struct Header {
    encoding: PlyEncoding,
    elements: Vec<Element>,
    body_offset: usize,
    body_line: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    let mut offset = 0;
    let mut lineno = 0;
    let mut encoding = None;
    let mut elements: Vec<Element> = Vec::new();
    loop {
        let end = bytes[offset..]
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| parse_err(Location::Byte(offset), "unterminated PLY header"))?;
        let raw = &bytes[offset..offset + end];
        lineno += 1;
        offset += end + 1;
        let line = String::from_utf8_lossy(raw);
        let line = line.trim();
        let loc = Location::Line(lineno);
        if lineno == 1 {
            if line != "ply" {
                return Err(parse_err(loc, "missing 'ply' magic"));
            }
            continue;
        }
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("format") => {
                encoding = Some(match tok.next() {
                    Some("ascii") => PlyEncoding::Ascii,
                    Some("binary_little_endian") => PlyEncoding::BinaryLittleEndian,
                    Some(other) => {
                        return Err(Error::Format(format!("PLY encoding {other}")));
                    }
                    None => return Err(parse_err(loc, "missing format")),
                });
            }
            Some("comment") | Some("obj_info") | None => {}
            Some("element") => {
                let name = tok.next().ok_or_else(|| parse_err(loc, "element name"))?;
                let count = tok
                    .next()
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| parse_err(loc, "element count"))?;
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    props: Vec::new(),
                });
            }
            Some("property") => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| parse_err(loc, "property before element"))?;
                let ty = tok.next().ok_or_else(|| parse_err(loc, "property type"))?;
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
                        _ => return Err(parse_err(loc, "malformed list property")),
                    }
                } else {
                    let ty = Scalar::parse(ty)
                        .ok_or_else(|| parse_err(loc, format!("unknown type {ty}")))?;
                    let name = tok.next().ok_or_else(|| parse_err(loc, "property name"))?;
                    Property::Scalar {
                        name: name.to_string(),
                        ty,
                    }
                };
                el.props.push(prop);
            }
            Some("end_header") => break,
            Some(other) => return Err(parse_err(loc, format!("unknown header keyword {other}"))),
        }
    }
    Ok(Header {
        encoding: encoding.ok_or_else(|| parse_err(Location::Line(2), "missing format line"))?,
        elements,
        body_offset: offset,
        body_line: lineno + 1,
    })
}

fn roles(el: &Element) -> Vec<Role> {
    el.props
        .iter()
        .map(|p| match (el.name.as_str(), p) {
            ("vertex", Property::Scalar { name, .. }) => match name.as_str() {
                "x" => Role::X,
                "y" => Role::Y,
                "z" => Role::Z,
                _ => Role::Skip,
            },
            ("face", Property::List { name, .. })
                if name == "vertex_indices" || name == "vertex_index" =>
            {
                Role::FaceList
            }
            _ => Role::Skip,
        })
        .collect()
}

pub fn parse_ply<T: Real>(bytes: &[u8]) -> Result<PlyData<T>> {
    let header = parse_header(bytes)?;
    let mut data = PlyData {
        vertices: Vec::new(),
        faces: Vec::new(),
    };
    for el in &header.elements {
        if el.name == "vertex" {
            let r = roles(el);
            if !(r.contains(&Role::X) && r.contains(&Role::Y) && r.contains(&Role::Z)) {
                return Err(Error::Format("vertex element lacks x/y/z".into()));
            }
        }
    }
    match header.encoding {
        PlyEncoding::Ascii => parse_ascii_body(bytes, &header, &mut data)?,
        PlyEncoding::BinaryLittleEndian => parse_binary_body(bytes, &header, &mut data)?,
    }
    Ok(data)
}

fn record<T: Real>(
    el: &Element,
    coords: [f64; 3],
    face: Option<Vec<usize>>,
    native: Option<[T; 3]>,
    data: &mut PlyData<T>,
) {
    if el.name == "vertex" {
        let p = match native {
            Some(n) => n.into(),
            None => Point3::from_f64(coords[0], coords[1], coords[2]),
        };
        data.vertices.push(p);
    } else if let Some(f) = face {
        data.faces.push(f);
    }
}

fn parse_ascii_body<T: Real>(bytes: &[u8], h: &Header, data: &mut PlyData<T>) -> Result<()> {
    let body = String::from_utf8_lossy(&bytes[h.body_offset..]);
    let mut lines = body
        .lines()
        .enumerate()
        .map(|(i, l)| (h.body_line + i, l))
        .filter(|(_, l)| !l.trim().is_empty());
    for el in &h.elements {
        let roles = roles(el);
        for _ in 0..el.count {
            let (lineno, line) = lines.next().ok_or_else(|| {
                parse_err(
                    Location::Line(h.body_line + body.lines().count()),
                    format!("unexpected end of data in element {}", el.name),
                )
            })?;
            let loc = Location::Line(lineno);
            let mut tok = line.split_whitespace();
            let mut next = |what: &str| -> Result<&str> {
                tok.next()
                    .ok_or_else(|| parse_err(loc, format!("missing value for {what}")))
            };
            let mut coords = [0.0; 3];
            let mut native = [T::zero(); 3];
            let mut face = None;
            for (prop, role) in el.props.iter().zip(&roles) {
                match prop {
                    Property::Scalar { name, .. } => {
                        let t = next(name)?;
                        let axis = match role {
                            Role::X => 0,
                            Role::Y => 1,
                            Role::Z => 2,
                            _ => {
                                t.parse::<f64>()
                                    .map_err(|_| parse_err(loc, format!("invalid number {t:?}")))?;
                                continue;
                            }
                        };
                        native[axis] = t
                            .parse::<T>()
                            .map_err(|_| parse_err(loc, format!("invalid number {t:?}")))?;
                        coords[axis] = native[axis].as_f64();
                    }
                    Property::List { name, .. } => {
                        let t = next(name)?;
                        let n: usize = t
                            .parse()
                            .map_err(|_| parse_err(loc, format!("invalid list count {t:?}")))?;
                        let mut items = Vec::with_capacity(n);
                        for _ in 0..n {
                            let t = next(name)?;
                            let v: usize = t
                                .parse()
                                .map_err(|_| parse_err(loc, format!("invalid index {t:?}")))?;
                            items.push(v);
                        }
                        if *role == Role::FaceList {
                            face = Some(items);
                        }
                    }
                }
            }
            record(el, coords, face, Some(native), data);
        }
    }
    Ok(())
}

fn parse_binary_body<T: Real>(bytes: &[u8], h: &Header, data: &mut PlyData<T>) -> Result<()> {
    let mut off = h.body_offset;
    let take = |off: &mut usize, n: usize| -> Result<&[u8]> {
        let s = bytes
            .get(*off..*off + n)
            .ok_or_else(|| parse_err(Location::Byte(*off), "unexpected end of binary data"))?;
        *off += n;
        Ok(s)
    };
    for el in &h.elements {
        let roles = roles(el);
        for _ in 0..el.count {
            let mut coords = [0.0; 3];
            let mut native: [Option<T>; 3] = [None; 3];
            let mut face = None;
            for (prop, role) in el.props.iter().zip(&roles) {
                match prop {
                    Property::Scalar { ty, .. } => {
                        let b = take(&mut off, ty.size())?;
                        let axis = match role {
                            Role::X => 0,
                            Role::Y => 1,
                            Role::Z => 2,
                            _ => continue,
                        };
                        coords[axis] = ty.decode(b);
                        // same width as T: keep the exact bits
                        let same = matches!((ty, T::BYTES), (Scalar::F32, 4) | (Scalar::F64, 8));
                        if same {
                            native[axis] = Some(T::read_le_bytes(b));
                        }
                    }
                    Property::List { count, item, .. } => {
                        let n = count.decode(take(&mut off, count.size())?);
                        if n < 0.0 {
                            return Err(parse_err(Location::Byte(off), "negative list count"));
                        }
                        let mut items = Vec::with_capacity(n as usize);
                        for _ in 0..n as usize {
                            let v = item.decode(take(&mut off, item.size())?);
                            if v < 0.0 {
                                return Err(parse_err(Location::Byte(off), "negative index"));
                            }
                            items.push(v as usize);
                        }
                        if *role == Role::FaceList {
                            face = Some(items);
                        }
                    }
                }
            }
            let native = match native {
                [Some(x), Some(y), Some(z)] => Some([x, y, z]),
                _ => None,
            };
            if el.name == "vertex" {
                let p: Point3<T> = match native {
                    Some(n) => n.into(),
                    None => Point3::from_f64(coords[0], coords[1], coords[2]),
                };
                if !p.is_finite() {
                    return Err(parse_err(
                        Location::Byte(off),
                        "non-finite vertex coordinate",
                    ));
                }
            }
            record(el, coords, face, native, data);
        }
    }
    Ok(())
}

/// Writes vertices (and optional triangles) using `T`'s native float width.
pub fn write_ply<T: Real, W: Write>(
    out: &mut W,
    vertices: &[Point3<T>],
    triangles: &[[usize; 3]],
    encoding: PlyEncoding,
) -> Result<()> {
    let format = match encoding {
        PlyEncoding::Ascii => "ascii",
        PlyEncoding::BinaryLittleEndian => "binary_little_endian",
    };
    writeln!(out, "ply")?;
    writeln!(out, "format {format} 1.0")?;
    writeln!(out, "element vertex {}", vertices.len())?;
    for axis in ["x", "y", "z"] {
        writeln!(out, "property {} {axis}", T::PLY_TYPE)?;
    }
    if !triangles.is_empty() {
        writeln!(out, "element face {}", triangles.len())?;
        writeln!(out, "property list uchar int vertex_indices")?;
    }
    writeln!(out, "end_header")?;
    match encoding {
        PlyEncoding::Ascii => {
            // shortest representation that round-trips exactly
            for p in vertices {
                writeln!(out, "{} {} {}", p.x, p.y, p.z)?;
            }
            for t in triangles {
                writeln!(out, "3 {} {} {}", t[0], t[1], t[2])?;
            }
        }
        PlyEncoding::BinaryLittleEndian => {
            let mut buf = Vec::with_capacity(vertices.len() * 3 * T::BYTES);
            for p in vertices {
                p.x.push_le_bytes(&mut buf);
                p.y.push_le_bytes(&mut buf);
                p.z.push_le_bytes(&mut buf);
            }
            for t in triangles {
                buf.push(3);
                for &i in t {
                    buf.extend_from_slice(&(i as i32).to_le_bytes());
                }
            }
            out.write_all(&buf)?;
        }
    }
    Ok(())
}
