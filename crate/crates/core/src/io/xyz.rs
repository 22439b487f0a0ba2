use std::io::Write;

use crate::error::{Error, Location, Result};
use crate::geometry::Point3;
use crate::scalar::Real;

pub const XYZ_SIGNIFICANT_DIGITS: usize = 9;

/// Parses whitespace-separated `x y z` lines. Blank and `#` lines are
/// skipped; columns after the third are ignored.
pub fn parse_xyz<T: Real>(text: &str) -> Result<Vec<Point3<T>>> {
    let mut points = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let loc = Location::Line(lineno + 1);
        let mut tokens = line.split_whitespace();
        let mut coords = [T::zero(); 3];
        for (axis, c) in coords.iter_mut().enumerate() {
            let tok = tokens.next().ok_or_else(|| Error::Parse {
                location: loc,
                message: format!("expected 3 coordinates, found {axis}"),
            })?;
            *c = tok.parse::<T>().map_err(|_| Error::Parse {
                location: loc,
                message: format!("invalid number {tok:?}"),
            })?;
            if !c.is_finite() {
                return Err(Error::Parse {
                    location: loc,
                    message: format!("non-finite coordinate {tok:?}"),
                });
            }
        }
        points.push(coords.into());
    }
    if points.is_empty() {
        return Err(Error::Empty("XYZ file"));
    }
    Ok(points)
}

/// `%.9g`-style formatting: `digits` significant digits, fixed notation for
/// moderate exponents, trailing zeros trimmed.
pub fn format_sig<T: Real>(v: T, digits: usize) -> String {
    let v = v.as_f64();
    if v == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{:.*e}", digits - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        let mantissa = trim_zeros(mantissa);
        return format!("{mantissa}e{exp}");
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{v:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn write_xyz<T: Real, W: Write>(out: &mut W, points: &[Point3<T>]) -> Result<()> {
    if points.is_empty() {
        return Err(Error::Empty("point cloud"));
    }
    for p in points {
        writeln!(
            out,
            "{} {} {}",
            format_sig(p.x, XYZ_SIGNIFICANT_DIGITS),
            format_sig(p.y, XYZ_SIGNIFICANT_DIGITS),
            format_sig(p.z, XYZ_SIGNIFICANT_DIGITS)
        )?;
    }
    Ok(())
}

/// Extended XYZ with a fourth per-point column.
pub fn write_xyz_with_scores<T: Real, W: Write>(
    out: &mut W,
    points: &[Point3<T>],
    scores: &[T],
) -> Result<()> {
    if points.is_empty() {
        return Err(Error::Empty("point cloud"));
    }
    if points.len() != scores.len() {
        return Err(Error::SizeMismatch(format!(
            "{} points vs {} scores",
            points.len(),
            scores.len()
        )));
    }
    for (p, s) in points.iter().zip(scores) {
        writeln!(
            out,
            "{} {} {} {}",
            format_sig(p.x, XYZ_SIGNIFICANT_DIGITS),
            format_sig(p.y, XYZ_SIGNIFICANT_DIGITS),
            format_sig(p.z, XYZ_SIGNIFICANT_DIGITS),
            format_sig(*s, XYZ_SIGNIFICANT_DIGITS)
        )?;
    }
    Ok(())
}
