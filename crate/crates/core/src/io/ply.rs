use std::fmt::Write as _;
use std::path::Path;

use super::{read_file, write_file, Format, ParseError, ParseErrorKind};
use crate::error::Result;
use crate::unproject::{Point, PointSet};

const PROPERTIES: [&str; 6] = [
    "property float x",
    "property float y",
    "property float z",
    "property uchar red",
    "property uchar green",
    "property uchar blue",
];

/// Nine significant digits.
fn sig9(v: f64) -> String {
    format!("{v:.8e}")
}

pub fn encode_ply(points: &PointSet) -> Vec<u8> {
    let mut s = String::new();
    s.push_str("ply\nformat ascii 1.0\n");
    let _ = writeln!(s, "element vertex {}", points.len());
    for p in PROPERTIES {
        s.push_str(p);
        s.push('\n');
    }
    s.push_str("end_header\n");
    for p in points.iter() {
        let [x, y, z] = p.position;
        let [r, g, b] = p.color;
        let _ = writeln!(s, "{} {} {} {r} {g} {b}", sig9(x), sig9(y), sig9(z));
    }
    s.into_bytes()
}

struct Lines<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Option<(usize, &'a str)> {
        if self.pos >= self.text.len() {
            return None;
        }
        let start = self.pos;
        let rest = &self.text[start..];
        let len = rest.find('\n').unwrap_or(rest.len());
        self.pos = start + len + 1;
        Some((start, rest[..len].trim_end_matches('\r')))
    }
}

pub fn decode_ply(bytes: &[u8]) -> std::result::Result<PointSet, ParseError> {
    let err = |at, kind| ParseError::new(Format::Ply, at, kind);
    let text = std::str::from_utf8(bytes).map_err(|e| err(e.valid_up_to(), ParseErrorKind::BadHeaderLine("non-UTF-8 bytes".into())))?;
    let mut lines = Lines { text, pos: 0 };

    let (at, first) = lines.next().ok_or_else(|| err(0, ParseErrorKind::UnexpectedEof))?;
    if first != "ply" {
        return Err(err(at, ParseErrorKind::BadMagic(first.chars().take(16).collect())));
    }
    let mut header = Vec::new();
    loop {
        let (at, line) = lines.next().ok_or_else(|| err(text.len(), ParseErrorKind::MissingEndHeader))?;
        if line.starts_with("comment") {
            continue;
        }
        if line == "end_header" {
            break;
        }
        header.push((at, line));
    }
    let mut it = header.into_iter();
    match it.next() {
        Some((_, "format ascii 1.0")) => {}
        Some((at, l)) => return Err(err(at, ParseErrorKind::BadHeaderLine(l.into()))),
        None => return Err(err(lines.pos, ParseErrorKind::UnexpectedEof)),
    }
    let count = match it.next() {
        Some((at, l)) => {
            let n = l.strip_prefix("element vertex ").ok_or_else(|| err(at, ParseErrorKind::BadHeaderLine(l.into())))?;
            n.trim().parse::<usize>().map_err(|_| err(at, ParseErrorKind::InvalidNumber("vertex count")))?
        }
        None => return Err(err(lines.pos, ParseErrorKind::UnexpectedEof)),
    };
    for expected in PROPERTIES {
        match it.next() {
            Some((_, l)) if l == expected => {}
            Some((at, l)) => return Err(err(at, ParseErrorKind::BadHeaderLine(l.into()))),
            None => return Err(err(lines.pos, ParseErrorKind::UnexpectedEof)),
        }
    }
    if let Some((at, l)) = it.next() {
        return Err(err(at, ParseErrorKind::BadHeaderLine(l.into())));
    }

    let mut points = Vec::with_capacity(count.min(1 << 24));
    for row in 0..count {
        let (at, line) = lines
            .next()
            .ok_or_else(|| err(text.len(), ParseErrorKind::Truncated { expected: count, found: row }))?;
        let fields: Vec<&str> = line.split_ascii_whitespace().collect();
        if fields.len() != 6 {
            return Err(err(at, ParseErrorKind::WrongFieldCount { expected: 6, found: fields.len() }));
        }
        let mut position = [0.0; 3];
        for (p, f) in position.iter_mut().zip(&fields[..3]) {
            *p = f.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| err(at, ParseErrorKind::InvalidNumber("coordinate")))?;
        }
        let mut color = [0u8; 3];
        for (c, f) in color.iter_mut().zip(&fields[3..]) {
            *c = f.parse().map_err(|_| err(at, ParseErrorKind::InvalidNumber("color")))?;
        }
        points.push(Point { position, color });
    }
    let rest = &text[lines.pos.min(text.len())..];
    if !rest.trim().is_empty() {
        return Err(err(lines.pos, ParseErrorKind::TrailingData(rest.len())));
    }
    Ok(PointSet::from_points(points))
}

pub fn ply_write(path: impl AsRef<Path>, points: &PointSet) -> Result<()> {
    write_file(path.as_ref(), &encode_ply(points))
}

pub fn ply_read(path: impl AsRef<Path>) -> Result<PointSet> {
    Ok(decode_ply(&read_file(path.as_ref())?)?)
}
