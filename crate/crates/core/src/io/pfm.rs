use std::path::Path;

use super::header::{check_payload, HeaderCursor};
use super::{read_file, write_file, Format, ParseError, ParseErrorKind};
use crate::error::Result;
use crate::grid::{DepthMap, Grid};

/// Single-channel little-endian PFM, rows stored bottom to top.
pub fn encode_pfm(depth: &DepthMap) -> Vec<u8> {
    let g = depth.grid();
    let (w, h) = g.dims();
    let mut out = format!("Pf\n{w} {h}\n-1.0\n").into_bytes();
    out.reserve(w * h * 4);
    for y in (0..h).rev() {
        for v in &g.data()[y * w..(y + 1) * w] {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode_pfm(bytes: &[u8]) -> std::result::Result<DepthMap, ParseError> {
    let mut c = HeaderCursor::new(bytes, Format::Pfm, false);
    let (at, magic) = c.token()?;
    match magic {
        "Pf" => {}
        "PF" => return Err(c.err(at, ParseErrorKind::UnsupportedChannels)),
        m => return Err(c.err(at, ParseErrorKind::BadMagic(m.chars().take(16).collect()))),
    }
    let w = c.dimension("width")?;
    let h = c.dimension("height")?;
    let (at, tok) = c.token()?;
    let scale: f64 = tok.parse().map_err(|_| c.err(at, ParseErrorKind::InvalidScale))?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(c.err(at, ParseErrorKind::InvalidScale));
    }
    let little = scale < 0.0;
    let start = c.end_header()?;
    let n = w.checked_mul(h).and_then(|n| n.checked_mul(4)).ok_or_else(|| c.err(start, ParseErrorKind::InvalidNumber("dimensions")))?;
    check_payload(Format::Pfm, bytes, start, n)?;

    let mut data = vec![0f32; w * h];
    for (i, chunk) in bytes[start..].chunks_exact(4).enumerate() {
        let raw: [u8; 4] = chunk.try_into().expect("chunk of 4");
        let v = if little { f32::from_le_bytes(raw) } else { f32::from_be_bytes(raw) };
        if !(v.is_finite() && v >= 0.0) {
            return Err(ParseError::new(Format::Pfm, start + 4 * i, ParseErrorKind::InvalidValue));
        }
        let (x, row) = (i % w, i / w);
        data[(h - 1 - row) * w + x] = v;
    }
    let grid = Grid::from_vec(w, h, data).expect("sized above");
    Ok(DepthMap::new(grid).expect("validated above"))
}

pub fn pfm_write(path: impl AsRef<Path>, depth: &DepthMap) -> Result<()> {
    write_file(path.as_ref(), &encode_pfm(depth))
}

pub fn pfm_read(path: impl AsRef<Path>) -> Result<DepthMap> {
    Ok(decode_pfm(&read_file(path.as_ref())?)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_pixel_round_trip() {
        let d = DepthMap::new(Grid::filled(1, 1, 2.5)).unwrap();
        let bytes = encode_pfm(&d);
        assert!(bytes.starts_with(b"Pf\n1 1\n-1.0\n"));
        assert_eq!(bytes.len(), 16);
        assert_eq!(decode_pfm(&bytes).unwrap(), d);
    }

    #[test]
    fn rows_stored_bottom_up() {
        let d = DepthMap::new(Grid::from_vec(1, 2, vec![1.0, 2.0]).unwrap()).unwrap();
        let bytes = encode_pfm(&d);
        let payload = &bytes[bytes.len() - 8..];
        assert_eq!(&payload[..4], &2f32.to_le_bytes());
    }

    #[test]
    fn big_endian_input_accepted() {
        let mut bytes = b"Pf\n2 1\n1.0\n".to_vec();
        bytes.extend_from_slice(&1.5f32.to_be_bytes());
        bytes.extend_from_slice(&0.25f32.to_be_bytes());
        let d = decode_pfm(&bytes).unwrap();
        assert_eq!(d.grid().data(), &[1.5, 0.25]);
    }

    #[test]
    fn width_mismatch_is_error() {
        let d = DepthMap::new(Grid::filled(3, 2, 1.0)).unwrap();
        let mut bytes = encode_pfm(&d);
        bytes[3] = b'4';
        let e = decode_pfm(&bytes).unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::Truncated { expected: 32, found: 24 }), "{e}");
        assert_eq!(e.offset, 12);
    }
}
