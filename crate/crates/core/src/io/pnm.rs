use std::path::Path;

use super::header::{check_payload, HeaderCursor};
use super::{read_file, write_file, Format, ParseError, ParseErrorKind};
use crate::error::Result;
use crate::grid::{BinaryMask, Grid, RgbImage};

fn header(bytes: &[u8], format: Format, magic: &str) -> std::result::Result<(usize, usize, usize), ParseError> {
    let mut c = HeaderCursor::new(bytes, format, true);
    let (at, m) = c.token()?;
    if m != magic {
        return Err(c.err(at, ParseErrorKind::BadMagic(m.chars().take(16).collect())));
    }
    let w = c.dimension("width")?;
    let h = c.dimension("height")?;
    let (at, tok) = c.token()?;
    let maxval: u64 = tok.parse().map_err(|_| c.err(at, ParseErrorKind::InvalidNumber("maxval")))?;
    if maxval != 255 {
        return Err(c.err(at, ParseErrorKind::UnsupportedMaxval(maxval)));
    }
    Ok((w, h, c.end_header()?))
}

pub fn encode_pgm(gray: &Grid<u8>) -> Vec<u8> {
    let (w, h) = gray.dims();
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    out.extend_from_slice(gray.data());
    out
}

pub fn decode_pgm(bytes: &[u8]) -> std::result::Result<Grid<u8>, ParseError> {
    let (w, h, start) = header(bytes, Format::Pgm, "P5")?;
    check_payload(Format::Pgm, bytes, start, w * h)?;
    Ok(Grid::from_vec(w, h, bytes[start..].to_vec()).expect("sized above"))
}

pub fn encode_ppm(rgb: &RgbImage) -> Vec<u8> {
    let (w, h) = rgb.dims();
    let mut out = format!("P6\n{w} {h}\n255\n").into_bytes();
    out.extend(rgb.grid().data().iter().flatten());
    out
}

pub fn decode_ppm(bytes: &[u8]) -> std::result::Result<RgbImage, ParseError> {
    let (w, h, start) = header(bytes, Format::Ppm, "P6")?;
    check_payload(Format::Ppm, bytes, start, w * h * 3)?;
    let data = bytes[start..].chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
    Ok(RgbImage::new(Grid::from_vec(w, h, data).expect("sized above")))
}

pub fn mask_to_gray(mask: &BinaryMask) -> Grid<u8> {
    mask.grid().map(|&b| if b { 255 } else { 0 })
}

/// Thresholds at 128; also returns how many pixels were neither 0 nor 255.
pub fn mask_from_gray(gray: &Grid<u8>) -> (BinaryMask, usize) {
    let gray_pixels = gray.data().iter().filter(|&&v| v != 0 && v != 255).count();
    (BinaryMask::new(gray.map(|&v| v >= 128)), gray_pixels)
}

pub fn pgm_write(path: impl AsRef<Path>, gray: &Grid<u8>) -> Result<()> {
    write_file(path.as_ref(), &encode_pgm(gray))
}

pub fn pgm_read(path: impl AsRef<Path>) -> Result<Grid<u8>> {
    Ok(decode_pgm(&read_file(path.as_ref())?)?)
}

pub fn pgm_write_mask(path: impl AsRef<Path>, mask: &BinaryMask) -> Result<()> {
    pgm_write(path, &mask_to_gray(mask))
}

pub fn pgm_read_mask(path: impl AsRef<Path>) -> Result<BinaryMask> {
    let path = path.as_ref();
    let (mask, gray) = mask_from_gray(&pgm_read(path)?);
    if gray > 0 {
        log::warn!("{}: {gray} intermediate gray value(s) binarized at 128", path.display());
    }
    Ok(mask)
}

pub fn ppm_write(path: impl AsRef<Path>, rgb: &RgbImage) -> Result<()> {
    write_file(path.as_ref(), &encode_ppm(rgb))
}

pub fn ppm_read(path: impl AsRef<Path>) -> Result<RgbImage> {
    Ok(decode_ppm(&read_file(path.as_ref())?)?)
}
