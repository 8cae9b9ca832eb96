//! Bit-exact readers and writers: PFM depth, PGM masks, PPM color, ASCII PLY
//! points and the `cameras.json` rig description.

mod cameras;
mod header;
mod pfm;
mod ply;
mod pnm;

use std::fmt;
use std::path::Path;

pub use cameras::{cameras_read, cameras_write, decode_cameras, encode_cameras};
pub use pfm::{decode_pfm, encode_pfm, pfm_read, pfm_write};
pub use ply::{decode_ply, encode_ply, ply_read, ply_write};
pub use pnm::{
    decode_pgm, decode_ppm, encode_pgm, encode_ppm, mask_from_gray, mask_to_gray, pgm_read, pgm_read_mask, pgm_write,
    pgm_write_mask, ppm_read, ppm_write,
};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Pfm,
    Pgm,
    Ppm,
    Ply,
    Cameras,
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Pfm => "PFM",
            Format::Pgm => "PGM",
            Format::Ppm => "PPM",
            Format::Ply => "PLY",
            Format::Cameras => "cameras.json",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParseErrorKind {
    UnexpectedEof,
    BadMagic(String),
    InvalidNumber(&'static str),
    ZeroDimension,
    InvalidScale,
    UnsupportedMaxval(u64),
    UnsupportedChannels,
    Truncated { expected: usize, found: usize },
    TrailingData(usize),
    InvalidValue,
    BadHeaderLine(String),
    MissingEndHeader,
    WrongFieldCount { expected: usize, found: usize },
    Json(String),
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use ParseErrorKind::*;
        match self {
            UnexpectedEof => write!(f, "unexpected end of header"),
            BadMagic(m) => write!(f, "bad magic {m:?}"),
            InvalidNumber(field) => write!(f, "invalid {field}"),
            ZeroDimension => write!(f, "zero image dimension"),
            InvalidScale => write!(f, "invalid scale field"),
            UnsupportedMaxval(m) => write!(f, "unsupported maxval {m}"),
            UnsupportedChannels => write!(f, "unsupported channel count"),
            Truncated { expected, found } => write!(f, "truncated payload: expected {expected} bytes, found {found}"),
            TrailingData(n) => write!(f, "{n} trailing bytes after payload"),
            InvalidValue => write!(f, "invalid sample value"),
            BadHeaderLine(l) => write!(f, "unexpected header line {l:?}"),
            MissingEndHeader => write!(f, "missing end_header"),
            WrongFieldCount { expected, found } => write!(f, "expected {expected} fields, found {found}"),
            Json(m) => write!(f, "{m}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{format} parse error at byte {offset}: {kind}")]
pub struct ParseError {
    pub format: Format,
    pub offset: usize,
    pub kind: ParseErrorKind,
}

impl ParseError {
    pub(crate) fn new(format: Format, offset: usize, kind: ParseErrorKind) -> Self {
        ParseError { format, offset, kind }
    }
}

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
