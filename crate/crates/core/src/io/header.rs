use super::{Format, ParseError, ParseErrorKind};

/// Whitespace-separated token reader over a netpbm-style header.
pub(crate) struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    format: Format,
    comments: bool,
}

impl<'a> HeaderCursor<'a> {
    pub fn new(bytes: &'a [u8], format: Format, comments: bool) -> Self {
        HeaderCursor { bytes, pos: 0, format, comments }
    }

    pub fn err(&self, offset: usize, kind: ParseErrorKind) -> ParseError {
        ParseError::new(self.format, offset, kind)
    }

    fn skip_space(&mut self) {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if self.comments && b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
    }

    /// Next token and its starting offset.
    pub fn token(&mut self) -> Result<(usize, &'a str), ParseError> {
        self.skip_space();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err(start, ParseErrorKind::UnexpectedEof));
        }
        let tok = std::str::from_utf8(&self.bytes[start..self.pos])
            .map_err(|_| self.err(start, ParseErrorKind::BadHeaderLine("non-ASCII bytes".into())))?;
        Ok((start, tok))
    }

    pub fn dimension(&mut self, field: &'static str) -> Result<usize, ParseError> {
        let (at, tok) = self.token()?;
        let n: usize = tok.parse().map_err(|_| self.err(at, ParseErrorKind::InvalidNumber(field)))?;
        if n == 0 {
            return Err(self.err(at, ParseErrorKind::ZeroDimension));
        }
        Ok(n)
    }

    /// Consumes the single whitespace byte that separates header and payload.
    pub fn end_header(&mut self) -> Result<usize, ParseError> {
        match self.bytes.get(self.pos) {
            Some(b) if b.is_ascii_whitespace() => {
                self.pos += 1;
                Ok(self.pos)
            }
            _ => Err(self.err(self.pos, ParseErrorKind::UnexpectedEof)),
        }
    }
}

/// Checks that exactly `expected` payload bytes follow `start`.
pub(crate) fn check_payload(format: Format, bytes: &[u8], start: usize, expected: usize) -> Result<(), ParseError> {
    let found = bytes.len() - start;
    if found < expected {
        Err(ParseError::new(format, start, ParseErrorKind::Truncated { expected, found }))
    } else if found > expected {
        Err(ParseError::new(format, start + expected, ParseErrorKind::TrailingData(found - expected)))
    } else {
        Ok(())
    }
}
