//! Binary PGM (`P5`) reader and writer, 8-bit only.

use thiserror::Error;

use crate::predictors::GrayImage;

/// Images larger than this many pixels are rejected before allocation.
pub const MAX_PIXELS: usize = 1 << 28;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PgmError {
    #[error("not a binary PGM (magic must be P5)")]
    BadMagic,
    #[error("truncated header")]
    TruncatedHeader,
    #[error("bad header field `{0}`")]
    BadField(String),
    #[error("maxval {0} unsupported (must be 1..=255)")]
    BadMaxval(u32),
    #[error("image {0}x{1} is too large")]
    TooLarge(usize, usize),
    #[error("pixel data has {got} bytes, expected {expected}")]
    ShortData { expected: usize, got: usize },
}

struct Header<'a> {
    rest: &'a [u8],
}

impl<'a> Header<'a> {
    fn skip_ws_and_comments(&mut self) {
        loop {
            match self.rest.first() {
                Some(b) if b.is_ascii_whitespace() => self.rest = &self.rest[1..],
                Some(b'#') => {
                    let end = self
                        .rest
                        .iter()
                        .position(|&b| b == b'\n')
                        .unwrap_or(self.rest.len());
                    self.rest = &self.rest[end..];
                }
                _ => return,
            }
        }
    }

    fn number(&mut self) -> Result<u32, PgmError> {
        self.skip_ws_and_comments();
        let len = self.rest.iter().take_while(|b| b.is_ascii_digit()).count();
        if len == 0 {
            return Err(if self.rest.is_empty() {
                PgmError::TruncatedHeader
            } else {
                PgmError::BadField(String::from_utf8_lossy(&self.rest[..1]).into_owned())
            });
        }
        let text = std::str::from_utf8(&self.rest[..len]).expect("ascii digits");
        let v = text
            .parse::<u32>()
            .map_err(|_| PgmError::BadField(text.to_string()))?;
        self.rest = &self.rest[len..];
        Ok(v)
    }
}

pub fn parse_pgm(bytes: &[u8]) -> Result<GrayImage, PgmError> {
    let rest = bytes.strip_prefix(b"P5").ok_or(PgmError::BadMagic)?;
    let mut h = Header { rest };
    let width = h.number()? as usize;
    let height = h.number()? as usize;
    let maxval = h.number()?;
    if maxval == 0 || maxval > 255 {
        return Err(PgmError::BadMaxval(maxval));
    }
    // exactly one whitespace byte separates the header from the raster
    match h.rest.first() {
        Some(b) if b.is_ascii_whitespace() => h.rest = &h.rest[1..],
        Some(_) => return Err(PgmError::BadField("missing separator".into())),
        None => return Err(PgmError::TruncatedHeader),
    }
    let expected = width
        .checked_mul(height)
        .filter(|&n| n <= MAX_PIXELS)
        .ok_or(PgmError::TooLarge(width, height))?;
    if h.rest.len() < expected {
        return Err(PgmError::ShortData {
            expected,
            got: h.rest.len(),
        });
    }
    let raster = &h.rest[..expected];
    let pixels = if maxval == 255 {
        raster.to_vec()
    } else {
        raster
            .iter()
            .map(|&p| ((p.min(maxval as u8) as u32 * 255 + maxval / 2) / maxval) as u8)
            .collect()
    };
    Ok(GrayImage::new(width, height, pixels).expect("length checked"))
}

pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.pixels());
    out
}
