//! Grayscale PGM (P2 ASCII and P5 binary) reading and writing.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linops::ImageGrid;

struct Header {
    binary: bool,
    width: usize,
    height: usize,
    maxval: usize,
    data_start: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    let binary = match bytes.get(..2) {
        Some(b"P5") => true,
        Some(b"P2") => false,
        _ => return Err(Error::Format("not a P2/P5 PGM file".into())),
    };
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        // whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&c| c != b'\n') {
                        pos += 1;
                    }
                }
                Some(c) if c.is_ascii_whitespace() => pos += 1,
                _ => break,
            }
        }
        let begin = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if begin == pos {
            return Err(Error::Format("truncated PGM header".into()));
        }
        *field = std::str::from_utf8(&bytes[begin..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Format("bad number in PGM header".into()))?;
    }
    // exactly one whitespace byte separates the header from binary data
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(Error::Format("missing whitespace after PGM header".into()));
    }
    Ok(Header {
        binary,
        width: fields[0],
        height: fields[1],
        maxval: fields[2],
        data_start: pos + 1,
    })
}

/// Reads a square 8-bit PGM and scales pixels to [0, 1].
pub fn load_image_pgm(path: impl AsRef<Path>) -> Result<ImageGrid> {
    let bytes = fs::read(path)?;
    decode_pgm(&bytes)
}

pub fn decode_pgm(bytes: &[u8]) -> Result<ImageGrid> {
    let h = parse_header(bytes)?;
    if h.width != h.height {
        return Err(Error::Format(format!(
            "image must be square, got {}x{}",
            h.width, h.height
        )));
    }
    if h.maxval == 0 || h.maxval > 255 {
        return Err(Error::Format(format!("unsupported maxval {}", h.maxval)));
    }
    let n = h.width * h.height;
    let raw: Vec<u8> = if h.binary {
        let data = &bytes[h.data_start..];
        if data.len() < n {
            return Err(Error::Format("truncated PGM pixel data".into()));
        }
        data[..n].to_vec()
    } else {
        let text = std::str::from_utf8(&bytes[h.data_start..])
            .map_err(|_| Error::Format("P2 pixel data is not ASCII".into()))?;
        let vals: Vec<u8> = text
            .split_ascii_whitespace()
            .take(n)
            .map(|t| t.parse::<u8>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Format("bad P2 pixel value".into()))?;
        if vals.len() < n {
            return Err(Error::Format("truncated PGM pixel data".into()));
        }
        vals
    };
    if raw.iter().any(|&v| v as usize > h.maxval) {
        return Err(Error::Format("pixel value exceeds maxval".into()));
    }
    let scale = h.maxval as f64;
    ImageGrid::from_row_major(h.width, raw.iter().map(|&v| v as f64 / scale).collect())
}

/// Quantizes to 8 bits after clamping to [0, 1].
pub fn encode_pgm(grid: &ImageGrid) -> Vec<u8> {
    let side = grid.side();
    let mut out = format!("P5\n{side} {side}\n255\n").into_bytes();
    out.extend(grid.iter().map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
    out
}

/// Writes a binary P5 file.
pub fn save_image_pgm(grid: &ImageGrid, path: impl AsRef<Path>) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(&encode_pgm(grid))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ascii_with_comments() {
        let text = b"P2\n# a comment\n2 2\n# another\n255\n0 255\n51 102\n";
        let g = decode_pgm(text).unwrap();
        assert_eq!(g.side(), 2);
        assert_eq!(g.get(0, 1), 1.0);
        assert!((g.get(1, 0) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn binary_round_trip() {
        let g = ImageGrid::from_fn(4, |(r, c)| (r * 4 + c) as f64 / 15.0).unwrap();
        let back = decode_pgm(&encode_pgm(&g)).unwrap();
        assert!(back.sub(&g).unwrap().max_abs() <= 1.0 / 255.0);
    }

    #[test]
    fn zeros_round_trip_exactly() {
        let g = ImageGrid::zeros(8).unwrap();
        assert_eq!(decode_pgm(&encode_pgm(&g)).unwrap(), g);
    }

    #[test]
    fn rejects_malformed() {
        assert!(matches!(decode_pgm(b"P6\n2 2\n255\n"), Err(Error::Format(_))));
        assert!(matches!(decode_pgm(b"P2\n2 3\n255\n0 0 0 0 0 0\n"), Err(Error::Format(_))));
        assert!(matches!(decode_pgm(b"P2\n2 2\n255\n0 0 0\n"), Err(Error::Format(_))));
        assert!(matches!(decode_pgm(b"P5\n2 2\n255\n\x00\x01"), Err(Error::Format(_))));
        assert!(matches!(decode_pgm(b"P2\n2 2\n"), Err(Error::Format(_))));
        assert!(matches!(decode_pgm(b"P2\n2 2\n100\n0 0 0 101\n"), Err(Error::Format(_))));
    }
}
