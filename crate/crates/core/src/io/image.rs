//! Depth maps as grayscale PFM (`Pf`, little-endian, scale -1.0, rows stored
//! bottom to top as usual for PFM) and masks as binary PGM (`P5`, 0/255).

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::render::{DepthMap, Mask};

/// Splits a netpbm-style header into `count` tokens and returns them with the
/// offset of the first payload byte (one whitespace byte after the last token).
fn header_tokens(bytes: &[u8], count: usize, kind: &'static str) -> Result<(Vec<String>, usize)> {
    let mut tokens = Vec::with_capacity(count);
    let mut pos = 0;
    while tokens.len() < count {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::format(kind, "truncated header"));
        }
        tokens.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    if pos >= bytes.len() {
        return Err(Error::format(kind, "missing payload"));
    }
    Ok((tokens, pos + 1))
}

fn parse_dim(s: &str, kind: &'static str) -> Result<usize> {
    s.parse::<usize>()
        .ok()
        .filter(|v| (1..=1 << 16).contains(v))
        .ok_or_else(|| Error::format(kind, format!("bad dimension {s:?}")))
}

pub fn encode_pfm(depth: &DepthMap) -> Vec<u8> {
    let mut out = format!("Pf\n{} {}\n-1.0\n", depth.width, depth.height).into_bytes();
    out.reserve(4 * depth.data.len());
    for i in (0..depth.height).rev() {
        for j in 0..depth.width {
            out.extend_from_slice(&(depth.get(i, j) as f32).to_le_bytes());
        }
    }
    out
}

pub fn decode_pfm(bytes: &[u8]) -> Result<DepthMap> {
    const KIND: &str = "PFM";
    let (tok, start) = header_tokens(bytes, 4, KIND)?;
    if tok[0] != "Pf" {
        return Err(Error::format(
            KIND,
            format!("expected grayscale 'Pf', got {:?}", tok[0]),
        ));
    }
    let width = parse_dim(&tok[1], KIND)?;
    let height = parse_dim(&tok[2], KIND)?;
    let scale: f64 = tok[3]
        .parse()
        .map_err(|_| Error::format(KIND, format!("bad scale {:?}", tok[3])))?;
    let little = scale < 0.0;
    let payload = &bytes[start..];
    if payload.len() < 4 * width * height {
        return Err(Error::format(KIND, "truncated payload"));
    }
    let mut depth = DepthMap::zeros(width, height);
    for (n, chunk) in payload.chunks_exact(4).take(width * height).enumerate() {
        let raw: [u8; 4] = chunk.try_into().expect("chunk of 4");
        let v = if little {
            f32::from_le_bytes(raw)
        } else {
            f32::from_be_bytes(raw)
        } as f64;
        let (row_from_bottom, j) = (n / width, n % width);
        let i = height - 1 - row_from_bottom;
        depth.data[i * width + j] = if v.is_finite() && v > 0.0 { v } else { 0.0 };
    }
    Ok(depth)
}

pub fn encode_pgm(mask: &Mask) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", mask.width, mask.height).into_bytes();
    out.extend(mask.data.iter().map(|m| if *m { 255u8 } else { 0 }));
    out
}

pub fn decode_pgm(bytes: &[u8]) -> Result<Mask> {
    const KIND: &str = "PGM";
    let (tok, start) = header_tokens(bytes, 4, KIND)?;
    if tok[0] != "P5" {
        return Err(Error::format(KIND, format!("expected binary 'P5', got {:?}", tok[0])));
    }
    let width = parse_dim(&tok[1], KIND)?;
    let height = parse_dim(&tok[2], KIND)?;
    if tok[3] != "255" {
        return Err(Error::format(KIND, "only maxval 255 is supported"));
    }
    let payload = &bytes[start..];
    if payload.len() < width * height {
        return Err(Error::format(KIND, "truncated payload"));
    }
    Ok(Mask {
        width,
        height,
        data: payload[..width * height].iter().map(|v| *v >= 128).collect(),
    })
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::File::create(path)
        .and_then(|mut f| f.write_all(bytes))
        .map_err(|e| Error::io(path, e))
}

pub fn save_pfm(path: impl AsRef<Path>, depth: &DepthMap) -> Result<()> {
    write_bytes(path.as_ref(), &encode_pfm(depth))
}

pub fn load_pfm(path: impl AsRef<Path>) -> Result<DepthMap> {
    let path = path.as_ref();
    decode_pfm(&fs::read(path).map_err(|e| Error::io(path, e))?)
}

pub fn save_pgm(path: impl AsRef<Path>, mask: &Mask) -> Result<()> {
    write_bytes(path.as_ref(), &encode_pgm(mask))
}

pub fn load_pgm(path: impl AsRef<Path>) -> Result<Mask> {
    let path = path.as_ref();
    decode_pgm(&fs::read(path).map_err(|e| Error::io(path, e))?)
}
