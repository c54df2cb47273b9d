//! Netpbm image writers: binary PPM (P6) for color and 16-bit PGM (P5,
//! big-endian samples) for semantic and instance buffers.

use anyhow::{bail, ensure, Context};
use synthlidar_core::scene::ClassId;

pub fn ppm_bytes(width: u32, height: u32, pixels: &[[u8; 3]]) -> Vec<u8> {
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    out.reserve(pixels.len() * 3);
    for p in pixels {
        out.extend_from_slice(p);
    }
    out
}

pub fn pgm16_bytes(width: u32, height: u32, samples: impl IntoIterator<Item = u16>) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n65535\n").into_bytes();
    for s in samples {
        out.extend_from_slice(&s.to_be_bytes());
    }
    out
}

/// Sidecar describing the semantic PGM values: `id name r g b` per line.
pub fn palette_text() -> String {
    let mut s = String::from("# class_id name r g b\n");
    for c in ClassId::KNOWN {
        let [r, g, b] = c.palette();
        s.push_str(&format!("{} {} {r} {g} {b}\n", c.0, c.name()));
    }
    s
}

/// Header fields and pixel payload of a binary netpbm file.
pub struct Netpbm<'a> {
    pub magic: &'a str,
    pub width: u32,
    pub height: u32,
    pub maxval: u32,
    pub data: &'a [u8],
}

pub fn parse_netpbm(bytes: &[u8]) -> anyhow::Result<Netpbm<'_>> {
    // Header: magic, width, height, maxval separated by single whitespace.
    let mut fields = Vec::with_capacity(4);
    let mut pos = 0;
    while fields.len() < 4 {
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        ensure!(pos < bytes.len(), "truncated netpbm header");
        fields.push(std::str::from_utf8(&bytes[start..pos]).context("netpbm header is not ASCII")?);
        pos += 1;
    }
    let magic = fields[0];
    if magic != "P5" && magic != "P6" {
        bail!("unsupported netpbm type {magic}");
    }
    let num = |s: &str| s.parse::<u32>().with_context(|| format!("bad netpbm header field {s:?}"));
    let (width, height, maxval) = (num(fields[1])?, num(fields[2])?, num(fields[3])?);
    let channels = if magic == "P6" { 3 } else { 1 };
    let depth = if maxval > 255 { 2 } else { 1 };
    let data = &bytes[pos..];
    ensure!(
        data.len() == (width * height) as usize * channels * depth,
        "netpbm payload has {} bytes, expected {}",
        data.len(),
        (width * height) as usize * channels * depth
    );
    Ok(Netpbm {
        magic,
        width,
        height,
        maxval,
        data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ppm_layout() {
        let b = ppm_bytes(2, 1, &[[1, 2, 3], [4, 5, 6]]);
        assert_eq!(b, b"P6\n2 1\n255\n\x01\x02\x03\x04\x05\x06");
        let p = parse_netpbm(&b).unwrap();
        assert_eq!((p.magic, p.width, p.height, p.maxval), ("P6", 2, 1, 255));
    }

    #[test]
    fn pgm_is_big_endian_16_bit() {
        let b = pgm16_bytes(2, 1, [1u16, 0x0203]);
        assert_eq!(b, b"P5\n2 1\n65535\n\x00\x01\x02\x03");
        let p = parse_netpbm(&b).unwrap();
        assert_eq!(p.data.len(), 4);
        assert!(parse_netpbm(&b[..b.len() - 1]).is_err());
    }

    #[test]
    fn palette_lists_known_classes() {
        let t = palette_text();
        assert_eq!(t.lines().count(), 1 + ClassId::KNOWN.len());
        assert!(t.contains("1 car "));
    }
}
