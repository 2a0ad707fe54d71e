//! Frame file formats.
//!
//! Two on-disk representations:
//!
//! - binary PGM ("P5", maxval 255) for 8-bit export and ingestion;
//! - the raw float frame format: magic `DNF1`, then height and width as
//!   little-endian u32, then height×width f64 little-endian values in
//!   row-major order. Write→read round-trips are bit-exact.

use std::fs;
use std::path::Path;

use super::{Domain, Image};
use crate::error::{CoreError, Result};

pub const DNF_MAGIC: &[u8; 4] = b"DNF1";

/// Serializes a frame to the float format.
pub fn write_dnf(path: &Path, image: &Image) -> Result<()> {
    let h = u32::try_from(image.height())
        .map_err(|_| CoreError::Format("height exceeds u32".into()))?;
    let w =
        u32::try_from(image.width()).map_err(|_| CoreError::Format("width exceeds u32".into()))?;
    let mut bytes = Vec::with_capacity(12 + image.pixels().len() * 8);
    bytes.extend_from_slice(DNF_MAGIC);
    bytes.extend_from_slice(&h.to_le_bytes());
    bytes.extend_from_slice(&w.to_le_bytes());
    for v in image.pixels() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes)?;
    Ok(())
}

/// Reads a float-format frame, tagging it with the caller's domain
/// (the format itself carries no domain information).
pub fn read_dnf(path: &Path, domain: Domain) -> Result<Image> {
    let bytes = fs::read(path)?;
    parse_dnf(&bytes, domain)
}

fn parse_dnf(bytes: &[u8], domain: Domain) -> Result<Image> {
    if bytes.len() < 12 {
        return Err(CoreError::Format("truncated float frame header".into()));
    }
    if &bytes[0..4] != DNF_MAGIC {
        return Err(CoreError::Format("bad float frame magic".into()));
    }
    let h = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let w = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let count = h
        .checked_mul(w)
        .ok_or_else(|| CoreError::Format("frame dimension overflow".into()))?;
    let payload = &bytes[12..];
    if payload.len() != count * 8 {
        return Err(CoreError::Format(format!(
            "payload holds {} bytes, expected {} for {h}x{w}",
            payload.len(),
            count * 8
        )));
    }
    let pixels = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Image::new(h, w, domain, pixels)
}

/// 8-bit binary PGM export. Unit images are scaled by 255 with clamping;
/// Raw255 images are clamped to [0, 255]. Values round half to even.
pub fn write_pgm(path: &Path, image: &Image) -> Result<()> {
    let raw = match image.domain() {
        Domain::Unit => image.denormalize(true)?,
        Domain::Raw255 => {
            let px = image.pixels().iter().map(|v| v.clamp(0.0, 255.0)).collect();
            Image::new(image.height(), image.width(), Domain::Raw255, px)?
        }
    };
    let mut bytes = format!("P5\n{} {}\n255\n", raw.width(), raw.height()).into_bytes();
    bytes.extend(raw.pixels().iter().map(|v| v.round_ties_even() as u8));
    fs::write(path, bytes)?;
    Ok(())
}

/// Reads a binary PGM (maxval up to 255) as a Raw255 image.
pub fn read_pgm(path: &Path) -> Result<Image> {
    let bytes = fs::read(path)?;
    parse_pgm(&bytes)
}

fn parse_pgm(bytes: &[u8]) -> Result<Image> {
    if bytes.len() < 2 || &bytes[0..2] != b"P5" {
        return Err(CoreError::Format("bad PGM magic, expected P5".into()));
    }
    let mut pos = 2usize;
    let mut next_token = |bytes: &[u8]| -> Result<usize> {
        // Skip whitespace and '#' comment lines between header fields.
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(CoreError::Format("truncated PGM header".into()));
        }
        std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse::<usize>().ok())
            .ok_or_else(|| CoreError::Format("malformed PGM header field".into()))
    };
    let width = next_token(&bytes)?;
    let height = next_token(&bytes)?;
    let maxval = next_token(&bytes)?;
    if maxval == 0 || maxval > 255 {
        return Err(CoreError::Format(format!("unsupported PGM maxval {maxval}")));
    }
    pos += 1; // single whitespace byte after maxval
    let count = height
        .checked_mul(width)
        .ok_or_else(|| CoreError::Format("frame dimension overflow".into()))?;
    if bytes.len() < pos || bytes.len() - pos != count {
        return Err(CoreError::Format(format!(
            "PGM payload holds {} bytes, expected {count}",
            bytes.len().saturating_sub(pos)
        )));
    }
    let pixels = bytes[pos..].iter().map(|&b| b as f64).collect();
    Image::new(height, width, Domain::Raw255, pixels)
}

/// Reads a frame by extension: `.dnf` (float, caller-supplied domain) or
/// `.pgm` (always Raw255).
pub fn read_frame(path: &Path, dnf_domain: Domain) -> Result<Image> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("dnf") => read_dnf(path, dnf_domain),
        Some("pgm") => read_pgm(path),
        other => Err(CoreError::Format(format!(
            "unsupported frame extension {:?} for {}",
            other,
            path.display()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamRng;

    fn tmp(name: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join("dn2n-core-io-tests");
        std::fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    #[test]
    fn dnf_round_trip_is_bit_exact() {
        let mut rng = StreamRng::new(17, "io-test", &[]);
        let px: Vec<f64> = (0..6).map(|_| rng.next_gaussian() * 300.0).collect();
        let im = Image::new(3, 2, Domain::Raw255, px).unwrap();
        let p = tmp("rt.dnf");
        write_dnf(&p, &im).unwrap();
        let back = read_dnf(&p, Domain::Raw255).unwrap();
        assert_eq!(im.pixels(), back.pixels());
        assert_eq!((im.height(), im.width()), (back.height(), back.width()));
    }

    #[test]
    fn dnf_header_bytes_for_192() {
        let im = Image::constant(192, 192, Domain::Raw255, 0.0).unwrap();
        let p = tmp("hdr.dnf");
        write_dnf(&p, &im).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        assert_eq!(&bytes[0..4], b"DNF1");
        assert_eq!(&bytes[4..8], &[0xC0, 0, 0, 0]);
        assert_eq!(&bytes[8..12], &[0xC0, 0, 0, 0]);
    }

    #[test]
    fn dnf_rejects_bad_magic_and_truncation() {
        let p = tmp("bad.dnf");
        std::fs::write(&p, b"DNFX\x01\x00\x00\x00\x01\x00\x00\x00").unwrap();
        assert!(matches!(read_dnf(&p, Domain::Unit), Err(CoreError::Format(_))));
        let mut ok = Vec::new();
        ok.extend_from_slice(b"DNF1");
        ok.extend_from_slice(&2u32.to_le_bytes());
        ok.extend_from_slice(&2u32.to_le_bytes());
        ok.extend_from_slice(&1.0f64.to_le_bytes()); // 1 of 4 pixels
        std::fs::write(&p, ok).unwrap();
        assert!(matches!(read_dnf(&p, Domain::Unit), Err(CoreError::Format(_))));
    }

    #[test]
    fn pgm_constant_unit_image_is_all_255() {
        let im = Image::constant(4, 5, Domain::Unit, 1.0).unwrap();
        let p = tmp("const.pgm");
        write_pgm(&p, &im).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        let header = b"P5\n5 4\n255\n";
        assert_eq!(&bytes[..header.len()], header);
        assert!(bytes[header.len()..].iter().all(|&b| b == 255));
    }

    #[test]
    fn pgm_round_half_to_even() {
        let im = Image::new(1, 4, Domain::Raw255, vec![0.5, 1.5, 2.5, 3.5]).unwrap();
        let p = tmp("ties.pgm");
        write_pgm(&p, &im).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        let data = &bytes[bytes.len() - 4..];
        assert_eq!(data, &[0, 2, 2, 4]);
    }

    #[test]
    fn pgm_round_trip_with_comment_header() {
        let p = tmp("comment.pgm");
        std::fs::write(&p, b"P5\n# a comment\n2 2\n255\n\x00\x7F\x80\xFF").unwrap();
        let im = read_pgm(&p).unwrap();
        assert_eq!(im.pixels(), &[0.0, 127.0, 128.0, 255.0]);
        assert_eq!(im.domain(), Domain::Raw255);
    }

    #[test]
    fn read_frame_dispatches_on_extension() {
        let im = Image::constant(2, 2, Domain::Unit, 0.25).unwrap();
        let p = tmp("disp.dnf");
        write_dnf(&p, &im).unwrap();
        assert!(read_frame(&p, Domain::Unit).is_ok());
        assert!(read_frame(&tmp("disp.xyz"), Domain::Unit).is_err());
    }
}
