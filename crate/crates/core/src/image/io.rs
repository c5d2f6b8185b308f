//! PPM (P6, 8-bit) and PFM (Pf/PF, little-endian) readers and writers.
//!
//! PFM scanlines are stored bottom-to-top per the format convention; a
//! negative scale marks little-endian data.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::{ImageBuffer, ScalarMap};

fn parse_err(path: &Path, what: impl Into<String>) -> Error {
    Error::Parse { path: path.display().to_string(), what: what.into() }
}

/// Reads whitespace-separated header tokens, skipping `#` comments.
fn read_token(reader: &mut impl Read, path: &Path) -> Result<String> {
    let mut tok = String::new();
    let mut in_comment = false;
    loop {
        let mut byte = [0u8; 1];
        let n = reader.read(&mut byte)?;
        if n == 0 {
            if tok.is_empty() {
                return Err(parse_err(path, "unexpected end of header"));
            }
            return Ok(tok);
        }
        let c = byte[0] as char;
        if in_comment {
            if c == '\n' {
                in_comment = false;
            }
            continue;
        }
        if c == '#' {
            in_comment = true;
            continue;
        }
        if c.is_ascii_whitespace() {
            if tok.is_empty() {
                continue;
            }
            return Ok(tok);
        }
        tok.push(c);
    }
}

pub fn write_ppm(path: impl AsRef<Path>, img: &ImageBuffer) -> Result<()> {
    let path = path.as_ref();
    if img.channels() != 3 {
        return Err(Error::domain("PPM output requires a 3-channel image"));
    }
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "P6\n{} {}\n255\n", img.width(), img.height())?;
    let mut bytes = Vec::with_capacity(img.data().len());
    for v in img.data() {
        bytes.push((v * 255.0).round().clamp(0.0, 255.0) as u8);
    }
    w.write_all(&bytes)?;
    Ok(())
}

pub fn read_ppm(path: impl AsRef<Path>) -> Result<ImageBuffer> {
    let path = path.as_ref();
    let mut r = BufReader::new(File::open(path)?);
    let magic = read_token(&mut r, path)?;
    if magic != "P6" {
        return Err(parse_err(path, format!("expected P6 magic, got '{magic}'")));
    }
    let width: usize = read_token(&mut r, path)?
        .parse()
        .map_err(|e| parse_err(path, format!("bad width: {e}")))?;
    let height: usize = read_token(&mut r, path)?
        .parse()
        .map_err(|e| parse_err(path, format!("bad height: {e}")))?;
    let maxval: usize = read_token(&mut r, path)?
        .parse()
        .map_err(|e| parse_err(path, format!("bad maxval: {e}")))?;
    if maxval != 255 {
        return Err(parse_err(path, format!("only maxval 255 supported, got {maxval}")));
    }
    let mut bytes = vec![0u8; width * height * 3];
    r.read_exact(&mut bytes)
        .map_err(|_| parse_err(path, "truncated pixel data"))?;
    let data: Vec<f64> = bytes.iter().map(|&b| b as f64 / 255.0).collect();
    ImageBuffer::new(height, width, 3, data)
}

fn write_pfm_raw(path: &Path, magic: &str, h: usize, w: usize, values: &[f64]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write!(out, "{magic}\n{w} {h}\n-1.0\n")?;
    let channels = values.len() / (h * w);
    // Bottom-to-top scanlines.
    for i in (0..h).rev() {
        let row = &values[i * w * channels..(i + 1) * w * channels];
        let mut bytes = Vec::with_capacity(row.len() * 4);
        for &v in row {
            bytes.extend_from_slice(&(v as f32).to_le_bytes());
        }
        out.write_all(&bytes)?;
    }
    Ok(())
}

fn read_pfm_raw(path: &Path) -> Result<(usize, usize, usize, Vec<f64>)> {
    let mut r = BufReader::new(File::open(path)?);
    let magic = read_token(&mut r, path)?;
    let channels = match magic.as_str() {
        "PF" => 3,
        "Pf" => 1,
        other => return Err(parse_err(path, format!("expected PF/Pf magic, got '{other}'"))),
    };
    let width: usize = read_token(&mut r, path)?
        .parse()
        .map_err(|e| parse_err(path, format!("bad width: {e}")))?;
    let height: usize = read_token(&mut r, path)?
        .parse()
        .map_err(|e| parse_err(path, format!("bad height: {e}")))?;
    let scale: f64 = read_token(&mut r, path)?
        .parse()
        .map_err(|e| parse_err(path, format!("bad scale: {e}")))?;
    let little_endian = scale < 0.0;
    let mut bytes = vec![0u8; width * height * channels * 4];
    r.read_exact(&mut bytes)
        .map_err(|_| parse_err(path, "truncated float data"))?;
    let mut data = vec![0.0f64; width * height * channels];
    for i in 0..height {
        // Stored bottom-to-top: scanline i of the file is image row h−1−i.
        let row = height - 1 - i;
        for x in 0..width * channels {
            let off = (i * width * channels + x) * 4;
            let raw = [bytes[off], bytes[off + 1], bytes[off + 2], bytes[off + 3]];
            let v = if little_endian {
                f32::from_le_bytes(raw)
            } else {
                f32::from_be_bytes(raw)
            };
            data[row * width * channels + x] = v as f64;
        }
    }
    Ok((height, width, channels, data))
}

pub fn write_pfm_scalar(path: impl AsRef<Path>, map: &ScalarMap) -> Result<()> {
    write_pfm_raw(path.as_ref(), "Pf", map.height(), map.width(), map.data())
}

pub fn read_pfm_scalar(path: impl AsRef<Path>) -> Result<ScalarMap> {
    let path = path.as_ref();
    let (h, w, c, data) = read_pfm_raw(path)?;
    if c != 1 {
        return Err(parse_err(path, "expected single-channel Pf file"));
    }
    ScalarMap::new(h, w, data)
}

pub fn write_pfm_image(path: impl AsRef<Path>, img: &ImageBuffer) -> Result<()> {
    let path = path.as_ref();
    if img.channels() != 3 {
        return Err(Error::domain("PF output requires a 3-channel image"));
    }
    write_pfm_raw(path, "PF", img.height(), img.width(), img.data())
}

pub fn read_pfm_image(path: impl AsRef<Path>) -> Result<ImageBuffer> {
    let path = path.as_ref();
    let (h, w, c, data) = read_pfm_raw(path)?;
    if c != 3 {
        return Err(parse_err(path, "expected three-channel PF file"));
    }
    ImageBuffer::new(h, w, 3, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ppm_roundtrip_quantized() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("frame.ppm");
        // Values on the 8-bit grid survive the round trip exactly.
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let img = ImageBuffer::from_fn(4, 6, 3, |_, _, _| {
            rng.gen_range(0u32..=255) as f64 / 255.0
        })
        .unwrap();
        write_ppm(&path, &img).unwrap();
        let back = read_ppm(&path).unwrap();
        assert_eq!(img.height(), back.height());
        for (a, b) in img.data().iter().zip(back.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn pfm_scalar_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("depth.pfm");
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        // f32-exact values round trip bit-wise.
        let map = ScalarMap::from_fn(5, 7, |_, _| rng.gen_range(0.0f32..80.0) as f64);
        write_pfm_scalar(&path, &map).unwrap();
        let back = read_pfm_scalar(&path).unwrap();
        assert_eq!(map, back);
    }

    #[test]
    fn pfm_image_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("frame.pfm");
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let img = ImageBuffer::from_fn(3, 4, 3, |_, _, _| rng.gen_range(0.0f32..1.0) as f64).unwrap();
        write_pfm_image(&path, &img).unwrap();
        let back = read_pfm_image(&path).unwrap();
        assert_eq!(img, back);
    }

    #[test]
    fn read_errors_are_reported_with_path() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.pfm");
        std::fs::write(&path, b"Px\n2 2\n-1.0\n").unwrap();
        let err = read_pfm_scalar(&path).unwrap_err();
        assert!(format!("{err}").contains("bad.pfm"));
    }
}
