//! Portable Float Map I/O, grayscale `Pf` variant.
//!
//! Header: `Pf\n<width> <height>\n<scale>\n`, negative scale meaning
//! little-endian samples. Rasters are stored bottom-to-top per the Netpbm
//! convention; readers return top-down arrays. Samples are 32-bit floats.

use crate::error::{DpcError, Result};
use ndarray::Array2;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

/// Write a grayscale PFM (little-endian, one plane).
pub fn write_pfm(path: &Path, image: &Array2<f64>) -> Result<()> {
    let (h, w) = image.dim();
    let file = File::create(path)?;
    let mut out = BufWriter::new(file);
    write!(out, "Pf\n{} {}\n-1.0\n", w, h)?;
    for r in (0..h).rev() {
        for c in 0..w {
            out.write_all(&(image[(r, c)] as f32).to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Read a grayscale PFM written by [`write_pfm`] or any standard writer.
pub fn read_pfm(path: &Path) -> Result<Array2<f64>> {
    let file = File::open(path)?;
    let mut reader = BufReader::new(file);

    let magic = read_token(&mut reader)?;
    if magic != "Pf" {
        return Err(DpcError::Pfm(format!(
            "unsupported magic {magic:?}; only grayscale 'Pf' is handled"
        )));
    }
    let w: usize = parse_token(&mut reader, "width")?;
    let h: usize = parse_token(&mut reader, "height")?;
    let scale: f64 = parse_token(&mut reader, "scale")?;
    if scale == 0.0 {
        return Err(DpcError::Pfm("scale must be non-zero".into()));
    }
    let little_endian = scale < 0.0;

    let mut buf = vec![0u8; w * h * 4];
    reader.read_exact(&mut buf)?;
    let mut image = Array2::<f64>::zeros((h, w));
    for (i, chunk) in buf.chunks_exact(4).enumerate() {
        let bytes = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if little_endian {
            f32::from_le_bytes(bytes)
        } else {
            f32::from_be_bytes(bytes)
        };
        // Bottom-to-top storage.
        let r = h - 1 - i / w;
        let c = i % w;
        image[(r, c)] = v as f64;
    }
    Ok(image)
}

/// Read a whitespace-delimited header token.
fn read_token(reader: &mut impl Read) -> Result<String> {
    let mut token = String::new();
    let mut byte = [0u8; 1];
    loop {
        reader.read_exact(&mut byte)?;
        if byte[0].is_ascii_whitespace() {
            if token.is_empty() {
                continue;
            }
            return Ok(token);
        }
        token.push(byte[0] as char);
        if token.len() > 32 {
            return Err(DpcError::Pfm("header token too long".into()));
        }
    }
}

fn parse_token<T: std::str::FromStr>(reader: &mut impl Read, what: &str) -> Result<T> {
    let token = read_token(reader)?;
    token
        .parse()
        .map_err(|_| DpcError::Pfm(format!("invalid {what}: {token:?}")))
}
