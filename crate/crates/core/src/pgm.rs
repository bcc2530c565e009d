//! PGM (portable graymap) reading and writing.

use std::path::{Path, PathBuf};

use std::io::Write;

use crate::error::{Error, Result};

/// Image rows are written top row first; the top row is the largest `j`.
fn flip_rows<P: Copy>(nx: usize, ny: usize, data: &[P]) -> Vec<P> {
    (0..ny).rev().flat_map(|j| data[j * nx..(j + 1) * nx].iter().copied()).collect()
}

fn write_raw(path: &Path, nx: usize, ny: usize, maxval: u32, payload: &[u8]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    write!(out, "P5\n{nx} {ny}\n{maxval}\n")?;
    out.write_all(payload)?;
    out.flush()?;
    Ok(())
}

pub fn write_u8(path: &Path, nx: usize, ny: usize, levels: &[u8]) -> Result<()> {
    write_raw(path, nx, ny, 255, &flip_rows(nx, ny, levels))
}

/// 16-bit samples are big-endian per the format.
pub fn write_u16(path: &Path, nx: usize, ny: usize, levels: &[u16]) -> Result<()> {
    let bytes: Vec<u8> = flip_rows(nx, ny, levels).iter().flat_map(|v| v.to_be_bytes()).collect();
    write_raw(path, nx, ny, 65535, &bytes)
}

/// Reads an 8- or 16-bit PGM. Returns `(nx, ny, values)` with values scaled to
/// `[0, 1]` by the format's maximum and stored bottom row first.
pub fn read(path: &Path) -> Result<(usize, usize, Vec<f64>)> {
    let img = image::ImageReader::open(path)?
        .with_guessed_format()?
        .decode()
        .map_err(|e| Error::Image(e.to_string()))?;
    let (nx, ny) = (img.width() as usize, img.height() as usize);
    let values: Vec<f64> = match img {
        image::DynamicImage::ImageLuma8(buf) => buf.into_raw().iter().map(|&v| v as f64 / 255.0).collect(),
        other => other.into_luma16().into_raw().iter().map(|&v| v as f64 / 65535.0).collect(),
    };
    Ok((nx, ny, flip_rows(nx, ny, &values)))
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".scale");
    PathBuf::from(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_8_and_16_bit() {
        let dir = tempfile::tempdir().unwrap();
        let p8 = dir.path().join("a.pgm");
        let data8: Vec<u8> = (0..12).map(|v| v * 20).collect();
        write_u8(&p8, 4, 3, &data8).unwrap();
        let (nx, ny, v) = read(&p8).unwrap();
        assert_eq!((nx, ny), (4, 3));
        let back: Vec<u8> = v.iter().map(|x| (x * 255.0).round() as u8).collect();
        assert_eq!(back, data8);

        let p16 = dir.path().join("b.pgm");
        let data16: Vec<u16> = (0..12).map(|v| v * 5000 + 7).collect();
        write_u16(&p16, 4, 3, &data16).unwrap();
        let (_, _, v) = read(&p16).unwrap();
        let back: Vec<u16> = v.iter().map(|x| (x * 65535.0).round() as u16).collect();
        assert_eq!(back, data16);
    }
}
