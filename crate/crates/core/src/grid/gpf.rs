//! The `GPF1` binary field format.
//!
//! Layout: the 8-byte magic `GPF1\0\0\0\0`, a little-endian `u32` sample
//! count `n`, a little-endian `f64` half-width `L`, then `n²` little-endian
//! `f64` samples, y-major and x-minor.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Field, Grid2D};
use crate::error::{Error, Result};

pub const GPF_MAGIC: [u8; 8] = *b"GPF1\0\0\0\0";

pub fn write_gpf<W: Write>(mut w: W, u: &Field) -> Result<()> {
    let grid = u.grid();
    let n = u32::try_from(grid.n())
        .map_err(|_| Error::InvalidArgument("grid too large for GPF1".into()))?;
    w.write_all(&GPF_MAGIC)?;
    w.write_all(&n.to_le_bytes())?;
    w.write_all(&grid.half_width().to_le_bytes())?;
    for v in u.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_gpf<R: Read>(mut r: R) -> Result<Field> {
    let mut magic = [0u8; 8];
    read_exact(&mut r, &mut magic, "magic")?;
    if magic != GPF_MAGIC {
        return Err(Error::FileFormat("bad magic, expected GPF1".into()));
    }
    let mut b4 = [0u8; 4];
    read_exact(&mut r, &mut b4, "sample count")?;
    let n = u32::from_le_bytes(b4) as usize;
    let mut b8 = [0u8; 8];
    read_exact(&mut r, &mut b8, "half-width")?;
    let half_width = f64::from_le_bytes(b8);
    let grid = Grid2D::new(half_width, n).map_err(|e| Error::FileFormat(e.to_string()))?;
    let mut values = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        read_exact(&mut r, &mut b8, "samples")?;
        values.push(f64::from_le_bytes(b8));
    }
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(Error::FileFormat("trailing bytes after samples".into()));
    }
    Field::new(&grid, values).map_err(|e| Error::FileFormat(e.to_string()))
}

pub fn write_gpf_file(path: impl AsRef<Path>, u: &Field) -> Result<()> {
    write_gpf(BufWriter::new(File::create(path)?), u)
}

pub fn read_gpf_file(path: impl AsRef<Path>) -> Result<Field> {
    read_gpf(BufReader::new(File::open(path)?))
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::FileFormat(format!("truncated {what}")),
        _ => Error::Io(e),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        let g = Grid2D::new(2.5, 16).unwrap();
        let u = Field::from_fn(&g, |x, y| x - 2.0 * y);
        let mut buf = Vec::new();
        write_gpf(&mut buf, &u).unwrap();
        assert_eq!(buf.len(), 8 + 4 + 8 + 8 * 256);
        assert_eq!(&buf[..8], b"GPF1\0\0\0\0");
        assert_eq!(&buf[8..12], &16u32.to_le_bytes());
        assert_eq!(&buf[12..20], &2.5f64.to_le_bytes());
        // first sample is (x, y) = (-L, -L), second is one step in x
        assert_eq!(&buf[20..28], &(-2.5f64 + 5.0).to_le_bytes());
        assert_eq!(&buf[28..36], &u.at(1, 0).to_le_bytes());
    }

    #[test]
    fn malformed_inputs() {
        assert!(matches!(read_gpf(&b"GPF2\0\0\0\0"[..]), Err(Error::FileFormat(_))));
        let g = Grid2D::new(1.0, 16).unwrap();
        let mut buf = Vec::new();
        write_gpf(&mut buf, &Field::constant(&g, 1.0)).unwrap();
        assert!(matches!(read_gpf(&buf[..buf.len() - 3]), Err(Error::FileFormat(_))));
        let mut long = buf.clone();
        long.push(0);
        assert!(matches!(read_gpf(&long[..]), Err(Error::FileFormat(_))));
        let mut odd = buf.clone();
        odd[8..12].copy_from_slice(&15u32.to_le_bytes());
        assert!(matches!(read_gpf(&odd[..]), Err(Error::FileFormat(_))));
    }
}
