//! Binary state files.
//!
//! Record layout: magic `Q3ST`, version byte `1`, `dim` as u32 little-endian,
//! then `dim²` entries row-major, each a pair of little-endian f64
//! `(re, im)`. A file may hold several records back to back.

use std::io::{ErrorKind, Read, Write};

use num_complex::Complex64;

use super::ComplexMatrix;
use crate::error::{Error, Result};

pub const STATE_MAGIC: &[u8; 4] = b"Q3ST";
pub const STATE_VERSION: u8 = 1;

const MAX_DIM: u32 = 1 << 12;

pub fn write_matrix<W: Write>(w: &mut W, m: &ComplexMatrix) -> Result<()> {
    w.write_all(STATE_MAGIC)?;
    w.write_all(&[STATE_VERSION])?;
    w.write_all(&(m.dim() as u32).to_le_bytes())?;
    for z in m.as_slice() {
        w.write_all(&z.re.to_le_bytes())?;
        w.write_all(&z.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn write_matrices<W: Write>(w: &mut W, ms: &[ComplexMatrix]) -> Result<()> {
    ms.iter().try_for_each(|m| write_matrix(w, m))
}

/// Reads one record. Returns `Ok(None)` on a clean end of stream.
pub fn read_matrix<R: Read>(r: &mut R) -> Result<Option<ComplexMatrix>> {
    let mut magic = [0u8; 4];
    match r.read_exact(&mut magic) {
        Ok(()) => {}
        Err(e) if e.kind() == ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e.into()),
    }
    if &magic != STATE_MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}")));
    }
    let mut version = [0u8; 1];
    r.read_exact(&mut version)?;
    if version[0] != STATE_VERSION {
        return Err(Error::Version { expected: STATE_VERSION as u32, found: version[0] as u32 });
    }
    let mut dim = [0u8; 4];
    r.read_exact(&mut dim)?;
    let dim = u32::from_le_bytes(dim);
    if dim == 0 || dim > MAX_DIM {
        return Err(Error::Format(format!("implausible dimension {dim}")));
    }
    let n = (dim as usize).pow(2);
    let mut data = Vec::with_capacity(n);
    let mut buf = [0u8; 16];
    for _ in 0..n {
        r.read_exact(&mut buf).map_err(|e| match e.kind() {
            ErrorKind::UnexpectedEof => Error::Format("truncated state record".into()),
            _ => e.into(),
        })?;
        let re = f64::from_le_bytes(buf[..8].try_into().unwrap());
        let im = f64::from_le_bytes(buf[8..].try_into().unwrap());
        data.push(Complex64::new(re, im));
    }
    ComplexMatrix::from_vec(data).map(Some)
}

pub fn read_matrices<R: Read>(r: &mut R) -> Result<Vec<ComplexMatrix>> {
    let mut out = Vec::new();
    while let Some(m) = read_matrix(r)? {
        out.push(m);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmat::{c64, horodecki_state};

    #[test]
    fn header_layout() {
        let mut buf = Vec::new();
        write_matrix(&mut buf, &ComplexMatrix::from_real_diagonal(&[0.25, 0.75])).unwrap();
        assert_eq!(&buf[..4], b"Q3ST");
        assert_eq!(buf[4], 1);
        assert_eq!(&buf[5..9], &2u32.to_le_bytes());
        assert_eq!(buf.len(), 9 + 4 * 16);
        assert_eq!(&buf[9..17], &0.25f64.to_le_bytes());
    }

    #[test]
    fn roundtrip_multiple_records() {
        let a = horodecki_state(0.4).unwrap().into_matrix();
        let mut b = ComplexMatrix::identity(3);
        b[(0, 2)] = c64(-0.5, 1.25);
        let mut buf = Vec::new();
        write_matrices(&mut buf, &[a.clone(), b.clone()]).unwrap();
        let back = read_matrices(&mut buf.as_slice()).unwrap();
        assert_eq!(back, vec![a, b]);
    }

    #[test]
    fn rejects_bad_input() {
        let mut buf = Vec::new();
        write_matrix(&mut buf, &ComplexMatrix::identity(3)).unwrap();
        let mut wrong_version = buf.clone();
        wrong_version[4] = 2;
        assert!(matches!(read_matrix(&mut wrong_version.as_slice()), Err(Error::Version { .. })));
        let mut wrong_magic = buf.clone();
        wrong_magic[0] = b'X';
        assert!(matches!(read_matrix(&mut wrong_magic.as_slice()), Err(Error::Format(_))));
        let truncated = &buf[..buf.len() - 3];
        assert!(matches!(read_matrix(&mut &truncated[..]), Err(Error::Format(_))));
    }
}
