//! Binary dictionary files.
//!
//! Layout (little-endian): magic `OMPLAB01`, `u64` rows, `u64` cols,
//! `rows * cols` `f64` entries column-major, `u64` label length, UTF-8 label.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use super::Dictionary;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"OMPLAB01";

impl Dictionary {
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&(self.rows() as u64).to_le_bytes())?;
        w.write_all(&(self.cols() as u64).to_le_bytes())?;
        for v in self.matrix().as_slice() {
            w.write_all(&v.to_le_bytes())?;
        }
        let label = self.label().as_bytes();
        w.write_all(&(label.len() as u64).to_le_bytes())?;
        w.write_all(label)?;
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("bad magic, not a dictionary file".into()));
        }
        let rows = read_u64(&mut r)? as usize;
        let cols = read_u64(&mut r)? as usize;
        let len = rows
            .checked_mul(cols)
            .ok_or_else(|| Error::Format("dimensions overflow".into()))?;
        let mut entries = Vec::with_capacity(len);
        let mut buf = [0u8; 8];
        for _ in 0..len {
            r.read_exact(&mut buf)?;
            entries.push(f64::from_le_bytes(buf));
        }
        let label_len = read_u64(&mut r)? as usize;
        let mut label = vec![0u8; label_len];
        r.read_exact(&mut label)?;
        let label = String::from_utf8(label).map_err(|e| Error::Format(e.to_string()))?;
        Dictionary::new(DMatrix::from_vec(rows, cols, entries), label)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_to(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dictionary::build_two_ortho;

    #[test]
    fn byte_layout() {
        let d = build_two_ortho(2).unwrap();
        let mut bytes = Vec::new();
        d.write_to(&mut bytes).unwrap();
        assert_eq!(&bytes[..8], b"OMPLAB01");
        assert_eq!(u64::from_le_bytes(bytes[8..16].try_into().unwrap()), 2);
        assert_eq!(u64::from_le_bytes(bytes[16..24].try_into().unwrap()), 4);
        assert_eq!(f64::from_le_bytes(bytes[24..32].try_into().unwrap()), 1.0);
        let label_at = 24 + 8 * 8;
        let len = u64::from_le_bytes(bytes[label_at..label_at + 8].try_into().unwrap()) as usize;
        assert_eq!(&bytes[label_at + 8..], d.label().as_bytes());
        assert_eq!(len, d.label().len());
        let back = Dictionary::read_from(bytes.as_slice()).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn bad_magic() {
        let bytes = b"NOTADICT00000000".to_vec();
        assert!(matches!(Dictionary::read_from(bytes.as_slice()), Err(Error::Format(_))));
    }

    #[test]
    fn truncated() {
        let d = build_two_ortho(4).unwrap();
        let mut bytes = Vec::new();
        d.write_to(&mut bytes).unwrap();
        bytes.truncate(40);
        assert!(Dictionary::read_from(bytes.as_slice()).is_err());
    }
}
