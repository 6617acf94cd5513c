//! Binary embedding database.
//!
//! All integers are little-endian.
//!
//! ```text
//! offset  size  field
//! 0       8     magic "CADEMBDB"
//! 8       4     version (u32, currently 1)
//! 12      4     dimension D (u32)
//! 16      8     entry count N (u64)
//! 24      ...   N records:
//!                 u16 id length L, L bytes UTF-8 model id,
//!                 u16 category length C, C bytes UTF-8 category,
//!                 D x f32 vector components
//! ```
//!
//! Records appear in insertion order. Trailing bytes after the last record
//! are a format error.

use std::path::Path;

use crate::io::write_atomic;
use crate::{Error, Result};

use super::{EmbeddingSpace, EmbeddingVec};

pub const DB_MAGIC: &[u8; 8] = b"CADEMBDB";
pub const DB_VERSION: u32 = 1;

pub fn to_bytes(space: &EmbeddingSpace) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(24 + space.len() * (space.dim() * 4 + 32));
    out.extend_from_slice(DB_MAGIC);
    out.extend_from_slice(&DB_VERSION.to_le_bytes());
    out.extend_from_slice(&(space.dim() as u32).to_le_bytes());
    out.extend_from_slice(&(space.len() as u64).to_le_bytes());
    for e in space.entries() {
        for s in [&e.model_id, &e.category] {
            let len = u16::try_from(s.len())
                .map_err(|_| Error::InvalidInput(format!("string `{s}` longer than 65535 bytes")))?;
            out.extend_from_slice(&len.to_le_bytes());
            out.extend_from_slice(s.as_bytes());
        }
        for v in e.vector.as_slice() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::Format(format!(
                "truncated file: needed {n} bytes for {what} at offset {}",
                self.pos
            )));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn string(&mut self, what: &str) -> Result<String> {
        let len = self.u16(what)? as usize;
        let at = self.pos;
        let raw = self.take(len, what)?;
        String::from_utf8(raw.to_vec()).map_err(|_| Error::Format(format!("{what} at offset {at} is not UTF-8")))
    }
}

pub fn from_bytes(bytes: &[u8]) -> Result<EmbeddingSpace> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8, "magic")? != DB_MAGIC {
        return Err(Error::Format("not an embedding database (bad magic)".into()));
    }
    let version = r.u32("version")?;
    if version != DB_VERSION {
        return Err(Error::Version {
            expected: DB_VERSION,
            found: version,
        });
    }
    let dim = r.u32("dimension")? as usize;
    let count = r.u64("entry count")?;
    let mut space = EmbeddingSpace::new(dim);
    for _ in 0..count {
        let id = r.string("model id")?;
        let category = r.string("category")?;
        let raw = r.take(dim * 4, "vector")?;
        let values = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let vector = EmbeddingVec::new(values).map_err(|e| Error::Format(format!("entry `{id}`: {e}")))?;
        space
            .insert(id, category, vector)
            .map_err(|e| Error::Format(e.to_string()))?;
    }
    if r.pos != bytes.len() {
        return Err(Error::Format(format!(
            "{} trailing bytes after last record",
            bytes.len() - r.pos
        )));
    }
    Ok(space)
}

/// Writes the database atomically (temporary file, then rename).
pub fn save(space: &EmbeddingSpace, path: &Path) -> Result<()> {
    write_atomic(path, &to_bytes(space)?)
}

pub fn load(path: &Path) -> Result<EmbeddingSpace> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space() -> EmbeddingSpace {
        let mut s = EmbeddingSpace::new(3);
        s.insert("m-1", "chair", EmbeddingVec::new(vec![0.1, -2.5, 1e-30]).unwrap())
            .unwrap();
        s.insert("m-ü", "table", EmbeddingVec::new(vec![f32::MAX, 0.0, -0.0]).unwrap())
            .unwrap();
        s
    }

    #[test]
    fn header_layout() {
        let b = to_bytes(&space()).unwrap();
        assert_eq!(&b[..8], b"CADEMBDB");
        assert_eq!(u32::from_le_bytes(b[8..12].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(b[12..16].try_into().unwrap()), 3);
        assert_eq!(u64::from_le_bytes(b[16..24].try_into().unwrap()), 2);
        assert_eq!(u16::from_le_bytes(b[24..26].try_into().unwrap()), 3);
        assert_eq!(&b[26..29], b"m-1");
    }

    #[test]
    fn bytes_round_trip_bit_exact() {
        let s = space();
        let back = from_bytes(&to_bytes(&s).unwrap()).unwrap();
        assert_eq!(back, s);
        let bits = |s: &EmbeddingSpace| -> Vec<u32> {
            s.entries()
                .iter()
                .flat_map(|e| e.vector.as_slice().iter().map(|v| v.to_bits()))
                .collect()
        };
        assert_eq!(bits(&back), bits(&s));
    }

    #[test]
    fn truncation_is_a_format_error() {
        let b = to_bytes(&space()).unwrap();
        for cut in [0, 5, 20, 25, b.len() - 1] {
            assert!(matches!(from_bytes(&b[..cut]), Err(Error::Format(_))), "cut {cut}");
        }
        let mut extra = b.clone();
        extra.push(0);
        assert!(matches!(from_bytes(&extra), Err(Error::Format(_))));
    }

    #[test]
    fn version_mismatch() {
        let mut b = to_bytes(&space()).unwrap();
        b[8] = 2;
        assert!(matches!(from_bytes(&b), Err(Error::Version { expected: 1, found: 2 })));
    }
}
