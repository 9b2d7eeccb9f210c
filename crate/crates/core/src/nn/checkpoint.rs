//! Model checkpoint file.
//!
//! Layout (little-endian): magic `AMLP`, version `u32 = 1`, descriptor length
//! `u32`, UTF-8 descriptor text, descriptor hash `u64` (leading 8 bytes of its
//! SHA-256), parameter count `u64`, then the parameters as `f64`.

use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"AMLP";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    /// Architecture description; the loader compares it with the model being restored.
    pub descriptor: String,
    pub params: Vec<f64>,
}

pub fn spec_hash(descriptor: &str) -> u64 {
    let digest = Sha256::digest(descriptor.as_bytes());
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

impl Checkpoint {
    pub fn encode(&self) -> Vec<u8> {
        let desc = self.descriptor.as_bytes();
        let mut out = Vec::with_capacity(32 + desc.len() + 8 * self.params.len());
        out.extend_from_slice(&CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&(desc.len() as u32).to_le_bytes());
        out.extend_from_slice(desc);
        out.extend_from_slice(&spec_hash(&self.descriptor).to_le_bytes());
        out.extend_from_slice(&(self.params.len() as u64).to_le_bytes());
        for p in &self.params {
            out.extend_from_slice(&p.to_le_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut pos = 0usize;
        let mut take = |n: usize, what: &str| -> Result<&[u8]> {
            if bytes.len() - pos < n {
                return Err(Error::Truncated {
                    context: format!("checkpoint {what} at byte offset {pos}"),
                });
            }
            let s = &bytes[pos..pos + n];
            pos += n;
            Ok(s)
        };
        let magic: [u8; 4] = take(4, "magic")?.try_into().unwrap();
        if magic != CHECKPOINT_MAGIC {
            return Err(Error::BadMagic {
                expected: CHECKPOINT_MAGIC,
                found: magic,
            });
        }
        let version = u32::from_le_bytes(take(4, "version")?.try_into().unwrap());
        if version != CHECKPOINT_VERSION {
            return Err(Error::VersionMismatch {
                expected: CHECKPOINT_VERSION,
                found: version,
            });
        }
        let desc_len = u32::from_le_bytes(take(4, "descriptor length")?.try_into().unwrap());
        let descriptor = std::str::from_utf8(take(desc_len as usize, "descriptor")?)
            .map_err(|e| Error::SpecMismatch(format!("descriptor is not UTF-8: {e}")))?
            .to_string();
        let hash = u64::from_le_bytes(take(8, "spec hash")?.try_into().unwrap());
        if hash != spec_hash(&descriptor) {
            return Err(Error::SpecMismatch(
                "stored hash does not match descriptor".into(),
            ));
        }
        let count = u64::from_le_bytes(take(8, "parameter count")?.try_into().unwrap()) as usize;
        let raw = take(count.saturating_mul(8), "parameters")?;
        let params = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        if pos != bytes.len() {
            return Err(Error::TrailingData(bytes.len() - pos));
        }
        Ok(Self { descriptor, params })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.encode()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::decode(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Checkpoint {
        Checkpoint {
            descriptor: "variant=test\nmlp: linear(2,1,sigmoid)".into(),
            params: vec![0.5, -0.0, f64::MIN_POSITIVE / 4.0],
        }
    }

    #[test]
    fn round_trip_bit_exact() {
        let c = sample();
        let back = Checkpoint::decode(&c.encode()).unwrap();
        assert_eq!(back.descriptor, c.descriptor);
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back.params), bits(&c.params));
    }

    #[test]
    fn corruption_is_detected() {
        let bytes = sample().encode();
        let mut bad = bytes.clone();
        bad[1] = b'X';
        assert!(matches!(
            Checkpoint::decode(&bad),
            Err(Error::BadMagic { .. })
        ));
        let mut bad = bytes.clone();
        bad[4] = 7;
        assert!(matches!(
            Checkpoint::decode(&bad),
            Err(Error::VersionMismatch { .. })
        ));
        let mut bad = bytes.clone();
        bad[12] ^= 1; // flips a descriptor byte
        assert!(matches!(
            Checkpoint::decode(&bad),
            Err(Error::SpecMismatch(_))
        ));
        assert!(matches!(
            Checkpoint::decode(&bytes[..bytes.len() - 3]),
            Err(Error::Truncated { .. })
        ));
    }
}
