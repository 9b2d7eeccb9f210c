//! Binary embedding store.
//!
//! Layout (little-endian): magic `AEM1`, version `u32 = 1`, record count `u64`,
//! then per record `anime_id u64`, `kind u8`, `dimension u32` and `dimension`
//! IEEE-754 `f32` values.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const EMBEDDING_MAGIC: [u8; 4] = *b"AEM1";
pub const EMBEDDING_VERSION: u32 = 1;
pub const TEXT_DIM: usize = 768;
pub const PORTRAIT_DIM: usize = 49;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EmbeddingKind {
    Synopsis,
    CharDesc,
    Portrait,
}

impl EmbeddingKind {
    pub const ALL: [EmbeddingKind; 3] = [
        EmbeddingKind::Synopsis,
        EmbeddingKind::CharDesc,
        EmbeddingKind::Portrait,
    ];

    pub fn tag(self) -> u8 {
        match self {
            EmbeddingKind::Synopsis => 0,
            EmbeddingKind::CharDesc => 1,
            EmbeddingKind::Portrait => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(EmbeddingKind::Synopsis),
            1 => Ok(EmbeddingKind::CharDesc),
            2 => Ok(EmbeddingKind::Portrait),
            other => Err(Error::UnknownKind(other)),
        }
    }

    pub fn dimension(self) -> usize {
        match self {
            EmbeddingKind::Synopsis | EmbeddingKind::CharDesc => TEXT_DIM,
            EmbeddingKind::Portrait => PORTRAIT_DIM,
        }
    }
}

impl fmt::Display for EmbeddingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EmbeddingKind::Synopsis => "synopsis",
            EmbeddingKind::CharDesc => "char_desc",
            EmbeddingKind::Portrait => "portrait",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingRecord {
    pub anime_id: u64,
    pub kind: EmbeddingKind,
    pub vector: Vec<f32>,
}

impl EmbeddingRecord {
    fn validate(&self) -> Result<()> {
        let expected = self.kind.dimension();
        if self.vector.len() != expected {
            return Err(Error::DimensionMismatch {
                kind: self.kind.to_string(),
                expected,
                found: self.vector.len(),
            });
        }
        if self.vector.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                op: format!("embedding ({}, {})", self.anime_id, self.kind),
            });
        }
        Ok(())
    }
}

pub fn encode_embeddings(records: &[EmbeddingRecord]) -> Result<Vec<u8>> {
    let payload: usize = records.iter().map(|r| 13 + 4 * r.vector.len()).sum();
    let mut buf = Vec::with_capacity(16 + payload);
    buf.extend_from_slice(&EMBEDDING_MAGIC);
    buf.extend_from_slice(&EMBEDDING_VERSION.to_le_bytes());
    buf.extend_from_slice(&(records.len() as u64).to_le_bytes());
    for r in records {
        r.validate()?;
        buf.extend_from_slice(&r.anime_id.to_le_bytes());
        buf.push(r.kind.tag());
        buf.extend_from_slice(&(r.vector.len() as u32).to_le_bytes());
        for x in &r.vector {
            buf.extend_from_slice(&x.to_le_bytes());
        }
    }
    Ok(buf)
}

pub fn write_embeddings(records: &[EmbeddingRecord], path: &Path) -> Result<()> {
    let bytes = encode_embeddings(records)?;
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    out.write_all(&bytes)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::Truncated {
                context: format!("{what} at byte offset {}", self.pos),
            });
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

pub fn decode_embeddings(bytes: &[u8]) -> Result<Vec<EmbeddingRecord>> {
    let mut cur = Cursor { bytes, pos: 0 };
    let magic: [u8; 4] = cur.take(4, "magic")?.try_into().unwrap();
    if magic != EMBEDDING_MAGIC {
        return Err(Error::BadMagic {
            expected: EMBEDDING_MAGIC,
            found: magic,
        });
    }
    let version = cur.u32("version")?;
    if version != EMBEDDING_VERSION {
        return Err(Error::VersionMismatch {
            expected: EMBEDDING_VERSION,
            found: version,
        });
    }
    let count = cur.u64("record count")?;
    // Each record needs at least 13 header bytes; reject absurd counts before allocating.
    let max_possible = (bytes.len() - cur.pos) / 13;
    let mut records = Vec::with_capacity((count as usize).min(max_possible));
    for i in 0..count {
        let anime_id = cur.u64(&format!("record {i} anime_id"))?;
        let kind = EmbeddingKind::from_tag(cur.take(1, "kind")?[0])?;
        let dim = cur.u32(&format!("record {i} dimension"))? as usize;
        if dim != kind.dimension() {
            return Err(Error::DimensionMismatch {
                kind: kind.to_string(),
                expected: kind.dimension(),
                found: dim,
            });
        }
        let raw = cur.take(4 * dim, &format!("record {i} vector"))?;
        let vector = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        records.push(EmbeddingRecord {
            anime_id,
            kind,
            vector,
        });
    }
    if cur.pos != bytes.len() {
        return Err(Error::TrailingData(bytes.len() - cur.pos));
    }
    Ok(records)
}

pub fn read_embeddings(path: &Path) -> Result<Vec<EmbeddingRecord>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_embeddings(&bytes)
}

/// Loaded embeddings keyed by `(anime_id, kind)`; immutable once built.
#[derive(Debug, Clone, Default)]
pub struct EmbeddingStore {
    vectors: HashMap<(u64, EmbeddingKind), Vec<f32>>,
}

impl EmbeddingStore {
    pub fn from_records(records: Vec<EmbeddingRecord>) -> Result<Self> {
        let mut vectors = HashMap::with_capacity(records.len());
        for r in records {
            r.validate()?;
            if vectors.insert((r.anime_id, r.kind), r.vector).is_some() {
                return Err(Error::DuplicateId {
                    kind: "embedding record",
                    id: r.anime_id,
                });
            }
        }
        Ok(Self { vectors })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_records(read_embeddings(path)?)
    }

    pub fn get(&self, anime_id: u64, kind: EmbeddingKind) -> Option<&[f32]> {
        self.vectors.get(&(anime_id, kind)).map(Vec::as_slice)
    }

    pub fn require(&self, anime_id: u64, kind: EmbeddingKind) -> Result<&[f32]> {
        self.get(anime_id, kind)
            .ok_or_else(|| Error::MissingEmbedding {
                anime_id,
                kind: kind.to_string(),
            })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn report(&self) -> EmbeddingReport {
        let mut per_kind = BTreeMap::new();
        let mut per_anime: HashMap<u64, usize> = HashMap::new();
        for &(anime_id, kind) in self.vectors.keys() {
            *per_kind.entry(kind).or_insert(0) += 1;
            *per_anime.entry(anime_id).or_insert(0) += 1;
        }
        EmbeddingReport {
            records: self.vectors.len(),
            per_kind,
            animes: per_anime.len(),
            complete_animes: per_anime.values().filter(|&&n| n == 3).count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingReport {
    pub records: usize,
    pub per_kind: BTreeMap<EmbeddingKind, usize>,
    pub animes: usize,
    /// Animes with all three kinds present.
    pub complete_animes: usize,
}

impl fmt::Display for EmbeddingReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "records={}", self.records)?;
        for kind in EmbeddingKind::ALL {
            writeln!(
                f,
                "{kind}={} (dimension {})",
                self.per_kind.get(&kind).copied().unwrap_or(0),
                kind.dimension()
            )?;
        }
        writeln!(f, "animes={}", self.animes)?;
        writeln!(f, "complete_animes={}", self.complete_animes)
    }
}
