//! Leakage-free train/test splitting.
//!
//! Animes that share a main character, directly or through a chain of other
//! animes, form a cluster. Whole clusters are assigned to one side of the split
//! so that no character seen in training appears in the test set.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};

pub const DEFAULT_TRAIN_FRACTION: f64 = 0.815;

/// Disjoint-set forest with path halving and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns `false` if `a` and `b` were already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        true
    }
}

/// Cluster label per anime, aligned with corpus order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterAssignment {
    anime_ids: Vec<u64>,
    cluster_ids: Vec<usize>,
    cluster_count: usize,
}

impl ClusterAssignment {
    pub fn cluster_count(&self) -> usize {
        self.cluster_count
    }

    pub fn anime_ids(&self) -> &[u64] {
        &self.anime_ids
    }

    pub fn cluster_ids(&self) -> &[usize] {
        &self.cluster_ids
    }

    pub fn cluster_of(&self, anime_id: u64) -> Option<usize> {
        self.anime_ids
            .iter()
            .position(|&id| id == anime_id)
            .map(|i| self.cluster_ids[i])
    }

    /// Member anime IDs per cluster, in corpus order.
    pub fn members(&self) -> Vec<Vec<u64>> {
        let mut out = vec![Vec::new(); self.cluster_count];
        for (&id, &c) in self.anime_ids.iter().zip(&self.cluster_ids) {
            out[c].push(id);
        }
        out
    }
}

/// Connected components of the anime graph whose edges join animes sharing a character.
///
/// Cluster IDs are dense and numbered in order of first appearance in the corpus.
pub fn build_clusters(corpus: &Corpus) -> ClusterAssignment {
    let animes = corpus.animes();
    let mut uf = UnionFind::new(animes.len());
    let mut first_holder: HashMap<u64, usize> = HashMap::new();
    for (i, a) in animes.iter().enumerate() {
        for &c in &a.character_ids {
            match first_holder.get(&c) {
                Some(&j) => {
                    uf.union(i, j);
                }
                None => {
                    first_holder.insert(c, i);
                }
            }
        }
    }
    let mut dense: HashMap<usize, usize> = HashMap::new();
    let cluster_ids: Vec<usize> = (0..animes.len())
        .map(|i| {
            let root = uf.find(i);
            let next = dense.len();
            *dense.entry(root).or_insert(next)
        })
        .collect();
    ClusterAssignment {
        anime_ids: animes.iter().map(|a| a.id).collect(),
        cluster_ids,
        cluster_count: dense.len(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: BTreeSet<u64>,
    pub test: BTreeSet<u64>,
    pub seed: u64,
    pub target_train_fraction: f64,
}

impl Split {
    pub fn achieved_train_fraction(&self) -> f64 {
        let total = self.train.len() + self.test.len();
        if total == 0 {
            0.0
        } else {
            self.train.len() as f64 / total as f64
        }
    }

    pub fn side_of(&self, anime_id: u64) -> Option<Side> {
        if self.train.contains(&anime_id) {
            Some(Side::Train)
        } else if self.test.contains(&anime_id) {
            Some(Side::Test)
        } else {
            None
        }
    }
}

/// Shuffles clusters with a seeded permutation and fills the training side until
/// its anime fraction first reaches the target; the crossing cluster goes to train.
pub fn split(
    assignment: &ClusterAssignment,
    target_train_fraction: f64,
    seed: u64,
) -> Result<Split> {
    if !(target_train_fraction > 0.0 && target_train_fraction < 1.0) {
        return Err(Error::Config(format!(
            "train fraction {target_train_fraction} must lie in (0, 1)"
        )));
    }
    if assignment.cluster_count < 2 {
        return Err(Error::InfeasibleSplit {
            message: format!(
                "need at least 2 clusters, found {}",
                assignment.cluster_count
            ),
        });
    }
    let members = assignment.members();
    let total = assignment.anime_ids.len();
    let mut order: Vec<usize> = (0..members.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let mut train = BTreeSet::new();
    let mut test = BTreeSet::new();
    for &c in &order {
        let reached = train.len() as f64 / total as f64 >= target_train_fraction;
        let side = if reached { &mut test } else { &mut train };
        side.extend(members[c].iter().copied());
    }
    if test.is_empty() {
        let largest = members.iter().map(Vec::len).max().unwrap_or(0);
        return Err(Error::InfeasibleSplit {
            message: format!(
                "seed {seed} leaves the test side empty; largest cluster holds {largest}/{total} \
                 animes (fraction {:.4}) against target {target_train_fraction}",
                largest as f64 / total as f64
            ),
        });
    }
    Ok(Split {
        train,
        test,
        seed,
        target_train_fraction,
    })
}

/// Character IDs that occur in both a training and a test anime, ascending.
pub fn verify_no_leakage(split: &Split, corpus: &Corpus) -> Vec<u64> {
    let collect = |ids: &BTreeSet<u64>| -> BTreeSet<u64> {
        corpus
            .animes()
            .iter()
            .filter(|a| ids.contains(&a.id))
            .flat_map(|a| a.character_ids.iter().copied())
            .collect()
    };
    let train_chars = collect(&split.train);
    let test_chars = collect(&split.test);
    train_chars.intersection(&test_chars).copied().collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestHeader {
    seed: u64,
    target_train_fraction: f64,
    achieved_train_fraction: f64,
    train: usize,
    test: usize,
    cluster_count: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestRow {
    anime_id: u64,
    side: Side,
    cluster_id: usize,
}

/// A split as stored on disk, with the cluster label of every anime.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitManifest {
    pub split: Split,
    pub cluster_ids: HashMap<u64, usize>,
}

/// Writes a header record followed by one record per anime in corpus order.
pub fn write_manifest<W: Write>(
    out: &mut W,
    split: &Split,
    assignment: &ClusterAssignment,
) -> std::io::Result<()> {
    let header = ManifestHeader {
        seed: split.seed,
        target_train_fraction: split.target_train_fraction,
        achieved_train_fraction: split.achieved_train_fraction(),
        train: split.train.len(),
        test: split.test.len(),
        cluster_count: assignment.cluster_count,
    };
    writeln!(out, "{}", serde_json::to_string(&header)?)?;
    for (&anime_id, &cluster_id) in assignment.anime_ids.iter().zip(&assignment.cluster_ids) {
        let Some(side) = split.side_of(anime_id) else {
            continue;
        };
        let row = ManifestRow {
            anime_id,
            side,
            cluster_id,
        };
        writeln!(out, "{}", serde_json::to_string(&row)?)?;
    }
    Ok(())
}

pub fn save_manifest(path: &Path, split: &Split, assignment: &ClusterAssignment) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_manifest(&mut out, split, assignment)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn read_manifest<R: BufRead>(reader: R) -> Result<SplitManifest> {
    let mut lines = reader.lines().enumerate();
    let malformed = |line: usize, message: String| Error::MalformedLine { line, message };
    let header: ManifestHeader = match lines.next() {
        Some((_, line)) => {
            let line = line.map_err(|e| Error::io("<manifest>", e))?;
            serde_json::from_str(&line).map_err(|e| malformed(1, e.to_string()))?
        }
        None => return Err(malformed(1, "missing header".into())),
    };
    let mut train = BTreeSet::new();
    let mut test = BTreeSet::new();
    let mut cluster_ids = HashMap::new();
    for (i, line) in lines {
        let line = line.map_err(|e| Error::io("<manifest>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let row: ManifestRow =
            serde_json::from_str(&line).map_err(|e| malformed(i + 1, e.to_string()))?;
        if cluster_ids.insert(row.anime_id, row.cluster_id).is_some() {
            return Err(Error::DuplicateId {
                kind: "anime",
                id: row.anime_id,
            });
        }
        match row.side {
            Side::Train => train.insert(row.anime_id),
            Side::Test => test.insert(row.anime_id),
        };
    }
    if train.len() != header.train || test.len() != header.test {
        return Err(malformed(
            1,
            format!(
                "header declares {}/{} train/test rows, found {}/{}",
                header.train,
                header.test,
                train.len(),
                test.len()
            ),
        ));
    }
    Ok(SplitManifest {
        split: Split {
            train,
            test,
            seed: header.seed,
            target_train_fraction: header.target_train_fraction,
        },
        cluster_ids,
    })
}

pub fn load_manifest(path: &Path) -> Result<SplitManifest> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_manifest(BufReader::new(file))
}
