//! Corpus schema, line-delimited ingestion, cleaning and descriptive statistics.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scoring::{self, ScoreParams};

pub const DEFAULT_MIN_SYNOPSIS_WORDS: usize = 20;
pub const DEFAULT_PLACEHOLDER: &str = "No description available";

/// Number of maximal whitespace-separated tokens.
pub fn wordcount(text: &str) -> usize {
    text.split_whitespace().count()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Character {
    pub id: u64,
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub portrait_ref: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VoteAggregate {
    pub vote_count: u64,
    pub vote_sum: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Anime {
    pub id: u64,
    pub title: String,
    pub synopsis: String,
    pub character_ids: Vec<u64>,
    pub votes: Option<VoteAggregate>,
    pub golden_score: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Record {
    Character(Character),
    Anime(AnimeRecord),
}

#[derive(Debug, Serialize, Deserialize)]
struct AnimeRecord {
    id: u64,
    #[serde(default)]
    title: String,
    #[serde(default)]
    synopsis: String,
    #[serde(default)]
    character_ids: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    vote_count: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    vote_sum: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    golden_score: Option<f64>,
}

impl AnimeRecord {
    fn into_anime(self) -> std::result::Result<Anime, String> {
        let votes = match (self.vote_count, self.vote_sum) {
            (None, None) => None,
            (Some(vote_count), Some(vote_sum)) => {
                if !(vote_sum >= 0.0 && vote_sum <= 10.0 * vote_count as f64) {
                    return Err(format!(
                        "vote_sum {vote_sum} outside [0, 10 * vote_count = {}]",
                        10 * vote_count
                    ));
                }
                Some(VoteAggregate {
                    vote_count,
                    vote_sum,
                })
            }
            _ => return Err("vote_count and vote_sum must be given together".into()),
        };
        if let Some(score) = self.golden_score {
            if !(0.0..=10.0).contains(&score) {
                return Err(format!("golden_score {score} outside [0, 10]"));
            }
        }
        Ok(Anime {
            id: self.id,
            title: self.title,
            synopsis: self.synopsis,
            character_ids: self.character_ids,
            votes,
            golden_score: self.golden_score,
        })
    }

    fn from_anime(anime: &Anime) -> Self {
        Self {
            id: anime.id,
            title: anime.title.clone(),
            synopsis: anime.synopsis.clone(),
            character_ids: anime.character_ids.clone(),
            vote_count: anime.votes.map(|v| v.vote_count),
            vote_sum: anime.votes.map(|v| v.vote_sum),
            golden_score: anime.golden_score,
        }
    }
}

/// A set of animes and the characters they reference, in file order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    animes: Vec<Anime>,
    characters: Vec<Character>,
    character_index: HashMap<u64, usize>,
}

impl Corpus {
    /// Builds a corpus, checking ID uniqueness and referential integrity.
    pub fn new(animes: Vec<Anime>, characters: Vec<Character>) -> Result<Self> {
        let mut character_index = HashMap::with_capacity(characters.len());
        for (i, c) in characters.iter().enumerate() {
            if character_index.insert(c.id, i).is_some() {
                return Err(Error::DuplicateId {
                    kind: "character",
                    id: c.id,
                });
            }
        }
        let mut seen = HashSet::with_capacity(animes.len());
        for a in &animes {
            if !seen.insert(a.id) {
                return Err(Error::DuplicateId {
                    kind: "anime",
                    id: a.id,
                });
            }
            if let Some(&missing) = a
                .character_ids
                .iter()
                .find(|id| !character_index.contains_key(id))
            {
                return Err(Error::DanglingReference {
                    anime_id: a.id,
                    character_id: missing,
                });
            }
        }
        Ok(Self {
            animes,
            characters,
            character_index,
        })
    }

    pub fn animes(&self) -> &[Anime] {
        &self.animes
    }

    pub fn characters(&self) -> &[Character] {
        &self.characters
    }

    pub fn character(&self, id: u64) -> Option<&Character> {
        self.character_index.get(&id).map(|&i| &self.characters[i])
    }

    pub fn anime(&self, id: u64) -> Option<&Anime> {
        self.animes.iter().find(|a| a.id == id)
    }

    pub fn len(&self) -> usize {
        self.animes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.animes.is_empty()
    }

    /// Character descriptions of an anime in ascending character-ID order, joined by newlines.
    pub fn joined_descriptions(&self, anime: &Anime) -> String {
        let mut ids = anime.character_ids.clone();
        ids.sort_unstable();
        ids.dedup();
        ids.iter()
            .filter_map(|id| self.character(*id))
            .map(|c| c.description.as_str())
            .collect::<Vec<_>>()
            .join("\n")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        self.write_to(&mut out).map_err(|e| Error::io(path, e))?;
        out.flush().map_err(|e| Error::io(path, e))
    }

    pub fn write_to<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        for c in &self.characters {
            let line = serde_json::to_string(&Record::Character(c.clone()))?;
            writeln!(out, "{line}")?;
        }
        for a in &self.animes {
            let line = serde_json::to_string(&Record::Anime(AnimeRecord::from_anime(a)))?;
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}

pub fn parse_corpus(path: &Path) -> Result<Corpus> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_corpus_from(BufReader::new(file)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

/// Parses line-delimited records. Blank lines are skipped; line numbers are 1-based.
pub fn parse_corpus_from<R: BufRead>(reader: R) -> Result<Corpus> {
    let mut animes = Vec::new();
    let mut characters = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io("<corpus>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: Record = serde_json::from_str(&line).map_err(|e| Error::MalformedLine {
            line: line_no,
            message: e.to_string(),
        })?;
        match record {
            Record::Character(c) => characters.push(c),
            Record::Anime(a) => {
                animes.push(a.into_anime().map_err(|message| Error::MalformedLine {
                    line: line_no,
                    message,
                })?)
            }
        }
    }
    Corpus::new(animes, characters)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CleanConfig {
    pub min_synopsis_words: usize,
    /// Descriptions matching one of these exactly (after trimming) are treated as absent.
    pub placeholders: Vec<String>,
    /// Used to derive a golden score from raw votes when none is given.
    pub score_params: ScoreParams,
}

impl Default for CleanConfig {
    fn default() -> Self {
        Self {
            min_synopsis_words: DEFAULT_MIN_SYNOPSIS_WORDS,
            placeholders: vec![DEFAULT_PLACEHOLDER.to_string()],
            score_params: ScoreParams::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CharacterRemoval {
    PlaceholderDescription,
    EmptyDescription,
    MissingPortrait,
}

impl fmt::Display for CharacterRemoval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CharacterRemoval::PlaceholderDescription => "placeholder description",
            CharacterRemoval::EmptyDescription => "empty description",
            CharacterRemoval::MissingPortrait => "missing portrait",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnimeRemoval {
    MissingScore,
    MissingTitle,
    MissingSynopsis,
    NoCharacters,
    SynopsisTooShort { words: usize },
}

impl fmt::Display for AnimeRemoval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnimeRemoval::MissingScore => f.write_str("missing score"),
            AnimeRemoval::MissingTitle => f.write_str("missing title"),
            AnimeRemoval::MissingSynopsis => f.write_str("missing synopsis"),
            AnimeRemoval::NoCharacters => f.write_str("no remaining characters"),
            AnimeRemoval::SynopsisTooShort { words } => {
                write!(f, "synopsis too short ({words} words)")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CleanReport {
    pub removed_characters: Vec<(u64, CharacterRemoval)>,
    pub removed_animes: Vec<(u64, AnimeRemoval)>,
}

impl fmt::Display for CleanReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "removed characters: {}", self.removed_characters.len())?;
        for (id, reason) in &self.removed_characters {
            writeln!(f, "  character {id}: {reason}")?;
        }
        writeln!(f, "removed animes: {}", self.removed_animes.len())?;
        for (id, reason) in &self.removed_animes {
            writeln!(f, "  anime {id}: {reason}")?;
        }
        Ok(())
    }
}

/// Removes unusable characters, then animes that are incomplete or lost all their characters.
pub fn clean(corpus: &Corpus, config: &CleanConfig) -> (Corpus, CleanReport) {
    let mut report = CleanReport::default();

    let mut characters = Vec::with_capacity(corpus.characters.len());
    for c in &corpus.characters {
        let desc = c.description.trim();
        let reason = if config.placeholders.iter().any(|p| p == desc) {
            Some(CharacterRemoval::PlaceholderDescription)
        } else if wordcount(desc) == 0 {
            Some(CharacterRemoval::EmptyDescription)
        } else if !c
            .portrait_ref
            .as_deref()
            .is_some_and(|p| !p.trim().is_empty())
        {
            Some(CharacterRemoval::MissingPortrait)
        } else {
            None
        };
        match reason {
            Some(r) => report.removed_characters.push((c.id, r)),
            None => characters.push(c.clone()),
        }
    }
    let kept: HashSet<u64> = characters.iter().map(|c| c.id).collect();

    let mut animes = Vec::with_capacity(corpus.animes.len());
    for a in &corpus.animes {
        let score = a.golden_score.or_else(|| {
            a.votes
                .map(|v| scoring::weighted_score(&v, &config.score_params))
        });
        let character_ids: Vec<u64> = a
            .character_ids
            .iter()
            .copied()
            .filter(|id| kept.contains(id))
            .collect();
        let words = wordcount(&a.synopsis);
        let reason = if score.is_none() {
            Some(AnimeRemoval::MissingScore)
        } else if a.title.trim().is_empty() {
            Some(AnimeRemoval::MissingTitle)
        } else if words == 0 {
            Some(AnimeRemoval::MissingSynopsis)
        } else if character_ids.is_empty() {
            Some(AnimeRemoval::NoCharacters)
        } else if words < config.min_synopsis_words {
            Some(AnimeRemoval::SynopsisTooShort { words })
        } else {
            None
        };
        match reason {
            Some(r) => report.removed_animes.push((a.id, r)),
            None => animes.push(Anime {
                character_ids,
                golden_score: score,
                ..a.clone()
            }),
        }
    }

    let cleaned = Corpus::new(animes, characters)
        .expect("cleaning preserves uniqueness and referential integrity");
    (cleaned, report)
}

/// Per-bucket synopsis statistics.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct WordStats {
    pub samples: usize,
    pub max_words: usize,
    pub min_words: usize,
    pub avg_words: f64,
}

impl WordStats {
    fn from_counts(counts: &[usize]) -> Self {
        if counts.is_empty() {
            return Self::default();
        }
        let sum: usize = counts.iter().sum();
        Self {
            samples: counts.len(),
            max_words: counts.iter().copied().max().unwrap_or(0),
            min_words: counts.iter().copied().min().unwrap_or(0),
            avg_words: sum as f64 / counts.len() as f64,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreBucket {
    /// Lower bound `k` of the half-open score range `[k, k+1)`.
    pub lower: u32,
    pub synopsis: WordStats,
    /// Mean number of characters per anime in this bucket.
    pub mean_characters: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatsReport {
    pub buckets: Vec<ScoreBucket>,
    pub total: WordStats,
    pub characters: WordStats,
}

fn bucket_of(score: f64) -> usize {
    (score.floor().max(0.0) as usize).min(9)
}

/// Buckets animes by `floor(golden_score)`; a score of exactly 10 joins the 9-10 bucket.
/// Animes without a golden score are not counted.
pub fn compute_stats(corpus: &Corpus) -> StatsReport {
    let mut per_bucket: Vec<Vec<usize>> = vec![Vec::new(); 10];
    let mut chars_per_bucket = vec![0usize; 10];
    let mut all = Vec::with_capacity(corpus.len());
    for a in &corpus.animes {
        let Some(score) = a.golden_score else {
            continue;
        };
        let b = bucket_of(score);
        let words = wordcount(&a.synopsis);
        per_bucket[b].push(words);
        chars_per_bucket[b] += a.character_ids.len();
        all.push(words);
    }
    let buckets = per_bucket
        .iter()
        .zip(&chars_per_bucket)
        .enumerate()
        .map(|(k, (counts, &chars))| ScoreBucket {
            lower: k as u32,
            synopsis: WordStats::from_counts(counts),
            mean_characters: if counts.is_empty() {
                0.0
            } else {
                chars as f64 / counts.len() as f64
            },
        })
        .collect();
    let char_counts: Vec<usize> = corpus
        .characters
        .iter()
        .map(|c| wordcount(&c.description))
        .collect();
    StatsReport {
        buckets,
        total: WordStats::from_counts(&all),
        characters: WordStats::from_counts(&char_counts),
    }
}

impl fmt::Display for StatsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<8}{:>9}{:>12}{:>12}{:>12}{:>12}",
            "Score", "Samples", "Max.Words", "Min.Words", "Avg.Words", "Avg.Chars"
        )?;
        for b in &self.buckets {
            writeln!(
                f,
                "{:<8}{:>9}{:>12}{:>12}{:>12.2}{:>12.2}",
                format!("{}-{}", b.lower, b.lower + 1),
                b.synopsis.samples,
                b.synopsis.max_words,
                b.synopsis.min_words,
                b.synopsis.avg_words,
                b.mean_characters
            )?;
        }
        writeln!(
            f,
            "{:<8}{:>9}{:>12}{:>12}{:>12.2}",
            "Total",
            self.total.samples,
            self.total.max_words,
            self.total.min_words,
            self.total.avg_words
        )?;
        writeln!(f)?;
        writeln!(
            f,
            "{:<12}{:>12}{:>12}{:>12}",
            "Characters", "Max.Words", "Min.Words", "Avg.Words"
        )?;
        writeln!(
            f,
            "{:<12}{:>12}{:>12}{:>12.2}",
            self.characters.samples,
            self.characters.max_words,
            self.characters.min_words,
            self.characters.avg_words
        )
    }
}
