//! Model inputs: precomputed embeddings for the deep variants and TF-IDF plus
//! raw pixels for the traditional baseline.

pub mod embeddings;
pub mod pixels;
pub mod tfidf;

pub use embeddings::{
    decode_embeddings, encode_embeddings, read_embeddings, write_embeddings, EmbeddingKind,
    EmbeddingRecord, EmbeddingReport, EmbeddingStore, PORTRAIT_DIM, TEXT_DIM,
};
pub use pixels::{image_to_vector, PixelGrid, Thumbnails, DEFAULT_PIXEL_LENGTH};
pub use tfidf::{tfidf_fit, tfidf_transform, Vocabulary, DEFAULT_MAX_FEATURES};

use crate::corpus::{Anime, Corpus};
use crate::error::{Error, Result};

pub const TRAD_SEGMENT: usize = 750;
pub const TRAD_DIM: usize = 3 * TRAD_SEGMENT;

/// Synopsis TF-IDF, character-description TF-IDF and pixel vector, concatenated.
#[derive(Debug, Clone, PartialEq)]
pub struct TradVector(Vec<f64>);

impl TradVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Vocabularies fitted on the training side for the traditional baseline.
#[derive(Debug, Clone)]
pub struct TradVocabularies {
    pub synopsis: Vocabulary,
    pub char_desc: Vocabulary,
}

impl TradVocabularies {
    /// Fits both vocabularies on the given animes (normally the training split).
    pub fn fit<'a>(corpus: &Corpus, animes: impl IntoIterator<Item = &'a Anime>) -> Result<Self> {
        let mut synopses = Vec::new();
        let mut descriptions = Vec::new();
        for a in animes {
            synopses.push(a.synopsis.clone());
            descriptions.push(corpus.joined_descriptions(a));
        }
        Ok(Self {
            synopsis: tfidf_fit(&synopses, TRAD_SEGMENT)?,
            char_desc: tfidf_fit(&descriptions, TRAD_SEGMENT)?,
        })
    }
}

/// The thumbnail of the anime's first listed character, if one was supplied.
pub fn first_portrait<'a>(
    corpus: &Corpus,
    anime: &Anime,
    thumbnails: &'a Thumbnails,
) -> Option<&'a PixelGrid> {
    let first = anime.character_ids.first()?;
    let portrait_ref = corpus.character(*first)?.portrait_ref.as_deref()?;
    thumbnails.get(portrait_ref)
}

/// Concatenates the three 750-wide segments. A missing portrait contributes zeros.
pub fn assemble_trad_input(
    corpus: &Corpus,
    anime: &Anime,
    vocabs: &TradVocabularies,
    portrait: Option<&PixelGrid>,
) -> Result<TradVector> {
    for v in [&vocabs.synopsis, &vocabs.char_desc] {
        if v.dimension() != TRAD_SEGMENT {
            return Err(Error::ShapeMismatch {
                op: "traditional input",
                lhs: vec![v.dimension()],
                rhs: vec![TRAD_SEGMENT],
            });
        }
    }
    let mut out = Vec::with_capacity(TRAD_DIM);
    out.extend(tfidf_transform(&anime.synopsis, &vocabs.synopsis));
    out.extend(tfidf_transform(
        &corpus.joined_descriptions(anime),
        &vocabs.char_desc,
    ));
    match portrait {
        Some(grid) => out.extend(image_to_vector(grid, TRAD_SEGMENT)),
        None => out.resize(TRAD_DIM, 0.0),
    }
    debug_assert_eq!(out.len(), TRAD_DIM);
    Ok(TradVector(out))
}

/// The three embedding inputs of one anime, widened to `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeepInput {
    pub synopsis: Vec<f64>,
    pub char_desc: Vec<f64>,
    pub portrait: Vec<f64>,
}

pub fn assemble_deep_input(anime_id: u64, store: &EmbeddingStore) -> Result<DeepInput> {
    let widen = |kind| -> Result<Vec<f64>> {
        Ok(store
            .require(anime_id, kind)?
            .iter()
            .map(|&x| f64::from(x))
            .collect())
    };
    Ok(DeepInput {
        synopsis: widen(EmbeddingKind::Synopsis)?,
        char_desc: widen(EmbeddingKind::CharDesc)?,
        portrait: widen(EmbeddingKind::Portrait)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Character;

    fn fixture() -> Corpus {
        let characters = vec![
            Character {
                id: 2,
                name: "b".into(),
                description: "brave swordsman".into(),
                portrait_ref: Some("p2".into()),
            },
            Character {
                id: 1,
                name: "a".into(),
                description: "rubber pirate captain".into(),
                portrait_ref: Some("p1".into()),
            },
        ];
        let animes = vec![
            Anime {
                id: 10,
                title: "t".into(),
                synopsis: "pirates sail the grand line".into(),
                character_ids: vec![2, 1],
                votes: None,
                golden_score: Some(8.0),
            },
            Anime {
                id: 11,
                title: "u".into(),
                synopsis: "a quiet school story".into(),
                character_ids: vec![1],
                votes: None,
                golden_score: Some(6.0),
            },
        ];
        Corpus::new(animes, characters).unwrap()
    }

    #[test]
    fn descriptions_join_in_id_order() {
        let c = fixture();
        assert_eq!(
            c.joined_descriptions(&c.animes()[0]),
            "rubber pirate captain\nbrave swordsman"
        );
    }

    #[test]
    fn empty_inputs_give_zero_vector() {
        let c = fixture();
        let vocabs = TradVocabularies::fit(&c, c.animes()).unwrap();
        let blank = Anime {
            id: 99,
            title: "x".into(),
            synopsis: String::new(),
            character_ids: vec![],
            votes: None,
            golden_score: None,
        };
        let v = assemble_trad_input(&c, &blank, &vocabs, None).unwrap();
        assert_eq!(v.as_slice().len(), TRAD_DIM);
        assert!(v.as_slice().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn layout_matches_part_oracles() {
        let c = fixture();
        let vocabs = TradVocabularies::fit(&c, c.animes()).unwrap();
        let grid = PixelGrid::new(16, 16, 3, (0..768).map(|i| (i % 256) as u8).collect()).unwrap();
        let mut thumbs = Thumbnails::default();
        thumbs.insert("p2", grid.clone());
        let anime = &c.animes()[0];
        let portrait = first_portrait(&c, anime, &thumbs);
        assert_eq!(portrait, Some(&grid));
        let v = assemble_trad_input(&c, anime, &vocabs, portrait).unwrap();
        let syn = tfidf_transform(&anime.synopsis, &vocabs.synopsis);
        assert_eq!(&v.as_slice()[..750], syn.as_slice());
        let mut manual = syn;
        manual.extend(tfidf_transform(
            "rubber pirate captain\nbrave swordsman",
            &vocabs.char_desc,
        ));
        manual.extend(image_to_vector(&grid, 750));
        assert_eq!(v.into_inner(), manual);
    }

    #[test]
    fn deep_input_dims_and_missing_kind() {
        let mut records: Vec<EmbeddingRecord> = EmbeddingKind::ALL
            .iter()
            .map(|&kind| EmbeddingRecord {
                anime_id: 7,
                kind,
                vector: vec![0.5; kind.dimension()],
            })
            .collect();
        let store = EmbeddingStore::from_records(records.clone()).unwrap();
        let d = assemble_deep_input(7, &store).unwrap();
        assert_eq!(
            (d.synopsis.len(), d.char_desc.len(), d.portrait.len()),
            (768, 768, 49)
        );
        records.pop();
        let store = EmbeddingStore::from_records(records).unwrap();
        match assemble_deep_input(7, &store).unwrap_err() {
            Error::MissingEmbedding { anime_id, kind } => {
                assert_eq!((anime_id, kind.as_str()), (7, "portrait"))
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn deep_input_round_trips_through_file() {
        let records: Vec<EmbeddingRecord> = EmbeddingKind::ALL
            .iter()
            .map(|&kind| EmbeddingRecord {
                anime_id: 3,
                kind,
                vector: (0..kind.dimension()).map(|i| (i as f32).sin()).collect(),
            })
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.aem");
        write_embeddings(&records, &path).unwrap();
        let store = EmbeddingStore::load(&path).unwrap();
        let d = assemble_deep_input(3, &store).unwrap();
        for (got, rec) in [&d.synopsis, &d.char_desc, &d.portrait]
            .iter()
            .zip(&records)
        {
            let widened: Vec<f64> = rec.vector.iter().map(|&x| x as f64).collect();
            assert_eq!(**got, widened);
        }
    }
}
