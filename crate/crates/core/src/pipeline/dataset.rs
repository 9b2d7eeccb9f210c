//! Per-anime model inputs and golden labels, keyed by anime ID.

use std::collections::{BTreeMap, HashMap};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::features::{
    assemble_deep_input, assemble_trad_input, first_portrait, EmbeddingStore, Thumbnails,
    TradVocabularies,
};
use crate::nn::Tensor;
use crate::scoring::{fit_scale, weighted_score, ScaleParams, ScoreParams};
use crate::splitter::Split;

use super::model::ModelVariant;

/// Row-major input columns for a set of animes; one column block per model input.
#[derive(Debug, Clone)]
pub struct FeatureTable {
    input_dims: Vec<usize>,
    ids: Vec<u64>,
    index: HashMap<u64, usize>,
    columns: Vec<Vec<f64>>,
}

impl FeatureTable {
    pub fn new(input_dims: Vec<usize>) -> Self {
        let columns = vec![Vec::new(); input_dims.len()];
        Self {
            input_dims,
            ids: Vec::new(),
            index: HashMap::new(),
            columns,
        }
    }

    pub fn push(&mut self, anime_id: u64, parts: &[&[f64]]) -> Result<()> {
        let widths: Vec<usize> = parts.iter().map(|p| p.len()).collect();
        if widths != self.input_dims {
            return Err(Error::ShapeMismatch {
                op: "feature row",
                lhs: widths,
                rhs: self.input_dims.clone(),
            });
        }
        if self.index.contains_key(&anime_id) {
            return Err(Error::DuplicateId {
                kind: "feature row",
                id: anime_id,
            });
        }
        self.index.insert(anime_id, self.ids.len());
        self.ids.push(anime_id);
        for (col, part) in self.columns.iter_mut().zip(parts) {
            col.extend_from_slice(part);
        }
        Ok(())
    }

    pub fn input_dims(&self) -> &[usize] {
        &self.input_dims
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn contains(&self, anime_id: u64) -> bool {
        self.index.contains_key(&anime_id)
    }

    /// Stacks the rows of `ids`, in order, into one tensor per input.
    pub fn batch(&self, ids: &[u64]) -> Result<Vec<Tensor>> {
        let rows = ids
            .iter()
            .map(|&id| {
                self.index
                    .get(&id)
                    .copied()
                    .ok_or(Error::MissingFeatures { anime_id: id })
            })
            .collect::<Result<Vec<_>>>()?;
        self.columns
            .iter()
            .zip(&self.input_dims)
            .map(|(col, &w)| {
                let mut data = Vec::with_capacity(rows.len() * w);
                for &r in &rows {
                    data.extend_from_slice(&col[r * w..(r + 1) * w]);
                }
                Tensor::matrix(rows.len(), w, data)
            })
            .collect()
    }
}

/// Embedding inputs for a deep variant. `Full` takes synopsis, description and
/// portrait embeddings in that order; the single-input variants take one each.
pub fn deep_features(
    variant: ModelVariant,
    ids: impl IntoIterator<Item = u64>,
    store: &EmbeddingStore,
) -> Result<FeatureTable> {
    let mut table = FeatureTable::new(variant.input_dims());
    for id in ids {
        let d = assemble_deep_input(id, store)?;
        match variant {
            ModelVariant::Full => table.push(id, &[&d.synopsis, &d.char_desc, &d.portrait])?,
            ModelVariant::SynopsisOnly => table.push(id, &[&d.synopsis])?,
            ModelVariant::CharDescOnly => table.push(id, &[&d.char_desc])?,
            ModelVariant::PortraitOnly => table.push(id, &[&d.portrait])?,
            ModelVariant::Traditional => {
                return Err(Error::Config(
                    "the traditional variant uses TF-IDF and pixel inputs, not embeddings".into(),
                ))
            }
        }
    }
    Ok(table)
}

/// TF-IDF and pixel inputs for the traditional baseline.
pub fn traditional_features(
    corpus: &Corpus,
    ids: impl IntoIterator<Item = u64>,
    vocabs: &TradVocabularies,
    thumbnails: Option<&Thumbnails>,
) -> Result<FeatureTable> {
    let mut table = FeatureTable::new(ModelVariant::Traditional.input_dims());
    for id in ids {
        let anime = corpus
            .anime(id)
            .ok_or(Error::MissingFeatures { anime_id: id })?;
        let portrait = thumbnails.and_then(|t| first_portrait(corpus, anime, t));
        let v = assemble_trad_input(corpus, anime, vocabs, portrait)?;
        table.push(id, &[v.as_slice()])?;
    }
    Ok(table)
}

/// Inputs for every anime of the split. Traditional vocabularies are fitted on the
/// training side only.
pub fn build_features(
    variant: ModelVariant,
    corpus: &Corpus,
    split: &Split,
    embeddings: Option<&EmbeddingStore>,
    thumbnails: Option<&Thumbnails>,
) -> Result<FeatureTable> {
    let ids = split.train.iter().chain(&split.test).copied();
    match variant {
        ModelVariant::Traditional => {
            let train_animes = split
                .train
                .iter()
                .map(|&id| {
                    corpus
                        .anime(id)
                        .ok_or(Error::MissingFeatures { anime_id: id })
                })
                .collect::<Result<Vec<_>>>()?;
            let vocabs = TradVocabularies::fit(corpus, train_animes)?;
            traditional_features(corpus, ids, &vocabs, thumbnails)
        }
        _ => {
            let store = embeddings.ok_or_else(|| {
                Error::Config(format!("the {variant} variant requires an embedding file"))
            })?;
            deep_features(variant, ids, store)
        }
    }
}

/// Golden scores with the scaling used for training targets.
#[derive(Debug, Clone)]
pub struct Labels {
    raw: BTreeMap<u64, f64>,
    scale: ScaleParams,
}

impl Labels {
    pub fn new(raw: BTreeMap<u64, f64>, scale: ScaleParams) -> Self {
        Self { raw, scale }
    }

    /// Golden scores of every split member, falling back to the weighted score of the
    /// vote aggregate when none is recorded. Unless `scale` is given, the scaling is
    /// fitted to the training side.
    pub fn from_corpus(
        corpus: &Corpus,
        split: &Split,
        score_params: &ScoreParams,
        scale: Option<ScaleParams>,
    ) -> Result<Self> {
        let mut raw = BTreeMap::new();
        for &id in split.train.iter().chain(&split.test) {
            let score = corpus
                .anime(id)
                .and_then(|a| {
                    a.golden_score
                        .or_else(|| a.votes.as_ref().map(|v| weighted_score(v, score_params)))
                })
                .ok_or(Error::MissingLabel { anime_id: id })?;
            raw.insert(id, score);
        }
        let scale = match scale {
            Some(s) => s,
            None => {
                let train: Vec<f64> = split.train.iter().map(|id| raw[id]).collect();
                fit_scale(&train)?
            }
        };
        Ok(Self { raw, scale })
    }

    pub fn scale(&self) -> ScaleParams {
        self.scale
    }

    pub fn raw(&self, anime_id: u64) -> Result<f64> {
        self.raw
            .get(&anime_id)
            .copied()
            .ok_or(Error::MissingLabel { anime_id })
    }

    pub fn scaled(&self, anime_id: u64) -> Result<f64> {
        Ok(self.scale.scale(self.raw(anime_id)?))
    }

    /// Scaled targets of `ids` as a column.
    pub fn target(&self, ids: &[u64]) -> Result<Tensor> {
        let data = ids
            .iter()
            .map(|&id| self.scaled(id))
            .collect::<Result<Vec<_>>>()?;
        Tensor::matrix(ids.len(), 1, data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{EmbeddingKind, EmbeddingRecord};

    fn store(ids: &[u64]) -> EmbeddingStore {
        let mut records = Vec::new();
        for &id in ids {
            for kind in EmbeddingKind::ALL {
                records.push(EmbeddingRecord {
                    anime_id: id,
                    kind,
                    vector: vec![id as f32 + kind.tag() as f32 / 10.0; kind.dimension()],
                });
            }
        }
        EmbeddingStore::from_records(records).unwrap()
    }

    #[test]
    fn batch_stacks_rows_in_request_order() {
        let s = store(&[1, 2, 3]);
        let t = deep_features(ModelVariant::Full, [1, 2, 3], &s).unwrap();
        let b = t.batch(&[3, 1]).unwrap();
        assert_eq!(b.len(), 3);
        assert_eq!(b[0].shape(), &[2, 768]);
        assert_eq!(b[2].shape(), &[2, 49]);
        assert_eq!(b[0].row(0)[0], 3.0);
        assert_eq!(b[1].row(1)[0], 1.1f32 as f64);
        assert!(matches!(
            t.batch(&[9]),
            Err(Error::MissingFeatures { anime_id: 9 })
        ));
    }

    #[test]
    fn single_input_variants_pick_their_embedding() {
        let s = store(&[5]);
        let t = deep_features(ModelVariant::PortraitOnly, [5], &s).unwrap();
        assert_eq!(t.input_dims(), &[49]);
        assert_eq!(t.batch(&[5]).unwrap()[0].row(0)[0], 5.2f32 as f64);
        let t = deep_features(ModelVariant::CharDescOnly, [5], &s).unwrap();
        assert_eq!(t.batch(&[5]).unwrap()[0].row(0)[0], 5.1f32 as f64);
        assert!(deep_features(ModelVariant::Traditional, [5], &s).is_err());
    }

    #[test]
    fn rejects_bad_rows() {
        let mut t = FeatureTable::new(vec![2]);
        t.push(1, &[&[0.0, 1.0]]).unwrap();
        assert!(t.push(1, &[&[0.0, 1.0]]).is_err());
        assert!(t.push(2, &[&[0.0]]).is_err());
    }

    #[test]
    fn labels_scale_on_given_params() {
        let raw = BTreeMap::from([(1, 6.0), (2, 8.0)]);
        let labels = Labels::new(raw, ScaleParams::new(6.0, 10.0).unwrap());
        assert_eq!(labels.scaled(2).unwrap(), 0.5);
        assert_eq!(labels.target(&[1, 2]).unwrap().data(), &[0.0, 0.5]);
        assert!(matches!(
            labels.raw(3),
            Err(Error::MissingLabel { anime_id: 3 })
        ));
    }
}
