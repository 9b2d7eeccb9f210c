//! TF-IDF text vectorization with smoothed inverse document frequency.

use std::collections::{BTreeMap, HashMap, HashSet};

use crate::error::{Error, Result};

pub const DEFAULT_MAX_FEATURES: usize = 750;

/// Lowercases and splits on runs of non-alphanumeric characters.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    terms: Vec<String>,
    document_frequency: Vec<usize>,
    idf: Vec<f64>,
    index: HashMap<String, usize>,
    max_features: usize,
}

impl Vocabulary {
    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Output dimension of [`tfidf_transform`]; equals `max_features` even when fewer terms were kept.
    pub fn dimension(&self) -> usize {
        self.max_features
    }

    pub fn document_frequency(&self, term: &str) -> Option<usize> {
        self.index.get(term).map(|&i| self.document_frequency[i])
    }

    pub fn idf(&self, term: &str) -> Option<f64> {
        self.index.get(term).map(|&i| self.idf[i])
    }
}

/// Keeps the `max_features` terms with highest document frequency, ties broken
/// lexicographically; `idf(t) = ln((1 + N) / (1 + df(t))) + 1`.
pub fn tfidf_fit<S: AsRef<str>>(documents: &[S], max_features: usize) -> Result<Vocabulary> {
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    for doc in documents {
        let unique: HashSet<String> = tokenize(doc.as_ref()).collect();
        for term in unique {
            *df.entry(term).or_insert(0) += 1;
        }
    }
    if df.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    let mut ranked: Vec<(String, usize)> = df.into_iter().collect();
    // BTreeMap iteration is lexicographic, so a stable sort on df keeps the tie order.
    ranked.sort_by_key(|&(_, df)| std::cmp::Reverse(df));
    ranked.truncate(max_features);

    let n = documents.len() as f64;
    let mut terms = Vec::with_capacity(ranked.len());
    let mut document_frequency = Vec::with_capacity(ranked.len());
    let mut idf = Vec::with_capacity(ranked.len());
    let mut index = HashMap::with_capacity(ranked.len());
    for (i, (term, count)) in ranked.into_iter().enumerate() {
        idf.push(((1.0 + n) / (1.0 + count as f64)).ln() + 1.0);
        document_frequency.push(count);
        index.insert(term.clone(), i);
        terms.push(term);
    }
    Ok(Vocabulary {
        terms,
        document_frequency,
        idf,
        index,
        max_features,
    })
}

/// Raw term counts weighted by idf, then L2-normalized. Unknown terms are ignored.
pub fn tfidf_transform(document: &str, vocab: &Vocabulary) -> Vec<f64> {
    let mut out = vec![0.0; vocab.max_features];
    for term in tokenize(document) {
        if let Some(&i) = vocab.index.get(&term) {
            out[i] += 1.0;
        }
    }
    for (x, w) in out.iter_mut().zip(&vocab.idf) {
        *x *= w;
    }
    let norm = out.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        out.iter_mut().for_each(|x| *x /= norm);
    }
    out
}
