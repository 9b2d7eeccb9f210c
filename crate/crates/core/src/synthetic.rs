//! Seeded synthetic corpora and embeddings for smoke tests, benchmarks and demos.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Anime, Character, Corpus, VoteAggregate};
use crate::features::{EmbeddingKind, EmbeddingRecord};

const WORDS: &[&str] = &[
    "academy",
    "ancient",
    "battle",
    "brother",
    "captain",
    "city",
    "demon",
    "dream",
    "family",
    "festival",
    "friend",
    "future",
    "ghost",
    "hero",
    "island",
    "journey",
    "kingdom",
    "magic",
    "mecha",
    "memory",
    "mystery",
    "ninja",
    "ocean",
    "pirate",
    "princess",
    "quest",
    "rival",
    "robot",
    "samurai",
    "school",
    "secret",
    "shadow",
    "sister",
    "sky",
    "space",
    "sword",
    "team",
    "tournament",
    "village",
    "war",
];

fn sentence(rng: &mut ChaCha8Rng, words: usize) -> String {
    (0..words)
        .map(|_| *WORDS.choose(rng).expect("non-empty word list"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// A clean corpus of `animes` titles. Consecutive animes occasionally share a
/// character, forming small franchises; every anime has a golden score and votes.
pub fn synthetic_corpus(animes: usize, seed: u64) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut characters = Vec::new();
    let mut list = Vec::with_capacity(animes);
    let mut next_char = 1u64;
    let mut previous_lead: Option<u64> = None;
    for i in 0..animes {
        let mut ids = Vec::new();
        // roughly one anime in four continues the previous franchise
        if let Some(lead) = previous_lead.filter(|_| rng.gen_bool(0.25)) {
            ids.push(lead);
        }
        for _ in 0..rng.gen_range(1..=3) {
            let words = rng.gen_range(8..40);
            characters.push(Character {
                id: next_char,
                name: format!("character {next_char}"),
                description: sentence(&mut rng, words),
                portrait_ref: Some(format!("portrait-{next_char}")),
            });
            ids.push(next_char);
            next_char += 1;
        }
        previous_lead = ids.last().copied();
        let vote_count = rng.gen_range(0..5_000u64);
        let mean: f64 = rng.gen_range(3.0..9.5);
        let words = rng.gen_range(25..120);
        list.push(Anime {
            id: 1_000 + i as u64,
            title: format!("title {i}"),
            synopsis: sentence(&mut rng, words),
            character_ids: ids,
            votes: Some(VoteAggregate {
                vote_count,
                vote_sum: mean * vote_count as f64,
            }),
            golden_score: Some((mean * 1000.0).round() / 1000.0),
        });
    }
    Corpus::new(list, characters).expect("generated corpus is consistent")
}

/// Unit-norm random embeddings of every kind for every anime. The first synopsis
/// coordinate carries a weak trace of the golden score so that trained models have
/// something to find.
pub fn synthetic_embeddings(corpus: &Corpus, seed: u64) -> Vec<EmbeddingRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(3 * corpus.len());
    for anime in corpus.animes() {
        for kind in EmbeddingKind::ALL {
            let mut v: Vec<f32> = (0..kind.dimension())
                .map(|_| rng.gen_range(-1.0f32..1.0))
                .collect();
            let norm = v.iter().map(|x| x * x).sum::<f32>().sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
            if kind == EmbeddingKind::Synopsis {
                if let Some(score) = anime.golden_score {
                    v[0] = ((score - 6.0) / 10.0) as f32;
                }
            }
            records.push(EmbeddingRecord {
                anime_id: anime.id,
                kind,
                vector: v,
            });
        }
    }
    records
}
