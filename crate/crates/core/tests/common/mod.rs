#![allow(dead_code)]

use emoanneal::corpus::{EmotionLabel, TextPair, RESERVED};
use emoanneal::pipeline::{Models, TrainConfig};
use emoanneal::rng::SaRng;
use emoanneal::TokenId;

/// A random labeled corpus over the words `w0 .. w{words-1}`.
pub fn random_corpus(rng: &mut SaRng, words: usize, pairs: usize, max_post: usize, max_reply: usize) -> Vec<TextPair> {
    let sentence = |rng: &mut SaRng, max: usize| -> Vec<String> {
        let len = 1 + rng.index(max);
        (0..len).map(|_| format!("w{}", rng.index(words))).collect()
    };
    (0..pairs)
        .map(|_| TextPair {
            post: sentence(rng, max_post),
            response: sentence(rng, max_reply),
            label: EmotionLabel::ALL[rng.index(EmotionLabel::COUNT)],
        })
        .collect()
}

pub fn random_models(rng: &mut SaRng, words: usize, pairs: usize, max_len: usize, gamma: f64) -> Models {
    let corpus = random_corpus(rng, words, pairs, max_len, max_len);
    let cfg = TrainConfig {
        gamma,
        ibm_iters: 5,
        ..TrainConfig::default()
    };
    Models::train(&corpus, None, &cfg).expect("random corpus trains").0
}

/// Non-reserved ids of `models`' vocabulary.
pub fn word_ids(models: &Models) -> Vec<TokenId> {
    (RESERVED as TokenId..models.vocab.len() as TokenId).collect()
}

pub fn random_sentence(rng: &mut SaRng, words: &[TokenId], min: usize, max: usize) -> Vec<TokenId> {
    let len = min + rng.index(max - min + 1);
    (0..len).map(|_| words[rng.index(words.len())]).collect()
}
