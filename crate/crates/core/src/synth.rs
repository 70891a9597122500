//! Deterministic synthetic emotional dialogue corpus.
//!
//! Posts mention a topic; responses name a word of that topic (usually the
//! one paired with the post's first topic word), then a generic word, then
//! one marker word. Markers come mostly
//! from the response label's own set; emotional responses sometimes borrow
//! another emotional label's marker. The result has an emotion-marked vocabulary, a conditioning signal
//! for the translation table, and generic high-probability responses that a
//! plain decoder settles on.

use serde::{Deserialize, Serialize};

use crate::corpus::{tokenize, EmotionLabel, TextPair};
use crate::eval::EmbeddingTable;
use crate::rng::{derive_seed, SaRng};

struct Topic {
    post: [&'static str; 4],
    reply: [&'static str; 4],
}

pub const TOPIC_COUNT: usize = 20;

const TOPICS: [Topic; TOPIC_COUNT] = [
    Topic { post: ["pizza", "cheese", "oven", "slice"], reply: ["crust", "topping", "pepperoni", "dough"] },
    Topic { post: ["football", "match", "goal", "striker"], reply: ["team", "score", "league", "coach"] },
    Topic { post: ["exam", "study", "grades", "semester"], reply: ["test", "homework", "teacher", "class"] },
    Topic { post: ["rain", "umbrella", "storm", "cloudy"], reply: ["weather", "forecast", "thunder", "puddle"] },
    Topic { post: ["puppy", "leash", "bark", "vet"], reply: ["dog", "walk", "fur", "tail"] },
    Topic { post: ["guitar", "concert", "band", "chord"], reply: ["music", "song", "album", "stage"] },
    Topic { post: ["boss", "office", "meeting", "deadline"], reply: ["job", "work", "project", "salary"] },
    Topic { post: ["flight", "airport", "luggage", "ticket"], reply: ["trip", "travel", "plane", "beach"] },
    Topic { post: ["movie", "cinema", "actor", "sequel"], reply: ["film", "plot", "ending", "popcorn"] },
    Topic { post: ["coffee", "espresso", "mug", "barista"], reply: ["latte", "cafe", "caffeine", "brew"] },
    Topic { post: ["phone", "battery", "screen", "charger"], reply: ["app", "update", "camera", "signal"] },
    Topic { post: ["garden", "seeds", "soil", "shovel"], reply: ["flowers", "roses", "plants", "tomatoes"] },
    Topic { post: ["gym", "treadmill", "workout", "weights"], reply: ["muscle", "exercise", "sweat", "training"] },
    Topic { post: ["birthday", "candles", "present", "balloons"], reply: ["party", "cake", "gift", "friends"] },
    Topic { post: ["traffic", "highway", "commute", "jam"], reply: ["car", "road", "bus", "driver"] },
    Topic { post: ["novel", "chapter", "author", "library"], reply: ["book", "story", "reading", "pages"] },
    Topic { post: ["kitten", "litter", "whiskers", "purr"], reply: ["cat", "paws", "nap", "yarn"] },
    Topic { post: ["laptop", "keyboard", "software", "crash"], reply: ["computer", "code", "bug", "file"] },
    Topic { post: ["snow", "winter", "scarf", "freezing"], reply: ["cold", "ice", "sled", "snowman"] },
    Topic { post: ["kitchen", "recipe", "stove", "chopping"], reply: ["dinner", "soup", "cooking", "spices"] },
];

const POST_FRAMES: [&str; 6] = [
    "i just got my {a} today",
    "what do you think of the {a} ?",
    "my {a} and the {b}",
    "so the {a} was {b} again",
    "have you seen the {a} ?",
    "the {a} {b} thing",
];

/// Words that follow the content word, with their weights.
const REPLY_FRAMES: [(&str, f64); 4] = [("nice", 0.55), ("fine", 0.2), ("good", 0.15), ("ok", 0.1)];

/// Chance that a response talks about the reply word paired with the post's
/// first topic word rather than another word of the topic.
const PAIRED_REPLY: f64 = 0.9;

/// Marker words by label, most frequent first; neutral uses plain fillers.
pub fn markers(label: EmotionLabel) -> &'static [&'static str] {
    match label {
        EmotionLabel::Happy => &["haha", "yay", "hooray", "woohoo"],
        EmotionLabel::Angry => &["damn", "furious", "outrageous", "hell"],
        EmotionLabel::Disgust => &["gross", "yuck", "nasty", "eww"],
        EmotionLabel::Sad => &["sigh", "sadly", "miserable", "tears"],
        EmotionLabel::Like => &["adore", "cute", "lovely", "sweet"],
        EmotionLabel::Neutral => &["well", "okay", "hmm", "anyway"],
    }
}

/// Zipf-like weights over a label's markers.
const MARKER_WEIGHTS: [f64; 4] = [0.48, 0.24, 0.16, 0.12];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub pairs: usize,
    pub seed: u64,
    /// Number of topics in use, at most [`TOPIC_COUNT`].
    pub topics: usize,
    /// Chance that an emotional response borrows another emotional label's marker.
    pub marker_noise: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            pairs: 3000,
            seed: 2019,
            topics: 6,
            marker_noise: 0.2,
        }
    }
}

fn pick<'a>(rng: &mut SaRng, xs: &[&'a str]) -> &'a str {
    xs[rng.index(xs.len())]
}

fn fill(frame: &str, slots: &[(&str, &str)]) -> String {
    let mut s = frame.to_string();
    for (k, v) in slots {
        s = s.replace(k, v);
    }
    s
}

/// Generates `cfg.pairs` labeled pairs; pair `i` depends only on `(seed, i)`.
pub fn generate(cfg: &SynthConfig) -> Vec<TextPair> {
    (0..cfg.pairs)
        .map(|i| {
            let mut rng = SaRng::seed_from_u64(derive_seed(cfg.seed, i as u64));
            let topic = &TOPICS[rng.index(cfg.topics.clamp(1, TOPIC_COUNT))];
            let label = EmotionLabel::ALL[rng.index(EmotionLabel::COUNT)];
            let a = rng.index(topic.post.len());
            let post = fill(
                pick(&mut rng, &POST_FRAMES),
                &[("{a}", topic.post[a]), ("{b}", pick(&mut rng, &topic.post))],
            );
            let c = if rng.uniform() < PAIRED_REPLY {
                topic.reply[a]
            } else {
                pick(&mut rng, &topic.reply)
            };
            let weights: Vec<f64> = REPLY_FRAMES.iter().map(|f| f.1).collect();
            let frame = REPLY_FRAMES[rng.categorical(&weights).unwrap_or(0)].0;
            let mut reply = vec![c.to_string(), frame.to_string()];
            {
                let source = if label != EmotionLabel::Neutral && rng.uniform() < cfg.marker_noise {
                    let others: Vec<EmotionLabel> = EmotionLabel::ALL
                        .into_iter()
                        .filter(|&l| l != label && l != EmotionLabel::Neutral)
                        .collect();
                    others[rng.index(others.len())]
                } else {
                    label
                };
                let m = markers(source);
                let marker = m[rng.categorical(&MARKER_WEIGHTS[..m.len()]).unwrap_or(0)];
                reply.push(marker.to_string());
            }
            TextPair {
                post: tokenize(&post),
                response: reply,
                label,
            }
        })
        .collect()
}

/// Disjoint train / judge / test partitions of one generated corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct Splits {
    pub train: Vec<TextPair>,
    /// Trains the held-out evaluation judge.
    pub judge: Vec<TextPair>,
    pub test: Vec<TextPair>,
}

/// Splits in corpus order: the last `test` pairs are the test set, the
/// `judge` before them the judge set, the rest training data.
pub fn split(pairs: Vec<TextPair>, judge: usize, test: usize) -> Splits {
    let n = pairs.len();
    let test_start = n.saturating_sub(test);
    let judge_start = test_start.saturating_sub(judge);
    let mut pairs = pairs;
    let test = pairs.split_off(test_start);
    let judge = pairs.split_off(judge_start);
    Splits { train: pairs, judge, test }
}

/// The standard fixture: 3000 pairs split 2400 / 400 / 200.
pub fn fixture() -> Splits {
    split(generate(&SynthConfig::default()), 400, 200)
}

/// Synthetic word vectors: words that share a topic share a base direction,
/// markers share their label's direction.
pub fn embeddings(dim: usize, seed: u64) -> EmbeddingTable {
    let mut rng = SaRng::seed_from_u64(seed);
    let unit = |rng: &mut SaRng| -> Vec<f64> { (0..dim).map(|_| 2.0 * rng.uniform() - 1.0).collect() };
    let mut table = EmbeddingTable::new(dim);
    let add = |table: &mut EmbeddingTable, base: &[f64], word: &str, rng: &mut SaRng| {
        let noise = unit(rng);
        let v = base.iter().zip(&noise).map(|(b, n)| b + 0.3 * n).collect();
        table.insert(word, v).expect("fixed dimension");
    };
    for topic in &TOPICS {
        let base = unit(&mut rng);
        for w in topic.post.iter().chain(topic.reply.iter()) {
            add(&mut table, &base, w, &mut rng);
        }
    }
    for label in EmotionLabel::ALL {
        let base = unit(&mut rng);
        for w in markers(label) {
            add(&mut table, &base, w, &mut rng);
        }
    }
    let generic: std::collections::BTreeSet<String> = POST_FRAMES
        .iter()
        .copied()
        .chain(REPLY_FRAMES.iter().map(|f| f.0))
        .flat_map(tokenize)
        .filter(|w| !w.starts_with('{') && w.chars().any(char::is_alphanumeric))
        .collect();
    for w in generic {
        let v = unit(&mut rng);
        table.insert(w, v).expect("fixed dimension");
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_labeled() {
        let cfg = SynthConfig {
            pairs: 300,
            ..Default::default()
        };
        let a = generate(&cfg);
        assert_eq!(a, generate(&cfg));
        for label in EmotionLabel::ALL {
            assert!(a.iter().any(|p| p.label == label));
        }
        for p in a.iter().filter(|p| p.label == EmotionLabel::Neutral) {
            let own = p.response.iter().any(|w| markers(EmotionLabel::Neutral).contains(&w.as_str()));
            assert!(own);
        }
    }

    #[test]
    fn splits_are_disjoint_and_complete() {
        let s = split(generate(&SynthConfig { pairs: 50, ..Default::default() }), 10, 5);
        assert_eq!((s.train.len(), s.judge.len(), s.test.len()), (35, 10, 5));
    }

    #[test]
    fn embeddings_cover_markers() {
        let t = embeddings(8, 1);
        assert_eq!(t.dim(), 8);
        assert!(t.get("haha").is_some());
        assert!(t.get("pizza").is_some());
    }
}
