//! Multinomial naive Bayes posterior `P_emo(e | u)` over the six labels.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::corpus::{EmotionLabel, BOS, EOS, PAD};
use crate::{Error, Result, TokenId};

const K: usize = EmotionLabel::COUNT;

pub const DEFAULT_LAPLACE: f64 = 1.0;

fn is_feature(id: TokenId) -> bool {
    id != PAD && id != BOS && id != EOS
}

/// Numerically stable `log(sum(exp(v)))`.
pub fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|&x| (x - m).exp()).sum::<f64>().ln()
}

/// Argmax with ties going to the earlier label.
pub fn argmax_label(scores: &[f64; K]) -> EmotionLabel {
    let mut best = 0;
    for i in 1..K {
        if scores[i] > scores[best] {
            best = i;
        }
    }
    EmotionLabel::ALL[best]
}

/// Naive Bayes over token ids.
///
/// Features are every id except `<pad>`, `<s>` and `</s>`; likelihoods use
/// Laplace smoothing `(c(w, e) + laplace) / (c(e) + laplace * |V_f|)`.
/// Priors are document frequencies. When a label has no training example its
/// prior falls back to the uniform `1/6` and the present labels share the rest
/// in proportion to their counts.
#[derive(Debug, Clone, PartialEq)]
pub struct EmotionClassifier {
    vocab_size: usize,
    laplace: f64,
    doc_counts: [u64; K],
    token_counts: Vec<[u64; K]>,
    class_totals: [u64; K],
    uniform_prior_fallback: bool,
    log_prior: [f64; K],
    log_lik: Vec<[f64; K]>,
}

impl EmotionClassifier {
    pub fn train<'a, I>(utterances: I, vocab_size: usize, laplace: f64) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a [TokenId], EmotionLabel)>,
    {
        let mut doc_counts = [0u64; K];
        let mut token_counts = vec![[0u64; K]; vocab_size];
        for (u, label) in utterances {
            let c = label.index();
            doc_counts[c] += 1;
            for &t in u {
                if t as usize >= vocab_size {
                    return Err(Error::invalid("utterance", format!("token id {t} out of range")));
                }
                if is_feature(t) {
                    token_counts[t as usize][c] += 1;
                }
            }
        }
        if doc_counts.iter().all(|&d| d == 0) {
            return Err(Error::Empty("training set"));
        }
        Self::from_counts(vocab_size, laplace, doc_counts, token_counts)
    }

    pub fn from_counts(vocab_size: usize, laplace: f64, doc_counts: [u64; K], token_counts: Vec<[u64; K]>) -> Result<Self> {
        if !(laplace > 0.0 && laplace.is_finite()) {
            return Err(Error::invalid("laplace", format!("{laplace} must be positive")));
        }
        if token_counts.len() != vocab_size || vocab_size <= EOS as usize + 1 {
            return Err(Error::invalid("vocab_size", vocab_size.to_string()));
        }
        let mut class_totals = [0u64; K];
        for row in &token_counts {
            for c in 0..K {
                class_totals[c] += row[c];
            }
        }
        let n: u64 = doc_counts.iter().sum();
        let absent = doc_counts.iter().filter(|&&d| d == 0).count();
        let mut log_prior = [0.0; K];
        for c in 0..K {
            let p = if doc_counts[c] == 0 {
                1.0 / K as f64
            } else {
                (1.0 - absent as f64 / K as f64) * doc_counts[c] as f64 / n as f64
            };
            log_prior[c] = p.ln();
        }
        let features = (vocab_size - 3) as f64;
        let log_lik = token_counts
            .iter()
            .enumerate()
            .map(|(id, row)| {
                let mut l = [f64::NEG_INFINITY; K];
                if is_feature(id as TokenId) {
                    for c in 0..K {
                        l[c] = ((row[c] as f64 + laplace) / (class_totals[c] as f64 + laplace * features)).ln();
                    }
                }
                l
            })
            .collect();
        Ok(EmotionClassifier {
            vocab_size,
            laplace,
            doc_counts,
            token_counts,
            class_totals,
            uniform_prior_fallback: absent > 0,
            log_prior,
            log_lik,
        })
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn laplace(&self) -> f64 {
        self.laplace
    }

    pub fn doc_counts(&self) -> &[u64; K] {
        &self.doc_counts
    }

    /// Raw per-label count of token `id`.
    pub fn token_count(&self, id: TokenId) -> [u64; K] {
        self.token_counts.get(id as usize).copied().unwrap_or([0; K])
    }

    /// True when some label had no training example.
    pub fn uniform_prior_fallback(&self) -> bool {
        self.uniform_prior_fallback
    }

    pub fn log_prior(&self) -> &[f64; K] {
        &self.log_prior
    }

    /// Per-label `log P(w | e)`; all zeros (no evidence) for ids the
    /// classifier ignores or does not know.
    pub fn token_log_likelihoods(&self, id: TokenId) -> [f64; K] {
        match self.log_lik.get(id as usize) {
            Some(l) if is_feature(id) => *l,
            _ => [0.0; K],
        }
    }

    /// Unnormalized per-label log joint `log P(e) + sum_w log P(w | e)`.
    pub fn log_joint(&self, u: &[TokenId]) -> [f64; K] {
        let mut joint = self.log_prior;
        for &t in u {
            let l = self.token_log_likelihoods(t);
            for c in 0..K {
                joint[c] += l[c];
            }
        }
        joint
    }

    pub fn log_posterior(&self, u: &[TokenId]) -> [f64; K] {
        normalize_log(self.log_joint(u))
    }

    pub fn posterior(&self, u: &[TokenId]) -> [f64; K] {
        self.log_posterior(u).map(f64::exp)
    }

    pub fn classify(&self, u: &[TokenId]) -> EmotionLabel {
        argmax_label(&self.log_joint(u))
    }

    /// Ids ranked by how strongly they point at `label`:
    /// `log P(w | label) - log mean_{c != label} P(w | c)`, descending, ties by id.
    pub fn ranked_markers(&self, label: EmotionLabel) -> Vec<TokenId> {
        let e = label.index();
        let mut scored: Vec<(f64, TokenId)> = (0..self.vocab_size as TokenId)
            .filter(|&id| id as usize >= crate::corpus::RESERVED)
            .map(|id| {
                let l = &self.log_lik[id as usize];
                let others: Vec<f64> = (0..K).filter(|&c| c != e).map(|c| l[c]).collect();
                let other = log_sum_exp(&others) - ((K - 1) as f64).ln();
                (l[e] - other, id)
            })
            .collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        scored.into_iter().map(|(_, id)| id).collect()
    }

    pub fn write<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut out = BufWriter::new(out);
        writeln!(out, "emoanneal-emotion 1")?;
        writeln!(out, "vocab_size {}", self.vocab_size)?;
        writeln!(out, "laplace {}", self.laplace)?;
        writeln!(out, "uniform_prior_fallback {}", self.uniform_prior_fallback)?;
        for label in EmotionLabel::ALL {
            writeln!(out, "docs {label} {}", self.doc_counts[label.index()])?;
        }
        for label in EmotionLabel::ALL {
            writeln!(out, "prior {label} {}", self.log_prior[label.index()].exp())?;
        }
        for (id, row) in self.token_counts.iter().enumerate() {
            for label in EmotionLabel::ALL {
                let c = row[label.index()];
                if c > 0 {
                    writeln!(out, "count {label} {id} {c}")?;
                }
            }
        }
        out.flush()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write(file).map_err(|e| Error::io(path, e))
    }

    /// Reads counts back; `prior` lines are informational and recomputed.
    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut vocab_size = None;
        let mut laplace = None;
        let mut doc_counts = [0u64; K];
        let mut token_counts: Vec<[u64; K]> = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let lineno = i + 1;
            let line = line.map_err(|e| Error::io(path, e))?;
            let bad = |reason: &str| Error::format(path, lineno, reason.to_string());
            if lineno == 1 {
                if line.trim() != "emoanneal-emotion 1" {
                    return Err(bad("not an emotion classifier file"));
                }
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            match f.first().copied().unwrap_or("") {
                "vocab_size" => {
                    let v: usize = f.get(1).and_then(|v| v.parse().ok()).ok_or_else(|| bad("bad vocab_size"))?;
                    vocab_size = Some(v);
                    token_counts = vec![[0; K]; v];
                }
                "laplace" => laplace = Some(f.get(1).and_then(|v| v.parse().ok()).ok_or_else(|| bad("bad laplace"))?),
                "uniform_prior_fallback" | "prior" => {}
                "docs" => {
                    let label: EmotionLabel = f.get(1).ok_or_else(|| bad("missing label"))?.parse()?;
                    doc_counts[label.index()] = f.get(2).and_then(|v| v.parse().ok()).ok_or_else(|| bad("bad count"))?;
                }
                "count" => {
                    let label: EmotionLabel = f.get(1).ok_or_else(|| bad("missing label"))?.parse()?;
                    let id: usize = f.get(2).and_then(|v| v.parse().ok()).ok_or_else(|| bad("bad id"))?;
                    let c: u64 = f.get(3).and_then(|v| v.parse().ok()).ok_or_else(|| bad("bad count"))?;
                    let row = token_counts.get_mut(id).ok_or_else(|| bad("id out of range"))?;
                    row[label.index()] = c;
                }
                "" => {}
                other => return Err(bad(&format!("unknown record {other:?}"))),
            }
        }
        let (Some(v), Some(l)) = (vocab_size, laplace) else {
            return Err(Error::format(path, 0, "incomplete header"));
        };
        Self::from_counts(v, l, doc_counts, token_counts)
    }
}

/// Subtracts the log normalizer.
pub fn normalize_log(joint: [f64; K]) -> [f64; K] {
    let z = log_sum_exp(&joint);
    joint.map(|j| j - z)
}
