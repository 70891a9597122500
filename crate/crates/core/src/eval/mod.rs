//! Corpus metrics: BLEU-n, Dist-n, emotion accuracy and embedding scores.

mod embedding;

pub use embedding::{cosine, embedding_metrics, EmbeddingScores, EmbeddingTable};

use std::collections::HashMap;
use std::hash::Hash;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::corpus::EmotionLabel;
use crate::emotion::EmotionClassifier;
use crate::{Error, Result, TokenId};

fn ngram_counts<T: Eq + Hash>(s: &[T], k: usize) -> HashMap<&[T], usize> {
    let mut m = HashMap::new();
    if s.len() >= k {
        for w in s.windows(k) {
            *m.entry(w).or_insert(0) += 1;
        }
    }
    m
}

/// Corpus BLEU-n on a 0-100 scale, one reference per candidate, no
/// smoothing: any zero precision gives 0.
pub fn bleu_n<T: Eq + Hash>(candidates: &[Vec<T>], references: &[Vec<T>], n: usize) -> Result<f64> {
    if candidates.len() != references.len() {
        return Err(Error::invalid(
            "bleu",
            format!("{} candidates vs {} references", candidates.len(), references.len()),
        ));
    }
    if candidates.is_empty() {
        return Err(Error::Empty("corpus"));
    }
    if n == 0 {
        return Err(Error::invalid("bleu", "n must be >= 1"));
    }
    let mut log_p = 0.0;
    for k in 1..=n {
        let (mut matched, mut total) = (0usize, 0usize);
        for (c, r) in candidates.iter().zip(references) {
            let rc = ngram_counts(r, k);
            for (g, cnt) in ngram_counts(c, k) {
                matched += cnt.min(rc.get(g).copied().unwrap_or(0));
                total += cnt;
            }
        }
        if matched == 0 {
            return Ok(0.0);
        }
        log_p += (matched as f64 / total as f64).ln();
    }
    let c: usize = candidates.iter().map(Vec::len).sum();
    let r: usize = references.iter().map(Vec::len).sum();
    let bp = if c > r { 1.0 } else { (1.0 - r as f64 / c as f64).exp() };
    Ok(100.0 * bp * (log_p / n as f64).exp())
}

/// Distinct n-grams over total n-grams across all outputs (0 when no output
/// reaches length `n`).
pub fn distinct_n<T: Eq + Hash>(outputs: &[Vec<T>], n: usize) -> Result<f64> {
    if outputs.is_empty() {
        return Err(Error::Empty("outputs"));
    }
    if n == 0 {
        return Err(Error::invalid("distinct", "n must be >= 1"));
    }
    let mut seen = std::collections::HashSet::new();
    let mut total = 0usize;
    for o in outputs {
        if o.len() >= n {
            for w in o.windows(n) {
                seen.insert(w);
                total += 1;
            }
        }
    }
    Ok(if total == 0 { 0.0 } else { seen.len() as f64 / total as f64 })
}

pub fn emotion_accuracy(judge: &EmotionClassifier, outputs: &[Vec<TokenId>], targets: &[EmotionLabel]) -> Result<f64> {
    if outputs.len() != targets.len() {
        return Err(Error::invalid(
            "emotion accuracy",
            format!("{} outputs vs {} targets", outputs.len(), targets.len()),
        ));
    }
    if outputs.is_empty() {
        return Err(Error::Empty("outputs"));
    }
    let hits = outputs.iter().zip(targets).filter(|(o, &t)| judge.classify(o) == t).count();
    Ok(hits as f64 / outputs.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub pairs: usize,
    pub bleu1: f64,
    pub bleu2: f64,
    pub dist1: f64,
    pub dist2: f64,
    /// Accuracy under the evaluation judge (the held-out one when trained).
    pub emotion_accuracy: f64,
    /// Accuracy under the classifier the search itself optimized.
    pub objective_classifier_accuracy: f64,
    pub held_out_judge: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<EmbeddingScores>,
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// One row of an alpha sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub bleu1: f64,
    pub bleu2: f64,
    pub dist1: f64,
    pub dist2: f64,
    pub emotion_accuracy: f64,
}

impl SweepRow {
    pub fn from_report(alpha: f64, r: &MetricsReport) -> Self {
        SweepRow {
            alpha,
            bleu1: r.bleu1,
            bleu2: r.bleu2,
            dist1: r.dist1,
            dist2: r.dist2,
            emotion_accuracy: r.emotion_accuracy,
        }
    }
}

/// CSV with columns `alpha,bleu1,bleu2,dist1,dist2,emotion_accuracy`.
pub fn write_sweep_csv<W: Write>(out: W, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| Error::invalid("csv", e.to_string()))?;
    }
    w.flush().map_err(|e| Error::invalid("csv", e.to_string()))?;
    Ok(())
}
