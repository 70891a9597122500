use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::EditKind;
use crate::corpus::{EmotionLabel, RESERVED};
use crate::emotion::log_sum_exp;
use crate::objective::{Objective, ScoredCandidate};
use crate::{Error, Result, TokenId};

pub const DEFAULT_SHORTLIST: usize = 500;

/// Candidate words considered by one Gibbs proposal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Shortlist {
    /// Union of the top `k/2` words by target-emotion likelihood ratio and the
    /// top `k/2` next-word candidates of the n-gram model at the edit point
    /// (plus the current word for a replacement).
    Top(usize),
    /// Every non-reserved word.
    Full,
}

impl Default for Shortlist {
    fn default() -> Self {
        Shortlist::Top(DEFAULT_SHORTLIST)
    }
}

impl fmt::Display for Shortlist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shortlist::Top(k) => write!(f, "{k}"),
            Shortlist::Full => f.write_str("full"),
        }
    }
}

impl FromStr for Shortlist {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "full" {
            return Ok(Shortlist::Full);
        }
        match s.parse::<usize>() {
            Ok(k) if k >= 1 => Ok(Shortlist::Top(k)),
            _ => Err(Error::invalid("shortlist", format!("{s:?} (expected a positive integer or \"full\")"))),
        }
    }
}

impl From<Shortlist> for String {
    fn from(s: Shortlist) -> String {
        s.to_string()
    }
}

impl TryFrom<String> for Shortlist {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// A fixed `(post, target emotion)` search problem with precomputed per-token
/// tables, so a whole candidate set for one edit is scored incrementally.
pub struct SearchContext<'a> {
    objective: Objective<'a>,
    post: Vec<TokenId>,
    target: EmotionLabel,
    ibm_terms: Vec<f64>,
    emotion_ranked: Vec<TokenId>,
    words: Vec<TokenId>,
}

impl<'a> SearchContext<'a> {
    pub fn new(objective: Objective<'a>, post: &[TokenId], target: EmotionLabel) -> Self {
        let vocab = objective.scorer.vocab_size();
        SearchContext {
            ibm_terms: objective.scorer.table().token_terms(post),
            emotion_ranked: objective.classifier.ranked_markers(target),
            words: (RESERVED as TokenId..vocab as TokenId).collect(),
            objective,
            post: post.to_vec(),
            target,
        }
    }

    pub fn objective(&self) -> &Objective<'a> {
        &self.objective
    }

    pub fn post(&self) -> &[TokenId] {
        &self.post
    }

    pub fn target(&self) -> EmotionLabel {
        self.target
    }

    /// Every word a proposal may place (all non-reserved ids).
    pub fn words(&self) -> &[TokenId] {
        &self.words
    }

    /// Full, non-incremental score of `y`.
    pub fn score(&self, y: &[TokenId]) -> Result<ScoredCandidate> {
        self.objective.score(&self.post, self.target, y)
    }

    /// Sorted, deduplicated candidate words for an edit at `t`.
    pub fn shortlist(&self, y: &[TokenId], t: usize, kind: EditKind, spec: Shortlist) -> Vec<TokenId> {
        let k = match spec {
            Shortlist::Full => return self.words.clone(),
            Shortlist::Top(k) if k >= self.words.len() => return self.words.clone(),
            Shortlist::Top(k) => k,
        };
        let half = (k / 2).max(1);
        let mut out: Vec<TokenId> = self.emotion_ranked.iter().take(half).copied().collect();
        let dist = self.objective.scorer.ngram().next_token_distribution(&y[..t.min(y.len())]);
        let mut lm: Vec<TokenId> = self.words.clone();
        lm.sort_by(|&a, &b| dist[b as usize].total_cmp(&dist[a as usize]).then(a.cmp(&b)));
        out.extend(lm.into_iter().take(half));
        if kind == EditKind::Replace && t < y.len() && y[t] as usize >= RESERVED {
            out.push(y[t]);
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// `log f` of `y` with each of `words` placed at `t` (replacing `y[t]`, or
    /// inserted before it), computed by rescoring only the affected terms.
    pub fn candidate_log_f(&self, y: &[TokenId], t: usize, kind: EditKind, words: &[TokenId]) -> Result<Vec<f64>> {
        let len = y.len();
        let new_len = match kind {
            EditKind::Replace if t < len => len,
            EditKind::Insert if t <= len => len + 1,
            EditKind::Delete => return Err(Error::invalid("gibbs", "delete has no word to sample")),
            _ => return Err(Error::invalid("gibbs", format!("position {t} out of range for length {len}"))),
        };
        let scorer = self.objective.scorer;
        let clf = self.objective.classifier;
        let cfg = &self.objective.config;
        let ngram = scorer.ngram();
        let n = ngram.order();

        let old_terms = ngram.prediction_terms(y);
        let prefix: f64 = old_terms[..t].iter().sum();
        // Last affected prediction in the new sequence, and where the
        // untouched old suffix starts.
        let hi = (t + n - 1).min(new_len);
        let suffix_from = match kind {
            EditKind::Replace => hi + 1,
            _ => hi,
        };
        let suffix: f64 = old_terms.get(suffix_from..).map_or(0.0, |s| s.iter().sum());

        let mut edited: Vec<TokenId> = y.to_vec();
        match kind {
            EditKind::Replace => {}
            _ => edited.insert(t, 0),
        }
        let mut padded = ngram.pad(&edited);
        let slot = t + n - 1;

        let mut ibm_base: f64 = y.iter().map(|&w| self.ibm_terms[w as usize]).sum();
        let mut joint = clf.log_joint(y);
        if kind == EditKind::Replace {
            ibm_base -= self.ibm_terms[y[t] as usize];
            let old = clf.token_log_likelihoods(y[t]);
            for c in 0..joint.len() {
                joint[c] -= old[c];
            }
        }
        let e = self.target.index();

        let mut out = Vec::with_capacity(words.len());
        for &w in words {
            padded[slot] = w;
            let mut lm = prefix;
            for i in t..=hi {
                lm += ngram.padded_term(&padded, i);
            }
            lm += suffix;
            let ibm = ibm_base + self.ibm_terms[w as usize];
            let add = clf.token_log_likelihoods(w);
            let mut j = joint;
            for c in 0..j.len() {
                j[c] += add[c];
            }
            let log_emo = j[e] - log_sum_exp(&j);
            out.push(cfg.combine(scorer.mix(lm, ibm), log_emo, new_len));
        }
        Ok(out)
    }

    /// The Gibbs conditional over `words`: `P(w) = f(y with w at t) / Z`, `Z`
    /// summed over `words` only.
    pub fn gibbs_word_distribution(&self, y: &[TokenId], t: usize, kind: EditKind, words: &[TokenId]) -> Result<Vec<f64>> {
        if words.is_empty() {
            return Err(Error::invalid("shortlist", "no candidate words"));
        }
        Ok(softmax(&self.candidate_log_f(y, t, kind, words)?))
    }
}

/// `exp(v - logsumexp(v))`.
pub fn softmax(log_w: &[f64]) -> Vec<f64> {
    let z = log_sum_exp(log_w);
    log_w.iter().map(|&l| (l - z).exp()).collect()
}
