//! Initial candidates: beam search and diverse beam search over a
//! [`ConditionalScorer`].
//!
//! Scores are raw cumulative `log P_cond` (no length normalization). `<unk>`
//! is never emitted and `</s>` is blocked at the first step, so every
//! hypothesis has at least one word. Hypotheses still open at `max_len` are
//! closed with the `</s>` term added, so a finished hypothesis's score is its
//! full conditional log-probability.

use serde::{Deserialize, Serialize};

use crate::corpus::{BOS, EOS, PAD, UNK};
use crate::lm::ConditionalScorer;
use crate::{Error, Result, TokenId};

pub const DEFAULT_BEAM: usize = 20;
pub const DEFAULT_GROUPS: usize = 20;
pub const DEFAULT_DIVERSITY: f64 = 0.5;
pub const DEFAULT_MAX_LEN: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    /// Words only; the closing `</s>` is implied by `finished`.
    pub tokens: Vec<TokenId>,
    pub score: f64,
    pub finished: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DbsConfig {
    pub beam_size: usize,
    pub groups: usize,
    pub diversity: f64,
    pub max_len: usize,
}

impl Default for DbsConfig {
    fn default() -> Self {
        DbsConfig {
            beam_size: DEFAULT_BEAM,
            groups: DEFAULT_GROUPS,
            diversity: DEFAULT_DIVERSITY,
            max_len: DEFAULT_MAX_LEN,
        }
    }
}

impl DbsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.beam_size == 0 {
            return Err(Error::invalid("beam_size", "must be >= 1"));
        }
        if self.groups == 0 || self.groups > self.beam_size {
            return Err(Error::invalid("groups", format!("{} not in 1..={}", self.groups, self.beam_size)));
        }
        if !(self.diversity >= 0.0 && self.diversity.is_finite()) {
            return Err(Error::invalid("diversity", format!("{} must be finite and >= 0", self.diversity)));
        }
        if self.max_len == 0 {
            return Err(Error::invalid("max_len", "must be >= 1"));
        }
        Ok(())
    }

    /// Beams per group; the first `beam_size % groups` groups get one extra.
    pub fn group_widths(&self) -> Vec<usize> {
        let base = self.beam_size / self.groups;
        let extra = self.beam_size % self.groups;
        (0..self.groups).map(|g| base + usize::from(g < extra)).collect()
    }
}

/// Per-token conditional log-probability terms for a fixed post.
pub struct StepScorer<'a> {
    scorer: &'a ConditionalScorer,
    ibm_terms: Vec<f64>,
}

impl<'a> StepScorer<'a> {
    pub fn new(scorer: &'a ConditionalScorer, x: &[TokenId]) -> Self {
        StepScorer {
            scorer,
            ibm_terms: scorer.table().token_terms(x),
        }
    }

    /// `terms[w]` for every id `w` following `prefix`; `-inf` for ids that may
    /// not be emitted there.
    pub fn next_terms(&self, prefix: &[TokenId]) -> Vec<f64> {
        let dist = self.scorer.ngram().next_token_distribution(prefix);
        dist.iter()
            .enumerate()
            .map(|(w, &p)| {
                let w = w as TokenId;
                if w == PAD || w == BOS || w == UNK || (w == EOS && prefix.is_empty()) {
                    f64::NEG_INFINITY
                } else if w == EOS {
                    self.scorer.mix(p.ln(), 0.0)
                } else {
                    self.scorer.mix(p.ln(), self.ibm_terms[w as usize])
                }
            })
            .collect()
    }

    pub fn eos_term(&self, prefix: &[TokenId]) -> f64 {
        let h = self.scorer.ngram().history(prefix);
        self.scorer.mix(self.scorer.ngram().token_logprob(&h, EOS), 0.0)
    }
}

struct Group {
    width: usize,
    live: Vec<Hypothesis>,
    finished: Vec<Hypothesis>,
    done: bool,
}

impl Group {
    fn new(width: usize) -> Self {
        Group {
            width,
            live: vec![Hypothesis {
                tokens: Vec::new(),
                score: 0.0,
                finished: false,
            }],
            finished: Vec::new(),
            done: false,
        }
    }

    // Every step term is <= 0, so once `width` finished hypotheses beat the
    // best live score nothing can displace them.
    fn settled(&mut self) -> bool {
        if self.live.is_empty() {
            return true;
        }
        if self.finished.len() < self.width {
            return false;
        }
        sort_desc(&mut self.finished);
        let worst_kept = self.finished[self.width - 1].score;
        let best_live = self.live.iter().map(|h| h.score).fold(f64::NEG_INFINITY, f64::max);
        worst_kept >= best_live
    }
}

fn sort_desc(h: &mut [Hypothesis]) {
    h.sort_by(|a, b| b.score.total_cmp(&a.score));
}

/// Plain beam search; equivalent to [`diverse_beam_search`] with one group.
pub fn beam_search(scorer: &ConditionalScorer, x: &[TokenId], beam_size: usize, max_len: usize) -> Result<Vec<Hypothesis>> {
    diverse_beam_search(
        scorer,
        x,
        &DbsConfig {
            beam_size,
            groups: 1,
            diversity: 0.0,
            max_len,
        },
    )
}

/// Diverse beam search with a Hamming penalty: group `g` pays
/// `diversity * count(w)` for choosing `w` at a step where earlier groups
/// chose it `count(w)` times. The penalty only steers selection; carried
/// scores stay unpenalized. Returns every group's finished hypotheses, each
/// group truncated to its width, merged and sorted by score.
pub fn diverse_beam_search(scorer: &ConditionalScorer, x: &[TokenId], cfg: &DbsConfig) -> Result<Vec<Hypothesis>> {
    cfg.validate()?;
    let steps = StepScorer::new(scorer, x);
    let vocab = scorer.vocab_size();
    let mut groups: Vec<Group> = cfg.group_widths().into_iter().map(Group::new).collect();
    let mut chosen = vec![0u32; vocab];
    for step in 0..cfg.max_len {
        chosen.iter_mut().for_each(|c| *c = 0);
        for group in groups.iter_mut() {
            if group.done {
                continue;
            }
            // (penalized, carried, parent, token)
            let mut cands: Vec<(f64, f64, usize, TokenId)> = Vec::new();
            for (i, h) in group.live.iter().enumerate() {
                let terms = steps.next_terms(&h.tokens);
                for (w, &t) in terms.iter().enumerate() {
                    if t == f64::NEG_INFINITY {
                        continue;
                    }
                    let carried = h.score + t;
                    let penalized = if cfg.diversity > 0.0 && chosen[w] > 0 {
                        carried - cfg.diversity * chosen[w] as f64
                    } else {
                        carried
                    };
                    cands.push((penalized, carried, i, w as TokenId));
                }
            }
            cands.sort_by(|a, b| b.0.total_cmp(&a.0));
            cands.truncate(group.width);
            let mut next = Vec::with_capacity(group.width);
            for &(_, carried, parent, w) in &cands {
                chosen[w as usize] += 1;
                let mut tokens = group.live[parent].tokens.clone();
                if w == EOS {
                    group.finished.push(Hypothesis {
                        tokens,
                        score: carried,
                        finished: true,
                    });
                } else {
                    tokens.push(w);
                    next.push(Hypothesis {
                        tokens,
                        score: carried,
                        finished: false,
                    });
                }
            }
            group.live = next;
            if step + 1 < cfg.max_len && group.settled() {
                group.done = true;
            }
        }
    }
    let mut out = Vec::new();
    for mut group in groups {
        for h in group.live.drain(..) {
            let score = h.score + steps.eos_term(&h.tokens);
            group.finished.push(Hypothesis {
                tokens: h.tokens,
                score,
                finished: true,
            });
        }
        sort_desc(&mut group.finished);
        group.finished.truncate(group.width);
        out.extend(group.finished);
    }
    sort_desc(&mut out);
    Ok(out)
}

/// The single best hypothesis across all groups.
pub fn initial_candidate(scorer: &ConditionalScorer, x: &[TokenId], cfg: &DbsConfig) -> Result<Hypothesis> {
    diverse_beam_search(scorer, x, cfg)?
        .into_iter()
        .next()
        .ok_or_else(|| Error::Invariant("decoder produced no hypothesis".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{DialoguePair, EmotionLabel};
    use crate::lm::{NGramModel, TranslationTable};

    fn scorer(responses: &[Vec<TokenId>], vocab: usize, gamma: f64) -> ConditionalScorer {
        let pairs: Vec<DialoguePair> = responses
            .iter()
            .map(|r| DialoguePair {
                post: vec![4],
                response: r.clone(),
                label: EmotionLabel::Neutral,
            })
            .collect();
        let ngram = NGramModel::train(responses, vocab, 2, 0.01).unwrap();
        let table = TranslationTable::train(&pairs, vocab, 3).unwrap();
        ConditionalScorer::new(ngram, table, gamma).unwrap()
    }

    #[test]
    fn dominant_sequence_wins() {
        let (a, b) = (5, 6);
        let s = scorer(&[vec![a, b], vec![a, b], vec![a, b], vec![b]], 8, 0.0);
        let top = &beam_search(&s, &[4], 4, 4).unwrap()[0];
        assert_eq!(top.tokens, vec![a, b]);
    }

    #[test]
    fn scores_match_full_conditional_logprob() {
        let s = scorer(&[vec![5, 6, 7], vec![6, 5], vec![7]], 8, 0.3);
        for h in beam_search(&s, &[4, 5], 5, 4).unwrap() {
            assert!((h.score - s.conditional_logprob(&[4, 5], &h.tokens)).abs() < 1e-9);
            assert!(!h.tokens.is_empty());
            assert!(!h.tokens.contains(&UNK));
        }
    }

    #[test]
    fn greedy_is_argmax_chain() {
        let s = scorer(&[vec![5, 6, 7], vec![5, 6], vec![7, 7]], 8, 0.3);
        let steps = StepScorer::new(&s, &[4]);
        let mut prefix = Vec::new();
        for _ in 0..4 {
            let t = steps.next_terms(&prefix);
            let mut best = 0;
            for w in 1..t.len() {
                if t[w] > t[best] {
                    best = w;
                }
            }
            if best as TokenId == EOS {
                break;
            }
            prefix.push(best as TokenId);
        }
        assert_eq!(beam_search(&s, &[4], 1, 4).unwrap()[0].tokens, prefix);
    }

    #[test]
    fn widths_split_remainder_first() {
        let cfg = DbsConfig {
            beam_size: 7,
            groups: 3,
            ..Default::default()
        };
        assert_eq!(cfg.group_widths(), vec![3, 2, 2]);
        assert_eq!(DbsConfig::default().group_widths(), vec![1; 20]);
    }

    #[test]
    fn large_penalty_forces_a_different_first_token() {
        let s = scorer(&[vec![5, 6], vec![5, 6], vec![5, 7], vec![6]], 8, 0.0);
        let cfg = DbsConfig {
            beam_size: 2,
            groups: 2,
            diversity: 100.0,
            max_len: 3,
        };
        let out = diverse_beam_search(&s, &[4], &cfg).unwrap();
        assert_eq!(out.len(), 2);
        assert_ne!(out[0].tokens[0], out[1].tokens[0]);
    }

    #[test]
    fn rejects_bad_config() {
        let s = scorer(&[vec![5]], 8, 0.0);
        let bad = DbsConfig {
            beam_size: 2,
            groups: 3,
            ..Default::default()
        };
        assert!(diverse_beam_search(&s, &[4], &bad).is_err());
        assert!(beam_search(&s, &[4], 0, 3).is_err());
        assert!(beam_search(&s, &[4], 1, 0).is_err());
    }
}
