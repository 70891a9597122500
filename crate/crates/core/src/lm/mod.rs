//! Conditional response plausibility: an n-gram fluency model mixed with an
//! IBM Model 1 lexical translation model.

mod ibm1;
mod ngram;

pub use ibm1::{TranslationTable, DEFAULT_FLOOR, NULL_SOURCE};
pub use ngram::{default_lambdas, NGramModel, MAX_ORDER};

use crate::{Error, Result, TokenId};

/// `log P_cond(y | x) = (1 - gamma) * log P_ngram(y) + gamma * log P_ibm1(y | x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalScorer {
    ngram: NGramModel,
    table: TranslationTable,
    gamma: f64,
}

pub const DEFAULT_GAMMA: f64 = 0.3;

impl ConditionalScorer {
    pub fn new(ngram: NGramModel, table: TranslationTable, gamma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::invalid("gamma", format!("{gamma} not in [0, 1]")));
        }
        if ngram.vocab_size() != table.vocab_size() {
            return Err(Error::invalid(
                "scorer",
                format!("n-gram vocab {} != table vocab {}", ngram.vocab_size(), table.vocab_size()),
            ));
        }
        Ok(ConditionalScorer { ngram, table, gamma })
    }

    pub fn ngram(&self) -> &NGramModel {
        &self.ngram
    }

    pub fn table(&self) -> &TranslationTable {
        &self.table
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn with_gamma(mut self, gamma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::invalid("gamma", format!("{gamma} not in [0, 1]")));
        }
        self.gamma = gamma;
        Ok(self)
    }

    pub fn vocab_size(&self) -> usize {
        self.ngram.vocab_size()
    }

    /// Mixes the two component log scores.
    pub fn mix(&self, ngram_logprob: f64, ibm_logprob: f64) -> f64 {
        // Keep the pure endpoints exact (and free of 0 * -inf).
        if self.gamma == 0.0 {
            ngram_logprob
        } else if self.gamma == 1.0 {
            ibm_logprob
        } else {
            (1.0 - self.gamma) * ngram_logprob + self.gamma * ibm_logprob
        }
    }

    pub fn conditional_logprob(&self, x: &[TokenId], y: &[TokenId]) -> f64 {
        self.mix(self.ngram.sequence_logprob(y), self.table.logprob(x, y))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{DialoguePair, EmotionLabel};

    fn fixture() -> ConditionalScorer {
        let pairs: Vec<DialoguePair> = [
            (vec![4, 5], vec![6, 7]),
            (vec![4], vec![6]),
            (vec![5, 8], vec![7, 9, 6]),
        ]
        .into_iter()
        .map(|(post, response)| DialoguePair {
            post,
            response,
            label: EmotionLabel::Happy,
        })
        .collect();
        let responses: Vec<Vec<TokenId>> = pairs.iter().map(|p| p.response.clone()).collect();
        let ngram = NGramModel::train(&responses, 10, 3, 0.01).unwrap();
        let table = TranslationTable::train(&pairs, 10, 5).unwrap();
        ConditionalScorer::new(ngram, table, 0.5).unwrap()
    }

    #[test]
    fn gamma_endpoints_and_midpoint() {
        let s = fixture();
        let (x, y) = ([4, 5], [6, 9, 7]);
        let lm = s.ngram().sequence_logprob(&y);
        let ibm = s.table().logprob(&x, &y);
        assert!((s.conditional_logprob(&x, &y) - 0.5 * (lm + ibm)).abs() < 1e-12);
        let s0 = s.clone().with_gamma(0.0).unwrap();
        assert_eq!(s0.conditional_logprob(&x, &y), lm);
        let s1 = s.with_gamma(1.0).unwrap();
        assert_eq!(s1.conditional_logprob(&x, &y), ibm);
    }

    #[test]
    fn rejects_bad_gamma() {
        assert!(fixture().with_gamma(1.5).is_err());
        assert!(fixture().with_gamma(-0.1).is_err());
    }
}
