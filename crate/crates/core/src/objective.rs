//! The search objective `log f(y; x, e) = g(log P_cond(y | x)) + alpha * log P_emo(e | y)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::EmotionLabel;
use crate::emotion::EmotionClassifier;
use crate::lm::ConditionalScorer;
use crate::{Error, Result, TokenId};

pub const DEFAULT_ALPHA: f64 = 8.0;

/// How the conditional term enters the objective, and which space the
/// annealing acceptance rule compares scores in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreMode {
    /// `g` is the identity; acceptance compares `f` itself (probability space).
    #[default]
    Raw,
    /// `g` divides by `|y|`; acceptance compares `log f`.
    PerToken,
}

impl ScoreMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ScoreMode::Raw => "raw",
            ScoreMode::PerToken => "per_token",
        }
    }
}

impl fmt::Display for ScoreMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScoreMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(ScoreMode::Raw),
            "per_token" | "per-token" => Ok(ScoreMode::PerToken),
            other => Err(Error::invalid("score_mode", format!("{other:?} (expected raw or per_token)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveConfig {
    pub alpha: f64,
    pub mode: ScoreMode,
}

impl Default for ObjectiveConfig {
    fn default() -> Self {
        ObjectiveConfig {
            alpha: DEFAULT_ALPHA,
            mode: ScoreMode::Raw,
        }
    }
}

impl ObjectiveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::invalid("alpha", format!("{} must be finite and >= 0", self.alpha)));
        }
        Ok(())
    }

    /// `g(log_cond) + alpha * log_emo` for a candidate of `len` tokens.
    pub fn combine(&self, log_cond: f64, log_emo: f64, len: usize) -> f64 {
        let cond = match self.mode {
            ScoreMode::Raw => log_cond,
            ScoreMode::PerToken => log_cond / len as f64,
        };
        if self.alpha == 0.0 {
            cond
        } else {
            cond + self.alpha * log_emo
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCandidate {
    pub tokens: Vec<TokenId>,
    pub log_f: f64,
    pub log_cond: f64,
    pub log_emo: f64,
}

/// Models plus weights: everything needed to score a response.
#[derive(Debug, Clone, Copy)]
pub struct Objective<'a> {
    pub scorer: &'a ConditionalScorer,
    pub classifier: &'a EmotionClassifier,
    pub config: ObjectiveConfig,
}

impl<'a> Objective<'a> {
    pub fn new(scorer: &'a ConditionalScorer, classifier: &'a EmotionClassifier, config: ObjectiveConfig) -> Result<Self> {
        config.validate()?;
        if scorer.vocab_size() != classifier.vocab_size() {
            return Err(Error::invalid(
                "objective",
                format!("scorer vocab {} != classifier vocab {}", scorer.vocab_size(), classifier.vocab_size()),
            ));
        }
        Ok(Objective { scorer, classifier, config })
    }

    pub fn score(&self, x: &[TokenId], e: EmotionLabel, y: &[TokenId]) -> Result<ScoredCandidate> {
        score(&self.config, self.scorer, self.classifier, x, e, y)
    }
}

pub fn score(
    cfg: &ObjectiveConfig,
    scorer: &ConditionalScorer,
    clf: &EmotionClassifier,
    x: &[TokenId],
    e: EmotionLabel,
    y: &[TokenId],
) -> Result<ScoredCandidate> {
    if y.is_empty() {
        return Err(Error::invalid("candidate", "empty response has no score"));
    }
    let log_cond = scorer.conditional_logprob(x, y);
    let log_emo = clf.log_posterior(y)[e.index()];
    Ok(ScoredCandidate {
        tokens: y.to_vec(),
        log_f: cfg.combine(log_cond, log_emo, y.len()),
        log_cond,
        log_emo,
    })
}

/// `f(new) - f(old)` in the mode's comparison space.
///
/// Raw mode returns the probability-space difference, computed around the
/// larger score so that it stays finite; it underflows to zero when both
/// candidates are astronomically unlikely.
pub fn score_delta(log_f_new: f64, log_f_old: f64, mode: ScoreMode) -> f64 {
    match mode {
        ScoreMode::PerToken => log_f_new - log_f_old,
        ScoreMode::Raw => {
            let m = log_f_new.max(log_f_old);
            if m == f64::NEG_INFINITY {
                return 0.0;
            }
            m.exp() * ((log_f_new - m).exp() - (log_f_old - m).exp())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combine_arithmetic() {
        let cfg = ObjectiveConfig::default();
        assert_eq!(cfg.combine(-5.0, -0.5, 3), -9.0);
        let zero = ObjectiveConfig { alpha: 0.0, ..cfg };
        assert_eq!(zero.combine(-5.0, -0.5, 3), -5.0);
        assert_eq!(cfg.combine(-5.0, 0.0, 3), -5.0);
        let per = ObjectiveConfig { mode: ScoreMode::PerToken, ..cfg };
        assert_eq!(per.combine(-6.0, -0.5, 3), -6.0);
    }

    #[test]
    fn monotone_in_emotion_term() {
        let cfg = ObjectiveConfig { alpha: 0.5, mode: ScoreMode::Raw };
        assert!(cfg.combine(-5.0, -0.1, 2) > cfg.combine(-5.0, -0.2, 2));
    }

    #[test]
    fn delta_is_guarded() {
        assert_eq!(score_delta(-2000.0, -2000.0, ScoreMode::Raw), 0.0);
        let d = score_delta((0.5f64).ln(), (0.25f64).ln(), ScoreMode::Raw);
        assert!((d - 0.25).abs() < 1e-15);
        assert!(score_delta(-800.0, -801.0, ScoreMode::Raw) >= 0.0);
        assert_eq!(score_delta(-3.0, -1.0, ScoreMode::PerToken), -2.0);
    }

    #[test]
    fn bad_alpha() {
        assert!(ObjectiveConfig { alpha: -1.0, ..Default::default() }.validate().is_err());
        assert!(ObjectiveConfig { alpha: f64::NAN, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn mode_parse() {
        assert_eq!("per_token".parse::<ScoreMode>().unwrap(), ScoreMode::PerToken);
        assert!("log".parse::<ScoreMode>().is_err());
    }
}
