//! Trained-model bundle and the end-to-end run: decode an initial candidate,
//! anneal it toward the target emotion, and evaluate whole test sets.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::anneal::{run_sa, SaConfig, SaTrace, SearchContext};
use crate::corpus::{tokenize, DialoguePair, EmotionLabel, TextPair, Vocabulary};
use crate::decode::{initial_candidate, DbsConfig};
use crate::emotion::EmotionClassifier;
use crate::eval::{bleu_n, distinct_n, embedding_metrics, emotion_accuracy, EmbeddingTable, MetricsReport};
use crate::lm::{ConditionalScorer, NGramModel, TranslationTable};
use crate::objective::{Objective, ObjectiveConfig, ScoredCandidate};
use crate::rng::derive_seed;
use crate::{Error, Result, TokenId};

pub const VOCAB_FILE: &str = "vocab.tsv";
pub const NGRAM_FILE: &str = "ngram.txt";
pub const IBM1_FILE: &str = "ibm1.txt";
pub const EMOTION_FILE: &str = "emotion.txt";
pub const JUDGE_FILE: &str = "judge.txt";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub min_count: usize,
    pub ngram_order: usize,
    pub add_k: f64,
    pub ibm_iters: usize,
    pub laplace: f64,
    pub gamma: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            min_count: 1,
            ngram_order: 3,
            add_k: 0.01,
            ibm_iters: 10,
            laplace: crate::emotion::DEFAULT_LAPLACE,
            gamma: crate::lm::DEFAULT_GAMMA,
        }
    }
}

/// Everything a run needs: vocabulary, conditional scorer, the objective's
/// emotion classifier and, optionally, a separately trained judge.
#[derive(Debug, Clone)]
pub struct Models {
    pub vocab: Vocabulary,
    pub scorer: ConditionalScorer,
    pub classifier: EmotionClassifier,
    pub judge: Option<EmotionClassifier>,
}

fn train_classifier(pairs: &[DialoguePair], vocab: usize, laplace: f64) -> Result<EmotionClassifier> {
    EmotionClassifier::train(pairs.iter().map(|p| (p.response.as_slice(), p.label)), vocab, laplace)
}

fn absent_labels(clf: &EmotionClassifier) -> Vec<EmotionLabel> {
    EmotionLabel::ALL.into_iter().filter(|l| clf.doc_counts()[l.index()] == 0).collect()
}

impl Models {
    /// Trains on `train`; the judge (if any) is trained on `judge_pairs` over
    /// the same vocabulary. Returns human-readable warnings alongside.
    pub fn train(train: &[TextPair], judge_pairs: Option<&[TextPair]>, cfg: &TrainConfig) -> Result<(Models, Vec<String>)> {
        if train.is_empty() {
            return Err(Error::Empty("training corpus"));
        }
        let vocab = Vocabulary::build(train, cfg.min_count)?;
        let encoded: Vec<DialoguePair> = train.iter().map(|p| vocab.encode_pair(p)).collect();
        let responses: Vec<Vec<TokenId>> = encoded.iter().map(|p| p.response.clone()).collect();
        let ngram = NGramModel::train(&responses, vocab.len(), cfg.ngram_order, cfg.add_k)?;
        let table = TranslationTable::train(&encoded, vocab.len(), cfg.ibm_iters)?;
        let scorer = ConditionalScorer::new(ngram, table, cfg.gamma)?;
        let classifier = train_classifier(&encoded, vocab.len(), cfg.laplace)?;
        let mut warnings = Vec::new();
        let absent = absent_labels(&classifier);
        if !absent.is_empty() {
            warnings.push(format!(
                "training corpus has no example labeled {}; using a uniform prior for those labels",
                absent.iter().map(|l| l.as_str()).collect::<Vec<_>>().join(", ")
            ));
        }
        let judge = match judge_pairs {
            Some(j) if !j.is_empty() => {
                let enc: Vec<DialoguePair> = j.iter().map(|p| vocab.encode_pair(p)).collect();
                let judge = train_classifier(&enc, vocab.len(), cfg.laplace)?;
                if judge.uniform_prior_fallback() {
                    warnings.push("judge corpus is missing some labels; using a uniform prior for those labels".into());
                }
                Some(judge)
            }
            _ => None,
        };
        Ok((
            Models {
                vocab,
                scorer,
                classifier,
                judge,
            },
            warnings,
        ))
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.vocab.save(&dir.join(VOCAB_FILE))?;
        self.scorer.ngram().save(&dir.join(NGRAM_FILE))?;
        self.scorer.table().save(&dir.join(IBM1_FILE))?;
        self.classifier.save(&dir.join(EMOTION_FILE))?;
        let judge_path = dir.join(JUDGE_FILE);
        match &self.judge {
            Some(j) => j.save(&judge_path)?,
            None if judge_path.exists() => fs::remove_file(&judge_path).map_err(|e| Error::io(&judge_path, e))?,
            None => {}
        }
        Ok(())
    }

    pub fn load(dir: &Path, gamma: f64) -> Result<Models> {
        let vocab = Vocabulary::load(&dir.join(VOCAB_FILE))?;
        let ngram = NGramModel::load(&dir.join(NGRAM_FILE))?;
        let table = TranslationTable::load(&dir.join(IBM1_FILE))?;
        let scorer = ConditionalScorer::new(ngram, table, gamma)?;
        let classifier = EmotionClassifier::load(&dir.join(EMOTION_FILE))?;
        let judge_path = dir.join(JUDGE_FILE);
        let judge = if judge_path.exists() {
            Some(EmotionClassifier::load(&judge_path)?)
        } else {
            None
        };
        if vocab.len() != scorer.vocab_size() || vocab.len() != classifier.vocab_size() {
            return Err(Error::invalid("models", "vocabulary sizes of the model files disagree"));
        }
        Ok(Models {
            vocab,
            scorer,
            classifier,
            judge,
        })
    }

    /// The held-out judge when present, otherwise the objective's classifier.
    pub fn evaluation_judge(&self) -> &EmotionClassifier {
        self.judge.as_ref().unwrap_or(&self.classifier)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decoder {
    #[default]
    Beam,
    Diverse,
}

impl std::str::FromStr for Decoder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "beam" | "bs" => Ok(Decoder::Beam),
            "diverse" | "dbs" => Ok(Decoder::Diverse),
            other => Err(Error::invalid("decoder", format!("{other:?} (expected beam or diverse)"))),
        }
    }
}

impl std::fmt::Display for Decoder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Decoder::Beam => "beam",
            Decoder::Diverse => "diverse",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub objective: ObjectiveConfig,
    pub decoder: Decoder,
    /// Beam width, groups, diversity and maximum decode length. Plain beam
    /// search uses only `beam_size` and `max_len`.
    pub dbs: DbsConfig,
    /// `sa.seed` is the global seed; test pair `i` anneals with
    /// `derive_seed(seed, i)`.
    pub sa: SaConfig,
}

impl PipelineConfig {
    pub fn decode_config(&self) -> DbsConfig {
        match self.decoder {
            Decoder::Beam => DbsConfig {
                groups: 1,
                diversity: 0.0,
                ..self.dbs
            },
            Decoder::Diverse => self.dbs,
        }
    }
}

/// Result of one decode + anneal run.
#[derive(Debug, Clone, PartialEq)]
pub struct Response {
    pub initial: Vec<TokenId>,
    pub best: ScoredCandidate,
    pub trace: SaTrace,
}

pub struct Pipeline<'m> {
    models: &'m Models,
    cfg: PipelineConfig,
}

/// One evaluated test pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairOutput {
    pub index: usize,
    pub target: EmotionLabel,
    pub post: String,
    pub reference: String,
    pub initial: String,
    pub response: String,
    pub judged: EmotionLabel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub report: MetricsReport,
    pub outputs: Vec<PairOutput>,
    pub traces: Vec<SaTrace>,
}

impl<'m> Pipeline<'m> {
    pub fn new(models: &'m Models, cfg: PipelineConfig) -> Result<Self> {
        cfg.objective.validate()?;
        cfg.decode_config().validate()?;
        cfg.sa.validate()?;
        Ok(Pipeline { models, cfg })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn models(&self) -> &Models {
        self.models
    }

    fn objective(&self) -> Objective<'m> {
        Objective {
            scorer: &self.models.scorer,
            classifier: &self.models.classifier,
            config: self.cfg.objective,
        }
    }

    /// Decode then anneal, with the annealing stream seeded by `seed`.
    pub fn respond_ids(&self, post: &[TokenId], target: EmotionLabel, seed: u64) -> Result<Response> {
        let init = initial_candidate(&self.models.scorer, post, &self.cfg.decode_config())?;
        let ctx = SearchContext::new(self.objective(), post, target);
        let sa = SaConfig {
            seed,
            ..self.cfg.sa.clone()
        };
        let (best, trace) = run_sa(&ctx, &init.tokens, &sa)?;
        Ok(Response {
            initial: init.tokens,
            best,
            trace,
        })
    }

    /// Tokenizes `post`, runs with the configured seed, returns the response
    /// text and the run.
    pub fn respond(&self, post: &str, target: EmotionLabel) -> Result<(String, Response)> {
        let ids = self.models.vocab.encode(&tokenize(post));
        let r = self.respond_ids(&ids, target, self.cfg.sa.seed)?;
        Ok((self.models.vocab.decode_text(&r.best.tokens), r))
    }

    /// Responds to every test post with its labeled emotion and scores the
    /// outputs. Pairs run in parallel; results are in corpus order.
    pub fn evaluate(&self, test: &[TextPair], embeddings: Option<&EmbeddingTable>) -> Result<Evaluation> {
        if test.is_empty() {
            return Err(Error::Empty("test set"));
        }
        let vocab = &self.models.vocab;
        let encoded: Vec<DialoguePair> = test.iter().map(|p| vocab.encode_pair(p)).collect();
        let runs: Vec<Response> = encoded
            .par_iter()
            .enumerate()
            .map(|(i, p)| self.respond_ids(&p.post, p.label, derive_seed(self.cfg.sa.seed, i as u64)))
            .collect::<Result<_>>()?;

        let outputs: Vec<Vec<TokenId>> = runs.iter().map(|r| r.best.tokens.clone()).collect();
        let targets: Vec<EmotionLabel> = test.iter().map(|p| p.label).collect();
        let cand_words: Vec<Vec<String>> = outputs.iter().map(|o| vocab.decode(o)).collect();
        let ref_words: Vec<Vec<String>> = test.iter().map(|p| p.response.clone()).collect();
        let judge = self.models.evaluation_judge();
        let embedding = match embeddings {
            Some(t) => {
                let posts: Vec<Vec<String>> = test.iter().map(|p| p.post.clone()).collect();
                Some(embedding_metrics(t, &cand_words, &ref_words, &posts)?)
            }
            None => None,
        };
        let report = MetricsReport {
            pairs: test.len(),
            bleu1: bleu_n(&cand_words, &ref_words, 1)?,
            bleu2: bleu_n(&cand_words, &ref_words, 2)?,
            dist1: distinct_n(&cand_words, 1)?,
            dist2: distinct_n(&cand_words, 2)?,
            emotion_accuracy: emotion_accuracy(judge, &outputs, &targets)?,
            objective_classifier_accuracy: emotion_accuracy(&self.models.classifier, &outputs, &targets)?,
            held_out_judge: self.models.judge.is_some(),
            embedding,
        };
        let pair_outputs = runs
            .iter()
            .zip(test)
            .enumerate()
            .map(|(i, (r, p))| PairOutput {
                index: i,
                target: p.label,
                post: p.post.join(" "),
                reference: p.response.join(" "),
                initial: vocab.decode_text(&r.initial),
                response: vocab.decode_text(&r.best.tokens),
                judged: judge.classify(&r.best.tokens),
            })
            .collect();
        Ok(Evaluation {
            report,
            outputs: pair_outputs,
            traces: runs.into_iter().map(|r| r.trace).collect(),
        })
    }

    /// One evaluation per `alpha`, everything else fixed.
    pub fn sweep_alpha(&self, test: &[TextPair], alphas: &[f64]) -> Result<Vec<crate::eval::SweepRow>> {
        alphas
            .iter()
            .map(|&alpha| {
                let mut cfg = self.cfg.clone();
                cfg.objective.alpha = alpha;
                let p = Pipeline::new(self.models, cfg)?;
                let r = p.evaluate(test, None)?;
                Ok(crate::eval::SweepRow::from_report(alpha, &r.report))
            })
            .collect()
    }
}
