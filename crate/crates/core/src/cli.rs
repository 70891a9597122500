//! The `emoanneal` command-line tool.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 internal invariant
//! violation.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::anneal::{EditKind, SaTrace};
use crate::config::RunConfig;
use crate::corpus::{load_corpus, write_tsv, CorpusFormat, EmotionLabel, Vocabulary};
use crate::decode::diverse_beam_search;
use crate::eval::{write_sweep_csv, EmbeddingTable};
use crate::pipeline::{Models, Pipeline};
use crate::synth::{self, SynthConfig};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "emoanneal", version, about = "Emotion-controlled response generation by simulated annealing")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Hyperparameter flags; each mirrors a config-file key.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// key=value file applied before the flags below
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub alpha: Option<String>,
    /// raw or per_token
    #[arg(long)]
    pub score_mode: Option<String>,
    #[arg(long)]
    pub gamma: Option<String>,
    /// beam or diverse
    #[arg(long)]
    pub decoder: Option<String>,
    #[arg(long)]
    pub beam_size: Option<String>,
    #[arg(long)]
    pub groups: Option<String>,
    #[arg(long)]
    pub diversity: Option<String>,
    #[arg(long)]
    pub decode_max_len: Option<String>,
    #[arg(long)]
    pub tau_init: Option<String>,
    #[arg(long)]
    pub decay: Option<String>,
    #[arg(long)]
    pub iters: Option<String>,
    /// positive integer or "full"
    #[arg(long)]
    pub shortlist: Option<String>,
    #[arg(long)]
    pub min_len: Option<String>,
    #[arg(long)]
    pub max_len: Option<String>,
    /// replace,insert,delete
    #[arg(long)]
    pub op_weights: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub min_count: Option<String>,
    #[arg(long)]
    pub ngram_order: Option<String>,
    #[arg(long)]
    pub add_k: Option<String>,
    #[arg(long)]
    pub ibm_iters: Option<String>,
    #[arg(long)]
    pub laplace: Option<String>,
}

impl Overrides {
    fn flags(&self) -> [(&'static str, &Option<String>); 21] {
        [
            ("alpha", &self.alpha),
            ("score_mode", &self.score_mode),
            ("gamma", &self.gamma),
            ("decoder", &self.decoder),
            ("beam_size", &self.beam_size),
            ("groups", &self.groups),
            ("diversity", &self.diversity),
            ("decode_max_len", &self.decode_max_len),
            ("tau_init", &self.tau_init),
            ("decay", &self.decay),
            ("iters", &self.iters),
            ("shortlist", &self.shortlist),
            ("min_len", &self.min_len),
            ("max_len", &self.max_len),
            ("op_weights", &self.op_weights),
            ("seed", &self.seed),
            ("min_count", &self.min_count),
            ("ngram_order", &self.ngram_order),
            ("add_k", &self.add_k),
            ("ibm_iters", &self.ibm_iters),
            ("laplace", &self.laplace),
        ]
    }

    /// Defaults, then the config file, then flags.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        for (key, value) in self.flags() {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train the vocabulary, n-gram model, IBM-1 table and emotion classifier
    Train {
        /// Labeled dialogue pairs (.tsv or .jsonl)
        #[arg(long)]
        corpus: PathBuf,
        /// Separate pairs for a held-out evaluation judge
        #[arg(long)]
        judge_corpus: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Print the decoder's hypotheses for a post
    Decode {
        #[arg(long)]
        models: PathBuf,
        #[arg(long)]
        post: String,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Decode, then anneal toward a target emotion
    Respond {
        #[arg(long)]
        models: PathBuf,
        #[arg(long)]
        post: String,
        /// happy, angry, disgust, sad, like or neutral
        #[arg(long)]
        emotion: String,
        /// Write the annealing trace (JSON lines) here
        #[arg(long)]
        trace: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Respond to every test pair and compute all metrics
    Evaluate {
        #[arg(long)]
        models: PathBuf,
        #[arg(long)]
        test: PathBuf,
        /// Word vectors for the embedding metrics
        #[arg(long)]
        embeddings: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Also write every annealing trace to <out>/traces.jsonl
        #[arg(long)]
        traces: bool,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Evaluate once per emotion weight and write a CSV table
    SweepAlpha {
        #[arg(long)]
        models: PathBuf,
        #[arg(long)]
        test: PathBuf,
        /// Comma-separated weights
        #[arg(long, default_value = "0,1,2,4,8,16,64")]
        alphas: String,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Pretty-print a stored trace, one line per step
    Trace {
        #[arg(long)]
        input: PathBuf,
        /// Model directory whose vocabulary decodes word ids
        #[arg(long)]
        models: Option<PathBuf>,
    },
    /// Write the synthetic emotional dialogue corpus and word vectors
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 3000)]
        pairs: usize,
        #[arg(long, default_value_t = 2019)]
        seed: u64,
        #[arg(long, default_value_t = 400)]
        judge: usize,
        #[arg(long, default_value_t = 200)]
        test: usize,
    },
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    match execute(cli.command, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn out_err(e: std::io::Error) -> Error {
    Error::io("<stdout>", e)
}

fn parse_emotion(s: &str) -> Result<EmotionLabel> {
    s.parse().map_err(|e: Error| Error::invalid("emotion", e.to_string()))
}

fn load_models(dir: &Path, cfg: &RunConfig) -> Result<Models> {
    Models::load(dir, cfg.train.gamma)
}

fn execute(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    match command {
        Command::Train {
            corpus,
            judge_corpus,
            out: dir,
            overrides,
        } => {
            let cfg = overrides.resolve()?;
            let train = load_corpus(&corpus, CorpusFormat::from_path(&corpus))?;
            let judge = match &judge_corpus {
                Some(p) => Some(load_corpus(p, CorpusFormat::from_path(p))?),
                None => None,
            };
            let (models, warnings) = Models::train(&train, judge.as_deref(), &cfg.train)?;
            for w in warnings {
                writeln!(err, "warning: {w}").map_err(out_err)?;
            }
            models.save(&dir)?;
            write_file(&dir.join("config.txt"), &cfg.echo())?;
            writeln!(
                out,
                "trained on {} pairs; vocabulary {}; wrote {}",
                train.len(),
                models.vocab.len(),
                dir.display()
            )
            .map_err(out_err)?;
        }
        Command::Decode {
            models,
            post,
            overrides,
        } => {
            let cfg = overrides.resolve()?;
            let m = load_models(&models, &cfg)?;
            writeln!(err, "# config: {}", cfg.echo().trim_end().replace('\n', " ")).map_err(out_err)?;
            let x = m.vocab.encode_text(&post);
            for h in diverse_beam_search(&m.scorer, &x, &cfg.pipeline.decode_config())? {
                writeln!(out, "{:.6}\t{}", h.score, m.vocab.decode_text(&h.tokens)).map_err(out_err)?;
            }
        }
        Command::Respond {
            models,
            post,
            emotion,
            trace,
            overrides,
        } => {
            let target = parse_emotion(&emotion)?;
            let cfg = overrides.resolve()?;
            let m = load_models(&models, &cfg)?;
            let pipeline = Pipeline::new(&m, cfg.pipeline.clone())?;
            let (text, mut response) = pipeline.respond(&post, target)?;
            writeln!(out, "{text}").map_err(out_err)?;
            match trace {
                Some(path) => {
                    response.trace.config = Some(cfg.to_json());
                    let mut w = create(&path)?;
                    response.trace.write_jsonl(&mut w).map_err(|e| Error::io(&path, e))?;
                    w.flush().map_err(|e| Error::io(&path, e))?;
                }
                None => {
                    writeln!(err, "# config: {}", cfg.echo().trim_end().replace('\n', " ")).map_err(out_err)?;
                }
            }
        }
        Command::Evaluate {
            models,
            test,
            embeddings,
            out: dir,
            traces,
            overrides,
        } => {
            let cfg = overrides.resolve()?;
            let m = load_models(&models, &cfg)?;
            let pairs = load_corpus(&test, CorpusFormat::from_path(&test))?;
            let table = embeddings.as_deref().map(EmbeddingTable::load).transpose()?;
            let pipeline = Pipeline::new(&m, cfg.pipeline.clone())?;
            let eval = pipeline.evaluate(&pairs, table.as_ref())?;
            fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            write_file(&dir.join("metrics.json"), &(eval.report.to_json() + "\n"))?;
            write_file(&dir.join("config.txt"), &cfg.echo())?;
            let csv_path = dir.join("outputs.csv");
            let mut w = csv::Writer::from_writer(create(&csv_path)?);
            for o in &eval.outputs {
                w.serialize(o).map_err(|e| Error::invalid("csv", e.to_string()))?;
            }
            w.flush().map_err(|e| Error::io(&csv_path, e))?;
            if traces {
                let path = dir.join("traces.jsonl");
                let mut w = create(&path)?;
                for mut t in eval.traces {
                    t.config = Some(cfg.to_json());
                    t.write_jsonl(&mut w).map_err(|e| Error::io(&path, e))?;
                }
                w.flush().map_err(|e| Error::io(&path, e))?;
            }
            writeln!(out, "{}", eval.report.to_json()).map_err(out_err)?;
        }
        Command::SweepAlpha {
            models,
            test,
            alphas,
            out: path,
            overrides,
        } => {
            let alphas: Vec<f64> = alphas
                .split(',')
                .map(|a| a.trim().parse::<f64>().map_err(|_| Error::invalid("alphas", format!("cannot parse {a:?}"))))
                .collect::<Result<_>>()?;
            let cfg = overrides.resolve()?;
            let m = load_models(&models, &cfg)?;
            let pairs = load_corpus(&test, CorpusFormat::from_path(&test))?;
            let rows = Pipeline::new(&m, cfg.pipeline.clone())?.sweep_alpha(&pairs, &alphas)?;
            let mut w = create(&path)?;
            write_sweep_csv(&mut w, &rows)?;
            w.flush().map_err(|e| Error::io(&path, e))?;
            write_file(&path.with_extension("config.txt"), &cfg.echo())?;
            write_sweep_csv(&mut *out, &rows)?;
        }
        Command::Trace { input, models } => {
            let file = File::open(&input).map_err(|e| Error::io(&input, e))?;
            let traces = SaTrace::read_jsonl(BufReader::new(file))?;
            let vocab = match &models {
                Some(dir) => Some(Vocabulary::load(&dir.join(crate::pipeline::VOCAB_FILE))?),
                None => None,
            };
            for t in &traces {
                print_trace(t, vocab.as_ref(), out).map_err(out_err)?;
            }
        }
        Command::Synth {
            out: dir,
            pairs,
            seed,
            judge,
            test,
        } => {
            let cfg = SynthConfig {
                pairs,
                seed,
                ..Default::default()
            };
            let s = synth::split(synth::generate(&cfg), judge, test);
            fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            for (name, part) in [("train.tsv", &s.train), ("judge.tsv", &s.judge), ("test.tsv", &s.test)] {
                let path = dir.join(name);
                let mut w = create(&path)?;
                write_tsv(&mut w, part).map_err(|e| Error::io(&path, e))?;
                w.flush().map_err(|e| Error::io(&path, e))?;
            }
            let path = dir.join("embeddings.txt");
            let mut w = create(&path)?;
            synth::embeddings(16, seed).write(&mut w).map_err(|e| Error::io(&path, e))?;
            w.flush().map_err(|e| Error::io(&path, e))?;
            writeln!(
                out,
                "wrote {} train, {} judge, {} test pairs to {}",
                s.train.len(),
                s.judge.len(),
                s.test.len(),
                dir.display()
            )
            .map_err(out_err)?;
        }
    }
    Ok(())
}

fn word_text(vocab: Option<&Vocabulary>, id: u32) -> String {
    vocab
        .and_then(|v| v.token(id).map(str::to_string))
        .unwrap_or_else(|| format!("#{id}"))
}

fn sentence(vocab: Option<&Vocabulary>, ids: &[u32]) -> String {
    ids.iter().map(|&i| word_text(vocab, i)).collect::<Vec<_>>().join(" ")
}

/// Human-readable trace: a header, one line per step, and the result.
pub fn print_trace(t: &SaTrace, vocab: Option<&Vocabulary>, out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "target {}  initial log_f {:.4}", t.target, t.initial_log_f)?;
    writeln!(out, "  y0: {}", sentence(vocab, &t.initial))?;
    for s in &t.steps {
        let word = match (s.op.kind, s.op.word) {
            (EditKind::Delete, _) | (_, None) => "-".to_string(),
            (_, Some(w)) => word_text(vocab, w),
        };
        writeln!(
            out,
            "{:>4}  {:<7} pos {:>2}  {:<12} delta {:>+12.4e}  tau {:.4}  p {:.4}  {}",
            s.iteration,
            s.op.kind,
            s.op.position,
            word,
            s.delta,
            s.tau,
            s.acceptance,
            if s.accepted { "accept" } else { "reject" }
        )?;
    }
    let best = t.best_tokens().map(|b| sentence(vocab, &b)).unwrap_or_else(|e| format!("<{e}>"));
    writeln!(out, "best state {}  log_f {:.4}: {}", t.best_state, t.best_log_f, best)
}
