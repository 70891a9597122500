use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rustc_hash::FxHashMap;

use crate::corpus::{DialoguePair, BOS, EOS, PAD};
use crate::{Error, Result, TokenId};

/// Source id standing for the empty (NULL) post position.
pub const NULL_SOURCE: TokenId = TokenId::MAX;

/// Probability mass spread uniformly over targets when scoring, so that
/// pairs never seen together in training stay finite.
pub const DEFAULT_FLOOR: f64 = 1e-3;

fn is_target(id: TokenId) -> bool {
    id != PAD && id != BOS && id != EOS
}

/// IBM Model 1 lexical table `tr(y | x)` learned by EM.
///
/// Rows are stored sparsely: only pairs that co-occurred in training carry
/// learned mass. A source never seen in training has the uniform row.
/// Scoring uses `(1 - floor) * tr + floor / |V_y|`, which keeps every row a
/// proper distribution over the target space (all ids but `<pad>`, `<s>`, `</s>`).
#[derive(Debug, Clone, PartialEq)]
pub struct TranslationTable {
    vocab_size: usize,
    floor: f64,
    rows: FxHashMap<TokenId, Vec<(TokenId, f64)>>,
    iterations: usize,
    log_likelihood: Vec<f64>,
}

impl TranslationTable {
    /// Runs `iterations` rounds of EM starting from the uniform table.
    pub fn train(pairs: &[DialoguePair], vocab_size: usize, iterations: usize) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::Empty("corpus"));
        }
        if iterations == 0 {
            return Err(Error::invalid("iterations", "must be at least 1"));
        }
        if vocab_size <= EOS as usize + 1 {
            return Err(Error::invalid("vocab_size", vocab_size.to_string()));
        }
        for p in pairs {
            if let Some(&bad) = p.post.iter().chain(&p.response).find(|&&t| t as usize >= vocab_size || !is_target(t)) {
                return Err(Error::invalid("pair", format!("token id {bad} not allowed in a dialogue pair")));
            }
        }

        let mut table = TranslationTable {
            vocab_size,
            floor: DEFAULT_FLOOR,
            rows: FxHashMap::default(),
            iterations,
            log_likelihood: Vec::with_capacity(iterations + 1),
        };
        let uniform = 1.0 / table.targets() as f64;
        let mut current: Option<FxHashMap<(TokenId, TokenId), f64>> = None;
        let lookup = |cur: &Option<FxHashMap<(TokenId, TokenId), f64>>, s: TokenId, y: TokenId| match cur {
            None => uniform,
            Some(map) => map.get(&(s, y)).copied().unwrap_or(0.0),
        };

        let mut sources = Vec::new();
        for _ in 0..iterations {
            let mut counts: FxHashMap<(TokenId, TokenId), f64> = FxHashMap::default();
            let mut totals: FxHashMap<TokenId, f64> = FxHashMap::default();
            let mut ll = 0.0;
            for p in pairs {
                sources.clear();
                sources.push(NULL_SOURCE);
                sources.extend_from_slice(&p.post);
                let norm = (sources.len() as f64).ln();
                for &y in &p.response {
                    let denom: f64 = sources.iter().map(|&s| lookup(&current, s, y)).sum();
                    ll += denom.ln() - norm;
                    for &s in &sources {
                        let post = lookup(&current, s, y) / denom;
                        *counts.entry((s, y)).or_insert(0.0) += post;
                        *totals.entry(s).or_insert(0.0) += post;
                    }
                }
            }
            table.log_likelihood.push(ll);
            let next: FxHashMap<(TokenId, TokenId), f64> =
                counts.into_iter().map(|((s, y), c)| ((s, y), c / totals[&s])).collect();
            current = Some(next);
        }

        let learned = current.expect("at least one iteration");
        let mut rows: FxHashMap<TokenId, Vec<(TokenId, f64)>> = FxHashMap::default();
        for ((s, y), p) in learned {
            rows.entry(s).or_default().push((y, p));
        }
        for row in rows.values_mut() {
            row.sort_unstable_by_key(|&(y, _)| y);
        }
        table.rows = rows;
        let final_ll = table.corpus_log_likelihood(pairs);
        table.log_likelihood.push(final_ll);
        Ok(table)
    }

    /// Builds a table from explicit rows (unsmoothed probabilities).
    pub fn from_rows(
        vocab_size: usize,
        floor: f64,
        rows: impl IntoIterator<Item = (TokenId, Vec<(TokenId, f64)>)>,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&floor) {
            return Err(Error::invalid("floor", floor.to_string()));
        }
        let mut map = FxHashMap::default();
        for (s, mut row) in rows {
            row.sort_unstable_by_key(|&(y, _)| y);
            map.insert(s, row);
        }
        Ok(TranslationTable {
            vocab_size,
            floor,
            rows: map,
            iterations: 0,
            log_likelihood: Vec::new(),
        })
    }

    pub fn with_floor(mut self, floor: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&floor) {
            return Err(Error::invalid("floor", floor.to_string()));
        }
        self.floor = floor;
        Ok(self)
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Size of the target space.
    pub fn targets(&self) -> usize {
        self.vocab_size - 3
    }

    /// Corpus log-likelihood under the uniform start and after every EM
    /// iteration (`iterations + 1` entries).
    pub fn log_likelihood(&self) -> &[f64] {
        &self.log_likelihood
    }

    /// Learned (unsmoothed) `tr(y | s)`.
    pub fn raw_prob(&self, s: TokenId, y: TokenId) -> f64 {
        if !is_target(y) || y as usize >= self.vocab_size {
            return 0.0;
        }
        match self.rows.get(&s) {
            Some(row) => row
                .binary_search_by_key(&y, |&(t, _)| t)
                .map_or(0.0, |i| row[i].1),
            None => 1.0 / self.targets() as f64,
        }
    }

    /// Smoothed `tr(y | s)` used for scoring.
    pub fn prob(&self, s: TokenId, y: TokenId) -> f64 {
        if !is_target(y) || y as usize >= self.vocab_size {
            return 0.0;
        }
        (1.0 - self.floor) * self.raw_prob(s, y) + self.floor / self.targets() as f64
    }

    /// Sum of the smoothed row for source `s` over the target space.
    pub fn row_sum(&self, s: TokenId) -> f64 {
        (0..self.vocab_size as TokenId).map(|y| self.prob(s, y)).sum()
    }

    /// Source ids that have learned rows (NULL included), sorted.
    pub fn sources(&self) -> Vec<TokenId> {
        let mut s: Vec<TokenId> = self.rows.keys().copied().collect();
        s.sort_unstable();
        s
    }

    /// Posterior over alignment positions `[NULL, x_1, .., x_S]` for target `y`
    /// under the learned table.
    pub fn alignment_posterior(&self, x: &[TokenId], y: TokenId) -> Vec<f64> {
        let weights: Vec<f64> = std::iter::once(NULL_SOURCE)
            .chain(x.iter().copied())
            .map(|s| self.raw_prob(s, y))
            .collect();
        let z: f64 = weights.iter().sum();
        weights.into_iter().map(|w| w / z).collect()
    }

    fn corpus_log_likelihood(&self, pairs: &[DialoguePair]) -> f64 {
        let mut ll = 0.0;
        for p in pairs {
            let norm = ((p.post.len() + 1) as f64).ln();
            for &y in &p.response {
                let denom: f64 = std::iter::once(NULL_SOURCE)
                    .chain(p.post.iter().copied())
                    .map(|s| self.raw_prob(s, y))
                    .sum();
                ll += denom.ln() - norm;
            }
        }
        ll
    }

    /// Log-probability contribution of target `y` given post `x`:
    /// `log( 1/(S+1) * sum_{s in NULL, x} tr(y | s) )`.
    pub fn token_logprob(&self, x: &[TokenId], y: TokenId) -> f64 {
        let sum: f64 = std::iter::once(NULL_SOURCE)
            .chain(x.iter().copied())
            .map(|s| self.prob(s, y))
            .sum();
        sum.ln() - ((x.len() + 1) as f64).ln()
    }

    /// `sum_t log( 1/(S+1) * sum_s tr(y_t | x_s) )`; zero for empty `y`.
    pub fn logprob(&self, x: &[TokenId], y: &[TokenId]) -> f64 {
        y.iter().map(|&t| self.token_logprob(x, t)).sum()
    }

    /// [`token_logprob`](Self::token_logprob) for every id at once (non-target
    /// ids get `-inf`). Lets decoders and the search score a fixed post in O(1)
    /// per token.
    pub fn token_terms(&self, x: &[TokenId]) -> Vec<f64> {
        let n_src = x.len() + 1;
        let targets = self.targets() as f64;
        let mut acc = vec![0.0; self.vocab_size];
        for s in std::iter::once(NULL_SOURCE).chain(x.iter().copied()) {
            match self.rows.get(&s) {
                Some(row) => {
                    for &(y, p) in row {
                        acc[y as usize] += (1.0 - self.floor) * p;
                    }
                }
                None => {
                    for (y, a) in acc.iter_mut().enumerate() {
                        if is_target(y as TokenId) {
                            *a += (1.0 - self.floor) / targets;
                        }
                    }
                }
            }
        }
        let base = n_src as f64 * self.floor / targets;
        let norm = (n_src as f64).ln();
        acc.iter()
            .enumerate()
            .map(|(y, &a)| {
                if is_target(y as TokenId) {
                    (a + base).ln() - norm
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect()
    }

    pub fn write<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut out = BufWriter::new(out);
        writeln!(out, "emoanneal-ibm1 1")?;
        writeln!(out, "vocab_size {}", self.vocab_size)?;
        writeln!(out, "floor {}", self.floor)?;
        writeln!(out, "iterations {}", self.iterations)?;
        let ll: Vec<String> = self.log_likelihood.iter().map(|v| v.to_string()).collect();
        writeln!(out, "log_likelihood {}", ll.join(" "))?;
        let mut sources = self.sources();
        // NULL first
        sources.sort_unstable_by_key(|&s| (s != NULL_SOURCE, s));
        for s in sources {
            let name = if s == NULL_SOURCE { "NULL".to_string() } else { s.to_string() };
            for &(y, p) in &self.rows[&s] {
                writeln!(out, "tr {name} {y} {p}")?;
            }
        }
        out.flush()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write(file).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut table = TranslationTable {
            vocab_size: 0,
            floor: DEFAULT_FLOOR,
            rows: FxHashMap::default(),
            iterations: 0,
            log_likelihood: Vec::new(),
        };
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let lineno = i + 1;
            let line = line.map_err(|e| Error::io(path, e))?;
            let bad = |reason: &str| Error::format(path, lineno, reason.to_string());
            if lineno == 1 {
                if line.trim() != "emoanneal-ibm1 1" {
                    return Err(bad("not an IBM-1 table file"));
                }
                continue;
            }
            let mut f = line.split_whitespace();
            match f.next().unwrap_or("") {
                "vocab_size" => table.vocab_size = f.next().and_then(|v| v.parse().ok()).ok_or_else(|| bad("bad vocab_size"))?,
                "floor" => table.floor = f.next().and_then(|v| v.parse().ok()).ok_or_else(|| bad("bad floor"))?,
                "iterations" => table.iterations = f.next().and_then(|v| v.parse().ok()).ok_or_else(|| bad("bad iterations"))?,
                "log_likelihood" => {
                    table.log_likelihood = f.map(str::parse).collect::<Result<_, _>>().map_err(|_| bad("bad log_likelihood"))?
                }
                "tr" => {
                    let (Some(s), Some(y), Some(p)) = (f.next(), f.next(), f.next()) else {
                        return Err(bad("tr record needs source, target, probability"));
                    };
                    let s = if s == "NULL" { NULL_SOURCE } else { s.parse().map_err(|_| bad("bad source id"))? };
                    let y: TokenId = y.parse().map_err(|_| bad("bad target id"))?;
                    let p: f64 = p.parse().map_err(|_| bad("bad probability"))?;
                    if table.vocab_size == 0 || y as usize >= table.vocab_size {
                        return Err(bad("target id out of range"));
                    }
                    table.rows.entry(s).or_default().push((y, p));
                }
                "" => {}
                other => return Err(bad(&format!("unknown record {other:?}"))),
            }
        }
        if table.vocab_size <= EOS as usize + 1 {
            return Err(Error::format(path, 0, "missing vocab_size"));
        }
        for row in table.rows.values_mut() {
            row.sort_unstable_by_key(|&(y, _)| y);
        }
        Ok(table)
    }
}
