use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Word vectors of one fixed dimension.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        EmbeddingTable {
            dim,
            vectors: HashMap::new(),
        }
    }

    pub fn insert(&mut self, word: impl Into<String>, v: Vec<f64>) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::invalid("embedding", format!("dimension {} != {}", v.len(), self.dim)));
        }
        self.vectors.insert(word.into(), v);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.vectors.get(word).map(Vec::as_slice)
    }

    /// Text word-vector format: `word v1 .. vd` per line, with an optional
    /// leading `count dim` header.
    pub fn parse<R: Read>(input: R) -> Result<Self> {
        let mut table: Option<EmbeddingTable> = None;
        for (i, line) in BufReader::new(input).lines().enumerate() {
            let lineno = i + 1;
            let line = line.map_err(|e| Error::Malformed {
                line: lineno,
                reason: e.to_string(),
            })?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            if lineno == 1 && fields.len() == 2 && fields.iter().all(|f| f.parse::<usize>().is_ok()) {
                table = Some(EmbeddingTable::new(fields[1].parse().unwrap()));
                continue;
            }
            let v: Vec<f64> = fields[1..]
                .iter()
                .map(|f| f.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Malformed {
                    line: lineno,
                    reason: format!("bad component: {e}"),
                })?;
            let t = table.get_or_insert_with(|| EmbeddingTable::new(v.len()));
            if v.len() != t.dim {
                return Err(Error::Malformed {
                    line: lineno,
                    reason: format!("expected {} components, found {}", t.dim, v.len()),
                });
            }
            t.vectors.insert(fields[0].to_string(), v);
        }
        table.filter(|t| !t.is_empty()).ok_or(Error::Empty("embedding table"))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::parse(file)
    }

    /// Writes the header and words in sorted order.
    pub fn write<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{} {}", self.len(), self.dim)?;
        let mut words: Vec<&String> = self.vectors.keys().collect();
        words.sort();
        for w in words {
            write!(out, "{w}")?;
            for x in &self.vectors[w] {
                write!(out, " {x}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    fn lookup<S: AsRef<str>>(&self, sentence: &[S]) -> Vec<&[f64]> {
        sentence.iter().filter_map(|w| self.get(w.as_ref())).collect()
    }
}

/// Cosine similarity; 0 when either vector is zero.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

fn mean(vs: &[&[f64]], dim: usize) -> Vec<f64> {
    let mut m = vec![0.0; dim];
    for v in vs {
        for (a, x) in m.iter_mut().zip(v.iter()) {
            *a += x;
        }
    }
    m.iter_mut().for_each(|a| *a /= vs.len() as f64);
    m
}

fn extreme(vs: &[&[f64]], dim: usize) -> Vec<f64> {
    (0..dim)
        .map(|d| vs.iter().map(|v| v[d]).fold(0.0, |best: f64, x| if x.abs() > best.abs() { x } else { best }))
        .collect()
}

fn greedy_one_way(a: &[&[f64]], b: &[&[f64]]) -> f64 {
    a.iter()
        .map(|u| b.iter().map(|v| cosine(u, v)).fold(f64::NEG_INFINITY, f64::max))
        .sum::<f64>()
        / a.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingScores {
    pub average: f64,
    pub greedy: f64,
    pub extreme: f64,
    pub coherence: f64,
    pub scored_pairs: usize,
    /// Pairs with a candidate, reference or post made only of OOV words.
    pub skipped_pairs: usize,
}

/// Per-pair Average, Greedy (symmetric), Extreme and Coherence
/// (candidate vs post) cosines, averaged over the scored pairs.
pub fn embedding_metrics<S: AsRef<str>>(
    table: &EmbeddingTable,
    candidates: &[Vec<S>],
    references: &[Vec<S>],
    posts: &[Vec<S>],
) -> Result<EmbeddingScores> {
    if candidates.len() != references.len() || candidates.len() != posts.len() {
        return Err(Error::invalid("embedding metrics", "candidate, reference and post counts differ"));
    }
    let dim = table.dim();
    let (mut avg, mut gr, mut ex, mut coh) = (0.0, 0.0, 0.0, 0.0);
    let (mut scored, mut skipped) = (0usize, 0usize);
    for ((c, r), p) in candidates.iter().zip(references).zip(posts) {
        let (cv, rv, pv) = (table.lookup(c), table.lookup(r), table.lookup(p));
        if cv.is_empty() || rv.is_empty() || pv.is_empty() {
            skipped += 1;
            continue;
        }
        let cm = mean(&cv, dim);
        avg += cosine(&cm, &mean(&rv, dim));
        gr += 0.5 * (greedy_one_way(&cv, &rv) + greedy_one_way(&rv, &cv));
        ex += cosine(&extreme(&cv, dim), &extreme(&rv, dim));
        coh += cosine(&cm, &mean(&pv, dim));
        scored += 1;
    }
    let n = scored.max(1) as f64;
    Ok(EmbeddingScores {
        average: avg / n,
        greedy: gr / n,
        extreme: ex / n,
        coherence: coh / n,
        scored_pairs: scored,
        skipped_pairs: skipped,
    })
}
