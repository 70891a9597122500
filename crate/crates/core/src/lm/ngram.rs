use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rustc_hash::FxHashMap;

use crate::corpus::{BOS, EOS, PAD};
use crate::{Error, Result, TokenId};

/// Highest supported order; k-grams are packed into a `u128` key.
pub const MAX_ORDER: usize = 5;
const ID_BITS: usize = 24;

type Key = u128;

fn pack<I: IntoIterator<Item = TokenId>>(tokens: I) -> Key {
    let mut key: Key = 0;
    let mut len = 0;
    for t in tokens {
        key |= (t as Key) << (ID_BITS * len);
        len += 1;
    }
    key | ((len as Key) << 120)
}

fn unpack(key: Key) -> Vec<TokenId> {
    let len = (key >> 120) as usize;
    (0..len)
        .map(|i| ((key >> (ID_BITS * i)) & ((1 << ID_BITS) - 1)) as TokenId)
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq)]
struct ContextStats {
    total: u64,
    successors: Vec<(TokenId, u32)>,
}

/// Interpolated add-k n-gram model.
///
/// `P(w | h) = sum_k lambda_k * (c(h_k, w) + add_k) / (c(h_k) + add_k * |V'|)`
/// where `h_k` is the last `k - 1` tokens of the `<s>`-padded history and
/// `V'` is every id except `<pad>` and `<s>` (so it includes `<unk>` and `</s>`).
#[derive(Debug, Clone, PartialEq)]
pub struct NGramModel {
    order: usize,
    vocab_size: usize,
    add_k: f64,
    lambdas: Vec<f64>,
    counts: FxHashMap<Key, u32>,
    contexts: FxHashMap<Key, ContextStats>,
}

/// `lambda_n = 0.6` with the rest split evenly over lower orders.
pub fn default_lambdas(order: usize) -> Vec<f64> {
    match order {
        0 => vec![],
        1 => vec![1.0],
        n => {
            let rest = 0.4 / (n - 1) as f64;
            let mut l = vec![rest; n - 1];
            l.push(0.6);
            l
        }
    }
}

fn is_outcome(id: TokenId) -> bool {
    id != PAD && id != BOS
}

impl NGramModel {
    pub fn train(responses: &[Vec<TokenId>], vocab_size: usize, order: usize, add_k: f64) -> Result<Self> {
        Self::train_with_lambdas(responses, vocab_size, order, add_k, default_lambdas(order))
    }

    pub fn train_with_lambdas(
        responses: &[Vec<TokenId>],
        vocab_size: usize,
        order: usize,
        add_k: f64,
        lambdas: Vec<f64>,
    ) -> Result<Self> {
        if responses.is_empty() {
            return Err(Error::Empty("training set"));
        }
        let mut model = Self::empty(vocab_size, order, add_k, lambdas)?;
        let mut padded = Vec::new();
        for y in responses {
            if let Some(&bad) = y.iter().find(|&&t| t as usize >= vocab_size || !is_outcome(t) || t == EOS) {
                return Err(Error::invalid("response", format!("token id {bad} cannot appear inside a response")));
            }
            padded.clear();
            padded.extend(std::iter::repeat(BOS).take(order - 1));
            padded.extend_from_slice(y);
            padded.push(EOS);
            for i in order - 1..padded.len() {
                for k in 1..=order {
                    *model.counts.entry(pack(padded[i + 1 - k..=i].iter().copied())).or_insert(0) += 1;
                }
            }
        }
        model.rebuild_contexts();
        Ok(model)
    }

    fn empty(vocab_size: usize, order: usize, add_k: f64, lambdas: Vec<f64>) -> Result<Self> {
        if order == 0 || order > MAX_ORDER {
            return Err(Error::invalid("order", format!("{order} not in 1..={MAX_ORDER}")));
        }
        if !(add_k > 0.0 && add_k.is_finite()) {
            return Err(Error::invalid("add_k", format!("{add_k} must be positive")));
        }
        if vocab_size <= EOS as usize || vocab_size >= 1 << ID_BITS {
            return Err(Error::invalid("vocab_size", vocab_size.to_string()));
        }
        if lambdas.len() != order
            || lambdas.iter().any(|&l| !(l >= 0.0))
            || (lambdas.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return Err(Error::invalid("lambdas", format!("{lambdas:?} must be {order} nonnegative weights summing to 1")));
        }
        Ok(NGramModel {
            order,
            vocab_size,
            add_k,
            lambdas,
            counts: FxHashMap::default(),
            contexts: FxHashMap::default(),
        })
    }

    fn rebuild_contexts(&mut self) {
        let mut contexts: FxHashMap<Key, ContextStats> = FxHashMap::default();
        for (&key, &c) in &self.counts {
            let gram = unpack(key);
            let (w, ctx) = gram.split_last().expect("k-grams are nonempty");
            let stats = contexts.entry(pack(ctx.iter().copied())).or_default();
            stats.total += c as u64;
            stats.successors.push((*w, c));
        }
        for stats in contexts.values_mut() {
            stats.successors.sort_unstable();
        }
        self.contexts = contexts;
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn add_k(&self) -> f64 {
        self.add_k
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    /// Size of the outcome space `V ∪ {</s>}`.
    pub fn outcomes(&self) -> usize {
        self.vocab_size - 2
    }

    /// Raw count of a k-gram (`1 <= k <= order`).
    pub fn count(&self, gram: &[TokenId]) -> u32 {
        self.counts.get(&pack(gram.iter().copied())).copied().unwrap_or(0)
    }

    /// The last `order - 1` tokens of `<s>^(order-1) ++ prefix`.
    pub fn history(&self, prefix: &[TokenId]) -> Vec<TokenId> {
        let need = self.order - 1;
        let mut h = Vec::with_capacity(need);
        let have = prefix.len().min(need);
        h.extend(std::iter::repeat(BOS).take(need - have));
        h.extend_from_slice(&prefix[prefix.len() - have..]);
        h
    }

    /// `P(w | history)`; `history` must hold exactly `order - 1` tokens.
    pub fn prob(&self, history: &[TokenId], w: TokenId) -> f64 {
        debug_assert_eq!(history.len(), self.order - 1);
        let vp = self.outcomes() as f64;
        let mut p = 0.0;
        for k in 1..=self.order {
            let ctx = &history[self.order - k..];
            let total = self
                .contexts
                .get(&pack(ctx.iter().copied()))
                .map_or(0, |s| s.total);
            let c = if total == 0 {
                0
            } else {
                self.counts
                    .get(&pack(ctx.iter().copied().chain(std::iter::once(w))))
                    .copied()
                    .unwrap_or(0)
            };
            p += self.lambdas[k - 1] * (c as f64 + self.add_k) / (total as f64 + self.add_k * vp);
        }
        p
    }

    pub fn token_logprob(&self, history: &[TokenId], w: TokenId) -> f64 {
        self.prob(history, w).ln()
    }

    /// Distribution over all ids for the token following `prefix`; entries
    /// for `<pad>` and `<s>` are zero.
    pub fn next_token_distribution(&self, prefix: &[TokenId]) -> Vec<f64> {
        let hist = self.history(prefix);
        let vp = self.outcomes() as f64;
        let mut dist = vec![0.0; self.vocab_size];
        for k in 1..=self.order {
            let ctx = &hist[self.order - k..];
            let stats = self.contexts.get(&pack(ctx.iter().copied()));
            let total = stats.map_or(0, |s| s.total) as f64;
            let lambda = self.lambdas[k - 1];
            let denom = total + self.add_k * vp;
            let base = lambda * self.add_k / denom;
            for (id, d) in dist.iter_mut().enumerate() {
                if is_outcome(id as TokenId) {
                    *d += base;
                }
            }
            if let Some(stats) = stats {
                for &(w, c) in &stats.successors {
                    dist[w as usize] += lambda * c as f64 / denom;
                }
            }
        }
        dist
    }

    /// `<s>`-padded copy of `y` terminated by `</s>`.
    pub fn pad(&self, y: &[TokenId]) -> Vec<TokenId> {
        let mut padded = Vec::with_capacity(y.len() + self.order);
        padded.extend(std::iter::repeat(BOS).take(self.order - 1));
        padded.extend_from_slice(y);
        padded.push(EOS);
        padded
    }

    /// Log-probability of prediction `i` of a padded sequence (see [`pad`](Self::pad)):
    /// token `padded[i + order - 1]` given the `order - 1` tokens before it.
    pub fn padded_term(&self, padded: &[TokenId], i: usize) -> f64 {
        let n = self.order;
        self.token_logprob(&padded[i..i + n - 1], padded[i + n - 1])
    }

    /// Per-prediction log-probabilities of `y` followed by `</s>` (length `|y| + 1`).
    pub fn prediction_terms(&self, y: &[TokenId]) -> Vec<f64> {
        let padded = self.pad(y);
        (0..=y.len()).map(|i| self.padded_term(&padded, i)).collect()
    }

    /// `sum_i log P(y_i | ...) + log P(</s> | ...)`.
    pub fn sequence_logprob(&self, y: &[TokenId]) -> f64 {
        self.prediction_terms(y).iter().sum()
    }

    pub fn write<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut out = BufWriter::new(out);
        writeln!(out, "emoanneal-ngram 1")?;
        writeln!(out, "order {}", self.order)?;
        writeln!(out, "vocab_size {}", self.vocab_size)?;
        writeln!(out, "add_k {}", self.add_k)?;
        let lambdas: Vec<String> = self.lambdas.iter().map(|l| l.to_string()).collect();
        writeln!(out, "lambdas {}", lambdas.join(" "))?;
        let mut grams: Vec<(Vec<TokenId>, u32)> = self.counts.iter().map(|(&k, &c)| (unpack(k), c)).collect();
        grams.sort_unstable_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| a.0.cmp(&b.0)));
        for (gram, c) in grams {
            write!(out, "count {}", gram.len())?;
            for t in gram {
                write!(out, " {t}")?;
            }
            writeln!(out, " {c}")?;
        }
        out.flush()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write(file).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut order = None;
        let mut vocab_size = None;
        let mut add_k = None;
        let mut lambdas = None;
        let mut model: Option<NGramModel> = None;
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let lineno = i + 1;
            let line = line.map_err(|e| Error::io(path, e))?;
            let bad = |reason: &str| Error::format(path, lineno, reason.to_string());
            let mut fields = line.split_whitespace();
            let tag = fields.next().unwrap_or("");
            if lineno == 1 {
                if line.trim() != "emoanneal-ngram 1" {
                    return Err(bad("not an n-gram model file"));
                }
                continue;
            }
            match tag {
                "order" => order = fields.next().and_then(|v| v.parse().ok()),
                "vocab_size" => vocab_size = fields.next().and_then(|v| v.parse().ok()),
                "add_k" => add_k = fields.next().and_then(|v| v.parse().ok()),
                "lambdas" => lambdas = fields.map(|v| v.parse::<f64>()).collect::<Result<Vec<_>, _>>().ok(),
                "count" => {
                    if model.is_none() {
                        let (Some(o), Some(v), Some(k), Some(l)) = (order, vocab_size, add_k, lambdas.clone()) else {
                            return Err(bad("count record before complete header"));
                        };
                        model = Some(NGramModel::empty(v, o, k, l)?);
                    }
                    let m = model.as_mut().unwrap();
                    let nums: Vec<u64> = fields
                        .map(|v| v.parse::<u64>())
                        .collect::<Result<_, _>>()
                        .map_err(|_| bad("non-integer field"))?;
                    let Some((&len, rest)) = nums.split_first() else {
                        return Err(bad("empty count record"));
                    };
                    let len = len as usize;
                    if len == 0 || len > m.order || rest.len() != len + 1 {
                        return Err(bad("bad k-gram length"));
                    }
                    if rest[..len].iter().any(|&t| t as usize >= m.vocab_size) {
                        return Err(bad("token id out of range"));
                    }
                    m.counts.insert(pack(rest[..len].iter().map(|&t| t as TokenId)), rest[len] as u32);
                }
                "" => {}
                other => return Err(bad(&format!("unknown record {other:?}"))),
            }
        }
        let mut model = match model {
            Some(m) => m,
            None => {
                let (Some(o), Some(v), Some(k), Some(l)) = (order, vocab_size, add_k, lambdas) else {
                    return Err(Error::format(path, 0, "incomplete header"));
                };
                NGramModel::empty(v, o, k, l)?
            }
        };
        model.rebuild_contexts();
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::UNK;
    use crate::rng::SaRng;

    // ids: a=4, b=5, c=6
    const A: TokenId = 4;
    const B: TokenId = 5;
    const C: TokenId = 6;

    fn outcome_sum(d: &[f64]) -> f64 {
        d.iter().sum()
    }

    #[test]
    fn pack_round_trip() {
        for gram in [vec![], vec![7], vec![1, 2, 3, 4, 5], vec![(1 << 24) - 1, 0]] {
            assert_eq!(unpack(pack(gram.iter().copied())), gram);
        }
        assert_ne!(pack([0]), pack([]));
    }

    #[test]
    fn default_lambda_shapes() {
        assert_eq!(default_lambdas(1), vec![1.0]);
        assert_eq!(default_lambdas(2), vec![0.4, 0.6]);
        let l3 = default_lambdas(3);
        assert!((l3[0] - 0.2).abs() < 1e-15 && (l3[1] - 0.2).abs() < 1e-15 && l3[2] == 0.6);
    }

    #[test]
    fn large_add_k_tends_to_uniform() {
        let m = NGramModel::train(&[vec![A, B]], 6, 1, 1e9).unwrap();
        let d = m.next_token_distribution(&[]);
        let uniform = 1.0 / m.outcomes() as f64;
        for id in [UNK, EOS, A, B] {
            assert!((d[id as usize] - uniform).abs() < 1e-8);
        }
        assert_eq!(d[PAD as usize], 0.0);
        assert_eq!(d[BOS as usize], 0.0);
    }

    #[test]
    fn bigram_count_dominance() {
        let m = NGramModel::train(&[vec![A, B], vec![A, B]], 6, 2, 0.01).unwrap();
        let h = m.history(&[A]);
        assert!(m.prob(&h, B) > m.prob(&h, A));
    }

    #[test]
    fn empty_prefix_prefers_first_word() {
        let m = NGramModel::train(&[vec![A]], 6, 3, 0.01).unwrap();
        let d = m.next_token_distribution(&[]);
        let argmax = d
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.partial_cmp(y.1).unwrap())
            .unwrap()
            .0;
        assert_eq!(argmax, A as usize);
    }

    #[test]
    fn symmetric_successors() {
        let m = NGramModel::train(&[vec![A, B], vec![A, C]], 7, 2, 0.01).unwrap();
        let d = m.next_token_distribution(&[A]);
        assert_eq!(d[B as usize], d[C as usize]);
    }

    #[test]
    fn distribution_matches_pointwise_prob() {
        let m = NGramModel::train(&[vec![A, B, C], vec![C, B]], 8, 3, 0.1).unwrap();
        for prefix in [vec![], vec![A], vec![A, B], vec![C, C, C]] {
            let d = m.next_token_distribution(&prefix);
            let h = m.history(&prefix);
            for w in 0..8u32 {
                let expect = if is_outcome(w) { m.prob(&h, w) } else { 0.0 };
                assert!((d[w as usize] - expect).abs() < 1e-15);
            }
        }
    }

    // Brute-force oracle: recount k-grams straight from the corpus and sum the
    // interpolated estimate over every outcome.
    fn brute_prob(corpus: &[Vec<TokenId>], order: usize, add_k: f64, vocab: usize, hist: &[TokenId], w: TokenId) -> f64 {
        let lambdas = default_lambdas(order);
        let mut grams: Vec<Vec<TokenId>> = Vec::new();
        for y in corpus {
            let mut p = vec![BOS; order - 1];
            p.extend(y);
            p.push(EOS);
            for i in order - 1..p.len() {
                for k in 1..=order {
                    grams.push(p[i + 1 - k..=i].to_vec());
                }
            }
        }
        let vp = (vocab - 2) as f64;
        let mut total = 0.0;
        for k in 1..=order {
            let ctx = &hist[order - k..];
            let c_ctx = grams.iter().filter(|g| g.len() == k && &g[..k - 1] == ctx).count() as f64;
            let c_w = grams
                .iter()
                .filter(|g| g.len() == k && &g[..k - 1] == ctx && g[k - 1] == w)
                .count() as f64;
            total += lambdas[k - 1] * (c_w + add_k) / (c_ctx + add_k * vp);
        }
        total
    }

    fn five_sentences() -> Vec<Vec<TokenId>> {
        vec![
            vec![4, 5, 6, 7],
            vec![4, 5, 8],
            vec![9, 5, 6],
            vec![4, 10, 11, 6, 7],
            vec![8, 8, 5],
        ]
    }

    #[test]
    fn trigram_contexts_normalize_against_brute_force() {
        let corpus = five_sentences();
        let vocab = 12;
        let m = NGramModel::train(&corpus, vocab, 3, 0.01).unwrap();
        let mut rng = SaRng::seed_from_u64(11);
        for _ in 0..100 {
            let len = rng.index(5);
            let prefix: Vec<TokenId> = (0..len).map(|_| 4 + rng.index(8) as TokenId).collect();
            let h = m.history(&prefix);
            let brute: f64 = (0..vocab as TokenId)
                .filter(|&w| is_outcome(w))
                .map(|w| brute_prob(&corpus, 3, 0.01, vocab, &h, w))
                .sum();
            assert!((brute - 1.0).abs() < 1e-9);
            let d = m.next_token_distribution(&prefix);
            assert!((outcome_sum(&d) - 1.0).abs() < 1e-9);
            for w in 0..vocab as TokenId {
                if is_outcome(w) {
                    let b = brute_prob(&corpus, 3, 0.01, vocab, &h, w);
                    assert!((d[w as usize] - b).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn sequence_logprob_factorizes() {
        let m = NGramModel::train(&five_sentences(), 12, 3, 0.01).unwrap();
        let y = [4, 5, 8];
        let mut expect = 0.0;
        for i in 0..y.len() {
            expect += m.next_token_distribution(&y[..i])[y[i] as usize].ln();
        }
        expect += m.next_token_distribution(&y)[EOS as usize].ln();
        assert!((m.sequence_logprob(&y) - expect).abs() < 1e-12);
        assert!(m.sequence_logprob(&y) <= 0.0);
        let empty = m.sequence_logprob(&[]);
        assert!((empty - m.prob(&[BOS, BOS], EOS).ln()).abs() < 1e-15);
    }

    #[test]
    fn training_errors() {
        assert!(matches!(NGramModel::train(&[], 6, 3, 0.1), Err(Error::Empty(_))));
        assert!(NGramModel::train(&[vec![A]], 6, 0, 0.1).is_err());
        assert!(NGramModel::train(&[vec![A]], 6, 6, 0.1).is_err());
        assert!(NGramModel::train(&[vec![A]], 6, 2, 0.0).is_err());
        assert!(NGramModel::train(&[vec![BOS]], 6, 2, 0.1).is_err());
        assert!(NGramModel::train(&[vec![9]], 6, 2, 0.1).is_err());
    }

    #[test]
    fn deterministic_training_and_file_round_trip() {
        let a = NGramModel::train(&five_sentences(), 12, 3, 0.01).unwrap();
        let b = NGramModel::train(&five_sentences(), 12, 3, 0.01).unwrap();
        assert_eq!(a, b);
        let mut buf_a = Vec::new();
        let mut buf_b = Vec::new();
        a.write(&mut buf_a).unwrap();
        b.write(&mut buf_b).unwrap();
        assert_eq!(buf_a, buf_b);

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ngram.txt");
        a.save(&path).unwrap();
        let loaded = NGramModel::load(&path).unwrap();
        assert_eq!(loaded, a);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn every_context_normalizes(
                corpus in proptest::collection::vec(proptest::collection::vec(4u32..10, 0..6), 1..6),
                prefix in proptest::collection::vec(1u32..10, 0..5),
                order in 1usize..=4,
            ) {
                let prefix: Vec<TokenId> = prefix.into_iter().filter(|&t| t != BOS).collect();
                let m = NGramModel::train(&corpus, 10, order, 0.05).unwrap();
                let d = m.next_token_distribution(&prefix);
                prop_assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                let ok = d.iter().enumerate().all(|(i, &p)| if is_outcome(i as TokenId) { p > 0.0 } else { p == 0.0 });
                prop_assert!(ok);
            }
        }
    }
}
