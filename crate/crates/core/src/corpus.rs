//! Labeled dialogue data: tokenization, corpus files and the vocabulary.
//!
//! Corpus files come in two UTF-8 flavours:
//!
//! - TSV, one `post<TAB>response<TAB>emotion` record per line
//! - JSON lines, one `{"post": .., "response": .., "emotion": ..}` object per line
//!
//! Blank lines are skipped in both. The vocabulary file is one
//! `token<TAB>id` line per entry, in id order.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::{Error, Result, TokenId};

pub const PAD: TokenId = 0;
pub const UNK: TokenId = 1;
pub const BOS: TokenId = 2;
pub const EOS: TokenId = 3;
/// Number of reserved ids at the start of every vocabulary.
pub const RESERVED: usize = 4;

const RESERVED_TOKENS: [&str; RESERVED] = ["<pad>", "<unk>", "<s>", "</s>"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmotionLabel {
    Happy,
    Angry,
    Disgust,
    Sad,
    Like,
    Neutral,
}

impl EmotionLabel {
    /// All labels in tie-break order.
    pub const ALL: [EmotionLabel; 6] = [
        EmotionLabel::Happy,
        EmotionLabel::Angry,
        EmotionLabel::Disgust,
        EmotionLabel::Sad,
        EmotionLabel::Like,
        EmotionLabel::Neutral,
    ];
    pub const COUNT: usize = 6;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EmotionLabel::Happy => "happy",
            EmotionLabel::Angry => "angry",
            EmotionLabel::Disgust => "disgust",
            EmotionLabel::Sad => "sad",
            EmotionLabel::Like => "like",
            EmotionLabel::Neutral => "neutral",
        }
    }
}

impl fmt::Display for EmotionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EmotionLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_lowercase();
        EmotionLabel::ALL
            .into_iter()
            .find(|l| l.as_str() == lower)
            .ok_or_else(|| Error::UnknownLabel {
                line: None,
                label: s.trim().to_string(),
            })
    }
}

// Scripts written without spaces between words; tokenized per character.
fn is_unsegmented(ch: char) -> bool {
    matches!(ch as u32,
        0x0E00..=0x0EFF     // Thai, Lao
        | 0x1000..=0x109F   // Myanmar
        | 0x1780..=0x17FF   // Khmer
        | 0x3040..=0x30FF   // Hiragana, Katakana
        | 0x3400..=0x4DBF   // CJK extension A
        | 0x4E00..=0x9FFF   // CJK unified ideographs
        | 0xF900..=0xFAFF   // CJK compatibility ideographs
        | 0x20000..=0x2FA1F)
}

// Combining marks keep their base character's word together.
fn is_word_char(ch: char) -> bool {
    ch.is_alphanumeric()
        || matches!(ch as u32,
            0x0300..=0x036F | 0x0900..=0x0DFF | 0x1AB0..=0x1AFF | 0x1DC0..=0x1DFF
            | 0x20D0..=0x20FF | 0xFE20..=0xFE2F)
}

/// Splits text into tokens.
///
/// NFKC-normalizes, lowercases, splits on whitespace, emits every other
/// non-word character (punctuation, symbols) as its own token, and emits one
/// token per character for scripts without word spacing (Chinese, Japanese,
/// Thai, ...).
pub fn tokenize(text: &str) -> Vec<String> {
    fn flush(word: &mut String, out: &mut Vec<String>) {
        if !word.is_empty() {
            out.push(std::mem::take(word));
        }
    }

    let mut tokens = Vec::new();
    let mut word = String::new();
    for ch in text.nfkc() {
        if ch.is_whitespace() {
            flush(&mut word, &mut tokens);
        } else if is_unsegmented(ch) {
            flush(&mut word, &mut tokens);
            tokens.push(ch.to_string());
        } else if is_word_char(ch) {
            word.extend(ch.to_lowercase());
        } else {
            flush(&mut word, &mut tokens);
            tokens.push(ch.to_string());
        }
    }
    flush(&mut word, &mut tokens);
    tokens
}

/// Joins tokens back into display text.
///
/// Word tokens are space-separated; no space is placed before punctuation or
/// between characters of unsegmented scripts.
pub fn detokenize<S: AsRef<str>>(tokens: &[S]) -> String {
    let mut out = String::new();
    let mut prev_unsegmented = false;
    for (i, tok) in tokens.iter().enumerate() {
        let tok = tok.as_ref();
        let first = tok.chars().next().unwrap_or(' ');
        let unsegmented = is_unsegmented(first);
        let punct = !is_word_char(first) && !unsegmented;
        if i > 0 && !punct && !(unsegmented && prev_unsegmented) {
            out.push(' ');
        }
        out.push_str(tok);
        prev_unsegmented = unsegmented || punct;
    }
    out
}

/// A tokenized, labeled post-response pair as read from a corpus file.
#[derive(Debug, Clone, PartialEq)]
pub struct TextPair {
    pub post: Vec<String>,
    pub response: Vec<String>,
    pub label: EmotionLabel,
}

/// An encoded post-response pair; `post` and `response` are nonempty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DialoguePair {
    pub post: Vec<TokenId>,
    pub response: Vec<TokenId>,
    pub label: EmotionLabel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    Tsv,
    Jsonl,
}

impl CorpusFormat {
    /// `.jsonl`/`.json` is JSON lines, anything else TSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("json") => CorpusFormat::Jsonl,
            _ => CorpusFormat::Tsv,
        }
    }
}

#[derive(Deserialize)]
struct JsonRecord {
    post: String,
    response: String,
    emotion: String,
}

/// Reads a corpus file in file order.
pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<Vec<TextPair>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(BufReader::new(file), format).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn parse_corpus<R: Read>(reader: R, format: CorpusFormat) -> Result<Vec<TextPair>> {
    let mut pairs = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io("<corpus>", e))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let (post, response, emotion) = match format {
            CorpusFormat::Tsv => {
                let fields: Vec<&str> = line.split('\t').collect();
                if fields.len() != 3 {
                    return Err(Error::Malformed {
                        line: lineno,
                        reason: format!("expected 3 tab-separated fields, found {}", fields.len()),
                    });
                }
                (fields[0].to_string(), fields[1].to_string(), fields[2].to_string())
            }
            CorpusFormat::Jsonl => {
                let rec: JsonRecord = serde_json::from_str(line).map_err(|e| Error::Malformed {
                    line: lineno,
                    reason: e.to_string(),
                })?;
                (rec.post, rec.response, rec.emotion)
            }
        };
        let label = emotion.parse::<EmotionLabel>().map_err(|_| Error::UnknownLabel {
            line: Some(lineno),
            label: emotion.trim().to_string(),
        })?;
        let post = tokenize(&post);
        let response = tokenize(&response);
        if post.is_empty() || response.is_empty() {
            return Err(Error::Malformed {
                line: lineno,
                reason: "post and response must contain at least one token".into(),
            });
        }
        pairs.push(TextPair {
            post,
            response,
            label,
        });
    }
    Ok(pairs)
}

/// Writes pairs as TSV (tokens joined by single spaces).
pub fn write_tsv<W: Write>(mut out: W, pairs: &[TextPair]) -> std::io::Result<()> {
    for p in pairs {
        writeln!(out, "{}\t{}\t{}", p.post.join(" "), p.response.join(" "), p.label)?;
    }
    Ok(())
}

/// Bidirectional token/id map. Ids `0..4` are `<pad>`, `<unk>`, `<s>`, `</s>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, TokenId>,
}

impl Vocabulary {
    /// Builds from posts and responses; tokens seen fewer than `min_count`
    /// times are left out. Ids are assigned by frequency (descending), then
    /// lexicographically.
    pub fn build(pairs: &[TextPair], min_count: usize) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::Empty("corpus"));
        }
        if min_count == 0 {
            return Err(Error::invalid("min_count", "must be at least 1"));
        }
        let mut freq: HashMap<&str, usize> = HashMap::new();
        for p in pairs {
            for t in p.post.iter().chain(&p.response) {
                *freq.entry(t.as_str()).or_insert(0) += 1;
            }
        }
        let mut kept: Vec<(&str, usize)> = freq
            .into_iter()
            .filter(|&(t, c)| c >= min_count && !RESERVED_TOKENS.contains(&t))
            .collect();
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        Self::from_tokens(kept.into_iter().map(|(t, _)| t.to_string()))
    }

    /// Reserved tokens followed by `words` in the given order.
    pub fn from_tokens<I: IntoIterator<Item = String>>(words: I) -> Result<Self> {
        let mut tokens: Vec<String> = RESERVED_TOKENS.iter().map(|s| s.to_string()).collect();
        tokens.extend(words);
        if tokens.len() >= (1 << 24) {
            return Err(Error::invalid("vocabulary", "more than 2^24 entries"));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i as TokenId).is_some() {
                return Err(Error::invalid("vocabulary", format!("duplicate token {t:?}")));
            }
        }
        Ok(Vocabulary { tokens, index })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.len() == RESERVED
    }

    pub fn id(&self, token: &str) -> Option<TokenId> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: TokenId) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn is_reserved(id: TokenId) -> bool {
        (id as usize) < RESERVED
    }

    /// Ids of ordinary words (no reserved ids, no `<unk>`).
    pub fn word_ids(&self) -> impl Iterator<Item = TokenId> {
        RESERVED as TokenId..self.tokens.len() as TokenId
    }

    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<TokenId> {
        tokens
            .iter()
            .map(|t| self.id(t.as_ref()).unwrap_or(UNK))
            .collect()
    }

    pub fn encode_text(&self, text: &str) -> Vec<TokenId> {
        self.encode(&tokenize(text))
    }

    /// Out-of-range ids decode as `<unk>`.
    pub fn decode(&self, ids: &[TokenId]) -> Vec<String> {
        ids.iter()
            .map(|&i| self.token(i).unwrap_or(RESERVED_TOKENS[UNK as usize]).to_string())
            .collect()
    }

    pub fn decode_text(&self, ids: &[TokenId]) -> String {
        detokenize(&self.decode(ids))
    }

    pub fn encode_pair(&self, pair: &TextPair) -> DialoguePair {
        DialoguePair {
            post: self.encode(&pair.post),
            response: self.encode(&pair.response),
            label: pair.label,
        }
    }

    pub fn write<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut out = BufWriter::new(out);
        for (i, t) in self.tokens.iter().enumerate() {
            writeln!(out, "{t}\t{i}")?;
        }
        out.flush()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write(file).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut words = Vec::new();
        let mut seen = 0;
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            seen += 1;
            let (tok, id) = line
                .rsplit_once('\t')
                .ok_or_else(|| Error::format(path, i + 1, "expected token<TAB>id"))?;
            let id: usize = id
                .parse()
                .map_err(|_| Error::format(path, i + 1, format!("bad id {id:?}")))?;
            if id != i {
                return Err(Error::format(path, i + 1, format!("id {id} out of sequence")));
            }
            if i < RESERVED {
                if tok != RESERVED_TOKENS[i] {
                    return Err(Error::format(path, i + 1, format!("expected reserved token {}", RESERVED_TOKENS[i])));
                }
            } else {
                words.push(tok.to_string());
            }
        }
        if seen < RESERVED {
            return Err(Error::format(path, seen, "missing reserved tokens"));
        }
        Vocabulary::from_tokens(words)
    }
}
