use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::EmotionLabel;
use crate::{Error, Result, TokenId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EditKind {
    Replace,
    Insert,
    Delete,
}

impl EditKind {
    /// Order used by `op_weights`.
    pub const ALL: [EditKind; 3] = [EditKind::Replace, EditKind::Insert, EditKind::Delete];

    pub fn as_str(self) -> &'static str {
        match self {
            EditKind::Replace => "replace",
            EditKind::Insert => "insert",
            EditKind::Delete => "delete",
        }
    }
}

impl fmt::Display for EditKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EditKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EditKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::invalid("edit kind", s.to_string()))
    }
}

/// One word-level edit. Positions are 0-based; an insert at `position` puts
/// the new word before the current word there (`position == len` appends).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditOp {
    pub kind: EditKind,
    pub position: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub word: Option<TokenId>,
}

impl EditOp {
    pub fn replace(position: usize, word: TokenId) -> Self {
        EditOp {
            kind: EditKind::Replace,
            position,
            word: Some(word),
        }
    }

    pub fn insert(position: usize, word: TokenId) -> Self {
        EditOp {
            kind: EditKind::Insert,
            position,
            word: Some(word),
        }
    }

    pub fn delete(position: usize) -> Self {
        EditOp {
            kind: EditKind::Delete,
            position,
            word: None,
        }
    }

    pub fn apply(&self, y: &[TokenId]) -> Result<Vec<TokenId>> {
        let bad = |why: &str| Error::Invariant(format!("cannot apply {self:?} to length {}: {why}", y.len()));
        let mut out = y.to_vec();
        match (self.kind, self.word) {
            (EditKind::Replace, Some(w)) if self.position < y.len() => out[self.position] = w,
            (EditKind::Insert, Some(w)) if self.position <= y.len() => out.insert(self.position, w),
            (EditKind::Delete, None) if self.position < y.len() => {
                out.remove(self.position);
            }
            (EditKind::Delete, Some(_)) => return Err(bad("delete carries a word")),
            (_, None) if self.kind != EditKind::Delete => return Err(bad("missing word")),
            _ => return Err(bad("position out of range")),
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub iteration: usize,
    pub tau: f64,
    pub op: EditOp,
    pub proposal_log_f: f64,
    pub incumbent_log_f: f64,
    /// Score difference in the objective's comparison space.
    pub delta: f64,
    pub acceptance: f64,
    pub accepted: bool,
    /// The proposal `y*`.
    pub tokens: Vec<TokenId>,
}

/// Full record of one annealing run.
///
/// States are numbered from 0 (`initial`) to `steps.len()`; state `k + 1` is
/// the incumbent after step `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SaTrace {
    pub post: Vec<TokenId>,
    pub target: EmotionLabel,
    pub initial: Vec<TokenId>,
    pub initial_log_f: f64,
    pub steps: Vec<StepRecord>,
    pub best_state: usize,
    pub best_log_f: f64,
    /// Resolved run configuration, echoed into the header record.
    pub config: Option<serde_json::Value>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum Line {
    Start {
        post: Vec<TokenId>,
        target: EmotionLabel,
        initial: Vec<TokenId>,
        initial_log_f: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        config: Option<serde_json::Value>,
    },
    Step(StepRecord),
    End {
        best_state: usize,
        best_log_f: f64,
    },
}

impl SaTrace {
    /// Every state `y(0) .. y(K)` rebuilt by applying accepted edits in order.
    /// Fails if an accepted edit does not reproduce its recorded proposal.
    pub fn replay(&self) -> Result<Vec<Vec<TokenId>>> {
        let mut states = Vec::with_capacity(self.steps.len() + 1);
        let mut y = self.initial.clone();
        states.push(y.clone());
        for s in &self.steps {
            let proposal = s.op.apply(&y)?;
            if proposal != s.tokens {
                return Err(Error::Invariant(format!("step {}: edit does not reproduce the proposal", s.iteration)));
            }
            if s.accepted {
                y = proposal;
            }
            states.push(y.clone());
        }
        Ok(states)
    }

    pub fn final_state(&self) -> Result<Vec<TokenId>> {
        Ok(self.replay()?.pop().unwrap_or_default())
    }

    pub fn best_tokens(&self) -> Result<Vec<TokenId>> {
        self.replay()?
            .into_iter()
            .nth(self.best_state)
            .ok_or_else(|| Error::Invariant("best state out of range".into()))
    }

    pub fn accepted_count(&self) -> usize {
        self.steps.iter().filter(|s| s.accepted).count()
    }

    /// A start record, one record per step, and an end record.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let start = Line::Start {
            post: self.post.clone(),
            target: self.target,
            initial: self.initial.clone(),
            initial_log_f: self.initial_log_f,
            config: self.config.clone(),
        };
        writeln!(out, "{}", serde_json::to_string(&start)?)?;
        for s in &self.steps {
            writeln!(out, "{}", serde_json::to_string(&Line::Step(s.clone()))?)?;
        }
        let end = Line::End {
            best_state: self.best_state,
            best_log_f: self.best_log_f,
        };
        writeln!(out, "{}", serde_json::to_string(&end)?)?;
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("json is utf-8")
    }

    /// Reads every trace in a JSON-lines stream (one per start record).
    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Vec<SaTrace>> {
        let mut traces = Vec::new();
        let mut open: Option<SaTrace> = None;
        for (i, line) in input.lines().enumerate() {
            let lineno = i + 1;
            let line = line.map_err(|e| Error::Malformed {
                line: lineno,
                reason: e.to_string(),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: Line = serde_json::from_str(&line).map_err(|e| Error::Malformed {
                line: lineno,
                reason: e.to_string(),
            })?;
            let misplaced = |what: &str| Error::Malformed {
                line: lineno,
                reason: format!("{what} record outside a trace"),
            };
            match rec {
                Line::Start {
                    post,
                    target,
                    initial,
                    initial_log_f,
                    config,
                } => {
                    if open.is_some() {
                        return Err(misplaced("start"));
                    }
                    open = Some(SaTrace {
                        post,
                        target,
                        initial,
                        initial_log_f,
                        steps: Vec::new(),
                        best_state: 0,
                        best_log_f: initial_log_f,
                        config,
                    });
                }
                Line::Step(s) => open.as_mut().ok_or_else(|| misplaced("step"))?.steps.push(s),
                Line::End { best_state, best_log_f } => {
                    let mut t = open.take().ok_or_else(|| misplaced("end"))?;
                    t.best_state = best_state;
                    t.best_log_f = best_log_f;
                    traces.push(t);
                }
            }
        }
        if open.is_some() {
            return Err(Error::Malformed {
                line: 0,
                reason: "trace not terminated by an end record".into(),
            });
        }
        Ok(traces)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn apply_edits() {
        let y = [5, 6, 7];
        assert_eq!(EditOp::replace(1, 9).apply(&y).unwrap(), vec![5, 9, 7]);
        assert_eq!(EditOp::insert(0, 9).apply(&y).unwrap(), vec![9, 5, 6, 7]);
        assert_eq!(EditOp::insert(3, 9).apply(&y).unwrap(), vec![5, 6, 7, 9]);
        assert_eq!(EditOp::delete(2).apply(&y).unwrap(), vec![5, 6]);
        assert!(EditOp::delete(3).apply(&y).is_err());
        assert!(EditOp::insert(4, 9).apply(&y).is_err());
        let no_word = EditOp {
            kind: EditKind::Replace,
            position: 0,
            word: None,
        };
        assert!(no_word.apply(&y).is_err());
    }

    #[test]
    fn jsonl_round_trip() {
        let trace = SaTrace {
            post: vec![4, 5],
            target: EmotionLabel::Sad,
            initial: vec![6, 7],
            initial_log_f: -12.25,
            steps: vec![StepRecord {
                iteration: 0,
                tau: 0.015,
                op: EditOp::insert(0, 9),
                proposal_log_f: -11.0 / 3.0,
                incumbent_log_f: -12.25,
                delta: 1e-300,
                acceptance: 1.0,
                accepted: true,
                tokens: vec![9, 6, 7],
            }],
            best_state: 1,
            best_log_f: -11.0 / 3.0,
            config: Some(serde_json::json!({"alpha": 8.0})),
        };
        let text = trace.to_jsonl();
        assert_eq!(text.lines().count(), 3);
        let back = SaTrace::read_jsonl(text.as_bytes()).unwrap();
        assert_eq!(back, vec![trace.clone()]);
        assert_eq!(trace.best_tokens().unwrap(), vec![9, 6, 7]);
    }

    #[test]
    fn unterminated_trace_is_rejected() {
        let line = r#"{"record":"start","post":[],"target":"happy","initial":[5],"initial_log_f":-1.0}"#;
        assert!(SaTrace::read_jsonl(line.as_bytes()).is_err());
    }
}
