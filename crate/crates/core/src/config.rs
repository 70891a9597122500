//! Flat `key=value` run configuration. Later sources override earlier ones:
//! defaults, then a config file, then command-line flags.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::anneal::{SaConfig, Shortlist};
use crate::decode::DbsConfig;
use crate::objective::{ObjectiveConfig, ScoreMode};
use crate::pipeline::{Decoder, PipelineConfig, TrainConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub train: TrainConfig,
    pub pipeline: PipelineConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            train: TrainConfig::default(),
            pipeline: PipelineConfig::default(),
        }
    }
}

/// Every key, in echo order.
pub const KEYS: &[&str] = &[
    "alpha",
    "score_mode",
    "gamma",
    "decoder",
    "beam_size",
    "groups",
    "diversity",
    "decode_max_len",
    "tau_init",
    "decay",
    "iters",
    "shortlist",
    "min_len",
    "max_len",
    "op_weights",
    "seed",
    "min_count",
    "ngram_order",
    "add_k",
    "ibm_iters",
    "laplace",
];

fn parse<T: FromStr>(key: &'static str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::invalid(key, format!("cannot parse {value:?}")))
}

fn parse_weights(value: &str) -> Result<[f64; 3]> {
    let parts: Vec<f64> = value
        .split(',')
        .map(|p| parse::<f64>("op_weights", p))
        .collect::<Result<_>>()?;
    parts
        .try_into()
        .map_err(|_| Error::invalid("op_weights", format!("{value:?} (expected replace,insert,delete)")))
}

impl RunConfig {
    pub fn objective(&self) -> ObjectiveConfig {
        self.pipeline.objective
    }

    pub fn dbs(&self) -> DbsConfig {
        self.pipeline.dbs
    }

    pub fn sa(&self) -> &SaConfig {
        &self.pipeline.sa
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let p = &mut self.pipeline;
        let t = &mut self.train;
        match key {
            "alpha" => p.objective.alpha = parse("alpha", value)?,
            "score_mode" => p.objective.mode = ScoreMode::from_str(value.trim())?,
            "gamma" => t.gamma = parse("gamma", value)?,
            "decoder" => p.decoder = Decoder::from_str(value.trim())?,
            "beam_size" => p.dbs.beam_size = parse("beam_size", value)?,
            "groups" => p.dbs.groups = parse("groups", value)?,
            "diversity" => p.dbs.diversity = parse("diversity", value)?,
            "decode_max_len" => p.dbs.max_len = parse("decode_max_len", value)?,
            "tau_init" => p.sa.tau_init = parse("tau_init", value)?,
            "decay" => p.sa.decay = parse("decay", value)?,
            "iters" => p.sa.max_iters = parse("iters", value)?,
            "shortlist" => p.sa.shortlist = Shortlist::from_str(value.trim())?,
            "min_len" => p.sa.min_len = parse("min_len", value)?,
            "max_len" => p.sa.max_len = parse("max_len", value)?,
            "op_weights" => p.sa.op_weights = parse_weights(value)?,
            "seed" => p.sa.seed = parse("seed", value)?,
            "min_count" => t.min_count = parse("min_count", value)?,
            "ngram_order" => t.ngram_order = parse("ngram_order", value)?,
            "add_k" => t.add_k = parse("add_k", value)?,
            "ibm_iters" => t.ibm_iters = parse("ibm_iters", value)?,
            "laplace" => t.laplace = parse("laplace", value)?,
            other => return Err(Error::invalid("config key", format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        let p = &self.pipeline;
        let t = &self.train;
        let w = p.sa.op_weights;
        Some(match key {
            "alpha" => p.objective.alpha.to_string(),
            "score_mode" => p.objective.mode.to_string(),
            "gamma" => t.gamma.to_string(),
            "decoder" => p.decoder.to_string(),
            "beam_size" => p.dbs.beam_size.to_string(),
            "groups" => p.dbs.groups.to_string(),
            "diversity" => p.dbs.diversity.to_string(),
            "decode_max_len" => p.dbs.max_len.to_string(),
            "tau_init" => p.sa.tau_init.to_string(),
            "decay" => p.sa.decay.to_string(),
            "iters" => p.sa.max_iters.to_string(),
            "shortlist" => p.sa.shortlist.to_string(),
            "min_len" => p.sa.min_len.to_string(),
            "max_len" => p.sa.max_len.to_string(),
            "op_weights" => format!("{},{},{}", w[0], w[1], w[2]),
            "seed" => p.sa.seed.to_string(),
            "min_count" => t.min_count.to_string(),
            "ngram_order" => t.ngram_order.to_string(),
            "add_k" => t.add_k.to_string(),
            "ibm_iters" => t.ibm_iters.to_string(),
            "laplace" => t.laplace.to_string(),
            _ => return None,
        })
    }

    /// Applies `key=value` lines; `#` starts a comment, blank lines are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Malformed {
                line: i + 1,
                reason: format!("expected key=value, found {line:?}"),
            })?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.apply_text(&text)
    }

    /// Every key with its resolved value.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        KEYS.iter().map(|&k| (k, self.get(k).expect("known key"))).collect()
    }

    /// `key=value` lines in [`KEYS`] order; parses back to the same config.
    pub fn echo(&self) -> String {
        self.entries().into_iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    /// The resolved values as a JSON object of strings.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Object(
            self.entries()
                .into_iter()
                .map(|(k, v)| (k.to_string(), serde_json::Value::String(v)))
                .collect(),
        )
    }

    pub fn validate(&self) -> Result<()> {
        self.pipeline.objective.validate()?;
        self.pipeline.decode_config().validate()?;
        self.pipeline.sa.validate()?;
        if !(0.0..=1.0).contains(&self.train.gamma) {
            return Err(Error::invalid("gamma", format!("{} not in [0, 1]", self.train.gamma)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = RunConfig::default();
        assert_eq!(c.get("alpha").unwrap(), "8");
        assert_eq!(c.get("tau_init").unwrap(), "0.015");
        assert_eq!(c.get("decay").unwrap(), "0.03");
        assert_eq!(c.get("iters").unwrap(), "50");
        assert_eq!(c.get("beam_size").unwrap(), "20");
        assert_eq!(c.get("groups").unwrap(), "20");
        assert_eq!(c.get("diversity").unwrap(), "0.5");
        assert_eq!(c.get("score_mode").unwrap(), "raw");
    }

    #[test]
    fn echo_round_trips() {
        let mut c = RunConfig::default();
        c.apply_text("alpha = 4\n# comment\nshortlist=full\nop_weights=2,1,0.5\n").unwrap();
        let mut back = RunConfig::default();
        back.apply_text(&c.echo()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.sa().op_weights, [2.0, 1.0, 0.5]);
    }

    #[test]
    fn bad_input() {
        let mut c = RunConfig::default();
        assert!(c.set("nope", "1").is_err());
        assert!(c.set("alpha", "x").is_err());
        assert!(c.set("op_weights", "1,2").is_err());
        assert!(c.apply_text("alpha 3").is_err());
    }
}
