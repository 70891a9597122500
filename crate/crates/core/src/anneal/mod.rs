//! Simulated-annealing edit search.
//!
//! Each step draws an edit kind (replace, insert, delete) from `op_weights`,
//! an edit position, and for replace/insert a word from the Gibbs conditional
//! over a shortlist. The proposal is scored in full and accepted with
//! probability `min{1, exp(delta / tau)}` where `tau = max{0, tau_init - C t}`.
//! The best state seen is returned, not the last one.
//!
//! Random draws per step, in order: one uniform for the edit kind, one for
//! the position, one for the word (replace/insert only), one for acceptance.
//! All come from [`SaRng`](crate::rng::SaRng) seeded with `SaConfig::seed`.

mod gibbs;
mod trace;

pub use gibbs::{softmax, SearchContext, Shortlist, DEFAULT_SHORTLIST};
pub use trace::{EditKind, EditOp, SaTrace, StepRecord};

use serde::{Deserialize, Serialize};

use crate::objective::{score_delta, ScoreMode, ScoredCandidate};
use crate::rng::SaRng;
use crate::{Error, Result, TokenId};

pub const DEFAULT_TAU_INIT: f64 = 0.015;
pub const DEFAULT_DECAY: f64 = 0.03;
pub const DEFAULT_ITERS: usize = 50;
pub const DEFAULT_MIN_LEN: usize = 1;
pub const DEFAULT_MAX_LEN: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaConfig {
    pub tau_init: f64,
    /// Temperature decrement per step (`C`).
    pub decay: f64,
    pub max_iters: usize,
    pub shortlist: Shortlist,
    pub min_len: usize,
    pub max_len: usize,
    pub seed: u64,
    /// Unnormalized weights for (replace, insert, delete).
    pub op_weights: [f64; 3],
}

impl Default for SaConfig {
    fn default() -> Self {
        SaConfig {
            tau_init: DEFAULT_TAU_INIT,
            decay: DEFAULT_DECAY,
            max_iters: DEFAULT_ITERS,
            shortlist: Shortlist::default(),
            min_len: DEFAULT_MIN_LEN,
            max_len: DEFAULT_MAX_LEN,
            seed: 0,
            op_weights: [1.0, 1.0, 1.0],
        }
    }
}

impl SaConfig {
    pub fn validate(&self) -> Result<()> {
        let nonneg = |v: f64| v >= 0.0 && v.is_finite();
        if !nonneg(self.tau_init) {
            return Err(Error::invalid("tau_init", self.tau_init.to_string()));
        }
        if !nonneg(self.decay) {
            return Err(Error::invalid("decay", self.decay.to_string()));
        }
        if self.min_len == 0 || self.min_len > self.max_len {
            return Err(Error::invalid("length bounds", format!("need 1 <= min_len <= max_len, got {}..{}", self.min_len, self.max_len)));
        }
        if !self.op_weights.iter().all(|&w| nonneg(w)) {
            return Err(Error::invalid("op_weights", format!("{:?}", self.op_weights)));
        }
        Ok(())
    }
}

/// `max{0, tau_init - C t}`.
pub fn temperature(cfg: &SaConfig, t: usize) -> f64 {
    let tau = cfg.tau_init - cfg.decay * t as f64;
    if tau <= 0.0 || (cfg.decay > 0.0 && t as f64 >= (cfg.tau_init / cfg.decay).ceil()) {
        0.0
    } else {
        tau
    }
}

/// Uniform 0-based position among `slots`.
pub fn propose_position(rng: &mut SaRng, slots: usize) -> usize {
    rng.index(slots)
}

/// `min{1, exp(delta / tau)}`; at `tau = 0`, 1 if `delta >= 0` else 0.
pub fn acceptance_from_delta(delta: f64, tau: f64) -> f64 {
    if delta >= 0.0 {
        1.0
    } else if tau <= 0.0 {
        0.0
    } else {
        (delta / tau).exp().min(1.0)
    }
}

/// Acceptance probability for moving from a candidate scoring `log_f_old` to
/// one scoring `log_f_new`. At `tau = 0` the sign is taken from the log
/// scores, so underflow in raw mode cannot turn a loss into a tie.
pub fn acceptance_probability(log_f_new: f64, log_f_old: f64, tau: f64, mode: ScoreMode) -> f64 {
    if tau <= 0.0 {
        return if log_f_new >= log_f_old { 1.0 } else { 0.0 };
    }
    acceptance_from_delta(score_delta(log_f_new, log_f_old, mode), tau)
}

/// Edit kind weights after the length limits: no delete at `min_len`, no
/// insert at `max_len`.
pub fn allowed_weights(cfg: &SaConfig, len: usize) -> [f64; 3] {
    let mut w = cfg.op_weights;
    if len <= cfg.min_len {
        w[2] = 0.0;
    }
    if len >= cfg.max_len {
        w[1] = 0.0;
    }
    w
}

fn draw_kind(rng: &mut SaRng, weights: &[f64; 3]) -> EditKind {
    let total: f64 = weights.iter().sum();
    let u = rng.uniform();
    if !(total > 0.0) {
        return EditKind::Replace;
    }
    let target = u * total;
    let mut acc = 0.0;
    let mut pick = EditKind::Replace;
    for (kind, &w) in EditKind::ALL.iter().zip(weights) {
        if w > 0.0 {
            acc += w;
            pick = *kind;
            if target < acc {
                break;
            }
        }
    }
    pick
}

/// Proposes an edit of `current` without deciding acceptance.
pub fn propose(ctx: &SearchContext<'_>, cfg: &SaConfig, current: &[TokenId], rng: &mut SaRng) -> Result<EditOp> {
    let len = current.len();
    let kind = draw_kind(rng, &allowed_weights(cfg, len));
    let slots = if kind == EditKind::Insert { len + 1 } else { len };
    let t = propose_position(rng, slots);
    if kind == EditKind::Delete {
        return Ok(EditOp::delete(t));
    }
    let words = ctx.shortlist(current, t, kind, cfg.shortlist);
    let dist = ctx.gibbs_word_distribution(current, t, kind, &words)?;
    let i = rng
        .categorical(&dist)
        .ok_or_else(|| Error::Invariant("Gibbs distribution has no mass".into()))?;
    Ok(EditOp {
        kind,
        position: t,
        word: Some(words[i]),
    })
}

/// One annealing step from `current` at iteration `k`. Returns the next
/// incumbent and the step's record.
pub fn sa_step(
    ctx: &SearchContext<'_>,
    cfg: &SaConfig,
    k: usize,
    current: &ScoredCandidate,
    rng: &mut SaRng,
) -> Result<(ScoredCandidate, StepRecord)> {
    let op = propose(ctx, cfg, &current.tokens, rng)?;
    let proposal = ctx.score(&op.apply(&current.tokens)?)?;
    let tau = temperature(cfg, k);
    let mode = ctx.objective().config.mode;
    let p = acceptance_probability(proposal.log_f, current.log_f, tau, mode);
    let accepted = rng.uniform() < p;
    let record = StepRecord {
        iteration: k,
        tau,
        op,
        proposal_log_f: proposal.log_f,
        incumbent_log_f: current.log_f,
        delta: score_delta(proposal.log_f, current.log_f, mode),
        acceptance: p,
        accepted,
        tokens: proposal.tokens.clone(),
    };
    let next = if accepted { proposal } else { current.clone() };
    Ok((next, record))
}

/// Runs `max_iters` steps from `initial`; returns the best state seen (ties
/// keep the earliest) and the full trace.
pub fn run_sa(ctx: &SearchContext<'_>, initial: &[TokenId], cfg: &SaConfig) -> Result<(ScoredCandidate, SaTrace)> {
    cfg.validate()?;
    if initial.is_empty() {
        return Err(Error::invalid("initial candidate", "empty"));
    }
    let mut rng = SaRng::seed_from_u64(cfg.seed);
    let start = ctx.score(initial)?;
    let mut best = start.clone();
    let mut best_state = 0;
    let mut current = start.clone();
    let mut steps = Vec::with_capacity(cfg.max_iters);
    for k in 0..cfg.max_iters {
        let (next, record) = sa_step(ctx, cfg, k, &current, &mut rng)?;
        steps.push(record);
        current = next;
        if current.log_f > best.log_f {
            best = current.clone();
            best_state = k + 1;
        }
    }
    let trace = SaTrace {
        post: ctx.post().to_vec(),
        target: ctx.target(),
        initial: initial.to_vec(),
        initial_log_f: start.log_f,
        steps,
        best_state,
        best_log_f: best.log_f,
        config: None,
    };
    Ok((best, trace))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(tau_init: f64, decay: f64) -> SaConfig {
        SaConfig {
            tau_init,
            decay,
            ..Default::default()
        }
    }

    #[test]
    fn schedule_examples() {
        assert_eq!(temperature(&SaConfig::default(), 0), 0.015);
        assert_eq!(temperature(&SaConfig::default(), 1), 0.0);
        assert_eq!(temperature(&cfg(1.0, 0.0), 1000), 1.0);
        assert_eq!(temperature(&cfg(0.3, 0.1), 3), 0.0);
        assert!(temperature(&cfg(0.3, 0.1), 2) > 0.0);
    }

    #[test]
    fn acceptance_examples() {
        assert_eq!(acceptance_from_delta(0.0, 0.5), 1.0);
        assert_eq!(acceptance_from_delta(3.0, 1e-9), 1.0);
        let tau = 0.2;
        assert!((acceptance_from_delta(-tau * 2f64.ln(), tau) - 0.5).abs() < 1e-12);
        assert_eq!(acceptance_probability(-10.0, -9.0, 0.0, ScoreMode::Raw), 0.0);
        assert_eq!(acceptance_probability(-9.0, -9.0, 0.0, ScoreMode::Raw), 1.0);
        // Both scores underflow in probability space: still a near-tie.
        assert_eq!(acceptance_probability(-2000.0, -1990.0, 0.01, ScoreMode::Raw), 1.0);
        assert_eq!(acceptance_probability(-2000.0, -1990.0, 0.0, ScoreMode::Raw), 0.0);
    }

    #[test]
    fn length_limits_suppress_ops() {
        let c = SaConfig {
            min_len: 1,
            max_len: 3,
            ..Default::default()
        };
        assert_eq!(allowed_weights(&c, 1), [1.0, 1.0, 0.0]);
        assert_eq!(allowed_weights(&c, 3), [1.0, 0.0, 1.0]);
        assert_eq!(allowed_weights(&c, 2), [1.0, 1.0, 1.0]);
    }

    #[test]
    fn all_suppressed_falls_back_to_replace() {
        let mut rng = SaRng::seed_from_u64(3);
        for _ in 0..20 {
            assert_eq!(draw_kind(&mut rng, &[0.0, 0.0, 0.0]), EditKind::Replace);
        }
        for _ in 0..20 {
            assert_eq!(draw_kind(&mut rng, &[0.0, 0.0, 2.0]), EditKind::Delete);
        }
    }

    #[test]
    fn positions_are_uniform() {
        let mut rng = SaRng::seed_from_u64(11);
        let mut counts = [0usize; 4];
        let n = 100_000;
        for _ in 0..n {
            counts[propose_position(&mut rng, 4)] += 1;
        }
        for c in counts {
            assert!((c as f64 / n as f64 - 0.25).abs() < 0.01);
        }
        assert_eq!(propose_position(&mut rng, 1), 0);
    }

    #[test]
    fn config_validation() {
        assert!(SaConfig::default().validate().is_ok());
        assert!(SaConfig { min_len: 0, ..Default::default() }.validate().is_err());
        assert!(SaConfig { tau_init: -1.0, ..Default::default() }.validate().is_err());
        assert!(SaConfig { op_weights: [1.0, f64::NAN, 1.0], ..Default::default() }.validate().is_err());
    }

    #[test]
    fn shortlist_parse() {
        assert_eq!("full".parse::<Shortlist>().unwrap(), Shortlist::Full);
        assert_eq!("40".parse::<Shortlist>().unwrap(), Shortlist::Top(40));
        assert!("0".parse::<Shortlist>().is_err());
        assert_eq!(serde_json::to_string(&Shortlist::Top(500)).unwrap(), "\"500\"");
    }
}
