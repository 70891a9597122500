mod common;

use std::sync::OnceLock;

use emoanneal::anneal::{propose, run_sa, EditKind, SaConfig, SaTrace, SearchContext, Shortlist};
use emoanneal::corpus::EmotionLabel;
use emoanneal::objective::{Objective, ObjectiveConfig, ScoreMode};
use emoanneal::pipeline::Models;
use emoanneal::rng::SaRng;
use emoanneal::TokenId;
use proptest::prelude::*;

fn models() -> &'static [Models] {
    static M: OnceLock<Vec<Models>> = OnceLock::new();
    M.get_or_init(|| {
        let mut rng = SaRng::seed_from_u64(31);
        (0..4).map(|i| common::random_models(&mut rng, 6 + 6 * i, 60, 5, 0.3)).collect()
    })
}

fn context<'m>(m: &'m Models, alpha: f64, mode: ScoreMode, x: &[TokenId], e: EmotionLabel) -> SearchContext<'m> {
    let objective = Objective::new(&m.scorer, &m.classifier, ObjectiveConfig { alpha, mode }).unwrap();
    SearchContext::new(objective, x, e)
}

#[derive(Debug, Clone)]
struct Case {
    model: usize,
    alpha: f64,
    per_token: bool,
    target: usize,
    seed: u64,
    post: Vec<usize>,
    initial: Vec<usize>,
    tau_init: f64,
    iters: usize,
    weights: [f64; 3],
    full: bool,
}

fn cases() -> impl Strategy<Value = Case> {
    (
        (0usize..4, 0.0f64..30.0, any::<bool>(), 0usize..6, any::<u64>()),
        (
            prop::collection::vec(0usize..1000, 1..5),
            prop::collection::vec(0usize..1000, 1..6),
            prop_oneof![Just(0.0), Just(0.015), 0.0f64..2.0],
            0usize..30,
            [0.0f64..2.0, 0.0f64..2.0, 0.0f64..2.0],
            any::<bool>(),
        ),
    )
        .prop_map(|((model, alpha, per_token, target, seed), (post, initial, tau_init, iters, weights, full))| Case {
            model,
            alpha,
            per_token,
            target,
            seed,
            post,
            initial,
            tau_init,
            iters,
            weights,
            full,
        })
}

fn run_case(c: &Case) -> (f64, emoanneal::objective::ScoredCandidate, SaTrace) {
    let m = &models()[c.model];
    let ids = common::word_ids(m);
    let pick = |v: &[usize]| -> Vec<TokenId> { v.iter().map(|&i| ids[i % ids.len()]).collect() };
    let mode = if c.per_token { ScoreMode::PerToken } else { ScoreMode::Raw };
    let ctx = context(m, c.alpha, mode, &pick(&c.post), EmotionLabel::ALL[c.target]);
    let initial = pick(&c.initial);
    let cfg = SaConfig {
        tau_init: c.tau_init,
        max_iters: c.iters,
        seed: c.seed,
        op_weights: c.weights,
        shortlist: if c.full { Shortlist::Full } else { Shortlist::Top(6) },
        max_len: 8,
        ..SaConfig::default()
    };
    let start = ctx.score(&initial).unwrap().log_f;
    let (best, trace) = run_sa(&ctx, &initial, &cfg).unwrap();
    (start, best, trace)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn best_never_below_initial_and_never_empty(c in cases()) {
        let (start, best, trace) = run_case(&c);
        prop_assert!(best.log_f >= start);
        prop_assert!(!best.tokens.is_empty());
        prop_assert!(trace.steps.iter().all(|s| !s.tokens.is_empty() && s.tokens.len() <= 8));
        prop_assert_eq!(trace.best_log_f, best.log_f);
    }

    #[test]
    fn replay_reconstructs_every_state(c in cases()) {
        let (_, best, trace) = run_case(&c);
        let states = trace.replay().unwrap();
        prop_assert_eq!(states.len(), trace.steps.len() + 1);
        prop_assert_eq!(&states[trace.best_state], &best.tokens);
        let back = SaTrace::read_jsonl(trace.to_jsonl().as_bytes()).unwrap();
        prop_assert_eq!(back.len(), 1);
        prop_assert_eq!(&back[0], &trace);
    }

    #[test]
    fn zero_temperature_is_a_hill_climb(mut c in cases()) {
        c.tau_init = 0.0;
        let (_, _, trace) = run_case(&c);
        let mut incumbent = trace.initial_log_f;
        for s in &trace.steps {
            prop_assert_eq!(s.tau, 0.0);
            prop_assert_eq!(s.incumbent_log_f, incumbent);
            if s.accepted {
                prop_assert!(s.proposal_log_f >= incumbent);
                incumbent = s.proposal_log_f;
            }
        }
    }

    #[test]
    fn same_seed_same_trace(c in cases()) {
        let (_, a, ta) = run_case(&c);
        let (_, b, tb) = run_case(&c);
        prop_assert_eq!(a, b);
        prop_assert_eq!(ta.to_jsonl(), tb.to_jsonl());
    }
}

#[test]
fn delete_only_weights_fall_back_to_replace_at_min_len() {
    let m = &models()[0];
    let ids = common::word_ids(m);
    let ctx = context(m, 8.0, ScoreMode::Raw, &ids[..2], EmotionLabel::Sad);
    let cfg = SaConfig {
        op_weights: [0.0, 0.0, 1.0],
        max_iters: 40,
        ..SaConfig::default()
    };
    let (_, trace) = run_sa(&ctx, &ids[..1], &cfg).unwrap();
    assert!(trace.steps.iter().all(|s| s.op.kind == EditKind::Replace && s.tokens.len() == 1));
}

#[test]
fn gibbs_samples_follow_the_computed_distribution() {
    let mut rng = SaRng::seed_from_u64(5);
    let m = common::random_models(&mut rng, 5, 30, 4, 0.3);
    let ids = common::word_ids(&m);
    assert!(ids.len() <= 5);
    let ctx = context(&m, 2.0, ScoreMode::Raw, &ids[..2], EmotionLabel::Happy);
    let y = vec![ids[0]];
    let words = ctx.shortlist(&y, 0, EditKind::Replace, Shortlist::Full);
    let dist = ctx.gibbs_word_distribution(&y, 0, EditKind::Replace, &words).unwrap();
    let cfg = SaConfig {
        op_weights: [1.0, 0.0, 0.0],
        shortlist: Shortlist::Full,
        ..SaConfig::default()
    };
    let draws = 100_000;
    let mut counts = vec![0usize; words.len()];
    for _ in 0..draws {
        let op = propose(&ctx, &cfg, &y, &mut rng).unwrap();
        assert_eq!((op.kind, op.position), (EditKind::Replace, 0));
        counts[words.binary_search(&op.word.unwrap()).unwrap()] += 1;
    }
    let tv: f64 = 0.5 * counts.iter().zip(&dist).map(|(&c, p)| (c as f64 / draws as f64 - p).abs()).sum::<f64>();
    assert!(tv < 0.01, "total variation {tv}");
}

#[test]
fn insert_positions_cover_both_ends() {
    let m = &models()[1];
    let ids = common::word_ids(m);
    let ctx = context(m, 1.0, ScoreMode::PerToken, &ids[..3], EmotionLabel::Like);
    let cfg = SaConfig {
        op_weights: [0.0, 1.0, 0.0],
        ..SaConfig::default()
    };
    let y = ids[..3].to_vec();
    let mut rng = SaRng::seed_from_u64(12);
    let mut seen = [0usize; 4];
    for _ in 0..4000 {
        seen[propose(&ctx, &cfg, &y, &mut rng).unwrap().position] += 1;
    }
    assert!(seen.iter().all(|&n| (850..1150).contains(&n)), "{seen:?}");
}
