//! One annealing run with a warm schedule, its JSON-lines trace, and a replay
//! of the accepted edits.
//!
//! cargo run --release -p emoanneal --example anneal_trace

use emoanneal::anneal::{run_sa, SaConfig, SaTrace, SearchContext};
use emoanneal::cli::print_trace;
use emoanneal::corpus::EmotionLabel;
use emoanneal::decode::{initial_candidate, DbsConfig};
use emoanneal::objective::{Objective, ObjectiveConfig, ScoreMode};
use emoanneal::pipeline::{Models, TrainConfig};
use emoanneal::synth;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = synth::fixture();
    let (models, _) = Models::train(&data.train, None, &TrainConfig::default())?;
    let post = models.vocab.encode_text("have you seen the oven ?");
    let init = initial_candidate(&models.scorer, &post, &DbsConfig::default())?;

    let objective = Objective::new(
        &models.scorer,
        &models.classifier,
        ObjectiveConfig {
            alpha: 8.0,
            mode: ScoreMode::PerToken,
        },
    )?;
    let ctx = SearchContext::new(objective, &post, EmotionLabel::Disgust);
    let cfg = SaConfig {
        tau_init: 1.0,
        decay: 0.04,
        max_iters: 30,
        seed: 42,
        ..SaConfig::default()
    };
    let (best, trace) = run_sa(&ctx, &init.tokens, &cfg)?;
    print_trace(&trace, Some(&models.vocab), &mut std::io::stdout().lock())?;

    let jsonl = trace.to_jsonl();
    println!("\ntrace: {} JSON lines, first: {}", jsonl.lines().count(), jsonl.lines().next().unwrap_or(""));
    let back = SaTrace::read_jsonl(jsonl.as_bytes())?;
    let states = back[0].replay()?;
    println!(
        "replayed {} states; best state {} is {:?} (log_f {:.4})",
        states.len(),
        back[0].best_state,
        models.vocab.decode_text(&states[back[0].best_state]),
        best.log_f
    );
    Ok(())
}
