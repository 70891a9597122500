//! Train on the synthetic corpus, then compare beam search alone against
//! beam search followed by annealing toward each pair's labeled emotion.
//!
//! cargo run --release -p emoanneal --example end_to_end

use std::time::Instant;

use emoanneal::pipeline::{Models, Pipeline, PipelineConfig, TrainConfig};
use emoanneal::synth;

fn main() -> emoanneal::Result<()> {
    let data = synth::fixture();
    let (models, warnings) = Models::train(&data.train, Some(&data.judge), &TrainConfig::default())?;
    for w in warnings {
        eprintln!("warning: {w}");
    }
    println!("vocabulary: {} entries, {} training pairs", models.vocab.len(), data.train.len());
    let table = synth::embeddings(16, 7);

    let mut cfg = PipelineConfig::default();
    for (name, iters) in [("beam search", 0), ("beam search + annealing", 50)] {
        cfg.sa.max_iters = iters;
        let start = Instant::now();
        let eval = Pipeline::new(&models, cfg.clone())?.evaluate(&data.test, Some(&table))?;
        let r = &eval.report;
        println!(
            "{name:<24} bleu1 {:6.2}  bleu2 {:6.2}  dist1 {:.3}  dist2 {:.3}  emotion acc {:.3}  ({:.1}s)",
            r.bleu1,
            r.bleu2,
            r.dist1,
            r.dist2,
            r.emotion_accuracy,
            start.elapsed().as_secs_f64()
        );
        for o in eval.outputs.iter().take(6) {
            println!("    [{:<7}] {}  =>  {}", o.target.as_str(), o.post, o.response);
        }
    }
    Ok(())
}
