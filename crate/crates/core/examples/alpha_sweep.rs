//! Emotion accuracy and BLEU as the emotion weight grows.
//!
//! cargo run --release -p emoanneal --example alpha_sweep

use emoanneal::eval::write_sweep_csv;
use emoanneal::pipeline::{Models, Pipeline, PipelineConfig, TrainConfig};
use emoanneal::synth;

fn main() -> emoanneal::Result<()> {
    let data = synth::fixture();
    let (models, _) = Models::train(&data.train, Some(&data.judge), &TrainConfig::default())?;
    let pipeline = Pipeline::new(&models, PipelineConfig::default())?;
    let rows = pipeline.sweep_alpha(&data.test, &[0.0, 1.0, 2.0, 4.0, 8.0, 16.0, 64.0])?;
    write_sweep_csv(std::io::stdout().lock(), &rows)?;
    Ok(())
}
