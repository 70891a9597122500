//! Plain beam search against diverse beam search on the same post.
//!
//! cargo run --release -p emoanneal --example beam_vs_diverse

use emoanneal::decode::{beam_search, diverse_beam_search, DbsConfig};
use emoanneal::pipeline::{Models, TrainConfig};
use emoanneal::synth;

fn main() -> emoanneal::Result<()> {
    let data = synth::fixture();
    let (models, _) = Models::train(&data.train, None, &TrainConfig::default())?;
    let post = models.vocab.encode_text("so the puppy was bark again");

    println!("beam search, B=6");
    for h in beam_search(&models.scorer, &post, 6, 20)? {
        println!("  {:9.4}  {}", h.score, models.vocab.decode_text(&h.tokens));
    }
    for diversity in [0.0, 0.5, 5.0] {
        let cfg = DbsConfig {
            beam_size: 6,
            groups: 3,
            diversity,
            max_len: 20,
        };
        println!("diverse beam search, B=6 G=3 lambda={diversity}");
        for h in diverse_beam_search(&models.scorer, &post, &cfg)? {
            println!("  {:9.4}  {}", h.score, models.vocab.decode_text(&h.tokens));
        }
    }
    Ok(())
}
