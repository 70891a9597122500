//! BLEU, distinct-n, emotion accuracy and the embedding metrics on a few
//! hand-written outputs.
//!
//! cargo run -p emoanneal --example metrics

use emoanneal::corpus::{tokenize, EmotionLabel, Vocabulary};
use emoanneal::emotion::EmotionClassifier;
use emoanneal::eval::{bleu_n, distinct_n, embedding_metrics, emotion_accuracy};
use emoanneal::synth;

fn main() -> emoanneal::Result<()> {
    let refs: Vec<Vec<String>> = ["crust nice haha", "dog fine sigh", "team good damn"].map(tokenize).to_vec();
    let generic: Vec<Vec<String>> = ["nice", "nice", "nice"].map(tokenize).to_vec();
    let edited: Vec<Vec<String>> = ["crust nice haha", "dog nice sigh", "team nice yuck"].map(tokenize).to_vec();
    let posts: Vec<Vec<String>> = ["the pizza oven", "my puppy and the leash", "football match today"].map(tokenize).to_vec();

    for (name, outs) in [("generic", &generic), ("edited", &edited)] {
        println!(
            "{name:<8} BLEU-1 {:6.2}  BLEU-2 {:6.2}  dist-1 {:.3}  dist-2 {:.3}",
            bleu_n(outs, &refs, 1)?,
            bleu_n(outs, &refs, 2)?,
            distinct_n(outs, 1)?,
            distinct_n(outs, 2)?
        );
        let e = embedding_metrics(&synth::embeddings(16, 7), outs, &refs, &posts)?;
        println!(
            "         average {:.3}  greedy {:.3}  extreme {:.3}  coherence {:.3}  ({} scored, {} skipped)",
            e.average, e.greedy, e.extreme, e.coherence, e.scored_pairs, e.skipped_pairs
        );
    }

    let data = synth::fixture();
    let vocab = Vocabulary::build(&data.train, 1)?;
    let encoded: Vec<_> = data.judge.iter().map(|p| vocab.encode_pair(p)).collect();
    let judge = EmotionClassifier::train(encoded.iter().map(|p| (p.response.as_slice(), p.label)), vocab.len(), 1.0)?;
    let targets = [EmotionLabel::Happy, EmotionLabel::Sad, EmotionLabel::Disgust];
    for (name, outs) in [("generic", &generic), ("edited", &edited)] {
        let ids: Vec<_> = outs.iter().map(|o| vocab.encode(o)).collect();
        println!("{name:<8} emotion accuracy {:.3}", emotion_accuracy(&judge, &ids, &targets)?);
    }
    Ok(())
}
