//! Multinomial naive Bayes emotion posteriors and the marker words each
//! label ranks highest.
//!
//! cargo run --release -p emoanneal --example emotion_classifier

use emoanneal::corpus::{EmotionLabel, Vocabulary};
use emoanneal::emotion::EmotionClassifier;
use emoanneal::synth;

fn main() -> emoanneal::Result<()> {
    let data = synth::fixture();
    let vocab = Vocabulary::build(&data.train, 1)?;
    let encoded: Vec<_> = data.train.iter().map(|p| vocab.encode_pair(p)).collect();
    let clf = EmotionClassifier::train(encoded.iter().map(|p| (p.response.as_slice(), p.label)), vocab.len(), 1.0)?;

    for label in EmotionLabel::ALL {
        let top: Vec<&str> = clf.ranked_markers(label).iter().take(5).map(|&id| vocab.token(id).unwrap()).collect();
        println!("{:<8} {}", label.as_str(), top.join(" "));
    }
    println!();
    for text in ["crust nice haha", "crust nice", "crust nice sigh", "dog fine gross yuck"] {
        let ids = vocab.encode_text(text);
        let post = clf.posterior(&ids);
        let shown: Vec<String> = EmotionLabel::ALL.iter().map(|l| format!("{}={:.3}", l.as_str(), post[l.index()])).collect();
        println!("{text:<22} -> {:<8} {}", clf.classify(&ids).as_str(), shown.join(" "));
    }
    Ok(())
}
