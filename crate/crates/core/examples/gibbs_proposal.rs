//! The word distribution a single replace or insert proposal samples from,
//! on the full vocabulary and on the default shortlist.
//!
//! cargo run --release -p emoanneal --example gibbs_proposal

use emoanneal::anneal::{EditKind, SearchContext, Shortlist};
use emoanneal::corpus::EmotionLabel;
use emoanneal::objective::{Objective, ObjectiveConfig};
use emoanneal::pipeline::{Models, TrainConfig};
use emoanneal::synth;

fn main() -> emoanneal::Result<()> {
    let data = synth::fixture();
    let (models, _) = Models::train(&data.train, None, &TrainConfig::default())?;
    let v = &models.vocab;
    let objective = Objective::new(&models.scorer, &models.classifier, ObjectiveConfig::default())?;
    let ctx = SearchContext::new(objective, &v.encode_text("have you seen the oven ?"), EmotionLabel::Angry);
    let y = v.encode_text("crust nice");

    for (kind, t) in [(EditKind::Replace, 1), (EditKind::Insert, 2)] {
        for list in [Shortlist::Full, Shortlist::Top(10)] {
            let words = ctx.shortlist(&y, t, kind, list);
            let dist = ctx.gibbs_word_distribution(&y, t, kind, &words)?;
            let mut ranked: Vec<(f64, &str)> = dist.iter().zip(&words).map(|(&p, &w)| (p, v.token(w).unwrap())).collect();
            ranked.sort_by(|a, b| b.0.total_cmp(&a.0));
            let top: Vec<String> = ranked.iter().take(6).map(|(p, w)| format!("{w} {p:.3}")).collect();
            println!("{kind} at {t}, shortlist {list} ({} words): {}", words.len(), top.join(", "));
        }
    }
    Ok(())
}
