//! The conditional fluency score: an interpolated n-gram model over responses
//! mixed with an IBM Model 1 translation table from post to response.
//!
//! cargo run --release -p emoanneal --example ngram_and_ibm1

use emoanneal::corpus::Vocabulary;
use emoanneal::lm::{ConditionalScorer, NGramModel, TranslationTable};
use emoanneal::synth;

fn main() -> emoanneal::Result<()> {
    let data = synth::fixture();
    let vocab = Vocabulary::build(&data.train, 1)?;
    let pairs: Vec<_> = data.train.iter().map(|p| vocab.encode_pair(p)).collect();
    let responses: Vec<_> = pairs.iter().map(|p| p.response.clone()).collect();

    let ngram = NGramModel::train(&responses, vocab.len(), 3, 0.01)?;
    let table = TranslationTable::train(&pairs, vocab.len(), 10)?;
    println!("EM corpus log-likelihood by iteration:");
    for (i, ll) in table.log_likelihood().iter().enumerate() {
        println!("  {i:>2}  {ll:.2}");
    }

    let post = vocab.encode_text("what do you think of the pizza ?");
    let top = |name: &str| {
        let id = vocab.id(name).unwrap();
        let mut row: Vec<(f64, &str)> = vocab
            .word_ids()
            .map(|w| (table.prob(id, w), vocab.token(w).unwrap()))
            .collect();
        row.sort_by(|a, b| b.0.total_cmp(&a.0));
        row.truncate(5);
        row
    };
    println!("\ntr(. | pizza) top entries: {:?}", top("pizza"));

    let scorer = ConditionalScorer::new(ngram, table, 0.3)?;
    println!("\nlog P(y | x) for x = {:?}", vocab.decode_text(&post));
    for y in ["crust nice haha", "crust nice", "team nice haha", "nice crust haha"] {
        let ids = vocab.encode_text(y);
        println!(
            "  {y:<18} n-gram {:8.3}  ibm1 {:8.3}  mixed {:8.3}",
            scorer.ngram().sequence_logprob(&ids),
            scorer.table().logprob(&post, &ids),
            scorer.conditional_logprob(&post, &ids)
        );
    }
    Ok(())
}
