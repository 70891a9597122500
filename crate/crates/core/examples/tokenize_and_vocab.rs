//! Tokenize mixed-script text, read a small TSV corpus and build a vocabulary.
//!
//! cargo run -p emoanneal --example tokenize_and_vocab

use emoanneal::corpus::{detokenize, parse_corpus, tokenize, CorpusFormat, Vocabulary};

const CORPUS: &str = "\
I can't believe it rained AGAIN!\tSigh, my umbrella broke.\tsad
今天天气很好\t太好了，出去玩吧\thappy
Look at this puppy\tso cute!!\tlike
";

fn main() -> emoanneal::Result<()> {
    for text in ["I can't believe it rained AGAIN!", "今天天气很好", "ｆｕｌｌｗｉｄｔｈ text"] {
        let tokens = tokenize(text);
        println!("{text:?}\n  tokens {tokens:?}\n  joined {:?}", detokenize(&tokens));
    }

    let pairs = parse_corpus(CORPUS.as_bytes(), CorpusFormat::Tsv)?;
    let vocab = Vocabulary::build(&pairs, 1)?;
    println!("\n{} pairs, {} vocabulary entries", pairs.len(), vocab.len());
    for pair in &pairs {
        let encoded = vocab.encode_pair(pair);
        println!("  [{}] {:?} -> {:?}", pair.label, encoded.post, encoded.response);
    }
    println!("unknown words map to <unk>: {:?}", vocab.encode_text("a completely new sentence"));
    Ok(())
}
