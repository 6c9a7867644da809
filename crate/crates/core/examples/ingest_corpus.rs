//! Loads OLID-style folders when a directory is given, otherwise generates
//! three languages, and prints split sizes and class balance.
//!
//! `cargo run --example ingest_corpus -- <dir> EN DA`

use std::path::PathBuf;

use xlod::corpus::synthetic::SyntheticCatalogSpec;
use xlod::corpus::{corpus_summary, load_corpus, summary_markdown, CorpusCatalog, CorpusFormat, Language};

fn main() -> xlod::Result<()> {
    let mut args = std::env::args().skip(1);
    let catalog = match args.next() {
        Some(dir) => {
            let dir = PathBuf::from(dir);
            let corpora = args
                .map(|tag| {
                    let lang: Language = tag.parse()?;
                    load_corpus(&dir, lang, CorpusFormat::OlidTsv)
                })
                .collect::<xlod::Result<Vec<_>>>()?;
            CorpusCatalog::from_corpora(corpora)?
        }
        None => SyntheticCatalogSpec::disjoint(3, 0).generate()?,
    };
    print!("{}", summary_markdown(&corpus_summary(&catalog)?));
    for corpus in catalog.iter() {
        let example = &corpus.train[0];
        println!("{}: {:?} -> {}", corpus.language, example.text, example.label);
    }
    Ok(())
}
