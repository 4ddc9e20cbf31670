//! Inputs shared by the benchmarks.

use verjar_core::archive::{read_package, write_in_order, ArchiveEntry, PackageModel};
use verjar_core::fixtures::{class_corpus, generate_pair, FixtureSpec};
use verjar_core::patterns::PatternId;

/// One labeled pair per pattern, parsed.
pub fn pattern_pairs(seed: u64) -> Vec<(PackageModel, PackageModel)> {
    PatternId::ALL
        .into_iter()
        .map(|p| {
            let (a, b, _) = generate_pair(&FixtureSpec::new(p, seed));
            (read_package(&a).expect("fixture parses"), read_package(&b).expect("fixture parses"))
        })
        .collect()
}

/// A package with `classes` generated classes plus a manifest, stored in
/// reverse name order so canonical repacking has work to do.
pub fn wide_package(classes: usize) -> Vec<u8> {
    let mut entries = vec![ArchiveEntry::new("META-INF/MANIFEST.MF", b"Manifest-Version: 1.0\r\nBuilt-By: bench\r\n\r\n".to_vec())];
    let mut corpus = class_corpus(classes, 3);
    corpus.truncate(classes);
    corpus.sort();
    entries.extend(corpus.into_iter().rev().enumerate().map(|(i, (name, bytes))| ArchiveEntry::new(format!("c{i:04}/{name}"), bytes)));
    write_in_order(&PackageModel::from_entries(entries), 6).expect("bench archive")
}
