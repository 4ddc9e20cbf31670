use std::path::PathBuf;

use verjar_core::archive::{read_package, write_preserved};
use verjar_core::classfile::{parse_class, serialize_class};
use verjar_core::fixtures::{class_corpus, generate_pair, running_example, FixtureSpec};
use verjar_core::patterns::PatternId;

fn corpus_files() -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/zips");
    let mut out: Vec<(String, Vec<u8>)> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| {
            let path = e.unwrap().path();
            (path.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&path).unwrap())
        })
        .collect();
    out.sort();
    out
}

#[test]
fn foreign_archives_are_reemitted_byte_for_byte() {
    let files = corpus_files();
    assert_eq!(files.len(), 25);
    for (name, bytes) in files {
        let pkg = read_package(&bytes).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(write_preserved(&pkg).unwrap(), bytes, "{name}");
    }
}

#[test]
fn data_descriptor_archive_is_read() {
    let bytes = std::fs::read(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/zips/corpus-03.jar")).unwrap();
    let pkg = read_package(&bytes).unwrap();
    assert!(pkg.entries.iter().filter(|e| !e.payload.is_empty()).all(|e| !e.raw.as_ref().unwrap().descriptor.is_empty()));
    assert_eq!(pkg.entry("META-INF/MANIFEST.MF").unwrap().payload, b"Manifest-Version: 1.0\r\nCreated-By: corpus\r\n\r\n");
}

#[test]
fn generated_classes_round_trip() {
    let corpus = class_corpus(240, 11);
    assert!(corpus.len() >= 200);
    for (name, bytes) in &corpus {
        let model = parse_class(bytes).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(&serialize_class(&model), bytes, "{name}");
    }
}

#[test]
fn fixture_jars_round_trip() {
    let mut jars = Vec::new();
    for p in PatternId::ALL {
        let (a, b, _) = generate_pair(&FixtureSpec::new(p, 3));
        jars.extend([a, b]);
    }
    let (a, b) = running_example();
    jars.extend([a, b]);
    assert!(jars.len() >= 20);
    for bytes in &jars {
        let pkg = read_package(bytes).unwrap();
        assert_eq!(&write_preserved(&pkg).unwrap(), bytes);
        for e in pkg.entries.iter().filter(|e| e.name.ends_with(".class")) {
            assert_eq!(serialize_class(&parse_class(&e.payload).unwrap()), e.payload);
        }
    }
}
