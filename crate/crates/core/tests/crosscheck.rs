//! Compares verjar's archive reader and class parser against listings frozen
//! by `scripts/crosscheck.py`, which reads the same bytes with Python's
//! zipfile module and a separate class dumper.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde_json::{json, Value};
use verjar_core::archive::{read_package, Compression, PackageModel};
use verjar_core::classfile::{parse_class, serialize_class, AttrBody, AttrInfo, ClassModel};
use verjar_core::digest::sha256_hex;
use verjar_core::fixtures::{generate_pair, running_example, FixtureSpec};
use verjar_core::patterns::PatternId;

fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}

fn frozen() -> Value {
    let text = std::fs::read_to_string(data_dir().join("crosscheck.json")).expect("run scripts/crosscheck.py");
    serde_json::from_str(&text).unwrap()
}

fn listing(pkg: &PackageModel) -> Value {
    let entries: Vec<Value> = pkg
        .entries
        .iter()
        .map(|e| {
            let raw = e.raw.as_ref().expect("read entries keep their record");
            let t = e.mtime;
            json!({
                "name": e.name,
                "crc32": crc32fast::hash(&e.payload),
                "size": e.payload.len(),
                "compressed_size": raw.central.compressed_size,
                "method": match e.compression { Compression::Stored => 0, Compression::Deflated => 8 },
                "date_time": [t.year(), t.month(), t.day(), t.hour(), t.minute(), t.second()],
            })
        })
        .collect();
    Value::Array(entries)
}

fn attributes(m: &ClassModel, attrs: &[AttrInfo]) -> Value {
    attrs
        .iter()
        .map(|a| {
            let mut item = json!({ "name": m.attribute_name(a) });
            if let AttrBody::Code(c) = &a.body {
                item["max_stack"] = json!(c.max_stack);
                item["max_locals"] = json!(c.max_locals);
                item["code_length"] = json!(c.code.len());
            }
            item
        })
        .collect()
}

fn class_summary(m: &ClassModel) -> Value {
    let members = |list: &[verjar_core::classfile::MemberInfo]| -> Value {
        list.iter()
            .map(|f| {
                json!({
                    "access": f.access_flags,
                    "name": m.member_name(f),
                    "descriptor": m.member_descriptor(f),
                    "attributes": attributes(m, &f.attributes),
                })
            })
            .collect()
    };
    let tags: Vec<u8> = m.constant_pool.slots().iter().flatten().map(|e| e.tag() as u8).collect();
    json!({
        "version": [m.major_version, m.minor_version],
        "constant_pool_count": m.constant_pool.count(),
        "constant_tags": tags,
        "access": m.access_flags,
        "this_class": m.class_name(),
        "super_class": m.constant_pool.class_name(m.super_class),
        "interfaces": m.interfaces.iter().map(|&i| m.constant_pool.class_name(i)).collect::<Vec<_>>(),
        "fields": members(&m.fields),
        "methods": members(&m.methods),
        "attributes": attributes(m, &m.attributes),
    })
}

/// The frozen listing with the fields verjar does not model removed.
fn strip_lengths(v: &Value) -> Value {
    match v {
        Value::Object(map) => map.iter().filter(|(k, _)| k.as_str() != "length").map(|(k, v)| (k.clone(), strip_lengths(v))).collect(),
        Value::Array(items) => items.iter().map(strip_lengths).collect(),
        other => other.clone(),
    }
}

fn regenerated(seeds: u64) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for p in PatternId::ALL {
        for seed in 0..seeds {
            let (a, b, _) = generate_pair(&FixtureSpec::new(p, seed));
            out.insert(format!("{p}-{seed:04}/a.jar"), a);
            out.insert(format!("{p}-{seed:04}/b.jar"), b);
        }
    }
    let (a, b) = running_example();
    out.insert("example/foo1.jar".into(), a);
    out.insert("example/foo2.jar".into(), b);
    out
}

#[test]
fn fixture_archives_match_independent_reading() {
    let frozen = frozen();
    let seeds = frozen["seeds"].as_u64().unwrap();
    let fixtures = frozen["fixtures"].as_object().unwrap();
    let ours = regenerated(seeds);
    assert_eq!(ours.keys().collect::<Vec<_>>(), fixtures.keys().collect::<Vec<_>>());
    let mut classes = 0;
    for (name, bytes) in &ours {
        let expect = &fixtures[name];
        assert_eq!(sha256_hex(bytes), expect["sha256"], "{name}: fixture bytes changed; rerun scripts/crosscheck.py");
        let pkg = read_package(bytes).unwrap();
        assert_eq!(listing(&pkg), expect["entries"], "{name}");
        for e in pkg.entries.iter().filter(|e| e.name.ends_with(".class")) {
            let model = parse_class(&e.payload).unwrap();
            assert_eq!(class_summary(&model), strip_lengths(&expect["classes"][&e.name]), "{name}!{}", e.name);
            assert_eq!(serialize_class(&model), e.payload, "{name}!{}", e.name);
            classes += 1;
        }
    }
    assert!(classes >= 150, "only {classes} classes cross-checked");
}

#[test]
fn corpus_listings_match_independent_reading() {
    let frozen = frozen();
    let corpus = frozen["corpus"].as_object().unwrap();
    assert_eq!(corpus.len(), 25);
    for (name, expect) in corpus {
        let bytes = std::fs::read(data_dir().join("zips").join(name)).unwrap();
        assert_eq!(sha256_hex(&bytes), expect["sha256"], "{name}");
        let pkg = read_package(&bytes).unwrap();
        assert_eq!(listing(&pkg), expect["entries"], "{name}");
        assert_eq!(String::from_utf8_lossy(&pkg.comment), expect["comment"].as_str().unwrap(), "{name}");
    }
}

#[test]
fn hand_assembled_classes_parse_as_described() {
    let dir = data_dir().join("classes");
    let described: Value = serde_json::from_str(&std::fs::read_to_string(dir.join("classes.json")).unwrap()).unwrap();
    for (file, expect) in described.as_object().unwrap() {
        let bytes = std::fs::read(dir.join(file)).unwrap();
        assert_eq!(bytes.len() as u64, expect["size"].as_u64().unwrap());
        let m = parse_class(&bytes).unwrap();
        assert_eq!(serialize_class(&m), bytes, "{file} round trip");
        assert_eq!(m.class_name(), expect["this_class"].as_str().unwrap());
        assert_eq!(m.constant_pool.class_name(m.super_class).as_deref(), expect["super_class"].as_str());
        assert_eq!(u64::from(m.major_version), expect["major_version"].as_u64().unwrap());
        assert_eq!(u64::from(m.constant_pool.count()), expect["constant_pool_count"].as_u64().unwrap());
        let pairs = |list: &[verjar_core::classfile::MemberInfo]| -> Value {
            list.iter().map(|f| json!([m.member_name(f), m.member_descriptor(f)])).collect()
        };
        assert_eq!(pairs(&m.fields), expect["fields"]);
        assert_eq!(pairs(&m.methods), expect["methods"]);
        for (k, method) in m.methods.iter().enumerate() {
            let code = method
                .attributes
                .iter()
                .find_map(|a| match &a.body {
                    AttrBody::Code(c) => Some(c),
                    _ => None,
                })
                .unwrap();
            assert_eq!(hex::encode(&code.code), expect["code_hex"][k].as_str().unwrap());
            let lines: Vec<Value> = code
                .attributes
                .iter()
                .filter_map(|a| match &a.body {
                    AttrBody::LineNumberTable(t) => Some(t.iter().map(|l| json!([l.start_pc, l.line]))),
                    _ => None,
                })
                .flatten()
                .collect();
            assert_eq!(Value::Array(lines), expect["line_numbers"][k]);
        }
        let source = m.attributes.iter().find_map(|a| match a.body {
            AttrBody::SourceFile(ix) => Some(m.constant_pool.utf8_lossy(ix)),
            _ => None,
        });
        assert_eq!(source.as_deref(), expect["source_file"].as_str());
    }
}
