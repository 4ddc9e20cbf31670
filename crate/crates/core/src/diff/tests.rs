use super::*;
use crate::archive::read_package;
use crate::fixtures::{generate_pair, running_example, FixtureSpec};

fn compare(a: &[u8], b: &[u8], policy: &DiffPolicy) -> DiffOutcome {
    compare_packages(&read_package(a).unwrap(), &read_package(b).unwrap(), policy)
}

#[test]
fn identical_packages_have_no_findings() {
    let (a, _, _) = generate_pair(&FixtureSpec::new(PatternId::P1, 3));
    let out = compare(&a, &a, &DiffPolicy::default());
    assert!(out.equivalent);
    assert!(out.findings.is_empty());
}

#[test]
fn running_example_reports_timestamps_and_order() {
    let (a, b) = running_example();
    let out = compare(&a, &b, &DiffPolicy::default());
    assert_eq!(out.patterns(), [PatternId::P1, PatternId::P11].into_iter().collect());
    assert!(out.equivalent);
    let pom = out.findings.iter().find(|f| f.entry_name.ends_with("pom.properties")).unwrap();
    assert!(pom.evidence_left.contains("Sun Sep 18"));
    assert!(pom.evidence_right.contains("Mon Sep 19"));
}

#[test]
fn every_fixture_pair_gets_its_label() {
    let policy = DiffPolicy::default();
    for p in PatternId::ALL {
        for seed in 0..8 {
            let (a, b, label) = generate_pair(&FixtureSpec::new(p, seed));
            let out = compare(&a, &b, &policy);
            assert_eq!(out.patterns(), [label].into_iter().collect(), "{p} seed {seed}: {:#?}", out.findings);
        }
    }
}

#[test]
fn line_shift_resolves_only_when_stripping() {
    let (a, b, _) = generate_pair(&FixtureSpec::new(PatternId::P5, 1));
    let mut policy = DiffPolicy::default();
    assert!(!compare(&a, &b, &policy).equivalent);
    policy.strip_line_numbers = true;
    assert!(compare(&a, &b, &policy).equivalent);
}

#[test]
fn unmatched_line_is_unknown() {
    let policy = DiffPolicy::default();
    let f = classify_text_diff("notes.txt", EntryKind::Text, b"a\nb\nc\n", b"a\nX\nc\n", &policy);
    assert_eq!(f.len(), 1);
    assert_eq!(f[0].pattern, PatternId::Unknown);
    assert_eq!((f[0].evidence_left.as_str(), f[0].evidence_right.as_str()), ("b", "X"));
}

#[test]
fn doc_permutation_is_p8_and_plain_permutation_unknown() {
    let policy = DiffPolicy::default();
    let f = classify_text_diff("apidocs/package-list", EntryKind::Text, b"a\nb\n", b"b\na\n", &policy);
    assert_eq!(f[0].pattern, PatternId::P8);
    let f = classify_text_diff("list.txt", EntryKind::Text, b"a\nb\n", b"b\na\n", &policy);
    assert_eq!(f[0].pattern, PatternId::Unknown);
    let f = classify_text_diff("x.properties", EntryKind::Properties, b"a=1\nb=2\n", b"b=2\na=1\n", &policy);
    assert_eq!(f[0].pattern, PatternId::P12);
}

#[test]
fn manifest_attribute_findings() {
    let policy = DiffPolicy::default();
    let a = b"Manifest-Version: 1.0\r\nBuilt-By: alice\r\nBuild-Jdk: 11.0.2\r\nX-Thing: 1\r\n\r\n";
    let b = b"Manifest-Version: 1.0\r\nBuilt-By: bob\r\nBuild-Jdk: 17.0.1\r\nX-Thing: 2\r\n\r\n";
    let f = classify_manifest_diff("META-INF/MANIFEST.MF", a, b, &policy);
    let got: Vec<(PatternId, bool)> = f.iter().map(|f| (f.pattern, f.is_resolved())).collect();
    assert_eq!(got, vec![(PatternId::P4, true), (PatternId::P2, false), (PatternId::Unknown, false)]);
}

#[test]
fn manifest_reorder_and_rewrap_are_p12() {
    let policy = DiffPolicy::default();
    let a = b"Manifest-Version: 1.0\r\nA: 1\r\nB: 2\r\n\r\n";
    let b = b"Manifest-Version: 1.0\r\nB: 2\r\nA: 1\r\n\r\n";
    let f = classify_manifest_diff("META-INF/MANIFEST.MF", a, b, &policy);
    assert_eq!(f.len(), 1);
    assert_eq!(f[0].pattern, PatternId::P12);
    let c = b"Manifest-Version: 1.0\nA: 1\nB: 2\n\n";
    let f = classify_manifest_diff("META-INF/MANIFEST.MF", a, c, &policy);
    assert_eq!(f[0].locus.last().unwrap(), "line layout");
}

#[test]
fn labels_are_symmetric() {
    let policy = DiffPolicy::default();
    for p in PatternId::ALL {
        let (a, b, _) = generate_pair(&FixtureSpec::new(p, 11));
        let ab = compare(&a, &b, &policy);
        let ba = compare(&b, &a, &policy);
        assert_eq!(ab.patterns(), ba.patterns(), "{p}");
        assert_eq!(ab.equivalent, ba.equivalent, "{p}");
    }
}

#[test]
fn evidence_is_bounded() {
    let long = "x".repeat(10_000);
    let f = Finding::new("e", PatternId::Unknown, vec![], long.clone(), "é".repeat(5000));
    assert!(f.evidence_left.len() <= EVIDENCE_LIMIT);
    assert!(f.evidence_right.len() <= EVIDENCE_LIMIT);
    assert_eq!(f.locus, vec!["e".to_string()]);
}
