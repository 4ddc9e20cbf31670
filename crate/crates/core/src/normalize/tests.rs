use super::*;
use crate::archive::read_package;
use crate::classfile::{canonicalize_class, ClassCanonPolicy};
use crate::diff::compare_packages;
use crate::fixtures::{generate_pair, running_example, FixtureSpec};

fn normalize(bytes: &[u8], policy: &NormalizePolicy) -> (Vec<u8>, NormalizeLog) {
    normalize_package(&read_package(bytes).unwrap(), policy).unwrap()
}

#[test]
fn interpretable_pairs_converge() {
    let policy = NormalizePolicy::default();
    for p in interpretable() {
        for seed in 0..6 {
            let (a, b, _) = generate_pair(&FixtureSpec::new(p, seed));
            let (na, _) = normalize(&a, &policy);
            let (nb, _) = normalize(&b, &policy);
            if p == PatternId::P7 {
                let out = compare_packages(&read_package(&na).unwrap(), &read_package(&nb).unwrap(), &policy.diff_policy());
                assert!(out.equivalent && out.patterns() == [PatternId::P7].into_iter().collect(), "{p} seed {seed}");
            } else {
                assert_eq!(na, nb, "{p} seed {seed}");
            }
        }
    }
}

#[test]
fn other_pairs_stay_apart() {
    let policy = NormalizePolicy::default();
    for p in PatternId::ALL.into_iter().filter(|p| !p.is_interpretable()) {
        let (a, b, _) = generate_pair(&FixtureSpec::new(p, 2));
        let (na, _) = normalize(&a, &policy);
        let (nb, _) = normalize(&b, &policy);
        assert_ne!(na, nb, "{p}");
        let out = compare_packages(&read_package(&na).unwrap(), &read_package(&nb).unwrap(), &policy.diff_policy());
        assert!(!out.equivalent, "{p}");
    }
}

#[test]
fn second_pass_changes_nothing() {
    let policy = NormalizePolicy::default();
    for p in PatternId::ALL {
        let (a, b, _) = generate_pair(&FixtureSpec::new(p, 5));
        for x in [a, b] {
            let (once, log) = normalize(&x, &policy);
            assert!(!log.is_empty() || once != x);
            let (twice, log2) = normalize(&once, &policy);
            assert_eq!(once, twice, "{p}");
            assert!(log2.is_empty(), "{p}: {:?}", log2.records);
        }
    }
}

#[test]
fn running_example_log() {
    let (a, b) = running_example();
    let policy = NormalizePolicy::default();
    let (na, la) = normalize(&a, &policy);
    let (nb, _) = normalize(&b, &policy);
    assert_eq!(na, nb);
    assert!(la.records.iter().any(|r| r.entry_name.ends_with("pom.properties") && r.summary.contains("P1")));
}

#[test]
fn unclaimed_jdk_change_is_noted() {
    let (a, b, _) = generate_pair(&FixtureSpec::new(PatternId::P2, 0));
    let policy = NormalizePolicy::default();
    let (na, log) = normalize(&a, &policy);
    let (nb, _) = normalize(&b, &policy);
    assert_ne!(na, nb);
    assert!(log.notes.iter().any(|n| n.entry_name == "META-INF/MANIFEST.MF" && n.message.starts_with("P2 matched")));
}

#[test]
fn class_meaning_is_preserved() {
    let policy = NormalizePolicy { class_policy: ClassCanonPolicy::maximal(), ..NormalizePolicy::default() };
    for p in [PatternId::P5, PatternId::P6, PatternId::P9, PatternId::P10, PatternId::P14] {
        let (a, _, _) = generate_pair(&FixtureSpec::new(p, 9));
        let before = read_package(&a).unwrap();
        let after = read_package(&normalize(&a, &policy).0).unwrap();
        for e in before.entries.iter().filter(|e| e.kind == EntryKind::ClassFile) {
            let x = parse_class(&e.payload).unwrap();
            let y = parse_class(&after.entry(&e.name).unwrap().payload).unwrap();
            let m = ClassCanonPolicy::maximal();
            assert_eq!(canonicalize_class(&x, &m).digest, canonicalize_class(&y, &m).digest, "{p} {}", e.name);
        }
    }
}

#[test]
fn disabled_patterns_are_left_alone() {
    let (a, b, _) = generate_pair(&FixtureSpec::new(PatternId::P4, 1));
    let policy = NormalizePolicy::with_patterns([PatternId::P1, PatternId::P11]).unwrap();
    assert_ne!(normalize(&a, &policy).0, normalize(&b, &policy).0);
    let (a, b, _) = generate_pair(&FixtureSpec::new(PatternId::P11, 1));
    assert_eq!(normalize(&a, &policy).0, normalize(&b, &policy).0);
}
