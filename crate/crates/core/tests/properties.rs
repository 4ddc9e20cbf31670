use std::collections::BTreeSet;

use proptest::prelude::*;
use verjar_core::archive::{
    read_package, write_canonical, write_in_order, write_preserved, ArchiveEntry, CanonicalPolicy, DosDateTime, PackageModel,
};
use verjar_core::classfile::{
    canonicalize_class, parse_class, rewrite_class, serialize_class, ClassCanonPolicy, ConstantPool, CpEntry, RewritePolicy,
};
use verjar_core::diff::{compare_packages, DiffPolicy};
use verjar_core::fixtures::{chained_triple, nondeterministic_package, perturb_pool, widget_of, FixtureSpec};
use verjar_core::normalize::{interpretable, normalize_package, NormalizePolicy};
use verjar_core::patterns::PatternId;
use verjar_core::textformats::{
    apply_to_bytes, canonicalize_manifest, parse_manifest, parse_properties, Attribute, ManifestModel, RuleSet, Section,
};
use verjar_core::verify::verify_bytes;

fn entry_strategy() -> impl Strategy<Value = ArchiveEntry> {
    ("[a-z]{1,6}(/[a-z]{1,6}){0,2}\\.(class|txt|properties|xml)", prop::collection::vec(any::<u8>(), 0..300), 0i64..4_000_000_000)
        .prop_map(|(name, payload, t)| ArchiveEntry::new(name, payload).with_mtime(DosDateTime::from_unix_seconds(t)))
}

fn package_strategy() -> impl Strategy<Value = PackageModel> {
    prop::collection::vec(entry_strategy(), 0..8).prop_map(PackageModel::from_entries)
}

fn patterns_strategy() -> impl Strategy<Value = Vec<PatternId>> {
    prop::sample::subsequence(PatternId::ALL.to_vec(), 0..4)
}

fn spec_strategy() -> impl Strategy<Value = FixtureSpec> {
    (any::<u64>(), 2usize..6, 1usize..9).prop_map(|(seed, methods, strings)| FixtureSpec {
        methods,
        strings,
        ..FixtureSpec::new(PatternId::P6, seed)
    })
}

fn digest(bytes: &[u8], policy: &ClassCanonPolicy) -> String {
    canonicalize_class(&parse_class(bytes).unwrap(), policy).digest_hex()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn written_archives_reemit_exactly(pkg in package_strategy()) {
        let bytes = write_in_order(&pkg, 6).unwrap();
        let read = read_package(&bytes).unwrap();
        prop_assert_eq!(write_preserved(&read).unwrap(), bytes);
        for (a, b) in pkg.entries.iter().zip(&read.entries) {
            prop_assert_eq!(&a.name, &b.name);
            prop_assert_eq!(&a.payload, &b.payload);
        }
    }

    #[test]
    fn canonical_archive_is_fixed_point_and_sorted(pkg in package_strategy()) {
        let policy = CanonicalPolicy::default();
        let once = write_canonical(&pkg, &policy).unwrap();
        let read = read_package(&once).unwrap();
        prop_assert_eq!(write_canonical(&read, &policy).unwrap(), once.clone());
        let names: Vec<&str> = read.names().collect();
        prop_assert!(names.windows(2).all(|w| w[0].as_bytes() < w[1].as_bytes()));
        for e in &pkg.entries {
            prop_assert_eq!(&read.entry(&e.name).unwrap().payload, &e.payload);
        }
    }

    #[test]
    fn pool_perturbation_keeps_class_digest(spec in spec_strategy(), seed in any::<u64>()) {
        let m = widget_of(&spec);
        let policy = ClassCanonPolicy::strict();
        let a = canonicalize_class(&m, &policy).digest_hex();
        let b = canonicalize_class(&perturb_pool(&m, seed), &policy).digest_hex();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn utf8_mutation_changes_class_digest(spec in spec_strategy(), pick in any::<prop::sample::Index>(), byte in any::<u8>()) {
        let m = widget_of(&spec);
        let utf8: Vec<usize> = m.constant_pool.slots().iter().enumerate()
            .filter(|(_, s)| matches!(s, Some(CpEntry::Utf8(_))))
            .map(|(i, _)| i)
            .collect();
        let target = utf8[pick.index(utf8.len())];
        let mut slots = m.constant_pool.slots().to_vec();
        if let Some(CpEntry::Utf8(b)) = &mut slots[target] {
            b.push(byte);
        }
        let mut mutated = m.clone();
        mutated.constant_pool = ConstantPool::from_slots(slots);
        let policy = ClassCanonPolicy::default();
        prop_assert_ne!(canonicalize_class(&m, &policy).digest_hex(), canonicalize_class(&mutated, &policy).digest_hex());
    }

    #[test]
    fn rewrite_keeps_canonical_form(spec in spec_strategy(), seed in any::<u64>()) {
        let m = perturb_pool(&widget_of(&spec), seed);
        let policy = ClassCanonPolicy::default();
        let out = rewrite_class(&m, &RewritePolicy::default()).unwrap();
        let rewritten = parse_class(&out.bytes).unwrap();
        prop_assert_eq!(canonicalize_class(&rewritten, &policy).digest_hex(), canonicalize_class(&m, &policy).digest_hex());
        let again = rewrite_class(&rewritten, &RewritePolicy::default()).unwrap();
        prop_assert_eq!(again.bytes, out.bytes);
    }

    #[test]
    fn canonical_comparison_is_an_equivalence(seed in any::<u64>()) {
        let [a, b, c] = chained_triple(seed);
        let p = ClassCanonPolicy::default();
        let (da, db, dc) = (digest(&a, &p), digest(&b, &p), digest(&c, &p));
        prop_assert_eq!(&da, &digest(&a, &p));
        prop_assert_eq!(&da, &db);
        prop_assert_eq!(&db, &dc);
        prop_assert_eq!(&da, &dc);
    }

    #[test]
    fn manifests_round_trip(attrs in prop::collection::vec(("[A-Z][A-Za-z-]{0,20}", "[ -~]{0,120}"), 0..6)) {
        let mut seen = BTreeSet::new();
        let attrs: Vec<Attribute> = attrs
            .into_iter()
            .filter(|(n, _)| seen.insert(n.to_ascii_lowercase()) && !n.eq_ignore_ascii_case("Manifest-Version"))
            .map(|(n, v)| Attribute::new(n, v))
            .collect();
        let mut main = vec![Attribute::new("Manifest-Version", "1.0")];
        main.extend(attrs.clone());
        let model = ManifestModel { main_section: Section::new(main), named_sections: Vec::new() };
        let bytes = model.to_canonical_bytes();
        let parsed = parse_manifest(&bytes).unwrap();
        prop_assert_eq!(parsed.to_bytes(), bytes.clone());
        let (canon, _) = canonicalize_manifest(&parsed, &[]);
        prop_assert_eq!(canonicalize_manifest(&canon, &[]).0.to_canonical_bytes(), canon.to_canonical_bytes());

        let mut reversed = vec![Attribute::new("Manifest-Version", "1.0")];
        reversed.extend(attrs.into_iter().rev());
        let other = ManifestModel { main_section: Section::new(reversed), named_sections: Vec::new() };
        let (canon_other, _) = canonicalize_manifest(&other, &[]);
        prop_assert_eq!(canon_other.to_canonical_bytes(), canon.to_canonical_bytes());
    }

    #[test]
    fn properties_round_trip(lines in prop::collection::vec("[#!]?[ -~]{0,40}(\\\\)?", 0..12), crlf in any::<bool>()) {
        let sep = if crlf { "\r\n" } else { "\n" };
        let text = lines.join(sep);
        prop_assert_eq!(parse_properties(text.as_bytes()).to_bytes(), text.into_bytes());
    }

    #[test]
    fn rules_touch_only_matched_spans(before in "[a-z=\n]{0,60}", after in "[a-z=\n]{0,60}") {
        let text = format!("{before}\n#Sun Sep 18 22:43:23 EDT 2021\n{after}");
        let rules = RuleSet::builtin();
        let applicable = rules.for_entry("META-INF/maven/g/a/pom.properties");
        let (out, hits) = apply_to_bytes(text.as_bytes(), &applicable);
        prop_assert!(!hits.is_empty());
        let out = String::from_utf8(out).unwrap();
        let prefix = format!("{before}\n#");
        let suffix = format!("\n{after}");
        prop_assert!(out.starts_with(&prefix));
        prop_assert!(out.ends_with(&suffix));
        prop_assert!(!out.contains("22:43:23"));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn comparison_is_reflexive_and_symmetric(seed in 0u64..1000, e1 in any::<u64>(), e2 in any::<u64>(), patterns in patterns_strategy()) {
        let a = read_package(&nondeterministic_package(seed, e1, &patterns)).unwrap();
        let b = read_package(&nondeterministic_package(seed, e2, &patterns)).unwrap();
        let policy = DiffPolicy::default();
        let same = compare_packages(&a, &a, &policy);
        prop_assert!(same.equivalent && same.findings.is_empty());
        let ab = compare_packages(&a, &b, &policy);
        let ba = compare_packages(&b, &a, &policy);
        prop_assert_eq!(ab.equivalent, ba.equivalent);
        prop_assert_eq!(ab.patterns(), ba.patterns());
        prop_assert_eq!(ab.findings.len(), ba.findings.len());
    }

    #[test]
    fn normalization_is_idempotent_and_safe(seed in 0u64..1000, entropy in any::<u64>(), patterns in patterns_strategy()) {
        let pkg = read_package(&nondeterministic_package(seed, entropy, &patterns)).unwrap();
        let policy = NormalizePolicy::default();
        let (once, _) = normalize_package(&pkg, &policy).unwrap();
        let read = read_package(&once).unwrap();
        let (twice, log) = normalize_package(&read, &policy).unwrap();
        prop_assert_eq!(&twice, &once);
        prop_assert!(log.is_empty());

        let maximal = ClassCanonPolicy::maximal();
        for e in pkg.entries.iter().filter(|e| e.name.ends_with(".class")) {
            let after = &read.entry(&e.name).unwrap().payload;
            prop_assert_eq!(digest(&e.payload, &maximal), digest(after, &maximal), "{}", e.name);
        }
    }

    #[test]
    fn enabling_more_patterns_never_lowers_the_verdict(
        seed in 0u64..1000,
        e1 in any::<u64>(),
        e2 in any::<u64>(),
        patterns in patterns_strategy(),
        mask in any::<u8>(),
        extra in any::<u8>(),
    ) {
        let a = nondeterministic_package(seed, e1, &patterns);
        let b = nondeterministic_package(seed, e2, &patterns);
        let all: Vec<PatternId> = interpretable().into_iter().collect();
        let small: Vec<PatternId> = all.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, p)| *p).collect();
        let large: Vec<PatternId> = all.iter().enumerate().filter(|(i, _)| (mask | extra) & (1 << i) != 0).map(|(_, p)| *p).collect();
        let v_small = verify_bytes(("a.jar", &a), ("b.jar", &b), &NormalizePolicy::with_patterns(small).unwrap()).unwrap().verdict;
        let v_large = verify_bytes(("a.jar", &a), ("b.jar", &b), &NormalizePolicy::with_patterns(large).unwrap()).unwrap().verdict;
        prop_assert!(v_small <= v_large, "{:?} > {:?}", v_small, v_large);
    }
}

#[test]
fn reports_do_not_depend_on_run() {
    let a = nondeterministic_package(5, 1, &[PatternId::P1, PatternId::P11]);
    let b = nondeterministic_package(5, 2, &[PatternId::P1, PatternId::P11]);
    let policy = NormalizePolicy::default();
    let r1 = verify_bytes(("a.jar", &a), ("b.jar", &b), &policy).unwrap().to_json();
    let r2 = verify_bytes(("a.jar", &a), ("b.jar", &b), &policy).unwrap().to_json();
    assert_eq!(r1, r2);
    assert_eq!(
        serialize_class(&widget_of(&FixtureSpec::new(PatternId::P6, 1))),
        serialize_class(&widget_of(&FixtureSpec::new(PatternId::P6, 1)))
    );
}
