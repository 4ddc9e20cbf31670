use super::*;
use crate::archive::{write_in_order, ArchiveEntry};
use crate::fixtures::{generate_pair, running_example, FixtureSpec};
use crate::patterns::PatternId;

fn verify(a: &[u8], b: &[u8]) -> VerificationReport {
    verify_bytes(("a.jar", a), ("b.jar", b), &NormalizePolicy::default()).unwrap()
}

#[test]
fn same_bytes_are_bitwise() {
    let (a, _) = running_example();
    let r = verify(&a, &a);
    assert_eq!(r.verdict, Verdict::VerifiedBitwise);
    assert!(r.diff.findings.is_empty());
}

#[test]
fn running_example_is_interpreted() {
    let (a, b) = running_example();
    let r = verify(&a, &b);
    assert_eq!(r.verdict, Verdict::VerifiedInterpreted, "{}", render_text(&r));
    assert_eq!(r.patterns(), [PatternId::P1, PatternId::P11].into_iter().collect());
}

#[test]
fn one_line_change_is_not_verified() {
    let pkg = |text: &str| {
        let e = ArchiveEntry::new("notes.txt", text.as_bytes().to_vec());
        write_in_order(&PackageModel::from_entries(vec![e]), 6).unwrap()
    };
    let r = verify(&pkg("one\ntwo\n"), &pkg("one\nthree\n"));
    assert_eq!(r.verdict, Verdict::NotVerified);
    assert_eq!(r.diff.findings.len(), 1);
    assert_eq!(r.diff.findings[0].pattern, PatternId::Unknown);
}

#[test]
fn verdicts_follow_interpretability() {
    for p in PatternId::ALL {
        let (a, b, _) = generate_pair(&FixtureSpec::new(p, 4));
        let r = verify(&a, &b);
        let want = if p.is_interpretable() { Verdict::VerifiedInterpreted } else { Verdict::NotVerified };
        assert_eq!(r.verdict, want, "{p}: {}", render_text(&r));
    }
}

#[test]
fn reports_are_deterministic() {
    let (a, b, _) = generate_pair(&FixtureSpec::new(PatternId::P6, 1));
    assert_eq!(verify(&a, &b).to_json(), verify(&a, &b).to_json());
}

#[test]
fn bare_class_files_compare() {
    let (a, b, _) = generate_pair(&FixtureSpec::new(PatternId::P10, 2));
    let widget = |bytes: &[u8]| {
        let pkg = crate::archive::read_package(bytes).unwrap();
        pkg.entries.iter().find(|e| e.name.ends_with("Widget.class")).unwrap().payload.clone()
    };
    let r = verify_bytes(("Widget.class", &widget(&a)), ("Widget.class", &widget(&b)), &NormalizePolicy::default()).unwrap();
    assert_eq!(r.verdict, Verdict::VerifiedInterpreted);
    assert_eq!(r.patterns(), [PatternId::P10].into_iter().collect());
}

#[test]
fn aggregation_takes_the_weakest() {
    use Verdict::*;
    assert_eq!(aggregate(&[VerifiedBitwise, VerifiedInterpreted]), VerifiedInterpreted);
    assert_eq!(aggregate(&[VerifiedBitwise, NotVerified, VerifiedInterpreted]), NotVerified);
    assert_eq!(aggregate(&[]), VerifiedBitwise);
}

#[test]
fn build_spec_has_three_parts() {
    let (a, b) = running_example();
    let r = verify(&a, &b);
    let doc = BuildSpecDoc::from_report(&r, vec![vec!["mvn".into(), "package".into()]], &[("jdk".into(), "11".into())]);
    let text = doc.to_text();
    for part in ["Environment", "Commands", "Additional operations", "$ mvn package", "(supplied)"] {
        assert!(text.contains(part), "{part}");
    }
    let p1 = doc.operations.iter().find(|o| o.pattern == PatternId::P1).unwrap();
    assert!(p1.applied.iter().any(|x| x.contains("pom.properties")));
}

#[cfg(unix)]
#[test]
fn double_build_of_a_copy_is_bitwise() {
    let src = tempfile::tempdir().unwrap();
    std::fs::write(src.path().join("in.jar"), running_example().0).unwrap();
    let job = DoubleBuildJob::new(vec!["sh".into(), "-c".into(), "mkdir -p out && cp in.jar out/app.jar".into()], src.path(), "out/*.jar");
    let r = run_double_build(&job, &NormalizePolicy::default()).unwrap();
    assert_eq!(r.verdict, Verdict::VerifiedBitwise);
    assert_eq!(r.deliverables.len(), 1);
    let failing = DoubleBuildJob::new(vec!["sh".into(), "-c".into(), "exit 3".into()], src.path(), "*.jar");
    assert!(matches!(run_double_build(&failing, &NormalizePolicy::default()), Err(VerifyError::BuildCommandFailed { run: 1, .. })));
}
