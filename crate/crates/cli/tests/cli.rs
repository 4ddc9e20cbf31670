use std::path::Path;
use std::process::{Command, Output};

fn verjar(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_verjar")).args(args).current_dir(dir).env_remove("SOURCE_DATE_EPOCH").output().expect("binary runs")
}

fn example_dir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let out = verjar(&["fixtures", "--out", ".", "--running-example"], dir.path());
    assert!(out.status.success());
    dir
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

#[test]
fn verify_same_file_is_bitwise() {
    let dir = example_dir();
    let out = verjar(&["verify", "foo1.jar", "foo1.jar"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["verdict"], "VERIFIED_BITWISE");
}

#[test]
fn running_example_verifies_by_interpretation() {
    let dir = example_dir();
    let out = verjar(&["verify", "foo1.jar", "foo2.jar"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let report = json(&out);
    assert_eq!(report["verdict"], "VERIFIED_INTERPRETED");
    let ids: Vec<&str> = report["pattern_stats"].as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(ids, ["P1", "P11"]);
}

#[test]
fn fail_on_interpreted_exits_one() {
    let dir = example_dir();
    let out = verjar(&["verify", "--fail-on", "interpreted", "foo1.jar", "foo2.jar"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn usage_and_io_errors() {
    let dir = example_dir();
    let conflict = verjar(&["verify", "--enable", "P4", "--disable", "P4", "foo1.jar", "foo2.jar"], dir.path());
    assert_eq!(conflict.status.code(), Some(2));
    let not_interpretable = verjar(&["verify", "--enable", "P2", "foo1.jar", "foo2.jar"], dir.path());
    assert_eq!(not_interpretable.status.code(), Some(2));
    let bad_flag = verjar(&["verify", "--format", "yaml", "foo1.jar", "foo2.jar"], dir.path());
    assert_eq!(bad_flag.status.code(), Some(2));
    let missing = verjar(&["verify", "missing.jar", "foo2.jar"], dir.path());
    assert_eq!(missing.status.code(), Some(3));
    std::fs::write(dir.path().join("junk.jar"), b"not a zip").unwrap();
    let junk = verjar(&["verify", "junk.jar", "foo2.jar"], dir.path());
    assert_eq!(junk.status.code(), Some(3));
}

#[test]
fn report_output_is_reproducible() {
    let dir = example_dir();
    let run = |name: &str| {
        let out = verjar(&["verify", "--report", name, "foo1.jar", "foo2.jar"], dir.path());
        assert!(out.status.success());
        assert!(out.stdout.is_empty());
        std::fs::read(dir.path().join(name)).unwrap()
    };
    assert_eq!(run("r1.json"), run("r2.json"));
}

#[test]
fn pinned_time_flag_beats_environment() {
    let dir = example_dir();
    let read_time = |out: &Output| json(out)["policy"]["pinned_time"].as_str().unwrap().to_string();
    let env = Command::new(env!("CARGO_BIN_EXE_verjar"))
        .args(["verify", "foo1.jar", "foo2.jar"])
        .current_dir(dir.path())
        .env("SOURCE_DATE_EPOCH", "1632000000")
        .output()
        .unwrap();
    assert_eq!(read_time(&env), "2021-09-18T21:20:00");
    let flag = Command::new(env!("CARGO_BIN_EXE_verjar"))
        .args(["verify", "--pinned-time", "2020-01-02T03:04:06", "foo1.jar", "foo2.jar"])
        .current_dir(dir.path())
        .env("SOURCE_DATE_EPOCH", "1632000000")
        .output()
        .unwrap();
    assert_eq!(read_time(&flag), "2020-01-02T03:04:06");
}

#[test]
fn diff_and_normalize() {
    let dir = example_dir();
    let diff = verjar(&["diff", "--format", "text", "foo1.jar", "foo2.jar"], dir.path());
    assert_eq!(diff.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&diff.stdout).contains("P11"));
    let diff_strict = verjar(&["diff", "--disable", "P11", "foo1.jar", "foo2.jar"], dir.path());
    assert_eq!(diff_strict.status.code(), Some(1));

    for (input, output) in [("foo1.jar", "n1.jar"), ("foo2.jar", "n2.jar")] {
        let out = verjar(&["normalize", input, "-o", output, "--format", "json"], dir.path());
        assert!(out.status.success());
        assert!(json(&out)["records"].as_array().unwrap().iter().any(|r| r["pass"] == "text-rules"));
    }
    let n1 = std::fs::read(dir.path().join("n1.jar")).unwrap();
    assert_eq!(n1, std::fs::read(dir.path().join("n2.jar")).unwrap());
    let again = verjar(&["normalize", "n1.jar", "-o", "n3.jar", "--format", "json"], dir.path());
    assert!(json(&again)["records"].as_array().unwrap().is_empty());
    assert_eq!(n1, std::fs::read(dir.path().join("n3.jar")).unwrap());
}

#[test]
fn policy_file_is_read() {
    let dir = example_dir();
    std::fs::write(dir.path().join("strict.policy"), "# no reordering allowed\ndisable P11\n").unwrap();
    let out = verjar(&["verify", "--policy", "strict.policy", "foo1.jar", "foo2.jar"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["verdict"], "NOT_VERIFIED");
    std::fs::write(dir.path().join("bad.policy"), "enable P13\n").unwrap();
    assert_eq!(verjar(&["verify", "--policy", "bad.policy", "foo1.jar", "foo2.jar"], dir.path()).status.code(), Some(2));
}

#[test]
fn build_spec_is_written() {
    let dir = example_dir();
    let out = verjar(
        &[
            "verify",
            "--format",
            "text",
            "--build-spec",
            "spec.txt",
            "--env",
            "jdk=11",
            "--build-command",
            "mvn -B package",
            "foo1.jar",
            "foo2.jar",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let spec = std::fs::read_to_string(dir.path().join("spec.txt")).unwrap();
    assert!(spec.contains("$ mvn -B package"));
    assert!(spec.contains("jdk"));
    assert!(spec.contains("Additional operations"));
}

#[test]
fn patterns_lists_fourteen() {
    let dir = tempfile::tempdir().unwrap();
    let out = verjar(&["patterns", "--format", "json"], dir.path());
    assert!(out.status.success());
    assert_eq!(json(&out).as_array().unwrap().len(), 14);
}

#[test]
fn fixtures_write_labeled_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let out = verjar(&["fixtures", "--out", "fx", "--pattern", "P6", "--pattern", "P12", "--count", "2"], dir.path());
    assert!(out.status.success());
    let labels: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("fx/labels.json")).unwrap()).unwrap();
    assert_eq!(labels.as_object().unwrap().len(), 4);
    assert_eq!(labels["P12-0001"], "P12");
    assert!(dir.path().join("fx/P6-0000/b.jar").exists());
}

#[cfg(unix)]
#[test]
fn double_build_with_generator() {
    let dir = tempfile::tempdir().unwrap();
    let exe = env!("CARGO_BIN_EXE_verjar");
    let run = |patterns: &[&str]| {
        let mut args =
            vec!["double-build", "--output-glob", "out/*.jar", "--", exe, "fixtures", "--nondeterministic", "--out", "out", "--count", "3"];
        for p in patterns {
            args.extend(["--pattern", p]);
        }
        verjar(&args, dir.path())
    };
    let good = run(&["P1", "P11", "P9"]);
    assert_eq!(good.status.code(), Some(0), "{}", String::from_utf8_lossy(&good.stderr));
    assert_eq!(json(&good)["verdict"], "VERIFIED_INTERPRETED");
    let bad = run(&["P1", "P8"]);
    assert_eq!(bad.status.code(), Some(1));
    assert_eq!(json(&bad)["verdict"], "NOT_VERIFIED");
    let failing = verjar(&["double-build", "--", "sh", "-c", "exit 4"], dir.path());
    assert_eq!(failing.status.code(), Some(3));
}
