use std::fmt::Write as _;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, Context};
use verjar_core::archive::{read_package_from_path, DosDateTime};
use verjar_core::diff::{compare_packages, DiffOutcome};
use verjar_core::fixtures::{generate_pair, nondeterministic_package, running_example, FixtureSpec};
use verjar_core::normalize::{normalize_package, NormalizePolicy, PolicyError};
use verjar_core::patterns::{registry, registry_json, PatternId};
use verjar_core::verify::{
    load_package, render_text, run_double_build, verify_pair, BuildSpecDoc, DoubleBuildJob, DoubleBuildReport, Isolation, Verdict,
    VerifyError,
};

use crate::args::{Cli, Command, FailOn, Format, OutputArgs, PolicyArgs};

pub const OK: u8 = 0;
pub const FAILED: u8 = 1;
pub const USAGE: u8 = 2;
pub const FATAL: u8 = 3;

pub enum Failure {
    Usage(String),
    Fatal(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Fatal(e)
    }
}

impl From<VerifyError> for Failure {
    fn from(e: VerifyError) -> Self {
        Failure::Fatal(e.into())
    }
}

type Outcome = Result<u8, Failure>;

pub fn dispatch(cli: Cli) -> Outcome {
    match cli.command {
        Command::Verify { first, second, policy, output, fail_on, build_spec, env, build_command } => {
            let policy = load_policy(&policy)?;
            let report = verify_pair(&first, &second, &policy)?;
            let body = match output.format {
                Format::Json => report.to_json(),
                Format::Text => render_text(&report),
            };
            emit(&output, &body)?;
            if let Some(path) = build_spec {
                let facts = env
                    .iter()
                    .map(|kv| kv.split_once('=').map(|(k, v)| (k.to_string(), v.to_string())))
                    .collect::<Option<Vec<_>>>()
                    .ok_or_else(|| Failure::Usage("--env expects KEY=VALUE".into()))?;
                let commands = build_command.iter().map(|c| c.split_whitespace().map(String::from).collect()).collect();
                let doc = BuildSpecDoc::from_report(&report, commands, &facts);
                let text = if output.format == Format::Json { doc.to_json() } else { doc.to_text() };
                write_file(&path, text.as_bytes())?;
            }
            eprintln!("{}: {}", report.verdict, report.reason);
            Ok(verdict_code(report.verdict, fail_on))
        }
        Command::Diff { first, second, policy, output } => {
            let policy = load_policy(&policy)?;
            let read = |p: &Path| -> Result<_, Failure> {
                let bytes = std::fs::read(p).with_context(|| format!("reading {}", p.display()))?;
                let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
                Ok(load_package(&name, &bytes).with_context(|| format!("parsing {}", p.display()))?)
            };
            let outcome = compare_packages(&read(&first)?, &read(&second)?, &policy.diff_policy());
            let body = match output.format {
                Format::Json => format!("{}\n", serde_json::to_string_pretty(&outcome).expect("outcome serializes")),
                Format::Text => diff_text(&outcome),
            };
            emit(&output, &body)?;
            Ok(if outcome.equivalent { OK } else { FAILED })
        }
        Command::Normalize { input, output, policy, report, format } => {
            let policy = load_policy(&policy)?;
            let pkg = read_package_from_path(&input).with_context(|| format!("reading {}", input.display()))?;
            let (bytes, log) = normalize_package(&pkg, &policy).map_err(|e| anyhow!(e))?;
            write_file(&output, &bytes)?;
            let body = match format {
                Format::Json => format!("{}\n", serde_json::to_string_pretty(&log).expect("log serializes")),
                Format::Text => {
                    let mut s = String::new();
                    for r in &log.records {
                        let _ = writeln!(s, "{} [{:?}] {} ({} -> {})", r.entry_name, r.pass, r.summary, r.before_digest, r.after_digest);
                    }
                    for n in &log.notes {
                        let _ = writeln!(s, "{} [{:?}] note: {}", n.entry_name, n.pass, n.message);
                    }
                    s
                }
            };
            emit(&OutputArgs { report, format }, &body)?;
            Ok(OK)
        }
        Command::DoubleBuild { workdir, output_glob, in_place, parallel, policy, output, fail_on, command } => {
            let policy = load_policy(&policy)?;
            let job = DoubleBuildJob {
                command,
                workdir,
                output_glob,
                isolation: if in_place { Isolation::None } else { Isolation::FreshTempDir },
                parallel,
            };
            let report = run_double_build(&job, &policy)?;
            let body = match output.format {
                Format::Json => report.to_json(),
                Format::Text => build_text(&report),
            };
            emit(&output, &body)?;
            eprintln!("{} over {} deliverable(s)", report.verdict, report.deliverables.len());
            Ok(verdict_code(report.verdict, fail_on))
        }
        Command::Patterns { format } => {
            let body = match format {
                Format::Json => format!("{}\n", serde_json::to_string_pretty(&registry_json()).expect("registry serializes")),
                Format::Text => patterns_text(),
            };
            print!("{body}");
            Ok(OK)
        }
        Command::Fixtures { out, patterns, seed, count, running_example: example, nondeterministic } => {
            fixtures(&out, patterns, seed, count, example, nondeterministic)?;
            Ok(OK)
        }
    }
}

fn verdict_code(v: Verdict, fail_on: FailOn) -> u8 {
    let floor = match fail_on {
        FailOn::NotVerified => Verdict::VerifiedInterpreted,
        FailOn::Interpreted => Verdict::VerifiedBitwise,
    };
    if v >= floor {
        OK
    } else {
        FAILED
    }
}

/// Defaults, then the policy file, then the environment, then flags.
fn load_policy(args: &PolicyArgs) -> Result<NormalizePolicy, Failure> {
    if let Some(&p) = args.enable.iter().find(|p| args.disable.contains(p)) {
        return Err(Failure::Usage(format!("{p} is both enabled and disabled")));
    }
    let mut policy = match &args.policy {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            NormalizePolicy::parse(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?
        }
        None => NormalizePolicy::default(),
    };
    if args.pinned_time.is_none() {
        policy.apply_env();
    }
    if let Some(t) = &args.pinned_time {
        policy.pinned_time = DosDateTime::parse(t).ok_or_else(|| Failure::Usage(format!("cannot read time {t:?}")))?;
    }
    policy.enabled_patterns.extend(args.enable.iter().copied());
    policy.enabled_patterns.retain(|p| !args.disable.contains(p));
    if args.strip_line_numbers {
        policy.class_policy.strip_line_numbers = true;
    }
    policy.validate().map_err(|e: PolicyError| Failure::Usage(e.to_string()))?;
    Ok(policy)
}

fn write_file(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn emit(output: &OutputArgs, body: &str) -> anyhow::Result<()> {
    match &output.report {
        Some(path) => write_file(path, body.as_bytes()),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn diff_text(outcome: &DiffOutcome) -> String {
    let mut s = format!("equivalent: {}\n", outcome.equivalent);
    for f in &outcome.findings {
        let status = if f.is_resolved() { format!("{:?}", f.resolved_by) } else { "open".into() };
        let _ = writeln!(s, "{:<8} {:<18} {}", f.pattern.to_string(), status, f.locus.join(" > "));
        for (side, ev) in [("-", &f.evidence_left), ("+", &f.evidence_right)] {
            for line in ev.lines().take(6) {
                let _ = writeln!(s, "    {side} {line}");
            }
        }
    }
    s
}

fn build_text(r: &DoubleBuildReport) -> String {
    let mut s = format!("verdict: {}\ncommand: {}\n", r.verdict, r.command.join(" "));
    for d in &r.deliverables {
        let ids: Vec<String> = d.report.patterns().iter().map(ToString::to_string).collect();
        let _ = writeln!(s, "  {:<22} {} {}", d.report.verdict.to_string(), d.path, ids.join(","));
    }
    s
}

fn patterns_text() -> String {
    let mut s = format!("{:<4} {:<34} {:<16} {:<34} {:<5} {}\n", "id", "name", "root cause", "strategy", "java", "interpretable");
    for d in registry() {
        let strategy: Vec<String> = d.strategy.iter().map(|x| format!("{x:?}")).collect();
        let _ = writeln!(
            s,
            "{:<4} {:<34} {:<16} {:<34} {:<5} {}",
            d.id.to_string(),
            d.name,
            format!("{:?}", d.root_cause),
            strategy.join(", "),
            if d.java_specific { "yes" } else { "no" },
            if d.interpretable_here { "yes" } else { "no" }
        );
    }
    s
}

fn fixtures(out: &Path, patterns: Vec<PatternId>, seed: u64, count: u64, example: bool, nondeterministic: bool) -> Result<(), Failure> {
    if patterns.contains(&PatternId::Unknown) {
        return Err(Failure::Usage("fixtures need a concrete pattern".into()));
    }
    if example {
        let (a, b) = running_example();
        write_file(&out.join("foo1.jar"), &a)?;
        write_file(&out.join("foo2.jar"), &b)?;
        return Ok(());
    }
    if nondeterministic {
        let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_nanos() as u64).unwrap_or_default();
        let entropy = now ^ (u64::from(std::process::id()) << 32);
        for k in 0..count {
            let bytes = nondeterministic_package(seed.wrapping_add(k), entropy.wrapping_add(k), &patterns);
            write_file(&out.join(format!("app-{k:03}.jar")), &bytes)?;
        }
        return Ok(());
    }
    let patterns = if patterns.is_empty() { PatternId::ALL.to_vec() } else { patterns };
    let mut labels = serde_json::Map::new();
    for p in patterns {
        for k in 0..count {
            let (a, b, label) = generate_pair(&FixtureSpec::new(p, seed.wrapping_add(k)));
            let dir = format!("{p}-{:04}", seed.wrapping_add(k));
            write_file(&out.join(&dir).join("a.jar"), &a)?;
            write_file(&out.join(&dir).join("b.jar"), &b)?;
            labels.insert(dir, serde_json::Value::String(label.to_string()));
        }
    }
    let body = serde_json::to_string_pretty(&labels).expect("labels serialize");
    write_file(&out.join("labels.json"), format!("{body}\n").as_bytes())?;
    Ok(())
}
