//! The verification pipeline: compare two builds, normalize both, compare
//! again and decide a verdict.

mod build;
mod render;
mod spec;

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::archive::{read_package, ArchiveError, PackageModel};
use crate::classfile::MAGIC;
use crate::diff::{compare_packages, DiffOutcome};
use crate::digest::Digests;
use crate::normalize::{normalize_package, NormalizeError, NormalizeLog, NormalizePolicy};
use crate::patterns::{PatternId, RootCause, Strategy};

pub use build::{aggregate, run_double_build, DeliverableReport, DoubleBuildJob, DoubleBuildReport, Isolation};
pub use render::render_text;
pub use spec::{BuildSpecDoc, EnvFact, FactSource, MitigationOp};

/// Version tag of the JSON report layout.
pub const REPORT_SCHEMA: &str = "verjar-report/1";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Ordered weakest first, so the minimum of several verdicts is the
/// overall one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    NotVerified,
    VerifiedInterpreted,
    VerifiedBitwise,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::NotVerified => "NOT_VERIFIED",
            Verdict::VerifiedInterpreted => "VERIFIED_INTERPRETED",
            Verdict::VerifiedBitwise => "VERIFIED_BITWISE",
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum VerifyError {
    #[error("cannot read {path}: {reason}")]
    InputUnreadable { path: String, reason: String },
    #[error("build run {run} failed: {detail}")]
    BuildCommandFailed { run: u8, detail: String },
    #[error("the two runs produced different outputs (only first: {only_first:?}; only second: {only_second:?})")]
    OutputMismatch { only_first: Vec<String>, only_second: Vec<String> },
    #[error("no output matched {0}")]
    NoOutputs(String),
    #[error(transparent)]
    Normalize(#[from] NormalizeError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InputDigest {
    pub name: String,
    pub size: u64,
    pub sha1: String,
    pub sha256: String,
}

impl InputDigest {
    fn of(name: &str, bytes: &[u8]) -> Self {
        let d = Digests::of(bytes);
        InputDigest { name: name.to_string(), size: bytes.len() as u64, sha1: d.sha1, sha256: d.sha256 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PatternStat {
    pub name: &'static str,
    pub root_cause: Option<RootCause>,
    pub strategy: Vec<Strategy>,
    pub findings: usize,
    pub resolved: usize,
    /// Short excerpt from the first finding.
    pub example: String,
    pub advice: &'static str,
}

#[derive(Clone, Debug, Serialize)]
pub struct Normalized {
    pub digests: [String; 2],
    pub logs: [NormalizeLog; 2],
    pub outcome: DiffOutcome,
}

/// Input locations; kept apart from everything the verdict depends on.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ReportMetadata {
    pub paths: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub schema: &'static str,
    pub tool_version: &'static str,
    pub verdict: Verdict,
    pub reason: String,
    pub inputs: [InputDigest; 2],
    pub diff: DiffOutcome,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normalized: Option<Normalized>,
    pub pattern_stats: BTreeMap<PatternId, PatternStat>,
    pub policy: NormalizePolicy,
    pub metadata: ReportMetadata,
}

impl VerificationReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Patterns seen before normalization, UNKNOWN included.
    pub fn patterns(&self) -> std::collections::BTreeSet<PatternId> {
        self.diff.patterns()
    }
}

/// Reads an archive, or wraps a bare class file as a one-entry package.
pub fn load_package(name: &str, bytes: &[u8]) -> Result<PackageModel, ArchiveError> {
    if bytes.len() >= 4 && u32::from_be_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]) == MAGIC {
        let file = name.rsplit(['/', '\\']).next().unwrap_or(name);
        let file = if file.ends_with(".class") { file.to_string() } else { format!("{file}.class") };
        return Ok(PackageModel::single_file(&file, bytes));
    }
    read_package(bytes)
}

fn read_input(path: &Path) -> Result<Vec<u8>, VerifyError> {
    std::fs::read(path).map_err(|e| VerifyError::InputUnreadable { path: path.display().to_string(), reason: e.to_string() })
}

pub fn verify_pair(path_a: &Path, path_b: &Path, policy: &NormalizePolicy) -> Result<VerificationReport, VerifyError> {
    let (a, b) = (read_input(path_a)?, read_input(path_b)?);
    let name = |p: &Path| p.file_name().map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned());
    let mut report = verify_bytes((&name(path_a), &a), (&name(path_b), &b), policy)?;
    report.metadata.paths = vec![path_a.display().to_string(), path_b.display().to_string()];
    Ok(report)
}

/// Same as [`verify_pair`] on in-memory inputs, each given as (name, bytes).
pub fn verify_bytes(a: (&str, &[u8]), b: (&str, &[u8]), policy: &NormalizePolicy) -> Result<VerificationReport, VerifyError> {
    policy.validate().map_err(NormalizeError::from)?;
    let inputs = [InputDigest::of(a.0, a.1), InputDigest::of(b.0, b.1)];
    let mut report = VerificationReport {
        schema: REPORT_SCHEMA,
        tool_version: TOOL_VERSION,
        verdict: Verdict::VerifiedBitwise,
        reason: "inputs are byte-identical".into(),
        inputs,
        diff: DiffOutcome::from_findings(Vec::new()),
        normalized: None,
        pattern_stats: BTreeMap::new(),
        policy: policy.clone(),
        metadata: ReportMetadata::default(),
    };
    if report.inputs[0].sha256 == report.inputs[1].sha256 {
        return Ok(report);
    }
    let load = |(name, bytes): (&str, &[u8])| {
        load_package(name, bytes).map_err(|e| VerifyError::InputUnreadable { path: name.to_string(), reason: e.to_string() })
    };
    let (pa, pb) = (load(a)?, load(b)?);
    let dp = policy.diff_policy();
    report.diff = compare_packages(&pa, &pb, &dp);
    report.pattern_stats = pattern_stats(&report.diff);

    let (na, la) = normalize_package(&pa, policy)?;
    let (nb, lb) = normalize_package(&pb, policy)?;
    let post = if na == nb {
        DiffOutcome::from_findings(Vec::new())
    } else {
        let reread = |bytes: &[u8]| read_package(bytes).expect("normalized output parses");
        compare_packages(&reread(&na), &reread(&nb), &dp)
    };
    let unknown = report.diff.findings.iter().filter(|f| f.pattern == PatternId::Unknown).count();
    let uncovered: Vec<PatternId> =
        report.diff.unresolved().map(|f| f.pattern).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
    let open: Vec<PatternId> = post.unresolved().map(|f| f.pattern).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
    (report.verdict, report.reason) = if unknown > 0 {
        (Verdict::NotVerified, format!("{unknown} difference(s) match no known pattern"))
    } else if !uncovered.is_empty() {
        let ids: Vec<String> = uncovered.iter().map(ToString::to_string).collect();
        (Verdict::NotVerified, format!("not explained under this policy: {}", ids.join(", ")))
    } else if !open.is_empty() {
        let ids: Vec<String> = open.iter().map(ToString::to_string).collect();
        (Verdict::NotVerified, format!("differences remain after normalization: {}", ids.join(", ")))
    } else if na == nb {
        (Verdict::VerifiedInterpreted, "normalized outputs are byte-identical".into())
    } else {
        (Verdict::VerifiedInterpreted, "normalized outputs are equal in canonical form".into())
    };
    let digest = |x: &[u8]| Digests::of(x).sha256;
    report.normalized = Some(Normalized { digests: [digest(&na), digest(&nb)], logs: [la, lb], outcome: post });
    Ok(report)
}

fn pattern_stats(outcome: &DiffOutcome) -> BTreeMap<PatternId, PatternStat> {
    let mut out: BTreeMap<PatternId, PatternStat> = BTreeMap::new();
    for f in &outcome.findings {
        let s = out.entry(f.pattern).or_insert_with(|| {
            let d = f.pattern.descriptor();
            let example = excerpt(&f.evidence_left, &f.evidence_right);
            PatternStat {
                name: d.map_or("unclassified difference", |d| d.name),
                root_cause: d.map(|d| d.root_cause),
                strategy: d.map(|d| d.strategy.iter().copied().collect()).unwrap_or_default(),
                findings: 0,
                resolved: 0,
                example,
                advice: d.map_or("inspect the evidence; no pattern explains this difference", |d| d.advice),
            }
        });
        s.findings += 1;
        s.resolved += usize::from(f.is_resolved());
    }
    out
}

fn excerpt(left: &str, right: &str) -> String {
    let clip = |s: &str| {
        let line = s.lines().next().unwrap_or_default();
        if line.chars().count() > 48 {
            format!("{}...", line.chars().take(45).collect::<String>())
        } else {
            line.to_string()
        }
    };
    format!("{} | {}", clip(left), clip(right))
}

#[cfg(test)]
mod tests;
