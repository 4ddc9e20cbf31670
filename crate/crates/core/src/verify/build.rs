use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::Command;

use globset::{Glob, GlobMatcher};
use rayon::prelude::*;
use serde::Serialize;
use walkdir::WalkDir;

use super::{verify_bytes, Verdict, VerificationReport, VerifyError};
use crate::normalize::NormalizePolicy;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub enum Isolation {
    /// Both runs execute in `workdir`; outputs of the first run are copied
    /// aside before the second starts.
    None,
    /// Each run gets its own temporary copy of `workdir`.
    #[default]
    FreshTempDir,
}

#[derive(Clone, Debug, Serialize)]
pub struct DoubleBuildJob {
    /// Program and arguments, used unchanged for both runs.
    pub command: Vec<String>,
    pub workdir: PathBuf,
    /// Glob over paths relative to the run directory, e.g. `target/*.jar`.
    pub output_glob: String,
    pub isolation: Isolation,
    /// Run both builds at once (only with fresh directories).
    pub parallel: bool,
}

impl DoubleBuildJob {
    pub fn new(command: Vec<String>, workdir: impl Into<PathBuf>, output_glob: impl Into<String>) -> Self {
        DoubleBuildJob {
            command,
            workdir: workdir.into(),
            output_glob: output_glob.into(),
            isolation: Isolation::FreshTempDir,
            parallel: false,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DeliverableReport {
    pub path: String,
    pub report: VerificationReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct DoubleBuildReport {
    pub schema: &'static str,
    pub verdict: Verdict,
    pub command: Vec<String>,
    pub deliverables: Vec<DeliverableReport>,
}

impl DoubleBuildReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// The weakest verdict among the deliverables; bitwise when there are none.
pub fn aggregate<'a>(verdicts: impl IntoIterator<Item = &'a Verdict>) -> Verdict {
    verdicts.into_iter().copied().min().unwrap_or(Verdict::VerifiedBitwise)
}

fn copy_tree(from: &Path, to: &Path) -> Result<(), VerifyError> {
    for e in WalkDir::new(from).follow_links(false) {
        let e = e.map_err(|e| VerifyError::Io(e.into()))?;
        let rel = e.path().strip_prefix(from).expect("walk stays under root");
        let dest = to.join(rel);
        if e.file_type().is_dir() {
            std::fs::create_dir_all(&dest)?;
        } else if e.file_type().is_file() {
            std::fs::copy(e.path(), &dest)?;
        }
    }
    Ok(())
}

fn run(job: &DoubleBuildJob, dir: &Path, run: u8) -> Result<(), VerifyError> {
    let (program, args) = job.command.split_first().ok_or(VerifyError::BuildCommandFailed { run, detail: "empty command".into() })?;
    let out = Command::new(program)
        .args(args)
        .current_dir(dir)
        .output()
        .map_err(|e| VerifyError::BuildCommandFailed { run, detail: format!("{program}: {e}") })?;
    if !out.status.success() {
        let stderr = String::from_utf8_lossy(&out.stderr);
        let tail: String = stderr.lines().rev().take(5).collect::<Vec<_>>().into_iter().rev().collect::<Vec<_>>().join("\n");
        return Err(VerifyError::BuildCommandFailed { run, detail: format!("{}; {tail}", out.status) });
    }
    Ok(())
}

/// Relative paths of regular files under `dir` matching `glob`, sorted.
fn outputs(dir: &Path, glob: &GlobMatcher) -> Result<BTreeSet<String>, VerifyError> {
    let mut found = BTreeSet::new();
    for e in WalkDir::new(dir) {
        let e = e.map_err(|e| VerifyError::Io(e.into()))?;
        if !e.file_type().is_file() {
            continue;
        }
        let rel = e.path().strip_prefix(dir).expect("walk stays under root");
        let rel = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
        if glob.is_match(&rel) {
            found.insert(rel);
        }
    }
    Ok(found)
}

/// Runs the build twice, pairs outputs by relative path and verifies each
/// pair.
pub fn run_double_build(job: &DoubleBuildJob, policy: &NormalizePolicy) -> Result<DoubleBuildReport, VerifyError> {
    let glob = Glob::new(&job.output_glob).map_err(|e| VerifyError::NoOutputs(format!("{} ({e})", job.output_glob)))?.compile_matcher();
    let temp = tempfile::tempdir()?;
    let dirs = [temp.path().join("run1"), temp.path().join("run2")];
    match job.isolation {
        Isolation::FreshTempDir => {
            for d in &dirs {
                std::fs::create_dir_all(d)?;
                copy_tree(&job.workdir, d)?;
            }
            if job.parallel {
                let (r1, r2) = rayon::join(|| run(job, &dirs[0], 1), || run(job, &dirs[1], 2));
                r1?;
                r2?;
            } else {
                run(job, &dirs[0], 1)?;
                run(job, &dirs[1], 2)?;
            }
        }
        Isolation::None => {
            for (i, d) in dirs.iter().enumerate() {
                run(job, &job.workdir, i as u8 + 1)?;
                for rel in outputs(&job.workdir, &glob)? {
                    let dest = d.join(&rel);
                    std::fs::create_dir_all(dest.parent().expect("joined path has parent"))?;
                    std::fs::copy(job.workdir.join(&rel), dest)?;
                }
            }
        }
    }
    let (first, second) = (outputs(&dirs[0], &glob)?, outputs(&dirs[1], &glob)?);
    if first != second {
        return Err(VerifyError::OutputMismatch {
            only_first: first.difference(&second).cloned().collect(),
            only_second: second.difference(&first).cloned().collect(),
        });
    }
    if first.is_empty() {
        return Err(VerifyError::NoOutputs(job.output_glob.clone()));
    }
    let deliverables = first
        .par_iter()
        .map(|rel| {
            let a = std::fs::read(dirs[0].join(rel))?;
            let b = std::fs::read(dirs[1].join(rel))?;
            let report = verify_bytes((rel, &a), (rel, &b), policy)?;
            Ok(DeliverableReport { path: rel.clone(), report })
        })
        .collect::<Result<Vec<_>, VerifyError>>()?;
    let verdict = aggregate(deliverables.iter().map(|d| &d.report.verdict));
    Ok(DoubleBuildReport { schema: "verjar-build-report/1", verdict, command: job.command.clone(), deliverables })
}
