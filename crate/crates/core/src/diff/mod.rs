//! Entry-by-entry comparison of two packages, with every difference
//! attributed to a pattern.

mod class;
mod text;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use serde::Serialize;

use crate::archive::{EntryKind, PackageModel};
use crate::patterns::{registry, PatternId};
use crate::textformats::RuleSet;

pub use class::classify_class_diff;
pub use text::{classify_manifest_diff, classify_text_diff};

/// Upper bound on each evidence excerpt.
pub const EVIDENCE_LIMIT: usize = 4096;
/// Name used for findings about the archive as a whole.
pub const ARCHIVE: &str = "<archive>";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum ResolvedBy {
    None,
    Canonicalization,
    TextRule,
    EntryReorder,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Finding {
    pub entry_name: String,
    pub pattern: PatternId,
    /// All labels that matched, the chosen one included.
    pub candidates: Vec<PatternId>,
    pub locus: Vec<String>,
    pub evidence_left: String,
    pub evidence_right: String,
    pub resolved_by: ResolvedBy,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Finding {
    pub fn new(entry: &str, pattern: PatternId, locus: Vec<String>, left: impl Into<String>, right: impl Into<String>) -> Self {
        let locus = if locus.is_empty() { vec![entry.to_string()] } else { locus };
        Finding {
            entry_name: entry.to_string(),
            pattern,
            candidates: vec![pattern],
            locus,
            evidence_left: bounded(left.into()),
            evidence_right: bounded(right.into()),
            resolved_by: ResolvedBy::None,
            note: None,
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn with_candidates(mut self, c: impl IntoIterator<Item = PatternId>) -> Self {
        let mut set: BTreeSet<PatternId> = c.into_iter().collect();
        set.insert(self.pattern);
        self.candidates = set.into_iter().collect();
        self
    }

    pub fn is_resolved(&self) -> bool {
        self.resolved_by != ResolvedBy::None
    }

    /// The same finding seen from the other side.
    pub fn swapped(&self) -> Finding {
        let mut f = self.clone();
        std::mem::swap(&mut f.evidence_left, &mut f.evidence_right);
        f
    }
}

/// Cuts `s` to [`EVIDENCE_LIMIT`] bytes on a character boundary.
pub fn bounded(mut s: String) -> String {
    if s.len() > EVIDENCE_LIMIT {
        let mut cut = EVIDENCE_LIMIT - 3;
        while !s.is_char_boundary(cut) {
            cut -= 1;
        }
        s.truncate(cut);
        s.push_str("...");
    }
    s
}

#[derive(Clone, Debug, Serialize)]
pub struct DiffPolicy {
    /// Patterns whose findings count as resolved. Only interpretable ones
    /// belong here; the normalize policy enforces that at load time.
    pub enabled: BTreeSet<PatternId>,
    /// Accept line-table differences as resolved.
    pub strip_line_numbers: bool,
    /// Rules used for labeling text differences.
    pub rules: RuleSet,
}

impl Default for DiffPolicy {
    fn default() -> Self {
        DiffPolicy {
            enabled: registry().iter().filter(|d| d.interpretable_here).map(|d| d.id).collect(),
            strip_line_numbers: false,
            rules: RuleSet::builtin(),
        }
    }
}

impl DiffPolicy {
    pub(crate) fn resolves(&self, p: PatternId) -> bool {
        self.enabled.contains(&p) || (p == PatternId::P5 && self.strip_line_numbers)
    }

    pub(crate) fn resolve(&self, mut f: Finding, how: ResolvedBy) -> Finding {
        if self.resolves(f.pattern) {
            f.resolved_by = how;
        }
        f
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DiffOutcome {
    pub equivalent: bool,
    pub findings: Vec<Finding>,
    pub stats: BTreeMap<PatternId, usize>,
}

impl DiffOutcome {
    pub fn from_findings(findings: Vec<Finding>) -> Self {
        let mut stats = BTreeMap::new();
        for f in &findings {
            *stats.entry(f.pattern).or_insert(0) += 1;
        }
        DiffOutcome { equivalent: findings.iter().all(Finding::is_resolved), findings, stats }
    }

    pub fn patterns(&self) -> BTreeSet<PatternId> {
        self.findings.iter().map(|f| f.pattern).collect()
    }

    pub fn unresolved(&self) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(|f| !f.is_resolved())
    }
}

pub fn compare_packages(a: &PackageModel, b: &PackageModel, policy: &DiffPolicy) -> DiffOutcome {
    let mut findings = Vec::new();
    let in_b: HashMap<&str, usize> = b.entries.iter().enumerate().map(|(i, e)| (e.name.as_str(), i)).collect();
    let in_a: HashMap<&str, usize> = a.entries.iter().enumerate().map(|(i, e)| (e.name.as_str(), i)).collect();

    for e in &a.entries {
        if !in_b.contains_key(e.name.as_str()) {
            findings.push(Finding::new(&e.name, PatternId::Unknown, vec![e.name.clone(), "entry".into()], "present", "absent"));
        }
    }
    for e in &b.entries {
        if !in_a.contains_key(e.name.as_str()) {
            findings.push(Finding::new(&e.name, PatternId::Unknown, vec![e.name.clone(), "entry".into()], "absent", "present"));
        }
    }
    if a.comment != b.comment {
        findings.push(Finding::new(
            ARCHIVE,
            PatternId::Unknown,
            vec![ARCHIVE.into(), "comment".into()],
            String::from_utf8_lossy(&a.comment),
            String::from_utf8_lossy(&b.comment),
        ));
    }

    let order_a: Vec<&str> = a.entries.iter().map(|e| e.name.as_str()).filter(|n| in_b.contains_key(n)).collect();
    let order_b: Vec<&str> = b.entries.iter().map(|e| e.name.as_str()).filter(|n| in_a.contains_key(n)).collect();
    if order_a != order_b {
        let first = order_a.iter().zip(&order_b).position(|(x, y)| x != y).unwrap_or(0);
        let window = |v: &[&str]| v[first..(first + 4).min(v.len())].join(", ");
        let f = Finding::new(ARCHIVE, PatternId::P11, vec![ARCHIVE.into(), "entry order".into()], window(&order_a), window(&order_b))
            .with_note(format!("first divergence at position {first}"));
        findings.push(policy.resolve(f, ResolvedBy::EntryReorder));
    }

    let pairs: Vec<(usize, usize)> = a.entries.iter().enumerate().filter_map(|(i, e)| in_b.get(e.name.as_str()).map(|&j| (i, j))).collect();

    let mut mtime_diff = pairs.iter().filter(|&&(i, j)| a.entries[i].mtime != b.entries[j].mtime);
    if let Some(&(i, j)) = mtime_diff.next() {
        let count = 1 + mtime_diff.count();
        let (x, y) = (&a.entries[i], &b.entries[j]);
        let f = Finding::new(
            ARCHIVE,
            PatternId::P1,
            vec![ARCHIVE.into(), "entry mtime".into(), x.name.clone()],
            x.mtime.to_string(),
            y.mtime.to_string(),
        )
        .with_note(format!("{count} entries with differing modification times"));
        findings.push(policy.resolve(f, ResolvedBy::Canonicalization));
    }
    for &(i, j) in &pairs {
        let (x, y) = (&a.entries[i], &b.entries[j]);
        let mut meta = Vec::new();
        if x.external_attrs != y.external_attrs {
            meta.push(("external attributes", format!("{:#010x}", x.external_attrs), format!("{:#010x}", y.external_attrs)));
        }
        if x.extra_field != y.extra_field {
            meta.push(("extra field", hex::encode(&x.extra_field), hex::encode(&y.extra_field)));
        }
        if x.comment != y.comment {
            meta.push((
                "entry comment",
                String::from_utf8_lossy(&x.comment).into_owned(),
                String::from_utf8_lossy(&y.comment).into_owned(),
            ));
        }
        for (what, l, r) in meta {
            findings.push(Finding::new(&x.name, PatternId::Unknown, vec![x.name.clone(), what.into()], l, r));
        }
    }

    let per_entry: Vec<Vec<Finding>> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (x, y) = (&a.entries[i], &b.entries[j]);
            if x.payload == y.payload {
                return Vec::new();
            }
            compare_payloads(&x.name, x.kind, &x.payload, y.kind, &y.payload, policy)
        })
        .collect();
    findings.extend(per_entry.into_iter().flatten());
    DiffOutcome::from_findings(findings)
}

fn compare_payloads(name: &str, ka: EntryKind, a: &[u8], kb: EntryKind, b: &[u8], policy: &DiffPolicy) -> Vec<Finding> {
    if ka != kb {
        return vec![Finding::new(name, PatternId::Unknown, vec![name.into(), "kind".into()], format!("{ka:?}"), format!("{kb:?}"))];
    }
    match ka {
        EntryKind::ClassFile => classify_class_diff(name, a, b, policy),
        EntryKind::Manifest => classify_manifest_diff(name, a, b, policy),
        EntryKind::Properties | EntryKind::Xml | EntryKind::Json | EntryKind::Text => classify_text_diff(name, ka, a, b, policy),
        EntryKind::Directory | EntryKind::Opaque => vec![Finding::new(
            name,
            PatternId::Unknown,
            vec![name.into(), "payload".into()],
            format!("{} bytes, sha256 {}", a.len(), crate::digest::short_sha256(a)),
            format!("{} bytes, sha256 {}", b.len(), crate::digest::short_sha256(b)),
        )],
    }
}

#[cfg(test)]
mod tests;
