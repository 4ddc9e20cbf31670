//! Post-processing that removes interpretable differences from a package:
//! per-entry payload passes followed by a deterministic repack.

mod policy;

use rayon::prelude::*;
use serde::Serialize;

use crate::archive::{write_entries, ArchiveEntry, ArchiveError, EntryKind, PackageModel};
use crate::classfile::{parse_class, rewrite_class, PoolRewrite, RewritePolicy};
use crate::digest::short_sha256;
use crate::patterns::PatternId;
use crate::textformats::{
    apply_manifest_rules, apply_to_bytes, canonicalize_manifest, parse_manifest, parse_properties, sort_property_runs, RuleAction, RuleSet,
    TextRule,
};

pub use policy::{interpretable, NormalizePolicy, PolicyError, PINNED_TIME_ENV};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PassId {
    ClassRewrite,
    Manifest,
    TextRules,
}

/// One payload modification.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LogRecord {
    pub entry_name: String,
    pub pass: PassId,
    pub summary: String,
    pub before_digest: String,
    pub after_digest: String,
}

impl LogRecord {
    /// Patterns this modification removed.
    pub fn patterns(&self) -> Vec<PatternId> {
        patterns_in(&self.summary)
    }
}

/// Something worth reporting that did not modify the payload.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LogNote {
    pub entry_name: String,
    pub pass: PassId,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct NormalizeLog {
    pub records: Vec<LogRecord>,
    pub notes: Vec<LogNote>,
}

impl NormalizeLog {
    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Patterns some record claims to have removed.
    pub fn patterns(&self) -> std::collections::BTreeSet<PatternId> {
        self.records.iter().flat_map(LogRecord::patterns).collect()
    }
}

fn patterns_in(summary: &str) -> Vec<PatternId> {
    summary
        .split(|c: char| !c.is_ascii_alphanumeric())
        .filter_map(|w| w.parse::<PatternId>().ok().filter(|p| *p != PatternId::Unknown))
        .collect()
}

#[derive(Debug, thiserror::Error)]
pub enum NormalizeError {
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Archive(#[from] ArchiveError),
}

struct EntryResult {
    payload: Option<Vec<u8>>,
    records: Vec<LogRecord>,
    notes: Vec<LogNote>,
}

impl EntryResult {
    fn new() -> Self {
        EntryResult { payload: None, records: Vec::new(), notes: Vec::new() }
    }

    fn current<'a>(&'a self, e: &'a ArchiveEntry) -> &'a [u8] {
        self.payload.as_deref().unwrap_or(&e.payload)
    }

    fn update(&mut self, e: &ArchiveEntry, pass: PassId, summary: String, bytes: Vec<u8>) {
        if bytes.as_slice() == self.current(e) {
            return;
        }
        self.records.push(LogRecord {
            entry_name: e.name.clone(),
            pass,
            summary,
            before_digest: short_sha256(self.current(e)),
            after_digest: short_sha256(&bytes),
        });
        self.payload = Some(bytes);
    }

    fn note(&mut self, e: &ArchiveEntry, pass: PassId, message: String) {
        self.notes.push(LogNote { entry_name: e.name.clone(), pass, message });
    }
}

/// Applies the enabled passes to every entry, then repacks. Entries are
/// sorted when P11 is enabled and get the pinned time when P1 is. Entries whose rewrite is unsafe pass through
/// unchanged with a note.
pub fn normalize_package(pkg: &PackageModel, policy: &NormalizePolicy) -> Result<(Vec<u8>, NormalizeLog), NormalizeError> {
    policy.validate()?;
    let active = policy.rules.restricted_to(&policy.enabled_patterns);
    let results: Vec<EntryResult> = pkg.entries.par_iter().map(|e| normalize_entry(e, policy, &active)).collect();

    let mut out = pkg.clone();
    let mut log = NormalizeLog::default();
    for (e, r) in out.entries.iter_mut().zip(results) {
        if let Some(p) = r.payload {
            e.set_payload(p);
        }
        log.records.extend(r.records);
        log.notes.extend(r.notes);
    }
    let mut entries: Vec<&ArchiveEntry> = out.entries.iter().collect();
    if policy.enables(PatternId::P11) {
        policy.sort_key.sort(&mut entries);
    }
    let pinned = policy.enables(PatternId::P1).then_some(policy.pinned_time);
    Ok((write_entries(&entries, pinned, policy.compression_level)?, log))
}

fn normalize_entry(e: &ArchiveEntry, policy: &NormalizePolicy, active: &RuleSet) -> EntryResult {
    let mut r = EntryResult::new();
    match e.kind {
        EntryKind::ClassFile => class_pass(e, policy, &mut r),
        EntryKind::Manifest => {
            if !manifest_pass(e, policy, active, &mut r) {
                text_pass(e, policy, active, &mut r);
            }
        }
        EntryKind::Properties | EntryKind::Xml | EntryKind::Json | EntryKind::Text => text_pass(e, policy, active, &mut r),
        EntryKind::Directory | EntryKind::Opaque => {}
    }
    if e.kind != EntryKind::ClassFile {
        unclaimed_notes(e, policy, &mut r);
    }
    r
}

fn class_pass(e: &ArchiveEntry, policy: &NormalizePolicy, r: &mut EntryResult) {
    let rp = RewritePolicy {
        sort_methods: policy.enables(PatternId::P10) && policy.class_policy.sort_methods,
        sort_inner_classes: policy.enables(PatternId::P9) && policy.class_policy.sort_inner_classes,
        strip_line_numbers: policy.class_policy.strip_line_numbers,
        renumber_pool: policy.enables(PatternId::P6),
    };
    if !(rp.sort_methods || rp.sort_inner_classes || rp.strip_line_numbers || rp.renumber_pool) {
        return;
    }
    let model = match parse_class(&e.payload) {
        Ok(m) => m,
        Err(err) => return r.note(e, PassId::ClassRewrite, format!("left as is: {err}")),
    };
    let outcome = match rewrite_class(&model, &rp) {
        Ok(o) => o,
        Err(err) => return r.note(e, PassId::ClassRewrite, format!("left as is: {err}")),
    };
    if let PoolRewrite::Aborted(reason) = &outcome.pool {
        r.note(e, PassId::ClassRewrite, format!("RewriteAborted: {reason}"));
    }
    let mut did = Vec::new();
    if outcome.pool == PoolRewrite::Renumbered {
        did.push("P6 pool renumbered".to_string());
    }
    if outcome.methods_reordered {
        did.push("P10 methods sorted".into());
    }
    if outcome.inner_classes_sorted {
        did.push("P9 inner classes sorted".into());
    }
    if outcome.line_tables_stripped > 0 {
        did.push(format!("P5 {} line tables stripped", outcome.line_tables_stripped));
    }
    if did.is_empty() {
        did.push("re-encoded".into());
    }
    r.update(e, PassId::ClassRewrite, did.join("; "), outcome.bytes);
}

/// Returns false when the payload is not a well-formed manifest.
fn manifest_pass(e: &ArchiveEntry, policy: &NormalizePolicy, active: &RuleSet, r: &mut EntryResult) -> bool {
    let Ok(m) = parse_manifest(&e.payload) else {
        r.note(e, PassId::Manifest, "did not parse as a manifest; treated as text".into());
        return false;
    };
    let rules = active.for_entry(&e.name);
    let sort = policy.enables(PatternId::P12);
    let (out, hits) = if sort { canonicalize_manifest(&m, &rules) } else { apply_manifest_rules(&m, &rules) };
    let mut did: Vec<String> = Vec::new();
    for h in hits.iter().filter(|h| h.action != RuleAction::Classify) {
        let verb = match h.action {
            RuleAction::DropAttribute => "dropped",
            RuleAction::SortListValue => "sorted",
            _ => "replaced",
        };
        if h.action == RuleAction::DropAttribute || h.replacement.as_deref() != Some(h.original.as_str()) {
            did.push(format!("{} {verb} {}", h.pattern, h.key.as_deref().unwrap_or("?")));
        }
    }
    if sort {
        did.push("P12 attributes and sections in canonical order".into());
    }
    let bytes = if sort { out.to_canonical_bytes() } else { out.to_bytes() };
    r.update(e, PassId::Manifest, did.join("; "), bytes);
    true
}

fn text_pass(e: &ArchiveEntry, policy: &NormalizePolicy, active: &RuleSet, r: &mut EntryResult) {
    let rules: Vec<&TextRule> = active.for_entry(&e.name);
    let (bytes, hits) = apply_to_bytes(r.current(e), &rules);
    let replaced: Vec<String> = hits
        .iter()
        .filter(|h| h.replacement.is_some())
        .map(|h| format!("{} {} -> {}", h.pattern, h.rule, h.replacement.as_deref().unwrap_or_default()))
        .collect();
    if !replaced.is_empty() {
        r.update(e, PassId::TextRules, dedup(replaced).join("; "), bytes);
    }
    if e.kind == EntryKind::Properties && policy.enables(PatternId::P12) {
        if let Some(sorted) = sort_property_runs(&parse_properties(r.current(e))) {
            r.update(e, PassId::TextRules, "P12 property runs sorted by key".into(), sorted.to_bytes());
        }
    }
}

fn dedup(mut v: Vec<String>) -> Vec<String> {
    let mut seen = std::collections::HashSet::new();
    v.retain(|s| seen.insert(s.clone()));
    v
}

/// Notes rules for patterns this policy does not remove, so a reader can see
/// which differences were left alone on purpose.
fn unclaimed_notes(e: &ArchiveEntry, policy: &NormalizePolicy, r: &mut EntryResult) {
    let mut seen = std::collections::BTreeSet::new();
    for rule in policy.rules.for_entry(&e.name) {
        if policy.enables(rule.pattern) || seen.contains(&rule.pattern) {
            continue;
        }
        let pass = if e.kind == EntryKind::Manifest { PassId::Manifest } else { PassId::TextRules };
        let text = r.current(e).to_vec();
        let matched = if e.kind == EntryKind::Manifest {
            crate::textformats::physical_lines(&text).iter().any(|(l, _)| rule.is_match(l))
        } else {
            rule.is_match(&text)
        };
        if matched {
            seen.insert(rule.pattern);
            r.note(e, pass, format!("{} matched by {}; no pass claimed the entry", rule.pattern, rule.name));
        }
    }
}

#[cfg(test)]
mod tests;
