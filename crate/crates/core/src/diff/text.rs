use std::collections::BTreeMap;

use similar::{capture_diff_slices, group_diff_ops, Algorithm, DiffOp};

use super::{DiffPolicy, Finding, ResolvedBy};
use crate::archive::EntryKind;
use crate::patterns::PatternId;
use crate::textformats::{
    apply_to_bytes, attribute_rule, parse_manifest, parse_properties, rewrite_value, sort_property_runs, ManifestModel, RuleAction,
    RuleHit, TextRule,
};

const CONTEXT_LINES: usize = 2;
const CONTEXT_BYTES: usize = 64;

fn split_lines(text: &[u8]) -> Vec<&[u8]> {
    if text.is_empty() {
        return Vec::new();
    }
    let body = text.strip_suffix(b"\n").unwrap_or(text);
    body.split(|&b| b == b'\n').map(|l| l.strip_suffix(b"\r").unwrap_or(l)).collect()
}

fn line_of(text: &[u8], offset: usize) -> usize {
    1 + text[..offset.min(text.len())].iter().filter(|&&b| b == b'\n').count()
}

/// The match plus up to 64 bytes of surrounding context on its line.
fn excerpt(text: &[u8], start: usize, end: usize) -> String {
    let line_start = text[..start].iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
    let line_end = text[end..].iter().position(|&b| b == b'\n').map_or(text.len(), |i| end + i);
    let from = line_start.max(start.saturating_sub(CONTEXT_BYTES));
    let to = line_end.min(end + CONTEXT_BYTES);
    String::from_utf8_lossy(&text[from..to]).trim_end_matches('\r').to_string()
}

pub(crate) fn is_doc_like(name: &str) -> bool {
    let lower = name.to_ascii_lowercase();
    let file = lower.rsplit('/').next().unwrap_or(&lower);
    matches!(file, "package-list" | "element-list")
        || lower.contains("apidocs/")
        || lower.contains("javadoc")
        || ((lower.ends_with(".html") || lower.ends_with(".htm")) && lower.contains("doc"))
}

/// Findings for rewriting rules whose matched text differs between the
/// sides, one per rule, paired by occurrence order.
fn rule_findings(entry: &str, a: &[u8], b: &[u8], ha: &[RuleHit], hb: &[RuleHit], policy: &DiffPolicy) -> Vec<Finding> {
    let mut by_rule: BTreeMap<&str, (Vec<&RuleHit>, Vec<&RuleHit>)> = BTreeMap::new();
    for h in ha.iter().filter(|h| h.replacement.is_some()) {
        by_rule.entry(&h.rule).or_default().0.push(h);
    }
    for h in hb.iter().filter(|h| h.replacement.is_some()) {
        by_rule.entry(&h.rule).or_default().1.push(h);
    }
    let mut out = Vec::new();
    for (rule, (xs, ys)) in by_rule {
        let differing: Vec<(&RuleHit, &RuleHit)> =
            xs.iter().zip(&ys).filter(|(x, y)| x.original != y.original).map(|(x, y)| (*x, *y)).collect();
        let Some(&(x, y)) = differing.first() else { continue };
        let mut f = Finding::new(
            entry,
            x.pattern,
            vec![entry.into(), format!("rule {rule}"), format!("line {}", line_of(a, x.offset))],
            excerpt(a, x.offset, x.offset + x.original.len()),
            excerpt(b, y.offset, y.offset + y.original.len()),
        )
        .with_candidates(x.candidates.iter().chain(&y.candidates).copied());
        if differing.len() > 1 {
            f = f.with_note(format!("{} occurrences differ", differing.len()));
        }
        out.push(policy.resolve(f, ResolvedBy::TextRule));
    }
    out
}

/// Labels the differences between two text payloads: rule-matched spans
/// first, then whole-file permutations, then each remaining hunk.
pub fn classify_text_diff(entry: &str, kind: EntryKind, a: &[u8], b: &[u8], policy: &DiffPolicy) -> Vec<Finding> {
    let rules = policy.rules.for_entry(entry);
    let (na, ha) = apply_to_bytes(a, &rules);
    let (nb, hb) = apply_to_bytes(b, &rules);
    let mut out = rule_findings(entry, a, b, &ha, &hb, policy);
    if na == nb {
        return out;
    }
    let (la, lb) = (split_lines(&na), split_lines(&nb));
    let mut sa = la.clone();
    let mut sb = lb.clone();
    sa.sort_unstable();
    sb.sort_unstable();
    if sa == sb {
        out.push(permutation_finding(entry, kind, &na, &nb, &la, &lb, policy));
        return out;
    }
    let ops = capture_diff_slices(Algorithm::Myers, &la, &lb);
    for group in group_diff_ops(ops, CONTEXT_LINES) {
        out.push(hunk_finding(entry, &la, &lb, &group, &rules));
    }
    out
}

fn permutation_finding(entry: &str, kind: EntryKind, na: &[u8], nb: &[u8], la: &[&[u8]], lb: &[&[u8]], policy: &DiffPolicy) -> Finding {
    let first = la.iter().zip(lb).position(|(x, y)| x != y).unwrap_or(0);
    let window = |v: &[&[u8]]| {
        v[first..(first + 3).min(v.len())].iter().map(|l| String::from_utf8_lossy(l).into_owned()).collect::<Vec<_>>().join("\n")
    };
    let locus = vec![entry.to_string(), "line order".into(), format!("line {}", first + 1)];
    if is_doc_like(entry) {
        return Finding::new(entry, PatternId::P8, locus, window(la), window(lb)).with_note("generated documentation lines reordered");
    }
    if kind == EntryKind::Properties {
        let sorted = |t: &[u8]| sort_property_runs(&parse_properties(t)).map(|m| m.to_bytes());
        if let (Some(x), Some(y)) = (sorted(na), sorted(nb)) {
            if x == y {
                let f = Finding::new(entry, PatternId::P12, locus, window(la), window(lb)).with_note("properties reordered");
                return policy.resolve(f, ResolvedBy::TextRule);
            }
        }
    }
    Finding::new(entry, PatternId::Unknown, locus, window(la), window(lb)).with_note("permutation")
}

fn hunk_finding(entry: &str, la: &[&[u8]], lb: &[&[u8]], group: &[DiffOp], rules: &[&TextRule]) -> Finding {
    let mut left = Vec::new();
    let mut right = Vec::new();
    let mut first_line = None;
    for op in group {
        let (_, old, new) = op.as_tag_tuple();
        if matches!(op, DiffOp::Equal { .. }) {
            continue;
        }
        first_line.get_or_insert(old.start + 1);
        left.extend(old.map(|i| la[i]));
        right.extend(new.map(|i| lb[i]));
    }
    let join = |v: &[&[u8]]| v.iter().map(|l| String::from_utf8_lossy(l).into_owned()).collect::<Vec<_>>().join("\n");
    let (l, r) = (join(&left), join(&right));
    let matching: Vec<&TextRule> = rules.iter().copied().filter(|x| x.is_match(l.as_bytes()) || x.is_match(r.as_bytes())).collect();
    let locus = vec![entry.to_string(), format!("line {}", first_line.unwrap_or(1))];
    match crate::textformats::best_rule(&matching) {
        Some(w) => Finding::new(entry, w.pattern, locus, l, r).with_candidates(matching.iter().map(|x| x.pattern)),
        None => Finding::new(entry, PatternId::Unknown, locus, l, r),
    }
}

fn section_key(m: &ManifestModel, i: usize) -> String {
    if i == 0 {
        return String::new();
    }
    let s = &m.named_sections[i - 1];
    s.name().map_or_else(|| format!("#{i}"), |n| format!("Name: {n}"))
}

type Flat = Vec<(String, Vec<(String, String)>)>;

fn flatten(m: &ManifestModel) -> Flat {
    m.sections()
        .enumerate()
        .map(|(i, s)| (section_key(m, i), s.attributes.iter().map(|a| (a.name.clone(), a.value.clone())).collect()))
        .collect()
}

/// One finding per differing attribute, plus order and layout findings when
/// the attribute values agree.
pub fn classify_manifest_diff(entry: &str, a: &[u8], b: &[u8], policy: &DiffPolicy) -> Vec<Finding> {
    let (ma, mb) = match (parse_manifest(a), parse_manifest(b)) {
        (Ok(x), Ok(y)) => (x, y),
        _ => {
            return classify_text_diff(entry, EntryKind::Text, a, b, policy)
                .into_iter()
                .map(|f| if f.note.is_none() { f.with_note("manifest did not parse; compared as text") } else { f })
                .collect()
        }
    };
    let rules = policy.rules.for_entry(entry);
    let (fa, fb) = (flatten(&ma), flatten(&mb));
    let lookup = |flat: &Flat, sec: &str, name: &str| -> Option<String> {
        flat.iter()
            .find(|(k, _)| k == sec)
            .and_then(|(_, attrs)| attrs.iter().find(|(n, _)| n.eq_ignore_ascii_case(name)).map(|(_, v)| v.clone()))
    };
    let mut keys: Vec<(String, String)> = Vec::new();
    for (sec, attrs) in fa.iter().chain(&fb) {
        for (n, _) in attrs {
            if !keys.iter().any(|(s, k)| s == sec && k.eq_ignore_ascii_case(n)) {
                keys.push((sec.clone(), n.clone()));
            }
        }
    }
    let mut out = Vec::new();
    for (sec, name) in &keys {
        let (va, vb) = (lookup(&fa, sec, name), lookup(&fb, sec, name));
        if va == vb {
            continue;
        }
        let mut locus = vec![entry.to_string()];
        if !sec.is_empty() {
            locus.push(sec.clone());
        }
        locus.push(name.clone());
        let show = |v: &Option<String>| v.as_ref().map_or("<absent>".to_string(), |v| format!("{name}: {v}"));
        let present = va.as_deref().or(vb.as_deref()).unwrap_or_default();
        let other = if va.is_some() { vb.as_deref() } else { None };
        let Some((rule, candidates)) = attribute_rule(name, present, other, &rules) else {
            out.push(Finding::new(entry, PatternId::Unknown, locus, show(&va), show(&vb)));
            continue;
        };
        let reconciles = match &rule.action {
            RuleAction::DropAttribute => true,
            RuleAction::Classify => false,
            _ => match (&va, &vb) {
                (Some(x), Some(y)) => rewrite_value(rule, name, x) == rewrite_value(rule, name, y),
                _ => false,
            },
        };
        let f = Finding::new(entry, rule.pattern, locus, show(&va), show(&vb)).with_candidates(candidates);
        if !reconciles && rule.action != RuleAction::Classify {
            out.push(Finding { pattern: PatternId::Unknown, ..f }.with_note(format!("rule {} does not reconcile the values", rule.name)));
        } else if reconciles {
            out.push(policy.resolve(f, ResolvedBy::TextRule));
        } else {
            out.push(f);
        }
    }
    if !out.is_empty() {
        return out;
    }
    let order = |flat: &Flat| flat.iter().map(|(k, _)| k.clone()).collect::<Vec<_>>();
    if order(&fa)[1..] != order(&fb)[1..] {
        let f =
            Finding::new(entry, PatternId::P12, vec![entry.into(), "section order".into()], order(&fa).join(", "), order(&fb).join(", "));
        out.push(policy.resolve(f, ResolvedBy::TextRule));
    }
    for (sec, attrs) in &fa {
        let Some((_, other)) = fb.iter().find(|(k, _)| k == sec) else { continue };
        let names = |v: &[(String, String)]| v.iter().map(|(n, _)| n.to_ascii_lowercase()).collect::<Vec<_>>();
        if names(attrs) != names(other) {
            let mut locus = vec![entry.to_string()];
            if !sec.is_empty() {
                locus.push(sec.clone());
            }
            locus.push("attribute order".into());
            let f = Finding::new(entry, PatternId::P12, locus, names(attrs).join(", "), names(other).join(", "));
            out.push(policy.resolve(f, ResolvedBy::TextRule));
        }
    }
    if out.is_empty() {
        let f = Finding::new(
            entry,
            PatternId::P12,
            vec![entry.into(), "line layout".into()],
            format!("{} bytes", a.len()),
            format!("{} bytes", b.len()),
        )
        .with_note("same attributes, different wrapping or line endings");
        out.push(policy.resolve(f, ResolvedBy::TextRule));
    }
    out
}
