use std::collections::BTreeSet;

use super::rules::{apply_to_bytes, best, split_list_value, RuleAction, RuleHit, TextRule};
use super::{physical_lines, TextError};

const LINE_LIMIT: usize = 72;
const NAME_LIMIT: usize = 70;

/// One manifest attribute. `raw` holds the original physical lines, with
/// terminators, when the attribute came from the parser unchanged.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Attribute {
    pub name: String,
    pub value: String,
    raw: Option<Vec<u8>>,
}

impl Attribute {
    pub fn new(name: impl Into<String>, value: impl Into<String>) -> Self {
        Attribute { name: name.into(), value: value.into(), raw: None }
    }

    fn logical_line(&self) -> String {
        format!("{}: {}", self.name, self.value)
    }

    fn emit_canonical(&self, out: &mut Vec<u8>) {
        let line = self.logical_line();
        let mut rest = line.as_str();
        let mut limit = LINE_LIMIT;
        loop {
            if rest.len() <= limit {
                out.extend_from_slice(rest.as_bytes());
                out.extend_from_slice(b"\r\n");
                return;
            }
            let mut cut = limit;
            while !rest.is_char_boundary(cut) {
                cut -= 1;
            }
            out.extend_from_slice(&rest.as_bytes()[..cut]);
            out.extend_from_slice(b"\r\n ");
            rest = &rest[cut..];
            limit = LINE_LIMIT - 1;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Section {
    pub attributes: Vec<Attribute>,
    /// Blank line(s) closing the section, as read.
    trailer: Option<Vec<u8>>,
}

impl Section {
    pub fn new(attributes: Vec<Attribute>) -> Self {
        Section { attributes, trailer: None }
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.attributes.iter().find(|a| a.name.eq_ignore_ascii_case(name)).map(|a| a.value.as_str())
    }

    /// The value of the leading `Name` attribute of a per-entry section.
    pub fn name(&self) -> Option<&str> {
        self.attributes.first().filter(|a| a.name.eq_ignore_ascii_case("Name")).map(|a| a.value.as_str())
    }

    fn forget_layout(&mut self) {
        self.trailer = None;
        for a in &mut self.attributes {
            a.raw = None;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ManifestModel {
    pub main_section: Section,
    pub named_sections: Vec<Section>,
}

impl ManifestModel {
    pub fn sections(&self) -> impl Iterator<Item = &Section> {
        std::iter::once(&self.main_section).chain(&self.named_sections)
    }

    /// Original bytes for untouched parts, canonical encoding for the rest.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for s in self.sections() {
            for a in &s.attributes {
                match &a.raw {
                    Some(raw) => out.extend_from_slice(raw),
                    None => a.emit_canonical(&mut out),
                }
            }
            out.extend_from_slice(s.trailer.as_deref().unwrap_or(b"\r\n"));
        }
        out
    }

    /// CRLF lines wrapped at 72 bytes, one blank line after each section.
    pub fn to_canonical_bytes(&self) -> Vec<u8> {
        let mut m = self.clone();
        m.main_section.forget_layout();
        m.named_sections.iter_mut().for_each(Section::forget_layout);
        m.to_bytes()
    }
}

pub fn parse_manifest(bytes: &[u8]) -> Result<ManifestModel, TextError> {
    let mut sections: Vec<Section> = vec![Section::default()];
    let mut in_trailer = false;
    let mut pending: Option<(String, Vec<u8>, Vec<u8>)> = None;

    fn flush(sections: &mut [Section], pending: &mut Option<(String, Vec<u8>, Vec<u8>)>, line: usize) -> Result<(), TextError> {
        if let Some((name, value, raw)) = pending.take() {
            let section = sections.last_mut().expect("at least one section");
            if section.attributes.iter().any(|a| a.name.eq_ignore_ascii_case(&name)) {
                return Err(TextError::MalformedManifest { line, reason: format!("duplicate attribute {name}") });
            }
            let value = String::from_utf8_lossy(&value).into_owned();
            section.attributes.push(Attribute { name, value, raw: Some(raw) });
        }
        Ok(())
    }

    for (i, (content, term)) in physical_lines(bytes).into_iter().enumerate() {
        let line_no = i + 1;
        let err = |reason: &str| TextError::MalformedManifest { line: line_no, reason: reason.into() };
        if content.is_empty() {
            flush(&mut sections, &mut pending, line_no)?;
            let s = sections.last_mut().expect("at least one section");
            s.trailer.get_or_insert_with(Vec::new).extend_from_slice(term);
            in_trailer = true;
            continue;
        }
        if content[0] == b' ' {
            match (&mut pending, in_trailer) {
                (Some((_, value, raw)), false) => {
                    value.extend_from_slice(&content[1..]);
                    raw.extend_from_slice(content);
                    raw.extend_from_slice(term);
                }
                _ => return Err(err("continuation line without an attribute")),
            }
            continue;
        }
        flush(&mut sections, &mut pending, line_no)?;
        if in_trailer {
            sections.push(Section::default());
            in_trailer = false;
        }
        let colon = content.iter().position(|&b| b == b':').ok_or_else(|| err("missing ':'"))?;
        let name = &content[..colon];
        if name.is_empty() || name.len() > NAME_LIMIT {
            return Err(err("attribute name must be 1 to 70 bytes"));
        }
        if !name.iter().all(|&b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_') {
            return Err(err("attribute name has characters outside [A-Za-z0-9_-]"));
        }
        let value = content[colon + 1..].strip_prefix(b" ").unwrap_or(&content[colon + 1..]);
        let mut raw = content.to_vec();
        raw.extend_from_slice(term);
        pending = Some((String::from_utf8_lossy(name).into_owned(), value.to_vec(), raw));
    }
    flush(&mut sections, &mut pending, usize::MAX)?;
    for s in &mut sections {
        s.trailer.get_or_insert_with(Vec::new);
    }
    let main_section = sections.remove(0);
    Ok(ManifestModel { main_section, named_sections: sections })
}

/// Applies manifest rules attribute by attribute, then sorts attributes
/// byte-wise (`Manifest-Version` first in the main section, `Name` first in
/// per-entry sections) and per-entry sections by name. The result has no
/// preserved layout, so `to_bytes` yields the canonical encoding.
///
/// `rules` should already be filtered to the entry (see `RuleSet::for_entry`).
/// Each rule is matched against the logical line `Name: value`.
pub fn canonicalize_manifest(m: &ManifestModel, rules: &[&TextRule]) -> (ManifestModel, Vec<RuleHit>) {
    let (mut out, hits) = apply_manifest_rules(m, rules);
    for (si, section) in std::iter::once(&mut out.main_section).chain(out.named_sections.iter_mut()).enumerate() {
        let first = if si == 0 { is_version as fn(&str) -> bool } else { |n: &str| n.eq_ignore_ascii_case("Name") };
        section.attributes.sort_by(|a, b| (!first(&a.name), a.name.as_bytes()).cmp(&(!first(&b.name), b.name.as_bytes())));
        section.forget_layout();
    }
    out.named_sections.sort_by(|a, b| a.name().map(str::as_bytes).cmp(&b.name().map(str::as_bytes)));
    (out, hits)
}

/// Applies rule actions without reordering anything. Attributes no rule
/// changed keep their original bytes.
pub fn apply_manifest_rules(m: &ManifestModel, rules: &[&TextRule]) -> (ManifestModel, Vec<RuleHit>) {
    let mut hits = Vec::new();
    let mut offset = 0;
    let mut out = m.clone();
    for (si, section) in std::iter::once(&mut out.main_section).chain(out.named_sections.iter_mut()).enumerate() {
        let mut kept = Vec::with_capacity(section.attributes.len());
        for mut attr in std::mem::take(&mut section.attributes) {
            offset += 1;
            let Some((winner, candidates)) = attribute_rule(&attr.name, &attr.value, None, rules) else {
                kept.push(attr);
                continue;
            };
            let mut hit = RuleHit {
                rule: winner.name.clone(),
                pattern: winner.pattern,
                candidates,
                action: winner.action.clone(),
                offset: offset - 1,
                key: Some(attr.name.clone()),
                original: attr.value.clone(),
                replacement: None,
            };
            match &winner.action {
                RuleAction::DropAttribute if !(si == 0 && is_version(&attr.name)) => {}
                RuleAction::Classify | RuleAction::DropAttribute => kept.push(attr),
                RuleAction::SortListValue | RuleAction::ReplaceWithPlaceholder(_) => {
                    let value = rewrite_value(winner, &attr.name, &attr.value);
                    if value != attr.value {
                        attr.value = value;
                        attr.raw = None;
                    }
                    hit.replacement = Some(attr.value.clone());
                    kept.push(attr);
                }
            }
            hits.push(hit);
        }
        section.attributes = kept;
    }
    (out, hits)
}

/// Best rule for an attribute line, considering the value on either side
/// of a comparison, plus every pattern that matched.
pub(crate) fn attribute_rule<'a>(
    name: &str,
    value: &str,
    other: Option<&str>,
    rules: &[&'a TextRule],
) -> Option<(&'a TextRule, Vec<crate::patterns::PatternId>)> {
    let lines: Vec<String> = std::iter::once(value).chain(other).map(|v| format!("{name}: {v}")).collect();
    let matching: Vec<&TextRule> = rules.iter().copied().filter(|r| lines.iter().any(|l| r.is_match(l.as_bytes()))).collect();
    let winner = best(&matching)?;
    let candidates: BTreeSet<_> = matching.iter().map(|r| r.pattern).collect();
    Some((winner, candidates.into_iter().collect()))
}

/// Value after a sort or replace rule; other actions leave it as is.
pub(crate) fn rewrite_value(rule: &TextRule, name: &str, value: &str) -> String {
    match &rule.action {
        RuleAction::SortListValue => {
            let mut items = split_list_value(value);
            items.sort_unstable();
            items.join(",")
        }
        RuleAction::ReplaceWithPlaceholder(_) => {
            let line = format!("{name}: {value}");
            let head = name.len() + 2;
            if rule.spans(line.as_bytes()).iter().any(|&(s, _)| s < head) {
                return value.to_string();
            }
            let (bytes, _) = apply_to_bytes(line.as_bytes(), &[rule]);
            String::from_utf8_lossy(&bytes[head..]).into_owned()
        }
        _ => value.to_string(),
    }
}

fn is_version(name: &str) -> bool {
    name.eq_ignore_ascii_case("Manifest-Version")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::patterns::PatternId;
    use crate::textformats::RuleSet;

    fn canon(text: &str) -> (String, Vec<RuleHit>) {
        let set = RuleSet::builtin();
        let m = parse_manifest(text.as_bytes()).unwrap();
        let (c, hits) = canonicalize_manifest(&m, &set.for_entry("META-INF/MANIFEST.MF"));
        (String::from_utf8(c.to_bytes()).unwrap(), hits)
    }

    #[test]
    fn minimal_manifest() {
        let m = parse_manifest(b"Manifest-Version: 1.0\r\n\r\n").unwrap();
        assert_eq!(m.main_section.attributes.len(), 1);
        assert!(m.named_sections.is_empty());
        assert_eq!(m.to_bytes(), b"Manifest-Version: 1.0\r\n\r\n");
    }

    #[test]
    fn build_jdk_value() {
        let m = parse_manifest(b"Manifest-Version: 1.0\nBuild-Jdk: 1.8.0_292\n").unwrap();
        assert_eq!(m.main_section.get("build-jdk"), Some("1.8.0_292"));
    }

    #[test]
    fn long_value_wraps_and_round_trips() {
        let value = "x".repeat(150);
        let a = Attribute::new("Class-Path", value.clone());
        let m = ManifestModel { main_section: Section::new(vec![a]), named_sections: vec![] };
        let bytes = m.to_bytes();
        let expected = format!("Class-Path: {}\r\n {}\r\n {}\r\n\r\n", &value[..60], &value[60..131], &value[131..]);
        assert_eq!(String::from_utf8(bytes.clone()).unwrap(), expected);
        let back = parse_manifest(&bytes).unwrap();
        assert_eq!(back.main_section.get("Class-Path"), Some(value.as_str()));
        assert_eq!(back.to_bytes(), bytes);
    }

    #[test]
    fn wrap_does_not_split_multibyte_chars() {
        let value = "\u{00e9}".repeat(40);
        let a = Attribute::new("Implementation-Title", value.clone());
        let mut out = Vec::new();
        a.emit_canonical(&mut out);
        for line in out.split(|&b| b == b'\n') {
            assert!(line.len() <= LINE_LIMIT + 1);
            assert!(std::str::from_utf8(line).is_ok());
        }
        let back = parse_manifest(&out).unwrap();
        assert_eq!(back.main_section.get("Implementation-Title"), Some(value.as_str()));
    }

    #[test]
    fn preserves_odd_layout() {
        let text = b"Manifest-Version:1.0\nCreated-By: x\r\n y\n\n\nName: a/B.class\rSHA-256-Digest: zz";
        let m = parse_manifest(text).unwrap();
        assert_eq!(m.to_bytes(), text.to_vec());
        assert_eq!(m.main_section.get("Created-By"), Some("xy"));
        assert_eq!(m.named_sections[0].name(), Some("a/B.class"));
    }

    #[test]
    fn malformed_inputs() {
        assert!(matches!(parse_manifest(b" leading\n"), Err(TextError::MalformedManifest { line: 1, .. })));
        assert!(parse_manifest(b"A: 1\n\n more\n").is_err());
        let long = format!("{}: v\n", "N".repeat(71));
        assert!(parse_manifest(long.as_bytes()).is_err());
        assert!(parse_manifest(b"no colon here\n").is_err());
        assert!(parse_manifest(b"A: 1\na: 2\n").is_err());
    }

    #[test]
    fn export_package_order_converges() {
        let a = "Manifest-Version: 1.0\r\nExport-Package: com.codahale.metrics.health;uses:=\"com.codahale.metrics\";version=\"4.1.0\",com.codahale.metrics.health.annotation;version=\"4.1.0\"\r\n\r\n";
        let b = "Manifest-Version: 1.0\r\nExport-Package: com.codahale.metrics.health.annotation;version=\"4.1.0\",com.codahale.metrics.health;uses:=\"com.codahale.metrics\";version=\"4.1.0\"\r\n\r\n";
        let (ca, ha) = canon(a);
        let (cb, _) = canon(b);
        assert_eq!(ca, cb);
        assert_eq!(ha[0].pattern, PatternId::P12);
    }

    #[test]
    fn built_by_dropped() {
        let (a, ha) = canon("Manifest-Version: 1.0\nBuild-By: runner\n\n");
        let (b, _) = canon("Manifest-Version: 1.0\nBuild-By: ?\n\n");
        assert_eq!(a, b);
        assert_eq!(a, "Manifest-Version: 1.0\r\n\r\n");
        assert_eq!(ha[0].pattern, PatternId::P4);
        assert_eq!(ha[0].original, "runner");
    }

    #[test]
    fn attribute_order_and_idempotence() {
        let (a, _) = canon("Zed: 1\nManifest-Version: 1.0\nAlpha: 2\n\nName: b\nX: 1\n\nName: a\nY: 2\n");
        let (b, _) = canon("Alpha: 2\nZed: 1\nManifest-Version: 1.0\n\nName: a\nY: 2\n\nName: b\nX: 1\n");
        assert_eq!(a, b);
        assert!(a.starts_with("Manifest-Version: 1.0\r\nAlpha: 2\r\nZed: 1\r\n\r\nName: a\r\n"));
        let (again, _) = canon(&a);
        assert_eq!(again, a);
    }

    #[test]
    fn build_time_replaced() {
        let (a, hits) = canon("Manifest-Version: 1.0\nBnd-LastModified: 1611234567890\n\n");
        assert_eq!(a, "Manifest-Version: 1.0\r\nBnd-LastModified: <TIMESTAMP>\r\n\r\n");
        assert_eq!(hits[0].pattern, PatternId::P1);
    }
}
