use std::collections::BTreeSet;
use std::fmt;

use globset::{GlobBuilder, GlobMatcher};
use regex::bytes::Regex;
use serde::{Serialize, Serializer};

use super::TextError;
use crate::archive::ArchiveEntry;
use crate::patterns::PatternId;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "placeholder")]
pub enum RuleAction {
    Classify,
    ReplaceWithPlaceholder(String),
    SortListValue,
    DropAttribute,
}

impl fmt::Display for RuleAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RuleAction::Classify => f.write_str("classify"),
            RuleAction::ReplaceWithPlaceholder(p) => write!(f, "replace={p}"),
            RuleAction::SortListValue => f.write_str("sort-list"),
            RuleAction::DropAttribute => f.write_str("drop"),
        }
    }
}

/// One classification or rewrite rule. The matcher runs over raw bytes; if it
/// has a capture group named `value`, only that span is affected.
#[derive(Clone, Debug)]
pub struct TextRule {
    pub pattern: PatternId,
    pub name: String,
    pub action: RuleAction,
    pub priority: u16,
    glob_src: String,
    glob: GlobMatcher,
    matcher: Regex,
}

impl TextRule {
    pub fn new(pattern: PatternId, name: &str, action: RuleAction, priority: u16, glob: &str, regex: &str) -> Result<Self, String> {
        if pattern == PatternId::Unknown {
            return Err("a rule must cite one of P1..P14".into());
        }
        if name.is_empty() || name.contains(char::is_whitespace) {
            return Err(format!("bad rule name {name:?}"));
        }
        if let RuleAction::ReplaceWithPlaceholder(p) = &action {
            if p.is_empty() {
                return Err("replace needs a placeholder".into());
            }
        }
        let matcher = GlobBuilder::new(glob).literal_separator(true).build().map_err(|e| format!("glob {glob:?}: {e}"))?.compile_matcher();
        let re = Regex::new(regex).map_err(|e| format!("regex: {e}"))?;
        Ok(TextRule { pattern, name: name.to_string(), action, priority, glob_src: glob.to_string(), glob: matcher, matcher: re })
    }

    pub fn glob(&self) -> &str {
        &self.glob_src
    }

    pub fn regex(&self) -> &str {
        self.matcher.as_str()
    }

    pub fn applies_to(&self, entry_name: &str) -> bool {
        self.glob.is_match(entry_name)
    }

    /// Spans this rule claims in `text`: the `value` group when present,
    /// else the whole match. Empty spans are ignored.
    pub(crate) fn spans(&self, text: &[u8]) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for caps in self.matcher.captures_iter(text) {
            let m = caps.name("value").or_else(|| caps.get(0));
            if let Some(m) = m {
                if m.start() < m.end() {
                    out.push((m.start(), m.end()));
                }
            }
        }
        out
    }

    pub(crate) fn is_match(&self, text: &[u8]) -> bool {
        self.matcher.is_match(text)
    }

    fn rank(&self) -> (std::cmp::Reverse<u16>, u8) {
        (std::cmp::Reverse(self.priority), self.pattern.number())
    }

    /// The record as it would appear in a rules file.
    pub fn to_line(&self) -> String {
        format!("{} | {} | {} | {} | {} | {}", self.pattern, self.name, self.action, self.priority, self.glob_src, self.regex())
    }
}

impl Serialize for TextRule {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct View<'a> {
            pattern: PatternId,
            name: &'a str,
            action: &'a RuleAction,
            priority: u16,
            glob: &'a str,
            regex: &'a str,
        }
        View {
            pattern: self.pattern,
            name: &self.name,
            action: &self.action,
            priority: self.priority,
            glob: &self.glob_src,
            regex: self.regex(),
        }
        .serialize(s)
    }
}

/// What one rule did, or would do, at one place in a payload.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RuleHit {
    pub rule: String,
    pub pattern: PatternId,
    /// Every pattern whose rules matched the same span, winner included.
    pub candidates: Vec<PatternId>,
    pub action: RuleAction,
    /// Byte offset in the input text; for manifests, the attribute's position.
    pub offset: usize,
    /// Manifest attribute name when the hit came from a manifest.
    pub key: Option<String>,
    pub original: String,
    pub replacement: Option<String>,
}

#[derive(Clone, Debug, Default, Serialize)]
#[serde(transparent)]
pub struct RuleSet {
    rules: Vec<TextRule>,
}

const DAY: &str = "(?:Mon|Tue|Wed|Thu|Fri|Sat|Sun)";
const MONTH: &str = "(?:Jan|Feb|Mar|Apr|May|Jun|Jul|Aug|Sep|Oct|Nov|Dec)";

impl RuleSet {
    pub fn new(rules: Vec<TextRule>) -> Self {
        RuleSet { rules }
    }

    pub fn builtin() -> Self {
        use PatternId::*;
        use RuleAction::*;
        let ts = || ReplaceWithPlaceholder("<TIMESTAMP>".into());
        let date_to_string =
            format!(r"(?m)^#[ \t]*(?P<value>{DAY} {MONTH} [ \d]\d \d{{2}}:\d{{2}}:\d{{2}} [A-Za-z0-9+:/_-]+ \d{{4}})[ \t]*\r?$");
        let rfc1123 = format!(r"(?P<value>{DAY}, \d{{1,2}} {MONTH} \d{{4}} \d{{2}}:\d{{2}}:\d{{2}} (?:GMT|UTC|[+-]\d{{4}}))");
        let specs: Vec<(PatternId, &str, RuleAction, u16, &str, String)> = vec![
            (P1, "properties-date-comment", ts(), 20, "**/*.properties", date_to_string),
            (P1, "xml-created-entry", ts(), 30, "**/*.xml", r#"<entry key="created">(?P<value>[^<]*)</entry>"#.into()),
            (
                P1,
                "manifest-build-time",
                ts(),
                30,
                "**/*.MF",
                r"(?i)^(?:Bnd-LastModified|Build-Time|Build-Date|Build-Timestamp): (?P<value>.+)$".into(),
            ),
            (P1, "rfc1123-timestamp", ts(), 10, "**", rfc1123),
            (
                P1,
                "iso8601-timestamp",
                ts(),
                10,
                "**",
                r"(?P<value>\d{4}-\d{2}-\d{2}[T ]\d{2}:\d{2}:\d{2}(?:[.,]\d{1,9})?(?:Z|[+-]\d{2}:?\d{2})?)".into(),
            ),
            (
                P2,
                "manifest-jdk",
                Classify,
                30,
                "**/*.MF",
                r"(?i)^(?:Build-Jdk|Build-Jdk-Spec|Created-By|X-Compile-Source-JDK|X-Compile-Target-JDK): (?P<value>.+)$".into(),
            ),
            (
                P3,
                "git-json-field",
                ReplaceWithPlaceholder("<GIT_STATE>".into()),
                30,
                "**/git.json",
                r#""git\.[A-Za-z0-9_.]+"[ \t]*:[ \t]*"(?P<value>(?:[^"\\]|\\.)*)""#.into(),
            ),
            (
                P3,
                "git-properties-field",
                ReplaceWithPlaceholder("<GIT_STATE>".into()),
                30,
                "**/git.properties",
                r"(?m)^git\.[A-Za-z0-9_.]+[ \t]*[=:][ \t]*(?P<value>[^\r\n]*)".into(),
            ),
            (P4, "manifest-built-by", DropAttribute, 30, "**/*.MF", r"(?i)^Buil(?:t|d)-By: ".into()),
            (
                P12,
                "manifest-package-lists",
                SortListValue,
                30,
                "**/*.MF",
                r"(?i)^(?:Export-Package|Import-Package|Private-Package|Include-Resource|Provide-Capability|Require-Capability): ".into(),
            ),
            (P13, "jsp-dependants", Classify, 30, "**", r"_jspx_dependants".into()),
        ];
        let rules =
            specs.into_iter().map(|(p, n, a, pr, g, r)| TextRule::new(p, n, a, pr, g, &r).expect("built-in rule compiles")).collect();
        RuleSet { rules }
    }

    /// Parses a rules file. One rule per line:
    ///
    /// ```text
    /// <pattern> | <name> | <action> | <priority> | <glob> | <regex>
    /// ```
    ///
    /// `action` is `classify`, `replace=<placeholder>`, `sort-list` or `drop`.
    /// The regex is the rest of the line (it may contain `|`) with outer
    /// whitespace trimmed. Blank lines and lines starting with `#` are skipped.
    pub fn parse(text: &str) -> Result<Self, TextError> {
        let mut rules = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let err = |reason: String| TextError::InvalidRule { line: i + 1, reason };
            let f: Vec<&str> = t.splitn(6, '|').map(str::trim).collect();
            if f.len() != 6 {
                return Err(err(format!("expected 6 fields, found {}", f.len())));
            }
            let pattern: PatternId = f[0].parse().map_err(|e| err(format!("{e}")))?;
            let action = match f[2] {
                "classify" => RuleAction::Classify,
                "sort-list" => RuleAction::SortListValue,
                "drop" => RuleAction::DropAttribute,
                a => match a.strip_prefix("replace=") {
                    Some(p) => RuleAction::ReplaceWithPlaceholder(p.to_string()),
                    None => return Err(err(format!("unknown action {a:?}"))),
                },
            };
            let priority = f[3].parse().map_err(|_| err(format!("bad priority {:?}", f[3])))?;
            rules.push(TextRule::new(pattern, f[1], action, priority, f[4], f[5]).map_err(err)?);
        }
        Ok(RuleSet { rules })
    }

    pub fn extend(&mut self, other: RuleSet) {
        self.rules.extend(other.rules);
    }

    pub fn rules(&self) -> &[TextRule] {
        &self.rules
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn for_entry(&self, entry_name: &str) -> Vec<&TextRule> {
        self.rules.iter().filter(|r| r.applies_to(entry_name)).collect()
    }

    /// Keeps only rules citing a pattern in `patterns`.
    pub fn restricted_to(&self, patterns: &BTreeSet<PatternId>) -> RuleSet {
        RuleSet { rules: self.rules.iter().filter(|r| patterns.contains(&r.pattern)).cloned().collect() }
    }
}

/// Picks a winner per attribute or span: highest priority, then lowest
/// pattern number, then rule order.
pub(crate) fn best<'a>(rules: &[&'a TextRule]) -> Option<&'a TextRule> {
    rules.iter().enumerate().min_by_key(|(i, r)| (r.rank(), *i)).map(|(_, r)| *r)
}

/// Runs `rules` over `text`. Overlapping spans go to the best-ranked rule;
/// losers are listed as candidates. Only winning spans are rewritten and
/// every other byte is copied through. `SortListValue` and `DropAttribute`
/// only classify outside manifests.
pub fn apply_to_bytes(text: &[u8], rules: &[&TextRule]) -> (Vec<u8>, Vec<RuleHit>) {
    struct Claim<'a> {
        start: usize,
        end: usize,
        rule: &'a TextRule,
        order: usize,
        candidates: BTreeSet<PatternId>,
    }
    let mut all: Vec<Claim> = Vec::new();
    for (order, r) in rules.iter().enumerate() {
        for (start, end) in r.spans(text) {
            all.push(Claim { start, end, rule: r, order, candidates: BTreeSet::new() });
        }
    }
    all.sort_by_key(|c| (c.rule.rank(), c.order, c.start));
    let mut won: Vec<Claim> = Vec::new();
    for c in all {
        match won.iter_mut().find(|w| w.start < c.end && c.start < w.end) {
            Some(w) => {
                w.candidates.insert(c.rule.pattern);
            }
            None => won.push(c),
        }
    }
    won.sort_by_key(|c| c.start);

    let mut out = Vec::with_capacity(text.len());
    let mut hits = Vec::new();
    let mut at = 0;
    for mut c in won {
        out.extend_from_slice(&text[at..c.start]);
        let original = &text[c.start..c.end];
        let replacement = match &c.rule.action {
            RuleAction::ReplaceWithPlaceholder(p) => Some(p.clone()),
            _ => None,
        };
        out.extend_from_slice(replacement.as_deref().map_or(original, str::as_bytes));
        c.candidates.insert(c.rule.pattern);
        hits.push(RuleHit {
            rule: c.rule.name.clone(),
            pattern: c.rule.pattern,
            candidates: c.candidates.into_iter().collect(),
            action: c.rule.action.clone(),
            offset: c.start,
            key: None,
            original: String::from_utf8_lossy(original).into_owned(),
            replacement,
        });
        at = c.end;
    }
    out.extend_from_slice(&text[at..]);
    (out, hits)
}

/// Applies the rules whose glob matches the entry name to its payload.
pub fn apply_text_rules(entry: &ArchiveEntry, rules: &RuleSet) -> (Vec<u8>, Vec<RuleHit>) {
    apply_to_bytes(&entry.payload, &rules.for_entry(&entry.name))
}

/// Splits a manifest list value on commas outside double quotes.
pub fn split_list_value(value: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut quoted = false;
    let mut start = 0;
    for (i, ch) in value.char_indices() {
        match ch {
            '"' => quoted = !quoted,
            ',' if !quoted => {
                out.push(&value[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&value[start..]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn builtin_for(name: &str) -> Vec<TextRule> {
        RuleSet::builtin().for_entry(name).into_iter().cloned().collect()
    }

    fn run(name: &str, text: &str) -> (String, Vec<RuleHit>) {
        let rules = builtin_for(name);
        let refs: Vec<&TextRule> = rules.iter().collect();
        let (out, hits) = apply_to_bytes(text.as_bytes(), &refs);
        (String::from_utf8(out).unwrap(), hits)
    }

    #[test]
    fn maven_comment_timestamp() {
        let text = "#Generated by Maven\n# Sun Sep 18 22:43:23 EDT 2021\nversion=1.0\n";
        let (out, hits) = run("META-INF/maven/g/a/pom.properties", text);
        assert_eq!(out, "#Generated by Maven\n# <TIMESTAMP>\nversion=1.0\n");
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].pattern, PatternId::P1);
        assert_eq!(hits[0].original, "Sun Sep 18 22:43:23 EDT 2021");
    }

    #[test]
    fn git_fields_converge() {
        let a = r#"{"git.local.branch.ahead" : "NO_REMOTE", "git.branch" : "main"}"#;
        let b = r#"{"git.local.branch.ahead" : "0", "git.branch" : "main"}"#;
        let (oa, ha) = run("git.json", a);
        let (ob, _) = run("git.json", b);
        assert_eq!(oa, ob);
        assert!(oa.contains(r#""git.local.branch.ahead" : "<GIT_STATE>""#));
        assert!(ha.iter().all(|h| h.pattern == PatternId::P3));
        let (on, _) = run("git.json", r#"{"git.total.commit.count" : 41}"#);
        assert_eq!(on, r#"{"git.total.commit.count" : 41}"#);
    }

    #[test]
    fn xml_created_beats_generic_iso() {
        let text = r#"<entry key="created">2021-01-17T13:47:15.000Z</entry>"#;
        let (out, hits) = run("META-INF/x/config.xml", text);
        assert_eq!(out, r#"<entry key="created"><TIMESTAMP></entry>"#);
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].rule, "xml-created-entry");
        assert_eq!(hits[0].candidates, vec![PatternId::P1]);
    }

    #[test]
    fn non_matching_bytes_pass_through() {
        let text = "no dates here\n\u{00e9}\n";
        let (out, hits) = run("a.txt", text);
        assert_eq!(out, text);
        assert!(hits.is_empty());
    }

    #[test]
    fn overlap_goes_to_priority_then_lowest_pattern() {
        let hi = TextRule::new(PatternId::P3, "hi", RuleAction::ReplaceWithPlaceholder("<H>".into()), 5, "**", "abc").unwrap();
        let lo = TextRule::new(PatternId::P1, "lo", RuleAction::ReplaceWithPlaceholder("<L>".into()), 1, "**", "bcd").unwrap();
        let (out, hits) = apply_to_bytes(b"xabcdx", &[&lo, &hi]);
        assert_eq!(out, b"x<H>dx");
        assert_eq!(hits[0].candidates, vec![PatternId::P1, PatternId::P3]);
        let tie = TextRule::new(PatternId::P2, "tie", RuleAction::Classify, 5, "**", "bc").unwrap();
        let (out, hits) = apply_to_bytes(b"xabcdx", &[&hi, &tie]);
        assert_eq!(out, b"xabcdx");
        assert_eq!(hits[0].pattern, PatternId::P2);
    }

    #[test]
    fn rules_file_round_trip() {
        let text = "# comment\n\nP1 | stamp | replace=<T> | 7 | **/*.txt | built (?P<value>\\d+|never)\n";
        let set = RuleSet::parse(text).unwrap();
        let r = &set.rules()[0];
        assert_eq!(r.regex(), r"built (?P<value>\d+|never)");
        assert_eq!(r.priority, 7);
        let again = RuleSet::parse(&r.to_line()).unwrap();
        assert_eq!(again.rules()[0].to_line(), r.to_line());
        assert!(RuleSet::parse("UNKNOWN | x | classify | 1 | ** | a").is_err());
        assert!(RuleSet::parse("P1 | x | classify | 1 | ** | (").is_err());
        assert!(RuleSet::parse("P1 | x | explode | 1 | ** | a").is_err());
        assert!(RuleSet::parse("P1 | x | classify | 1 | **").is_err());
    }

    #[test]
    fn list_split_respects_quotes() {
        let v = r#"a.b;uses:="x,y";version="1",c.d"#;
        assert_eq!(split_list_value(v), vec![r#"a.b;uses:="x,y";version="1""#, "c.d"]);
        assert_eq!(split_list_value(""), vec![""]);
    }
}
