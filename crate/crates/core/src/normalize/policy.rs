use std::collections::BTreeSet;

use serde::Serialize;

use crate::archive::{DosDateTime, SortKey};
use crate::classfile::ClassCanonPolicy;
use crate::diff::DiffPolicy;
use crate::patterns::{registry, PatternId};
use crate::textformats::RuleSet;

/// Environment variable consulted for the pinned time when none is given.
pub const PINNED_TIME_ENV: &str = "SOURCE_DATE_EPOCH";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PolicyError {
    #[error("{0} cannot be interpreted by post-processing and may not be enabled")]
    NotInterpretable(PatternId),
    #[error("{0} is both enabled and disabled")]
    Conflict(PatternId),
    #[error("policy line {line}: {reason}")]
    Syntax { line: usize, reason: String },
}

#[derive(Clone, Debug, Serialize)]
pub struct NormalizePolicy {
    pub enabled_patterns: BTreeSet<PatternId>,
    #[serde(serialize_with = "as_text")]
    pub pinned_time: DosDateTime,
    pub sort_key: SortKey,
    pub class_policy: ClassCanonPolicy,
    pub rules: RuleSet,
    pub compression_level: u32,
}

fn as_text<S: serde::Serializer>(t: &DosDateTime, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(t)
}

pub fn interpretable() -> BTreeSet<PatternId> {
    registry().iter().filter(|d| d.interpretable_here).map(|d| d.id).collect()
}

impl Default for NormalizePolicy {
    fn default() -> Self {
        NormalizePolicy {
            enabled_patterns: interpretable(),
            pinned_time: DosDateTime::MIN,
            sort_key: SortKey::NameBytes,
            class_policy: ClassCanonPolicy::default(),
            rules: RuleSet::builtin(),
            compression_level: 9,
        }
    }
}

impl NormalizePolicy {
    pub fn with_patterns(enabled: impl IntoIterator<Item = PatternId>) -> Result<Self, PolicyError> {
        let p = NormalizePolicy { enabled_patterns: enabled.into_iter().collect(), ..Self::default() };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), PolicyError> {
        match self.enabled_patterns.iter().find(|p| !p.is_interpretable()) {
            Some(&p) => Err(PolicyError::NotInterpretable(p)),
            None => Ok(()),
        }
    }

    pub fn enables(&self, p: PatternId) -> bool {
        self.enabled_patterns.contains(&p)
    }

    /// The comparison policy matching what this normalization removes.
    pub fn diff_policy(&self) -> DiffPolicy {
        DiffPolicy {
            enabled: self.enabled_patterns.clone(),
            strip_line_numbers: self.class_policy.strip_line_numbers,
            rules: self.rules.clone(),
        }
    }

    /// Applies `SOURCE_DATE_EPOCH` (seconds or ISO-8601) if it is set and parses.
    pub fn apply_env(&mut self) -> bool {
        match std::env::var(PINNED_TIME_ENV).ok().and_then(|v| DosDateTime::parse(v.trim())) {
            Some(t) => {
                self.pinned_time = t;
                true
            }
            None => false,
        }
    }

    /// Reads a policy file on top of the defaults.
    ///
    /// ```text
    /// # comment
    /// enable P1 P4 P11
    /// disable P12
    /// only P1 P11
    /// pinned-time 2021-09-18T22:43:23
    /// sort-key name-bytes | manifest-first
    /// strip-line-numbers true
    /// compression-level 9
    /// rule P1 | my-stamp | replace=<TIMESTAMP> | 40 | **/*.txt | built at (?P<value>.*)
    /// ```
    pub fn parse(text: &str) -> Result<Self, PolicyError> {
        let mut p = Self::default();
        let mut enabled = BTreeSet::new();
        let mut disabled = BTreeSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |reason: String| PolicyError::Syntax { line: i + 1, reason };
            let (key, rest) = line.split_once(char::is_whitespace).map_or((line, ""), |(k, r)| (k, r.trim()));
            let ids = || -> Result<Vec<PatternId>, PolicyError> {
                rest.split([' ', ',']).filter(|s| !s.is_empty()).map(|s| s.parse().map_err(|e| err(format!("{e}")))).collect()
            };
            let flag = || match rest {
                "true" | "yes" | "on" => Ok(true),
                "false" | "no" | "off" => Ok(false),
                v => Err(err(format!("expected true or false, found {v:?}"))),
            };
            match key {
                "enable" => enabled.extend(ids()?),
                "disable" => disabled.extend(ids()?),
                "only" => p.enabled_patterns = ids()?.into_iter().collect(),
                "pinned-time" => p.pinned_time = DosDateTime::parse(rest).ok_or_else(|| err(format!("bad time {rest:?}")))?,
                "sort-key" => {
                    p.sort_key = match rest {
                        "name-bytes" => SortKey::NameBytes,
                        "manifest-first" => SortKey::ManifestFirst,
                        v => return Err(err(format!("unknown sort key {v:?}"))),
                    }
                }
                "strip-line-numbers" => p.class_policy.strip_line_numbers = flag()?,
                "compression-level" => {
                    p.compression_level = rest.parse().ok().filter(|l| *l <= 9).ok_or_else(|| err(format!("bad level {rest:?}")))?
                }
                "rule" => {
                    let rules = RuleSet::parse(rest).map_err(|e| err(e.to_string()))?;
                    p.rules.extend(rules);
                }
                k => return Err(err(format!("unknown key {k:?}"))),
            }
        }
        if let Some(&c) = enabled.intersection(&disabled).next() {
            return Err(PolicyError::Conflict(c));
        }
        p.enabled_patterns.extend(enabled);
        p.enabled_patterns.retain(|x| !disabled.contains(x));
        p.validate()?;
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_interpretable_set() {
        let p = NormalizePolicy::default();
        assert!(p.validate().is_ok());
        assert_eq!(p.enabled_patterns.len(), 8);
        assert_eq!(NormalizePolicy::with_patterns([PatternId::P2]).unwrap_err(), PolicyError::NotInterpretable(PatternId::P2));
    }

    #[test]
    fn parses_policy_file() {
        let p = NormalizePolicy::parse(
            "# x\nonly P1 P11\npinned-time 2021-09-18T22:43:24\nsort-key manifest-first\nstrip-line-numbers yes\n\
             rule P1 | stamp | replace=<T> | 40 | **/*.txt | at (?P<value>\\d+)\n",
        )
        .unwrap();
        assert_eq!(p.enabled_patterns, [PatternId::P1, PatternId::P11].into_iter().collect());
        assert_eq!(p.pinned_time.to_string(), "2021-09-18T22:43:24");
        assert_eq!(p.sort_key, SortKey::ManifestFirst);
        assert!(p.class_policy.strip_line_numbers);
        assert!(p.rules.rules().iter().any(|r| r.name == "stamp"));
    }

    #[test]
    fn rejects_bad_policies() {
        assert_eq!(NormalizePolicy::parse("enable P13").unwrap_err(), PolicyError::NotInterpretable(PatternId::P13));
        assert_eq!(NormalizePolicy::parse("enable P4\ndisable P4").unwrap_err(), PolicyError::Conflict(PatternId::P4));
        assert!(matches!(NormalizePolicy::parse("\nfrobnicate 1"), Err(PolicyError::Syntax { line: 2, .. })));
        let p = NormalizePolicy::parse("disable P12").unwrap();
        assert!(!p.enables(PatternId::P12));
    }
}
