//! Registry of non-determinism patterns: root cause, mitigation strategy and
//! advice for each, plus whether this crate can normalize it away.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PatternId {
    P1,
    P2,
    P3,
    P4,
    P5,
    P6,
    P7,
    P8,
    P9,
    P10,
    P11,
    P12,
    P13,
    P14,
    #[serde(rename = "UNKNOWN")]
    Unknown,
}

impl PatternId {
    pub const ALL: [PatternId; 14] = [
        PatternId::P1,
        PatternId::P2,
        PatternId::P3,
        PatternId::P4,
        PatternId::P5,
        PatternId::P6,
        PatternId::P7,
        PatternId::P8,
        PatternId::P9,
        PatternId::P10,
        PatternId::P11,
        PatternId::P12,
        PatternId::P13,
        PatternId::P14,
    ];

    /// 1..=14, or 0 for `Unknown`.
    pub fn number(self) -> u8 {
        PatternId::ALL.iter().position(|&p| p == self).map_or(0, |i| i as u8 + 1)
    }

    pub fn from_number(n: u8) -> Option<PatternId> {
        PatternId::ALL.get((n as usize).wrapping_sub(1)).copied()
    }

    pub fn descriptor(self) -> Option<&'static PatternDescriptor> {
        registry().iter().find(|d| d.id == self)
    }

    pub fn is_interpretable(self) -> bool {
        self.descriptor().is_some_and(|d| d.interpretable_here)
    }
}

impl fmt::Display for PatternId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatternId::Unknown => f.write_str("UNKNOWN"),
            p => write!(f, "P{}", p.number()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown pattern id {0:?}")]
pub struct ParsePatternError(pub String);

impl FromStr for PatternId {
    type Err = ParsePatternError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("unknown") {
            return Ok(PatternId::Unknown);
        }
        t.strip_prefix(['P', 'p'])
            .and_then(|n| n.parse::<u8>().ok())
            .and_then(PatternId::from_number)
            .ok_or_else(|| ParsePatternError(s.to_string()))
    }
}

#[allow(non_camel_case_types)]
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RootCause {
    RC1_Environment,
    RC2_JDK,
    RC3_MultiThread,
    RC4_OtherTools,
    RC5_Compound,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Strategy {
    Control,
    Interpretation,
    Remediation,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PatternDescriptor {
    pub id: PatternId,
    pub name: &'static str,
    pub root_cause: RootCause,
    pub strategy: BTreeSet<Strategy>,
    pub java_specific: bool,
    pub summary: &'static str,
    pub advice: &'static str,
    pub interpretable_here: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("pattern registry invalid: {0}")]
pub struct RegistryError(pub String);

#[allow(clippy::too_many_arguments)]
fn d(
    id: PatternId,
    name: &'static str,
    root_cause: RootCause,
    strategy: &[Strategy],
    java_specific: bool,
    interpretable_here: bool,
    summary: &'static str,
    advice: &'static str,
) -> PatternDescriptor {
    PatternDescriptor {
        id,
        name,
        root_cause,
        strategy: strategy.iter().copied().collect(),
        java_specific,
        summary,
        advice,
        interpretable_here,
    }
}

fn build() -> Vec<PatternDescriptor> {
    use PatternId::*;
    use RootCause::*;
    use Strategy::*;
    vec![
        d(P1, "Timestamp", RC1_Environment, &[Control, Interpretation], false, true,
          "Build time recorded in generated files or in archive entry times.",
          "Pin the clock seen by build tools, or normalize: replace recorded times with a placeholder and pin entry times on repack."),
        d(P2, "JDK version", RC1_Environment, &[Control], true, false,
          "Compiler runtime version recorded in the manifest (Build-Jdk and similar).",
          "Build with the exact same JDK release and record it in the build specification."),
        d(P3, "Git information", RC1_Environment, &[Control], false, false,
          "Version-control state (commit, branch, remote tracking) packaged into the deliverable.",
          "Build from identically configured clones, remotes included, and record that setup."),
        d(P4, "User information", RC1_Environment, &[Remediation, Control], true, true,
          "Account name of whoever ran the build recorded in the manifest (Built-By).",
          "Give Built-By a fixed value in the archiver's manifest entries configuration, or build under the same account in a shared environment."),
        d(P5, "LineNumberTable", RC2_JDK, &[Remediation], true, false,
          "Source line mapping in class files differs between builds.",
          "Compile without line tables (javac -g:none or the equivalent compiler plugin setting) if line mapping is not required."),
        d(P6, "Constant pool", RC2_JDK, &[Interpretation], true, true,
          "Constant pool entries duplicated or ordered differently, so indices differ.",
          "Compare classes by resolved constants; rewrite the pool deduplicated in first-reference order."),
        d(P7, "Temporary variables", RC2_JDK, &[Interpretation], true, true,
          "Local variable slots of temporaries numbered differently.",
          "Compare method bodies with non-parameter slots relabeled by first use."),
        d(P8, "Javadoc", RC2_JDK, &[Control], true, false,
          "Generated documentation lists entries in a different order.",
          "Use a JDK whose javadoc tool emits a stable order (8u105 or later)."),
        d(P9, "Inner class order", RC2_JDK, &[Interpretation], true, true,
          "InnerClasses attribute entries in a different order.",
          "Sort InnerClasses entries by inner class name."),
        d(P10, "Method order", RC2_JDK, &[Interpretation], true, true,
          "Methods of a class emitted in a different order.",
          "Sort methods by name and descriptor bytes."),
        d(P11, "Entries in deliverable packages", RC3_MultiThread, &[Interpretation], false, true,
          "Archive entries stored in a different order.",
          "Repack entries in a fixed order (byte-wise by name)."),
        d(P12, "Properties in files", RC4_OtherTools, &[Interpretation], true, true,
          "List-valued manifest headers (Export-Package, Import-Package, Private-Package) in a different order.",
          "Sort the elements of list-valued manifest headers."),
        d(P13, "JSP compilation", RC4_OtherTools, &[Control], true, false,
          "Generated JSP sources differ in the _jspx_dependants block.",
          "Disable the JSP compiler's dependency caching so the block is generated consistently."),
        d(P14, "Lambda expression", RC5_Compound, &[Control], true, false,
          "Synthetic lambda$...$N methods numbered differently.",
          "Compile with a JDK newer than jdk8-b44 and without parallel compilation of the affected sources."),
    ]
}

/// Checks the structural counts the rest of the crate relies on.
pub fn validate(list: &[PatternDescriptor]) -> Result<(), RegistryError> {
    use PatternId::*;
    use Strategy::*;
    let err = |m: String| Err(RegistryError(m));
    if list.len() != 14 {
        return err(format!("expected 14 patterns, found {}", list.len()));
    }
    let ids: BTreeSet<_> = list.iter().map(|d| d.id).collect();
    if ids.len() != 14 || ids.contains(&Unknown) {
        return err("pattern ids must be P1..P14, each once".into());
    }
    let causes: BTreeSet<_> = list.iter().map(|d| d.root_cause).collect();
    if causes.len() != 5 {
        return err(format!("expected 5 root causes, found {}", causes.len()));
    }
    let java = list.iter().filter(|d| d.java_specific).count();
    if java != 11 {
        return err(format!("expected 11 Java-specific patterns, found {java}"));
    }
    let expected: [(PatternId, &[Strategy]); 14] = [
        (P1, &[Control, Interpretation]),
        (P2, &[Control]),
        (P3, &[Control]),
        (P4, &[Remediation, Control]),
        (P5, &[Remediation]),
        (P6, &[Interpretation]),
        (P7, &[Interpretation]),
        (P8, &[Control]),
        (P9, &[Interpretation]),
        (P10, &[Interpretation]),
        (P11, &[Interpretation]),
        (P12, &[Interpretation]),
        (P13, &[Control]),
        (P14, &[Control]),
    ];
    for (id, strategy) in expected {
        let want: BTreeSet<_> = strategy.iter().copied().collect();
        match list.iter().find(|d| d.id == id) {
            Some(d) if d.strategy == want => {}
            _ => return err(format!("{id} strategy mismatch")),
        }
    }
    let interpretable: BTreeSet<_> = list.iter().filter(|d| d.interpretable_here).map(|d| d.id).collect();
    let want: BTreeSet<_> = [P1, P4, P6, P7, P9, P10, P11, P12].into_iter().collect();
    if interpretable != want {
        return err(format!("interpretable set {interpretable:?} differs from {want:?}"));
    }
    Ok(())
}

/// The validated registry in P1..P14 order.
pub fn registry() -> &'static [PatternDescriptor] {
    static REGISTRY: OnceLock<Vec<PatternDescriptor>> = OnceLock::new();
    REGISTRY.get_or_init(|| {
        let list = build();
        if let Err(e) = validate(&list) {
            panic!("{e}");
        }
        list
    })
}

pub fn registry_json() -> serde_json::Value {
    serde_json::to_value(registry()).expect("registry serializes")
}
