use std::collections::BTreeMap;
use std::fmt::Write;

use serde::Serialize;

use super::VerificationReport;
use crate::patterns::{PatternId, Strategy};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FactSource {
    Probed,
    UserSupplied,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EnvFact {
    pub key: String,
    pub value: String,
    pub source: FactSource,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MitigationOp {
    pub pattern: PatternId,
    pub name: String,
    pub strategy: Vec<Strategy>,
    /// Normalization records that removed this pattern, as `entry: summary`.
    pub applied: Vec<String>,
    pub advice: String,
}

/// How to rebuild and re-verify: the environment, the commands and the
/// extra operations the verification needed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BuildSpecDoc {
    pub environment: Vec<EnvFact>,
    pub commands: Vec<Vec<String>>,
    pub operations: Vec<MitigationOp>,
}

impl BuildSpecDoc {
    /// Probes OS and architecture, then adds `user_env` entries as given.
    pub fn from_report(report: &VerificationReport, commands: Vec<Vec<String>>, user_env: &[(String, String)]) -> Self {
        let mut environment = vec![
            EnvFact { key: "os".into(), value: std::env::consts::OS.into(), source: FactSource::Probed },
            EnvFact { key: "arch".into(), value: std::env::consts::ARCH.into(), source: FactSource::Probed },
        ];
        environment.extend(user_env.iter().map(|(k, v)| EnvFact { key: k.clone(), value: v.clone(), source: FactSource::UserSupplied }));

        let mut applied: BTreeMap<PatternId, Vec<String>> = BTreeMap::new();
        if let Some(n) = &report.normalized {
            for r in n.logs.iter().flat_map(|l| &l.records) {
                for p in r.patterns() {
                    let line = format!("{}: {}", r.entry_name, r.summary);
                    let v = applied.entry(p).or_default();
                    if !v.contains(&line) {
                        v.push(line);
                    }
                }
            }
            let policy = &report.policy;
            applied.entry(PatternId::P1).or_default().push(format!("repack: entry times pinned to {}", policy.pinned_time));
            applied.entry(PatternId::P11).or_default().push(format!("repack: entries written in {:?} order", policy.sort_key));
        }
        let operations = report
            .pattern_stats
            .iter()
            .map(|(&p, s)| MitigationOp {
                pattern: p,
                name: s.name.to_string(),
                strategy: s.strategy.clone(),
                applied: applied.remove(&p).unwrap_or_default(),
                advice: s.advice.to_string(),
            })
            .collect();
        BuildSpecDoc { environment, commands, operations }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("spec serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("BUILD SPECIFICATION\n\nEnvironment\n");
        for f in &self.environment {
            let src = match f.source {
                FactSource::Probed => "probed",
                FactSource::UserSupplied => "supplied",
            };
            let _ = writeln!(s, "  {:<16} {} ({src})", f.key, f.value);
        }
        s.push_str("\nCommands\n");
        if self.commands.is_empty() {
            s.push_str("  (none recorded)\n");
        }
        for c in &self.commands {
            let _ = writeln!(s, "  $ {}", c.join(" "));
        }
        s.push_str("\nAdditional operations\n");
        if self.operations.is_empty() {
            s.push_str("  (none)\n");
        }
        for op in &self.operations {
            let strategy: Vec<String> = op.strategy.iter().map(|x| format!("{x:?}")).collect();
            let _ = writeln!(s, "  {} {} [{}]", op.pattern, op.name, strategy.join(", "));
            for a in &op.applied {
                let _ = writeln!(s, "    applied: {a}");
            }
            let _ = writeln!(s, "    advice: {}", op.advice);
        }
        s
    }
}
