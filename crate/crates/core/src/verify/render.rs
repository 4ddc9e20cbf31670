use std::fmt::Write;

use super::VerificationReport;
use crate::diff::Finding;

fn cell(s: &str, width: usize) -> String {
    let one_line = s.replace(['\n', '\r'], " ");
    if one_line.chars().count() <= width {
        format!("{one_line:<width$}")
    } else {
        format!("{}...", one_line.chars().take(width - 3).collect::<String>())
    }
}

fn finding_line(f: &Finding) -> String {
    let status = if f.is_resolved() { format!("{:?}", f.resolved_by) } else { "open".into() };
    let mut s = format!("  {:<8} {:<18} {}", f.pattern.to_string(), status, f.locus.join(" > "));
    if let Some(n) = &f.note {
        let _ = write!(s, " ({n})");
    }
    s
}

/// Human-readable report: verdict, a pattern table and the findings.
pub fn render_text(r: &VerificationReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "verdict: {}", r.verdict);
    let _ = writeln!(s, "reason:  {}", r.reason);
    for d in &r.inputs {
        let _ = writeln!(s, "input:   {} ({} bytes, sha256 {}, sha1 {})", d.name, d.size, d.sha256, d.sha1);
    }
    if let Some(n) = &r.normalized {
        let _ = writeln!(s, "normalized sha256: {} / {}", n.digests[0], n.digests[1]);
    }
    if r.pattern_stats.is_empty() {
        return s;
    }
    let _ = writeln!(s, "\n{:<8} {:<26} {:<16} {:<28} {:>5}  example", "pattern", "name", "root cause", "strategy", "count");
    for (p, st) in &r.pattern_stats {
        let strategy: Vec<String> = st.strategy.iter().map(|x| format!("{x:?}")).collect();
        let rc = st.root_cause.map_or("-".to_string(), |x| format!("{x:?}"));
        let _ = writeln!(
            s,
            "{:<8} {} {} {} {:>5}  {}",
            p.to_string(),
            cell(st.name, 26),
            cell(&rc, 16),
            cell(&strategy.join(", "), 28),
            st.findings,
            cell(&st.example, 60).trim_end()
        );
    }
    let _ = writeln!(s, "\nfindings:");
    for f in &r.diff.findings {
        let _ = writeln!(s, "{}", finding_line(f));
    }
    if let Some(n) = &r.normalized {
        let open: Vec<&Finding> = n.outcome.unresolved().collect();
        if !open.is_empty() {
            let _ = writeln!(s, "\nafter normalization:");
            for f in open {
                let _ = writeln!(s, "{}", finding_line(f));
            }
        }
        // Only entries that differ; the JSON report keeps every note.
        let differing: std::collections::BTreeSet<&str> = r.diff.findings.iter().map(|f| f.entry_name.as_str()).collect();
        let notes: std::collections::BTreeSet<String> = n
            .logs
            .iter()
            .flat_map(|l| &l.notes)
            .filter(|x| differing.contains(x.entry_name.as_str()))
            .map(|x| format!("  {}: {}", x.entry_name, x.message))
            .collect();
        if !notes.is_empty() {
            let _ = writeln!(s, "\nnotes:");
            for line in notes {
                let _ = writeln!(s, "{line}");
            }
        }
    }
    s
}
