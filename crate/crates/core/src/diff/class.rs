use super::{DiffPolicy, Finding, ResolvedBy};
use crate::classfile::{canonicalize_class, parse_class, AttrBody, CNode, ClassCanonPolicy, ClassModel, CodeAttr, MemberInfo};
use crate::patterns::PatternId;

/// Canonicalization axes tried when two class files differ, each tied to
/// the pattern it explains.
const AXES: [PatternId; 5] = [PatternId::P10, PatternId::P9, PatternId::P7, PatternId::P14, PatternId::P5];
const DRILL_LIMIT: usize = 8;

fn policy_for(axes: &[PatternId]) -> ClassCanonPolicy {
    let mut p = ClassCanonPolicy::strict();
    for a in axes {
        match a {
            PatternId::P10 => p.sort_methods = true,
            PatternId::P9 => p.sort_inner_classes = true,
            PatternId::P7 => p.relabel_slots = true,
            PatternId::P14 => p.canon_lambdas = true,
            PatternId::P5 => p.strip_line_numbers = true,
            _ => {}
        }
    }
    p
}

/// Smallest set of axes under which both classes share a canonical digest;
/// among sets of equal size, the first in axis order wins.
fn minimal_axes(a: &ClassModel, b: &ClassModel) -> Option<Vec<PatternId>> {
    let n = AXES.len();
    let mut masks: Vec<u32> = (0..1u32 << n).collect();
    masks.sort_by_key(|m| (m.count_ones(), *m));
    masks.into_iter().find_map(|mask| {
        let axes: Vec<PatternId> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| AXES[i]).collect();
        let policy = policy_for(&axes);
        (canonicalize_class(a, &policy).digest == canonicalize_class(b, &policy).digest).then_some(axes)
    })
}

/// Classifies the difference between two class files. Differences no axis
/// explains become UNKNOWN findings located by a canonical-tree walk.
pub fn classify_class_diff(entry: &str, a: &[u8], b: &[u8], policy: &DiffPolicy) -> Vec<Finding> {
    let (ma, mb) = match (parse_class(a), parse_class(b)) {
        (Ok(x), Ok(y)) => (x, y),
        (x, y) => {
            let show = |r: &Result<ClassModel, _>| match r {
                Ok(_) => "parsed".to_string(),
                Err(e) => format!("{e}"),
            };
            return vec![Finding::new(entry, PatternId::Unknown, vec![entry.into(), "class".into()], show(&x), show(&y))
                .with_note("class file did not parse")];
        }
    };
    let class = format!("class {}", ma.class_name());
    let pools_differ = ma.constant_pool != mb.constant_pool;
    let Some(mut axes) = minimal_axes(&ma, &mb) else {
        return drill_down(entry, &class, &ma, &mb);
    };
    if axes.contains(&PatternId::P14) {
        axes.retain(|&p| p != PatternId::P10);
    }
    let mut out = Vec::new();
    if pools_differ {
        let (l, r) = pool_evidence(&ma, &mb);
        out.push(
            policy.resolve(
                Finding::new(entry, PatternId::P6, vec![class.clone(), "constant pool".into()], l, r),
                ResolvedBy::Canonicalization,
            ),
        );
    }
    for axis in axes {
        let (locus, l, r) = axis_evidence(axis, &ma, &mb);
        let mut path = vec![class.clone()];
        path.extend(locus);
        out.push(policy.resolve(Finding::new(entry, axis, path, l, r), ResolvedBy::Canonicalization));
    }
    if out.is_empty() {
        out.push(
            Finding::new(
                entry,
                PatternId::Unknown,
                vec![class, "encoding".into()],
                format!("{} bytes", a.len()),
                format!("{} bytes", b.len()),
            )
            .with_note("byte-level difference with equal structure"),
        );
    }
    out
}

fn member_label(m: &ClassModel, member: &MemberInfo) -> String {
    format!("{}{}", m.member_name(member), m.member_descriptor(member))
}

fn code_of(member: &MemberInfo) -> Option<&CodeAttr> {
    member.attributes.iter().find_map(|a| match &a.body {
        AttrBody::Code(c) => Some(c),
        _ => None,
    })
}

fn line_table(m: &ClassModel, member: &MemberInfo) -> String {
    let Some(code) = code_of(member) else { return String::new() };
    let mut s = format!("{}:", member_label(m, member));
    for a in &code.attributes {
        if let AttrBody::LineNumberTable(rows) = &a.body {
            for r in rows {
                s.push_str(&format!(" Line {}:{}", r.line, r.start_pc));
            }
        }
    }
    s
}

fn pool_evidence(a: &ClassModel, b: &ClassModel) -> (String, String) {
    let (pa, pb) = (&a.constant_pool, &b.constant_pool);
    let first = (1..pa.count().max(pb.count())).find(|&i| pa.get(i) != pb.get(i)).unwrap_or(1);
    let show = |m: &ClassModel| {
        let p = &m.constant_pool;
        format!("{} entries; #{first} = {}", p.indices().count(), p.describe(first))
    };
    (show(a), show(b))
}

fn axis_evidence(axis: PatternId, a: &ClassModel, b: &ClassModel) -> (Vec<String>, String, String) {
    match axis {
        PatternId::P10 => {
            let list = |m: &ClassModel| m.methods.iter().map(|x| member_label(m, x)).collect::<Vec<_>>().join(", ");
            (vec!["methods".into(), "order".into()], list(a), list(b))
        }
        PatternId::P9 => {
            let list = |m: &ClassModel| {
                m.attributes
                    .iter()
                    .find_map(|x| match &x.body {
                        AttrBody::InnerClasses(v) => Some(
                            v.iter().map(|e| m.constant_pool.class_name(e.inner_class).unwrap_or_default()).collect::<Vec<_>>().join(", "),
                        ),
                        _ => None,
                    })
                    .unwrap_or_default()
            };
            (vec!["InnerClasses".into()], list(a), list(b))
        }
        PatternId::P5 => {
            let found = a.methods.iter().find_map(|x| {
                let label = member_label(a, x);
                let y = b.methods.iter().find(|y| member_label(b, y) == label)?;
                let (l, r) = (line_table(a, x), line_table(b, y));
                (l != r).then_some((label, l, r))
            });
            let (label, l, r) = found.unwrap_or_default();
            (vec![format!("method {label}"), "LineNumberTable".into()], l, r)
        }
        PatternId::P7 => {
            let differing: Vec<String> = a
                .methods
                .iter()
                .filter_map(|x| {
                    let label = member_label(a, x);
                    let y = b.methods.iter().find(|y| member_label(b, y) == label)?;
                    let (cx, cy) = (code_of(x)?, code_of(y)?);
                    (cx.code != cy.code).then_some(label)
                })
                .collect();
            let label = differing.first().cloned().unwrap_or_default();
            let code = |m: &ClassModel| {
                m.methods.iter().find(|x| member_label(m, x) == label).and_then(code_of).map(|c| hex::encode(&c.code)).unwrap_or_default()
            };
            (vec![format!("method {label}"), "local slots".into()], code(a), code(b))
        }
        PatternId::P14 => {
            let list = |m: &ClassModel| {
                m.methods
                    .iter()
                    .filter(|x| m.member_name(x).starts_with("lambda$"))
                    .map(|x| {
                        let body = code_of(x).map(|c| crate::digest::short_sha256(&c.code)).unwrap_or_default();
                        format!("{} body {body}", m.member_name(x))
                    })
                    .collect::<Vec<_>>()
                    .join(", ")
            };
            (vec!["lambda methods".into()], list(a), list(b))
        }
        _ => (Vec::new(), String::new(), String::new()),
    }
}

fn drill_down(entry: &str, class: &str, a: &ClassModel, b: &ClassModel) -> Vec<Finding> {
    let policy = ClassCanonPolicy::maximal();
    let (ca, cb) = (canonicalize_class(a, &policy), canonicalize_class(b, &policy));
    let mut diffs = Vec::new();
    let mut path = vec![class.to_string()];
    walk(&ca.root, &cb.root, &mut path, &mut diffs);
    if diffs.is_empty() {
        diffs.push((vec![class.to_string()], "canonicalization notes differ".into(), String::new()));
    }
    let total = diffs.len();
    diffs
        .into_iter()
        .take(DRILL_LIMIT)
        .map(|(locus, l, r)| {
            let f = Finding::new(entry, PatternId::Unknown, locus, l, r);
            if total > DRILL_LIMIT {
                f.with_note(format!("{total} differing regions, first {DRILL_LIMIT} shown"))
            } else {
                f
            }
        })
        .collect()
}

fn walk(a: &CNode, b: &CNode, path: &mut Vec<String>, out: &mut Vec<(Vec<String>, String, String)>) {
    if a == b {
        return;
    }
    match (a, b) {
        (CNode::Named(la, ca), CNode::Named(lb, cb)) if la == lb && ca.len() == cb.len() => {
            path.push(la.to_string());
            for (i, (x, y)) in ca.iter().zip(cb).enumerate() {
                if ca.len() > 1 {
                    path.push(format!("#{i}"));
                }
                walk(x, y, path, out);
                if ca.len() > 1 {
                    path.pop();
                }
            }
            path.pop();
        }
        (CNode::List(ca), CNode::List(cb)) if ca.len() == cb.len() => {
            for (i, (x, y)) in ca.iter().zip(cb).enumerate() {
                path.push(format!("[{i}]"));
                walk(x, y, path, out);
                path.pop();
            }
        }
        _ => out.push((path.clone(), render(a), render(b))),
    }
}

/// Compact text form of a canonical node for evidence.
pub(crate) fn render(n: &CNode) -> String {
    let mut s = String::new();
    render_into(n, &mut s);
    super::bounded(s)
}

fn render_into(n: &CNode, s: &mut String) {
    if s.len() > super::EVIDENCE_LIMIT {
        return;
    }
    match n {
        CNode::Bytes(b) => match std::str::from_utf8(b) {
            Ok(t) if t.chars().all(|c| !c.is_control()) => s.push_str(&format!("{t:?}")),
            _ => s.push_str(&format!("0x{}", hex::encode(b))),
        },
        CNode::Int(v) => s.push_str(&v.to_string()),
        CNode::List(items) => {
            s.push('[');
            for (i, x) in items.iter().enumerate() {
                if i > 0 {
                    s.push_str(", ");
                }
                render_into(x, s);
            }
            s.push(']');
        }
        CNode::Named(label, items) => {
            s.push_str(label);
            s.push('(');
            for (i, x) in items.iter().enumerate() {
                if i > 0 {
                    s.push_str(", ");
                }
                render_into(x, s);
            }
            s.push(')');
        }
    }
}
