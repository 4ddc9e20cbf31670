use super::builder::{ClassBuilder, CodeAsm};
use super::*;
use crate::fixtures::classes::{widget_class, WidgetShape, WidgetVariant, SLOT_LAYOUTS};

fn widget(v: WidgetVariant) -> ClassModel {
    widget_class(&WidgetShape::sample(), &v)
}

fn digest(m: &ClassModel, p: ClassCanonPolicy) -> [u8; 32] {
    canonicalize_class(m, &p).digest
}

fn reparse(m: &ClassModel) -> ClassModel {
    parse_class(&serialize_class(m)).expect("synthesized class parses")
}

#[test]
fn widget_round_trips() {
    let m = widget(WidgetVariant::default());
    let bytes = serialize_class(&m);
    let back = parse_class(&bytes).unwrap();
    assert_eq!(back, m);
    assert_eq!(serialize_class(&back), bytes);
}

#[test]
fn minimal_class_has_no_members() {
    let m = ClassBuilder::new("Empty", "java/lang/Object").build();
    let back = reparse(&m);
    assert_eq!(back.fields.len(), 0);
    assert_eq!(back.methods.len(), 0);
    assert_eq!(back.class_name(), "Empty");
}

#[test]
fn bad_magic_is_rejected() {
    let mut bytes = serialize_class(&widget(WidgetVariant::default()));
    bytes[3] = 0xBF;
    assert!(matches!(parse_class(&bytes), Err(ClassError::MalformedClass(_))));
}

#[test]
fn dangling_index_and_truncation_are_rejected() {
    let m = ClassBuilder::new("A", "java/lang/Object").build();
    let mut bytes = serialize_class(&m);
    // this_class lives right after the pool and access flags.
    let n = bytes.len();
    bytes[n - 8] = 0x00;
    bytes[n - 7] = 0x63;
    assert!(parse_class(&bytes).is_err());
    let full = serialize_class(&widget(WidgetVariant::default()));
    for cut in [10, full.len() / 2, full.len() - 1] {
        assert!(parse_class(&full[..cut]).is_err(), "cut at {cut}");
    }
}

#[test]
fn unknown_attribute_stays_opaque_and_round_trips() {
    let mut b = ClassBuilder::new("A", "java/lang/Object");
    let attr = b.attribute("com.example.Custom", AttrBody::Opaque(vec![1, 2, 3]));
    b.add_class_attribute(attr);
    let m = b.build();
    let back = reparse(&m);
    assert_eq!(back.attributes[0].body, AttrBody::Opaque(vec![1, 2, 3]));
}

#[test]
fn pool_permutation_and_duplication_keep_digest() {
    let m = widget(WidgetVariant::default());
    let d = digest(&m, ClassCanonPolicy::strict());
    let n = m.constant_pool.indices().count();
    let reversed: Vec<usize> = (0..n).rev().collect();
    let p = reparse(&permute_pool(&m, &reversed).unwrap());
    assert_ne!(serialize_class(&p), serialize_class(&m));
    assert_eq!(digest(&p, ClassCanonPolicy::strict()), d);
    for idx in m.constant_pool.indices().take(40) {
        let (dup, _) = duplicate_entry(&m, idx).unwrap();
        assert_eq!(digest(&reparse(&dup), ClassCanonPolicy::strict()), d, "duplicate of #{idx}");
    }
}

#[test]
fn method_and_inner_class_order() {
    let m = widget(WidgetVariant::default());
    let mut r = m.clone();
    r.methods.reverse();
    for a in &mut r.attributes {
        if let AttrBody::InnerClasses(v) = &mut a.body {
            v.reverse();
        }
    }
    assert_eq!(digest(&m, ClassCanonPolicy::default()), digest(&r, ClassCanonPolicy::default()));
    assert_ne!(digest(&m, ClassCanonPolicy::strict()), digest(&r, ClassCanonPolicy::strict()));
}

#[test]
fn slot_layouts_agree_only_when_relabeled() {
    let base = widget(WidgetVariant::default());
    let relabel = ClassCanonPolicy { relabel_slots: true, ..ClassCanonPolicy::strict() };
    for layout in 1..SLOT_LAYOUTS.len() {
        let other = widget(WidgetVariant { slot_layout: layout, ..Default::default() });
        assert_eq!(digest(&base, relabel), digest(&other, relabel), "layout {layout}");
        assert_ne!(digest(&base, ClassCanonPolicy::strict()), digest(&other, ClassCanonPolicy::strict()));
        assert!(canonicalize_class(&other, &relabel).notes.is_empty());
    }
}

#[test]
fn parameter_slots_are_not_relabeled() {
    // Swapping the two int parameters' uses changes meaning and must be visible.
    let mk = |first: u16| {
        let mut b = ClassBuilder::new("P", "java/lang/Object");
        let mut a = CodeAsm::new();
        a.local(0x15, first).op(0xac);
        let code = super::builder::CodeParts {
            max_stack: 1,
            max_locals: 2,
            code: a.finish().0,
            exception_table: vec![],
            lines: vec![],
            locals: vec![],
            frames: vec![],
        }
        .into_code(&mut b);
        b.add_method(ACC_STATIC, "f", "(II)I", Some(code));
        b.build()
    };
    let p = ClassCanonPolicy::default();
    assert_ne!(digest(&mk(0), p), digest(&mk(1), p));
}

#[test]
fn wide_conflict_falls_back_with_note() {
    let mut b = ClassBuilder::new("W", "java/lang/Object");
    let mut a = CodeAsm::new();
    // lstore 2 then istore 3: slot 3 is the upper half of the long.
    a.op(0x09).local(0x37, 2).op(0x03).local(0x36, 3).op(0xb1);
    let code = super::builder::CodeParts {
        max_stack: 2,
        max_locals: 4,
        code: a.finish().0,
        exception_table: vec![],
        lines: vec![],
        locals: vec![],
        frames: vec![],
    }
    .into_code(&mut b);
    b.add_method(ACC_STATIC, "g", "()V", Some(code));
    let form = canonicalize_class(&b.build(), &ClassCanonPolicy::default());
    assert!(matches!(form.notes.as_slice(), [CanonNote::SlotRelabelFallback { .. }]));
}

#[test]
fn lambda_swap_agrees_only_with_lambda_canon() {
    let a = widget(WidgetVariant::default());
    let b = widget(WidgetVariant { swap_lambdas: true, ..Default::default() });
    assert_eq!(a.constant_pool, b.constant_pool);
    assert_eq!(digest(&a, ClassCanonPolicy::default()), digest(&b, ClassCanonPolicy::default()));
    let no_lambdas = ClassCanonPolicy { canon_lambdas: false, ..ClassCanonPolicy::default() };
    assert_ne!(digest(&a, no_lambdas), digest(&b, no_lambdas));
}

#[test]
fn line_shift_agrees_only_when_stripped() {
    let a = widget(WidgetVariant::default());
    let b = widget(WidgetVariant { line_shift: 1, ..Default::default() });
    assert_ne!(digest(&a, ClassCanonPolicy::default()), digest(&b, ClassCanonPolicy::default()));
    assert_eq!(digest(&a, ClassCanonPolicy::maximal()), digest(&b, ClassCanonPolicy::maximal()));
}

#[test]
fn payload_mutation_changes_digest() {
    let m = widget(WidgetVariant::default());
    let d = digest(&m, ClassCanonPolicy::maximal());
    let mut changed = m.clone();
    for slot in changed.constant_pool.slots_mut().iter_mut().flatten() {
        if let CpEntry::Utf8(b) = slot {
            if b == b"alpha" {
                b[0] = b'A';
            }
        }
    }
    assert_ne!(digest(&changed, ClassCanonPolicy::maximal()), d);
}

#[test]
fn rewrite_collapses_duplicate_utf8() {
    let mut b = ClassBuilder::new("D", "java/lang/Object");
    let foo = b.utf8("foo");
    let dup = b.pool.push(CpEntry::Utf8(b"foo".to_vec()));
    let desc = b.utf8("I");
    let m = {
        let mut m = b.build();
        m.fields.push(MemberInfo { access_flags: 0, name_index: foo, descriptor_index: desc, attributes: vec![] });
        m.fields.push(MemberInfo { access_flags: 8, name_index: dup, descriptor_index: desc, attributes: vec![] });
        m
    };
    let out = rewrite_class(&m, &RewritePolicy::default()).unwrap();
    assert_eq!(out.pool, PoolRewrite::Renumbered);
    let r = parse_class(&out.bytes).unwrap();
    let foos = r.constant_pool.indices().filter(|&i| r.constant_pool.utf8(i) == Some(b"foo")).count();
    assert_eq!(foos, 1);
    assert_eq!(r.fields[0].name_index, r.fields[1].name_index);
}

#[test]
fn rewrite_sorts_methods_by_name_bytes() {
    let m = widget(WidgetVariant::default());
    let out = rewrite_class(&m, &RewritePolicy::default()).unwrap();
    let r = parse_class(&out.bytes).unwrap();
    let names: Vec<String> = r.methods.iter().map(|x| r.member_name(x)).collect();
    let api = names.iter().position(|n| n == "withAPIServiceObject").unwrap();
    let res = names.iter().position(|n| n == "withResourceRequirementObject").unwrap();
    assert!(api < res);
    let mut sorted = names.clone();
    sorted.sort();
    assert_eq!(names, sorted);
}

#[test]
fn rewrite_preserves_canonical_form_and_converges() {
    let m = widget(WidgetVariant::default());
    let n = m.constant_pool.indices().count();
    let reversed: Vec<usize> = (0..n).rev().collect();
    let (dup, _) = duplicate_entry(&permute_pool(&m, &reversed).unwrap(), 5).unwrap();
    let mut shuffled = dup.clone();
    shuffled.methods.rotate_left(2);
    for policy in [ClassCanonPolicy::default(), ClassCanonPolicy::maximal()] {
        let rw = RewritePolicy::from(&policy);
        let a = rewrite_class(&m, &rw).unwrap();
        let b = rewrite_class(&shuffled, &rw).unwrap();
        assert_eq!(a.bytes, b.bytes);
        let back = parse_class(&a.bytes).unwrap();
        assert_eq!(digest(&back, policy), digest(&m, policy));
        // Idempotent.
        assert_eq!(rewrite_class(&back, &rw).unwrap().bytes, a.bytes);
    }
}

#[test]
fn rewrite_aborts_when_narrow_ldc_would_overflow() {
    let mut b = ClassBuilder::new("L", "java/lang/Object");
    let s = b.string("late");
    let mut a = CodeAsm::new();
    a.ldc(s).op(0xb0);
    let code = super::builder::CodeParts {
        max_stack: 1,
        max_locals: 0,
        code: a.finish().0,
        exception_table: vec![],
        lines: vec![],
        locals: vec![],
        frames: vec![],
    }
    .into_code(&mut b);
    // Fields come first in traversal order, pushing the string past 255.
    for k in 0..300 {
        b.add_field(0x0008, &format!("f{k}"), "I");
    }
    b.add_method(ACC_STATIC, "s", "()Ljava/lang/String;", Some(code));
    let m = b.build();
    let out = rewrite_class(&m, &RewritePolicy::default()).unwrap();
    assert!(matches!(out.pool, PoolRewrite::Aborted(_)), "{:?}", out.pool);
    assert_eq!(parse_class(&out.bytes).unwrap().constant_pool, m.constant_pool);
    // Deterministic.
    assert_eq!(rewrite_class(&m, &RewritePolicy::default()).unwrap(), out);
}

#[test]
fn rewrite_keeps_pool_with_unknown_attributes() {
    let mut b = ClassBuilder::new("U", "java/lang/Object");
    let attr = b.attribute("com.example.Custom", AttrBody::Opaque(vec![0, 1]));
    b.add_class_attribute(attr);
    let out = rewrite_class(&b.build(), &RewritePolicy::default()).unwrap();
    assert!(matches!(out.pool, PoolRewrite::Aborted(_)));
}
