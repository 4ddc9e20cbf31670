//! Index-free canonical form of a class.
//!
//! Every constant-pool reference is replaced by its recursively resolved
//! value, so pool order and duplicates disappear. Instruction offsets become
//! instruction ordinals. The remaining normalizations are policy toggles.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::attributes::{AttrBody, AttrInfo, BootstrapMethod, CodeAttr, ElementValue, StackMapFrame, VType};
use super::bytecode::{self, Instruction, Operand, LDC, LDC_W};
use super::constant_pool::CpEntry;
use super::{parameter_slots, ClassModel, MemberInfo, ACC_STATIC};

pub const ACC_SYNTHETIC: u16 = 0x1000;
const MAX_LAMBDA_PASSES: u8 = 8;
const MAX_RESOLVE_DEPTH: u8 = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCanonPolicy {
    pub sort_methods: bool,
    pub sort_inner_classes: bool,
    pub strip_line_numbers: bool,
    pub relabel_slots: bool,
    pub canon_lambdas: bool,
}

impl Default for ClassCanonPolicy {
    fn default() -> Self {
        ClassCanonPolicy {
            sort_methods: true,
            sort_inner_classes: true,
            strip_line_numbers: false,
            relabel_slots: true,
            canon_lambdas: true,
        }
    }
}

impl ClassCanonPolicy {
    /// Only pool-index independence; every optional axis off.
    pub fn strict() -> Self {
        ClassCanonPolicy {
            sort_methods: false,
            sort_inner_classes: false,
            strip_line_numbers: false,
            relabel_slots: false,
            canon_lambdas: false,
        }
    }

    pub fn maximal() -> Self {
        ClassCanonPolicy { strip_line_numbers: true, ..Self::default() }
    }
}

/// A node of the canonical tree.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CNode {
    Bytes(Vec<u8>),
    Int(i64),
    List(Vec<CNode>),
    Named(&'static str, Vec<CNode>),
}

impl CNode {
    fn named(label: &'static str, children: Vec<CNode>) -> CNode {
        CNode::Named(label, children)
    }

    /// Unambiguous, length-prefixed byte encoding used for digests and sorting.
    pub fn encode(&self, out: &mut Vec<u8>) {
        match self {
            CNode::Bytes(b) => {
                out.push(1);
                out.extend_from_slice(&(b.len() as u32).to_be_bytes());
                out.extend_from_slice(b);
            }
            CNode::Int(v) => {
                out.push(2);
                out.extend_from_slice(&v.to_be_bytes());
            }
            CNode::List(items) => {
                out.push(3);
                out.extend_from_slice(&(items.len() as u32).to_be_bytes());
                items.iter().for_each(|i| i.encode(out));
            }
            CNode::Named(label, items) => {
                out.push(4);
                out.push(label.len() as u8);
                out.extend_from_slice(label.as_bytes());
                out.extend_from_slice(&(items.len() as u32).to_be_bytes());
                items.iter().for_each(|i| i.encode(out));
            }
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.encode(&mut out);
        out
    }

    pub fn digest(&self) -> [u8; 32] {
        Sha256::digest(self.to_bytes()).into()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CanonNote {
    /// Slot relabeling was inconsistent with two-slot locals; the method keeps raw slots.
    SlotRelabelFallback { method: String, reason: String },
    /// Lambda renaming did not reach a fixed point; original names were kept.
    LambdaNoFixpoint { passes: u8 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CanonicalClassForm {
    pub root: CNode,
    pub digest: [u8; 32],
    pub notes: Vec<CanonNote>,
}

impl CanonicalClassForm {
    pub fn digest_hex(&self) -> String {
        hex::encode(self.digest)
    }

    /// True when lambda canonicalization was requested and gave up.
    pub fn lambda_unresolved(&self) -> bool {
        self.notes.iter().any(|n| matches!(n, CanonNote::LambdaNoFixpoint { .. }))
    }
}

pub fn canonicalize_class(model: &ClassModel, policy: &ClassCanonPolicy) -> CanonicalClassForm {
    let mut c = Canon::new(model, *policy);
    let mut lambda_note = None;
    if policy.canon_lambdas {
        lambda_note = c.solve_lambdas();
    }
    c.notes.clear();
    let root = c.class_node();
    let mut notes = std::mem::take(&mut c.notes);
    notes.extend(lambda_note);
    CanonicalClassForm { digest: root.digest(), root, notes }
}

struct Canon<'a> {
    m: &'a ClassModel,
    policy: ClassCanonPolicy,
    subst: HashMap<Vec<u8>, Vec<u8>>,
    bootstrap: &'a [BootstrapMethod],
    notes: Vec<CanonNote>,
}

enum Slots {
    Raw,
    Relabel { params: u16, labels: HashMap<u16, i64> },
}

type Frame = (u32, Vec<(CNode, bool)>, Vec<CNode>);

struct CodeCtx {
    ordinals: HashMap<u32, i64>,
    slots: Slots,
    frames: Vec<Frame>,
}

impl CodeCtx {
    fn pc(&self, off: u32) -> CNode {
        match self.ordinals.get(&off) {
            Some(&o) => CNode::Int(o),
            None => CNode::named("pc", vec![CNode::Int(off as i64)]),
        }
    }

    fn slot(&self, s: u16) -> CNode {
        match &self.slots {
            Slots::Raw => CNode::Int(s as i64),
            Slots::Relabel { params, .. } if s < *params => CNode::named("param", vec![CNode::Int(s as i64)]),
            Slots::Relabel { labels, .. } => CNode::named("local", vec![CNode::Int(labels[&s])]),
        }
    }

    fn relabeled(&self) -> bool {
        matches!(self.slots, Slots::Relabel { .. })
    }
}

fn lambda_group(name: &[u8]) -> Option<&[u8]> {
    let rest = name.strip_prefix(b"lambda$")?;
    let dollar = rest.iter().rposition(|&c| c == b'$')?;
    let (m, k) = (&rest[..dollar], &rest[dollar + 1..]);
    (!m.is_empty() && !k.is_empty() && k.iter().all(u8::is_ascii_digit)).then_some(m)
}

impl<'a> Canon<'a> {
    fn new(m: &'a ClassModel, policy: ClassCanonPolicy) -> Self {
        let bootstrap = m
            .attributes
            .iter()
            .find_map(|a| match &a.body {
                AttrBody::BootstrapMethods(b) => Some(b.as_slice()),
                _ => None,
            })
            .unwrap_or(&[]);
        Canon { m, policy, subst: HashMap::new(), bootstrap, notes: Vec::new() }
    }

    fn utf8_bytes(&self, b: &[u8]) -> CNode {
        CNode::Bytes(self.subst.get(b).cloned().unwrap_or_else(|| b.to_vec()))
    }

    fn cp(&self, index: u16) -> CNode {
        self.cp_depth(index, 0)
    }

    fn cp_depth(&self, index: u16, depth: u8) -> CNode {
        if index == 0 {
            return CNode::named("none", vec![]);
        }
        if depth > MAX_RESOLVE_DEPTH {
            return CNode::named("deep", vec![CNode::Int(index as i64)]);
        }
        let r = |i: u16| self.cp_depth(i, depth + 1);
        let Some(e) = self.m.constant_pool.get(index) else {
            return CNode::named("invalid", vec![CNode::Int(index as i64)]);
        };
        match e {
            CpEntry::Utf8(b) => CNode::named("Utf8", vec![self.utf8_bytes(b)]),
            CpEntry::Integer(v) => CNode::named("Integer", vec![CNode::Int(*v as i64)]),
            CpEntry::Float(bits) => CNode::named("Float", vec![CNode::Int(*bits as i64)]),
            CpEntry::Long(v) => CNode::named("Long", vec![CNode::Int(*v)]),
            CpEntry::Double(bits) => CNode::named("Double", vec![CNode::Int(*bits as i64)]),
            CpEntry::Class(n) => CNode::named("Class", vec![r(*n)]),
            CpEntry::String(n) => CNode::named("String", vec![r(*n)]),
            CpEntry::Fieldref { class, name_and_type } => CNode::named("Fieldref", vec![r(*class), r(*name_and_type)]),
            CpEntry::Methodref { class, name_and_type } => CNode::named("Methodref", vec![r(*class), r(*name_and_type)]),
            CpEntry::InterfaceMethodref { class, name_and_type } => CNode::named("InterfaceMethodref", vec![r(*class), r(*name_and_type)]),
            CpEntry::NameAndType { name, descriptor } => CNode::named("NameAndType", vec![r(*name), r(*descriptor)]),
            CpEntry::MethodHandle { kind, reference } => CNode::named("MethodHandle", vec![CNode::Int(*kind as i64), r(*reference)]),
            CpEntry::MethodType(n) => CNode::named("MethodType", vec![r(*n)]),
            CpEntry::Dynamic { bootstrap, name_and_type } => {
                CNode::named("Dynamic", vec![self.bootstrap_node(*bootstrap, depth + 1), r(*name_and_type)])
            }
            CpEntry::InvokeDynamic { bootstrap, name_and_type } => {
                CNode::named("InvokeDynamic", vec![self.bootstrap_node(*bootstrap, depth + 1), r(*name_and_type)])
            }
            CpEntry::Module(n) => CNode::named("Module", vec![r(*n)]),
            CpEntry::Package(n) => CNode::named("Package", vec![r(*n)]),
        }
    }

    fn bootstrap_node(&self, index: u16, depth: u8) -> CNode {
        match self.bootstrap.get(index as usize) {
            Some(b) if depth <= MAX_RESOLVE_DEPTH => CNode::named(
                "bsm",
                vec![
                    self.cp_depth(b.method_ref, depth + 1),
                    CNode::List(b.arguments.iter().map(|&a| self.cp_depth(a, depth + 1)).collect()),
                ],
            ),
            _ => CNode::named("bsm_index", vec![CNode::Int(index as i64)]),
        }
    }

    fn member_name(&self, m: &MemberInfo) -> Vec<u8> {
        let raw = self.m.constant_pool.utf8(m.name_index).unwrap_or_default();
        self.subst.get(raw).cloned().unwrap_or_else(|| raw.to_vec())
    }

    fn class_node(&mut self) -> CNode {
        let m = self.m;
        let fields = m.fields.iter().map(|f| self.member_node(f, false)).collect();
        let mut methods: Vec<(Vec<u8>, Vec<u8>, CNode)> = m
            .methods
            .iter()
            .map(|mi| {
                let desc = m.constant_pool.utf8(mi.descriptor_index).unwrap_or_default().to_vec();
                (self.member_name(mi), desc, self.member_node(mi, true))
            })
            .collect();
        if self.policy.sort_methods {
            methods.sort();
        }
        let attrs = self.attrs_node(&m.attributes, None);
        let mut pool: BTreeSet<(u8, Vec<u8>)> = BTreeSet::new();
        for i in m.constant_pool.indices() {
            let tag = m.constant_pool.get(i).map_or(0, |e| e.tag() as u8);
            pool.insert((tag, self.cp(i).to_bytes()));
        }
        CNode::named(
            "class",
            vec![
                CNode::named("version", vec![CNode::Int(m.major_version as i64), CNode::Int(m.minor_version as i64)]),
                CNode::Int(m.access_flags as i64),
                self.cp(m.this_class),
                self.cp(m.super_class),
                CNode::List(m.interfaces.iter().map(|&i| self.cp(i)).collect()),
                CNode::List(fields),
                CNode::List(methods.into_iter().map(|t| t.2).collect()),
                attrs,
                CNode::named("pool", pool.into_iter().map(|(_, b)| CNode::Bytes(b)).collect()),
            ],
        )
    }

    fn member_node(&mut self, mi: &MemberInfo, is_method: bool) -> CNode {
        let name = self.member_name(mi);
        let desc = self.m.constant_pool.utf8(mi.descriptor_index).unwrap_or_default();
        let mut children = vec![CNode::Int(mi.access_flags as i64), CNode::Bytes(name.clone()), CNode::Bytes(desc.to_vec())];
        let mut attrs = Vec::new();
        for a in &mi.attributes {
            match &a.body {
                AttrBody::Code(code) if is_method => {
                    if let Some(n) = self.code_node(a, code, mi, &name, desc) {
                        attrs.push(n);
                    }
                }
                _ => attrs.extend(self.attr_node(a, None)),
            }
        }
        children.push(CNode::List(attrs));
        CNode::named(if is_method { "method" } else { "field" }, children)
    }

    fn attrs_node(&self, attrs: &[AttrInfo], ctx: Option<&CodeCtx>) -> CNode {
        CNode::List(attrs.iter().filter_map(|a| self.attr_node(a, ctx)).collect())
    }

    fn attr_name(&self, a: &AttrInfo) -> &'a [u8] {
        self.m.constant_pool.utf8(a.name_index).unwrap_or_default()
    }

    /// `None` when the policy omits the attribute.
    fn attr_node(&self, a: &AttrInfo, ctx: Option<&CodeCtx>) -> Option<CNode> {
        let body = match (&a.body, ctx) {
            (AttrBody::LineNumberTable(_), _) if self.policy.strip_line_numbers => return None,
            (AttrBody::LineNumberTable(v), Some(ctx)) => {
                CNode::List(v.iter().map(|l| CNode::List(vec![ctx.pc(l.start_pc as u32), CNode::Int(l.line as i64)])).collect())
            }
            (AttrBody::LocalVariableTable(v) | AttrBody::LocalVariableTypeTable(v), Some(ctx)) => {
                let mut rows: Vec<CNode> = v
                    .iter()
                    .map(|l| {
                        CNode::List(vec![
                            ctx.pc(l.start_pc as u32),
                            ctx.pc(l.start_pc as u32 + l.length as u32),
                            self.cp(l.name),
                            self.cp(l.descriptor),
                            ctx.slot(l.index),
                        ])
                    })
                    .collect();
                if ctx.relabeled() {
                    rows.sort();
                }
                CNode::List(rows)
            }
            (AttrBody::StackMapTable(_), Some(ctx)) => frames_node(ctx),
            (AttrBody::InnerClasses(v), _) => {
                let mut rows: Vec<CNode> = v
                    .iter()
                    .map(|e| {
                        CNode::List(vec![
                            self.cp(e.inner_class),
                            self.cp(e.outer_class),
                            self.cp(e.inner_name),
                            CNode::Int(e.access_flags as i64),
                        ])
                    })
                    .collect();
                if self.policy.sort_inner_classes {
                    rows.sort_by_cached_key(|n| n.to_bytes());
                }
                CNode::List(rows)
            }
            (AttrBody::BootstrapMethods(v), _) => CNode::List((0..v.len()).map(|i| self.bootstrap_node(i as u16, 0)).collect()),
            (AttrBody::ConstantValue(i) | AttrBody::Signature(i) | AttrBody::SourceFile(i) | AttrBody::NestHost(i), _) => self.cp(*i),
            (AttrBody::Exceptions(v) | AttrBody::NestMembers(v) | AttrBody::PermittedSubclasses(v), _) => {
                CNode::List(v.iter().map(|&i| self.cp(i)).collect())
            }
            (AttrBody::EnclosingMethod { class, method }, _) => CNode::List(vec![self.cp(*class), self.cp(*method)]),
            (AttrBody::MethodParameters(v), _) => {
                CNode::List(v.iter().map(|p| CNode::List(vec![self.cp(p.name), CNode::Int(p.access_flags as i64)])).collect())
            }
            (AttrBody::Annotations(v), _) => CNode::List(v.iter().map(|x| self.annotation_node(x)).collect()),
            (AttrBody::ParameterAnnotations(v), _) => {
                CNode::List(v.iter().map(|p| CNode::List(p.iter().map(|x| self.annotation_node(x)).collect())).collect())
            }
            (AttrBody::AnnotationDefault(e), _) => self.element_node(e),
            (AttrBody::Opaque(b), _) => CNode::Bytes(b.clone()),
            // Code-bound tables outside a Code attribute, or a nested Code: raw shape.
            (body, _) => {
                let mut out = Vec::new();
                super::attributes::write_attribute(&mut out, &AttrInfo { name_index: a.name_index, body: body.clone() });
                CNode::named("raw", vec![CNode::Bytes(out)])
            }
        };
        Some(CNode::named("attr", vec![CNode::Bytes(self.attr_name(a).to_vec()), body]))
    }

    fn annotation_node(&self, a: &super::attributes::Annotation) -> CNode {
        CNode::named(
            "annotation",
            vec![
                self.cp(a.type_index),
                CNode::List(a.pairs.iter().map(|(n, v)| CNode::List(vec![self.cp(*n), self.element_node(v)])).collect()),
            ],
        )
    }

    fn element_node(&self, e: &ElementValue) -> CNode {
        match e {
            ElementValue::Const { tag, index } => CNode::named("const", vec![CNode::Int(*tag as i64), self.cp(*index)]),
            ElementValue::Enum { type_name, const_name } => CNode::named("enum", vec![self.cp(*type_name), self.cp(*const_name)]),
            ElementValue::Class(i) => CNode::named("class", vec![self.cp(*i)]),
            ElementValue::Annotation(a) => self.annotation_node(a),
            ElementValue::Array(v) => CNode::List(v.iter().map(|x| self.element_node(x)).collect()),
        }
    }

    fn code_node(&mut self, a: &AttrInfo, code: &CodeAttr, mi: &MemberInfo, name: &[u8], desc: &[u8]) -> Option<CNode> {
        let insns = match bytecode::decode(&code.code) {
            Ok(i) => i,
            Err(_) => return self.attr_node(a, None),
        };
        let mut ordinals: HashMap<u32, i64> = insns.iter().enumerate().map(|(k, i)| (i.offset, k as i64)).collect();
        ordinals.insert(code.code.len() as u32, insns.len() as i64);
        let is_static = mi.access_flags & ACC_STATIC != 0;
        let initial = self.initial_locals(name, desc, is_static);
        let frames: Vec<Frame> = code
            .attributes
            .iter()
            .find_map(|x| match &x.body {
                AttrBody::StackMapTable(f) => Some(self.expand_frames(f, initial.clone())),
                _ => None,
            })
            .unwrap_or_default();
        let mut ctx = CodeCtx { ordinals, slots: Slots::Raw, frames: Vec::new() };
        if self.policy.relabel_slots {
            match self.slot_labels(&insns, code, &frames, desc, is_static) {
                Ok(slots) => ctx.slots = slots,
                Err(reason) => self.notes.push(CanonNote::SlotRelabelFallback {
                    method: format!("{}{}", String::from_utf8_lossy(name), String::from_utf8_lossy(desc)),
                    reason,
                }),
            }
        }
        ctx.frames = frames;
        let body = CNode::named(
            "Code",
            vec![
                CNode::Int(code.max_stack as i64),
                CNode::Int(code.max_locals as i64),
                CNode::List(insns.iter().map(|i| self.insn_node(i, &ctx)).collect()),
                CNode::List(
                    code.exception_table
                        .iter()
                        .map(|h| {
                            CNode::List(vec![
                                ctx.pc(h.start_pc as u32),
                                ctx.pc(h.end_pc as u32),
                                ctx.pc(h.handler_pc as u32),
                                self.cp(h.catch_type),
                            ])
                        })
                        .collect(),
                ),
                self.attrs_node(&code.attributes, Some(&ctx)),
            ],
        );
        Some(CNode::named("attr", vec![CNode::Bytes(self.attr_name(a).to_vec()), body]))
    }

    fn insn_node(&self, i: &Instruction, ctx: &CodeCtx) -> CNode {
        let target = |rel: i32| ctx.pc((i.offset as i64 + rel as i64) as u32);
        let opcode = if i.opcode == LDC_W { LDC } else { i.opcode };
        let operands = match &i.operand {
            Operand::None => vec![],
            Operand::Local { family, slot, wide, implicit } => {
                if ctx.relabeled() {
                    return CNode::named("local", vec![CNode::Int(*family as i64), ctx.slot(*slot)]);
                }
                vec![CNode::Int(*family as i64), CNode::Int(*slot as i64), CNode::Int(*wide as i64), CNode::Int(*implicit as i64)]
            }
            Operand::Iinc { slot, delta, wide } => {
                if ctx.relabeled() {
                    return CNode::named("iinc", vec![ctx.slot(*slot), CNode::Int(*delta as i64)]);
                }
                vec![CNode::Int(*slot as i64), CNode::Int(*delta as i64), CNode::Int(*wide as i64)]
            }
            Operand::Cp { index, .. } => vec![self.cp(*index)],
            Operand::InvokeInterface { index, count, .. } => vec![self.cp(*index), CNode::Int(*count as i64)],
            Operand::InvokeDynamic { index, .. } => vec![self.cp(*index)],
            Operand::MultiANewArray { index, dims } => vec![self.cp(*index), CNode::Int(*dims as i64)],
            Operand::Branch(rel) => vec![target(*rel)],
            Operand::Byte(v) => vec![CNode::Int(*v as i64)],
            Operand::Short(v) => vec![CNode::Int(*v as i64)],
            Operand::NewArray(t) => vec![CNode::Int(*t as i64)],
            Operand::TableSwitch { default, low, high, offsets, .. } => vec![
                target(*default),
                CNode::Int(*low as i64),
                CNode::Int(*high as i64),
                CNode::List(offsets.iter().map(|&o| target(o)).collect()),
            ],
            Operand::LookupSwitch { default, pairs, .. } => vec![
                target(*default),
                CNode::List(pairs.iter().map(|&(k, o)| CNode::List(vec![CNode::Int(k as i64), target(o)])).collect()),
            ],
        };
        let mut children = vec![CNode::Int(opcode as i64)];
        children.extend(operands);
        CNode::named("op", children)
    }

    fn class_type(&self, name: &[u8]) -> CNode {
        CNode::named("Object", vec![CNode::named("Class", vec![CNode::named("Utf8", vec![self.utf8_bytes(name)])])])
    }

    fn initial_locals(&self, name: &[u8], desc: &[u8], is_static: bool) -> Vec<(CNode, bool)> {
        let mut out = Vec::new();
        if !is_static {
            if name == b"<init>" {
                out.push((CNode::named("UninitializedThis", vec![]), false));
            } else {
                out.push((CNode::named("Object", vec![self.cp(self.m.this_class)]), false));
            }
        }
        let mut i = 1;
        while i < desc.len() && desc[i] != b')' {
            let start = i;
            while desc.get(i) == Some(&b'[') {
                i += 1;
            }
            let c = desc.get(i).copied().unwrap_or(b'V');
            let end = if c == b'L' { i + desc[i..].iter().position(|&c| c == b';').unwrap_or(desc.len() - i - 1) + 1 } else { i + 1 };
            let entry = if start < i {
                (self.class_type(&desc[start..end]), false)
            } else {
                match c {
                    b'L' => (self.class_type(&desc[start + 1..end - 1]), false),
                    b'J' => (CNode::named("Long", vec![]), true),
                    b'D' => (CNode::named("Double", vec![]), true),
                    b'F' => (CNode::named("Float", vec![]), false),
                    _ => (CNode::named("Integer", vec![]), false),
                }
            };
            out.push(entry);
            i = end;
        }
        out
    }

    fn vtype_node(&self, v: &VType, ordinal_of: &dyn Fn(u16) -> CNode) -> (CNode, bool) {
        let n = |s: &'static str| CNode::named(s, vec![]);
        match v {
            VType::Top => (n("Top"), false),
            VType::Integer => (n("Integer"), false),
            VType::Float => (n("Float"), false),
            VType::Double => (n("Double"), true),
            VType::Long => (n("Long"), true),
            VType::Null => (n("Null"), false),
            VType::UninitializedThis => (n("UninitializedThis"), false),
            VType::Object(i) => (CNode::named("Object", vec![self.cp(*i)]), false),
            VType::Uninitialized(off) => (CNode::named("Uninitialized", vec![ordinal_of(*off)]), false),
        }
    }

    /// Expands compressed frames to (offset, locals, stack). `Uninitialized`
    /// operands stay raw here and are mapped to ordinals by `frames_node`.
    fn expand_frames(&self, frames: &[StackMapFrame], initial: Vec<(CNode, bool)>) -> Vec<Frame> {
        let raw = |off: u16| CNode::named("pc", vec![CNode::Int(off as i64)]);
        let mut out = Vec::with_capacity(frames.len());
        let mut locals = initial;
        let mut offset: i64 = -1;
        for f in frames {
            offset += f.offset_delta() as i64 + 1;
            let stack: Vec<CNode> = match f {
                StackMapFrame::Same { .. } | StackMapFrame::SameExtended { .. } => vec![],
                StackMapFrame::SameLocals1StackItem { stack, .. } | StackMapFrame::SameLocals1StackItemExtended { stack, .. } => {
                    vec![self.vtype_node(stack, &raw).0]
                }
                StackMapFrame::Chop { frame_type, .. } => {
                    let k = (251 - *frame_type) as usize;
                    locals.truncate(locals.len().saturating_sub(k));
                    vec![]
                }
                StackMapFrame::Append { locals: add, .. } => {
                    locals.extend(add.iter().map(|v| self.vtype_node(v, &raw)));
                    vec![]
                }
                StackMapFrame::Full { locals: l, stack, .. } => {
                    locals = l.iter().map(|v| self.vtype_node(v, &raw)).collect();
                    stack.iter().map(|v| self.vtype_node(v, &raw).0).collect()
                }
            };
            out.push((offset as u32, locals.clone(), stack));
        }
        out
    }

    fn slot_labels(&self, insns: &[Instruction], code: &CodeAttr, frames: &[Frame], desc: &[u8], is_static: bool) -> Result<Slots, String> {
        let params = parameter_slots(desc, is_static).ok_or("unparseable descriptor")?;
        let mut order: Vec<u16> = Vec::new();
        let mut wide: BTreeSet<u16> = BTreeSet::new();
        let mut narrow: BTreeSet<u16> = BTreeSet::new();
        let mut note = |s: u16, w: bool, order: &mut Vec<u16>| {
            if !order.contains(&s) {
                order.push(s);
            }
            if w {
                wide.insert(s);
            } else {
                narrow.insert(s);
            }
        };
        for i in insns {
            match i.operand {
                Operand::Local { slot, .. } => note(slot, i.local_width() == 2, &mut order),
                Operand::Iinc { slot, .. } => note(slot, false, &mut order),
                _ => {}
            }
        }
        for a in &code.attributes {
            if let AttrBody::LocalVariableTable(v) | AttrBody::LocalVariableTypeTable(v) = &a.body {
                for l in v {
                    let d = self.m.constant_pool.utf8(l.descriptor).unwrap_or_default();
                    let w = matches!(a.body, AttrBody::LocalVariableTable(_)) && (d == b"J" || d == b"D");
                    note(l.index, w, &mut order);
                }
            }
        }
        for (_, locals, _) in frames {
            let mut s: u16 = 0;
            for (node, w) in locals {
                if !matches!(node, CNode::Named("Top", _)) {
                    note(s, *w, &mut order);
                }
                s = s.saturating_add(if *w { 2 } else { 1 });
            }
        }
        for &s in &wide {
            let hi = s.checked_add(1).ok_or("two-slot local at slot 65535")?;
            if narrow.contains(&hi) || wide.contains(&hi) {
                return Err(format!("slot {hi} is used both as the upper half of a two-slot local and on its own"));
            }
            if s < params && hi >= params {
                return Err(format!("two-slot local at {s} straddles the parameter area"));
            }
        }
        let labels = order.into_iter().filter(|&s| s >= params).enumerate().map(|(k, s)| (s, k as i64)).collect();
        Ok(Slots::Relabel { params, labels })
    }

    /// Ranks lambda methods within each enclosing-name group and installs the
    /// resulting renaming in `self.subst`. Returns a note on non-convergence.
    fn solve_lambdas(&mut self) -> Option<CanonNote> {
        let m = self.m;
        let lambdas: Vec<(usize, Vec<u8>, Vec<u8>)> = m
            .methods
            .iter()
            .enumerate()
            .filter(|(_, mi)| mi.access_flags & ACC_SYNTHETIC != 0)
            .filter_map(|(k, mi)| {
                let name = m.constant_pool.utf8(mi.name_index)?;
                lambda_group(name).map(|g| (k, name.to_vec(), g.to_vec()))
            })
            .collect();
        if lambdas.is_empty() {
            return None;
        }
        let erased: HashMap<Vec<u8>, Vec<u8>> =
            lambdas.iter().map(|(_, name, g)| (name.clone(), [b"lambda$".as_slice(), g, b"$*"].concat())).collect();
        self.subst = erased.clone();
        let erased_digest: Vec<[u8; 32]> = lambdas.iter().map(|(k, _, _)| self.member_node(&m.methods[*k], true).digest()).collect();
        for _pass in 0..MAX_LAMBDA_PASSES {
            let refined: Vec<[u8; 32]> = lambdas.iter().map(|(k, _, _)| self.member_node(&m.methods[*k], true).digest()).collect();
            let mut ranked: Vec<usize> = (0..lambdas.len()).collect();
            ranked.sort_by(|&x, &y| {
                (&lambdas[x].2, erased_digest[x], refined[x], &lambdas[x].1).cmp(&(
                    &lambdas[y].2,
                    erased_digest[y],
                    refined[y],
                    &lambdas[y].1,
                ))
            });
            let mut next = HashMap::new();
            let mut counters: HashMap<&[u8], usize> = HashMap::new();
            for x in ranked {
                let (_, name, g) = &lambdas[x];
                let c = counters.entry(g.as_slice()).or_default();
                next.insert(name.clone(), [b"lambda$".as_slice(), g, b"$", c.to_string().as_bytes()].concat());
                *c += 1;
            }
            if next == self.subst {
                return None;
            }
            self.subst = next;
        }
        self.subst.clear();
        Some(CanonNote::LambdaNoFixpoint { passes: MAX_LAMBDA_PASSES })
    }
}

fn fix_uninit(node: &CNode, ctx: &CodeCtx) -> CNode {
    match node {
        CNode::Named("Uninitialized", inner) => match inner.as_slice() {
            [CNode::Named("pc", off)] => match off.as_slice() {
                [CNode::Int(o)] => CNode::named("Uninitialized", vec![ctx.pc(*o as u32)]),
                _ => node.clone(),
            },
            _ => node.clone(),
        },
        _ => node.clone(),
    }
}

/// Expanded frames. Under relabeling, locals become (label, type) pairs
/// sorted by label with `Top` dropped; otherwise the positional list.
fn frames_node(ctx: &CodeCtx) -> CNode {
    CNode::List(
        ctx.frames
            .iter()
            .map(|(off, locals, stack)| {
                let locals = if ctx.relabeled() {
                    let mut pairs = Vec::new();
                    let mut s: u16 = 0;
                    for (node, w) in locals {
                        if !matches!(node, CNode::Named("Top", _)) {
                            pairs.push(CNode::List(vec![ctx.slot(s), fix_uninit(node, ctx)]));
                        }
                        s = s.saturating_add(if *w { 2 } else { 1 });
                    }
                    pairs.sort();
                    pairs
                } else {
                    locals.iter().map(|(n, _)| fix_uninit(n, ctx)).collect()
                };
                CNode::named(
                    "frame",
                    vec![ctx.pc(*off), CNode::List(locals), CNode::List(stack.iter().map(|n| fix_uninit(n, ctx)).collect())],
                )
            })
            .collect(),
    )
}
