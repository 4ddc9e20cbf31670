//! Attribute bodies. Known attributes are decoded into structures; anything
//! else, or anything whose decoded shape does not account for every byte,
//! stays opaque so re-serialization is always byte-exact.

use super::bytecode::{self, INVOKEDYNAMIC, INVOKEINTERFACE, LDC, LDC2_W, LDC_W, MULTIANEWARRAY};
use super::constant_pool::{ConstantPool, CpTag, LOADABLE};
use super::{malformed, ClassError};
use crate::bytes::{PutBe, Reader, Truncated};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttrInfo {
    pub name_index: u16,
    pub body: AttrBody,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AttrBody {
    Code(CodeAttr),
    InnerClasses(Vec<InnerClassEntry>),
    LineNumberTable(Vec<LineNumber>),
    LocalVariableTable(Vec<LocalVariable>),
    LocalVariableTypeTable(Vec<LocalVariable>),
    StackMapTable(Vec<StackMapFrame>),
    BootstrapMethods(Vec<BootstrapMethod>),
    ConstantValue(u16),
    Signature(u16),
    SourceFile(u16),
    NestHost(u16),
    Exceptions(Vec<u16>),
    NestMembers(Vec<u16>),
    PermittedSubclasses(Vec<u16>),
    EnclosingMethod {
        class: u16,
        method: u16,
    },
    MethodParameters(Vec<MethodParameter>),
    /// `RuntimeVisibleAnnotations` / `RuntimeInvisibleAnnotations`.
    Annotations(Vec<Annotation>),
    /// `Runtime(In)VisibleParameterAnnotations`.
    ParameterAnnotations(Vec<Vec<Annotation>>),
    AnnotationDefault(ElementValue),
    Opaque(Vec<u8>),
}

/// Opaque attributes known to carry no constant-pool indices.
pub(crate) const INDEX_FREE_OPAQUE: &[&str] = &["Deprecated", "Synthetic", "SourceDebugExtension"];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodeAttr {
    pub max_stack: u16,
    pub max_locals: u16,
    pub code: Vec<u8>,
    pub exception_table: Vec<ExceptionHandler>,
    pub attributes: Vec<AttrInfo>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExceptionHandler {
    pub start_pc: u16,
    pub end_pc: u16,
    pub handler_pc: u16,
    pub catch_type: u16,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InnerClassEntry {
    pub inner_class: u16,
    pub outer_class: u16,
    pub inner_name: u16,
    pub access_flags: u16,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LineNumber {
    pub start_pc: u16,
    pub line: u16,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LocalVariable {
    pub start_pc: u16,
    pub length: u16,
    pub name: u16,
    /// Descriptor for `LocalVariableTable`, signature for `LocalVariableTypeTable`.
    pub descriptor: u16,
    pub index: u16,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BootstrapMethod {
    pub method_ref: u16,
    pub arguments: Vec<u16>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MethodParameter {
    pub name: u16,
    pub access_flags: u16,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Annotation {
    pub type_index: u16,
    pub pairs: Vec<(u16, ElementValue)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ElementValue {
    Const { tag: u8, index: u16 },
    Enum { type_name: u16, const_name: u16 },
    Class(u16),
    Annotation(Box<Annotation>),
    Array(Vec<ElementValue>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VType {
    Top,
    Integer,
    Float,
    Double,
    Long,
    Null,
    UninitializedThis,
    Object(u16),
    Uninitialized(u16),
}

impl VType {
    pub fn is_wide(&self) -> bool {
        matches!(self, VType::Long | VType::Double)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StackMapFrame {
    Same { frame_type: u8 },
    SameLocals1StackItem { frame_type: u8, stack: VType },
    SameLocals1StackItemExtended { offset_delta: u16, stack: VType },
    Chop { frame_type: u8, offset_delta: u16 },
    SameExtended { offset_delta: u16 },
    Append { frame_type: u8, offset_delta: u16, locals: Vec<VType> },
    Full { offset_delta: u16, locals: Vec<VType>, stack: Vec<VType> },
}

impl StackMapFrame {
    pub fn offset_delta(&self) -> u16 {
        match *self {
            StackMapFrame::Same { frame_type } => frame_type as u16,
            StackMapFrame::SameLocals1StackItem { frame_type, .. } => frame_type as u16 - 64,
            StackMapFrame::SameLocals1StackItemExtended { offset_delta, .. }
            | StackMapFrame::Chop { offset_delta, .. }
            | StackMapFrame::SameExtended { offset_delta }
            | StackMapFrame::Append { offset_delta, .. }
            | StackMapFrame::Full { offset_delta, .. } => offset_delta,
        }
    }
}

// ---------------------------------------------------------------------------
// Decoding

pub(crate) fn parse_attributes(r: &mut Reader<'_>, pool: &ConstantPool) -> Result<Vec<AttrInfo>, ClassError> {
    let count = r.u16_be()?;
    (0..count).map(|_| parse_attribute(r, pool)).collect()
}

fn parse_attribute(r: &mut Reader<'_>, pool: &ConstantPool) -> Result<AttrInfo, ClassError> {
    let name_index = r.u16_be()?;
    pool.expect(name_index, &[CpTag::Utf8], false, "attribute name")?;
    let len = r.u32_be()? as usize;
    let body = r.take(len).map_err(|_| malformed(format!("truncated attribute {}", pool.utf8_lossy(name_index))))?;
    let name = pool.utf8(name_index).unwrap_or_default();
    let body = match decode_body(name, body, pool)? {
        Some(structured) => structured,
        None => AttrBody::Opaque(body.to_vec()),
    };
    let attr = AttrInfo { name_index, body };
    validate_attr(&attr, pool)?;
    Ok(attr)
}

/// `Ok(None)` means "keep opaque": the bytes do not have the expected shape.
fn decode_body(name: &[u8], body: &[u8], pool: &ConstantPool) -> Result<Option<AttrBody>, ClassError> {
    let mut r = Reader::new(body);
    let decoded: Result<AttrBody, Truncated> = (|| {
        Ok(match name {
            b"Code" => {
                let max_stack = r.u16_be()?;
                let max_locals = r.u16_be()?;
                let len = r.u32_be()? as usize;
                let code = r.take(len)?.to_vec();
                let n = r.u16_be()?;
                let mut exception_table = Vec::with_capacity(n as usize);
                for _ in 0..n {
                    exception_table.push(ExceptionHandler {
                        start_pc: r.u16_be()?,
                        end_pc: r.u16_be()?,
                        handler_pc: r.u16_be()?,
                        catch_type: r.u16_be()?,
                    });
                }
                // Nested attributes are decoded below, once the shape is known to fit.
                return Ok(AttrBody::Code(CodeAttr { max_stack, max_locals, code, exception_table, attributes: Vec::new() }));
            }
            b"InnerClasses" => AttrBody::InnerClasses(counted(&mut r, |r| {
                Ok(InnerClassEntry {
                    inner_class: r.u16_be()?,
                    outer_class: r.u16_be()?,
                    inner_name: r.u16_be()?,
                    access_flags: r.u16_be()?,
                })
            })?),
            b"LineNumberTable" => {
                AttrBody::LineNumberTable(counted(&mut r, |r| Ok(LineNumber { start_pc: r.u16_be()?, line: r.u16_be()? }))?)
            }
            b"LocalVariableTable" => AttrBody::LocalVariableTable(counted(&mut r, local_variable)?),
            b"LocalVariableTypeTable" => AttrBody::LocalVariableTypeTable(counted(&mut r, local_variable)?),
            b"StackMapTable" => match stack_map(&mut r)? {
                Some(frames) => AttrBody::StackMapTable(frames),
                None => return Err(Truncated { at: 0, wanted: 0, available: 0 }),
            },
            b"BootstrapMethods" => AttrBody::BootstrapMethods(counted(&mut r, |r| {
                let method_ref = r.u16_be()?;
                let n = r.u16_be()?;
                let arguments = (0..n).map(|_| r.u16_be()).collect::<Result<_, _>>()?;
                Ok(BootstrapMethod { method_ref, arguments })
            })?),
            b"ConstantValue" => AttrBody::ConstantValue(r.u16_be()?),
            b"Signature" => AttrBody::Signature(r.u16_be()?),
            b"SourceFile" => AttrBody::SourceFile(r.u16_be()?),
            b"NestHost" => AttrBody::NestHost(r.u16_be()?),
            b"Exceptions" => AttrBody::Exceptions(counted(&mut r, |r| r.u16_be())?),
            b"NestMembers" => AttrBody::NestMembers(counted(&mut r, |r| r.u16_be())?),
            b"PermittedSubclasses" => AttrBody::PermittedSubclasses(counted(&mut r, |r| r.u16_be())?),
            b"EnclosingMethod" => AttrBody::EnclosingMethod { class: r.u16_be()?, method: r.u16_be()? },
            b"MethodParameters" => {
                let n = r.u8()?;
                AttrBody::MethodParameters(
                    (0..n)
                        .map(|_| Ok(MethodParameter { name: r.u16_be()?, access_flags: r.u16_be()? }))
                        .collect::<Result<_, Truncated>>()?,
                )
            }
            b"RuntimeVisibleAnnotations" | b"RuntimeInvisibleAnnotations" => AttrBody::Annotations(counted(&mut r, |r| annotation(r, 0))?),
            b"RuntimeVisibleParameterAnnotations" | b"RuntimeInvisibleParameterAnnotations" => {
                let n = r.u8()?;
                AttrBody::ParameterAnnotations((0..n).map(|_| counted(&mut r, |r| annotation(r, 0))).collect::<Result<_, _>>()?)
            }
            b"AnnotationDefault" => AttrBody::AnnotationDefault(element_value(&mut r, 0)?),
            _ => return Err(Truncated { at: 0, wanted: 0, available: 0 }),
        })
    })();
    let mut decoded = match decoded {
        Ok(d) => d,
        Err(_) => return Ok(None),
    };
    if let AttrBody::Code(code) = &mut decoded {
        bytecode::decode(&code.code)?;
        code.attributes = parse_attributes(&mut r, pool)?;
    }
    if !r.is_empty() {
        return Ok(None);
    }
    Ok(Some(decoded))
}

fn counted<T>(r: &mut Reader<'_>, mut f: impl FnMut(&mut Reader<'_>) -> Result<T, Truncated>) -> Result<Vec<T>, Truncated> {
    let n = r.u16_be()?;
    (0..n).map(|_| f(r)).collect()
}

fn local_variable(r: &mut Reader<'_>) -> Result<LocalVariable, Truncated> {
    Ok(LocalVariable { start_pc: r.u16_be()?, length: r.u16_be()?, name: r.u16_be()?, descriptor: r.u16_be()?, index: r.u16_be()? })
}

const MAX_ANNOTATION_DEPTH: u8 = 64;

fn annotation(r: &mut Reader<'_>, depth: u8) -> Result<Annotation, Truncated> {
    let type_index = r.u16_be()?;
    let pairs = counted(r, |r| Ok((r.u16_be()?, element_value(r, depth + 1)?)))?;
    Ok(Annotation { type_index, pairs })
}

fn element_value(r: &mut Reader<'_>, depth: u8) -> Result<ElementValue, Truncated> {
    if depth > MAX_ANNOTATION_DEPTH {
        return Err(Truncated { at: r.pos(), wanted: 0, available: 0 });
    }
    let tag = r.u8()?;
    Ok(match tag {
        b'B' | b'C' | b'D' | b'F' | b'I' | b'J' | b'S' | b'Z' | b's' => ElementValue::Const { tag, index: r.u16_be()? },
        b'e' => ElementValue::Enum { type_name: r.u16_be()?, const_name: r.u16_be()? },
        b'c' => ElementValue::Class(r.u16_be()?),
        b'@' => ElementValue::Annotation(Box::new(annotation(r, depth + 1)?)),
        b'[' => ElementValue::Array(counted(r, |r| element_value(r, depth + 1))?),
        _ => return Err(Truncated { at: r.pos(), wanted: 0, available: 0 }),
    })
}

fn vtype(r: &mut Reader<'_>) -> Result<Option<VType>, Truncated> {
    Ok(Some(match r.u8()? {
        0 => VType::Top,
        1 => VType::Integer,
        2 => VType::Float,
        3 => VType::Double,
        4 => VType::Long,
        5 => VType::Null,
        6 => VType::UninitializedThis,
        7 => VType::Object(r.u16_be()?),
        8 => VType::Uninitialized(r.u16_be()?),
        _ => return Ok(None),
    }))
}

fn vtypes(r: &mut Reader<'_>, n: usize) -> Result<Option<Vec<VType>>, Truncated> {
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        match vtype(r)? {
            Some(v) => out.push(v),
            None => return Ok(None),
        }
    }
    Ok(Some(out))
}

fn stack_map(r: &mut Reader<'_>) -> Result<Option<Vec<StackMapFrame>>, Truncated> {
    let n = r.u16_be()?;
    let mut frames = Vec::with_capacity(n as usize);
    for _ in 0..n {
        let frame_type = r.u8()?;
        let frame = match frame_type {
            0..=63 => StackMapFrame::Same { frame_type },
            64..=127 => match vtype(r)? {
                Some(stack) => StackMapFrame::SameLocals1StackItem { frame_type, stack },
                None => return Ok(None),
            },
            247 => {
                let offset_delta = r.u16_be()?;
                match vtype(r)? {
                    Some(stack) => StackMapFrame::SameLocals1StackItemExtended { offset_delta, stack },
                    None => return Ok(None),
                }
            }
            248..=250 => StackMapFrame::Chop { frame_type, offset_delta: r.u16_be()? },
            251 => StackMapFrame::SameExtended { offset_delta: r.u16_be()? },
            252..=254 => {
                let offset_delta = r.u16_be()?;
                match vtypes(r, (frame_type - 251) as usize)? {
                    Some(locals) => StackMapFrame::Append { frame_type, offset_delta, locals },
                    None => return Ok(None),
                }
            }
            255 => {
                let offset_delta = r.u16_be()?;
                let nl = r.u16_be()? as usize;
                let Some(locals) = vtypes(r, nl)? else { return Ok(None) };
                let ns = r.u16_be()? as usize;
                let Some(stack) = vtypes(r, ns)? else { return Ok(None) };
                StackMapFrame::Full { offset_delta, locals, stack }
            }
            _ => return Ok(None),
        };
        frames.push(frame);
    }
    Ok(Some(frames))
}

// ---------------------------------------------------------------------------
// Encoding

pub(crate) fn write_attributes(out: &mut Vec<u8>, attrs: &[AttrInfo]) {
    out.put_u16(attrs.len() as u16);
    for a in attrs {
        write_attribute(out, a);
    }
}

pub(crate) fn write_attribute(out: &mut Vec<u8>, attr: &AttrInfo) {
    let mut body = Vec::new();
    write_body(&mut body, &attr.body);
    out.put_u16(attr.name_index);
    out.put_u32(body.len() as u32);
    out.extend_from_slice(&body);
}

fn write_body(out: &mut Vec<u8>, body: &AttrBody) {
    match body {
        AttrBody::Code(c) => {
            out.put_u16(c.max_stack);
            out.put_u16(c.max_locals);
            out.put_u32(c.code.len() as u32);
            out.extend_from_slice(&c.code);
            out.put_u16(c.exception_table.len() as u16);
            for h in &c.exception_table {
                out.put_u16(h.start_pc);
                out.put_u16(h.end_pc);
                out.put_u16(h.handler_pc);
                out.put_u16(h.catch_type);
            }
            write_attributes(out, &c.attributes);
        }
        AttrBody::InnerClasses(v) => {
            out.put_u16(v.len() as u16);
            for e in v {
                out.put_u16(e.inner_class);
                out.put_u16(e.outer_class);
                out.put_u16(e.inner_name);
                out.put_u16(e.access_flags);
            }
        }
        AttrBody::LineNumberTable(v) => {
            out.put_u16(v.len() as u16);
            for l in v {
                out.put_u16(l.start_pc);
                out.put_u16(l.line);
            }
        }
        AttrBody::LocalVariableTable(v) | AttrBody::LocalVariableTypeTable(v) => {
            out.put_u16(v.len() as u16);
            for l in v {
                out.put_u16(l.start_pc);
                out.put_u16(l.length);
                out.put_u16(l.name);
                out.put_u16(l.descriptor);
                out.put_u16(l.index);
            }
        }
        AttrBody::StackMapTable(frames) => {
            out.put_u16(frames.len() as u16);
            for f in frames {
                write_frame(out, f);
            }
        }
        AttrBody::BootstrapMethods(v) => {
            out.put_u16(v.len() as u16);
            for b in v {
                out.put_u16(b.method_ref);
                out.put_u16(b.arguments.len() as u16);
                for a in &b.arguments {
                    out.put_u16(*a);
                }
            }
        }
        AttrBody::ConstantValue(i) | AttrBody::Signature(i) | AttrBody::SourceFile(i) | AttrBody::NestHost(i) => out.put_u16(*i),
        AttrBody::Exceptions(v) | AttrBody::NestMembers(v) | AttrBody::PermittedSubclasses(v) => {
            out.put_u16(v.len() as u16);
            for i in v {
                out.put_u16(*i);
            }
        }
        AttrBody::EnclosingMethod { class, method } => {
            out.put_u16(*class);
            out.put_u16(*method);
        }
        AttrBody::MethodParameters(v) => {
            out.put_u8(v.len() as u8);
            for p in v {
                out.put_u16(p.name);
                out.put_u16(p.access_flags);
            }
        }
        AttrBody::Annotations(v) => {
            out.put_u16(v.len() as u16);
            for a in v {
                write_annotation(out, a);
            }
        }
        AttrBody::ParameterAnnotations(v) => {
            out.put_u8(v.len() as u8);
            for params in v {
                out.put_u16(params.len() as u16);
                for a in params {
                    write_annotation(out, a);
                }
            }
        }
        AttrBody::AnnotationDefault(e) => write_element(out, e),
        AttrBody::Opaque(b) => out.extend_from_slice(b),
    }
}

fn write_annotation(out: &mut Vec<u8>, a: &Annotation) {
    out.put_u16(a.type_index);
    out.put_u16(a.pairs.len() as u16);
    for (name, value) in &a.pairs {
        out.put_u16(*name);
        write_element(out, value);
    }
}

fn write_element(out: &mut Vec<u8>, e: &ElementValue) {
    match e {
        ElementValue::Const { tag, index } => {
            out.put_u8(*tag);
            out.put_u16(*index);
        }
        ElementValue::Enum { type_name, const_name } => {
            out.put_u8(b'e');
            out.put_u16(*type_name);
            out.put_u16(*const_name);
        }
        ElementValue::Class(i) => {
            out.put_u8(b'c');
            out.put_u16(*i);
        }
        ElementValue::Annotation(a) => {
            out.put_u8(b'@');
            write_annotation(out, a);
        }
        ElementValue::Array(v) => {
            out.put_u8(b'[');
            out.put_u16(v.len() as u16);
            for x in v {
                write_element(out, x);
            }
        }
    }
}

fn write_vtype(out: &mut Vec<u8>, v: &VType) {
    match v {
        VType::Top => out.put_u8(0),
        VType::Integer => out.put_u8(1),
        VType::Float => out.put_u8(2),
        VType::Double => out.put_u8(3),
        VType::Long => out.put_u8(4),
        VType::Null => out.put_u8(5),
        VType::UninitializedThis => out.put_u8(6),
        VType::Object(i) => {
            out.put_u8(7);
            out.put_u16(*i);
        }
        VType::Uninitialized(off) => {
            out.put_u8(8);
            out.put_u16(*off);
        }
    }
}

fn write_frame(out: &mut Vec<u8>, f: &StackMapFrame) {
    match f {
        StackMapFrame::Same { frame_type } => out.put_u8(*frame_type),
        StackMapFrame::SameLocals1StackItem { frame_type, stack } => {
            out.put_u8(*frame_type);
            write_vtype(out, stack);
        }
        StackMapFrame::SameLocals1StackItemExtended { offset_delta, stack } => {
            out.put_u8(247);
            out.put_u16(*offset_delta);
            write_vtype(out, stack);
        }
        StackMapFrame::Chop { frame_type, offset_delta } => {
            out.put_u8(*frame_type);
            out.put_u16(*offset_delta);
        }
        StackMapFrame::SameExtended { offset_delta } => {
            out.put_u8(251);
            out.put_u16(*offset_delta);
        }
        StackMapFrame::Append { frame_type, offset_delta, locals } => {
            out.put_u8(*frame_type);
            out.put_u16(*offset_delta);
            for v in locals {
                write_vtype(out, v);
            }
        }
        StackMapFrame::Full { offset_delta, locals, stack } => {
            out.put_u8(255);
            out.put_u16(*offset_delta);
            out.put_u16(locals.len() as u16);
            for v in locals {
                write_vtype(out, v);
            }
            out.put_u16(stack.len() as u16);
            for v in stack {
                write_vtype(out, v);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Index sites

/// What a constant-pool reference site accepts.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Site {
    pub tags: &'static [CpTag],
    pub allow_zero: bool,
}

const UTF8: Site = Site { tags: &[CpTag::Utf8], allow_zero: false };
const UTF8_OR_ZERO: Site = Site { tags: &[CpTag::Utf8], allow_zero: true };
const CLASS: Site = Site { tags: &[CpTag::Class], allow_zero: false };
const CLASS_OR_ZERO: Site = Site { tags: &[CpTag::Class], allow_zero: true };
const LOADABLE_SITE: Site = Site { tags: LOADABLE, allow_zero: false };
const METHOD_HANDLE: Site = Site { tags: &[CpTag::MethodHandle], allow_zero: false };

pub(crate) type SiteFn<'a> = dyn FnMut(u16, Site) -> Result<u16, ClassError> + 'a;

fn opcode_site(op: u8) -> Site {
    use CpTag::*;
    let tags: &'static [CpTag] = match op {
        LDC | LDC_W => &[Integer, Float, String, Class, MethodHandle, MethodType, Dynamic],
        LDC2_W => &[Long, Double, Dynamic],
        0xb2..=0xb5 => &[Fieldref],
        0xb6 => &[Methodref],
        0xb7 | 0xb8 => &[Methodref, InterfaceMethodref],
        INVOKEINTERFACE => &[InterfaceMethodref],
        INVOKEDYNAMIC => &[InvokeDynamic],
        0xbb | 0xbd | 0xc0 | 0xc1 | MULTIANEWARRAY => &[Class],
        _ => &[],
    };
    Site { tags, allow_zero: false }
}

fn visit(i: &mut u16, site: Site, f: &mut SiteFn<'_>) -> Result<(), ClassError> {
    *i = f(*i, site)?;
    Ok(())
}

/// Applies `f` to every constant-pool index stored in `attr`, in a fixed
/// traversal order, replacing each with the returned value. Opaque bodies are
/// not visited.
pub(crate) fn visit_attr(attr: &mut AttrInfo, f: &mut SiteFn<'_>) -> Result<(), ClassError> {
    visit(&mut attr.name_index, UTF8, f)?;
    match &mut attr.body {
        AttrBody::Code(c) => {
            bytecode::remap_cp_operands(&mut c.code, &mut |i, op| f(i, opcode_site(op)))?;
            for h in &mut c.exception_table {
                visit(&mut h.catch_type, CLASS_OR_ZERO, f)?;
            }
            for a in &mut c.attributes {
                visit_attr(a, f)?;
            }
        }
        AttrBody::InnerClasses(v) => {
            for e in v {
                visit(&mut e.inner_class, CLASS, f)?;
                visit(&mut e.outer_class, CLASS_OR_ZERO, f)?;
                visit(&mut e.inner_name, UTF8_OR_ZERO, f)?;
            }
        }
        AttrBody::LineNumberTable(_) => {}
        AttrBody::LocalVariableTable(v) | AttrBody::LocalVariableTypeTable(v) => {
            for l in v {
                visit(&mut l.name, UTF8, f)?;
                visit(&mut l.descriptor, UTF8, f)?;
            }
        }
        AttrBody::StackMapTable(frames) => {
            for fr in frames {
                let (locals, stack): (&mut [VType], &mut [VType]) = match fr {
                    StackMapFrame::SameLocals1StackItem { stack, .. } | StackMapFrame::SameLocals1StackItemExtended { stack, .. } => {
                        (&mut [], std::slice::from_mut(stack))
                    }
                    StackMapFrame::Append { locals, .. } => (locals.as_mut_slice(), &mut []),
                    StackMapFrame::Full { locals, stack, .. } => (locals.as_mut_slice(), stack.as_mut_slice()),
                    _ => (&mut [], &mut []),
                };
                for v in locals.iter_mut().chain(stack.iter_mut()) {
                    if let VType::Object(i) = v {
                        visit(i, CLASS, f)?;
                    }
                }
            }
        }
        AttrBody::BootstrapMethods(v) => {
            for b in v {
                visit(&mut b.method_ref, METHOD_HANDLE, f)?;
                for a in &mut b.arguments {
                    visit(a, LOADABLE_SITE, f)?;
                }
            }
        }
        AttrBody::ConstantValue(i) => {
            let site = Site { tags: &[CpTag::Integer, CpTag::Float, CpTag::Long, CpTag::Double, CpTag::String], allow_zero: false };
            visit(i, site, f)?
        }
        AttrBody::Signature(i) | AttrBody::SourceFile(i) => visit(i, UTF8, f)?,
        AttrBody::NestHost(i) => visit(i, CLASS, f)?,
        AttrBody::Exceptions(v) | AttrBody::NestMembers(v) | AttrBody::PermittedSubclasses(v) => {
            for i in v {
                visit(i, CLASS, f)?;
            }
        }
        AttrBody::EnclosingMethod { class, method } => {
            visit(class, CLASS, f)?;
            visit(method, Site { tags: &[CpTag::NameAndType], allow_zero: true }, f)?;
        }
        AttrBody::MethodParameters(v) => {
            for p in v {
                visit(&mut p.name, UTF8_OR_ZERO, f)?;
            }
        }
        AttrBody::Annotations(v) => {
            for a in v {
                visit_annotation(a, f)?;
            }
        }
        AttrBody::ParameterAnnotations(v) => {
            for a in v.iter_mut().flatten() {
                visit_annotation(a, f)?;
            }
        }
        AttrBody::AnnotationDefault(e) => visit_element(e, f)?,
        AttrBody::Opaque(_) => {}
    }
    Ok(())
}

fn visit_annotation(a: &mut Annotation, f: &mut SiteFn<'_>) -> Result<(), ClassError> {
    visit(&mut a.type_index, UTF8, f)?;
    for (name, value) in &mut a.pairs {
        visit(name, UTF8, f)?;
        visit_element(value, f)?;
    }
    Ok(())
}

fn visit_element(e: &mut ElementValue, f: &mut SiteFn<'_>) -> Result<(), ClassError> {
    use CpTag::*;
    match e {
        ElementValue::Const { tag, index } => {
            let tags: &'static [CpTag] = match tag {
                b'B' | b'C' | b'I' | b'S' | b'Z' => &[Integer],
                b'D' => &[Double],
                b'F' => &[Float],
                b'J' => &[Long],
                _ => &[Utf8],
            };
            visit(index, Site { tags, allow_zero: false }, f)
        }
        ElementValue::Enum { type_name, const_name } => {
            visit(type_name, UTF8, f)?;
            visit(const_name, UTF8, f)
        }
        ElementValue::Class(i) => visit(i, UTF8, f),
        ElementValue::Annotation(a) => visit_annotation(a, f),
        ElementValue::Array(v) => v.iter_mut().try_for_each(|x| visit_element(x, f)),
    }
}

fn validate_attr(attr: &AttrInfo, pool: &ConstantPool) -> Result<(), ClassError> {
    let mut copy = attr.clone();
    let name = pool.utf8_lossy(attr.name_index);
    visit_attr(&mut copy, &mut |i, site| {
        pool.expect(i, site.tags, site.allow_zero, &format!("attribute {name}"))?;
        Ok(i)
    })
}
