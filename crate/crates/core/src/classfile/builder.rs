//! Programmatic construction of class models, used by the fixture generator
//! and tests. Pool entries are interned, so building the same thing twice
//! yields the same indices.

use std::collections::HashMap;

use super::attributes::{
    AttrBody, AttrInfo, BootstrapMethod, CodeAttr, ExceptionHandler, InnerClassEntry, LineNumber, LocalVariable, StackMapFrame, VType,
};
use super::bytecode::{LDC, LDC_W, WIDE};
use super::constant_pool::{ConstantPool, CpEntry};
use super::{ClassModel, MemberInfo};
use crate::bytes::PutBe;

pub struct ClassBuilder {
    pub pool: ConstantPool,
    this_class: u16,
    super_class: u16,
    access_flags: u16,
    major_version: u16,
    interfaces: Vec<u16>,
    fields: Vec<MemberInfo>,
    methods: Vec<MemberInfo>,
    attributes: Vec<AttrInfo>,
    bootstrap: Vec<BootstrapMethod>,
}

impl ClassBuilder {
    /// A public class of version 52 (Java 8).
    pub fn new(name: &str, super_name: &str) -> Self {
        let mut pool = ConstantPool::new();
        let this_class = intern_class(&mut pool, name);
        let super_class = intern_class(&mut pool, super_name);
        ClassBuilder {
            pool,
            this_class,
            super_class,
            access_flags: 0x0021,
            major_version: 52,
            interfaces: Vec::new(),
            fields: Vec::new(),
            methods: Vec::new(),
            attributes: Vec::new(),
            bootstrap: Vec::new(),
        }
    }

    pub fn access(mut self, flags: u16) -> Self {
        self.access_flags = flags;
        self
    }

    pub fn this_class(&self) -> u16 {
        self.this_class
    }

    pub fn utf8(&mut self, s: &str) -> u16 {
        self.pool.intern(CpEntry::Utf8(s.as_bytes().to_vec()))
    }

    pub fn class(&mut self, name: &str) -> u16 {
        intern_class(&mut self.pool, name)
    }

    pub fn string(&mut self, s: &str) -> u16 {
        let u = self.utf8(s);
        self.pool.intern(CpEntry::String(u))
    }

    pub fn integer(&mut self, v: i32) -> u16 {
        self.pool.intern(CpEntry::Integer(v))
    }

    pub fn long(&mut self, v: i64) -> u16 {
        self.pool.intern(CpEntry::Long(v))
    }

    pub fn double(&mut self, v: f64) -> u16 {
        self.pool.intern(CpEntry::Double(v.to_bits()))
    }

    pub fn name_and_type(&mut self, name: &str, desc: &str) -> u16 {
        let n = self.utf8(name);
        let d = self.utf8(desc);
        self.pool.intern(CpEntry::NameAndType { name: n, descriptor: d })
    }

    pub fn fieldref(&mut self, owner: &str, name: &str, desc: &str) -> u16 {
        let c = self.class(owner);
        let nt = self.name_and_type(name, desc);
        self.pool.intern(CpEntry::Fieldref { class: c, name_and_type: nt })
    }

    pub fn methodref(&mut self, owner: &str, name: &str, desc: &str) -> u16 {
        let c = self.class(owner);
        let nt = self.name_and_type(name, desc);
        self.pool.intern(CpEntry::Methodref { class: c, name_and_type: nt })
    }

    pub fn interface_methodref(&mut self, owner: &str, name: &str, desc: &str) -> u16 {
        let c = self.class(owner);
        let nt = self.name_and_type(name, desc);
        self.pool.intern(CpEntry::InterfaceMethodref { class: c, name_and_type: nt })
    }

    pub fn method_handle(&mut self, kind: u8, reference: u16) -> u16 {
        self.pool.intern(CpEntry::MethodHandle { kind, reference })
    }

    pub fn method_type(&mut self, desc: &str) -> u16 {
        let d = self.utf8(desc);
        self.pool.intern(CpEntry::MethodType(d))
    }

    /// Registers a bootstrap method and returns an `InvokeDynamic` entry using it.
    pub fn invoke_dynamic(&mut self, bsm: u16, args: Vec<u16>, name: &str, desc: &str) -> u16 {
        let existing = self.bootstrap.iter().position(|b| b.method_ref == bsm && b.arguments == args);
        let index = existing.unwrap_or_else(|| {
            self.bootstrap.push(BootstrapMethod { method_ref: bsm, arguments: args });
            self.bootstrap.len() - 1
        }) as u16;
        let nt = self.name_and_type(name, desc);
        self.pool.intern(CpEntry::InvokeDynamic { bootstrap: index, name_and_type: nt })
    }

    pub fn add_interface(&mut self, name: &str) {
        let c = self.class(name);
        self.interfaces.push(c);
    }

    pub fn add_field(&mut self, access: u16, name: &str, desc: &str) {
        let name_index = self.utf8(name);
        let descriptor_index = self.utf8(desc);
        self.fields.push(MemberInfo { access_flags: access, name_index, descriptor_index, attributes: Vec::new() });
    }

    pub fn attribute(&mut self, name: &str, body: AttrBody) -> AttrInfo {
        AttrInfo { name_index: self.utf8(name), body }
    }

    pub fn add_method(&mut self, access: u16, name: &str, desc: &str, code: Option<CodeAttr>) -> usize {
        let name_index = self.utf8(name);
        let descriptor_index = self.utf8(desc);
        let mut attributes = Vec::new();
        if let Some(c) = code {
            attributes.push(self.attribute("Code", AttrBody::Code(c)));
        }
        self.methods.push(MemberInfo { access_flags: access, name_index, descriptor_index, attributes });
        self.methods.len() - 1
    }

    pub fn add_class_attribute(&mut self, attr: AttrInfo) {
        self.attributes.push(attr);
    }

    pub fn inner_class(&mut self, inner: &str, outer: Option<&str>, simple: Option<&str>, flags: u16) -> InnerClassEntry {
        InnerClassEntry {
            inner_class: self.class(inner),
            outer_class: outer.map_or(0, |o| self.class(o)),
            inner_name: simple.map_or(0, |s| self.utf8(s)),
            access_flags: flags,
        }
    }

    pub fn build(mut self) -> ClassModel {
        if !self.bootstrap.is_empty() {
            let bsm = std::mem::take(&mut self.bootstrap);
            let attr = self.attribute("BootstrapMethods", AttrBody::BootstrapMethods(bsm));
            self.attributes.push(attr);
        }
        ClassModel {
            minor_version: 0,
            major_version: self.major_version,
            constant_pool: self.pool,
            access_flags: self.access_flags,
            this_class: self.this_class,
            super_class: self.super_class,
            interfaces: self.interfaces,
            fields: self.fields,
            methods: self.methods,
            attributes: self.attributes,
        }
    }
}

fn intern_class(pool: &mut ConstantPool, name: &str) -> u16 {
    let u = pool.intern(CpEntry::Utf8(name.as_bytes().to_vec()));
    pool.intern(CpEntry::Class(u))
}

/// Minimal bytecode assembler with forward labels.
#[derive(Default)]
pub struct CodeAsm {
    code: Vec<u8>,
    labels: HashMap<&'static str, u16>,
    fixups: Vec<(usize, usize, &'static str)>,
}

impl CodeAsm {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn pc(&self) -> u16 {
        self.code.len() as u16
    }

    pub fn op(&mut self, opcode: u8) -> &mut Self {
        self.code.push(opcode);
        self
    }

    pub fn op_u8(&mut self, opcode: u8, v: u8) -> &mut Self {
        self.code.push(opcode);
        self.code.push(v);
        self
    }

    pub fn op_u16(&mut self, opcode: u8, v: u16) -> &mut Self {
        self.code.push(opcode);
        self.code.put_u16(v);
        self
    }

    /// Local access in the generic form (`iload n`), widened above 255.
    pub fn local(&mut self, family: u8, slot: u16) -> &mut Self {
        if slot > 255 {
            self.code.push(WIDE);
            self.op_u16(family, slot)
        } else {
            self.op_u8(family, slot as u8)
        }
    }

    pub fn iinc(&mut self, slot: u16, delta: i8) -> &mut Self {
        if slot > 255 {
            self.code.extend_from_slice(&[WIDE, 0x84]);
            self.code.put_u16(slot);
            self.code.put_u16(delta as i16 as u16);
            self
        } else {
            self.code.extend_from_slice(&[0x84, slot as u8, delta as u8]);
            self
        }
    }

    /// `ldc` when the index fits a byte, else `ldc_w`.
    pub fn ldc(&mut self, index: u16) -> &mut Self {
        if index <= 255 {
            self.op_u8(LDC, index as u8)
        } else {
            self.op_u16(LDC_W, index)
        }
    }

    pub fn label(&mut self, name: &'static str) -> &mut Self {
        self.labels.insert(name, self.pc());
        self
    }

    pub fn branch(&mut self, opcode: u8, target: &'static str) -> &mut Self {
        let at = self.code.len();
        self.code.push(opcode);
        self.fixups.push((at, at + 1, target));
        self.code.put_u16(0);
        self
    }

    pub fn label_pc(&self, name: &str) -> u16 {
        self.labels[name]
    }

    pub fn finish(mut self) -> (Vec<u8>, HashMap<&'static str, u16>) {
        for (insn, at, target) in std::mem::take(&mut self.fixups) {
            let rel = self.labels[target] as i32 - insn as i32;
            self.code[at..at + 2].copy_from_slice(&(rel as i16).to_be_bytes());
        }
        (self.code, self.labels)
    }
}

/// Chooses the compressed encoding javac would use for a frame, given the
/// previous frame's locals and this frame's locals and stack.
pub fn compress_frame(offset_delta: u16, prev: &[VType], locals: &[VType], stack: &[VType]) -> StackMapFrame {
    if locals == prev {
        match stack {
            [] if offset_delta < 64 => return StackMapFrame::Same { frame_type: offset_delta as u8 },
            [] => return StackMapFrame::SameExtended { offset_delta },
            [v] if offset_delta < 64 => return StackMapFrame::SameLocals1StackItem { frame_type: 64 + offset_delta as u8, stack: *v },
            [v] => return StackMapFrame::SameLocals1StackItemExtended { offset_delta, stack: *v },
            _ => {}
        }
    }
    if stack.is_empty() {
        if locals.len() > prev.len() && locals.len() - prev.len() <= 3 && locals.starts_with(prev) {
            let k = (locals.len() - prev.len()) as u8;
            return StackMapFrame::Append { frame_type: 251 + k, offset_delta, locals: locals[prev.len()..].to_vec() };
        }
        if prev.len() > locals.len() && prev.len() - locals.len() <= 3 && prev.starts_with(locals) {
            let k = (prev.len() - locals.len()) as u8;
            return StackMapFrame::Chop { frame_type: 251 - k, offset_delta };
        }
    }
    StackMapFrame::Full { offset_delta, locals: locals.to_vec(), stack: stack.to_vec() }
}

/// Helper bundle for a method body under construction.
pub struct CodeParts {
    pub max_stack: u16,
    pub max_locals: u16,
    pub code: Vec<u8>,
    pub exception_table: Vec<ExceptionHandler>,
    pub lines: Vec<LineNumber>,
    pub locals: Vec<LocalVariable>,
    pub frames: Vec<StackMapFrame>,
}

impl CodeParts {
    pub fn into_code(self, b: &mut ClassBuilder) -> CodeAttr {
        let mut attributes = Vec::new();
        if !self.frames.is_empty() {
            attributes.push(b.attribute("StackMapTable", AttrBody::StackMapTable(self.frames)));
        }
        if !self.lines.is_empty() {
            attributes.push(b.attribute("LineNumberTable", AttrBody::LineNumberTable(self.lines)));
        }
        if !self.locals.is_empty() {
            attributes.push(b.attribute("LocalVariableTable", AttrBody::LocalVariableTable(self.locals)));
        }
        CodeAttr {
            max_stack: self.max_stack,
            max_locals: self.max_locals,
            code: self.code,
            exception_table: self.exception_table,
            attributes,
        }
    }
}
