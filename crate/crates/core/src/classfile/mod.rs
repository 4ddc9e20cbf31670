//! JVM class files: a byte-exact structural model, an index-free canonical
//! form for equivalence decisions, and a best-effort normalizing rewriter.

mod attributes;
pub mod builder;
pub mod bytecode;
mod canonical;
mod constant_pool;
mod reader;
mod remap;
mod rewrite;
mod writer;

pub use attributes::{
    Annotation, AttrBody, AttrInfo, BootstrapMethod, CodeAttr, ElementValue, ExceptionHandler, InnerClassEntry, LineNumber, LocalVariable,
    MethodParameter, StackMapFrame, VType,
};
pub use canonical::{canonicalize_class, CNode, CanonNote, CanonicalClassForm, ClassCanonPolicy};
pub use constant_pool::{ConstantPool, CpEntry, CpTag};
pub use reader::parse_class;
pub use remap::{duplicate_entry, permute_pool};
pub use rewrite::{rewrite_class, PoolRewrite, RewriteOutcome, RewritePolicy};
pub use writer::serialize_class;

pub const MAGIC: u32 = 0xCAFE_BABE;
pub const ACC_STATIC: u16 = 0x0008;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ClassError {
    #[error("malformed class file: {0}")]
    MalformedClass(String),
}

pub(crate) fn malformed(msg: impl Into<String>) -> ClassError {
    ClassError::MalformedClass(msg.into())
}

impl From<crate::bytes::Truncated> for ClassError {
    fn from(t: crate::bytes::Truncated) -> Self {
        ClassError::MalformedClass(t.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MemberInfo {
    pub access_flags: u16,
    pub name_index: u16,
    pub descriptor_index: u16,
    pub attributes: Vec<AttrInfo>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassModel {
    pub minor_version: u16,
    pub major_version: u16,
    pub constant_pool: ConstantPool,
    pub access_flags: u16,
    pub this_class: u16,
    pub super_class: u16,
    pub interfaces: Vec<u16>,
    pub fields: Vec<MemberInfo>,
    pub methods: Vec<MemberInfo>,
    pub attributes: Vec<AttrInfo>,
}

impl ClassModel {
    /// Internal name of this class, e.g. `com/example/Foo`.
    pub fn class_name(&self) -> String {
        self.constant_pool.class_name(self.this_class).unwrap_or_else(|| "<invalid>".into())
    }

    pub fn member_name(&self, m: &MemberInfo) -> String {
        self.constant_pool.utf8_lossy(m.name_index)
    }

    pub fn member_descriptor(&self, m: &MemberInfo) -> String {
        self.constant_pool.utf8_lossy(m.descriptor_index)
    }

    pub fn find_method(&self, name: &str, descriptor: &str) -> Option<&MemberInfo> {
        self.methods.iter().find(|m| self.member_name(m) == name && self.member_descriptor(m) == descriptor)
    }

    pub fn attribute_name(&self, a: &AttrInfo) -> String {
        self.constant_pool.utf8_lossy(a.name_index)
    }
}

/// Number of local-variable slots taken by `this` (unless static) and the
/// parameters of a method descriptor. `long` and `double` take two slots.
pub fn parameter_slots(descriptor: &[u8], is_static: bool) -> Option<u16> {
    let mut slots: u16 = if is_static { 0 } else { 1 };
    let mut i = 1;
    if descriptor.first() != Some(&b'(') {
        return None;
    }
    while i < descriptor.len() && descriptor[i] != b')' {
        match descriptor[i] {
            b'J' | b'D' => {
                slots += 2;
                i += 1;
            }
            b'B' | b'C' | b'F' | b'I' | b'S' | b'Z' => {
                slots += 1;
                i += 1;
            }
            b'L' => {
                slots += 1;
                i += descriptor[i..].iter().position(|&c| c == b';')? + 1;
            }
            b'[' => {
                while descriptor.get(i) == Some(&b'[') {
                    i += 1;
                }
                match descriptor.get(i)? {
                    b'L' => i += descriptor[i..].iter().position(|&c| c == b';')? + 1,
                    _ => i += 1,
                }
                slots += 1;
            }
            _ => return None,
        }
    }
    Some(slots)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_slot_counting() {
        assert_eq!(parameter_slots(b"()V", true), Some(0));
        assert_eq!(parameter_slots(b"()V", false), Some(1));
        assert_eq!(parameter_slots(b"(Ljava/lang/String;J)V", true), Some(3));
        assert_eq!(parameter_slots(b"(D[JI[[Ljava/lang/Object;)V", false), Some(6));
        assert_eq!(parameter_slots(b"V", false), None);
    }
}

#[cfg(test)]
mod tests_model;
