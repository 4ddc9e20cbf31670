use super::attributes::write_attributes;
use super::constant_pool::{ConstantPool, CpEntry};
use super::{ClassModel, MemberInfo, MAGIC};
use crate::bytes::PutBe;

/// Serializes a model. A model fresh from `parse_class` reproduces its input.
pub fn serialize_class(model: &ClassModel) -> Vec<u8> {
    let mut out = Vec::new();
    out.put_u32(MAGIC);
    out.put_u16(model.minor_version);
    out.put_u16(model.major_version);
    write_pool(&mut out, &model.constant_pool);
    out.put_u16(model.access_flags);
    out.put_u16(model.this_class);
    out.put_u16(model.super_class);
    out.put_u16(model.interfaces.len() as u16);
    for i in &model.interfaces {
        out.put_u16(*i);
    }
    write_members(&mut out, &model.fields);
    write_members(&mut out, &model.methods);
    write_attributes(&mut out, &model.attributes);
    out
}

fn write_members(out: &mut Vec<u8>, members: &[MemberInfo]) {
    out.put_u16(members.len() as u16);
    for m in members {
        out.put_u16(m.access_flags);
        out.put_u16(m.name_index);
        out.put_u16(m.descriptor_index);
        write_attributes(out, &m.attributes);
    }
}

pub(crate) fn write_pool(out: &mut Vec<u8>, pool: &ConstantPool) {
    out.put_u16(pool.count());
    for e in pool.slots().iter().flatten() {
        write_entry(out, e);
    }
}

pub(crate) fn write_entry(out: &mut Vec<u8>, e: &CpEntry) {
    out.put_u8(e.tag() as u8);
    match e {
        CpEntry::Utf8(b) => {
            out.put_u16(b.len() as u16);
            out.extend_from_slice(b);
        }
        CpEntry::Integer(v) => out.put_u32(*v as u32),
        CpEntry::Float(bits) => out.put_u32(*bits),
        CpEntry::Long(v) => out.extend_from_slice(&v.to_be_bytes()),
        CpEntry::Double(bits) => out.extend_from_slice(&bits.to_be_bytes()),
        CpEntry::Class(i) | CpEntry::String(i) | CpEntry::MethodType(i) | CpEntry::Module(i) | CpEntry::Package(i) => out.put_u16(*i),
        CpEntry::Fieldref { class, name_and_type }
        | CpEntry::Methodref { class, name_and_type }
        | CpEntry::InterfaceMethodref { class, name_and_type } => {
            out.put_u16(*class);
            out.put_u16(*name_and_type);
        }
        CpEntry::NameAndType { name, descriptor } => {
            out.put_u16(*name);
            out.put_u16(*descriptor);
        }
        CpEntry::MethodHandle { kind, reference } => {
            out.put_u8(*kind);
            out.put_u16(*reference);
        }
        CpEntry::Dynamic { bootstrap, name_and_type } | CpEntry::InvokeDynamic { bootstrap, name_and_type } => {
            out.put_u16(*bootstrap);
            out.put_u16(*name_and_type);
        }
    }
}
