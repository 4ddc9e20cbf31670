use super::attributes::parse_attributes;
use super::constant_pool::{ConstantPool, CpEntry, CpTag};
use super::{malformed, ClassError, ClassModel, MemberInfo, MAGIC};
use crate::bytes::Reader;

/// Parses a class file into a model that serializes back to the same bytes.
pub fn parse_class(bytes: &[u8]) -> Result<ClassModel, ClassError> {
    let mut r = Reader::new(bytes);
    let magic = r.u32_be()?;
    if magic != MAGIC {
        return Err(malformed(format!("bad magic 0x{magic:08X}")));
    }
    let minor_version = r.u16_be()?;
    let major_version = r.u16_be()?;
    let constant_pool = parse_pool(&mut r)?;
    constant_pool.validate()?;
    let access_flags = r.u16_be()?;
    let this_class = r.u16_be()?;
    constant_pool.expect(this_class, &[CpTag::Class], false, "this_class")?;
    let super_class = r.u16_be()?;
    constant_pool.expect(super_class, &[CpTag::Class], true, "super_class")?;
    let n = r.u16_be()?;
    let mut interfaces = Vec::with_capacity(n as usize);
    for _ in 0..n {
        let i = r.u16_be()?;
        constant_pool.expect(i, &[CpTag::Class], false, "interface")?;
        interfaces.push(i);
    }
    let fields = parse_members(&mut r, &constant_pool, "field")?;
    let methods = parse_members(&mut r, &constant_pool, "method")?;
    let attributes = parse_attributes(&mut r, &constant_pool)?;
    if !r.is_empty() {
        return Err(malformed(format!("{} trailing bytes after class attributes", r.remaining())));
    }
    Ok(ClassModel {
        minor_version,
        major_version,
        constant_pool,
        access_flags,
        this_class,
        super_class,
        interfaces,
        fields,
        methods,
        attributes,
    })
}

fn parse_pool(r: &mut Reader<'_>) -> Result<ConstantPool, ClassError> {
    let count = r.u16_be()?;
    if count == 0 {
        return Err(malformed("constant_pool_count is 0"));
    }
    let mut slots = Vec::with_capacity(count as usize);
    slots.push(None);
    while slots.len() < count as usize {
        let at = r.pos();
        let tag = r.u8()?;
        let entry = match CpTag::from_u8(tag) {
            Some(CpTag::Utf8) => {
                let len = r.u16_be()? as usize;
                CpEntry::Utf8(r.take(len)?.to_vec())
            }
            Some(CpTag::Integer) => CpEntry::Integer(r.i32_be()?),
            Some(CpTag::Float) => CpEntry::Float(r.u32_be()?),
            Some(CpTag::Long) => CpEntry::Long(r.u64_be()? as i64),
            Some(CpTag::Double) => CpEntry::Double(r.u64_be()?),
            Some(CpTag::Class) => CpEntry::Class(r.u16_be()?),
            Some(CpTag::String) => CpEntry::String(r.u16_be()?),
            Some(CpTag::Fieldref) => CpEntry::Fieldref { class: r.u16_be()?, name_and_type: r.u16_be()? },
            Some(CpTag::Methodref) => CpEntry::Methodref { class: r.u16_be()?, name_and_type: r.u16_be()? },
            Some(CpTag::InterfaceMethodref) => CpEntry::InterfaceMethodref { class: r.u16_be()?, name_and_type: r.u16_be()? },
            Some(CpTag::NameAndType) => CpEntry::NameAndType { name: r.u16_be()?, descriptor: r.u16_be()? },
            Some(CpTag::MethodHandle) => CpEntry::MethodHandle { kind: r.u8()?, reference: r.u16_be()? },
            Some(CpTag::MethodType) => CpEntry::MethodType(r.u16_be()?),
            Some(CpTag::Dynamic) => CpEntry::Dynamic { bootstrap: r.u16_be()?, name_and_type: r.u16_be()? },
            Some(CpTag::InvokeDynamic) => CpEntry::InvokeDynamic { bootstrap: r.u16_be()?, name_and_type: r.u16_be()? },
            Some(CpTag::Module) => CpEntry::Module(r.u16_be()?),
            Some(CpTag::Package) => CpEntry::Package(r.u16_be()?),
            None => return Err(malformed(format!("unknown constant tag {tag} at offset {at}"))),
        };
        let wide = entry.is_wide();
        slots.push(Some(entry));
        if wide {
            if slots.len() >= count as usize {
                return Err(malformed("long/double constant occupies the last pool slot"));
            }
            slots.push(None);
        }
    }
    Ok(ConstantPool::from_slots(slots))
}

fn parse_members(r: &mut Reader<'_>, pool: &ConstantPool, what: &str) -> Result<Vec<MemberInfo>, ClassError> {
    let n = r.u16_be()?;
    let mut out = Vec::with_capacity(n as usize);
    for _ in 0..n {
        let access_flags = r.u16_be()?;
        let name_index = r.u16_be()?;
        pool.expect(name_index, &[CpTag::Utf8], false, what)?;
        let descriptor_index = r.u16_be()?;
        pool.expect(descriptor_index, &[CpTag::Utf8], false, what)?;
        let attributes = parse_attributes(r, pool)?;
        out.push(MemberInfo { access_flags, name_index, descriptor_index, attributes });
    }
    Ok(out)
}
