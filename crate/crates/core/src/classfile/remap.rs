//! Constant-pool index rewiring shared by the rewriter and the fixture
//! generator.

use super::attributes::{visit_attr, Site, SiteFn};
use super::constant_pool::{ConstantPool, CpTag};
use super::{malformed, ClassError, ClassModel};

const CLASS: Site = Site { tags: &[CpTag::Class], allow_zero: false };
const UTF8: Site = Site { tags: &[CpTag::Utf8], allow_zero: false };

/// Visits every pool reference outside the pool itself, in a fixed order:
/// class header, fields, methods, then class attributes.
pub(crate) fn visit_class_sites(model: &mut ClassModel, f: &mut SiteFn<'_>) -> Result<(), ClassError> {
    model.this_class = f(model.this_class, CLASS)?;
    model.super_class = f(model.super_class, Site { tags: &[CpTag::Class], allow_zero: true })?;
    for i in &mut model.interfaces {
        *i = f(*i, CLASS)?;
    }
    for m in model.fields.iter_mut().chain(model.methods.iter_mut()) {
        m.name_index = f(m.name_index, UTF8)?;
        m.descriptor_index = f(m.descriptor_index, UTF8)?;
        for a in &mut m.attributes {
            visit_attr(a, f)?;
        }
    }
    for a in &mut model.attributes {
        visit_attr(a, f)?;
    }
    Ok(())
}

/// Rewrites every index (pool-internal and external) through `map`, which is
/// indexed by old slot number and yields the new one.
pub(crate) fn apply_index_map(model: &mut ClassModel, new_pool: ConstantPool, map: &[u16]) -> Result<(), ClassError> {
    let lookup = |i: u16| -> Result<u16, ClassError> {
        if i == 0 {
            return Ok(0);
        }
        map.get(i as usize).copied().filter(|&n| n != 0).ok_or_else(|| malformed(format!("no mapping for constant #{i}")))
    };
    let mut pool = new_pool;
    for e in pool.slots_mut().iter_mut().flatten() {
        for c in e.children_mut() {
            *c = lookup(*c)?;
        }
    }
    visit_class_sites(model, &mut |i, _| lookup(i))?;
    model.constant_pool = pool;
    Ok(())
}

/// Reorders the pool. `order[k]` is the position, in the current entry
/// sequence, of the entry that should come k-th. Fails if a one-byte `ldc`
/// operand would no longer fit.
pub fn permute_pool(model: &ClassModel, order: &[usize]) -> Result<ClassModel, ClassError> {
    let entries: Vec<u16> = model.constant_pool.indices().collect();
    let mut sorted = order.to_vec();
    sorted.sort_unstable();
    if sorted != (0..entries.len()).collect::<Vec<_>>() {
        return Err(malformed("permutation does not cover the constant pool"));
    }
    let mut pool = ConstantPool::new();
    let mut map = vec![0u16; model.constant_pool.count() as usize];
    for &pos in order {
        let old = entries[pos];
        let e = model.constant_pool.get(old).expect("present").clone();
        map[old as usize] = pool.push(e);
    }
    let mut out = model.clone();
    apply_index_map(&mut out, pool, &map)?;
    Ok(out)
}

/// Appends a copy of the entry at `index` and points every other reference to
/// it (the first, third, ... in traversal order) at the copy. Returns the new
/// model and the copy's index.
pub fn duplicate_entry(model: &ClassModel, index: u16) -> Result<(ClassModel, u16), ClassError> {
    let entry = model.constant_pool.get(index).cloned().ok_or_else(|| malformed(format!("cannot duplicate missing constant #{index}")))?;
    let mut out = model.clone();
    let copy = out.constant_pool.push(entry);
    let mut seen = 0usize;
    let mut redirect = |i: u16| {
        if i == index {
            seen += 1;
            if seen % 2 == 1 {
                return copy;
            }
        }
        i
    };
    for slot in out.constant_pool.slots_mut().iter_mut().take(copy as usize).flatten() {
        for c in slot.children_mut() {
            *c = redirect(*c);
        }
    }
    visit_class_sites(&mut out, &mut |i, _| Ok(redirect(i)))?;
    Ok((out, copy))
}
