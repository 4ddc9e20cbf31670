//! Byte-level normalizing rewrite: member and table sorting plus a
//! deterministic constant-pool renumbering.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::attributes::{AttrBody, AttrInfo, INDEX_FREE_OPAQUE};
use super::canonical::ClassCanonPolicy;
use super::constant_pool::{ConstantPool, CpEntry};
use super::remap::{apply_index_map, visit_class_sites};
use super::writer::serialize_class;
use super::{ClassError, ClassModel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewritePolicy {
    pub sort_methods: bool,
    pub sort_inner_classes: bool,
    pub strip_line_numbers: bool,
    pub renumber_pool: bool,
}

impl Default for RewritePolicy {
    fn default() -> Self {
        RewritePolicy { sort_methods: true, sort_inner_classes: true, strip_line_numbers: false, renumber_pool: true }
    }
}

impl From<&ClassCanonPolicy> for RewritePolicy {
    fn from(p: &ClassCanonPolicy) -> Self {
        RewritePolicy {
            sort_methods: p.sort_methods,
            sort_inner_classes: p.sort_inner_classes,
            strip_line_numbers: p.strip_line_numbers,
            renumber_pool: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "reason", rename_all = "snake_case")]
pub enum PoolRewrite {
    Unchanged,
    Renumbered,
    /// The original pool was kept; the reason says why renumbering was unsafe.
    Aborted(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RewriteOutcome {
    pub bytes: Vec<u8>,
    pub pool: PoolRewrite,
    pub methods_reordered: bool,
    pub inner_classes_sorted: bool,
    pub line_tables_stripped: usize,
}

impl RewriteOutcome {
    pub fn changed_structure(&self) -> bool {
        self.methods_reordered || self.inner_classes_sorted || self.line_tables_stripped > 0 || self.pool == PoolRewrite::Renumbered
    }
}

pub fn rewrite_class(model: &ClassModel, policy: &RewritePolicy) -> Result<RewriteOutcome, ClassError> {
    let mut m = model.clone();
    let pool = &model.constant_pool;

    let mut methods_reordered = false;
    if policy.sort_methods {
        let key = |mi: &super::MemberInfo| {
            (pool.utf8(mi.name_index).unwrap_or_default().to_vec(), pool.utf8(mi.descriptor_index).unwrap_or_default().to_vec())
        };
        let before: Vec<_> = m.methods.iter().map(key).collect();
        m.methods.sort_by_cached_key(key);
        methods_reordered = m.methods.iter().map(key).collect::<Vec<_>>() != before;
    }

    let mut inner_classes_sorted = false;
    if policy.sort_inner_classes {
        let name = |i: u16| pool.class_name(i).unwrap_or_default().into_bytes();
        for a in &mut m.attributes {
            if let AttrBody::InnerClasses(v) = &mut a.body {
                let before = v.clone();
                v.sort_by_cached_key(|e| {
                    (name(e.inner_class), name(e.outer_class), pool.utf8(e.inner_name).map(<[u8]>::to_vec), e.access_flags)
                });
                inner_classes_sorted |= *v != before;
            }
        }
    }

    let mut line_tables_stripped = 0;
    if policy.strip_line_numbers {
        for mi in &mut m.methods {
            for a in &mut mi.attributes {
                if let AttrBody::Code(code) = &mut a.body {
                    let n = code.attributes.len();
                    code.attributes.retain(|x| !matches!(x.body, AttrBody::LineNumberTable(_)));
                    line_tables_stripped += n - code.attributes.len();
                }
            }
        }
    }

    let pool_status = if !policy.renumber_pool {
        PoolRewrite::Unchanged
    } else if let Some(reason) = opaque_blocker(&m) {
        PoolRewrite::Aborted(reason)
    } else {
        let (new_pool, map) = renumbered_pool(&m)?;
        if new_pool == m.constant_pool && map.iter().enumerate().all(|(i, &n)| n == 0 || n as usize == i) {
            PoolRewrite::Unchanged
        } else {
            let mut candidate = m.clone();
            match apply_index_map(&mut candidate, new_pool, &map) {
                Ok(()) => {
                    m = candidate;
                    PoolRewrite::Renumbered
                }
                Err(e) => PoolRewrite::Aborted(e.to_string()),
            }
        }
    };

    Ok(RewriteOutcome { bytes: serialize_class(&m), pool: pool_status, methods_reordered, inner_classes_sorted, line_tables_stripped })
}

fn opaque_blocker(m: &ClassModel) -> Option<String> {
    fn scan(attrs: &[AttrInfo], pool: &ConstantPool) -> Option<String> {
        for a in attrs {
            match &a.body {
                AttrBody::Opaque(_) => {
                    let name = pool.utf8_lossy(a.name_index);
                    if !INDEX_FREE_OPAQUE.contains(&name.as_str()) {
                        return Some(format!("attribute {name} is not decoded and may hold constant-pool indices"));
                    }
                }
                AttrBody::Code(c) => {
                    if let Some(r) = scan(&c.attributes, pool) {
                        return Some(r);
                    }
                }
                _ => {}
            }
        }
        None
    }
    let pool = &m.constant_pool;
    std::iter::once(&m.attributes).chain(m.fields.iter().chain(&m.methods).map(|x| &x.attributes)).find_map(|a| scan(a, pool))
}

/// Value key of a pool entry with references flattened recursively.
struct Keys<'a> {
    pool: &'a ConstantPool,
    memo: HashMap<u16, Vec<u8>>,
}

impl Keys<'_> {
    fn key(&mut self, i: u16) -> Vec<u8> {
        if let Some(k) = self.memo.get(&i) {
            return k.clone();
        }
        let mut out = Vec::new();
        match self.pool.get(i) {
            None => out.extend_from_slice(&[0, (i >> 8) as u8, i as u8]),
            Some(e) => {
                out.push(e.tag() as u8);
                match e {
                    CpEntry::Utf8(b) => {
                        out.extend_from_slice(&(b.len() as u32).to_be_bytes());
                        out.extend_from_slice(b);
                    }
                    CpEntry::Integer(v) => out.extend_from_slice(&v.to_be_bytes()),
                    CpEntry::Float(v) => out.extend_from_slice(&v.to_be_bytes()),
                    CpEntry::Long(v) => out.extend_from_slice(&v.to_be_bytes()),
                    CpEntry::Double(v) => out.extend_from_slice(&v.to_be_bytes()),
                    CpEntry::MethodHandle { kind, .. } => out.push(*kind),
                    CpEntry::Dynamic { bootstrap, .. } | CpEntry::InvokeDynamic { bootstrap, .. } => {
                        out.extend_from_slice(&bootstrap.to_be_bytes())
                    }
                    _ => {}
                }
                for c in e.children() {
                    let k = self.key(c);
                    out.extend_from_slice(&(k.len() as u32).to_be_bytes());
                    out.extend_from_slice(&k);
                }
            }
        }
        self.memo.insert(i, out.clone());
        out
    }
}

struct Builder<'a> {
    keys: Keys<'a>,
    by_key: HashMap<Vec<u8>, u16>,
    map: Vec<u16>,
    pool: ConstantPool,
}

impl Builder<'_> {
    fn assign(&mut self, i: u16) {
        if i == 0 || self.map.get(i as usize).is_none_or(|&n| n != 0) {
            return;
        }
        let Some(e) = self.keys.pool.get(i).cloned() else { return };
        let k = self.keys.key(i);
        if let Some(&n) = self.by_key.get(&k) {
            self.map[i as usize] = n;
            return;
        }
        let n = self.pool.push(e.clone());
        self.by_key.insert(k, n);
        self.map[i as usize] = n;
        for c in e.children() {
            self.assign(c);
        }
    }
}

/// New pool ordered by first reference in a fixed traversal of `m`, equal
/// entries merged, unreferenced entries appended in key order. Returned
/// entries still carry old child indices; `map` translates them.
fn renumbered_pool(m: &ClassModel) -> Result<(ConstantPool, Vec<u16>), ClassError> {
    let mut b = Builder {
        keys: Keys { pool: &m.constant_pool, memo: HashMap::new() },
        by_key: HashMap::new(),
        map: vec![0; m.constant_pool.count() as usize],
        pool: ConstantPool::new(),
    };
    let mut probe = m.clone();
    visit_class_sites(&mut probe, &mut |i, _| {
        b.assign(i);
        Ok(i)
    })?;
    let mut rest: Vec<(Vec<u8>, u16)> = m.constant_pool.indices().filter(|&i| b.map[i as usize] == 0).map(|i| (b.keys.key(i), i)).collect();
    rest.sort();
    for (_, i) in rest {
        b.assign(i);
    }
    Ok((b.pool, b.map))
}
