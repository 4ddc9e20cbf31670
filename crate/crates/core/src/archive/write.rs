use std::io::Write;

use flate2::write::DeflateEncoder;
use serde::{Deserialize, Serialize};

use super::*;

/// Entry ordering used by the canonical writer.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum SortKey {
    /// Byte-wise ascending entry name.
    #[default]
    NameBytes,
    /// `META-INF/` then `META-INF/MANIFEST.MF` first, remaining entries byte-wise.
    ManifestFirst,
}

impl SortKey {
    fn rank(self, name: &str) -> (u8, &[u8]) {
        match self {
            SortKey::NameBytes => (0, name.as_bytes()),
            SortKey::ManifestFirst => match name {
                "META-INF/" => (0, name.as_bytes()),
                "META-INF/MANIFEST.MF" => (1, name.as_bytes()),
                _ => (2, name.as_bytes()),
            },
        }
    }

    pub fn sort(self, entries: &mut [&ArchiveEntry]) {
        entries.sort_by(|a, b| self.rank(&a.name).cmp(&self.rank(&b.name)));
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CanonicalPolicy {
    pub sort_key: SortKey,
    pub pinned_time: DosDateTime,
    /// Deflate level 0..=9 applied to every non-directory entry.
    pub compression_level: u32,
}

impl Default for CanonicalPolicy {
    fn default() -> Self {
        CanonicalPolicy { sort_key: SortKey::NameBytes, pinned_time: DosDateTime::MIN, compression_level: 9 }
    }
}

/// Re-emits a parsed archive from its preserved header records. Every entry,
/// shadowed duplicates included, must carry a [`RawRecord`].
pub fn write_preserved(pkg: &PackageModel) -> Result<Vec<u8>, ArchiveError> {
    let layout = pkg.layout.as_ref().ok_or_else(|| ArchiveError::NotPreservable("<archive>".into()))?;
    let mut records = Vec::with_capacity(pkg.entries.len() + pkg.shadowed.len());
    for e in pkg.entries.iter().chain(&pkg.shadowed) {
        records.push(e.raw.as_ref().ok_or_else(|| ArchiveError::NotPreservable(e.name.clone()))?);
    }
    let mut out = layout.leading.clone();
    records.sort_by_key(|r| r.central.local_offset);
    for r in &records {
        put_local(&mut out, &r.local);
        out.extend_from_slice(&r.compressed);
        out.extend_from_slice(&r.descriptor);
        out.extend_from_slice(&r.trailing_gap);
    }
    records.sort_by_key(|r| r.cd_index);
    for r in &records {
        put_central(&mut out, &r.central);
    }
    out.extend_from_slice(&layout.between_cd_and_eocd);
    put_u32(&mut out, EOCD_SIG);
    put_u16(&mut out, layout.eocd_disk);
    put_u16(&mut out, layout.eocd_cd_disk);
    put_u16(&mut out, layout.eocd_entries_disk);
    put_u16(&mut out, layout.eocd_entries_total);
    put_u32(&mut out, layout.cd_size);
    put_u32(&mut out, layout.cd_offset);
    put_u16(&mut out, pkg.comment.len() as u16);
    out.extend_from_slice(&pkg.comment);
    out.extend_from_slice(&layout.trailing);
    Ok(out)
}

/// Deterministic repack: sorted entries, pinned timestamps, no extra fields,
/// comments or external attributes, fixed deflate level. Payloads are untouched.
/// Shadowed duplicates are not written.
pub fn write_canonical(pkg: &PackageModel, policy: &CanonicalPolicy) -> Result<Vec<u8>, ArchiveError> {
    let mut entries: Vec<&ArchiveEntry> = pkg.entries.iter().collect();
    policy.sort_key.sort(&mut entries);
    write_entries(&entries, Some(policy.pinned_time), policy.compression_level)
}

/// Writes fresh archive bytes with entries in model order, each keeping its
/// own mtime. Extras, comments and external attributes are dropped.
pub fn write_in_order(pkg: &PackageModel, compression_level: u32) -> Result<Vec<u8>, ArchiveError> {
    let entries: Vec<&ArchiveEntry> = pkg.entries.iter().collect();
    write_entries(&entries, None, compression_level)
}

/// Writes `entries` in the given order. With `pinned` every entry gets that
/// time, otherwise each keeps its own. Extras, comments and external
/// attributes are dropped.
pub fn write_entries(entries: &[&ArchiveEntry], pinned: Option<DosDateTime>, level: u32) -> Result<Vec<u8>, ArchiveError> {
    if entries.len() >= 0xFFFF {
        return Err(ArchiveError::MalformedArchive("too many entries without zip64".into()));
    }
    let level = flate2::Compression::new(level.min(9));
    let mut out = Vec::new();
    let mut centrals = Vec::with_capacity(entries.len());
    for &e in entries {
        let is_dir = e.name.ends_with('/');
        let (method, data) = if is_dir {
            (0u16, e.payload.clone())
        } else {
            let mut enc = DeflateEncoder::new(Vec::new(), level);
            enc.write_all(&e.payload)?;
            (8u16, enc.finish()?)
        };
        if data.len() > u32::MAX as usize - 1 || e.payload.len() > u32::MAX as usize - 1 || out.len() > u32::MAX as usize - 1 {
            return Err(ArchiveError::MalformedArchive(format!("{}: too large without zip64", e.name)));
        }
        let flags = if e.name.is_ascii() { 0 } else { 0x0800 };
        let local = LocalHeader {
            version_needed: 20,
            flags,
            method,
            time: pinned.unwrap_or(e.mtime).time,
            date: pinned.unwrap_or(e.mtime).date,
            crc32: crc32fast::hash(&e.payload),
            compressed_size: data.len() as u32,
            uncompressed_size: e.payload.len() as u32,
            name: e.name.as_bytes().to_vec(),
            extra: Vec::new(),
        };
        centrals.push(CentralHeader {
            version_made_by: 20,
            version_needed: 20,
            flags,
            method,
            time: local.time,
            date: local.date,
            crc32: local.crc32,
            compressed_size: local.compressed_size,
            uncompressed_size: local.uncompressed_size,
            name: local.name.clone(),
            extra: Vec::new(),
            comment: Vec::new(),
            disk_start: 0,
            internal_attrs: 0,
            external_attrs: 0,
            local_offset: out.len() as u32,
        });
        put_local(&mut out, &local);
        out.extend_from_slice(&data);
    }
    let cd_offset = out.len() as u32;
    for c in &centrals {
        put_central(&mut out, c);
    }
    let cd_size = out.len() as u32 - cd_offset;
    put_u32(&mut out, EOCD_SIG);
    put_u16(&mut out, 0);
    put_u16(&mut out, 0);
    put_u16(&mut out, centrals.len() as u16);
    put_u16(&mut out, centrals.len() as u16);
    put_u32(&mut out, cd_size);
    put_u32(&mut out, cd_offset);
    put_u16(&mut out, 0);
    Ok(out)
}

fn put_u16(out: &mut Vec<u8>, v: u16) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_local(out: &mut Vec<u8>, h: &LocalHeader) {
    put_u32(out, LOCAL_HEADER_SIG);
    put_u16(out, h.version_needed);
    put_u16(out, h.flags);
    put_u16(out, h.method);
    put_u16(out, h.time);
    put_u16(out, h.date);
    put_u32(out, h.crc32);
    put_u32(out, h.compressed_size);
    put_u32(out, h.uncompressed_size);
    put_u16(out, h.name.len() as u16);
    put_u16(out, h.extra.len() as u16);
    out.extend_from_slice(&h.name);
    out.extend_from_slice(&h.extra);
}

fn put_central(out: &mut Vec<u8>, h: &CentralHeader) {
    put_u32(out, CENTRAL_HEADER_SIG);
    put_u16(out, h.version_made_by);
    put_u16(out, h.version_needed);
    put_u16(out, h.flags);
    put_u16(out, h.method);
    put_u16(out, h.time);
    put_u16(out, h.date);
    put_u32(out, h.crc32);
    put_u32(out, h.compressed_size);
    put_u32(out, h.uncompressed_size);
    put_u16(out, h.name.len() as u16);
    put_u16(out, h.extra.len() as u16);
    put_u16(out, h.comment.len() as u16);
    put_u16(out, h.disk_start);
    put_u16(out, h.internal_attrs);
    put_u32(out, h.external_attrs);
    put_u32(out, h.local_offset);
    out.extend_from_slice(&h.name);
    out.extend_from_slice(&h.extra);
    out.extend_from_slice(&h.comment);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pkg(entries: &[(&str, &[u8], DosDateTime)]) -> PackageModel {
        PackageModel::from_entries(entries.iter().map(|(n, p, t)| ArchiveEntry::new(*n, p.to_vec()).with_mtime(*t)).collect())
    }

    #[test]
    fn empty_archive_is_eocd_only() {
        let bytes = write_canonical(&PackageModel::from_entries(vec![]), &CanonicalPolicy::default()).unwrap();
        assert_eq!(bytes.len(), 22);
        let back = read_package(&bytes).unwrap();
        assert!(back.entries.is_empty());
        assert_eq!(write_preserved(&back).unwrap(), bytes);
    }

    #[test]
    fn sorted_and_pinned() {
        let t1 = DosDateTime::from_parts(2021, 9, 18, 22, 43, 22);
        let t2 = DosDateTime::from_parts(2021, 9, 18, 22, 45, 34);
        let p = pkg(&[("b.class", b"\xCA\xFE\xBA\xBEb", t1), ("a.class", b"\xCA\xFE\xBA\xBEa", t2)]);
        let policy = CanonicalPolicy::default();
        let out = read_package(&write_canonical(&p, &policy).unwrap()).unwrap();
        let names: Vec<_> = out.names().collect();
        assert_eq!(names, ["a.class", "b.class"]);
        assert!(out.entries.iter().all(|e| e.mtime == policy.pinned_time));
    }

    #[test]
    fn manifest_first_ordering() {
        let p = pkg(&[
            ("Bar.class", b"x", DosDateTime::MIN),
            ("META-INF/MANIFEST.MF", b"Manifest-Version: 1.0\r\n\r\n", DosDateTime::MIN),
            ("META-INF/", b"", DosDateTime::MIN),
            ("A.class", b"y", DosDateTime::MIN),
        ]);
        let policy = CanonicalPolicy { sort_key: SortKey::ManifestFirst, ..Default::default() };
        let out = read_package(&write_canonical(&p, &policy).unwrap()).unwrap();
        let names: Vec<_> = out.names().collect();
        assert_eq!(names, ["META-INF/", "META-INF/MANIFEST.MF", "A.class", "Bar.class"]);
        assert_eq!(out.entries[0].compression, Compression::Stored);
    }

    #[test]
    fn canonical_is_idempotent_and_keeps_payloads() {
        let p = pkg(&[
            ("z/", b"", DosDateTime::from_parts(2000, 1, 1, 0, 0, 0)),
            ("z/y.txt", b"hello hello hello", DosDateTime::from_parts(2001, 1, 1, 0, 0, 0)),
            ("m.bin", &[0u8, 1, 2, 3, 255], DosDateTime::MIN),
        ]);
        let policy = CanonicalPolicy::default();
        let once = write_canonical(&p, &policy).unwrap();
        let twice = write_canonical(&read_package(&once).unwrap(), &policy).unwrap();
        assert_eq!(once, twice);
        let back = read_package(&once).unwrap();
        for e in &p.entries {
            assert_eq!(back.entry(&e.name).unwrap().payload, e.payload);
        }
    }

    #[test]
    fn order_and_mtime_only_differences_vanish() {
        let a = pkg(&[("x", b"1", DosDateTime::from_parts(2020, 5, 5, 1, 1, 2)), ("y", b"2", DosDateTime::MIN)]);
        let b = pkg(&[("y", b"2", DosDateTime::from_parts(2022, 2, 2, 2, 2, 2)), ("x", b"1", DosDateTime::MIN)]);
        let policy = CanonicalPolicy::default();
        assert_eq!(write_canonical(&a, &policy).unwrap(), write_canonical(&b, &policy).unwrap());
    }

    #[test]
    fn rejects_bad_signature_and_truncation() {
        assert!(matches!(read_package(b"not a zip"), Err(ArchiveError::MalformedArchive(_))));
        let p = pkg(&[("x", b"1", DosDateTime::MIN)]);
        let bytes = write_canonical(&p, &CanonicalPolicy::default()).unwrap();
        assert!(matches!(read_package(&bytes[..bytes.len() - 30]), Err(ArchiveError::MalformedArchive(_))));
    }

    #[test]
    fn rejects_encrypted_entries() {
        let p = pkg(&[("x", b"1", DosDateTime::MIN)]);
        let mut bytes = write_canonical(&p, &CanonicalPolicy::default()).unwrap();
        bytes[6] |= 1;
        let cd = bytes.len() - 22 - 47;
        bytes[cd + 8] |= 1;
        let err = read_package(&bytes).unwrap_err().to_string();
        assert!(err.contains("encrypted"), "{err}");
    }

    #[test]
    fn rejects_zip64_marker() {
        let mut bytes = write_canonical(&PackageModel::from_entries(vec![]), &CanonicalPolicy::default()).unwrap();
        bytes[8..10].copy_from_slice(&0xFFFFu16.to_le_bytes());
        bytes[10..12].copy_from_slice(&0xFFFFu16.to_le_bytes());
        assert!(read_package(&bytes).unwrap_err().to_string().contains("zip64"));
    }

    #[test]
    fn duplicate_names_keep_first_and_still_preserve() {
        let mut raw = PackageModel::from_entries(vec![ArchiveEntry::new("a", b"1".to_vec())]);
        raw.entries.push(ArchiveEntry::new("b", b"2".to_vec()));
        let bytes = write_canonical(&raw, &CanonicalPolicy::default()).unwrap();
        // Rename the second entry to collide with the first, in both headers.
        let mut dup = bytes.clone();
        let positions: Vec<usize> = dup.windows(1).enumerate().filter(|(_, w)| w[0] == b'b').map(|(i, _)| i).collect();
        for i in positions {
            dup[i] = b'a';
        }
        let pkg = read_package(&dup).unwrap();
        assert_eq!(pkg.entries.len(), 1);
        assert_eq!(pkg.entries[0].payload, b"1");
        assert_eq!(pkg.shadowed.len(), 1);
        assert_eq!(write_preserved(&pkg).unwrap(), dup);
    }
}
