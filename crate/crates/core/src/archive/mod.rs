//! ZIP/JAR deliverable packages.
//!
//! [`read_package`] parses an archive into a [`PackageModel`] while keeping
//! every header field, so [`write_preserved`] reproduces the input bytes.
//! [`write_canonical`] emits a deterministic layout instead: entries sorted,
//! timestamps pinned, extra fields and attributes cleared, fixed deflate level.

mod dostime;
mod read;
mod write;

pub use dostime::DosDateTime;
pub use read::{read_package, read_package_from_path};
pub use write::{write_canonical, write_entries, write_in_order, write_preserved, CanonicalPolicy, SortKey};

use serde::{Deserialize, Serialize};

use crate::digest::Digests;

pub(crate) const LOCAL_HEADER_SIG: u32 = 0x0403_4b50;
pub(crate) const CENTRAL_HEADER_SIG: u32 = 0x0201_4b50;
pub(crate) const EOCD_SIG: u32 = 0x0605_4b50;
pub(crate) const DATA_DESCRIPTOR_SIG: u32 = 0x0807_4b50;
pub(crate) const ZIP64_LOCATOR_SIG: u32 = 0x0706_4b50;

#[derive(Debug, thiserror::Error)]
pub enum ArchiveError {
    #[error("malformed archive: {0}")]
    MalformedArchive(String),
    #[error("duplicate entry name {0:?}")]
    DuplicateEntryName(String),
    #[error("entry {0:?} carries no preserved header record")]
    NotPreservable(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<crate::bytes::Truncated> for ArchiveError {
    fn from(t: crate::bytes::Truncated) -> Self {
        ArchiveError::MalformedArchive(t.to_string())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EntryKind {
    ClassFile,
    Manifest,
    Properties,
    Xml,
    Json,
    Text,
    Directory,
    Opaque,
}

impl EntryKind {
    pub fn is_textual(self) -> bool {
        matches!(self, EntryKind::Properties | EntryKind::Xml | EntryKind::Json | EntryKind::Text)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Compression {
    Stored,
    Deflated,
}

const TEXT_SUFFIXES: &[&str] = &[
    ".txt", ".java", ".kt", ".groovy", ".scala", ".html", ".htm", ".css", ".js", ".jsp", ".jspx", ".md", ".sf", ".yml", ".yaml", ".csv",
    ".tld", ".list", ".vm", ".ftl", ".sql", ".sh", ".idx",
];
const XML_SUFFIXES: &[&str] = &[".xml", ".pom", ".xsd", ".wsdl", ".xsl", ".xslt", ".tag"];

/// Derives an entry kind from its name and leading bytes. Pure: the same
/// name and payload always yield the same kind.
pub fn detect_kind(name: &str, payload: &[u8]) -> EntryKind {
    if name.ends_with('/') {
        return EntryKind::Directory;
    }
    if payload.starts_with(&[0xCA, 0xFE, 0xBA, 0xBE]) {
        return EntryKind::ClassFile;
    }
    let lower = name.to_ascii_lowercase();
    let file = lower.rsplit('/').next().unwrap_or(&lower);
    if lower.ends_with(".mf") {
        EntryKind::Manifest
    } else if lower.ends_with(".properties") {
        EntryKind::Properties
    } else if XML_SUFFIXES.iter().any(|s| lower.ends_with(s)) {
        EntryKind::Xml
    } else if lower.ends_with(".json") {
        EntryKind::Json
    } else if TEXT_SUFFIXES.iter().any(|s| lower.ends_with(s))
        || matches!(file, "package-list" | "element-list" | "license" | "notice")
        || (!payload.is_empty() && !payload.contains(&0) && std::str::from_utf8(payload).is_ok())
    {
        EntryKind::Text
    } else {
        EntryKind::Opaque
    }
}

/// Replaces `\` separators and strips a leading `./` or `/`.
pub fn normalize_entry_name(raw: &str) -> String {
    let name = raw.replace('\\', "/");
    let name = name.trim_start_matches("./");
    name.trim_start_matches('/').to_string()
}

/// Local file header fields as read from disk.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalHeader {
    pub version_needed: u16,
    pub flags: u16,
    pub method: u16,
    pub time: u16,
    pub date: u16,
    pub crc32: u32,
    pub compressed_size: u32,
    pub uncompressed_size: u32,
    pub name: Vec<u8>,
    pub extra: Vec<u8>,
}

/// Central directory header fields as read from disk.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CentralHeader {
    pub version_made_by: u16,
    pub version_needed: u16,
    pub flags: u16,
    pub method: u16,
    pub time: u16,
    pub date: u16,
    pub crc32: u32,
    pub compressed_size: u32,
    pub uncompressed_size: u32,
    pub name: Vec<u8>,
    pub extra: Vec<u8>,
    pub comment: Vec<u8>,
    pub disk_start: u16,
    pub internal_attrs: u16,
    pub external_attrs: u32,
    pub local_offset: u32,
}

/// Everything needed to re-emit one entry bit-exactly.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawRecord {
    pub local: LocalHeader,
    pub compressed: Vec<u8>,
    /// Data descriptor bytes (with or without signature), empty when absent.
    pub descriptor: Vec<u8>,
    /// Bytes between the end of this record and the next record or the central directory.
    pub trailing_gap: Vec<u8>,
    pub central: CentralHeader,
    pub cd_index: usize,
}

/// Archive-level bytes outside the entry records.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ArchiveLayout {
    pub leading: Vec<u8>,
    pub eocd_disk: u16,
    pub eocd_cd_disk: u16,
    pub eocd_entries_disk: u16,
    pub eocd_entries_total: u16,
    pub cd_size: u32,
    pub cd_offset: u32,
    pub between_cd_and_eocd: Vec<u8>,
    pub trailing: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArchiveEntry {
    pub name: String,
    pub payload: Vec<u8>,
    pub kind: EntryKind,
    pub mtime: DosDateTime,
    pub external_attrs: u32,
    pub compression: Compression,
    pub extra_field: Vec<u8>,
    pub comment: Vec<u8>,
    pub raw: Option<RawRecord>,
}

impl ArchiveEntry {
    /// A fresh entry with no preserved record, kind derived from name and payload.
    pub fn new(name: impl Into<String>, payload: Vec<u8>) -> Self {
        let name = normalize_entry_name(&name.into());
        let kind = detect_kind(&name, &payload);
        let compression = if kind == EntryKind::Directory { Compression::Stored } else { Compression::Deflated };
        ArchiveEntry {
            name,
            payload,
            kind,
            mtime: DosDateTime::MIN,
            external_attrs: 0,
            compression,
            extra_field: Vec::new(),
            comment: Vec::new(),
            raw: None,
        }
    }

    pub fn with_mtime(mut self, mtime: DosDateTime) -> Self {
        self.mtime = mtime;
        self
    }

    /// Replaces the payload, re-deriving the kind and dropping the preserved record.
    pub fn set_payload(&mut self, payload: Vec<u8>) {
        self.kind = detect_kind(&self.name, &payload);
        self.payload = payload;
        self.raw = None;
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ArchiveWarning {
    /// A later entry normalized to an already-seen name; the first one wins.
    DuplicateEntryName { name: String, cd_index: usize },
    /// Entry name was not valid UTF-8 and was decoded lossily.
    LossyName { name: String },
}

/// A parsed deliverable package. Immutable once built; transformations
/// produce new models or new bytes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PackageModel {
    pub entries: Vec<ArchiveEntry>,
    /// Entries hidden behind an earlier entry of the same normalized name.
    pub shadowed: Vec<ArchiveEntry>,
    pub comment: Vec<u8>,
    pub source_digest: Digests,
    pub origin_path: String,
    pub layout: Option<ArchiveLayout>,
    pub warnings: Vec<ArchiveWarning>,
}

impl PackageModel {
    /// Builds a package from fresh entries. Later duplicates are shadowed.
    pub fn from_entries(entries: Vec<ArchiveEntry>) -> Self {
        let mut seen = std::collections::HashSet::new();
        let mut kept = Vec::new();
        let mut shadowed = Vec::new();
        let mut warnings = Vec::new();
        for (i, e) in entries.into_iter().enumerate() {
            if seen.insert(e.name.clone()) {
                kept.push(e);
            } else {
                warnings.push(ArchiveWarning::DuplicateEntryName { name: e.name.clone(), cd_index: i });
                shadowed.push(e);
            }
        }
        PackageModel {
            entries: kept,
            shadowed,
            comment: Vec::new(),
            source_digest: Digests::default(),
            origin_path: String::new(),
            layout: None,
            warnings,
        }
    }

    /// Wraps a lone file (for example a bare `.class`) as a one-entry package.
    pub fn single_file(name: &str, bytes: &[u8]) -> Self {
        let mut pkg = Self::from_entries(vec![ArchiveEntry::new(name, bytes.to_vec())]);
        pkg.source_digest = Digests::of(bytes);
        pkg.origin_path = name.to_string();
        pkg
    }

    pub fn entry(&self, name: &str) -> Option<&ArchiveEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.name.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kind_detection() {
        assert_eq!(detect_kind("a/B.class", &[0xCA, 0xFE, 0xBA, 0xBE, 0, 0]), EntryKind::ClassFile);
        assert_eq!(detect_kind("META-INF/MANIFEST.MF", b"Manifest-Version: 1.0\r\n"), EntryKind::Manifest);
        assert_eq!(detect_kind("META-INF/maven/g/a/pom.properties", b"#x\n"), EntryKind::Properties);
        assert_eq!(detect_kind("META-INF/maven/g/a/pom.xml", b"<project/>"), EntryKind::Xml);
        assert_eq!(detect_kind("git.json", b"{}"), EntryKind::Json);
        assert_eq!(detect_kind("apidocs/package-list", b"a\nb\n"), EntryKind::Text);
        assert_eq!(detect_kind("liquibase/", b""), EntryKind::Directory);
        assert_eq!(detect_kind("lib/native.so", &[0x7f, b'E', b'L', b'F', 0]), EntryKind::Opaque);
        assert_eq!(detect_kind("README", b"plain words"), EntryKind::Text);
    }

    #[test]
    fn kind_is_a_function_of_name_and_bytes() {
        let bytes = b"key=value\n";
        assert_eq!(detect_kind("x.properties", bytes), detect_kind("x.properties", bytes));
    }

    #[test]
    fn separators_normalized() {
        assert_eq!(normalize_entry_name("com\\example\\A.class"), "com/example/A.class");
        assert_eq!(normalize_entry_name("./x/y"), "x/y");
    }

    #[test]
    fn duplicates_first_wins() {
        let pkg =
            PackageModel::from_entries(vec![ArchiveEntry::new("a.txt", b"one".to_vec()), ArchiveEntry::new("a.txt", b"two".to_vec())]);
        assert_eq!(pkg.entries.len(), 1);
        assert_eq!(pkg.entries[0].payload, b"one");
        assert_eq!(pkg.shadowed.len(), 1);
        assert!(matches!(pkg.warnings[0], ArchiveWarning::DuplicateEntryName { .. }));
    }
}
