use std::collections::HashSet;
use std::io::Read;
use std::path::Path;

use flate2::read::DeflateDecoder;

use super::*;
use crate::bytes::Reader;

const EOCD_LEN: usize = 22;

fn malformed(msg: impl Into<String>) -> ArchiveError {
    ArchiveError::MalformedArchive(msg.into())
}

pub fn read_package_from_path(path: &Path) -> Result<PackageModel, ArchiveError> {
    let bytes = std::fs::read(path)?;
    let mut pkg = read_package(&bytes)?;
    pkg.origin_path = path.display().to_string();
    Ok(pkg)
}

/// Parses ZIP bytes. Entries come back in central-directory order with
/// decompressed payloads; every header field is kept for preservation.
pub fn read_package(bytes: &[u8]) -> Result<PackageModel, ArchiveError> {
    match bytes.get(..4).map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]])) {
        Some(LOCAL_HEADER_SIG) | Some(EOCD_SIG) => {}
        _ => return Err(malformed("missing ZIP signature at offset 0")),
    }
    let eocd_at = find_eocd(bytes)?;
    let mut r = Reader::at(bytes, eocd_at + 4);
    let mut layout = ArchiveLayout {
        eocd_disk: r.u16_le()?,
        eocd_cd_disk: r.u16_le()?,
        eocd_entries_disk: r.u16_le()?,
        eocd_entries_total: r.u16_le()?,
        cd_size: r.u32_le()?,
        cd_offset: r.u32_le()?,
        ..Default::default()
    };
    let comment_len = r.u16_le()? as usize;
    let comment = r.take(comment_len)?.to_vec();
    layout.trailing = bytes[r.pos()..].to_vec();

    if layout.eocd_disk != 0 || layout.eocd_cd_disk != 0 || layout.eocd_entries_disk != layout.eocd_entries_total {
        return Err(malformed("multi-disk archives are not supported"));
    }
    if layout.eocd_entries_total == 0xFFFF || layout.cd_size == 0xFFFF_FFFF || layout.cd_offset == 0xFFFF_FFFF {
        return Err(malformed("zip64 archives are not supported"));
    }
    if eocd_at >= 20 && bytes[eocd_at - 20..eocd_at - 16] == ZIP64_LOCATOR_SIG.to_le_bytes() {
        return Err(malformed("zip64 archives are not supported"));
    }
    let cd_start = layout.cd_offset as usize;
    let cd_end = cd_start
        .checked_add(layout.cd_size as usize)
        .filter(|&end| end <= eocd_at)
        .ok_or_else(|| malformed("central directory extends past end-of-central-directory record"))?;

    let mut centrals = Vec::with_capacity(layout.eocd_entries_total as usize);
    let mut cr = Reader::at(&bytes[..cd_end], cd_start);
    for i in 0..layout.eocd_entries_total {
        let sig = cr.u32_le().map_err(|_| malformed(format!("truncated central directory at entry {i}")))?;
        if sig != CENTRAL_HEADER_SIG {
            return Err(malformed(format!("bad central directory signature at entry {i}")));
        }
        centrals.push(read_central(&mut cr).map_err(|_| malformed(format!("truncated central directory at entry {i}")))?);
    }
    layout.between_cd_and_eocd = bytes[cr.pos()..eocd_at].to_vec();

    // Local records, visited in file order to recover the gaps between them.
    let mut by_offset: Vec<usize> = (0..centrals.len()).collect();
    by_offset.sort_by_key(|&i| centrals[i].local_offset);
    let first_offset = by_offset.first().map(|&i| centrals[i].local_offset as usize).unwrap_or(cd_start);
    if first_offset > cd_start {
        return Err(malformed("local header offset beyond central directory"));
    }
    layout.leading = bytes[..first_offset].to_vec();

    let mut records: Vec<Option<RawRecord>> = vec![None; centrals.len()];
    for (pos, &i) in by_offset.iter().enumerate() {
        let central = &centrals[i];
        let start = central.local_offset as usize;
        let limit = by_offset.get(pos + 1).map(|&j| centrals[j].local_offset as usize).unwrap_or(cd_start);
        let region = &bytes[..limit.max(start)];
        let mut lr = Reader::at(region, start);
        let sig = lr.u32_le().map_err(|_| malformed(format!("truncated local header for entry {i}")))?;
        if sig != LOCAL_HEADER_SIG {
            return Err(malformed(format!("bad local header signature for entry {i}")));
        }
        let local = read_local(&mut lr).map_err(|_| malformed(format!("truncated local header for entry {i}")))?;
        if central.flags & 1 != 0 || local.flags & 1 != 0 {
            return Err(malformed("encrypted entries are not supported"));
        }
        let compressed =
            lr.take(central.compressed_size as usize).map_err(|_| malformed(format!("entry {i} data overlaps the next record")))?.to_vec();
        let mut descriptor = Vec::new();
        if local.flags & 0x0008 != 0 {
            let len = if lr.peek(4) == Some(&DATA_DESCRIPTOR_SIG.to_le_bytes()[..]) { 16 } else { 12 };
            descriptor = lr.take(len).map_err(|_| malformed(format!("truncated data descriptor for entry {i}")))?.to_vec();
        }
        let trailing_gap = region[lr.pos()..].to_vec();
        records[i] = Some(RawRecord { local, compressed, descriptor, trailing_gap, central: central.clone(), cd_index: i });
    }

    let mut entries = Vec::new();
    let mut shadowed = Vec::new();
    let mut warnings = Vec::new();
    let mut seen = HashSet::new();
    for (i, rec) in records.into_iter().enumerate() {
        let rec = rec.expect("every central entry visited");
        let lossy = std::str::from_utf8(&rec.central.name).is_err();
        let entry = decode_entry(rec)?;
        if lossy {
            warnings.push(ArchiveWarning::LossyName { name: entry.name.clone() });
        }
        if seen.insert(entry.name.clone()) {
            entries.push(entry);
        } else {
            warnings.push(ArchiveWarning::DuplicateEntryName { name: entry.name.clone(), cd_index: i });
            shadowed.push(entry);
        }
    }

    Ok(PackageModel {
        entries,
        shadowed,
        comment,
        source_digest: Digests::of(bytes),
        origin_path: String::new(),
        layout: Some(layout),
        warnings,
    })
}

fn find_eocd(bytes: &[u8]) -> Result<usize, ArchiveError> {
    if bytes.len() < EOCD_LEN {
        return Err(malformed("too short for an end-of-central-directory record"));
    }
    let lowest = bytes.len().saturating_sub(EOCD_LEN + 0xFFFF);
    let mut fallback = None;
    for at in (lowest..=bytes.len() - EOCD_LEN).rev() {
        if bytes[at..at + 4] == EOCD_SIG.to_le_bytes() {
            let comment_len = u16::from_le_bytes([bytes[at + 20], bytes[at + 21]]) as usize;
            if at + EOCD_LEN + comment_len == bytes.len() {
                return Ok(at);
            }
            if at + EOCD_LEN + comment_len < bytes.len() && fallback.is_none() {
                fallback = Some(at);
            }
        }
    }
    fallback.ok_or_else(|| malformed("end-of-central-directory record not found"))
}

fn read_central(r: &mut Reader<'_>) -> Result<CentralHeader, crate::bytes::Truncated> {
    let version_made_by = r.u16_le()?;
    let version_needed = r.u16_le()?;
    let flags = r.u16_le()?;
    let method = r.u16_le()?;
    let time = r.u16_le()?;
    let date = r.u16_le()?;
    let crc32 = r.u32_le()?;
    let compressed_size = r.u32_le()?;
    let uncompressed_size = r.u32_le()?;
    let name_len = r.u16_le()? as usize;
    let extra_len = r.u16_le()? as usize;
    let comment_len = r.u16_le()? as usize;
    let disk_start = r.u16_le()?;
    let internal_attrs = r.u16_le()?;
    let external_attrs = r.u32_le()?;
    let local_offset = r.u32_le()?;
    Ok(CentralHeader {
        version_made_by,
        version_needed,
        flags,
        method,
        time,
        date,
        crc32,
        compressed_size,
        uncompressed_size,
        name: r.take(name_len)?.to_vec(),
        extra: r.take(extra_len)?.to_vec(),
        comment: r.take(comment_len)?.to_vec(),
        disk_start,
        internal_attrs,
        external_attrs,
        local_offset,
    })
}

fn read_local(r: &mut Reader<'_>) -> Result<LocalHeader, crate::bytes::Truncated> {
    let version_needed = r.u16_le()?;
    let flags = r.u16_le()?;
    let method = r.u16_le()?;
    let time = r.u16_le()?;
    let date = r.u16_le()?;
    let crc32 = r.u32_le()?;
    let compressed_size = r.u32_le()?;
    let uncompressed_size = r.u32_le()?;
    let name_len = r.u16_le()? as usize;
    let extra_len = r.u16_le()? as usize;
    Ok(LocalHeader {
        version_needed,
        flags,
        method,
        time,
        date,
        crc32,
        compressed_size,
        uncompressed_size,
        name: r.take(name_len)?.to_vec(),
        extra: r.take(extra_len)?.to_vec(),
    })
}

fn decode_entry(rec: RawRecord) -> Result<ArchiveEntry, ArchiveError> {
    let c = &rec.central;
    let raw_name = String::from_utf8_lossy(&c.name).into_owned();
    if c.compressed_size == 0xFFFF_FFFF || c.uncompressed_size == 0xFFFF_FFFF || c.local_offset == 0xFFFF_FFFF {
        return Err(malformed(format!("{raw_name}: zip64 entries are not supported")));
    }
    if c.disk_start != 0 {
        return Err(malformed(format!("{raw_name}: multi-disk archives are not supported")));
    }
    let (payload, compression) = match c.method {
        0 => (rec.compressed.clone(), Compression::Stored),
        8 => {
            let mut out = Vec::with_capacity(c.uncompressed_size as usize);
            DeflateDecoder::new(&rec.compressed[..])
                .read_to_end(&mut out)
                .map_err(|e| malformed(format!("{raw_name}: inflate failed: {e}")))?;
            (out, Compression::Deflated)
        }
        m => return Err(malformed(format!("{raw_name}: unsupported compression method {m}"))),
    };
    if payload.len() != c.uncompressed_size as usize {
        return Err(malformed(format!("{raw_name}: size mismatch ({} declared, {} actual)", c.uncompressed_size, payload.len())));
    }
    if crc32fast::hash(&payload) != c.crc32 {
        return Err(malformed(format!("{raw_name}: CRC-32 mismatch")));
    }
    let name = normalize_entry_name(&raw_name);
    let kind = detect_kind(&name, &payload);
    Ok(ArchiveEntry {
        name,
        kind,
        mtime: DosDateTime { date: c.date, time: c.time },
        external_attrs: c.external_attrs,
        compression,
        extra_field: c.extra.clone(),
        comment: c.comment.clone(),
        payload,
        raw: Some(rec),
    })
}
