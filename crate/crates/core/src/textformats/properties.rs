use super::physical_lines;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PropRecord {
    Comment {
        raw: Vec<u8>,
    },
    Blank {
        raw: Vec<u8>,
    },
    /// `key` and `value` are unescaped; `raw` is every physical line of the
    /// record with terminators.
    Pair {
        key: String,
        value: String,
        raw: Vec<u8>,
    },
}

impl PropRecord {
    pub fn raw(&self) -> &[u8] {
        match self {
            PropRecord::Comment { raw } | PropRecord::Blank { raw } | PropRecord::Pair { raw, .. } => raw,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct PropertiesModel {
    pub records: Vec<PropRecord>,
}

impl PropertiesModel {
    pub fn to_bytes(&self) -> Vec<u8> {
        self.records.iter().flat_map(|r| r.raw().iter().copied()).collect()
    }

    /// Last value for `key`, as `java.util.Properties` would resolve it.
    pub fn get(&self, key: &str) -> Option<&str> {
        self.records.iter().rev().find_map(|r| match r {
            PropRecord::Pair { key: k, value, .. } if k == key => Some(value.as_str()),
            _ => None,
        })
    }
}

fn continues(content: &[u8]) -> bool {
    content.iter().rev().take_while(|&&b| b == b'\\').count() % 2 == 1
}

fn is_ws(b: u8) -> bool {
    matches!(b, b' ' | b'\t' | b'\x0c')
}

/// Total: every byte sequence parses, and `to_bytes` returns it unchanged.
/// Bytes are read as ISO-8859-1, the format's native encoding.
pub fn parse_properties(bytes: &[u8]) -> PropertiesModel {
    let lines = physical_lines(bytes);
    let mut records = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        let (content, term) = lines[i];
        let mut raw = content.to_vec();
        raw.extend_from_slice(term);
        let body: Vec<u8> = content.iter().copied().skip_while(|&b| is_ws(b)).collect();
        i += 1;
        if body.is_empty() {
            records.push(PropRecord::Blank { raw });
            continue;
        }
        if body[0] == b'#' || body[0] == b'!' {
            records.push(PropRecord::Comment { raw });
            continue;
        }
        let mut logical = body;
        while continues(&logical) && i < lines.len() {
            logical.pop();
            let (next, t) = lines[i];
            raw.extend_from_slice(next);
            raw.extend_from_slice(t);
            logical.extend(next.iter().copied().skip_while(|&b| is_ws(b)));
            i += 1;
        }
        let (key, value) = split_pair(&logical);
        records.push(PropRecord::Pair { key, value, raw });
    }
    PropertiesModel { records }
}

fn split_pair(line: &[u8]) -> (String, String) {
    let mut k = 0;
    while k < line.len() {
        match line[k] {
            b'\\' => k += 2,
            b'=' | b':' => break,
            b if is_ws(b) => break,
            _ => k += 1,
        }
    }
    let k = k.min(line.len());
    let mut v = k;
    while v < line.len() && is_ws(line[v]) {
        v += 1;
    }
    if v < line.len() && (line[v] == b'=' || line[v] == b':') {
        v += 1;
        while v < line.len() && is_ws(line[v]) {
            v += 1;
        }
    }
    (unescape(&line[..k]), unescape(&line[v..]))
}

fn unescape(s: &[u8]) -> String {
    let mut out = String::with_capacity(s.len());
    let mut i = 0;
    while i < s.len() {
        let b = s[i];
        i += 1;
        if b != b'\\' {
            out.push(b as char);
            continue;
        }
        if i >= s.len() {
            break;
        }
        let e = s[i];
        i += 1;
        match e {
            b't' => out.push('\t'),
            b'n' => out.push('\n'),
            b'r' => out.push('\r'),
            b'f' => out.push('\x0c'),
            b'u' if i + 4 <= s.len() => {
                let code = std::str::from_utf8(&s[i..i + 4]).ok().and_then(|h| u32::from_str_radix(h, 16).ok());
                match code.and_then(char::from_u32) {
                    Some(c) => {
                        out.push(c);
                        i += 4;
                    }
                    None => out.push('u'),
                }
            }
            other => out.push(other as char),
        }
    }
    out
}

/// Sorts each maximal run of consecutive key-value records by key, leaving
/// comments and blank lines in place. Stable, so duplicate keys keep their
/// relative order and lookups resolve the same. Returns `None` when the
/// move would detach an unterminated final record.
pub fn sort_property_runs(m: &PropertiesModel) -> Option<PropertiesModel> {
    let mut records = m.records.clone();
    let mut start = 0;
    while start < records.len() {
        if !matches!(records[start], PropRecord::Pair { .. }) {
            start += 1;
            continue;
        }
        let end = (start..records.len()).find(|&j| !matches!(records[j], PropRecord::Pair { .. })).unwrap_or(records.len());
        records[start..end].sort_by(|a, b| match (a, b) {
            (PropRecord::Pair { key: ka, .. }, PropRecord::Pair { key: kb, .. }) => ka.as_bytes().cmp(kb.as_bytes()),
            _ => std::cmp::Ordering::Equal,
        });
        start = end;
    }
    let Some(last) = m.records.last() else {
        return Some(m.clone());
    };
    let terminated = |r: &PropRecord| matches!(r.raw().last(), Some(b'\n' | b'\r'));
    if !terminated(last) && records.last() != Some(last) {
        return None;
    }
    Some(PropertiesModel { records })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pom_properties_round_trip() {
        let text = b"#Generated by Maven\n#Sun Sep 18 22:43:23 EDT 2021\ngroupId=org.example\nartifactId=foo\nversion=1.0\n";
        let m = parse_properties(text);
        assert_eq!(m.records.len(), 5);
        assert_eq!(m.get("artifactId"), Some("foo"));
        assert_eq!(m.to_bytes(), text.to_vec());
    }

    #[test]
    fn separators_escapes_and_continuations() {
        let text = b"  a\\ b : c\\\n    d\r\ne=\\u00e9\\t\nf\n! bang\n\n   \ng:\\\n";
        let m = parse_properties(text);
        assert_eq!(m.to_bytes(), text.to_vec());
        assert_eq!(m.get("a b"), Some("cd"));
        assert_eq!(m.get("e"), Some("\u{e9}\t"));
        assert_eq!(m.get("f"), Some(""));
        assert_eq!(m.get("g"), Some(""));
        assert!(matches!(m.records[3], PropRecord::Comment { .. }));
        assert!(matches!(m.records[5], PropRecord::Blank { .. }));
    }

    #[test]
    fn run_sorting() {
        let m = parse_properties(b"#c\nb=1\na=2\n\nz=1\ny=2\n");
        let s = sort_property_runs(&m).unwrap();
        assert_eq!(s.to_bytes(), b"#c\na=2\nb=1\n\ny=2\nz=1\n".to_vec());
        assert_eq!(sort_property_runs(&s).unwrap(), s);
        assert!(sort_property_runs(&parse_properties(b"b=1\na=2")).is_none());
        assert!(sort_property_runs(&parse_properties(b"a=1\nb=2")).is_some());
    }
}
