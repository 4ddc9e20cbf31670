//! Text payloads: JAR manifests, java-properties files and rule-driven
//! placeholder substitution over arbitrary text entries.

mod manifest;
mod properties;
mod rules;

pub use manifest::{apply_manifest_rules, canonicalize_manifest, parse_manifest, Attribute, ManifestModel, Section};
pub(crate) use manifest::{attribute_rule, rewrite_value};
pub use properties::{parse_properties, sort_property_runs, PropRecord, PropertiesModel};
pub(crate) use rules::best as best_rule;
pub use rules::{apply_text_rules, apply_to_bytes, split_list_value, RuleAction, RuleHit, RuleSet, TextRule};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TextError {
    #[error("malformed manifest at line {line}: {reason}")]
    MalformedManifest { line: usize, reason: String },
    #[error("invalid rule at line {line}: {reason}")]
    InvalidRule { line: usize, reason: String },
}

/// Splits `data` into physical lines, each keeping its terminator
/// (`\r\n`, `\n` or a lone `\r`). A final unterminated line is included.
pub(crate) fn physical_lines(data: &[u8]) -> Vec<(&[u8], &[u8])> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i < data.len() {
        match data[i] {
            b'\n' => {
                out.push((&data[start..i], &data[i..i + 1]));
                i += 1;
                start = i;
            }
            b'\r' => {
                let end = if data.get(i + 1) == Some(&b'\n') { i + 2 } else { i + 1 };
                out.push((&data[start..i], &data[i..end]));
                i = end;
                start = i;
            }
            _ => i += 1,
        }
    }
    if start < data.len() {
        out.push((&data[start..], &data[data.len()..]));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::physical_lines;

    #[test]
    fn splits_mixed_terminators() {
        let lines = physical_lines(b"a\r\nb\nc\rd");
        let got: Vec<_> = lines.iter().map(|(c, t)| (c.to_vec(), t.to_vec())).collect();
        assert_eq!(
            got,
            vec![
                (b"a".to_vec(), b"\r\n".to_vec()),
                (b"b".to_vec(), b"\n".to_vec()),
                (b"c".to_vec(), b"\r".to_vec()),
                (b"d".to_vec(), vec![]),
            ]
        );
        assert!(physical_lines(b"").is_empty());
    }
}
