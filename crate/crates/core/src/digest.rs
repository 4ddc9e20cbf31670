use serde::{Deserialize, Serialize};
use sha1::Sha1;
use sha2::{Digest, Sha256};

/// SHA-1 and SHA-256 of a byte sequence, lowercase hex.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Digests {
    pub sha1: String,
    pub sha256: String,
}

impl Digests {
    pub fn of(bytes: &[u8]) -> Self {
        Digests { sha1: hex::encode(Sha1::digest(bytes)), sha256: sha256_hex(bytes) }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// First 16 hex digits of the SHA-256, for log lines.
pub fn short_sha256(bytes: &[u8]) -> String {
    let mut s = sha256_hex(bytes);
    s.truncate(16);
    s
}
