//! Small shared helpers: digests, whitespace-insensitive matching, tokenizing.

use sha2::{Digest, Sha256};

/// Timestamp source. Mock-backed runs use a fixed epoch so artifacts stay
/// byte-identical across executions; live runs use wall time.
/// `SOURCE_DATE_EPOCH` overrides both when set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Clock {
    Wall,
    Fixed(i64),
}

impl Clock {
    pub fn timestamp_rfc3339(&self) -> String {
        let epoch = std::env::var("SOURCE_DATE_EPOCH")
            .ok()
            .and_then(|v| v.parse::<i64>().ok());
        let secs = match (epoch, self) {
            (Some(e), _) => e,
            (None, Clock::Fixed(e)) => *e,
            (None, Clock::Wall) => chrono::Utc::now().timestamp(),
        };
        chrono::DateTime::from_timestamp(secs, 0)
            .unwrap_or_default()
            .to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
    }
}

/// Hex-encoded SHA-256 over the given parts, joined with `\x1f` separators so
/// that part boundaries cannot collide.
pub fn digest_parts(parts: &[&str]) -> String {
    let mut hasher = Sha256::new();
    for (i, part) in parts.iter().enumerate() {
        if i > 0 {
            hasher.update([0x1f]);
        }
        hasher.update(part.as_bytes());
    }
    hex::encode(hasher.finalize())
}

/// Hex-encoded SHA-256 of raw bytes.
pub fn digest_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Collapse all runs of whitespace to single spaces and trim the ends.
pub fn collapse_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Substring test after whitespace collapsing on both sides.
///
/// Model outputs occasionally normalize whitespace inside quotes; this keeps
/// quote-provenance checks from tripping over that.
pub fn is_loose_substring(needle: &str, haystack: &str) -> bool {
    let needle = collapse_whitespace(needle);
    if needle.is_empty() {
        return true;
    }
    collapse_whitespace(haystack).contains(&needle)
}

/// FNV-1a 64-bit hash. Stable across platforms and releases, unlike the
/// standard library's default hasher.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Lowercased alphanumeric tokens of a text.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collapse_handles_tabs_and_newlines() {
        assert_eq!(collapse_whitespace("a\t b\n\nc "), "a b c");
    }

    #[test]
    fn loose_substring_ignores_whitespace_runs() {
        assert!(is_loose_substring("solar  panels", "add solar panels now"));
        assert!(!is_loose_substring("wind turbines", "add solar panels now"));
    }

    #[test]
    fn fnv_matches_known_vector() {
        // Reference value for "a" from the FNV spec.
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
    }

    #[test]
    fn digest_parts_separates_boundaries() {
        assert_ne!(digest_parts(&["ab", "c"]), digest_parts(&["a", "bc"]));
    }

    #[test]
    fn tokenize_strips_punctuation() {
        assert_eq!(tokenize("Divest, now!"), vec!["divest", "now"]);
    }
}
