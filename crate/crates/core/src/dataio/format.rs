//! Text encodings shared by bundle and report writers.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

/// Minimum significant digits written for any float.
pub const MIN_SIGNIFICANT_DIGITS: usize = 9;

/// Shortest decimal that parses back to exactly `x`, zero-padded to at
/// least [`MIN_SIGNIFICANT_DIGITS`] significant digits.
///
/// `format_float(0.5) == "0.500000000"`.
pub fn format_float(x: f64) -> String {
    let mut s = format!("{x}");
    if !x.is_finite() {
        return s;
    }
    let digits = s.trim_start_matches('-').trim_start_matches(['0', '.']).chars().filter(char::is_ascii_digit).count();
    let significant = if x == 0.0 { 1 } else { digits };
    if significant < MIN_SIGNIFICANT_DIGITS {
        if !s.contains('.') {
            s.push('.');
        }
        s.extend(std::iter::repeat_n('0', MIN_SIGNIFICANT_DIGITS - significant));
    }
    s
}

/// Serializes with sorted keys and shortest round-trip floats, pretty
/// printed with a trailing newline. Parsing the output and serializing it
/// again yields the same bytes.
pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String> {
    let value = serde_json::to_value(value).map_err(|e| Error::InvalidConfig(format!("serialize: {e}")))?;
    let mut out = serde_json::to_string_pretty(&value).map_err(|e| Error::InvalidConfig(format!("serialize: {e}")))?;
    out.push('\n');
    Ok(out)
}

pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}
