//! Byte-stable JSON: keys sorted, two-space indent, LF endings.

use serde::Serialize;

use crate::error::{ForgeError, Result};

fn value<T: Serialize>(v: &T) -> Result<serde_json::Value> {
    serde_json::to_value(v).map_err(|e| ForgeError::InvalidInput(e.to_string()))
}

/// Pretty document terminated by a newline.
pub fn to_string<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&value(v)?)
        .map_err(|e| ForgeError::InvalidInput(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// One compact line, no trailing newline.
pub fn to_line<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string(&value(v)?).map_err(|e| ForgeError::InvalidInput(e.to_string()))
}

/// JSON lines, each terminated by a newline.
pub fn to_lines<'a, T: Serialize + 'a>(items: impl IntoIterator<Item = &'a T>) -> Result<String> {
    let mut out = String::new();
    for item in items {
        out.push_str(&to_line(item)?);
        out.push('\n');
    }
    Ok(out)
}
