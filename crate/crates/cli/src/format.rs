//! Number and table formatting shared by every output file.
//!
//! Floats are written in shortest round-trip form (the `ryu` algorithm that
//! `serde_json` uses), so parsing a written value gives back the exact bits.
//! Exponents appear only outside `[1e-5, 1e16)`, as `1e-7` or `6.02214076e+23`.

use serde::Serialize;

use crate::Failure;

/// Shortest round-trip decimal form of `x`; non-finite values become
/// `NaN`, `inf` and `-inf`.
pub fn float(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        serde_json::to_string(&x).expect("finite floats always serialize")
    }
}

/// Comma-separated table with a header row and `\n` line endings.
pub struct Csv {
    text: String,
    columns: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self {
            text: header.join(",") + "\n",
            columns: header.len(),
        }
    }

    pub fn row(&mut self, cells: &[String]) {
        assert_eq!(cells.len(), self.columns, "row width differs from the header");
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

/// Pretty JSON with a trailing newline.
pub fn json<T: Serialize>(value: &T) -> Result<String, Failure> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| Failure::Other(format!("cannot serialize output: {e}")))
}
