//! Number formatting and provenance headers shared by every CSV artifact.

use std::fmt;

/// Shortest round-trip scientific notation, e.g. `2.5e-3`.
pub fn fmt_num(x: f64) -> String {
    format!("{x:e}")
}

/// First line of every artifact: `# key=value key=value ...`.
#[derive(Debug, Clone, Default)]
pub struct Provenance {
    entries: Vec<(String, String)>,
}

impl Provenance {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: &str, value: impl fmt::Display) -> Self {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    pub fn push(&mut self, key: &str, value: impl fmt::Display) {
        self.entries.push((key.to_string(), value.to_string()));
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("#")?;
        for (k, v) in &self.entries {
            write!(f, " {k}={v}")?;
        }
        Ok(())
    }
}

/// `key=value` lines.
pub fn key_value_block(entries: &[(String, String)]) -> String {
    entries.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
}
