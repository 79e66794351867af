//! Line-oriented structured reports: machine-readable `key: value` text
//! that stays pleasant to read, printed to stdout and optionally mirrored
//! to a file.

use std::fmt::Display;
use std::path::Path;

use dlsolve::Result;

pub struct Report {
    text: String,
}

impl Report {
    pub fn new(kind: &str) -> Report {
        Report { text: format!("report: {kind}\n") }
    }

    pub fn kv(&mut self, key: &str, value: impl Display) -> &mut Self {
        self.text.push_str(&format!("{key}: {value}\n"));
        self
    }

    /// A preformatted record line, for repeated entries like curve points.
    pub fn line(&mut self, line: impl Display) -> &mut Self {
        self.text.push_str(&format!("{line}\n"));
        self
    }

    pub fn blank(&mut self) -> &mut Self {
        self.text.push('\n');
        self
    }

    /// Appends the human summary, prints everything, and mirrors the full
    /// report to `out` when given.
    pub fn finish(mut self, summary: impl Display, out: Option<&Path>) -> Result<()> {
        self.text.push_str(&format!("summary: {summary}\n"));
        print!("{}", self.text);
        if let Some(path) = out {
            std::fs::write(path, &self.text)?;
        }
        Ok(())
    }
}
