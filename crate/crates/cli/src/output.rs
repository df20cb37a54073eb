//! Plot-ready text outputs. Each file opens with one `#` line carrying the
//! configuration hash; floats are written with 17 significant digits.

use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

/// `{:.16e}`, which round-trips every finite `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub struct Csv {
    text: String,
    columns: usize,
}

impl Csv {
    pub fn new(kind: &str, config_hash: &str, header: &[&str]) -> Self {
        let mut text = String::new();
        writeln!(text, "# thinfilm {kind} config_sha256={config_hash}").unwrap();
        writeln!(text, "{}", header.join(",")).unwrap();
        Csv {
            text,
            columns: header.len(),
        }
    }

    pub fn row(&mut self, cells: &[String]) {
        debug_assert_eq!(cells.len(), self.columns);
        writeln!(self.text, "{}", cells.join(",")).unwrap();
    }

    pub fn floats(&mut self, values: &[f64]) {
        let cells: Vec<String> = values.iter().map(|v| fmt_f64(*v)).collect();
        self.row(&cells);
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        std::fs::write(path, &self.text)
    }
}

/// `key = value` lines grouped under `[section]` headings.
pub struct Report {
    text: String,
}

impl Report {
    pub fn new(config_hash: &str) -> Self {
        Report {
            text: format!("# thinfilm report config_sha256={config_hash}\n"),
        }
    }

    pub fn section(&mut self, name: &str) {
        writeln!(self.text, "\n[{name}]").unwrap();
    }

    pub fn line(&mut self, key: &str, value: impl std::fmt::Display) {
        writeln!(self.text, "{key} = {value}").unwrap();
    }

    pub fn float(&mut self, key: &str, value: f64) {
        self.line(key, fmt_f64(value));
    }

    /// A value with the formula it came from.
    pub fn derived(&mut self, key: &str, value: f64, formula: &str) {
        writeln!(self.text, "{key} = {}  # {formula}", fmt_f64(value)).unwrap();
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        std::fs::write(path, &self.text)
    }
}

/// `profile_{t}.csv`, with `t` in shortest round-trip form.
pub fn profile_path(dir: &Path, t: f64) -> PathBuf {
    dir.join(format!("profile_{t}.csv"))
}
