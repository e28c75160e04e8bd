//! CSV and JSON artifacts. Every CSV starts with comment lines naming the
//! command and the SHA-256 of the resolved configuration.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

/// Shortest round-trip text; scientific notation for very small or large values.
pub fn num(x: f64) -> String {
    if x != 0.0 && x.is_finite() && (x.abs() < 1e-4 || x.abs() >= 1e15) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Writes artifacts into one directory, stamping each CSV with `hash`.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub dir: PathBuf,
    pub command: String,
    pub hash: String,
}

impl Artifacts {
    pub fn new(dir: &Path, command: &str, hash: &str) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            command: command.to_string(),
            hash: hash.to_string(),
        })
    }

    pub fn csv(&self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<PathBuf> {
        let mut text = format!("# dqa {}\n# config_sha256: {}\n", self.command, self.hash);
        text.push_str(&header.join(","));
        text.push('\n');
        for row in rows {
            debug_assert_eq!(row.len(), header.len());
            text.push_str(&row.join(","));
            text.push('\n');
        }
        self.write(name, &text)
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, &text)
    }

    pub fn write(&self, name: &str, text: &str) -> Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

/// Header and rows of a CSV written by [`Artifacts::csv`]; comment lines are skipped.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    let header = lines
        .next()
        .with_context(|| format!("{} has no header row", path.display()))?
        .split(',')
        .map(str::to_string)
        .collect::<Vec<_>>();
    let rows = lines
        .map(|l| l.split(',').map(str::to_string).collect::<Vec<_>>())
        .collect::<Vec<_>>();
    if let Some(bad) = rows.iter().position(|r| r.len() != header.len()) {
        anyhow::bail!("{}: row {} has the wrong number of fields", path.display(), bad + 1);
    }
    Ok((header, rows))
}
