use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;

use super::config::ExperimentConfig;

/// A CSV file to be written into the output directory.
#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    body: Vec<u8>,
    rows: usize,
}

impl Table {
    pub fn new(name: impl Into<String>, header: &[&str]) -> Self {
        let mut t = Self { name: name.into(), body: Vec::new(), rows: 0 };
        t.write_row(header.iter().map(|s| s.to_string()));
        t.rows = 0;
        t
    }

    /// A table whose CSV text was produced elsewhere (header included).
    pub fn raw(name: impl Into<String>, body: Vec<u8>) -> Self {
        let rows = body.iter().filter(|&&b| b == b'\n').count().saturating_sub(1);
        Self { name: name.into(), body, rows }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.write_row(row.into_iter());
        self.rows += 1;
    }

    fn write_row(&mut self, cells: impl Iterator<Item = String>) {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(cells).expect("writing to memory");
        self.body.extend(w.into_inner().expect("writing to memory"));
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn bytes(&self) -> &[u8] {
        &self.body
    }
}

#[derive(Serialize)]
struct FileEntry<'a> {
    name: &'a str,
    rows: usize,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    run_id: &'a str,
    config_sha256: &'a str,
    version: &'a str,
    kind: &'a str,
    seed: u64,
    config: &'a ExperimentConfig,
    files: Vec<FileEntry<'a>>,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Hash of the configuration with its output directory removed.
pub fn config_hash(config: &ExperimentConfig) -> Result<String> {
    let mut c = config.clone();
    c.output = None;
    Ok(hex(&Sha256::digest(serde_json::to_vec(&c)?)))
}

/// Writes the tables and `manifest.json`; returns the run id and the file
/// names. The run id is derived from the configuration and the crate version
/// only, so reruns reproduce it.
pub fn write_manifest(config: &ExperimentConfig, out: &Path, tables: &[Table]) -> Result<(String, Vec<PathBuf>)> {
    let version = env!("CARGO_PKG_VERSION");
    let config_sha256 = config_hash(config)?;
    let run_id = hex(&Sha256::digest(format!("{version}:{config_sha256}")))[..16].to_string();
    let mut files = Vec::new();
    let mut entries = Vec::new();
    for t in tables {
        std::fs::write(out.join(&t.name), t.bytes())?;
        files.push(PathBuf::from(&t.name));
        entries.push(FileEntry { name: &t.name, rows: t.rows(), sha256: hex(&Sha256::digest(t.bytes())) });
    }
    let mut c = config.clone();
    c.output = None;
    let manifest = Manifest {
        run_id: &run_id,
        config_sha256: &config_sha256,
        version,
        kind: config.kind.name(),
        seed: config.seed,
        config: &c,
        files: entries,
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    std::fs::write(out.join("manifest.json"), text)?;
    files.push(PathBuf::from("manifest.json"));
    Ok((run_id, files))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_quotes_and_counts() {
        let mut t = Table::new("t.csv", &["a", "b"]);
        t.push(vec!["x,y".into(), "1".into()]);
        assert_eq!(std::str::from_utf8(t.bytes()).unwrap(), "a,b\n\"x,y\",1\n");
        assert_eq!(t.rows(), 1);
        assert_eq!(Table::raw("r.csv", b"a\n1\n2\n".to_vec()).rows(), 2);
    }

    #[test]
    fn hash_ignores_output_directory() {
        use super::super::config::ExperimentKind;
        let a = ExperimentConfig::preset(ExperimentKind::Heat, 1);
        let mut b = a.clone();
        b.output = Some("elsewhere".into());
        assert_eq!(config_hash(&a).unwrap(), config_hash(&b).unwrap());
        b.seed = 2;
        assert_ne!(config_hash(&a).unwrap(), config_hash(&b).unwrap());
    }
}
