//! Result files: every file carries the configuration hash, seed and grid size.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use semiflow::ExperimentConfig;
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub command: &'static str,
    pub schema_version: u32,
    pub config_hash: String,
    pub seed: u64,
    pub nodes: usize,
}

impl Meta {
    /// The hash covers everything except the output directory.
    pub fn new(command: &'static str, cfg: &ExperimentConfig) -> Meta {
        let mut hashed = cfg.clone();
        hashed.output_dir = PathBuf::new();
        let digest = Sha256::digest(hashed.canonical_json().as_bytes());
        Meta {
            command,
            schema_version: cfg.schema_version,
            config_hash: digest.iter().map(|b| format!("{b:02x}")).collect(),
            seed: cfg.seed,
            nodes: cfg.nodes,
        }
    }
}

pub struct Sink {
    dir: PathBuf,
    meta: Meta,
    written: Vec<PathBuf>,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    meta: &'a Meta,
    result: &'a T,
}

impl Sink {
    pub fn new(dir: &Path, meta: Meta) -> std::io::Result<Sink> {
        fs::create_dir_all(dir)?;
        Ok(Sink {
            dir: dir.to_path_buf(),
            meta,
            written: Vec::new(),
        })
    }

    pub fn json<T: Serialize>(&mut self, name: &str, result: &T) -> std::io::Result<()> {
        let body = serde_json::to_string_pretty(&Envelope { meta: &self.meta, result })
            .map_err(std::io::Error::other)?;
        self.write(name, (body + "\n").as_bytes())
    }

    /// CSV preceded by `# key: value` lines.
    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> std::io::Result<()> {
        let mut out = Vec::new();
        let m = &self.meta;
        writeln!(out, "# command: {}", m.command)?;
        writeln!(out, "# config_hash: {}", m.config_hash)?;
        writeln!(out, "# seed: {}", m.seed)?;
        writeln!(out, "# nodes: {}", m.nodes)?;
        writeln!(out, "{}", header.join(","))?;
        for row in rows {
            writeln!(out, "{}", row.join(","))?;
        }
        self.write(name, &out)
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> std::io::Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes)?;
        self.written.push(path);
        Ok(())
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}
