//! Output directory handling and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use moralnet::data_io::{write_report, Report, ReportFormat};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliResult;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Serialize)]
struct FileDigest {
    name: String,
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a, C: Serialize> {
    tool: &'static str,
    version: &'static str,
    subcommand: &'a str,
    seed: u64,
    config: &'a C,
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
    /// Files written but not covered by the determinism guarantee.
    logs: Vec<String>,
}

pub fn sha256_file(path: &Path) -> anyhow::Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Collects the files a subcommand reads and writes, then records them in
/// `manifest.json`.
pub struct RunOutput {
    dir: PathBuf,
    inputs: Vec<(String, PathBuf)>,
    outputs: Vec<String>,
    logs: Vec<String>,
}

impl RunOutput {
    pub fn create(dir: &Path) -> CliResult<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(Self { dir: dir.to_path_buf(), inputs: Vec::new(), outputs: Vec::new(), logs: Vec::new() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn input(&mut self, flag: &str, path: &Path) {
        self.inputs.push((flag.to_string(), path.to_path_buf()));
    }

    pub fn input_opt(&mut self, flag: &str, path: Option<&Path>) {
        if let Some(p) = path {
            self.input(flag, p);
        }
    }

    /// Registers a file the caller wrote itself.
    pub fn produced(&mut self, name: &str) -> PathBuf {
        self.outputs.push(name.to_string());
        self.path(name)
    }

    pub fn log_file(&mut self, name: &str) -> PathBuf {
        self.logs.push(name.to_string());
        self.path(name)
    }

    pub fn report(&mut self, name: &str, report: &Report) -> CliResult<()> {
        let path = self.produced(name);
        write_report(report, &path, ReportFormat::Csv).with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let path = self.produced(name);
        write_json(&path, value)?;
        Ok(())
    }

    pub fn finish<C: Serialize>(self, subcommand: &str, seed: u64, config: &C) -> CliResult<()> {
        let digest = |name: String, path: &Path| -> anyhow::Result<FileDigest> {
            Ok(FileDigest { name, path: path.display().to_string(), sha256: sha256_file(path)? })
        };
        let inputs = self.inputs.iter().map(|(flag, p)| digest(flag.clone(), p)).collect::<anyhow::Result<_>>()?;
        let outputs =
            self.outputs.iter().map(|name| digest(name.clone(), &self.dir.join(name))).collect::<anyhow::Result<_>>()?;
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            subcommand,
            seed,
            config,
            inputs,
            outputs,
            logs: self.logs,
        };
        write_json(&self.dir.join(MANIFEST_FILE), &manifest)?;
        Ok(())
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
