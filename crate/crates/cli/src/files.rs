//! File plumbing: atomic writes and world loading.

use crate::error::CliError;
use construal::params::ModelConfig;
use construal::worlds::{self, World};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Writes `bytes` to a temporary file beside `path` and renames it into
/// place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| CliError::io(&dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn load_world(path: &Path) -> Result<World, CliError> {
    worlds::parse_world(&read(path)?).map_err(|e| CliError::Domain(format!("invalid world {}: {e}", path.display())))
}

/// World id derived from the file name.
pub fn world_id(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "world".into())
}

/// Every `*.json` world in `dir`, sorted by file name.
pub fn load_corpus(dir: &Path) -> Result<Vec<(String, World)>, CliError> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let p = entry.map_err(|e| CliError::io(dir, e))?.path();
        if p.extension().is_some_and(|x| x == "json") {
            paths.push(p);
        }
    }
    paths.sort();
    paths.iter().map(|p| Ok((world_id(p), load_world(p)?))).collect()
}

pub fn load_config(path: Option<&Path>) -> Result<ModelConfig, CliError> {
    match path {
        None => Ok(ModelConfig::default()),
        Some(p) => ModelConfig::parse(&read_text(p)?).map_err(|e| CliError::Domain(format!("{}: {e}", p.display()))),
    }
}

pub fn csv_bytes<F>(fill: F) -> Result<Vec<u8>, CliError>
where
    F: FnOnce(&mut csv::Writer<&mut Vec<u8>>) -> csv::Result<()>,
{
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        fill(&mut w).map_err(|e| CliError::Io(e.to_string()))?;
        w.flush().map_err(|e| CliError::Io(e.to_string()))?;
    }
    Ok(buf)
}
