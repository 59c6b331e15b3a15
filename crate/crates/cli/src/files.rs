//! File helpers: atomic artifact writes and strategy loading.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use ipd_core::fsm::{parse_fsm, FsmSpec};
use ipd_core::{FsmError, Registry, StrategyFactory};
use tempfile::NamedTempFile;

use crate::CliError;

/// Output files are buffered in memory and only land on disk once the
/// command has succeeded.
#[derive(Default)]
pub struct Artifacts {
    pending: Vec<(PathBuf, Vec<u8>)>,
}

impl Artifacts {
    pub fn add(&mut self, path: impl Into<PathBuf>, bytes: Vec<u8>) {
        self.pending.push((path.into(), bytes));
    }

    /// Writes each file to a temporary sibling, then renames it into place.
    pub fn commit(self) -> Result<Vec<PathBuf>, CliError> {
        let mut staged = Vec::with_capacity(self.pending.len());
        for (path, bytes) in self.pending {
            let dir = match path.parent() {
                Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
                _ => PathBuf::from("."),
            };
            let mut tmp = NamedTempFile::new_in(&dir)
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            tmp.write_all(&bytes)
                .and_then(|_| tmp.flush())
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            staged.push((path, tmp));
        }
        let mut written = Vec::with_capacity(staged.len());
        for (path, tmp) in staged {
            tmp.persist(&path)
                .map_err(|e| CliError::Data(format!("{}: {}", path.display(), e.error)))?;
            written.push(path);
        }
        Ok(written)
    }
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// Parses a machine file, turning validation failures into a listing of
/// every violation.
pub fn read_fsm_file(path: &Path) -> Result<FsmSpec, CliError> {
    let text = read_text(path)?;
    parse_fsm(&text).map_err(|e| fsm_error(path, e))
}

fn fsm_error(path: &Path, e: FsmError) -> CliError {
    match e {
        FsmError::Invalid(violations) => {
            let mut msg = format!("{}: invalid machine", path.display());
            for v in violations {
                msg.push_str(&format!("\n  {v}"));
            }
            CliError::Data(msg)
        }
        FsmError::Syntax { line, message } => {
            CliError::Data(format!("{}:{line}: {message}", path.display()))
        }
        other => CliError::Data(format!("{}: {other}", path.display())),
    }
}

/// A machine given either as a file path or as a built-in name. Classic
/// strategies resolve to their machine encodings.
pub fn load_machine(arg: &str, registry: &Registry) -> Result<FsmSpec, CliError> {
    let path = Path::new(arg);
    if path.exists() {
        return read_fsm_file(path);
    }
    match registry.get(arg) {
        Ok(StrategyFactory::Fsm(spec)) => Ok((**spec).clone()),
        Ok(StrategyFactory::Behavioral(b)) => Ok(b.as_fsm()),
        Ok(StrategyFactory::Random { .. }) => Err(CliError::Data(format!(
            "{arg}: a stochastic strategy has no machine form"
        ))),
        Err(e) => Err(CliError::Data(format!("{arg}: no such file, and {e}"))),
    }
}

/// Resolves a comma-separated roster. `@path` entries load machine files
/// and register them under their own names.
pub fn resolve_roster(spec: &str, registry: &mut Registry) -> Result<Vec<String>, CliError> {
    let mut names = Vec::new();
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if let Some(file) = item.strip_prefix('@') {
            let machine = read_fsm_file(Path::new(file))?;
            let id = registry
                .register_fsm(machine)
                .map_err(|e| CliError::Data(format!("{file}: {e}")))?;
            names.push(id.name);
        } else {
            let id = registry
                .resolve(item)
                .map_err(|e| CliError::Data(e.to_string()))?;
            names.push(id.name);
        }
    }
    Ok(names)
}
