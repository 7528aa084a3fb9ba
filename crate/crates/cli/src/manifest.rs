use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};
use walkdir::WalkDir;

use crate::CliError;

pub const MANIFEST: &str = "run.manifest";

/// Rewrites `run.manifest` at the output root: one `path<TAB>bytes<TAB>sha256`
/// line per file, paths relative and sorted.
pub fn write_manifest(root: &Path) -> Result<usize, CliError> {
    let io = |e: std::io::Error| CliError::Domain(format!("{}: {e}", root.display()));
    let mut lines = Vec::new();
    for entry in WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| CliError::Domain(e.to_string()))?;
        if !entry.file_type().is_file() {
            continue;
        }
        let rel = entry.path().strip_prefix(root).expect("walk stays under root");
        if rel == Path::new(MANIFEST) {
            continue;
        }
        let bytes = fs::read(entry.path()).map_err(io)?;
        let rel = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
        lines.push(format!("{rel}\t{}\t{}\n", bytes.len(), hex::encode(Sha256::digest(&bytes))));
    }
    fs::write(root.join(MANIFEST), lines.concat()).map_err(io)?;
    Ok(lines.len())
}
