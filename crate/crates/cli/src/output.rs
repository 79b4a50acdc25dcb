//! Deterministic artifact writers: a `#` header block, then CSV rows with
//! reals at 17 significant digits; JSON carries the header as an object.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use floquet_core::spectrum::TruncationWindow;

use crate::error::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize)]
pub struct Header {
    pub command: String,
    pub version: String,
    pub config_sha256: String,
    pub seed: Option<u64>,
    pub window: Option<(u32, u32)>,
}

impl Header {
    pub fn new(command: &str, config_text: &str, seed: Option<u64>, window: Option<TruncationWindow>) -> Self {
        Self {
            command: command.into(),
            version: VERSION.into(),
            config_sha256: hex::encode(Sha256::digest(config_text.as_bytes())),
            seed,
            window: window.map(|w| (w.n1_max, w.n2_max)),
        }
    }

    fn comment_block(&self) -> String {
        let seed = self.seed.map_or("none".to_string(), |s| s.to_string());
        let window = self.window.map_or("none".to_string(), |(a, b)| format!("{a}x{b}"));
        format!(
            "# floquet {} {}\n# config-sha256 {}\n# seed {seed}\n# window {window}\n",
            self.command, self.version, self.config_sha256
        )
    }
}

pub fn real(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV text: header block, column line, rows.
pub fn csv(header: &Header, columns: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = header.comment_block();
    out.push_str(&columns.join(","));
    out.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), columns.len());
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

/// Pretty JSON of `body` with a `header` object added alongside its fields.
pub fn json(header: &Header, body: &impl Serialize) -> Result<String, CliError> {
    let mut map = serde_json::Map::new();
    map.insert("header".into(), serde_json::to_value(header)?);
    match serde_json::to_value(body)? {
        serde_json::Value::Object(fields) => map.extend(fields),
        other => {
            map.insert("body".into(), other);
        }
    }
    let mut s = serde_json::to_string_pretty(&serde_json::Value::Object(map))?;
    s.push('\n');
    Ok(s)
}

pub fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(path)
}
