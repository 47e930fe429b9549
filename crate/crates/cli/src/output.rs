//! CSV and JSON artifacts. Floats carry 17 significant digits.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliError;

pub fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

pub struct OutDir(PathBuf);

impl OutDir {
    pub fn create(path: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(path).map_err(|e| CliError::io(path, e))?;
        Ok(Self(path.to_path_buf()))
    }

    pub fn csv<I>(&self, name: &str, header: &[String], rows: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = Vec<f64>>,
    {
        let path = self.0.join(name);
        let mut w = csv::Writer::from_path(&path).map_err(|e| CliError::io(&path, e))?;
        w.write_record(header).map_err(|e| CliError::io(&path, e))?;
        for row in rows {
            w.write_record(row.into_iter().map(fmt)).map_err(|e| CliError::io(&path, e))?;
        }
        w.flush().map_err(|e| CliError::io(&path, e))
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), CliError> {
        let path = self.0.join(name);
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::io(&path, e))?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))
    }
}

pub fn header(first: &str, rest: impl IntoIterator<Item = String>) -> Vec<String> {
    std::iter::once(first.to_string()).chain(rest).collect()
}
