use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("cannot write {path}: {source}")]
    IoFailure {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Header plus string rows, emitted as RFC 4180 CSV.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<I: IntoIterator<Item = S>, S: Into<String>>(header: I) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push<I: IntoIterator<Item = S>, S: Into<String>>(&mut self, row: I) {
        self.rows.push(row.into_iter().map(Into::into).collect());
    }

    pub fn to_csv(&self) -> Result<String, ReportError> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| ReportError::Csv(e.into_error().into()))?;
        Ok(String::from_utf8(bytes).expect("csv of strings is utf-8"))
    }
}

fn write(path: PathBuf, data: &[u8]) -> Result<PathBuf, ReportError> {
    fs::write(&path, data).map_err(|source| ReportError::IoFailure {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

/// Write `<stem>.csv` and `<stem>.json` under `dir`.
pub fn emit_report<T: Serialize>(
    dir: &Path,
    stem: &str,
    table: &Table,
    value: &T,
) -> Result<Vec<PathBuf>, ReportError> {
    fs::create_dir_all(dir).map_err(|source| ReportError::IoFailure {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut json = serde_json::to_vec_pretty(value)?;
    json.push(b'\n');
    Ok(vec![
        write(dir.join(format!("{stem}.csv")), table.to_csv()?.as_bytes())?,
        write(dir.join(format!("{stem}.json")), &json)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quoting() {
        let mut t = Table::new(["a", "b"]);
        t.push(["x,y", "say \"hi\""]);
        assert_eq!(t.to_csv().unwrap(), "a,b\n\"x,y\",\"say \"\"hi\"\"\"\n");
    }
}
