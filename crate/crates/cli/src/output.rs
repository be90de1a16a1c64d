//! Artifact writing. Every file is written to a temporary sibling and renamed
//! into place, so an interrupted run leaves no partial outputs behind.

use std::fmt::Display;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use tempfile::NamedTempFile;

use crate::config::ExperimentConfig;
use crate::failure::Failure;

pub struct OutputDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, Failure> {
        std::fs::create_dir_all(root).map_err(|e| Failure::io(&root.display().to_string(), e))?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), Failure> {
        let mut file = self.temp(name)?;
        serde_json::to_writer_pretty(&mut file, value).map_err(|e| Failure::io(name, e))?;
        file.write_all(b"\n").map_err(|e| Failure::io(name, e))?;
        self.commit(file, name)
    }

    pub fn write_csv(&mut self, name: &str, schema: &str, table: &Table) -> Result<(), Failure> {
        let mut csv = self.csv(name, schema, &table.header)?;
        for row in &table.rows {
            csv.row(row)?;
        }
        csv.finish(self)
    }

    /// Opens a CSV for row-by-row writing; call [`CsvStream::finish`] to commit it.
    pub fn csv(&self, name: &str, schema: &str, header: &[&str]) -> Result<CsvStream, Failure> {
        let mut out = BufWriter::new(self.temp(name)?);
        writeln!(out, "# schema: {schema}").map_err(|e| Failure::io(name, e))?;
        writeln!(out, "{}", header.join(",")).map_err(|e| Failure::io(name, e))?;
        Ok(CsvStream {
            name: name.to_string(),
            out,
            error: None,
        })
    }

    fn temp(&self, name: &str) -> Result<NamedTempFile, Failure> {
        tempfile::Builder::new()
            .prefix(&format!(".{name}."))
            .suffix(".tmp")
            .tempfile_in(&self.root)
            .map_err(|e| Failure::io(name, e))
    }

    fn commit(&mut self, file: NamedTempFile, name: &str) -> Result<(), Failure> {
        file.as_file().sync_all().map_err(|e| Failure::io(name, e))?;
        file.persist(self.root.join(name))
            .map_err(|e| Failure::io(name, e.error))?;
        self.written.push(name.to_string());
        Ok(())
    }
}

pub struct CsvStream {
    name: String,
    out: BufWriter<NamedTempFile>,
    error: Option<std::io::Error>,
}

impl CsvStream {
    pub fn row(&mut self, fields: &[String]) -> Result<(), Failure> {
        writeln!(self.out, "{}", fields.join(",")).map_err(|e| Failure::io(&self.name, e))
    }

    /// Infallible variant for callbacks; the first error is reported by `finish`.
    pub fn push(&mut self, fields: std::fmt::Arguments<'_>) {
        if self.error.is_none() {
            if let Err(e) = writeln!(self.out, "{fields}") {
                self.error = Some(e);
            }
        }
    }

    pub fn finish(self, dir: &mut OutputDir) -> Result<(), Failure> {
        if let Some(e) = self.error {
            return Err(Failure::io(&self.name, e));
        }
        let file = self.out.into_inner().map_err(|e| Failure::io(&self.name, e.error()))?;
        dir.commit(file, &self.name)
    }
}

/// An in-memory CSV table.
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: &[&dyn Display]) {
        self.rows.push(row.iter().map(|x| x.to_string()).collect());
    }
}

/// Stream indices `first..=last` consumed by one estimator.
#[derive(Debug, Clone, Serialize)]
pub struct StreamRange {
    pub estimator: &'static str,
    pub first: u64,
    pub last: u64,
}

#[derive(Serialize)]
pub struct RunManifest<'a> {
    pub schema: &'static str,
    pub version: &'static str,
    pub started_at: String,
    pub duration_secs: f64,
    pub seed: u64,
    pub workers: usize,
    pub block_size: u64,
    pub streams: Vec<StreamRange>,
    pub artifacts: Vec<String>,
    pub config: &'a ExperimentConfig,
}

impl RunManifest<'_> {
    pub const SCHEMA: &'static str = "manifest/1";
    pub const FILE: &'static str = "manifest.json";
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_schema_line_and_header() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(dir.path()).unwrap();
        let mut t = Table::new(&["n", "epsilon"]);
        t.push(&[&100, &0.3]);
        out.write_csv("t.csv", "cap/1", &t).unwrap();
        let text = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
        assert_eq!(text, "# schema: cap/1\nn,epsilon\n100,0.3\n");
        assert_eq!(out.written(), ["t.csv"]);
    }

    #[test]
    fn unfinished_stream_leaves_no_file() {
        let dir = tempfile::tempdir().unwrap();
        let out = OutputDir::create(dir.path()).unwrap();
        let mut csv = out.csv("d.csv", "x/1", &["a"]).unwrap();
        csv.push(format_args!("{}", 1));
        drop(csv);
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
    }
}
