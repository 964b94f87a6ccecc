//! Output assembly: comment header, notes, CSV body.

use crate::config::HEADER_TAG;
use crate::error::CliError;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

pub struct Table {
    w: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Result<Self, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(columns)?;
        Ok(Self { w })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.w.write_record(fields)?;
        Ok(())
    }

    pub fn into_bytes(self) -> Result<Vec<u8>, CliError> {
        self.w.into_inner().map_err(|e| CliError::Io(e.into_error()))
    }
}

/// The finished product of a command.
pub struct Report {
    pub notes: Vec<String>,
    pub body: Vec<u8>,
}

pub fn render(command: &str, resolved: &BTreeMap<String, String>, report: &Report) -> Vec<u8> {
    let mut out = Vec::new();
    writeln!(out, "{HEADER_TAG} {}", env!("CARGO_PKG_VERSION")).unwrap();
    writeln!(out, "# command = {command}").unwrap();
    for (k, v) in resolved {
        writeln!(out, "# {k} = {v}").unwrap();
    }
    for n in &report.notes {
        writeln!(out, "# note: {n}").unwrap();
    }
    out.extend_from_slice(&report.body);
    out
}

pub fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, bytes)?,
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(bytes)?;
            lock.flush()?;
        }
    }
    Ok(())
}

/// Shortest decimal form that reads back to the same `f64`.
pub fn num(x: f64) -> String {
    x.to_string()
}
