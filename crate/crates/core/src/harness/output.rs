use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::config::OutputFormat;
use super::run::{ResultRow, SummaryRow};
use crate::error::{Error, Result};

/// A record type with a fixed column order.
pub trait Record: Serialize + DeserializeOwned {
    fn header() -> &'static [&'static str];
}

impl Record for ResultRow {
    fn header() -> &'static [&'static str] {
        &ResultRow::HEADER
    }
}

impl Record for SummaryRow {
    fn header() -> &'static [&'static str] {
        &SummaryRow::HEADER
    }
}

fn format_error(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Format { path: path.into(), message: e.to_string() }
}

/// Writes records as CSV (header always present) or as a JSON array.
pub fn write_records<T: Record, W: Write>(records: &[T], format: OutputFormat, out: W, path: &Path) -> Result<()> {
    match format {
        OutputFormat::Csv => {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
            w.write_record(T::header()).map_err(|e| format_error(path, e))?;
            for r in records {
                w.serialize(r).map_err(|e| format_error(path, e))?;
            }
            w.flush().map_err(|source| Error::Io { path: path.into(), source })
        }
        OutputFormat::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, records).map_err(|e| format_error(path, e))?;
            writeln!(out).map_err(|source| Error::Io { path: path.into(), source })
        }
    }
}

/// Writes records to `path`.
pub fn emit<T: Record>(records: &[T], format: OutputFormat, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|source| Error::Io { path: path.into(), source })?;
    let mut out = BufWriter::new(file);
    write_records(records, format, &mut out, path)?;
    out.flush().map_err(|source| Error::Io { path: path.into(), source })
}

/// Reads back records written by [`emit`].
pub fn read_records<T: Record>(format: OutputFormat, path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|source| Error::Io { path: path.into(), source })?;
    match format {
        OutputFormat::Csv => csv::Reader::from_reader(file)
            .deserialize()
            .collect::<std::result::Result<Vec<T>, _>>()
            .map_err(|e| format_error(path, e)),
        OutputFormat::Json => serde_json::from_reader(file).map_err(|e| format_error(path, e)),
    }
}
